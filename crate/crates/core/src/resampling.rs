//! Re-sampled NFD estimation.
//!
//! Random detector subsets covering a fixed share of the zone's monitored
//! length are drawn, a `(K, Q)` state is aggregated for every subset and
//! `(date, hour)`, and the pooled cloud is reduced to a binned upper
//! envelope: per density bin, the median of the largest `M` flows.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conflation::DetectorMatch;
use crate::error::{Error, Result};
use crate::ingest::MeasurementTable;
use crate::nfd::{aggregate, index_matches, CalibrationScalar, Contribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleParams {
    pub subsample_count: usize,
    pub length_fraction: f64,
    pub seed: u64,
    /// Density bin width, veh/lane-km.
    pub bin_width: f64,
    pub top_m: usize,
    pub min_bin_count: usize,
}

impl Default for ResampleParams {
    fn default() -> Self {
        Self {
            subsample_count: 200,
            length_fraction: 0.25,
            seed: 0,
            bin_width: 1.0,
            top_m: 100,
            min_bin_count: 10,
        }
    }
}

impl ResampleParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.subsample_count < 1 {
            return bad("subsample_count must be >= 1");
        }
        if !(self.length_fraction > 0.0 && self.length_fraction <= 1.0) {
            return bad("length_fraction must be in (0, 1]");
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return bad("bin_width must be > 0");
        }
        if self.top_m < 1 {
            return bad("top_m must be >= 1");
        }
        if self.min_bin_count < 1 {
            return bad("min_bin_count must be >= 1");
        }
        Ok(())
    }

    /// The naive single full-network estimate (`R = 1`, `f = 1`).
    pub fn full_network(&self) -> Self {
        Self {
            subsample_count: 1,
            length_fraction: 1.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDetector {
    pub detector_id: String,
    pub length_km: f64,
}

impl From<&DetectorMatch> for ZoneDetector {
    fn from(m: &DetectorMatch) -> Self {
        Self {
            detector_id: m.detector_id.clone(),
            length_km: m.length_km,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsample {
    pub index: usize,
    /// Sorted by id.
    pub detector_ids: Vec<String>,
    pub length_km: f64,
}

/// RNG for subsample `index`; a pure function of `(seed, index)`.
fn subsample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

/// Draws `count` subsets. Each is built by uniform sampling without
/// replacement until the cumulative length first reaches
/// `fraction · total length`.
pub fn draw_subsamples(detectors: &[ZoneDetector], count: usize, fraction: f64, seed: u64) -> Result<Vec<Subsample>> {
    if detectors.is_empty() {
        return Err(Error::NoData("zone has no detectors to sample".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter("length_fraction must be in (0, 1]".into()));
    }
    let mut pool: Vec<&ZoneDetector> = detectors.iter().collect();
    pool.sort_by(|a, b| a.detector_id.cmp(&b.detector_id));
    let total: f64 = pool.iter().map(|d| d.length_km).sum();
    let target = fraction * total;

    Ok((0..count)
        .map(|j| {
            let mut rng = subsample_rng(seed, j);
            let mut order: Vec<usize> = (0..pool.len()).collect();
            let mut taken = Vec::new();
            let mut length = 0.0;
            for k in 0..order.len() {
                if length >= target {
                    break;
                }
                let pick = rng.random_range(k..order.len());
                order.swap(k, pick);
                let d = pool[order[k]];
                length += d.length_km;
                taken.push(order[k]);
            }
            taken.sort_unstable();
            Subsample {
                index: j,
                detector_ids: taken.into_iter().map(|i| pool[i].detector_id.clone()).collect(),
                length_km: length,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub subsample: usize,
    pub date: NaiveDate,
    pub hour: u8,
    pub density: f64,
    pub flow: f64,
}

/// Aggregates every subset at every `(date, hour)` where at least one of its
/// detectors reports. Points are ordered by subsample, then slot.
pub fn pool_states(
    subsets: &[Subsample],
    table: &MeasurementTable,
    matches: &[DetectorMatch],
    s: CalibrationScalar,
) -> Result<Vec<CloudPoint>> {
    let index = index_matches(matches);

    let mut universe: Vec<&str> = subsets
        .iter()
        .flat_map(|sub| sub.detector_ids.iter().map(String::as_str))
        .collect();
    universe.sort_unstable();
    universe.dedup();
    for id in &universe {
        if !index.contains_key(id) {
            return Err(Error::InvalidParameter(format!("detector {id} has no match entry")));
        }
    }
    let position: HashMap<&str, usize> = universe.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    // Records come sorted by detector id, so each slot list is in position order.
    let slots: Vec<((NaiveDate, u8), Vec<(usize, Contribution)>)> = table
        .by_slot()
        .into_iter()
        .filter_map(|(slot, records)| {
            let present: Vec<(usize, Contribution)> = records
                .into_iter()
                .filter_map(|r| {
                    let pos = *position.get(r.detector_id.as_str())?;
                    Some((pos, Contribution::new(r, index[r.detector_id.as_str()], s)))
                })
                .collect();
            (!present.is_empty()).then_some((slot, present))
        })
        .collect();

    let per_subset: Vec<Vec<CloudPoint>> = subsets
        .par_iter()
        .map(|sub| {
            let mut member = vec![false; universe.len()];
            for id in &sub.detector_ids {
                member[position[id.as_str()]] = true;
            }
            slots
                .iter()
                .filter_map(|((date, hour), present)| {
                    let agg = aggregate(present.iter().filter(|(p, _)| member[*p]).map(|(_, c)| *c))?;
                    Some(CloudPoint {
                        subsample: sub.index,
                        date: *date,
                        hour: *hour,
                        density: agg.density,
                        flow: agg.flow,
                    })
                })
                .collect()
        })
        .collect();
    Ok(per_subset.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBin {
    pub k_center: f64,
    pub q_env: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub zone_id: String,
    pub period_label: String,
    pub params: ResampleParams,
    pub bins: Vec<EnvelopeBin>,
}

/// Number of top flows summarized in a bin holding `count` points.
pub fn top_set_size(top_m: usize, count: usize) -> usize {
    top_m.min((count / 4).max(1))
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Upper envelope of `(K, Q)` points. Bins with fewer than `min_bin_count`
/// points are dropped; the rest report the median of their top-`M_bin`
/// flows.
pub fn extract_envelope<I>(points: I, params: &ResampleParams, zone_id: &str, period_label: &str) -> Result<Envelope>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    params.validate()?;
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut seen = 0usize;
    for (k, q) in points {
        if !(k.is_finite() && q.is_finite()) {
            continue;
        }
        seen += 1;
        bins.entry((k / params.bin_width).floor() as i64).or_default().push(q);
    }
    if seen == 0 {
        return Err(Error::NoData("empty state cloud".into()));
    }

    let out: Vec<EnvelopeBin> = bins
        .into_iter()
        .filter(|(_, flows)| flows.len() >= params.min_bin_count)
        .map(|(idx, mut flows)| {
            flows.sort_unstable_by(|a, b| b.total_cmp(a));
            let m = top_set_size(params.top_m, flows.len());
            let mut top = flows[..m].to_vec();
            top.reverse();
            EnvelopeBin {
                k_center: (idx as f64 + 0.5) * params.bin_width,
                q_env: median_sorted(&top),
                count: flows.len(),
            }
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NoData(format!(
            "no density bin holds at least {} points",
            params.min_bin_count
        )));
    }
    Ok(Envelope {
        zone_id: zone_id.to_string(),
        period_label: period_label.to_string(),
        params: *params,
        bins: out,
    })
}

pub fn cloud_points(cloud: &[CloudPoint]) -> impl Iterator<Item = (f64, f64)> + '_ {
    cloud.iter().map(|p| (p.density, p.flow))
}

/// Writes the envelope as CSV preceded by `# key=value` metadata lines.
pub fn write_envelope<W: Write>(envelope: &Envelope, mut writer: W) -> Result<()> {
    let p = &envelope.params;
    let meta = format!(
        "# zone_id={}\n# period={}\n# subsample_count={}\n# length_fraction={}\n# seed={}\n# bin_width={}\n# top_m={}\n# min_bin_count={}\n",
        envelope.zone_id,
        envelope.period_label,
        p.subsample_count,
        p.length_fraction,
        p.seed,
        p.bin_width,
        p.top_m,
        p.min_bin_count
    );
    writer
        .write_all(meta.as_bytes())
        .map_err(|e| Error::io("<envelope writer>", e))?;
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["k_bin_center", "q_env", "count"])?;
    for b in &envelope.bins {
        wtr.write_record([b.k_center.to_string(), b.q_env.to_string(), b.count.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<envelope writer>", e))?;
    Ok(())
}

pub fn read_envelope<R: BufRead>(reader: R) -> Result<Envelope> {
    let mut meta: HashMap<String, String> = HashMap::new();
    let mut body = String::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<envelope reader>", e))?;
        match line.strip_prefix('#') {
            Some(kv) => {
                if let Some((k, v)) = kv.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    fn field<T: std::str::FromStr>(meta: &HashMap<String, String>, key: &str) -> Result<T> {
        meta.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("envelope metadata missing or invalid: {key}")))
    }
    let params = ResampleParams {
        subsample_count: field(&meta, "subsample_count")?,
        length_fraction: field(&meta, "length_fraction")?,
        seed: field(&meta, "seed")?,
        bin_width: field(&meta, "bin_width")?,
        top_m: field(&meta, "top_m")?,
        min_bin_count: field(&meta, "min_bin_count")?,
    };
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let bins = rdr
        .records()
        .map(|r| {
            let r = r?;
            let num = |i: usize| -> Result<f64> {
                r.get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("bad envelope row {r:?}")))
            };
            Ok(EnvelopeBin {
                k_center: num(0)?,
                q_env: num(1)?,
                count: num(2)? as usize,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Envelope {
        zone_id: field(&meta, "zone_id")?,
        period_label: field(&meta, "period")?,
        params,
        bins,
    })
}

pub fn write_cloud<W: Write>(cloud: &[CloudPoint], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["subsample", "date", "hour", "K", "Q"])?;
    for p in cloud {
        wtr.write_record([
            p.subsample.to_string(),
            p.date.format("%Y-%m-%d").to_string(),
            p.hour.to_string(),
            p.density.to_string(),
            p.flow.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<cloud writer>", e))?;
    Ok(())
}
