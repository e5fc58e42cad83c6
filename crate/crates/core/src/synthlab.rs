//! Synthetic studies with a known ground truth.
//!
//! A jittered street grid is laid out, detectors are placed on distinct
//! street segments, and hourly readings are drawn from triangular
//! fundamental diagrams. Every file is written in the same format the
//! pipeline ingests, alongside `ground_truth.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conflation::{detectors_geojson, zones_geojson, DetectorSegment, Zone, ZoneSet};
use crate::config::{CalibrationConfig, PeriodConfig, StudyConfig};
use crate::error::{Error, Result};
use crate::geo::{polyline_length_km, LonLat, Point, Projection};
use crate::ingest::{default_analysis_hours, write_measurements, MeasurementRecord, MeasurementTable};
use crate::metrics::NfdMetrics;
use crate::network::{road_network_geojson, RoadNetwork, RoadSegment};
use crate::nfd::{write_reference_speeds, ReferenceSpeed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFd")]
pub struct TriangularFD {
    pub v_f: f64,
    pub k_crit: f64,
    pub k_jam: f64,
}

#[derive(Deserialize)]
struct RawFd {
    v_f: f64,
    k_crit: f64,
    k_jam: f64,
}

impl TryFrom<RawFd> for TriangularFD {
    type Error = Error;

    fn try_from(r: RawFd) -> Result<Self> {
        TriangularFD::new(r.v_f, r.k_crit, r.k_jam)
    }
}

impl TriangularFD {
    pub fn new(v_f: f64, k_crit: f64, k_jam: f64) -> Result<Self> {
        if !(v_f.is_finite() && v_f > 0.0) {
            return Err(Error::InvalidParameter(format!("v_f must be > 0, got {v_f}")));
        }
        if !(k_crit > 0.0 && k_crit < k_jam && k_jam.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < k_crit < k_jam, got {k_crit} and {k_jam}"
            )));
        }
        Ok(Self { v_f, k_crit, k_jam })
    }

    pub fn q_max(&self) -> f64 {
        self.v_f * self.k_crit
    }

    pub fn eval(&self, k: f64) -> f64 {
        if k <= self.k_crit {
            self.v_f * k.max(0.0)
        } else if k <= self.k_jam {
            self.q_max() * (self.k_jam - k) / (self.k_jam - self.k_crit)
        } else {
            0.0
        }
    }
}

pub fn fd_eval(fd: &TriangularFD, k: f64) -> f64 {
    fd.eval(k)
}

pub fn ground_truth_metrics(fd: &TriangularFD, zone_id: &str, period_label: &str) -> NfdMetrics {
    NfdMetrics {
        zone_id: zone_id.to_string(),
        period_label: period_label.to_string(),
        capacity: fd.q_max(),
        critical_density: fd.k_crit,
        free_flow_speed: fd.v_f,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondPopulation {
    pub fd: TriangularFD,
    /// Share of detectors following `fd`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadClass {
    pub highway: String,
    pub lanes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Jitter {
    pub max_offset_m: f64,
    pub max_rotation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthScenario {
    pub period_label: String,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Nominal block size; each row and column gap is scaled by 0.75–1.25.
    pub block_m: f64,
    pub origin: LonLat,
    /// Drives grid spacing, detector placement and population assignment,
    /// so periods sharing it share their geometry.
    pub layout_seed: u64,
    pub detector_count: usize,
    pub fd: TriangularFD,
    pub second_population: Option<SecondPopulation>,
    /// Cycled over street lines.
    pub classes: Vec<RoadClass>,
    /// Mean density per analysis hour 5..=22, veh/lane-km.
    pub demand_profile: Vec<f64>,
    /// Relative sd of a lognormal density factor shared by every detector
    /// in a (day, hour) slot.
    pub density_spread: f64,
    /// Relative sd of an independent per detector-hour density factor.
    pub detector_spread: f64,
    /// Relative sd of multiplicative flow noise.
    pub measurement_noise: f64,
    pub s_true: f64,
    pub days: usize,
    /// First weekday; later days skip weekends.
    pub start_date: NaiveDate,
    pub seed: u64,
    pub jitter: Jitter,
    /// Adds a parallel twin of every street at this offset.
    pub distractor_offset_m: Option<f64>,
    /// Splits the grid into a west `Z1` and an east `Z2` zone.
    pub split_zones: bool,
    pub snapshot_date: Option<NaiveDate>,
}

pub fn default_demand_profile() -> Vec<f64> {
    vec![
        4.0, 8.0, 20.0, 45.0, 35.0, 18.0, 14.0, 15.0, 16.0, 14.0, 16.0, 22.0, 50.0, 40.0, 20.0, 12.0, 8.0, 6.0,
    ]
}

impl Default for SynthScenario {
    fn default() -> Self {
        Self {
            period_label: "synthetic".into(),
            grid_rows: 10,
            grid_cols: 10,
            block_m: 250.0,
            origin: LonLat::new(2.35, 48.85),
            layout_seed: 1,
            detector_count: 100,
            fd: TriangularFD {
                v_f: 50.0,
                k_crit: 16.0,
                k_jam: 160.0,
            },
            second_population: None,
            classes: vec![
                RoadClass { highway: "primary".into(), lanes: 3.0 },
                RoadClass { highway: "secondary".into(), lanes: 2.0 },
                RoadClass { highway: "tertiary".into(), lanes: 1.0 },
            ],
            demand_profile: default_demand_profile(),
            density_spread: 0.3,
            detector_spread: 0.0,
            measurement_noise: 0.05,
            s_true: 0.0055,
            days: 20,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date"),
            seed: 1,
            jitter: Jitter::default(),
            distractor_offset_m: None,
            split_zones: false,
            snapshot_date: None,
        }
    }
}

impl SynthScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.grid_rows < 2 || self.grid_cols < 2 {
            return bad("grid needs at least 2 rows and 2 columns".into());
        }
        if self.split_zones && self.grid_cols < 3 {
            return bad("split zones need at least 3 grid columns".into());
        }
        if !(self.block_m > 0.0) {
            return bad("block_m must be > 0".into());
        }
        if self.detector_count < 1 {
            return bad("detector_count must be >= 1".into());
        }
        if self.days < 1 {
            return bad("days must be >= 1".into());
        }
        if self.classes.is_empty() || self.classes.iter().any(|c| !(c.lanes > 0.0)) {
            return bad("classes must be non-empty with lanes > 0".into());
        }
        if self.demand_profile.len() != default_analysis_hours().len() {
            return bad(format!(
                "demand_profile needs {} hourly values",
                default_analysis_hours().len()
            ));
        }
        if self.demand_profile.iter().any(|k| !(*k >= 0.0)) {
            return bad("demand_profile values must be >= 0".into());
        }
        for (name, v) in [
            ("density_spread", self.density_spread),
            ("detector_spread", self.detector_spread),
            ("measurement_noise", self.measurement_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0"));
            }
        }
        if !(self.s_true > 0.0) {
            return bad("s_true must be > 0".into());
        }
        if let Some(p) = &self.second_population {
            if !(0.0..=1.0).contains(&p.fraction) {
                return bad("second_population.fraction must be in [0, 1]".into());
            }
        }
        if let Some(d) = self.distractor_offset_m {
            if !(d > 0.0) {
                return bad("distractor_offset_m must be > 0".into());
            }
        }
        Ok(())
    }

    fn street_segment_count(&self) -> usize {
        self.grid_rows * (self.grid_cols - 1) + self.grid_cols * (self.grid_rows - 1)
    }
}

/// Weekdays starting at `start`, skipping Saturdays and Sundays.
pub fn weekdays_from(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTruth {
    pub fd: TriangularFD,
    pub q_max: f64,
    pub detector_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub period_label: String,
    pub s_true: f64,
    pub populations: Vec<PopulationTruth>,
    /// Street each detector was placed on.
    pub true_way: BTreeMap<String, String>,
    pub detector_zone: BTreeMap<String, String>,
    /// Noise-free space-mean speed per hour, `Σ l·fd(k) / Σ l·k`.
    pub reference_speeds: Vec<ReferenceSpeed>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub network: RoadNetwork,
    pub detectors: Vec<DetectorSegment>,
    pub zones: ZoneSet,
    pub measurements: MeasurementTable,
    pub truth: GroundTruth,
}

struct Street {
    way_id: String,
    a: Point,
    b: Point,
    class: usize,
}

struct Layout {
    projection: Projection,
    streets: Vec<Street>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn layout(sc: &SynthScenario, rng: &mut ChaCha8Rng) -> Layout {
    let mut gaps = |n: usize| -> Vec<f64> {
        let mut acc = vec![0.0];
        for _ in 1..n {
            let g = sc.block_m * rng.random_range(0.75..1.25);
            acc.push(acc.last().copied().unwrap_or(0.0) + g);
        }
        acc
    };
    let xs = gaps(sc.grid_cols);
    let ys = gaps(sc.grid_rows);
    let mut streets = Vec::with_capacity(sc.street_segment_count());
    for (r, &y) in ys.iter().enumerate() {
        for c in 0..sc.grid_cols - 1 {
            streets.push(Street {
                way_id: format!("w{:05}", streets.len()),
                a: Point { x: xs[c], y },
                b: Point { x: xs[c + 1], y },
                class: r % sc.classes.len(),
            });
        }
    }
    for (c, &x) in xs.iter().enumerate() {
        for r in 0..sc.grid_rows - 1 {
            streets.push(Street {
                way_id: format!("w{:05}", streets.len()),
                a: Point { x, y: ys[r] },
                b: Point { x, y: ys[r + 1] },
                class: (sc.grid_rows + c) % sc.classes.len(),
            });
        }
    }
    Layout {
        projection: Projection::new(sc.origin),
        streets,
        xs,
        ys,
    }
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    Point {
        x: a.x + (b.x - a.x) * t,
        y: a.y + (b.y - a.y) * t,
    }
}

fn rotate_about(p: Point, c: Point, deg: f64) -> Point {
    let (s, co) = deg.to_radians().sin_cos();
    let (dx, dy) = (p.x - c.x, p.y - c.y);
    Point {
        x: c.x + dx * co - dy * s,
        y: c.y + dx * s + dy * co,
    }
}

fn rect(proj: &Projection, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<LonLat> {
    [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
        .iter()
        .map(|&(x, y)| proj.unproject(Point { x, y }))
        .collect()
}

fn lognormal_factor(cv: f64) -> Result<Option<LogNormal<f64>>> {
    if cv == 0.0 {
        return Ok(None);
    }
    LogNormal::from_mean_cv(1.0, cv)
        .map(Some)
        .map_err(|e| Error::InvalidParameter(format!("spread {cv}: {e}")))
}

/// Builds the network, detectors, zones, measurements and ground truth of
/// one period. Output depends only on the scenario.
pub fn generate_scenario(sc: &SynthScenario) -> Result<SynthOutput> {
    sc.validate()?;
    let available = sc.street_segment_count();
    if sc.detector_count > available {
        return Err(Error::InvalidParameter(format!(
            "{} detectors requested but the grid has {available} segments",
            sc.detector_count
        )));
    }

    let mut layout_rng = ChaCha8Rng::seed_from_u64(sc.layout_seed);
    let lay = layout(sc, &mut layout_rng);
    let proj = &lay.projection;

    let mut segments = Vec::new();
    for st in &lay.streets {
        let class = &sc.classes[st.class];
        let pts = [st.a, lerp(st.a, st.b, 0.5), st.b];
        segments.push(RoadSegment::new(
            st.way_id.clone(),
            &class.highway,
            Some(class.lanes),
            pts.iter().map(|p| proj.unproject(*p)).collect(),
        )?);
        if let Some(off) = sc.distractor_offset_m {
            let len = st.a.distance(&st.b);
            let (nx, ny) = (-(st.b.y - st.a.y) / len * off, (st.b.x - st.a.x) / len * off);
            let shift = |p: Point| proj.unproject(Point { x: p.x + nx, y: p.y + ny });
            segments.push(RoadSegment::new(
                format!("{}p", st.way_id),
                &class.highway,
                Some(class.lanes),
                pts.iter().map(|p| shift(*p)).collect(),
            )?);
        }
    }
    let network = RoadNetwork::new(sc.snapshot_date, segments)?;

    let mut chosen: Vec<usize> = (0..lay.streets.len()).collect();
    chosen.shuffle(&mut layout_rng);
    chosen.truncate(sc.detector_count);
    chosen.sort_unstable();

    let mut detectors = Vec::with_capacity(chosen.len());
    let mut true_way = BTreeMap::new();
    let mut lanes = Vec::with_capacity(chosen.len());
    for (i, &si) in chosen.iter().enumerate() {
        let st = &lay.streets[si];
        let id = format!("det{i:04}");
        let mut a = lerp(st.a, st.b, 0.2);
        let mut b = lerp(st.a, st.b, 0.8);
        let (offset, heading, rot) = (
            layout_rng.random_range(0.0..=1.0) * sc.jitter.max_offset_m,
            layout_rng.random_range(0.0..std::f64::consts::TAU),
            layout_rng.random_range(-1.0..=1.0) * sc.jitter.max_rotation_deg,
        );
        let mid = lerp(a, b, 0.5);
        a = rotate_about(a, mid, rot);
        b = rotate_about(b, mid, rot);
        let (dx, dy) = (offset * heading.cos(), offset * heading.sin());
        let geometry: Vec<LonLat> = [a, b]
            .iter()
            .map(|p| proj.unproject(Point { x: p.x + dx, y: p.y + dy }))
            .collect();
        let length = polyline_length_km(&geometry);
        detectors.push(DetectorSegment::new(id.clone(), geometry, Some(length))?);
        true_way.insert(id, st.way_id.clone());
        lanes.push(sc.classes[st.class].lanes);
    }

    // population assignment: an exact share, chosen at random
    let mut population = vec![0usize; detectors.len()];
    if let Some(second) = &sc.second_population {
        let mut order: Vec<usize> = (0..detectors.len()).collect();
        order.shuffle(&mut layout_rng);
        let n2 = (second.fraction * detectors.len() as f64).round() as usize;
        for &i in &order[..n2] {
            population[i] = 1;
        }
    }
    let fds: Vec<TriangularFD> = std::iter::once(sc.fd)
        .chain(sc.second_population.map(|p| p.fd))
        .collect();

    let margin = sc.block_m * 0.5;
    let (x_max, y_max) = (*lay.xs.last().unwrap_or(&0.0), *lay.ys.last().unwrap_or(&0.0));
    let (x0, x1, y0, y1) = (-margin, x_max + margin, -margin, y_max + margin);
    let zones = if sc.split_zones {
        // a quarter block east of a middle column: clear of every street centroid
        let mid = sc.grid_cols / 2;
        let cut = lay.xs[mid - 1] + 0.25 * (lay.xs[mid] - lay.xs[mid - 1]);
        ZoneSet::new(vec![
            Zone {
                zone_id: "Z1".into(),
                polygons: vec![vec![rect(proj, x0, cut, y0, y1)]],
            },
            Zone {
                zone_id: "Z2".into(),
                polygons: vec![vec![rect(proj, cut, x1, y0, y1)]],
            },
        ])?
    } else {
        ZoneSet::new(vec![Zone {
            zone_id: "Z1".into(),
            polygons: vec![vec![rect(proj, x0, x1, y0, y1)]],
        }])?
    };
    let detector_zone: BTreeMap<String, String> = detectors
        .iter()
        .filter_map(|d| {
            let c = d.centroid();
            zones
                .zones()
                .iter()
                .find(|z| z.contains(c))
                .map(|z| (d.detector_id.clone(), z.zone_id.clone()))
        })
        .collect();

    // densities
    let hours = default_analysis_hours();
    let dates = weekdays_from(sc.start_date, sc.days);
    let slot_dist = lognormal_factor(sc.density_spread)?;
    let det_dist = lognormal_factor(sc.detector_spread)?;
    let noise = Normal::new(0.0, sc.measurement_noise)
        .map_err(|e| Error::InvalidParameter(format!("measurement_noise: {e}")))?;

    let mut slot_rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let slot_factor: Vec<f64> = (0..dates.len() * hours.len())
        .map(|_| slot_dist.map_or(1.0, |d| d.sample(&mut slot_rng)))
        .collect();

    let mut records = Vec::with_capacity(detectors.len() * slot_factor.len());
    let mut truth_flow = vec![0.0; hours.len()];
    let mut truth_density = vec![0.0; hours.len()];
    for (i, det) in detectors.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
        rng.set_stream(i as u64 + 1);
        let fd = &fds[population[i]];
        let n = lanes[i];
        for (di, &date) in dates.iter().enumerate() {
            for (hi, &hour) in hours.iter().enumerate() {
                let mut k = sc.demand_profile[hi] * slot_factor[di * hours.len() + hi];
                if let Some(d) = det_dist {
                    k *= d.sample(&mut rng);
                }
                let eps = noise.sample(&mut rng);
                let occupancy = (k * sc.s_true).clamp(0.0, 1.0);
                let flow = (fd.eval(k) * n * (1.0 + eps)).max(0.0);
                records.push(MeasurementRecord {
                    detector_id: det.detector_id.clone(),
                    date,
                    hour,
                    flow,
                    occupancy,
                });
                truth_flow[hi] += det.length_km * fd.eval(k);
                truth_density[hi] += det.length_km * k;
            }
        }
    }
    let measurements = MeasurementTable::new(sc.period_label.clone(), hours.clone(), records)?;

    let reference_speeds = hours
        .iter()
        .enumerate()
        .filter(|(hi, _)| truth_density[*hi] > 0.0)
        .map(|(hi, &hour)| ReferenceSpeed {
            hour,
            speed_kmh: truth_flow[hi] / truth_density[hi],
        })
        .collect();
    let populations = fds
        .iter()
        .enumerate()
        .map(|(p, fd)| PopulationTruth {
            fd: *fd,
            q_max: fd.q_max(),
            detector_ids: detectors
                .iter()
                .zip(&population)
                .filter(|(_, &q)| q == p)
                .map(|(d, _)| d.detector_id.clone())
                .collect(),
        })
        .collect();

    Ok(SynthOutput {
        network,
        detectors,
        zones,
        measurements,
        truth: GroundTruth {
            period_label: sc.period_label.clone(),
            s_true: sc.s_true,
            populations,
            true_way,
            detector_zone,
            reference_speeds,
        },
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Paths written for one period, relative to the study directory.
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenPeriod {
    pub period: PeriodConfig,
    pub ground_truth: PathBuf,
    pub reference_speeds: PathBuf,
}

/// Writes one period's files under `dir/{label}/` and the zones file to
/// `dir/zones.geojson`.
pub fn write_scenario(out: &SynthOutput, dir: &Path) -> Result<WrittenPeriod> {
    let label = out.measurements.period_label().to_string();
    let rel = PathBuf::from(&label);
    let period = PeriodConfig {
        label: label.clone(),
        measurements: rel.join("measurements.csv"),
        network: rel.join("network.geojson"),
        detectors: rel.join("detectors.geojson"),
    };
    write_json(&dir.join(&period.network), &road_network_geojson(&out.network))?;
    write_json(&dir.join(&period.detectors), &detectors_geojson(&out.detectors))?;
    write_json(&dir.join("zones.geojson"), &zones_geojson(&out.zones))?;

    let mut csv = Vec::new();
    write_measurements(&out.measurements, &mut csv)?;
    write_text(&dir.join(&period.measurements), &String::from_utf8_lossy(&csv))?;

    let reference_speeds = rel.join("reference_speeds.csv");
    let mut buf = Vec::new();
    write_reference_speeds(&out.truth.reference_speeds, &mut buf)?;
    write_text(&dir.join(&reference_speeds), &String::from_utf8_lossy(&buf))?;

    let ground_truth = rel.join("ground_truth.json");
    write_json(&dir.join(&ground_truth), &serde_json::to_value(&out.truth)?)?;
    Ok(WrittenPeriod {
        period,
        ground_truth,
        reference_speeds,
    })
}

/// Generates every period, then writes `study.toml` that calibrates on the
/// last period's reference speeds. Periods should share `layout_seed` so
/// one zones file fits all of them.
pub fn write_study(scenarios: &[SynthScenario], dir: &Path, resample_seed: u64) -> Result<StudyConfig> {
    if scenarios.is_empty() {
        return Err(Error::InvalidParameter("a study needs at least one period".into()));
    }
    let mut periods = Vec::new();
    let mut reference = None;
    for sc in scenarios {
        let written = write_scenario(&generate_scenario(sc)?, dir)?;
        reference = Some(written.reference_speeds);
        periods.push(written.period);
    }
    let mut cfg = StudyConfig::new("zones.geojson", periods).with_base_dir(dir);
    cfg.calibration = CalibrationConfig {
        reference_speeds: reference,
        ..Default::default()
    };
    cfg.resampling.seed = resample_seed;
    write_text(&dir.join("study.toml"), &cfg.to_toml()?)?;
    Ok(cfg)
}

/// Two periods on one layout: a baseline and a degraded network, split
/// into two zones.
pub fn demo_study(seed: u64) -> Vec<SynthScenario> {
    let base = SynthScenario {
        grid_rows: 8,
        grid_cols: 8,
        detector_count: 80,
        days: 30,
        split_zones: true,
        layout_seed: seed,
        ..Default::default()
    };
    vec![
        SynthScenario {
            period_label: "before".into(),
            seed: seed.wrapping_mul(2),
            snapshot_date: NaiveDate::from_ymd_opt(2010, 6, 1),
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
            ..base.clone()
        },
        SynthScenario {
            period_label: "after".into(),
            seed: seed.wrapping_mul(2).wrapping_add(1),
            fd: TriangularFD {
                v_f: 25.0,
                k_crit: 18.0,
                k_jam: 150.0,
            },
            snapshot_date: NaiveDate::from_ymd_opt(2023, 6, 1),
            start_date: NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date"),
            ..base
        },
    ]
}
