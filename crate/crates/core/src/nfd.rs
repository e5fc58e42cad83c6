//! Zone traffic states from detector measurements.
//!
//! For the detectors `i` of a zone reporting in a given hour:
//!
//! ```text
//! Q = Σ l_i · q_i / n_i  /  Σ l_i        (veh/h per lane-km)
//! K = Σ l_i · o_i / s    /  Σ l_i        (veh per lane-km)
//! ```
//!
//! `q_i` is the link flow (summed over lanes), `n_i` the lane count, `l_i`
//! the monitored length and `s` the space-effective vehicle length in km.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::conflation::DetectorMatch;
use crate::error::{Error, Result};
use crate::ingest::{MeasurementRecord, MeasurementTable};

pub const DEFAULT_S_KM: f64 = 0.0055;

/// Space-effective vehicle length `s` in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CalibrationScalar(f64);

impl CalibrationScalar {
    pub fn new(s_km: f64) -> Result<Self> {
        if s_km.is_finite() && s_km > 0.0 {
            Ok(Self(s_km))
        } else {
            Err(Error::InvalidParameter(format!("s must be > 0 km, got {s_km}")))
        }
    }

    pub fn km(&self) -> f64 {
        self.0
    }
}

impl Default for CalibrationScalar {
    fn default() -> Self {
        Self(DEFAULT_S_KM)
    }
}

impl TryFrom<f64> for CalibrationScalar {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CalibrationScalar> for f64 {
    fn from(s: CalibrationScalar) -> f64 {
        s.0
    }
}

/// `k = o / s`.
pub fn occupancy_to_density(occupancy: f64, s_km: f64) -> Result<f64> {
    Ok(occupancy / CalibrationScalar::new(s_km)?.km())
}

/// One detector's normalized reading for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub length_km: f64,
    /// `q / n`, veh/h per lane.
    pub lane_flow: f64,
    /// `o / s`, veh per lane-km.
    pub density: f64,
}

impl Contribution {
    pub fn new(record: &MeasurementRecord, m: &DetectorMatch, s: CalibrationScalar) -> Self {
        Self {
            length_km: m.length_km,
            lane_flow: record.flow / m.lanes,
            density: record.occupancy / s.km(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub density: f64,
    pub flow: f64,
    pub effective_length_km: f64,
    pub detector_count: usize,
}

/// Length-weighted means. Summation follows iteration order, so callers
/// that need bit-identical results must feed detectors in the same order.
pub fn aggregate<I: IntoIterator<Item = Contribution>>(contributions: I) -> Option<Aggregate> {
    let (mut lq, mut lk, mut l, mut n) = (0.0, 0.0, 0.0, 0usize);
    for c in contributions {
        lq += c.length_km * c.lane_flow;
        lk += c.length_km * c.density;
        l += c.length_km;
        n += 1;
    }
    (n > 0 && l > 0.0).then(|| Aggregate {
        density: lk / l,
        flow: lq / l,
        effective_length_km: l,
        detector_count: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficState {
    pub zone_id: String,
    pub date: NaiveDate,
    pub hour: u8,
    /// K, veh per lane-km.
    pub density: f64,
    /// Q, veh/h per lane-km.
    pub flow: f64,
    pub effective_length_km: f64,
    pub detector_count: usize,
}

impl TrafficState {
    /// Space-mean speed `Q / K` in km/h, undefined at zero density.
    pub fn speed(&self) -> Option<f64> {
        (self.density > 0.0).then(|| self.flow / self.density)
    }
}

pub type MatchIndex<'a> = HashMap<&'a str, &'a DetectorMatch>;

pub fn index_matches(matches: &[DetectorMatch]) -> MatchIndex<'_> {
    matches.iter().map(|m| (m.detector_id.as_str(), m)).collect()
}

/// Aggregates the records of one `(zone, date, hour)` slot.
pub fn aggregate_zone_state(
    zone_id: &str,
    records: &[&MeasurementRecord],
    matches: &MatchIndex<'_>,
    s: CalibrationScalar,
) -> Result<TrafficState> {
    let first = records
        .first()
        .ok_or_else(|| Error::NoData(format!("no contributing detectors in zone {zone_id}")))?;
    let mut contributions = Vec::with_capacity(records.len());
    for r in records {
        if (r.date, r.hour) != (first.date, first.hour) {
            return Err(Error::InvalidParameter("records span more than one (date, hour)".into()));
        }
        let m = matches
            .get(r.detector_id.as_str())
            .ok_or_else(|| Error::InvalidParameter(format!("detector {} has no match entry", r.detector_id)))?;
        contributions.push(Contribution::new(r, m, s));
    }
    let agg = aggregate(contributions).expect("non-empty contributions with positive lengths");
    Ok(TrafficState {
        zone_id: zone_id.to_string(),
        date: first.date,
        hour: first.hour,
        density: agg.density,
        flow: agg.flow,
        effective_length_km: agg.effective_length_km,
        detector_count: agg.detector_count,
    })
}

/// One state per `(zone, date, hour)` with at least one reporting detector,
/// ordered by that key. Detectors without a zone are ignored.
pub fn compute_states(table: &MeasurementTable, matches: &[DetectorMatch], s: CalibrationScalar) -> Vec<TrafficState> {
    let index = index_matches(matches);
    let mut unmatched = 0usize;
    let mut states = Vec::new();
    for ((date, hour), records) in table.by_slot() {
        let mut per_zone: BTreeMap<&str, Vec<Contribution>> = BTreeMap::new();
        for r in records {
            match index.get(r.detector_id.as_str()) {
                Some(m) => {
                    if let Some(zone) = m.zone_id.as_deref() {
                        per_zone.entry(zone).or_default().push(Contribution::new(r, m, s));
                    }
                }
                None => unmatched += 1,
            }
        }
        for (zone, contributions) in per_zone {
            if let Some(agg) = aggregate(contributions) {
                states.push(TrafficState {
                    zone_id: zone.to_string(),
                    date,
                    hour,
                    density: agg.density,
                    flow: agg.flow,
                    effective_length_km: agg.effective_length_km,
                    detector_count: agg.detector_count,
                });
            }
        }
    }
    if unmatched > 0 {
        log::debug!("{unmatched} records belong to detectors without a match entry");
    }
    states.sort_by(|a, b| (&a.zone_id, a.date, a.hour).cmp(&(&b.zone_id, b.date, b.hour)));
    states
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpeed {
    pub hour: u8,
    pub speed_kmh: f64,
}

pub fn parse_reference_speeds(path: impl AsRef<Path>) -> Result<Vec<ReferenceSpeed>> {
    let path = path.as_ref();
    read_reference_speeds(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Reads `hour,speed_kmh` CSV.
pub fn read_reference_speeds<R: Read>(reader: R) -> Result<Vec<ReferenceSpeed>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(["hour", "speed_kmh"]) {
        return Err(Error::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: "hour,speed_kmh".into(),
        });
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_reference_speeds<W: Write>(speeds: &[ReferenceSpeed], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in speeds {
        wtr.serialize(s)?;
    }
    wtr.flush().map_err(|e| Error::io("<reference speeds>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyMeans {
    pub hour: u8,
    /// Length-weighted mean of `q / n`.
    pub lane_flow: f64,
    /// Length-weighted mean occupancy.
    pub occupancy: f64,
    pub observations: usize,
}

/// Length-weighted means over every zoned detector-record at `hour`,
/// pooled across zones and dates.
pub fn hourly_means(table: &MeasurementTable, matches: &[DetectorMatch], hour: u8) -> Result<HourlyMeans> {
    let index = index_matches(matches);
    let (mut lq, mut lo, mut l, mut n) = (0.0, 0.0, 0.0, 0usize);
    for r in table.records().iter().filter(|r| r.hour == hour) {
        if let Some(m) = index.get(r.detector_id.as_str()).filter(|m| m.zone_id.is_some()) {
            lq += m.length_km * r.flow / m.lanes;
            lo += m.length_km * r.occupancy;
            l += m.length_km;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoData(format!("no zoned observations at hour {hour}")));
    }
    Ok(HourlyMeans {
        hour,
        lane_flow: lq / l,
        occupancy: lo / l,
        observations: n,
    })
}

/// Space-mean speed at `hour` implied by `s`: `Q̄ / (Ō / s)`.
pub fn mean_speed_at_hour(
    table: &MeasurementTable,
    matches: &[DetectorMatch],
    s: CalibrationScalar,
    hour: u8,
) -> Result<f64> {
    let m = hourly_means(table, matches, hour)?;
    if m.occupancy <= 0.0 {
        return Err(Error::NoData(format!("zero occupancy at hour {hour}")));
    }
    Ok(m.lane_flow / (m.occupancy / s.km()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourCalibration {
    pub hour: u8,
    pub reference_speed_kmh: f64,
    pub mean_lane_flow: f64,
    pub mean_occupancy: f64,
    pub s_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub s: CalibrationScalar,
    pub per_hour: Vec<HourCalibration>,
}

/// Chooses `s` so that `Q̄ / K̄` reproduces each reference speed
/// (`s_h = v_h · Ō_h / Q̄_h`), then averages over the reference hours.
pub fn calibrate_s(table: &MeasurementTable, matches: &[DetectorMatch], reference: &[ReferenceSpeed]) -> Result<Calibration> {
    if reference.is_empty() {
        return Err(Error::InvalidParameter("no reference speeds".into()));
    }
    let mut per_hour = Vec::with_capacity(reference.len());
    for r in reference {
        if !(r.speed_kmh.is_finite() && r.speed_kmh > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference speed at hour {} must be > 0, got {}",
                r.hour, r.speed_kmh
            )));
        }
        let m = hourly_means(table, matches, r.hour)?;
        if m.lane_flow <= 0.0 || m.occupancy <= 0.0 {
            return Err(Error::NoData(format!("zero flow or occupancy at hour {}", r.hour)));
        }
        per_hour.push(HourCalibration {
            hour: r.hour,
            reference_speed_kmh: r.speed_kmh,
            mean_lane_flow: m.lane_flow,
            mean_occupancy: m.occupancy,
            s_km: r.speed_kmh * m.occupancy / m.lane_flow,
        });
    }
    let s = per_hour.iter().map(|h| h.s_km).sum::<f64>() / per_hour.len() as f64;
    Ok(Calibration {
        s: CalibrationScalar::new(s)?,
        per_hour,
    })
}

pub const STATES_HEADER: [&str; 7] = ["zone_id", "date", "hour", "K", "Q", "effective_length_km", "detector_count"];

pub fn write_states<W: Write>(states: &[TrafficState], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(STATES_HEADER)?;
    for s in states {
        wtr.write_record([
            s.zone_id.clone(),
            s.date.format("%Y-%m-%d").to_string(),
            s.hour.to_string(),
            s.density.to_string(),
            s.flow.to_string(),
            s.effective_length_km.to_string(),
            s.detector_count.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<states writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conflation::LaneSource;
    use crate::geo::LonLat;
    use crate::ingest::default_analysis_hours;

    fn det(id: &str, zone: Option<&str>, length_km: f64, lanes: f64) -> DetectorMatch {
        DetectorMatch {
            detector_id: id.into(),
            way_id: None,
            highway_class: None,
            centroid_distance_m: None,
            angle_diff_deg: None,
            lanes,
            lane_source: LaneSource::Tagged,
            zone_id: zone.map(String::from),
            length_km,
            centroid: LonLat::new(0.0, 0.0),
        }
    }

    fn rec(id: &str, date: NaiveDate, hour: u8, flow: f64, occupancy: f64) -> MeasurementRecord {
        MeasurementRecord {
            detector_id: id.into(),
            date,
            hour,
            flow,
            occupancy,
        }
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2023, 3, day).unwrap()
    }

    fn s() -> CalibrationScalar {
        CalibrationScalar::default()
    }

    #[test]
    fn density_conversion() {
        assert_eq!(occupancy_to_density(0.0, 0.0055).unwrap(), 0.0);
        assert!((occupancy_to_density(0.11, 0.0055).unwrap() - 20.0).abs() < 1e-12);
        // 1 / 0.0055
        assert!((occupancy_to_density(1.0, 0.0055).unwrap() - 181.818_181_818).abs() < 1e-6);
        assert!(occupancy_to_density(0.1, 0.0).is_err());
        assert!(occupancy_to_density(0.1, -1.0).is_err());
    }

    #[test]
    fn single_detector_state() {
        let m = [det("a", Some("Z"), 1.0, 2.0)];
        let idx = index_matches(&m);
        let r = rec("a", d(14), 8, 600.0, 0.055);
        let st = aggregate_zone_state("Z", &[&r], &idx, s()).unwrap();
        assert!((st.flow - 300.0).abs() < 1e-12);
        assert!((st.density - 10.0).abs() < 1e-12);
        assert_eq!(st.detector_count, 1);
        assert_eq!(st.effective_length_km, 1.0);
    }

    #[test]
    fn symmetric_pair() {
        let m = [det("a", Some("Z"), 0.5, 1.0), det("b", Some("Z"), 0.5, 1.0)];
        let idx = index_matches(&m);
        let (r1, r2) = (rec("a", d(14), 8, 300.0, 0.055), rec("b", d(14), 8, 500.0, 0.055));
        let st = aggregate_zone_state("Z", &[&r1, &r2], &idx, s()).unwrap();
        assert!((st.flow - 400.0).abs() < 1e-12);
        assert!((st.density - 10.0).abs() < 1e-12);
    }

    #[test]
    fn length_weighting() {
        // (1*300 + 3*500) / 4 = 450
        let m = [det("a", Some("Z"), 1.0, 2.0), det("b", Some("Z"), 3.0, 2.0)];
        let idx = index_matches(&m);
        let (r1, r2) = (rec("a", d(14), 8, 600.0, 0.01), rec("b", d(14), 8, 1000.0, 0.01));
        let st = aggregate_zone_state("Z", &[&r1, &r2], &idx, s()).unwrap();
        assert!((st.flow - 450.0).abs() < 1e-12);
    }

    #[test]
    fn empty_slot_and_unknown_detector_are_errors() {
        let m = [det("a", Some("Z"), 1.0, 2.0)];
        let idx = index_matches(&m);
        assert!(matches!(aggregate_zone_state("Z", &[], &idx, s()), Err(Error::NoData(_))));
        let r = rec("zz", d(14), 8, 1.0, 0.1);
        assert!(aggregate_zone_state("Z", &[&r], &idx, s()).is_err());
    }

    fn full_day(id: &str, date: NaiveDate, flow: impl Fn(u8) -> f64, occ: impl Fn(u8) -> f64) -> Vec<MeasurementRecord> {
        (5..=22).map(|h| rec(id, date, h, flow(h), occ(h))).collect()
    }

    #[test]
    fn one_zone_one_day_gives_eighteen_states() {
        let t = MeasurementTable::new("y", default_analysis_hours(), full_day("a", d(14), |_| 100.0, |_| 0.05)).unwrap();
        let states = compute_states(&t, &[det("a", Some("Z"), 1.0, 2.0)], s());
        assert_eq!(states.len(), 18);
    }

    #[test]
    fn unzoned_detector_contributes_nothing() {
        let mut recs = full_day("a", d(14), |_| 100.0, |_| 0.05);
        recs.extend(full_day("b", d(14), |_| 900.0, |_| 0.5));
        let t = MeasurementTable::new("y", default_analysis_hours(), recs).unwrap();
        let states = compute_states(&t, &[det("a", Some("Z"), 1.0, 2.0), det("b", None, 1.0, 2.0)], s());
        assert_eq!(states.len(), 18);
        assert!(states.iter().all(|s| s.detector_count == 1 && (s.flow - 50.0).abs() < 1e-12));
    }

    #[test]
    fn two_detectors_two_days_against_spreadsheet() {
        // Oracle: per slot, Q = (l_a*q_a/n_a + l_b*q_b/n_b)/(l_a+l_b) and the
        // same for K = o/s, evaluated independently below.
        let (la, na, lb, nb) = (0.3, 2.0, 0.9, 3.0);
        let fa = |h: u8| 200.0 + 10.0 * h as f64;
        let fb = |h: u8| 900.0 - 15.0 * h as f64;
        let oa = |h: u8| 0.01 * h as f64;
        let ob = |h: u8| 0.2 - 0.005 * h as f64;
        let mut recs = Vec::new();
        for day in [14, 15] {
            recs.extend(full_day("a", d(day), fa, oa));
            recs.extend(full_day("b", d(day), fb, ob));
        }
        let t = MeasurementTable::new("y", default_analysis_hours(), recs).unwrap();
        let m = [det("a", Some("Z"), la, na), det("b", Some("Z"), lb, nb)];
        let states = compute_states(&t, &m, s());
        assert_eq!(states.len(), 36);
        for st in &states {
            let h = st.hour;
            let q = (la * fa(h) / na + lb * fb(h) / nb) / (la + lb);
            let k = (la * oa(h) / 0.0055 + lb * ob(h) / 0.0055) / (la + lb);
            assert!((st.flow - q).abs() < 1e-9, "{h}");
            assert!((st.density - k).abs() < 1e-9, "{h}");
            assert!((st.effective_length_km - 1.2).abs() < 1e-12);
        }
        assert!(states.windows(2).all(|w| (w[0].date, w[0].hour) < (w[1].date, w[1].hour)));
    }

    #[test]
    fn calibration_closed_form() {
        // Q = 3851 veh/h/lane, O = 0.55 at hour 5; 38.51 * 0.55 / 3851 = 0.0055
        let recs = vec![rec("a", d(14), 5, 3851.0, 0.55)];
        let t = MeasurementTable::new("y", vec![5], recs).unwrap();
        let m = [det("a", Some("Z"), 1.0, 1.0)];
        let c = calibrate_s(&t, &m, &[ReferenceSpeed { hour: 5, speed_kmh: 38.51 }]).unwrap();
        assert!((c.s.km() - 0.0055).abs() < 1e-15);
        // single reference hour reproduces the reference speed
        let v = mean_speed_at_hour(&t, &m, c.s, 5).unwrap();
        assert!((v - 38.51).abs() < 1e-9);
    }

    #[test]
    fn calibration_averages_hours() {
        // s5 = 40 * 0.05 / 400 = 0.005 ; s6 = 30 * 0.08 / 400 = 0.006
        let recs = vec![rec("a", d(14), 5, 400.0, 0.05), rec("a", d(14), 6, 400.0, 0.08)];
        let t = MeasurementTable::new("y", vec![5, 6], recs).unwrap();
        let m = [det("a", Some("Z"), 1.0, 1.0)];
        let c = calibrate_s(
            &t,
            &m,
            &[
                ReferenceSpeed { hour: 5, speed_kmh: 40.0 },
                ReferenceSpeed { hour: 6, speed_kmh: 30.0 },
            ],
        )
        .unwrap();
        assert!((c.per_hour[0].s_km - 0.005).abs() < 1e-15);
        assert!((c.per_hour[1].s_km - 0.006).abs() < 1e-15);
        assert!((c.s.km() - 0.0055).abs() < 1e-15);
    }

    #[test]
    fn calibration_errors() {
        let recs = vec![rec("a", d(14), 5, 400.0, 0.05)];
        let t = MeasurementTable::new("y", vec![5], recs).unwrap();
        let m = [det("a", Some("Z"), 1.0, 1.0)];
        assert!(matches!(
            calibrate_s(&t, &m, &[ReferenceSpeed { hour: 5, speed_kmh: 0.0 }]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            calibrate_s(&t, &m, &[ReferenceSpeed { hour: 7, speed_kmh: 30.0 }]),
            Err(Error::NoData(_))
        ));
    }

    #[test]
    fn reference_csv() {
        let v = read_reference_speeds("hour,speed_kmh\n5,38.51\n6,34.17\n".as_bytes()).unwrap();
        assert_eq!(v[1], ReferenceSpeed { hour: 6, speed_kmh: 34.17 });
        let mut buf = Vec::new();
        write_reference_speeds(&v, &mut buf).unwrap();
        assert_eq!(read_reference_speeds(buf.as_slice()).unwrap(), v);
        assert!(read_reference_speeds("h,v\n".as_bytes()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_slot() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
            // (length, lanes, flow, occupancy)
            prop::collection::vec((0.05f64..2.0, 1.0f64..5.0, 0.0f64..3000.0, 0.0f64..1.0), 1..12)
        }

        fn build(slot: &[(f64, f64, f64, f64)]) -> (Vec<DetectorMatch>, Vec<MeasurementRecord>) {
            let ms = slot
                .iter()
                .enumerate()
                .map(|(i, &(l, n, _, _))| det(&format!("d{i:02}"), Some("Z"), l, n))
                .collect();
            let rs = slot
                .iter()
                .enumerate()
                .map(|(i, &(_, _, q, o))| rec(&format!("d{i:02}"), d(14), 8, q, o))
                .collect();
            (ms, rs)
        }

        proptest! {
            #[test]
            fn bounded_by_extremes(slot in arb_slot()) {
                let (ms, rs) = build(&slot);
                let idx = index_matches(&ms);
                let refs: Vec<&MeasurementRecord> = rs.iter().collect();
                let st = aggregate_zone_state("Z", &refs, &idx, s()).unwrap();
                let lane: Vec<f64> = slot.iter().map(|&(_, n, q, _)| q / n).collect();
                let dens: Vec<f64> = slot.iter().map(|&(_, _, _, o)| o / DEFAULT_S_KM).collect();
                let (qlo, qhi) = (lane.iter().cloned().fold(f64::INFINITY, f64::min), lane.iter().cloned().fold(0.0, f64::max));
                let (klo, khi) = (dens.iter().cloned().fold(f64::INFINITY, f64::min), dens.iter().cloned().fold(0.0, f64::max));
                prop_assert!(st.flow >= qlo * (1.0 - 1e-12) - 1e-9 && st.flow <= qhi * (1.0 + 1e-12) + 1e-9);
                prop_assert!(st.density >= klo * (1.0 - 1e-12) - 1e-9 && st.density <= khi * (1.0 + 1e-12) + 1e-9);
            }

            #[test]
            fn s_scaling(slot in arb_slot(), c in 0.2f64..5.0) {
                let (ms, rs) = build(&slot);
                let t = MeasurementTable::new("y", vec![8], rs).unwrap();
                let a = compute_states(&t, &ms, s());
                let b = compute_states(&t, &ms, CalibrationScalar::new(DEFAULT_S_KM * c).unwrap());
                for (x, y) in a.iter().zip(&b) {
                    prop_assert_eq!(x.flow, y.flow);
                    prop_assert!((y.density * c - x.density).abs() <= 1e-9 * x.density.max(1.0));
                    if let (Some(vx), Some(vy)) = (x.speed(), y.speed()) {
                        prop_assert!((vy - vx * c).abs() <= 1e-9 * vy.max(1.0));
                    }
                }
            }

            #[test]
            fn identical_readings_ignore_lengths(lengths in prop::collection::vec(0.05f64..3.0, 1..10), q in 0.0f64..2000.0, o in 0.0f64..1.0) {
                let slot: Vec<_> = lengths.iter().map(|&l| (l, 2.0, q, o)).collect();
                let (ms, rs) = build(&slot);
                let idx = index_matches(&ms);
                let refs: Vec<&MeasurementRecord> = rs.iter().collect();
                let st = aggregate_zone_state("Z", &refs, &idx, s()).unwrap();
                prop_assert!((st.flow - q / 2.0).abs() <= 1e-9 * q.max(1.0));
                prop_assert!((st.density - o / DEFAULT_S_KM).abs() <= 1e-9 * (o / DEFAULT_S_KM).max(1.0));
            }
        }
    }
}
