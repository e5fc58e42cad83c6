//! End-to-end study runs and their on-disk outputs.
//!
//! ```text
//! out/
//!   manifest.json  report.json  summary.txt  calibration.json
//!   {period}/matches.csv  {period}/coverage.json
//!   {zone}/{period}/envelope.csv  metrics.json  [states.csv  cloud.csv]
//!   {zone}/comparison.json
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{PeriodConfig, StudyConfig};
use crate::conflation::{
    assign_lanes, assign_zones, lane_source_summary, match_detectors, parse_detectors, parse_zones,
    write_match_report, DetectorMatch, LaneSourceSummary, ZoneSet,
};
use crate::error::{Error, Result, StageExt};
use crate::ingest::{filter_complete_days, parse_measurements, summarize_coverage, CoverageReport, MeasurementTable, ParseOptions};
use crate::metrics::{compare_periods, estimate_metrics, format_percent, ChangeReport, NfdMetrics};
use crate::network::{filter_higher_order, lane_class_means, parse_road_network};
use crate::nfd::{calibrate_s, compute_states, parse_reference_speeds, write_states, Calibration, CalibrationScalar};
use crate::resampling::{
    cloud_points, draw_subsamples, extract_envelope, pool_states, write_cloud, write_envelope, CloudPoint, Envelope,
    ZoneDetector,
};

/// Tracks every file written below the output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: BTreeSet<PathBuf>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            written: BTreeSet::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths of written files, sorted.
    pub fn written(&self) -> impl Iterator<Item = &Path> {
        self.written.iter().map(PathBuf::as_path)
    }

    pub fn write_with<F>(&mut self, rel: impl AsRef<Path>, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.insert(rel.to_path_buf());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: impl AsRef<Path>, value: &T) -> Result<PathBuf> {
        self.write_with(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n").map_err(|e| Error::io("<json>", e))
        })
    }

    pub fn write_text(&mut self, rel: impl AsRef<Path>, text: &str) -> Result<PathBuf> {
        self.write_with(rel, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io("<text>", e)))
    }
}

#[derive(Debug, Clone)]
pub struct PeriodData {
    pub label: String,
    /// Complete weekdays only.
    pub table: MeasurementTable,
    pub coverage: CoverageReport,
    pub matches: Vec<DetectorMatch>,
}

pub fn load_zones(cfg: &StudyConfig) -> Result<ZoneSet> {
    let zones = parse_zones(cfg.resolve(&cfg.zones)).stage("match")?;
    for id in &cfg.zone_filter {
        if !zones.ids().any(|z| z == id) {
            return Err(Error::Config(format!("zone filter names unknown zone {id}")));
        }
    }
    Ok(zones)
}

pub fn ingest_period(cfg: &StudyConfig, period: &PeriodConfig) -> Result<(MeasurementTable, CoverageReport)> {
    let opts = ParseOptions {
        occupancy_percent: cfg.occupancy_percent,
        ..Default::default()
    };
    let raw = parse_measurements(cfg.resolve(&period.measurements), &period.label, &opts).stage("ingest")?;
    let table = filter_complete_days(&raw);
    let mut coverage = summarize_coverage(&table);
    coverage.rejections = raw.rejections().clone();
    log::info!(
        "period {}: {} rows kept of {} read",
        period.label,
        table.len(),
        raw.rejections().total_rows
    );
    Ok((table, coverage))
}

pub fn match_period(cfg: &StudyConfig, period: &PeriodConfig, zones: &ZoneSet) -> Result<Vec<DetectorMatch>> {
    let run = || -> Result<Vec<DetectorMatch>> {
        let network = filter_higher_order(&parse_road_network(cfg.resolve(&period.network))?);
        let detectors = parse_detectors(cfg.resolve(&period.detectors))?;
        let lanes = lane_class_means(&network)?;
        let mut matches = assign_lanes(match_detectors(&detectors, &network, &cfg.matching)?, &lanes);
        assign_zones(&mut matches, zones)?;
        Ok(matches)
    };
    let matches = run().stage("match")?;
    let s = lane_source_summary(&matches);
    log::info!(
        "period {}: {} detectors, {} matched to a way",
        period.label,
        matches.len(),
        matches.iter().filter(|m| m.way_id.is_some()).count()
    );
    log::debug!("lane sources: {s:?}");
    Ok(matches)
}

pub fn prepare_period(cfg: &StudyConfig, period: &PeriodConfig, zones: &ZoneSet) -> Result<PeriodData> {
    let (table, coverage) = ingest_period(cfg, period)?;
    let matches = match_period(cfg, period, zones)?;
    Ok(PeriodData {
        label: period.label.clone(),
        table,
        coverage,
        matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub s_km: f64,
    /// Set when `s` was derived from reference speeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

pub fn calibrate(cfg: &StudyConfig, periods: &[PeriodData]) -> Result<CalibrationOutcome> {
    if let Some(s) = cfg.fixed_s() {
        return Ok(CalibrationOutcome {
            s_km: s,
            period: None,
            calibration: None,
        });
    }
    let label = &cfg
        .calibration_period()
        .ok_or_else(|| Error::Config("no calibration period".into()))?
        .label;
    let data = periods
        .iter()
        .find(|p| &p.label == label)
        .ok_or_else(|| Error::Config(format!("calibration period {label} was not loaded")))?;
    let path = cfg
        .calibration
        .reference_speeds
        .as_ref()
        .expect("fixed_s is None only with a reference file");
    let run = || -> Result<Calibration> {
        let reference = parse_reference_speeds(cfg.resolve(path))?;
        calibrate_s(&data.table, &data.matches, &reference)
    };
    let c = run().stage("calibrate")?;
    log::info!("calibrated s = {} km on period {label}", c.s.km());
    Ok(CalibrationOutcome {
        s_km: c.s.km(),
        period: Some(label.clone()),
        calibration: Some(c),
    })
}

#[derive(Debug, Clone)]
pub struct ZoneEstimate {
    pub envelope: Envelope,
    pub metrics: NfdMetrics,
    pub cloud: Vec<CloudPoint>,
}

/// Detectors of `zone` that report at least once in the period.
pub fn zone_detectors(data: &PeriodData, zone: &str) -> Vec<ZoneDetector> {
    let present = data.table.detector_ids();
    data.matches
        .iter()
        .filter(|m| m.zone_id.as_deref() == Some(zone) && present.contains(m.detector_id.as_str()))
        .map(ZoneDetector::from)
        .collect()
}

pub fn estimate_zone(cfg: &StudyConfig, data: &PeriodData, zone: &str, s: CalibrationScalar) -> Result<ZoneEstimate> {
    let run = || -> Result<ZoneEstimate> {
        let detectors = zone_detectors(data, zone);
        let p = &cfg.resampling;
        let subsets = draw_subsamples(&detectors, p.subsample_count, p.length_fraction, p.seed)?;
        let cloud = pool_states(&subsets, &data.table, &data.matches, s)?;
        let envelope = extract_envelope(cloud_points(&cloud), p, zone, &data.label)?;
        let metrics = estimate_metrics(&envelope, cloud_points(&cloud), &cfg.metrics)?;
        Ok(ZoneEstimate {
            envelope,
            metrics,
            cloud,
        })
    };
    run().stage("estimate")
}

/// Zones to estimate: every zone, or the configured subset.
pub fn selected_zones(cfg: &StudyConfig, zones: &ZoneSet) -> Vec<String> {
    zones
        .ids()
        .filter(|z| cfg.zone_filter.is_empty() || cfg.zone_filter.iter().any(|f| f == z))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub s_km: f64,
    pub metrics: Vec<NfdMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<ChangeReport>,
}

/// First-versus-last comparison for every zone estimated in both.
pub fn compare_first_last(cfg: &StudyConfig, metrics: &[NfdMetrics]) -> Result<Vec<ChangeReport>> {
    let (Some(first), Some(last)) = (cfg.periods.first(), cfg.periods.last()) else {
        return Ok(Vec::new());
    };
    if first.label == last.label {
        return Ok(Vec::new());
    }
    let mut by_zone: BTreeMap<&str, (Option<&NfdMetrics>, Option<&NfdMetrics>)> = BTreeMap::new();
    for m in metrics {
        let e = by_zone.entry(&m.zone_id).or_default();
        if m.period_label == first.label {
            e.0 = Some(m);
        } else if m.period_label == last.label {
            e.1 = Some(m);
        }
    }
    by_zone
        .into_values()
        .filter_map(|(b, a)| Some((b?, a?)))
        .map(|(b, a)| compare_periods(b, a))
        .collect::<Result<_>>()
        .stage("compare")
}

fn row(cells: &[String], widths: &[usize]) -> String {
    let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
    padded.join(" | ").trim_end().to_string() + "\n"
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|i| rows.iter().filter_map(|r| r.get(i)).map(|c| c.chars().count()).max().unwrap_or(0))
        .collect();
    rows.iter().map(|r| row(r, &widths)).collect()
}

/// Plain-text results table: one row per metric and zone, absolute values
/// for both periods and the percent change.
pub fn render_summary(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "s = {} km", report.s_km);
    out.push('\n');
    if report.comparisons.is_empty() {
        let mut rows = vec![vec![
            "Zone".to_string(),
            "Period".into(),
            "Capacity (veh/lane-km/h)".into(),
            "Critical density (veh/lane-km)".into(),
            "Free-flow speed (km/h)".into(),
        ]];
        for m in &report.metrics {
            rows.push(vec![
                m.zone_id.clone(),
                m.period_label.clone(),
                format!("{:.1}", m.capacity),
                format!("{:.1}", m.critical_density),
                format!("{:.1}", m.free_flow_speed),
            ]);
        }
        out.push_str(&table(&rows));
        return out;
    }
    let mut rows = vec![vec![
        "Zone".to_string(),
        "Metric".into(),
        "Absolute".into(),
        String::new(),
        "Percentual Change".into(),
    ]];
    for c in &report.comparisons {
        rows.push(vec![
            String::new(),
            String::new(),
            c.before_period.clone(),
            c.after_period.clone(),
            String::new(),
        ]);
        for (i, (label, unit, ch)) in c.rows().into_iter().enumerate() {
            rows.push(vec![
                if i == 0 { c.zone_id.clone() } else { String::new() },
                format!("{label} ({unit})"),
                format!("{:.1}", ch.before),
                format!("{:.1}", ch.after),
                format_percent(ch.percent_change),
            ]);
        }
    }
    out.push_str(&table(&rows));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Effective configuration with every default filled in.
    pub config: serde_json::Value,
    pub s_km: f64,
    pub inputs: Vec<InputChecksum>,
    pub outputs: Vec<PathBuf>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Manifest for a run. The output directory is left out so that identical
/// studies written to different places produce identical manifests.
pub fn build_manifest(cfg: &StudyConfig, s_km: f64, outputs: Vec<PathBuf>) -> Result<Manifest> {
    let mut config = serde_json::to_value(cfg)?;
    if let Some(obj) = config.as_object_mut() {
        obj.remove("output_dir");
    }
    let inputs = cfg
        .inputs()
        .into_iter()
        .map(|p| {
            Ok(InputChecksum {
                sha256: sha256_file(&cfg.resolve(&p))?,
                path: p,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
        s_km,
        inputs,
        outputs,
    })
}

/// Writes `report.json`, `summary.txt` and, last, `manifest.json`.
pub fn write_report(out: &mut OutputDir, cfg: &StudyConfig, report: &Report) -> Result<Manifest> {
    let run = |out: &mut OutputDir| -> Result<Manifest> {
        out.write_json("report.json", report)?;
        out.write_text("summary.txt", &render_summary(report))?;
        let mut outputs: Vec<PathBuf> = out.written().map(Path::to_path_buf).collect();
        outputs.push("manifest.json".into());
        outputs.sort();
        let manifest = build_manifest(cfg, report.s_km, outputs)?;
        out.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    };
    run(out).stage("report")
}

fn write_period_files(out: &mut OutputDir, data: &PeriodData) -> Result<()> {
    out.write_json(Path::new(&data.label).join("coverage.json"), &data.coverage)?;
    out.write_with(Path::new(&data.label).join("matches.csv"), |w| write_match_report(&data.matches, w))?;
    let summary: LaneSourceSummary = lane_source_summary(&data.matches);
    out.write_json(Path::new(&data.label).join("lane_sources.json"), &summary)?;
    Ok(())
}

fn load_all(cfg: &StudyConfig) -> Result<(ZoneSet, Vec<PeriodData>)> {
    let zones = load_zones(cfg)?;
    let periods = cfg
        .periods
        .iter()
        .map(|p| prepare_period(cfg, p, &zones))
        .collect::<Result<Vec<_>>>()?;
    Ok((zones, periods))
}

/// `ingest`: coverage report per period.
pub fn run_ingest(cfg: &StudyConfig) -> Result<OutputDir> {
    cfg.validate()?;
    let mut out = OutputDir::new(cfg.output_path());
    for p in &cfg.periods {
        let (_, coverage) = ingest_period(cfg, p)?;
        out.write_json(Path::new(&p.label).join("coverage.json"), &coverage)
            .stage("ingest")?;
    }
    Ok(out)
}

/// `match`: detector-to-way match report per period.
pub fn run_match(cfg: &StudyConfig) -> Result<OutputDir> {
    cfg.validate()?;
    let zones = load_zones(cfg)?;
    let mut out = OutputDir::new(cfg.output_path());
    for p in &cfg.periods {
        let matches = match_period(cfg, p, &zones)?;
        out.write_with(Path::new(&p.label).join("matches.csv"), |w| write_match_report(&matches, w))
            .stage("match")?;
        out.write_json(Path::new(&p.label).join("lane_sources.json"), &lane_source_summary(&matches))
            .stage("match")?;
    }
    Ok(out)
}

/// `calibrate`: writes `calibration.json`.
pub fn run_calibrate(cfg: &StudyConfig) -> Result<(OutputDir, CalibrationOutcome)> {
    cfg.validate()?;
    let zones = load_zones(cfg)?;
    let periods: Vec<PeriodData> = match cfg.calibration_period() {
        Some(p) if cfg.fixed_s().is_none() => vec![prepare_period(cfg, p, &zones)?],
        _ => Vec::new(),
    };
    let outcome = calibrate(cfg, &periods)?;
    let mut out = OutputDir::new(cfg.output_path());
    out.write_json("calibration.json", &outcome).stage("calibrate")?;
    Ok((out, outcome))
}

/// Everything a full run computes, kept in memory.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub calibration: CalibrationOutcome,
    pub periods: Vec<PeriodData>,
    pub estimates: Vec<ZoneEstimate>,
    pub report: Report,
}

fn estimate_all(cfg: &StudyConfig, out: &mut OutputDir) -> Result<StudyResult> {
    let (zones, periods) = load_all(cfg)?;
    let calibration = calibrate(cfg, &periods)?;
    let s = CalibrationScalar::new(calibration.s_km).stage("calibrate")?;
    for data in &periods {
        write_period_files(out, data).stage("match")?;
    }
    out.write_json("calibration.json", &calibration).stage("calibrate")?;

    let mut estimates = Vec::new();
    for zone in selected_zones(cfg, &zones) {
        for data in &periods {
            if zone_detectors(data, &zone).is_empty() {
                log::warn!("zone {zone} has no reporting detectors in period {}; skipped", data.label);
                continue;
            }
            let est = estimate_zone(cfg, data, &zone, s)?;
            let dir = Path::new(&zone).join(&data.label);
            let write = |out: &mut OutputDir| -> Result<()> {
                out.write_with(dir.join("envelope.csv"), |w| write_envelope(&est.envelope, w))?;
                out.write_json(dir.join("metrics.json"), &est.metrics)?;
                if cfg.states_dump {
                    let states: Vec<_> = compute_states(&data.table, &data.matches, s)
                        .into_iter()
                        .filter(|st| st.zone_id == zone)
                        .collect();
                    out.write_with(dir.join("states.csv"), |w| write_states(&states, w))?;
                    out.write_with(dir.join("cloud.csv"), |w| write_cloud(&est.cloud, w))?;
                }
                Ok(())
            };
            write(out).stage("estimate")?;
            log::info!(
                "zone {zone} period {}: capacity {:.1}, critical density {:.1}, free-flow speed {:.1}",
                data.label,
                est.metrics.capacity,
                est.metrics.critical_density,
                est.metrics.free_flow_speed
            );
            estimates.push(est);
        }
    }
    if estimates.is_empty() {
        return Err(Error::NoData("no zone has reporting detectors".into())).stage("estimate");
    }
    let metrics: Vec<NfdMetrics> = estimates.iter().map(|e| e.metrics.clone()).collect();
    let comparisons = compare_first_last(cfg, &metrics)?;
    for c in &comparisons {
        out.write_json(Path::new(&c.zone_id).join("comparison.json"), c)
            .stage("compare")?;
    }
    Ok(StudyResult {
        report: Report {
            s_km: calibration.s_km,
            metrics,
            comparisons,
        },
        calibration,
        periods,
        estimates,
    })
}

/// `estimate`: envelopes, metrics and comparisons, without the report.
pub fn run_estimate(cfg: &StudyConfig) -> Result<(OutputDir, StudyResult)> {
    cfg.validate()?;
    let mut out = OutputDir::new(cfg.output_path());
    let result = estimate_all(cfg, &mut out)?;
    Ok((out, result))
}

/// `compare`: reads `{zone}/{period}/metrics.json` from a previous
/// `estimate` and writes the comparisons.
pub fn run_compare(cfg: &StudyConfig) -> Result<(OutputDir, Vec<ChangeReport>)> {
    let mut out = OutputDir::new(cfg.output_path());
    let (Some(first), Some(last)) = (cfg.periods.first(), cfg.periods.last()) else {
        return Err(Error::Config("at least one [[periods]] entry is required".into()));
    };
    let mut metrics = Vec::new();
    let read = |p: &Path| -> Result<NfdMetrics> {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        Ok(serde_json::from_str(&text)?)
    };
    let entries = fs::read_dir(out.root()).map_err(|e| Error::io(out.root(), e)).stage("compare")?;
    let mut zones: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    zones.sort();
    for zone_dir in zones {
        for label in [&first.label, &last.label] {
            let p = zone_dir.join(label).join("metrics.json");
            if p.is_file() {
                metrics.push(read(&p).stage("compare")?);
            }
        }
    }
    let comparisons = compare_first_last(cfg, &metrics)?;
    for c in &comparisons {
        out.write_json(Path::new(&c.zone_id).join("comparison.json"), c)
            .stage("compare")?;
    }
    Ok((out, comparisons))
}

/// `run`: the whole study, finishing with the report and manifest.
pub fn run_pipeline(cfg: &StudyConfig) -> Result<(OutputDir, StudyResult)> {
    cfg.validate()?;
    let mut out = OutputDir::new(cfg.output_path());
    let result = estimate_all(cfg, &mut out)?;
    write_report(&mut out, cfg, &result.report)?;
    Ok((out, result))
}
