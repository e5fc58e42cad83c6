//! Draws detector subsets, pools their states and reduces the cloud to an
//! envelope, then reads off capacity, critical density and free-flow speed.

use nfdlab::conflation::{assign_lanes, assign_zones, match_detectors, MatchParams};
use nfdlab::metrics::{estimate_metrics, MetricsParams};
use nfdlab::network::{filter_higher_order, lane_class_means};
use nfdlab::resampling::{cloud_points, draw_subsamples, extract_envelope, pool_states, write_envelope, ResampleParams, ZoneDetector};
use nfdlab::synthlab::{generate_scenario, ground_truth_metrics, SynthScenario};
use nfdlab::CalibrationScalar;

fn main() -> nfdlab::Result<()> {
    let scenario = SynthScenario {
        detector_count: 80,
        days: 60,
        ..Default::default()
    };
    let synth = generate_scenario(&scenario)?;
    let network = filter_higher_order(&synth.network);
    let mut matches = assign_lanes(
        match_detectors(&synth.detectors, &network, &MatchParams::default())?,
        &lane_class_means(&network)?,
    );
    assign_zones(&mut matches, &synth.zones)?;

    let params = ResampleParams { seed: 42, ..Default::default() };
    let zone: Vec<ZoneDetector> = matches.iter().map(ZoneDetector::from).collect();
    let subsets = draw_subsamples(&zone, params.subsample_count, params.length_fraction, params.seed)?;
    println!(
        "{} subsets, {} to {} detectors each",
        subsets.len(),
        subsets.iter().map(|s| s.detector_ids.len()).min().unwrap_or(0),
        subsets.iter().map(|s| s.detector_ids.len()).max().unwrap_or(0)
    );

    let cloud = pool_states(&subsets, &synth.measurements, &matches, CalibrationScalar::new(scenario.s_true)?)?;
    let envelope = extract_envelope(cloud_points(&cloud), &params, "Z1", &scenario.period_label)?;
    println!("{} cloud points, {} envelope bins", cloud.len(), envelope.bins.len());

    let mut csv = Vec::new();
    write_envelope(&envelope, &mut csv)?;
    for line in String::from_utf8_lossy(&csv).lines().take(16) {
        println!("  {line}");
    }

    let got = estimate_metrics(&envelope, cloud_points(&cloud), &MetricsParams::default())?;
    let truth = ground_truth_metrics(&scenario.fd, "Z1", &scenario.period_label);
    println!("capacity         {:>7.1}  (true {:.1})", got.capacity, truth.capacity);
    println!("critical density {:>7.2}  (true {:.2})", got.critical_density, truth.critical_density);
    println!("free-flow speed  {:>7.2}  (true {:.2})", got.free_flow_speed, truth.free_flow_speed);
    Ok(())
}
