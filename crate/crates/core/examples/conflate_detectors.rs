//! Matches jittered detector geometries to a grid with parallel decoy
//! roads, then attaches lane counts and zones.

use nfdlab::conflation::{assign_lanes, assign_zones, lane_source_summary, match_detectors, write_match_report, MatchParams};
use nfdlab::network::{filter_higher_order, lane_class_means};
use nfdlab::synthlab::{generate_scenario, Jitter, SynthScenario};

fn main() -> nfdlab::Result<()> {
    let scenario = SynthScenario {
        grid_rows: 5,
        grid_cols: 6,
        detector_count: 30,
        days: 1,
        jitter: Jitter { max_offset_m: 10.0, max_rotation_deg: 5.0 },
        distractor_offset_m: Some(50.0),
        split_zones: true,
        ..Default::default()
    };
    let synth = generate_scenario(&scenario)?;
    let network = filter_higher_order(&synth.network);

    let raw = match_detectors(&synth.detectors, &network, &MatchParams::default())?;
    let correct = raw
        .iter()
        .filter(|m| m.way.as_ref().map(|w| &w.way_id) == synth.truth.true_way.get(&m.detector_id))
        .count();
    println!("{correct}/{} detectors on their true way", raw.len());

    let mut matches = assign_lanes(raw, &lane_class_means(&network)?);
    assign_zones(&mut matches, &synth.zones)?;
    println!("{:?}", lane_source_summary(&matches));

    let mut report = Vec::new();
    write_match_report(&matches[..5], &mut report)?;
    print!("{}", String::from_utf8_lossy(&report));
    Ok(())
}
