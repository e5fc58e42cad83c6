//! Calibrates the effective vehicle length `s` against hourly reference
//! speeds and compares it with the value used to generate the data.

use std::collections::BTreeMap;

use nfdlab::conflation::{assign_lanes, assign_zones, match_detectors, MatchParams};
use nfdlab::network::{filter_higher_order, lane_class_means};
use nfdlab::nfd::{calibrate_s, mean_speed_at_hour, ReferenceSpeed};
use nfdlab::synthlab::{generate_scenario, SynthScenario};

fn main() -> nfdlab::Result<()> {
    let scenario = SynthScenario {
        detector_count: 50,
        days: 15,
        s_true: 0.0055,
        ..Default::default()
    };
    let synth = generate_scenario(&scenario)?;
    let network = filter_higher_order(&synth.network);
    let mut matches = assign_lanes(
        match_detectors(&synth.detectors, &network, &MatchParams::default())?,
        &lane_class_means(&network)?,
    );
    assign_zones(&mut matches, &synth.zones)?;

    // two early-morning reference hours, as a traffic-speed service would supply
    let truth: BTreeMap<u8, f64> = synth.truth.reference_speeds.iter().map(|r| (r.hour, r.speed_kmh)).collect();
    let reference: Vec<ReferenceSpeed> = [5, 6]
        .iter()
        .map(|&hour| ReferenceSpeed { hour, speed_kmh: truth[&hour] })
        .collect();

    let cal = calibrate_s(&synth.measurements, &matches, &reference)?;
    for h in &cal.per_hour {
        println!(
            "hour {:>2}: reference {:.2} km/h, Q {:.1}, O {:.4} -> s {:.6} km",
            h.hour, h.reference_speed_kmh, h.mean_lane_flow, h.mean_occupancy, h.s_km
        );
    }
    println!("s = {:.6} km (generated with {})", cal.s.km(), scenario.s_true);
    for hour in [5, 8, 17] {
        println!("  implied speed at {hour}:00 {:.1} km/h", mean_speed_at_hour(&synth.measurements, &matches, cal.s, hour)?);
    }
    Ok(())
}
