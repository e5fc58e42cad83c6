//! Percent changes between two periods and the summary table layout.

use nfdlab::metrics::compare_periods;
use nfdlab::pipeline::{render_summary, Report};
use nfdlab::NfdMetrics;

fn metrics(zone: &str, period: &str, capacity: f64, critical_density: f64, free_flow_speed: f64) -> NfdMetrics {
    NfdMetrics {
        zone_id: zone.into(),
        period_label: period.into(),
        capacity,
        critical_density,
        free_flow_speed,
    }
}

fn main() -> nfdlab::Result<()> {
    let before = [metrics("Zone 1", "2010", 854.0, 21.2, 52.3), metrics("Zone 2", "2010", 545.0, 21.7, 33.4)];
    let after = [metrics("Zone 1", "2023", 395.0, 26.1, 21.0), metrics("Zone 2", "2023", 357.0, 20.6, 19.8)];

    let comparisons = before
        .iter()
        .zip(&after)
        .map(|(b, a)| compare_periods(b, a))
        .collect::<nfdlab::Result<Vec<_>>>()?;
    let report = Report {
        s_km: 0.0055,
        metrics: before.iter().chain(&after).cloned().collect(),
        comparisons,
    };
    print!("{}", render_summary(&report));

    if let Err(e) = compare_periods(&before[0], &after[1]) {
        println!("\nmixing zones: {e}");
    }
    Ok(())
}
