//! Reads an hourly detector CSV, reports rejected rows and keeps complete
//! weekdays only.

use nfdlab::ingest::{filter_complete_days, read_measurements, summarize_coverage, ParseOptions};

fn main() -> nfdlab::Result<()> {
    let mut csv = String::from("detector_id,date,hour,flow_veh_h,occupancy\n");
    // d1 reports every analysis hour on Monday; d2 misses 17:00
    for hour in 5..=22 {
        csv.push_str(&format!("d1,2023-03-13,{hour},{},0.{:02}\n", 300 + hour * 20, hour));
        if hour != 17 {
            csv.push_str(&format!("d2,2023-03-13,{hour},{},0.{:02}\n", 250 + hour * 15, hour + 3));
        }
    }
    // Saturday, out-of-window hour, and a malformed occupancy
    csv.push_str("d1,2023-03-18,8,400,0.1\n");
    csv.push_str("d1,2023-03-14,3,90,0.01\n");
    csv.push_str("d2,2023-03-14,9,400,1.7\n");

    let table = read_measurements(csv.as_bytes(), "2023", &ParseOptions::default())?;
    let stats = table.rejections();
    println!("read {} rows, rejected {}", stats.total_rows, stats.rejected_rows);
    for (reason, n) in &stats.by_reason {
        println!("  {reason:?}: {n}");
    }

    let complete = filter_complete_days(&table);
    let coverage = summarize_coverage(&complete);
    println!("{} records on complete weekdays", complete.len());
    for (detector, days) in &coverage.detector_days {
        println!("  {detector}: {days} day(s)");
    }
    Ok(())
}
