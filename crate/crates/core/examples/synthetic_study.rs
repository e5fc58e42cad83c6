//! Writes a two-period synthetic study to disk and runs the full pipeline
//! on it, as `nfdlab synth` followed by `nfdlab run` would.
//!
//!     cargo run --example synthetic_study -- /tmp/nfd-study

use std::path::PathBuf;

use nfdlab::pipeline::{render_summary, run_pipeline};
use nfdlab::synthlab::{demo_study, write_study};
use nfdlab::StudyConfig;

fn main() -> nfdlab::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("nfdlab-synthetic-study"));

    write_study(&demo_study(7), &dir, 7)?;
    let config = StudyConfig::load(dir.join("study.toml"))?;
    let (out, result) = run_pipeline(&config)?;

    print!("{}", render_summary(&result.report));
    println!();
    for file in out.written() {
        println!("{}", out.root().join(file).display());
    }
    Ok(())
}
