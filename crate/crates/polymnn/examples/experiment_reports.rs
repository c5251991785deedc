//! Drive the experiment harness end to end: parse a config, run it, write
//! the report and CSVs, and read the report back.
//!
//! ```bash
//! cargo run --example experiment_reports
//! ```

use polymnn::exp::{emit_report, run, ExperimentConfig, RunReport};
use std::path::Path;

fn main() -> polymnn::Result<()> {
    // a deliberately small run: two baselines on one epidemic duration
    let config = ExperimentConfig::parse(
        "experiment = sir_duration\n\
         models = lr, rf\n\
         durations = 6\n\
         lag = 1\n\
         seed = 5\n",
    )?;
    let report = run(&config)?;

    let out = Path::new("runs/example");
    for path in emit_report(&report, out)? {
        println!("wrote {}", path.display());
    }

    let loaded = RunReport::load(&out.join("report.json"))?;
    assert_eq!(loaded.body_json()?, report.body_json()?);
    println!("\nreport round-trips byte-identically; cells:");
    for cell in &loaded.body.cells {
        let rrse = cell.metrics.as_ref().map_or(f64::NAN, |m| m.rrse);
        println!("  {:3} {} {:5} rrse {:.4}", cell.model, cell.target, cell.split, rrse);
    }
    Ok(())
}
