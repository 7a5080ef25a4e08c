//! Drive the experiment runner from an in-memory config and read back the CSV.

use scrambling::runner::{run, ExperimentConfig, RunOptions};

fn main() -> scrambling::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "experiment": "qfi-sweep",
            "seed": 1,
            "output_path": "free-drive",
            "parameters": { "g": 0.0, "order": 3, "times": [1, 2, 4] }
        }"#,
    )?;
    let dir = std::env::temp_dir().join("scrambling-example");
    let out = run(&cfg, &RunOptions { out_dir: dir, ..Default::default() })?;
    let csv = out.csv.expect("qfi-sweep writes a table");
    println!("{}", std::fs::read_to_string(&csv)?);
    println!("sidecar at {}", out.sidecar.display());

    // misspelled keys are rejected with the accepted set
    let bad = ExperimentConfig::from_json(r#"{"experiment": "qfi-sweep", "parameters": {"g": 0.1, "order": 3, "times": [1], "lamda": 2}}"#)?;
    if let Err(e) = run(&bad, &RunOptions::default()) {
        println!("rejected: {e}");
    }
    Ok(())
}
