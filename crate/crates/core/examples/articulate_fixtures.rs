//! Writes the synthetic fixture corpus and articulates every object with the mock oracle.
//!
//! cargo run --release --example articulate_fixtures [out_dir]

use std::path::PathBuf;

use jointsmith::eval::{evaluate_run, pair_records, read_records};
use jointsmith::pipeline::{cmd_articulate, cmd_fixtures, Overrides, RunConfig};

fn main() -> jointsmith::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jointsmith-fixtures"));
    let mut paired = Vec::new();
    for config_path in cmd_fixtures(&out, 0)? {
        let config = RunConfig::load(&config_path, &Overrides::default())?;
        let summary = cmd_articulate(&config)?;
        for j in &summary.joints {
            println!("{:<14} {:<10} {:?}", j.name, j.joint_type, j.error.as_deref().map_or_else(|| format!("{:?}", j.solver), str::to_string));
        }
        let pred = read_records(&summary.out_dir.join("predictions.json"))?;
        let gt = read_records(&config_path.with_file_name("ground_truth.json"))?;
        paired.extend(pair_records(&pred.joints, &gt.joints)?);
    }
    print!("\n{}", evaluate_run(&paired)?.table());
    println!("runs under {}", out.display());
    Ok(())
}
