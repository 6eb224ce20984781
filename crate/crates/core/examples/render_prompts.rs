//! Renders the annotated hinge and arrow images the oracle would be shown, without asking it.
//!
//! cargo run --release --example render_prompts [out_dir]

use std::path::PathBuf;

use jointsmith::pipeline::{cmd_fixtures, cmd_prompts, Overrides, RunConfig};

fn main() -> jointsmith::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jointsmith-prompts"));
    for config_path in cmd_fixtures(&out, 0)? {
        let config = RunConfig::load(&config_path, &Overrides::default())?;
        for image in cmd_prompts(&config, None)? {
            println!("{}", image.display());
        }
    }
    Ok(())
}
