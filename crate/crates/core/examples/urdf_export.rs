//! Exports a fixture's true articulation as URDF and reads it back.
//!
//! cargo run --example urdf_export [out_dir]

use std::path::PathBuf;

use jointsmith::asset_io::{export_urdf, read_urdf, SampleOptions};
use jointsmith::fixtures::hinged_box;

fn main() -> jointsmith::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("jointsmith-urdf"));
    let fixture = hinged_box(0);
    let object = fixture.object(&SampleOptions::default())?;
    let tree = fixture.tree(&object)?;
    let manifest = export_urdf(&tree, &object.normalization, &out)?;
    let robot = read_urdf(&out.join(&manifest.urdf))?;
    println!("{} with {} links", robot.name, robot.links.len());
    for j in &robot.joints {
        println!("{:<10} {:<9} {} -> {} axis {:?} limit {:?}", j.name, j.joint_type, j.parent, j.child, j.axis, j.limit);
    }
    println!("wrote {}", out.join(&manifest.urdf).display());
    Ok(())
}
