//! Sweeps a lid about its hinge and reports where the stop wall and the base block it.

use jointsmith::asset_io::SampleOptions;
use jointsmith::fixtures::{lid_box, FIXTURE_DENSITY};
use jointsmith::joints::{orient_revolute_axis, validate_revolute_limits, SweepSettings};

fn main() -> jointsmith::Result<()> {
    let fixture = lid_box(0);
    let object = fixture.object(&SampleOptions {
        density: Some(FIXTURE_DENSITY),
        ..Default::default()
    })?;
    let mut tree = fixture.tree(&object)?;
    let j = tree.joint_index("lid_hinge").expect("lid joint");
    orient_revolute_axis(&object, &mut tree, j, 2.0);
    println!("axis {:?}", tree.joints[j].axis.direction.as_slice());
    let report = validate_revolute_limits(&object, &tree, j, &SweepSettings::default())?;
    println!(
        "limits {:?}°, blocked below {:?}, blocked above {:?}, rest penetration {:.4}",
        report.limits, report.blocked_lower, report.blocked_upper, report.rest_fraction
    );
    Ok(())
}
