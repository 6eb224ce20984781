//! Pulls a part toward a target sphere while its joint is posed at random.

use jointsmith::asset_io::SampleOptions;
use jointsmith::fixtures::hinged_box;
use jointsmith::kinematics::{refinement_loop, SdfPull, SphereTarget};
use jointsmith::viewprompt::RenderSettings;

fn main() -> jointsmith::Result<()> {
    let fixture = hinged_box(0);
    let object = fixture.object(&SampleOptions::default())?;
    let tree = fixture.tree(&object)?;
    let lid = object.part("lid").expect("lid part");
    let center = lid.cloud.points.iter().fold(nalgebra::Vector3::zeros(), |a, p| a + p.coords) / lid.cloud.points.len() as f64;
    let mut pull = SdfPull {
        targets: vec![SphereTarget {
            part: "lid".into(),
            center: center.into(),
            radius: 0.2,
        }],
        rate: 0.1,
        penetration_weight: 1.0,
    };
    let settings = RenderSettings {
        image_size: (64, 64),
        ..Default::default()
    };
    let done = refinement_loop(&object, &tree, &mut pull, 60, 0, &settings).map_err(|f| f.error)?;
    for step in done.trace.iter().step_by(10) {
        println!("iteration {:>3} objective {:.5}", step.iteration, step.objective);
    }
    Ok(())
}
