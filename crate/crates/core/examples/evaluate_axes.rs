//! Scores predicted joint axes against ground truth.

use jointsmith::eval::{axis_angle_error, axis_position_error, evaluate_run, JointPrediction};
use jointsmith::geometry::Line;
use jointsmith::joints::JointType;
use nalgebra::{Point3, Vector3};

fn main() -> jointsmith::Result<()> {
    let truth = Line::new(Point3::new(0.0, 0.0, 0.0), Vector3::z());
    let tilted = Line::new(Point3::new(0.01, 0.0, 0.0), Vector3::new(0.0, 0.02, 1.0).normalize());
    println!("angle {:.3}°, position {:.4}", axis_angle_error(&tilted, &truth), axis_position_error(&tilted, &truth));
    // the axis sign carries no meaning
    println!("reversed angle {:.3}°", axis_angle_error(&tilted.reversed(), &truth));

    let run = [
        JointPrediction {
            id: "lid".into(),
            joint_type: JointType::Revolute,
            predicted: tilted,
            ground_truth: truth,
        },
        JointPrediction {
            id: "drawer".into(),
            joint_type: JointType::Prismatic,
            predicted: Line::new(Point3::origin(), Vector3::new(1.0, 0.01, 0.0).normalize()),
            ground_truth: Line::new(Point3::new(0.0, 0.5, 0.0), Vector3::x()),
        },
    ];
    print!("{}", evaluate_run(&run)?.table());
    Ok(())
}
