use std::path::{Path, PathBuf};

use jointsmith::eval::{evaluate_files, read_records};
use jointsmith::pipeline::{
    cmd_articulate, cmd_eval, cmd_export_urdf, cmd_fixtures, cmd_prompts, cmd_refine, BackendChoice, Overrides, RunConfig,
};

fn fixture(dir: &Path, name: &str) -> PathBuf {
    cmd_fixtures(dir, 0)
        .unwrap()
        .into_iter()
        .find(|p| p.parent().unwrap().ends_with(name))
        .unwrap()
}

fn load(config: &Path, backend: BackendChoice, out: &Path) -> RunConfig {
    RunConfig::load(
        config,
        &Overrides {
            seed: Some(0),
            backend: Some(backend),
            out_dir: Some(out.to_path_buf()),
        },
    )
    .unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn replay_reproduces_a_mock_run_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), "hinged_box");
    let first = cmd_articulate(&load(&config, BackendChoice::Mock, &dir.path().join("a"))).unwrap();
    assert_eq!(first.failures(), 0);

    let mut replay = load(&config, BackendChoice::Mock, &dir.path().join("b"));
    replay.oracle.backend = BackendChoice::Replay;
    replay.oracle.transcripts = Some(first.out_dir.join("transcripts"));
    replay.validate().unwrap();
    let second = cmd_articulate(&replay).unwrap();

    for f in ["joints.json", "predictions.json", "tree.json"] {
        assert_eq!(read(first.out_dir.join(f)), read(second.out_dir.join(f)), "{f}");
    }
    let urdf = |s: &jointsmith::pipeline::RunSummary| read(s.out_dir.join("urdf").join(&s.urdf.urdf));
    assert_eq!(urdf(&first), urdf(&second));
}

#[test]
fn replay_without_a_recorded_answer_fails_the_joint() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), "hinged_box");
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let mut c = load(&config, BackendChoice::Mock, &dir.path().join("out"));
    c.oracle.backend = BackendChoice::Replay;
    c.oracle.transcripts = Some(empty);
    let summary = cmd_articulate(&c).unwrap();
    assert_eq!(summary.failures(), 1);
    let predictions = read_records(&summary.out_dir.join("predictions.json")).unwrap();
    assert!(predictions.joints.is_empty());
}

#[test]
fn saved_prompts_are_reused_only_when_the_key_matches() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), "hinged_box");
    let staged = dir.path().join("staged");
    let written = cmd_prompts(&load(&config, BackendChoice::Mock, &staged), None).unwrap();
    assert_eq!(written.len(), 1);
    let image = &written[0];
    assert!(image.ends_with("lid_hinge/hinge_both.png"));
    // mark the staged image so a reuse is visible in the run's own copy
    let mut marked = read(image);
    marked.extend_from_slice(b"reused");
    std::fs::write(image, &marked).unwrap();

    let mut c = load(&config, BackendChoice::Mock, &dir.path().join("run"));
    c.run.prompts_dir = Some(staged.join("prompts"));
    let summary = cmd_articulate(&c).unwrap();
    assert_eq!(summary.failures(), 0);
    assert_eq!(read(summary.out_dir.join("prompts/lid_hinge/hinge_both.png")), marked);

    c.run.seed = 1;
    c.run.out_dir = dir.path().join("other");
    let summary = cmd_articulate(&c).unwrap();
    assert_ne!(read(summary.out_dir.join("prompts/lid_hinge/hinge_both.png")), marked);
}

#[test]
fn prompts_follow_joint_hints() {
    let dir = tempfile::tempdir().unwrap();
    let window = fixture(dir.path(), "sliding_window");
    let written = cmd_prompts(&load(&window, BackendChoice::Mock, &dir.path().join("w")), None).unwrap();
    assert_eq!(written.len(), 1);
    assert!(written[0].ends_with("pane_slide/arrows.png"));

    let drawer = fixture(dir.path(), "drawer_cabinet");
    let mut c = load(&drawer, BackendChoice::Mock, &dir.path().join("d"));
    c.joints.clear();
    c.joints.insert(
        "drawer_slide".into(),
        jointsmith::pipeline::JointHints {
            topology: None,
            prismatic: Some(jointsmith::pipeline::PrismaticHint::InOut),
        },
    );
    assert!(cmd_prompts(&c, None).unwrap().is_empty(), "in/out sliders need no image");
    assert!(cmd_prompts(&c, Some("missing")).is_err());
}

#[test]
fn eval_export_and_refine_work_from_a_finished_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), "spinning_wheel");
    let mut c = load(&config, BackendChoice::Mock, &dir.path().join("run"));
    let summary = cmd_articulate(&c).unwrap();
    let fixture_dir = config.parent().unwrap();

    let report = cmd_eval(
        &summary.out_dir.join("predictions.json"),
        &fixture_dir.join("ground_truth.json"),
        Some(&dir.path().join("report")),
    )
    .unwrap();
    assert_eq!(report.count, 1);
    assert!(report.mean_angle_error < 0.1);
    assert!(dir.path().join("report/report.json").exists());
    assert_eq!(report, evaluate_files(&summary.out_dir.join("predictions.json"), &fixture_dir.join("ground_truth.json")).unwrap());

    let urdf = summary.out_dir.join("urdf").join(&summary.urdf.urdf);
    let before = read(&urdf);
    std::fs::remove_file(&urdf).unwrap();
    cmd_export_urdf(&c).unwrap();
    assert_eq!(read(&urdf), before);

    c.refine.iterations = 5;
    c.render.image_size = (64, 64);
    let objective = cmd_refine(&c).unwrap().unwrap();
    assert!(objective.is_finite());
    let trace = std::fs::read_to_string(summary.out_dir.join("refine/trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 5);
}

#[test]
fn free_turning_revolute_joints_keep_declared_stops() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path(), "knob_panel");
    let c = load(&config, BackendChoice::Mock, &dir.path().join("declared"));
    cmd_articulate(&c).unwrap();
    let (_, tree) = jointsmith::pipeline::load_run(&c).unwrap();
    assert_eq!(tree.joints[0].joint_type, jointsmith::joints::JointType::Revolute);
    assert_eq!(tree.joints[0].limits, Some([0.0, 270.0]));

    let tree_file = config.with_file_name("tree.txt");
    let text = std::fs::read_to_string(&tree_file).unwrap();
    assert!(text.contains("joint_limit: [0, 270]"), "{text}");
    std::fs::write(&tree_file, text.replace("joint_limit: [0, 270]", "joint_limit: [-360, 360]")).unwrap();
    let c = load(&config, BackendChoice::Mock, &dir.path().join("open"));
    cmd_articulate(&c).unwrap();
    let (_, tree) = jointsmith::pipeline::load_run(&c).unwrap();
    assert_eq!(tree.joints[0].joint_type, jointsmith::joints::JointType::Continuous);
    assert_eq!(tree.joints[0].limits, None);
}
