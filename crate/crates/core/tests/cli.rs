use std::path::Path;
use std::process::{Command, Output};

fn jointsmith(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jointsmith"))
        .args(args)
        .current_dir(cwd)
        .env_remove("JOINTSMITH_API_KEY")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = jointsmith(&["fixtures", "--out", "fx", "--seed", "0"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let wheel = "fx/spinning_wheel/config.toml";

    let o = jointsmith(&["articulate", "--config", wheel, "--out", "run"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wheel_spin"));
    assert!(d.join("run/predictions.json").exists());

    // a joint the replay store cannot answer fails alone
    std::fs::create_dir_all(d.join("empty")).unwrap();
    std::fs::write(
        d.join("replay.toml"),
        std::fs::read_to_string(d.join(wheel)).unwrap().replace("[oracle]", "[oracle]\ntranscripts = \"../../empty\""),
    )
    .unwrap();
    std::fs::rename(d.join("replay.toml"), d.join("fx/spinning_wheel/replay.toml")).unwrap();
    let o = jointsmith(&["articulate", "--config", "fx/spinning_wheel/replay.toml", "--oracle", "replay", "--out", "r2"], d);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));

    let eval = jointsmith(&["eval", "run/predictions.json", "fx/spinning_wheel/ground_truth.json"], d);
    assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(!eval.stdout.is_empty());
    assert_eq!(code(&jointsmith(&["export-urdf", "--config", wheel, "--out", "run"], d)), 0);

    // configuration errors
    assert_eq!(code(&jointsmith(&["articulate"], d)), 2);
    assert_eq!(code(&jointsmith(&["articulate", "--config", "missing.toml"], d)), 2);
    std::fs::write(d.join("bad.toml"), "[input]\ncolour = 1\n").unwrap();
    assert_eq!(code(&jointsmith(&["articulate", "--config", "bad.toml"], d)), 2);
    let with_endpoint = std::fs::read_to_string(d.join(wheel)).unwrap() + "\n[oracle.remote]\nendpoint = \"http://127.0.0.1:9/v1\"\n";
    std::fs::write(d.join("fx/spinning_wheel/remote.toml"), with_endpoint).unwrap();
    let remote = jointsmith(&["articulate", "--config", "fx/spinning_wheel/remote.toml", "--oracle", "remote", "--out", "r3"], d);
    assert_eq!(code(&remote), 2, "{}", String::from_utf8_lossy(&remote.stderr));
    assert_eq!(code(&jointsmith(&["eval", "nope.json", "nope.json"], d)), 2);
    assert_ne!(code(&jointsmith(&["articulate", "--oracle", "psychic"], d)), 0);
}
