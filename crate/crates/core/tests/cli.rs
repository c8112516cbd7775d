use std::process::Command;

fn qdiscord(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qdiscord"))
        .args(args)
        .output()
        .expect("spawn qdiscord")
}

#[test]
fn exit_statuses() {
    assert_eq!(qdiscord(&["levels", "--step", "0.5"]).status.code(), Some(0));
    assert_eq!(qdiscord(&["levels", "--step", "0"]).status.code(), Some(2));
    assert_eq!(qdiscord(&["oracle-check", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(qdiscord(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(qdiscord(&["sweep", "--t=-1", "--step", "0.5"]).status.code(), Some(1));
}

#[test]
fn seeded_experiment_is_byte_identical() {
    let args = ["experiment", "--noise", "0.05", "--seed", "11"];
    let a = qdiscord(&args);
    let b = qdiscord(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = qdiscord(&["experiment", "--noise", "0.05", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn csv_uses_lf_and_header() {
    let out = qdiscord(&["sweep", "--step", "0.1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("delta,c_x,c_y,c_z,discord,eof,branch\n"));
    assert!(text.lines().last().unwrap().starts_with("# sudden_change: "));
}
