use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn weightlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weightlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ap_of_constant_weight_is_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("w.csv"), "cell,value\n0,1\n1,1\n2,1\n3,1\n").unwrap();
    let o = weightlab(&["ap", "--weight", "w.csv", "--p", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("1.0"));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("w.csv"), "cell,value\n0,1\n1,oops\n").unwrap();
    assert_eq!(weightlab(&["ap", "--weight", "w.csv", "--p", "2", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(weightlab(&["frobnicate"], dir.path()).status.code(), Some(2));
    let o = weightlab(&["ap", "--weight", "w.csv", "--p", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
    fs::write(dir.path().join("w.csv"), "cell,value\n0,1\n").unwrap();
    for p in ["1.0", "101", "inf"] {
        assert_eq!(weightlab(&["ap", "--weight", "w.csv", "--p", p], dir.path()).status.code(), Some(2));
    }
    assert_eq!(weightlab(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn maximal_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "cell,value\n0,0\n1,4\n2,0\n3,0\n").unwrap();
    let o = weightlab(&["maximal", "--f", "f.csv", "--out", "mf.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("mf.csv")).unwrap();
    assert!(text.contains("cell,value\n0,2\n1,4\n2,2\n3,1.3333333333333333\n"), "{text}");
}

#[test]
fn fiberwise_maximal_checks_axes() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = String::from("i0,i1,value\n");
    for c in 0..4 {
        for s in 0..2 {
            t += &format!("{c},{s},{}\n", if c == 1 { 4 * (s + 1) } else { 0 });
        }
    }
    fs::write(dir.path().join("F.csv"), t).unwrap();
    let o = weightlab(&["maximal", "--fiber-csv", "F.csv", "--axes", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("0,0,2\n0,1,4\n"), "{out}");
    assert_eq!(weightlab(&["maximal", "--fiber-csv", "F.csv", "--axes", "3"], dir.path()).status.code(), Some(2));
}

#[test]
fn kernel_check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = weightlab(&["kernel-check", "--name", "gaussian", "--t", "0.1", "--n", "256"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("status certified"));
    let o = weightlab(
        &["kernel-check", "--name", "gaussian", "--t", "0.01", "--n", "64", "--mass", "2", "--out", "k.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gaussian"));
    let k = fs::read_to_string(dir.path().join("k.csv")).unwrap();
    assert!(k.contains("# status=refuted") && k.contains("offset,value"));
}

#[test]
fn lsbound_sweep_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("fam.csv"),
        "member,row,col,value\n0,0,0,1\n0,1,1,-0.5\n1,0,1,1\n1,1,0,0.7\n",
    )
    .unwrap();
    let args = |out: &'static str, plot: &'static str| {
        vec![
            "lsbound", "--family", "fam.csv", "--s", "1.25,2,3", "--structure", "weighted_composition", "--seed",
            "7", "--restarts", "8", "--iterations", "60", "--out", out, "--plot", plot, "--witness", "w.csv",
        ]
    };
    assert_eq!(weightlab(&args("a.csv", "a.svg"), dir.path()).status.code(), Some(0));
    assert_eq!(weightlab(&args("b.csv", "b.svg"), dir.path()).status.code(), Some(0));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let a_text = String::from_utf8(a.clone()).unwrap();
    assert!(a_text.contains("# seed=7") && a_text.contains("s,lower,upper,certificate_kind"));
    assert!(a_text.contains("closed_form"));
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(fs::read(dir.path().join("a.svg")).unwrap(), fs::read(dir.path().join("b.svg")).unwrap());
    assert!(fs::read_to_string(dir.path().join("w.csv")).unwrap().contains("s,slot,member,cell,value"));
    assert_eq!(
        weightlab(&["lsbound", "--family", "fam.csv", "--structure", "multiplication"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn extrapolate_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = weightlab(
        &["extrapolate", "--p0", "2", "--p", "1.5,3", "--weights", "power:0,0.3,0.6,0.9", "--seed", "7", "--out", "r.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict true"));
    let r = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(r.contains("phase,p,ap_constant,ratio\nhypothesis,2,1,"));
    assert_eq!(r.lines().filter(|l| l.starts_with("conclusion")).count(), 8);
    let o = weightlab(
        &["extrapolate", "--p", "3", "--axes", "2", "--q", "2.5", "--samples", "8", "--out", "m.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("factor 16"));
    assert_eq!(weightlab(&["extrapolate", "--p", "3", "--weights", "gaussian:1"], dir.path()).status.code(), Some(2));
}

const EXPERIMENT: &str = "\
[kernels]
set = gaussian:0.01, box:1
[family]
kind = multiplication
seed = 3
n_time = 12
n_space = 3
[exponents]
p = 3
q = 3
s = 1.25, 2
[weights]
powers = 0, 0.5
[search]
restarts = 4
iterations = 30
chain_trials = 8
";

#[test]
fn intop_writes_tables_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.ini"), EXPERIMENT).unwrap();
    let o = weightlab(&["intop", "--config", "exp.ini", "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("res/intop.csv")).unwrap();
    assert!(csv.contains("s,ap_constant,lower,upper,certificate_kind"));
    assert!(csv.contains("# seed=0") && csv.contains("# family=multiplication(seed=3)"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",closed_form")).count(), 4);
    let svg = fs::read_to_string(dir.path().join("res/intop.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(dir.path().join("res/chain.csv").exists());

    let o = weightlab(&["intop", "--config", "exp.ini", "--out", "res2", "--seed", "5", "--s", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("res2/intop.csv")).unwrap();
    assert!(csv.contains("# seed=5") && csv.contains("# s=2\n"));

    fs::write(dir.path().join("bad.ini"), format!("{EXPERIMENT}color = blue\n")).unwrap();
    let o = weightlab(&["intop", "--config", "bad.ini", "--out", "res3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("color"));
    fs::write(dir.path().join("bad.ini"), EXPERIMENT.replace("p = 3", "p = 200")).unwrap();
    assert_eq!(weightlab(&["intop", "--config", "bad.ini", "--out", "res3"], dir.path()).status.code(), Some(2));
}

#[test]
fn duality_prints_witness_gap() {
    let dir = tempfile::tempdir().unwrap();
    let o = weightlab(&["duality", "--axes", "4,3", "--q", "2,3", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let gap: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("witness gap "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap < 1e-8);
    assert_eq!(weightlab(&["duality", "--axes", "4,3", "--q", "2"], dir.path()).status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("w.csv"), "cell,value\n0,1\n1,2\n").unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_weightlab"))
            .args(["ap", "--weight", "w.csv", "--p", "2"])
            .env("WEIGHTLAB_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn suite_is_byte_identical_across_runs_and_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_weightlab"))
            .args(["suite", "small", "--seed", "7", "--out", out])
            .env("WEIGHTLAB_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("4", "b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# command=suite\n# seed=7\n# size=small\ncriterion,name,pass,metric,detail\n"));
    assert_eq!(text.lines().filter(|l| l.contains(",true,")).count(), 13);
}
