use std::path::Path;
use std::process::{Command, Output};

fn vemrb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vemrb"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to launch vemrb")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn offline(dir: &Path, out: &str, threads: &str) {
    ok(vemrb(
        dir,
        &[
            "offline", "--n", "4,5", "--train", "8", "--mmax", "3", "--delta", "0.1", "--seed", "9", "--threads",
            threads, "--out", out,
        ],
    ));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "config.echo.txt" {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn offline_output_is_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    offline(tmp.path(), "a", "1");
    offline(tmp.path(), "b", "4");
    let (a, b) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    assert!(a.iter().any(|(name, _)| name.ends_with("manifest.txt")));
    assert_eq!(a, b);
    let echo = std::fs::read_to_string(tmp.path().join("a/config.echo.txt")).unwrap();
    assert!(echo.starts_with("vemrb "));
    assert!(echo.contains("train: 8"));
    assert!(echo.contains("seed: 9"));
}

#[test]
fn missing_database_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    ok(vemrb(tmp.path(), &["mesh", "--cells", "9", "--kind", "squares", "--out", "m.txt"]));
    let out = vemrb(tmp.path(), &["solve", "--mesh", "m.txt", "--stab", "rb", "--db", "nowhere", "--out", "s.txt"]);
    assert_eq!(out.status.code(), Some(21));
    assert!(String::from_utf8_lossy(&out.stderr).contains("db-not-found"));
}

#[test]
fn bad_arguments_exit_with_the_invalid_argument_code() {
    let tmp = tempfile::tempdir().unwrap();
    ok(vemrb(tmp.path(), &["mesh", "--cells", "9", "--kind", "squares", "--out", "m.txt"]));
    let out = vemrb(tmp.path(), &["solve", "--mesh", "m.txt", "--problem", "heat", "--out", "s.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = vemrb(tmp.path(), &["mesh", "--cells", "10", "--kind", "squares", "--out", "m2.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = vemrb(tmp.path(), &["solve", "--mesh", "absent.txt", "--out", "s.txt"]);
    assert_eq!(out.status.code(), Some(22));
}

#[test]
fn solve_then_reconstruct_a_linear_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    offline(dir, "db", "0");
    ok(vemrb(dir, &["mesh", "--cells", "16", "--kind", "squares", "--out", "m.txt"]));
    ok(vemrb(
        dir,
        &["solve", "--mesh", "m.txt", "--problem", "patch", "--stab", "rb", "--m", "2", "--db", "db", "--out", "sol.txt"],
    ));
    let sol = std::fs::read_to_string(dir.join("sol.txt")).unwrap();
    let mut lines = sol.lines();
    assert_eq!(lines.next(), Some("VEMSOL v1"));
    assert_eq!(lines.next(), Some("25"));
    assert_eq!(lines.count(), 25);
    ok(vemrb(
        dir,
        &[
            "reconstruct", "--mesh", "m.txt", "--sol", "sol.txt", "--mode", "rb:2", "--db", "db", "--line", "0,0,1,1",
            "--count", "5", "--out", "line.csv",
        ],
    ));
    let csv = std::fs::read_to_string(dir.join("line.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let v: Vec<f64> = row.split(',').map(|t| t.parse().unwrap()).collect();
        assert!((v[4] - (1.0 + 2.0 * v[1] - v[2])).abs() < 1e-9, "{row}");
    }
    let echo = std::fs::read_to_string(dir.join("config.echo.txt")).unwrap();
    assert!(echo.contains("Reconstruct"));
}

#[test]
fn convergence_writes_the_documented_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(vemrb(
        dir,
        &[
            "convergence", "--problem", "poisson", "--stabs", "dofi,drecipe", "--cells", "16,64", "--mesh-kind",
            "squares", "--modes", "pi,fe:0.1", "--condition", "--out", "run",
        ],
    ));
    let csv = std::fs::read_to_string(dir.join("run/convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,ndof,mode,stab,err0,err1,errE,errInf,rate0,rate1,rateE,rateInf"));
    assert_eq!(lines.count(), 8);
    let cond = std::fs::read_to_string(dir.join("run/condition.csv")).unwrap();
    assert_eq!(cond.lines().count(), 5);
}

#[test]
fn voronoi_edge_collapse_can_be_disabled() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let header = |name: &str| -> (usize, usize) {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let mut it = text.lines().nth(1).unwrap().split_whitespace().map(|t| t.parse().unwrap());
        (it.next().unwrap(), it.next().unwrap())
    };
    ok(vemrb(dir, &["mesh", "--cells", "200", "--lloyd", "20", "--out", "raw.txt", "--collapse", "0"]));
    ok(vemrb(dir, &["mesh", "--cells", "200", "--lloyd", "20", "--out", "collapsed.txt"]));
    let (raw, collapsed) = (header("raw.txt"), header("collapsed.txt"));
    assert_eq!(raw.1, 200);
    assert_eq!(collapsed.1, 200);
    assert!(collapsed.0 < raw.0, "{raw:?} vs {collapsed:?}");
    let echo = std::fs::read_to_string(dir.join("config.echo.txt")).unwrap();
    assert!(echo.contains("collapse: 0.1"), "{echo}");
}
