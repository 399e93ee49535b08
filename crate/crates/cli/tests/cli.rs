use std::process::{Command, Output};

fn asepqj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asepqj")).args(args).env_remove("ASEPQJ_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = asepqj(&["verify", "--q", "0.6", "--two-j", "1", "--length", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("schuetz_reduction"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("identity,statement,residual,tolerance,bound,result\n"));
    assert!(!csv.contains("FAIL"));
}

#[test]
fn corrupted_generator_fails_verification() {
    let o = asepqj(&["verify", "--corrupt-rate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        &["verify", "--q", "1.5"][..],
        &["verify", "--two-j", "3", "--length", "12"],
        &["moment", "--initial", "product"],
        &["simulate", "--length", "4", "--bonds", "7"],
        &["ldp", "--q", "1"],
        &["frobnicate"],
    ] {
        let o = asepqj(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn moment_at_time_zero_is_exactly_one() {
    let o = asepqj(&["moment", "--time", "0", "--bonds", "-1..1", "--trajectories", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[2], "1.0000000000000000e0");
        assert_eq!(f[4], "1.0000000000000000e0");
        assert_eq!(f[5], "0.0000000000000000e0");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# product start\nq = 0.5\ntwo_j = 1\ninitial = product\nmu = 0.5,0.5\ntime = 1\nbonds = 0\ntrajectories = 400\nseed = 3\n").unwrap();
    let a = asepqj(&["moment", "--config", cfg.to_str().unwrap()]);
    let b = asepqj(&["moment", "--config", cfg.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_ne!(a.stdout, b.stdout);
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(asepqj(&["moment", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_asepqj"));
        c.args(["simulate", "--length", "12", "--time", "1", "--trajectories", "5"]);
        match seed {
            Some(s) => c.env("ASEPQJ_SEED", s),
            None => c.env_remove("ASEPQJ_SEED"),
        };
        c.output().unwrap().stdout
    };
    let explicit = asepqj(&["simulate", "--length", "12", "--time", "1", "--trajectories", "5", "--seed", "99"]).stdout;
    assert_eq!(run(Some("99")), explicit);
    assert_ne!(run(Some("98")), explicit);
    assert_eq!(run(None), run(Some("1")));
}

#[test]
fn delta_zero_has_no_growth() {
    let o = asepqj(&["ldp", "--q", "0.5", "--two-j", "1", "--mu", "1,0", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("grid,")).count(), 5);
    let m_q = text.lines().find(|l| l.starts_with("m_q,")).unwrap();
    assert_eq!(m_q, "m_q,,1.0000000000000000e0");
    let g: f64 = text.lines().find(|l| l.starts_with("growth_rate,")).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(g.abs() < 1e-8);
}

#[test]
fn output_is_independent_of_worker_count() {
    for cmd in ["moment", "simulate"] {
        let base = [cmd, "--q", "0.5", "--two-j", "1", "--length", "16", "--time", "0.5,1", "--bonds", "0,1", "--trajectories", "700", "--seed", "11"];
        let runs: Vec<Vec<u8>> = ["1", "3", "8"]
            .iter()
            .map(|w| {
                let mut args = base.to_vec();
                args.extend(["--workers", w]);
                asepqj(&args).stdout
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert!(runs.windows(2).all(|w| w[0] == w[1]), "{cmd}");
    }
}

#[test]
fn tiny_window_is_reported_as_contaminated() {
    let o = asepqj(&["simulate", "--length", "4", "--time", "5", "--bonds", "0", "--trajectories", "20", "--boundary", "truncated"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
