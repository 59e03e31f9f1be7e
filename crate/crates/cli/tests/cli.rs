use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_frobkit");

fn frobkit(cache: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("FROBKIT_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn scan_of_cm_i_vanishes_at_primes_three_mod_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = frobkit(dir.path(), &["scan", "cm_i", "--xmax", "100"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,ap,type,disc"));
    let mut seen = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (p, a): (u64, i64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        if p >= 5 && p % 4 == 3 {
            assert_eq!(a, 0, "p={p}");
            assert_eq!(f[2], "supersingular");
            seen += 1;
        }
    }
    assert!(seen >= 10);
}

#[test]
fn compare_reports_isogeny() {
    let dir = tempfile::tempdir().unwrap();
    let o = frobkit(dir.path(), &["compare", "11a1", "11a2", "--xmax", "10000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "frobkit/1");
    assert_eq!(v["verdict"], "PotentiallyIsogenous");
    assert_eq!(v["final_ratio"], 1.0);
    assert_eq!(
        v["supporting"]["estimate"]["checkpoints"],
        serde_json::json!([1000, 10000])
    );
}

#[test]
fn group_density_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = frobkit(dir.path(), &["group-density", "--ell", "5"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["h"], "57600");
    assert_eq!(v["h_prime"], "19400");
    assert_eq!(
        (v["ratio_num"].as_str(), v["ratio_den"].as_str()),
        (Some("97"), Some("288"))
    );
    let csv = frobkit(
        dir.path(),
        &["group-density", "--ell", "3", "--output", "csv"],
    );
    assert_eq!(
        stdout(&csv),
        "l,h,h_prime,ratio_num,ratio_den\n3,1152,324,9,32\n"
    );
}

#[test]
fn second_identical_run_computes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["cm", "37a1", "--xmax", "20000", "--stats"];
    let first = frobkit(dir.path(), &args);
    let second = frobkit(dir.path(), &args);
    assert!(
        stderr(&first).contains("computed 2261 traces"),
        "{}",
        stderr(&first)
    );
    assert!(
        stderr(&second).contains("computed 0 traces"),
        "{}",
        stderr(&second)
    );
    assert_eq!(first.stdout, second.stdout);
    let wider = frobkit(dir.path(), &["cm", "37a1", "--xmax", "30000", "--stats"]);
    assert!(stderr(&wider).contains("cache covers 30000"));
    assert!(!stderr(&wider).contains("computed 0 traces"));
}

#[test]
fn environment_overrides_cache_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let flag = flag_dir.path().to_str().unwrap();
    let o = frobkit(
        env_dir.path(),
        &["scan", "11a3", "--xmax", "500", "--cache-dir", flag],
    );
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(env_dir.path()).unwrap().count(), 1);
    assert_eq!(std::fs::read_dir(flag_dir.path()).unwrap().count(), 0);
}

#[test]
fn no_cache_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = frobkit(dir.path(), &["scan", "11a3", "--xmax", "500", "--no-cache"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["scan", "99z9"][..],
        &["scan", "[0,0,0,0,0]"],
        &["scan", "[1,2,3]"],
        &["scan", "11a1", "--xmax", "1"],
        &["scan", "11a1", "--threads", "0"],
        &["lt", "cm_i", "--disc", "5"],
        &["lt", "cm_i", "--disc", "-8x"],
        &["field-density", "cm_i", "--disc", "-12"],
        &["sieve", "11a1", "37a1", "--ells", "5,9"],
        &["sieve", "11a1", "37a1", "--ells", "5,5"],
        &["group-density", "--ell", "2"],
        &["twist", "11a1", "--d", "4"],
        &["frobnicate"],
        &[],
    ] {
        let o = frobkit(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!stderr(&o).is_empty(), "{args:?}");
    }
    assert_eq!(frobkit(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(frobkit(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn corrupt_cache_is_a_computation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(frobkit(dir.path(), &["scan", "37a1", "--xmax", "100"])
        .status
        .success());
    let file = std::fs::read_dir(dir.path())
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let text = std::fs::read_to_string(&file)
        .unwrap()
        .replace("\n5,-2\n", "\n5,-9\n");
    std::fs::write(&file, text).unwrap();
    let o = frobkit(dir.path(), &["scan", "37a1", "--xmax", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Hasse"));
}

#[test]
fn twist_and_catalog_listing() {
    let dir = tempfile::tempdir().unwrap();
    let o = frobkit(dir.path(), &["twist", "cm_i", "--d", "-1"]);
    assert_eq!(stdout(&o), "[0,0,0,-1,0]\n");
    let o = frobkit(
        dir.path(),
        &["twist", "[0,0,0,-1,0]", "--d", "2", "--output", "json"],
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["twist"], "[0,0,0,-4,0]");
    let list = stdout(&frobkit(dir.path(), &["catalog", "list"]));
    assert_eq!(list.lines().count(), 6);
    assert!(list
        .lines()
        .any(|l| l.starts_with("cm_3") && l.ends_with("cm:-3")));
    let csv = stdout(&frobkit(
        dir.path(),
        &["catalog", "list", "--output", "csv"],
    ));
    assert!(csv.contains("37a1,\"[0,0,1,-1,0]\",non-cm isogeny-class:37a\n"));
}

#[test]
fn custom_catalog_replaces_bundled_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cat.json");
    std::fs::write(
        &path,
        r#"[{"label": "y2x3x", "model": [0,0,0,1,0], "tags": ["cm:-4"]}]"#,
    )
    .unwrap();
    let cat = path.to_str().unwrap();
    let o = frobkit(
        dir.path(),
        &["cm", "y2x3x", "--catalog", cat, "--xmax", "5000"],
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "CM(-4)");
    let o = frobkit(dir.path(), &["scan", "11a1", "--catalog", cat]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&path, "[\n{\"label\": 3}\n]").unwrap();
    let o = frobkit(dir.path(), &["catalog", "list", "--catalog", cat]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn csv_reports_have_checkpoint_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = frobkit(
        dir.path(),
        &[
            "sieve", "11a1", "37a1", "--ells", "5,7", "--xmax", "20000", "--output", "csv",
        ],
    );
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ell,x,hits,total,ratio");
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[7].starts_with("joint,1000,"));
    let lt = stdout(&frobkit(
        dir.path(),
        &[
            "lt", "37a1", "--disc", "-3", "--xmax", "20000", "--output", "csv",
        ],
    ));
    assert!(lt.starts_with("x,count,normalized\n1000,"));
}
