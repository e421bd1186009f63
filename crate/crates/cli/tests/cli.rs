use std::path::Path;
use std::process::{Command, Output};

use fht_core::world_sim::{random_world, save_world, RandomWorldConfig};

fn fhtmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhtmap"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("room.world"),
            save_world(&random_world(4, &RandomWorldConfig::default())),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("quick.toml"),
            "reloc_trials = 1\nplan_pairs = 2\nwalk_length = 10.0\nD = 32\n",
        )
        .unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn explore_render_plan_relocalize() {
    let s = Scratch::new();
    let (world, map, cfg) = (
        s.path("room.world"),
        s.path("map.json"),
        s.path("quick.toml"),
    );
    let o = fhtmap(&["explore", p(&world), "--config", p(&cfg), "--out", p(&map)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        summary["storage_bytes"].as_u64().unwrap(),
        std::fs::metadata(&map).unwrap().len()
    );

    let txt = s.path("map.txt");
    assert_eq!(code(&fhtmap(&["render", p(&map), "--out", p(&txt)])), 0);
    let legend = fht_core::harness::parse_legend(&std::fs::read_to_string(&txt).unwrap()).unwrap();
    assert_eq!(
        legend.main_nodes + legend.support_nodes,
        summary["nodes"].as_u64().unwrap() as usize
    );
    let pbm = s.path("map.pbm");
    assert_eq!(code(&fhtmap(&["render", p(&map), "--out", p(&pbm)])), 0);
    assert!(std::fs::read_to_string(&pbm).unwrap().starts_with("P1\n"));

    let o = fhtmap(&[
        "plan",
        p(&map),
        p(&world),
        "--pairs",
        "2",
        "--config",
        p(&cfg),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 2);

    let o = fhtmap(&[
        "relocalize",
        p(&map),
        p(&world),
        "--trials",
        "1",
        "--seed",
        "3",
        "--config",
        p(&cfg),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows[0]["failed"], false);
}

#[test]
fn eval_writes_report_and_artifacts() {
    let s = Scratch::new();
    let out = s.path("report.json");
    let o = fhtmap(&[
        "eval",
        p(&s.path("room.world")),
        "--modes",
        "fht,feature_only",
        "--config",
        p(&s.path("quick.toml")),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports: Vec<serde_json::Value> =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let modes: Vec<&str> = reports
        .iter()
        .map(|r| r["mode"].as_str().unwrap())
        .collect();
    assert_eq!(modes, ["fht", "feature_only"]);
    assert_eq!(reports[1]["support_nodes"], 0);
    for mode in ["fht", "feature_only"] {
        assert!(s.path(&format!("report.{mode}.map.json")).exists());
        assert!(s.path(&format!("report.{mode}.pbm")).exists());
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let s = Scratch::new();
    let world = s.path("room.world");
    let out = s.path("x.json");
    let bad = s.path("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(
        code(&fhtmap(&[
            "explore",
            p(&world),
            "--config",
            p(&bad),
            "--out",
            p(&out)
        ])),
        2
    );
    std::fs::write(&bad, "gamma1 = 0.01\ngamma2 = 0.5\n").unwrap();
    assert_eq!(
        code(&fhtmap(&[
            "explore",
            p(&world),
            "--config",
            p(&bad),
            "--out",
            p(&out)
        ])),
        2
    );
    assert_eq!(
        code(&fhtmap(&[
            "explore",
            p(&s.path("missing.world")),
            "--out",
            p(&out)
        ])),
        2
    );
    assert_eq!(
        code(&fhtmap(&[
            "eval",
            p(&world),
            "--modes",
            "grid",
            "--out",
            p(&out)
        ])),
        2
    );
    std::fs::write(&bad, "{\"version\": 99}").unwrap();
    assert_eq!(code(&fhtmap(&["render", p(&bad), "--out", p(&out)])), 2);
    assert_eq!(
        code(&fhtmap(&[
            "render",
            p(&bad),
            "--out",
            p(&out),
            "--scale",
            "0"
        ])),
        2
    );
}
