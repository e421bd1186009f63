mod common;

use fht_core::fht::{storage_bytes, FhtMap, MainData, MapMeta, NodeKind};
use fht_core::geometry::{Point2, Pose2, Rect, Transform2};
use fht_core::grid::{CellState, GridCoord, OccupancyGrid};
use fht_core::harness::{
    build_for, grid_rle_bytes, parse_legend, pick_start, render_ascii, render_pbm, run_experiment,
    ExperimentConfig, Legend, Mode,
};
use fht_core::relocalization::{random_walk, relocalize};
use fht_core::world_sim::{Descriptor, LaserScan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bundled_world, world_path};

fn small(world: &str) -> ExperimentConfig {
    ExperimentConfig {
        world: world_path(world),
        seed: 5,
        reloc_trials: 1,
        plan_pairs: 2,
        walk_length: 15.0,
        ..ExperimentConfig::default()
    }
}

#[test]
fn fixed_seed_reports_are_identical() {
    let cfg = small("loop_corridor");
    let a = run_experiment(&cfg).unwrap().to_json();
    let b = run_experiment(&cfg).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn no_trials_gives_storage_only_report() {
    let cfg = ExperimentConfig {
        reloc_trials: 0,
        plan_pairs: 0,
        ..small("loop_corridor")
    };
    let r = run_experiment(&cfg).unwrap();
    assert!(r.storage_bytes > 0 && r.grid_storage_bytes > 0);
    assert!(r.reloc_trials.is_empty() && r.plan_trials.is_empty());
    assert_eq!(r.success_rate, None);
    assert_eq!(r.eps_t.mean, None);
    assert_eq!(r.c_path.mean, None);
    assert_eq!(r.failed_trials, 0);
}

#[test]
fn missing_world_is_an_error() {
    let cfg = ExperimentConfig {
        world: "/nonexistent/none.world".into(),
        ..ExperimentConfig::default()
    };
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn feature_only_has_no_support_nodes_and_skips_alignment() {
    let world = bundled_world("loop_corridor");
    let cfg = ExperimentConfig::default().with_mode(Mode::FeatureOnly);
    let built = build_for(&cfg, &world).unwrap();
    assert_eq!(built.map.count(NodeKind::Support), 0);
    assert!(built.map.count(NodeKind::Main) > 0);

    let rc = cfg.reloc_config();
    assert!(!rc.use_icp);
    let offset = Transform2::new(4.0, -2.0, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let walk = random_walk(
        &world,
        pick_start(&world, 0.3, 7),
        40.0,
        0.25,
        0.3,
        &mut rng,
    )
    .unwrap();
    let r = relocalize(&built.map, &world, &offset, &walk, &rc).unwrap();
    assert!(!r.estimations.is_empty());
    for e in &r.estimations {
        assert_eq!(e.t_node_robot, Transform2::IDENTITY);
        assert_eq!(e.icp_rms, 0.0);
    }
}

#[test]
fn storage_beats_run_length_grid() {
    let sizes: Vec<(&str, usize, usize)> = ["museum", "office"]
        .into_iter()
        .map(|name| {
            let built = build_for(&ExperimentConfig::default(), &bundled_world(name)).unwrap();
            (
                name,
                storage_bytes(&built.map),
                grid_rle_bytes(&built.explored),
            )
        })
        .collect();
    assert!(
        sizes.iter().all(|&(_, map, grid)| map < grid),
        "(world, map bytes, run-length grid bytes): {sizes:?}"
    );
}

fn fixture() -> (FhtMap, OccupancyGrid, Vec<Pose2>) {
    let mut g = OccupancyGrid::new(24, 10, 0.25, CellState::Free);
    for c in 0..24 {
        g.set(GridCoord::new(c, 0), CellState::Occupied);
        g.set(GridCoord::new(c, 9), CellState::Occupied);
    }
    for r in 0..10 {
        g.set(GridCoord::new(0, r), CellState::Occupied);
        g.set(GridCoord::new(23, r), CellState::Occupied);
        if r > 3 {
            g.set(GridCoord::new(12, r), CellState::Occupied);
        }
    }
    for r in 1..4 {
        for c in 19..23 {
            g.set(GridCoord::new(c, r), CellState::Unknown);
        }
    }
    let main = || MainData {
        descriptor: Descriptor::from_raw(vec![0.5; 4]),
        scan: LaserScan::new(vec![1.0; 8], 7.0),
        entropy: 1.0,
    };
    let mut m = FhtMap::new(MapMeta::new(4, 0.25));
    m.add_node(
        Point2::new(1.6, 1.6),
        Rect::new(0.25, 0.25, 2.75, 2.25),
        Some(main()),
    );
    m.add_node(Point2::new(3.1, 0.6), Rect::new(2.5, 0.25, 3.5, 1.0), None);
    m.add_node(
        Point2::new(4.6, 1.6),
        Rect::new(3.25, 0.25, 5.75, 2.25),
        Some(main()),
    );
    m.add_edge(0, 1).unwrap();
    m.add_edge(1, 2).unwrap();
    let trajectory = (0..7)
        .map(|i| Pose2::new(0.6 + 0.7 * i as f64, 2.0 - 0.2 * (i % 3) as f64, 0.0))
        .collect();
    (m, g, trajectory)
}

#[test]
fn ascii_render_matches_golden() {
    let (m, g, t) = fixture();
    let text = render_ascii(&m, Some(&g), &t, 0.25);
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fixture_map.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, golden);
    assert_eq!(
        parse_legend(&text).unwrap(),
        Legend {
            main_nodes: 2,
            support_nodes: 1,
            edges: 2,
            trajectory_poses: 7
        }
    );
}

#[test]
fn pbm_render_has_every_pixel() {
    let (m, g, t) = fixture();
    let pbm = render_pbm(&m, Some(&g), &t, 0.125);
    let mut lines = pbm.lines();
    assert_eq!(lines.next(), Some("P1"));
    assert_eq!(lines.next(), Some("# main 2 support 1 edges 2 poses 7"));
    assert_eq!(lines.next(), Some("48 20"));
    let bits: Vec<&str> = lines.flat_map(|l| l.split(' ')).collect();
    assert_eq!(bits.len(), 48 * 20);
    assert!(bits.iter().all(|b| *b == "0" || *b == "1"));
}
