use std::sync::Arc;

use sht_core::dyadic::{build_grid, verify_grid};
use sht_core::space::{
    build_cantor_space, build_interval_space, build_random_graph_space, build_snowflake_space,
    FiniteSht,
};

fn zoo() -> Vec<(String, FiniteSht)> {
    let mut out = Vec::new();
    for n in [8, 64, 256] {
        out.push((format!("interval-{n}"), build_interval_space(n).unwrap()));
    }
    for l in [2, 4, 6] {
        out.push((format!("cantor-{l}"), build_cantor_space(l).unwrap()));
    }
    let base = build_interval_space(64).unwrap();
    out.push(("snowflake-2".into(), build_snowflake_space(&base, 2.0).unwrap()));
    for seed in 0..10 {
        out.push((
            format!("graph-{seed}"),
            build_random_graph_space(24 + 4 * seed as usize, 0.08, seed).unwrap(),
        ));
    }
    out
}

#[test]
fn every_zoo_space_gets_a_lawful_grid() {
    for (name, space) in zoo() {
        let delta = 1.0 / (8.0 * space.kappa().powi(3));
        let grid = build_grid(Arc::new(space), delta).unwrap_or_else(|e| panic!("{name}: {e}"));
        let report = verify_grid(&grid);
        assert!(report.all_passed(), "{name}: {report:?}");
        assert!(grid.epsilon() > 0.0 && grid.epsilon() <= 1.0);
        println!(
            "{name}: levels {} cubes {} epsilon {:.4} C {:.4}",
            grid.num_levels(),
            grid.cubes().len(),
            grid.epsilon(),
            grid.c_sandwich()
        );
    }
}

#[test]
fn larger_delta_still_audited() {
    let space = Arc::new(build_interval_space(64).unwrap());
    for delta in [0.2, 0.3, 0.5, 0.9] {
        match build_grid(space.clone(), delta) {
            Ok(g) => assert!(verify_grid(&g).all_passed(), "delta {delta}"),
            Err(e) => assert!(e.to_string().contains("too large"), "{e}"),
        }
    }
}
