//! Runs the thirteen acceptance criteria, one line each.

use sht_harness::criteria::{
    run_all, BUCKLEY_BUDGET, GRID_BUDGET, INEQUALITY_TOL, JN_HALF_SPREAD, ORACLE_TOL, REVERSE_HOLDER_BUDGET,
};
use sht_harness::experiments::{BUCKLEY_SLOPE_WINDOW, FD_TOL, SPREAD_LIMIT};

#[test]
fn tolerances_are_pinned() {
    assert_eq!(ORACLE_TOL, 1e-12);
    assert_eq!(INEQUALITY_TOL, 1e-9);
    assert_eq!(JN_HALF_SPREAD, 0.10);
    assert_eq!(SPREAD_LIMIT, 10.0);
    assert_eq!(FD_TOL, 1e-6);
    assert_eq!(BUCKLEY_SLOPE_WINDOW, (0.6, 1.4));
    assert_eq!(GRID_BUDGET.as_secs(), 120);
    assert_eq!(REVERSE_HOLDER_BUDGET.as_secs(), 300);
    assert_eq!(BUCKLEY_BUDGET.as_secs(), 300);
}

#[test]
fn acceptance_criteria() {
    let outcomes = run_all();
    for o in &outcomes {
        println!("{}", o.line());
    }
    assert_eq!(outcomes.len(), 13);
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
