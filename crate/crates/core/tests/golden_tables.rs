mod common;

use common::reference_tables::{COEFFICIENTS, DELTAS, ERROR_CONSTANTS, NOT_CONVERGED};
use stab_adams::stability::measure_interval;
use stab_adams::synth::{
    classical_adams, damping_increments, first_order, optimize, order_residuals, residual_tolerance, synthesize, OptimizeOptions,
};
use stab_adams::tables::{build_table, cells, expected_to_converge, Cell, TableKind, EXPECTED_NOT_CONVERGED};
use stab_adams::Error;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn every_published_coefficient_cell_is_reproduced() {
    for &(k, p, ell, beta) in COEFFICIENTS {
        let m = synthesize(k, p, &OptimizeOptions::default()).unwrap();
        let d = max_abs_diff(m.beta(), beta);
        assert!(d <= 1e-7, "({k},{p}) beta off by {d:e}");
        assert!((m.ell - ell).abs() <= 1e-6 * ell.max(1.0), "({k},{p}) ell {} vs {ell}", m.ell);
        for (i, r) in order_residuals(&m.beta, p).iter().enumerate() {
            assert!(r.abs() <= residual_tolerance(&m.beta, i + 1), "({k},{p}) G_{} = {r:e}", i + 1);
        }
    }
}

#[test]
fn classical_cells_are_outside_the_feasible_set_from_six_steps() {
    // the locus of AB_k crosses into the lower half-plane for k >= 6, so no b maps onto it
    for k in 2..=9 {
        let ab = classical_adams(k).unwrap();
        let crosses = (1..2000).any(|i| stab_adams::polycore::eval_nu(&ab.beta, std::f64::consts::PI * i as f64 / 2000.0) < 0.0);
        assert_eq!(crosses, k >= 6, "k = {k}");
        match optimize(k, k, 64) {
            Ok(m) => {
                assert!(k <= 5);
                assert!(max_abs_diff(m.beta(), ab.beta()) <= 1e-8);
            }
            Err(Error::NotConverged { .. }) => assert!(k >= 6),
            Err(e) => panic!("{e}"),
        }
        // the interval is still -mu(-1)
        assert!(measure_interval(&ab.beta).agree, "AB{k}");
    }
}

#[test]
fn published_failures_are_reported() {
    let mut expected: Vec<_> = EXPECTED_NOT_CONVERGED.to_vec();
    expected.sort();
    assert_eq!(expected, NOT_CONVERGED);
    for &(k, p) in NOT_CONVERGED {
        let err = synthesize(k, p, &OptimizeOptions::default()).unwrap_err();
        assert!(err.to_string().starts_with("NOT CONVERGED"), "{err}");
    }
}

#[test]
fn error_constant_table() {
    let table = build_table(TableKind::ErrConst, &OptimizeOptions::default()).unwrap();
    assert!(table.unexpected_failures().is_empty());
    for &(k, p, c) in ERROR_CONSTANTS {
        let Some(Cell::Values(v)) = table.get(k, p) else { panic!("({k},{p}) missing") };
        assert!((v[0] - c).abs() <= 1e-4, "({k},{p}) {} vs {c}", v[0]);
    }
    assert_eq!(table.get(7, 6), Some(&Cell::NotConverged));
    assert_eq!(table.rows.len(), ERROR_CONSTANTS.len() + 1);
}

#[test]
fn delta_table() {
    let table = build_table(TableKind::Delta, &OptimizeOptions::default()).unwrap();
    for &(k, fractions) in DELTAS {
        let Some(Cell::Values(v)) = table.get(k, 1) else { panic!("k = {k}") };
        let exact: Vec<f64> = fractions.iter().map(|&(n, d)| n as f64 / d as f64).collect();
        assert!(max_abs_diff(v, &exact) <= 1e-14, "k = {k}");
        assert_eq!(v, &damping_increments(&first_order(k).unwrap().beta));
    }
}

#[test]
fn coefficient_table_covers_every_cell() {
    let table = build_table(TableKind::Coeffs, &OptimizeOptions::default()).unwrap();
    assert_eq!(table.rows.len(), COEFFICIENTS.len() + NOT_CONVERGED.len());
    assert!(table.unexpected_failures().is_empty());
    for (row, (k, p)) in table.rows.iter().zip(cells(TableKind::Coeffs)) {
        assert_eq!((row.k, row.p), (k, p));
        assert_eq!(row.cell == Cell::NotConverged, !expected_to_converge(k, p));
    }
    let Some(Cell::Values(v)) = table.get(4, 3) else { panic!() };
    let want = [1.2, 0.25, -1.0 / 3.0, -7.0 / 12.0, 5.0 / 3.0];
    assert!(max_abs_diff(v, &want) <= 1e-12);
}

#[test]
fn eleven_step_order_seven_exists() {
    // beyond the published range an (11,7) method exists; its interval is confirmed by the root condition
    let m = optimize(11, 7, 64).unwrap();
    let r = measure_interval(&m.beta);
    assert!(r.agree, "{r:?}");
    let ab7 = classical_adams(7).unwrap().ell;
    assert!(m.ell > 0.051 && m.ell > ab7, "ell = {}", m.ell);
    for (i, g) in order_residuals(&m.beta, 7).iter().enumerate() {
        assert!(g.abs() <= residual_tolerance(&m.beta, i + 1));
    }
}
