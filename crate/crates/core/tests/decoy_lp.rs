mod common;

use mdiqkd::decoy_lp::{build_error_lp, build_yield_lp, estimate_bounds_detailed, variable_index, FluxPairConstraintData};
use mdiqkd::physics::{photon_number_yields, simulate_measurements, Basis};
use mdiqkd::simplex::Relation;
use mdiqkd::{estimate_bounds, Error, SecurityAnalysis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Optima of the same programs from an independent LP solver (HiGHS dual simplex).
// Agreement is expected to ~1e-8; the test allows 1e-6.
const REFERENCE: [(u32, fn() -> SecurityAnalysis, f64, f64); 5] = [
    (30, SecurityAnalysis::asymptotic, 6.64396605701516e-05, 4.092822552290793e-06),
    (30, SecurityAnalysis::finite_gaussian, 5.809050565222096e-05, 7.341164804064179e-06),
    (30, SecurityAnalysis::finite_composable, 5.1677376804712933e-05, 1.0372916766632897e-05),
    (40, SecurityAnalysis::asymptotic, 6.776013501433957e-06, 6.27909529778559e-07),
    (54, SecurityAnalysis::asymptotic, 2.729120452330384e-07, 2.812849684378877e-08),
];

#[test]
fn fixture_optima_match_reference_solver() {
    for (loss, analysis, y11, b11) in REFERENCE {
        let est = estimate_bounds_detailed(&common::fixture(loss), &analysis()).unwrap();
        let b = est.bounds;
        assert!((b.y_x_11_lower - y11).abs() <= 1e-6 * y11, "{loss} dB: y11 {} vs {y11}", b.y_x_11_lower);
        assert!((b.b_x_11_upper - b11).abs() <= 1e-6 * b11, "{loss} dB: b11 {} vs {b11}", b.b_x_11_upper);
        assert!((b.e_x_11_upper - b11 / y11).abs() <= 1e-5 * b11 / y11);
    }
}

#[test]
fn inconsistent_fixtures_report_their_rows() {
    for loss in [32, 34, 42] {
        match estimate_bounds(&common::fixture(loss), &SecurityAnalysis::asymptotic()) {
            Err(Error::Infeasible(lp)) => assert_eq!(lp.rows.len(), 9),
            other => panic!("{loss} dB: expected infeasible, got {other:?}"),
        }
    }
}

/// The photon-number yields of the simulated source satisfy every row of both
/// programs, so the minimised y11 and maximised b11 bracket the true values.
#[test]
fn true_yields_are_feasible_and_bracketed() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let analysis = SecurityAnalysis::asymptotic();
    let k = analysis.s_cut;
    for case in 0..100 {
        let (params, model) = common::random_setup(&mut rng);
        let m = simulate_measurements(&params, &model, 1e12).unwrap();
        let data = FluxPairConstraintData::from_measurements(&m, k).unwrap();
        let y = photon_number_yields(Basis::X, &model, k).unwrap();
        let mut truth_y = vec![0.0; (k + 1) * (k + 1)];
        for a in 0..=k {
            for b in 0..=k {
                truth_y[variable_index(a, b, k)] = y[a][b];
            }
        }
        let yield_lp = build_yield_lp(&data, &analysis).unwrap();
        for c in &yield_lp.constraints {
            let ax: f64 = c.coefficients.iter().zip(&truth_y).map(|(a, b)| a * b).sum();
            // the closed-form yields cancel O(1) exponentials, so tiny gains
            // carry an absolute error near machine epsilon
            let tol = 1e-9 * c.rhs.abs() + 1e-15;
            match c.relation {
                Relation::GreaterEq => assert!(ax >= c.rhs - tol, "case {case}: {ax} < {}", c.rhs),
                Relation::LessEq => assert!(ax <= c.rhs + tol, "case {case}: {ax} > {}", c.rhs),
                Relation::Equal => unreachable!(),
            }
        }
        let est = estimate_bounds_detailed(&m, &analysis).unwrap();
        assert!(
            est.bounds.y_x_11_lower <= y[1][1] * (1.0 + 1e-9),
            "case {case}: lower bound {} above true {}",
            est.bounds.y_x_11_lower,
            y[1][1]
        );
        assert!(build_error_lp(&data, &analysis).unwrap().constraints.len() == 18);
    }
}

#[test]
fn wider_truncation_never_loosens_the_bounds() {
    let m = common::fixture(30);
    let mut prev: Option<(f64, f64)> = None;
    for s_cut in [5, 8, 11, 15] {
        let mut a = SecurityAnalysis::asymptotic();
        a.s_cut = s_cut;
        let b = estimate_bounds(&m, &a).unwrap();
        if let Some((y, e)) = prev {
            assert!(b.y_x_11_lower >= y - 1e-12);
            assert!(b.b_x_11_upper <= e + 1e-12);
        }
        prev = Some((b.y_x_11_lower, b.b_x_11_upper));
    }
}

/// Mirrored flux pairs make columns such as y01 and y10 nearly
/// interchangeable, which once stalled the solver at small truncations.
#[test]
fn every_fixture_and_truncation_terminates() {
    for loss in common::LOSSES_DB {
        let m = common::fixture(loss);
        for variant in mdiqkd::AnalysisVariant::ALL {
            for s_cut in 3..=15 {
                let mut a = SecurityAnalysis::new(variant);
                a.s_cut = s_cut;
                match estimate_bounds(&m, &a) {
                    Ok(_) | Err(Error::Infeasible(_)) => {}
                    Err(e) => panic!("{loss} dB {variant:?} s_cut {s_cut}: {e}"),
                }
            }
        }
    }
}

#[test]
fn finite_size_bounds_are_looser_than_asymptotic() {
    let m = common::fixture(30);
    let asy = estimate_bounds(&m, &SecurityAnalysis::asymptotic()).unwrap();
    for a in [SecurityAnalysis::finite_gaussian(), SecurityAnalysis::finite_composable()] {
        let b = estimate_bounds(&m, &a).unwrap();
        assert!(b.y_x_11_lower <= asy.y_x_11_lower);
        assert!(b.e_x_11_upper >= asy.e_x_11_upper);
        assert!(b.y_z_11_lower <= b.y_x_11_lower);
    }
}
