//! Solver, continuation and uniqueness behaviour on concrete instances.

mod common;

use common::{polyharmonic_constant, rel};
use polylane::continuation::{kalpha_constant, limit_profile, norm_lower_bound, trace_branch, BranchOptions, StopReason};
use polylane::radial::IvpOptions;
use polylane::shooting::{
    check_solution_shape, integrate_ivp, NewtonOptions, multistart_search, SearchBox, Shooter, ShootingVector, SolutionRecord,
};
use polylane::uniqueness::{
    picard_fixed_point, scale_match, sign_pattern_trace, trace_pattern, uniqueness_scan, TripleProfile,
};
use polylane::{ChainSystem, Error, Forcing, ProblemParams, RadialGrid};

#[test]
fn constant_forcing_recovers_polyharmonic_centers() {
    for alpha in 1..=3 {
        for n in 7..=12 {
            let params = ProblemParams::new(n, alpha, alpha, 2.0, 2.0).unwrap();
            let sys = ChainSystem::with_forcing(params, Forcing::Constant { u: 1.0, v: 1.0 });
            let opts = NewtonOptions {
                tol: 1e-13,
                ivp: IvpOptions::default().with_tol(1e-13),
                ..NewtonOptions::default()
            };
            let rec = Shooter::with_system(sys).options(opts).solve(&vec![0.0; 2 * alpha]).unwrap();
            let want = 1.0 / polyharmonic_constant(alpha, n);
            assert!(rel(rec.shooting.0[0], want) < 1e-8, "alpha={alpha} N={n}: {} vs {want}", rec.shooting.0[0]);
            assert!(rel(kalpha_constant(alpha, n).unwrap(), want) < 1e-14);
        }
    }
}

#[test]
fn locked_solution_first_order() {
    let params = ProblemParams::new(5, 1, 1, 2.0, 2.0).unwrap();
    let found = multistart_search(&Shooter::new(params), &SearchBox::uniform(2, 1.0, 1e5).unwrap(), 16, 1).unwrap();
    assert_eq!(found.len(), 1);
    let rec = &found[0];
    assert!(rec.residual_norm < 1e-8);
    for c in &rec.shooting.0 {
        assert!(rel(*c, 98.45002164644507) < 1e-7, "{c}");
    }
    assert!(check_solution_shape(rec).passed());
    let bound = norm_lower_bound(&params).unwrap();
    assert!(rec.sup_u > bound.u && rec.sup_v > bound.v);
}

#[test]
fn locked_solution_mixed_exponents() {
    let params = ProblemParams::new(5, 1, 1, 1.5, 2.0).unwrap();
    let found = multistart_search(&Shooter::new(params), &SearchBox::uniform(2, 1.0, 1e5).unwrap(), 16, 1).unwrap();
    assert_eq!(found.len(), 1);
    let c = &found[0].shooting.0;
    assert!(rel(c[0], 357.90962936547936) < 1e-7 && rel(c[1], 141.1427767702039) < 1e-7);
}

fn biharmonic_solution() -> SolutionRecord {
    let params = ProblemParams::new(6, 2, 1, 2.0, 2.0).unwrap();
    let c = [371.52963535975834, 24754.305142289573, 1631.7413836831424];
    let rec = Shooter::new(params).solve(&c).unwrap();
    assert!(rec.residual_norm < 1e-8);
    rec
}

#[test]
fn locked_solution_biharmonic() {
    let rec = biharmonic_solution();
    let want = [371.52963535975834, 24754.305142289573, 1631.7413836831424];
    for (c, w) in rec.shooting.0.iter().zip(want) {
        assert!(rel(*c, w) < 1e-7);
    }
    assert!(check_solution_shape(&rec).passed());
}

#[test]
fn picard_matches_ivp() {
    let params = ProblemParams::new(6, 2, 1, 2.0, 2.0).unwrap();
    let grid = RadialGrid::uniform(1025, 0.5).unwrap();
    for c in [[371.52963535975834, 24754.305142289573, 1631.7413836831424], [10.0, 300.0, 50.0]] {
        let pic = picard_fixed_point(c, &params, &grid, 500).unwrap();
        let ivp = integrate_ivp(&ShootingVector(c.to_vec()), &params, &grid).unwrap();
        let ivp = TripleProfile {
            grid: grid.clone(),
            x: ivp.chain_u[0].clone(),
            y: ivp.chain_u[1].clone(),
            z: ivp.chain_v[0].clone(),
        };
        assert!(pic.relative_distance(&ivp) < 1e-6);
        assert!(pic.fixed_point_residual(&params).unwrap() < 1e-7);
    }
}

#[test]
fn scale_match_identity_and_rescaling() {
    let rec = biharmonic_solution();
    let params = rec.params;
    let same = scale_match(&rec, rec.shooting.0[0], &params).unwrap();
    assert_eq!(same.lambda, 1.0);
    assert_eq!(same.profile.x[0], rec.shooting.0[0]);
    let half = scale_match(&rec, 0.5 * rec.shooting.0[0], &params).unwrap();
    assert!(half.lambda < 1.0);
    assert_eq!(half.profile.x[0], 0.5 * rec.shooting.0[0]);
    assert!(half.reintegration_residual < 1e-8, "{}", half.reintegration_residual);
    let up = scale_match(&rec, 3.0 * rec.shooting.0[0], &params).unwrap();
    assert!((up.profile.grid.r_max() - 1.0 / up.lambda).abs() < 1e-12);
    assert!(up.reintegration_residual < 1e-8);
}

#[test]
fn sign_trace_same_solution_is_identical() {
    let rec = biharmonic_solution();
    let pattern = sign_pattern_trace(&rec, &rec, &rec.params).unwrap();
    assert!(pattern.identical);
    assert_eq!(pattern.summary(), "profiles identical");
}

#[test]
fn sign_trace_flags_a_perturbed_profile() {
    let rec = biharmonic_solution();
    let mut fake = rec.clone();
    let nodes = fake.profile.grid.nodes().to_vec();
    for (i, r) in nodes.iter().enumerate() {
        let bump = 1.0 + 1e-3 * (12.0 * r).sin();
        fake.profile.chain_u[0][i] *= bump;
    }
    let pattern = trace_pattern(&rec, &fake, &rec.params).unwrap();
    assert!(!pattern.identical);
    assert!(!pattern.in_schedule, "{pattern:?}");
    assert!(matches!(
        sign_pattern_trace(&rec, &fake, &rec.params),
        Err(Error::ScheduleViolation(_))
    ));
}

#[test]
fn empty_box_scan_counts_nothing() {
    let params = ProblemParams::new(6, 2, 1, 2.0, 2.0).unwrap();
    let scan = uniqueness_scan(&params, &SearchBox::uniform(3, 0.0, 0.0).unwrap(), 4, 0).unwrap();
    assert_eq!(scan.count, 0);
    assert!(scan.pattern.is_none());
    assert!(scan.check().is_ok());
}

#[test]
fn scan_of_a_second_biharmonic_instance() {
    let params = ProblemParams::new(7, 2, 1, 1.5, 3.0).unwrap();
    let scan = uniqueness_scan(&params, &SearchBox::uniform(3, 1.0, 1e5).unwrap(), 100, 0).unwrap();
    assert!(scan.count <= 1);
    assert_eq!(scan.count, 1);
    let c = &scan.solutions[0].shooting.0;
    let want = [1329.4966682666925, 197888.45213870352, 369.43485943938595];
    for (x, w) in c.iter().zip(want) {
        assert!(rel(*x, w) < 1e-6);
    }
    assert!(scan.pattern.unwrap().identical);
}

#[test]
fn branch_returns_to_the_solution_and_rescales() {
    let params = ProblemParams::new(5, 1, 1, 2.0, 2.0).unwrap();
    let br = trace_branch(&Shooter::new(params), 10.0, &BranchOptions::default()).unwrap();
    assert_eq!(br.stop, StopReason::ReturnedToZero);
    let last = br.points.last().unwrap();
    assert_eq!(last.t, 0.0);
    assert!(rel(last.record.shooting.0[0], 98.45002164644507) < 1e-6);
    assert!(br.growth_factor() >= 1e3);
    let peak = br.points.iter().map(|p| p.t).fold(0.0, f64::max);
    assert!(peak > 1.0);

    let lp = limit_profile(&br, 6, 10.0, 1e3).unwrap();
    let rep = lp.to_report();
    assert!(rep.normalization.iter().all(|v| *v >= 0.5 - 1e-6));
    for s in [&rep.shift_u, &rep.shift_v] {
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
    }
    for sc in &lp.tail {
        assert!(sc.reintegration_defect(&params).unwrap() < 1e-6);
    }
}

#[test]
fn branch_needs_superlinear_exponents() {
    let params = ProblemParams::new(5, 1, 1, 0.5, 1.5).unwrap();
    assert!(matches!(
        trace_branch(&Shooter::new(params), 1.0, &BranchOptions::default()),
        Err(Error::InvalidParams(_))
    ));
}
