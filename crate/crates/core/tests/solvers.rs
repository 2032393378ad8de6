#![allow(clippy::needless_range_loop)]

mod common;

use common::{dense_of, dvec, random_pd, random_problem, rng, vec_of};
use exactpen::adal::{dual_from_s, p_update, Adal};
use exactpen::irwa::{dual_estimate, irwa_subproblem, next_t, relaxation_test, Irwa};
use exactpen::vector::norm2;
use exactpen::{
    adal_solve, cg_solve, dual_objective, duality_gap, irwa_solve, AdalConfig, AdalStop, CgConfig, ConvexPiece,
    ConvexSet, DualPoint, InitialEps, IrwaConfig, IrwaStop, LinearMap, PenaltyProblem, RelaxationVector, Termination,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn tight() -> CgConfig {
    CgConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_iters: None,
    }
}

fn dense_a(p: &PenaltyProblem) -> DMatrix<f64> {
    match p.a() {
        Some(a) => dense_of(a),
        None => DMatrix::zeros(0, p.n()),
    }
}

/// `min 1/2 x^2 + c x + |x - a|` in closed form.
fn scalar_problem(c: f64, a: f64) -> (PenaltyProblem, f64) {
    let p = PenaltyProblem::new(
        vec![c],
        LinearMap::identity(1),
        vec![ConvexPiece::new(LinearMap::identity(1), vec![-a], ConvexSet::zero(1)).unwrap()],
    )
    .unwrap();
    // stationarity: x + c + s = 0 with s in sign(x - a)
    let x = if -c - 1.0 > a {
        -c - 1.0
    } else if -c + 1.0 < a {
        -c + 1.0
    } else {
        a
    };
    (p, x)
}

#[test]
fn cg_matches_cholesky() {
    let mut r = rng(1);
    for n in [1, 3, 10, 25] {
        let h = random_pd(&mut r, n);
        let b = vec_of(&mut r, n);
        let out = cg_solve(&h, &b, &vec![0.0; n], &tight()).unwrap();
        let exact = dense_of(&h).cholesky().unwrap().solve(&dvec(&b));
        let err = (dvec(&out.x) - &exact).norm() / exact.norm().max(1.0);
        assert!(out.converged() && err < 1e-9, "n {n} err {err}");
    }
}

#[test]
fn cg_six_by_six_spd_with_rel_tol_1e10() {
    let mut r = rng(7);
    let h = random_pd(&mut r, 6);
    let b = vec_of(&mut r, 6);
    let cfg = CgConfig {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_iters: None,
    };
    let out = cg_solve(&h, &b, &[0.0; 6], &cfg).unwrap();
    let hd = dense_of(&h);
    let exact = hd.clone().cholesky().unwrap().solve(&dvec(&b));
    // |x - x*| <= |H^{-1}| |residual| <= rel_tol |b| / lambda_min
    let lmin = hd.symmetric_eigenvalues().min();
    assert!((dvec(&out.x) - exact).norm() <= 1e-10 * dvec(&b).norm() / lmin * (1.0 + 1e-6));
}

#[test]
fn cg_warm_start_at_solution_takes_no_steps() {
    let mut r = rng(2);
    let h = random_pd(&mut r, 6);
    let b = vec_of(&mut r, 6);
    let x = dense_of(&h).cholesky().unwrap().solve(&dvec(&b));
    let out = cg_solve(&h, &b, x.as_slice(), &CgConfig::default()).unwrap();
    assert_eq!(out.iters, 0);
}

#[test]
fn irwa_subproblem_matches_dense_solve() {
    for seed in 0..20 {
        let p = random_problem(seed, 6, 4);
        let mut r = rng(seed + 100);
        let c = vec_of(&mut r, 6);
        let eps = RelaxationVector::new((0..4).map(|_| r.random_range(0.05..2.0)).collect()).unwrap();
        let out = irwa_subproblem(&p, &c, &eps, &[0.0; 6], &tight()).unwrap();

        let a = dense_a(&p);
        let aff: Vec<f64> = (&a * dvec(&c)).iter().zip(p.b()).map(|(x, b)| x + b).collect();
        let mut w = DVector::zeros(p.m());
        let mut target = DVector::zeros(p.m());
        for i in 0..p.num_pieces() {
            let rg = p.range(i);
            let proj = p.set(i).project(&aff[rg.clone()]).unwrap();
            let d = aff[rg.clone()]
                .iter()
                .zip(&proj)
                .map(|(y, q)| (y - q).powi(2))
                .sum::<f64>();
            let wi = 1.0 / (d + eps.as_slice()[i].powi(2)).sqrt();
            for (k, j) in rg.enumerate() {
                w[j] = wi;
                target[j] = proj[k] - p.b()[j];
            }
        }
        let wd = DMatrix::from_diagonal(&w);
        let lhs = dense_of(p.h()) + a.transpose() * &wd * &a;
        let rhs = -dvec(p.g()) + a.transpose() * (&wd * target);
        let exact = lhs.cholesky().unwrap().solve(&rhs);
        let err = (dvec(&out.x) - &exact).norm() / exact.norm().max(1.0);
        assert!(err < 1e-9, "seed {seed} err {err}");
    }
}

#[test]
fn dual_objective_matches_dense_inverse() {
    for seed in 0..20 {
        let p = random_problem(seed, 5, 4);
        let mut r = rng(seed + 200);
        // feasible dual point: unit-ball blocks inside the support domain
        let mut blocks = Vec::new();
        for i in 0..p.num_pieces() {
            let mut u = vec_of(&mut r, p.range(i).len());
            if matches!(p.set(i), ConvexSet::NonPos { .. }) {
                u.iter_mut().for_each(|v| *v = v.abs());
            }
            let nu = norm2(&u);
            if nu > 1.0 {
                u.iter_mut().for_each(|v| *v /= nu);
            }
            blocks.push(u);
        }
        let dp = DualPoint { blocks };
        assert!(dp.is_feasible(&p, 0.0));
        let u = dp.stacked();
        let v = dvec(p.g()) + dense_a(&p).transpose() * dvec(&u);
        let hinv_v = dense_of(p.h()).try_inverse().unwrap() * &v;
        let support: f64 = (0..p.num_pieces())
            .map(|i| p.set(i).support(&u[p.range(i)]).unwrap())
            .sum();
        let expect = 0.5 * v.dot(&hinv_v) - dvec(p.b()).dot(&dvec(&u)) + support;
        let got = dual_objective(&p, &dp, &tight()).unwrap();
        assert!(
            (got - expect).abs() <= 1e-8 * (1.0 + expect.abs()),
            "seed {seed}: {got} vs {expect}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cg_residual_history_nonincreasing(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let h = random_pd(&mut r, n);
        let b = vec_of(&mut r, n);
        let out = cg_solve(&h, &b, &vec_of(&mut r, n), &tight()).unwrap();
        for w in out.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 10.0 * f64::EPSILON));
        }
    }

    #[test]
    fn cg_iterations_bounded_by_dimension(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let d: Vec<f64> = (0..n).map(|_| r.random_range(1.0..10.0)).collect();
        let b = vec_of(&mut r, n);
        let cfg = CgConfig { rel_tol: 1e-10, abs_tol: 0.0, max_iters: None };
        let out = cg_solve(&LinearMap::diagonal(d), &b, &vec![0.0; n], &cfg).unwrap();
        prop_assert!(out.converged() && out.iters <= n, "{} iterations for n = {}", out.iters, n);
    }

    #[test]
    fn weak_duality(seed in any::<u64>(), n in 1usize..6, l in 0usize..5) {
        let p = random_problem(seed, n, l);
        let mut r = rng(seed ^ 9);
        let x = vec_of(&mut r, n);
        let eps = RelaxationVector::uniform(l, r.random_range(0.01..1.0)).unwrap();
        // IRWA's estimate at any point is dual feasible
        let u = dual_estimate(&p, &x, &eps);
        let dp = DualPoint::from_stacked(&p, &u).unwrap();
        prop_assert!(dp.is_feasible(&p, 1e-12));
        let y = vec_of(&mut r, n);
        prop_assert!(duality_gap(&p, &y, &dp, &tight()).unwrap() >= -1e-8);
    }

    /// The ADAL dual estimate lies in the unit ball, equals
    /// `u_{k+1} - q / mu`, and `|s_i - p_i| <= mu` for every block.
    #[test]
    fn adal_dual_closed_form(seed in any::<u64>(), mu in 0.05f64..5.0) {
        let p = random_problem(seed, 5, 4);
        let cfg = AdalConfig { mu, max_iters: 12, cg: tight(), ..AdalConfig::default() };
        let mut s = Adal::new(&p, cfg, &[0.0; 5]).unwrap();
        while s.step().unwrap().is_some() {
            let info = s.last_step().unwrap();
            let pv = &s.state().p;
            for i in 0..p.num_pieces() {
                let rg = p.range(i);
                let gap: Vec<f64> = info.s[rg.clone()].iter().zip(&pv[rg.clone()]).map(|(a, b)| a - b).collect();
                prop_assert!(norm2(&gap) <= mu * (1.0 + 1e-12));
                prop_assert!(norm2(&info.dual[rg.clone()]) <= 1.0 + 1e-10);
            }
            let u = &s.state().u;
            for j in 0..p.m() {
                let alt = u[j] - info.q[j] / mu;
                prop_assert!((info.dual[j] - alt).abs() <= 1e-8 * (1.0 + alt.abs()), "{} vs {}", info.dual[j], alt);
            }
        }
    }

    #[test]
    fn p_update_solves_block_prox(seed in any::<u64>(), mu in 0.05f64..5.0) {
        let p = random_problem(seed, 4, 3);
        let mut r = rng(seed ^ 5);
        let sv: Vec<f64> = vec_of(&mut r, p.m()).into_iter().map(|v| 3.0 * v).collect();
        let pv = p_update(&p, &sv, mu);
        // p minimizes dist(p | C) + |p - s|^2 / (2 mu): probe perturbations
        let obj = |q: &[f64], i: usize| {
            let rg = p.range(i);
            p.set(i).distance(&q[rg.clone()]).unwrap()
                + q[rg.clone()].iter().zip(&sv[rg]).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * mu)
        };
        for i in 0..p.num_pieces() {
            let base = obj(&pv, i);
            for _ in 0..20 {
                let mut q = pv.clone();
                for j in p.range(i) {
                    q[j] += 1e-3 * r.random_range(-1.0..1.0);
                }
                prop_assert!(obj(&q, i) >= base - 1e-12);
            }
        }
        let d = dual_from_s(&p, &sv, mu);
        for i in 0..p.num_pieces() {
            prop_assert!(norm2(&d[p.range(i)]) <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn solvers_reach_scalar_minimizers() {
    for (c, a) in [(0.0, 1.0), (-3.0, 0.0), (0.5, -4.0), (2.0, 5.0)] {
        let (p, x_star) = scalar_problem(c, a);
        let j_star = p.eval_j0(&[x_star]).unwrap();
        let irwa = IrwaConfig {
            big_m: 0.01,
            eps0: InitialEps::Uniform(1.0),
            sigma: 1e-10,
            sigma_prime: 1e-10,
            max_iters: 5000,
            cg: tight(),
            ..IrwaConfig::default()
        };
        let ri = irwa_solve(&p, irwa, &[0.0]).unwrap();
        let adal = AdalConfig {
            mu: 1.0,
            sigma: 1e-10,
            sigma_dprime: 1e-10,
            cg: tight(),
            ..AdalConfig::default()
        };
        let ra = adal_solve(&p, adal, &[0.0]).unwrap();
        assert!(
            (ri.final_j0 - j_star).abs() < 1e-6,
            "irwa c {c} a {a}: {} vs {j_star}",
            ri.final_j0
        );
        assert!(
            (ra.x[0] - x_star).abs() < 1e-6,
            "adal c {c} a {a}: {} vs {x_star}",
            ra.x[0]
        );
        assert_eq!(ra.termination, Termination::Tolerance);
    }
}

#[test]
fn irwa_descends_and_keeps_dual_feasible() {
    for seed in 0..5 {
        let p = random_problem(seed + 300, 6, 5);
        let cfg = IrwaConfig {
            big_m: 0.1,
            eps0: InitialEps::Uniform(1.0),
            max_iters: 200,
            cg: CgConfig::with_rel_tol(1e-10),
            ..IrwaConfig::default()
        };
        let mut s = Irwa::new(&p, cfg, &[0.0; 6]).unwrap();
        let mut prev = s.trace()[0].smoothed;
        while let Some(row) = s.step().unwrap() {
            assert!(row.smoothed <= prev + 1e-8, "seed {seed}: {} > {prev}", row.smoothed);
            prev = row.smoothed;
            let u = s.dual_estimate();
            assert!(DualPoint::from_stacked(&p, &u).unwrap().is_feasible(&p, 1e-12));
        }
    }
}

#[test]
fn gap_stop_fires_for_both_solvers() {
    let p = random_problem(400, 6, 5);
    let irwa = IrwaConfig {
        big_m: 0.1,
        eps0: InitialEps::Uniform(1.0),
        stop: IrwaStop::GapReduction(0.05),
        max_iters: 5000,
        ..IrwaConfig::default()
    };
    let r = irwa_solve(&p, irwa, &[0.0; 6]).unwrap();
    assert_eq!(r.termination, Termination::GapReduced);
    assert!(r.final_gap <= 0.05 * r.reference_gap);
    let adal = AdalConfig {
        mu: 1.0,
        stop: AdalStop::GapReduction(0.05),
        max_iters: 5000,
        ..AdalConfig::default()
    };
    let r = adal_solve(&p, adal, &[0.0; 6]).unwrap();
    assert_eq!(r.termination, Termination::GapReduced);
    assert!(r.final_gap <= 0.05 * r.reference_gap);
}

#[test]
fn relaxation_test_and_t_sequence() {
    assert!(relaxation_test(&[0.5], &[0.0], &[1.0], 1.0, 0.5));
    assert!(!relaxation_test(&[2.0], &[0.0], &[1.0], 1.0, 0.5));
    let t2 = next_t(1.0);
    assert!((t2 - 0.5 * (1.0 + 5f64.sqrt())).abs() < 1e-15);
}

#[test]
fn invalid_configs_are_rejected() {
    let p = random_problem(1, 3, 2);
    let bad = IrwaConfig {
        eta: 1.0,
        ..IrwaConfig::default()
    };
    assert!(irwa_solve(&p, bad, &[0.0; 3]).is_err());
    let bad = AdalConfig {
        mu: 0.0,
        ..AdalConfig::default()
    };
    assert!(adal_solve(&p, bad, &[0.0; 3]).is_err());
    assert!(irwa_solve(&p, IrwaConfig::default(), &[0.0; 2]).is_err());
}
