use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use varcalc_core::calculus::{gradient_density, partial_derivative, total_derivative, DiffConfig, Slot};
use varcalc_core::dubois_reymond::{dbr_defect, random_variation, weak_form_residual};
use varcalc_core::el_solver::el_residual;
use varcalc_core::function_space::{
    discrete_derivative, pair, DualDensity, FdOrder, GridFunction, GridVector, PeriodicGrid,
    SeminormFamily,
};
use varcalc_core::lagrangian::{action, first_variation, CurveInE, LagrangianSpec, VariationMode};
use varcalc_core::timegrid::{TimeGrid, TimeSeries};
use varcalc_core::weak_integral::{integrate_dual_curve, DualCurve, Quadrature};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn trig(grid: PeriodicGrid, c: &[f64; 6]) -> GridFunction {
    GridFunction::from_fn(grid, |x, k| {
        let x = x + k as f64;
        c[0] + c[1] * x.sin() + c[2] * x.cos() + c[3] * (2.0 * x).sin() + c[4] * (3.0 * x).cos()
            + c[5] * (x.sin()).exp()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-2.0..2.0f64)
}

fn builtin(index: usize) -> LagrangianSpec {
    match index % 5 {
        0 => LagrangianSpec::free_particle(),
        1 => LagrangianSpec::harmonic(1.3).unwrap(),
        2 => LagrangianSpec::wave(0.8).unwrap(),
        3 => LagrangianSpec::sine_gordon(1.1, 0.7).unwrap(),
        _ => LagrangianSpec::user_density("0.5*e^2 - 0.5*ux^2 - cos(u) + 0.1*sin(x)*u").unwrap(),
    }
}

fn smooth_curve(time: TimeGrid, grid: PeriodicGrid, c: &[f64; 6]) -> CurveInE {
    CurveInE::from_fn(time, grid, |t, x, k| {
        let x = x + 0.5 * k as f64;
        c[0] + c[1] * t + c[2] * (t + x).sin() + c[3] * (2.0 * t).cos() * x.cos()
            + c[4] * t * t * (2.0 * x).sin()
            + c[5] * (x - 0.5 * t).cos()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn seminorms_are_seminorms(
        a in coeffs(),
        b in coeffs(),
        alpha in -5.0..5.0f64,
        n in prop::sample::select(vec![8usize, 16, 32]),
        m in 1usize..3,
        k in 0usize..4,
    ) {
        let g = PeriodicGrid::new(n, m).unwrap();
        let family = SeminormFamily::new(3);
        let (u, v) = (trig(g, &a), trig(g, &b));
        let p = |w: &GridFunction| family.seminorm(w, k).unwrap();
        prop_assert!(p(&u) >= 0.0);
        prop_assert!(close(p(&u.scaled(alpha)), alpha.abs() * p(&u), 1e-12));
        let mut sum = u.clone();
        sum.axpy(1.0, &v);
        prop_assert!(p(&sum) <= (p(&u) + p(&v)) * (1.0 + 1e-12) + 1e-12);
        if k > 0 {
            prop_assert!(p(&u) >= family.seminorm(&u, k - 1).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pairing_is_bilinear(
        a in coeffs(), b in coeffs(), c in coeffs(),
        alpha in -3.0..3.0f64, beta in -3.0..3.0f64,
        m in 1usize..4,
    ) {
        let g = PeriodicGrid::new(16, m).unwrap();
        let (u, v) = (trig(g, &a), trig(g, &b));
        let l = DualDensity::riesz(&trig(g, &c));
        let k = DualDensity::riesz(&u);
        let mut uv = u.scaled(alpha);
        uv.axpy(beta, &v);
        let lhs = pair(&l, &uv).unwrap();
        prop_assert!(close(lhs, alpha * pair(&l, &u).unwrap() + beta * pair(&l, &v).unwrap(), 1e-12));
        let mut lk = l.scaled(alpha);
        lk.axpy(beta, &k);
        let lhs = pair(&lk, &v).unwrap();
        prop_assert!(close(lhs, alpha * pair(&l, &v).unwrap() + beta * pair(&k, &v).unwrap(), 1e-12));
    }

    #[test]
    fn coordinate_evaluations_separate_points(
        a in coeffs(),
        i in 0usize..16,
        bump in 1e-9..1.0f64,
    ) {
        let g = PeriodicGrid::new(16, 2).unwrap();
        let u = trig(g, &a);
        let mut v = u.clone();
        v.axpy(bump, &GridFunction::unit(g, i, 1));
        let delta = DualDensity::coordinate_evaluation(g, i, 1);
        let diff = pair(&delta, &v).unwrap() - pair(&delta, &u).unwrap();
        prop_assert!(diff != 0.0);
        prop_assert!(close(diff, bump, 1e-6));
    }

    #[test]
    fn discrete_derivative_is_fourth_order(k in 1usize..4, phase in 0.0..PI) {
        let err = |n: usize| {
            let g = PeriodicGrid::new(n, 1).unwrap();
            let u = GridFunction::from_fn(g, |x, _| (k as f64 * x + phase).sin()).unwrap();
            let exact = GridFunction::from_fn(g, |x, _| k as f64 * (k as f64 * x + phase).cos()).unwrap();
            let mut d = discrete_derivative(&u, 1, FdOrder::Fourth).unwrap();
            d.axpy(-1.0, &exact);
            d.sup_norm()
        };
        let order = (err(64) / err(128)).log2();
        prop_assert!((order - 4.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn partial_derivatives_are_linear_and_match_finite_differences(
        which in 0usize..5,
        a in coeffs(), b in coeffs(), f in coeffs(), g in coeffs(),
        alpha in -2.0..2.0f64,
    ) {
        let l = builtin(which);
        let grid = PeriodicGrid::new(16, 1).unwrap();
        let (u, e) = (trig(grid, &a).scaled(0.3), trig(grid, &b).scaled(0.3));
        let (df, dg) = (trig(grid, &f), trig(grid, &g));
        let analytic = DiffConfig::default();
        let fd = DiffConfig::finite_difference();
        for slot in [Slot::Position, Slot::Velocity] {
            let mut comb = df.scaled(alpha);
            comb.axpy(1.0, &dg);
            let lhs = partial_derivative(&l, &u, &e, &comb, slot, &analytic).unwrap();
            let rhs = alpha * partial_derivative(&l, &u, &e, &df, slot, &analytic).unwrap()
                + partial_derivative(&l, &u, &e, &dg, slot, &analytic).unwrap();
            let tol = if l.has_analytic_densities() { 1e-10 } else { 1e-7 };
            prop_assert!(close(lhs, rhs, tol));
            let exact = partial_derivative(&l, &u, &e, &df, slot, &analytic).unwrap();
            let approx = partial_derivative(&l, &u, &e, &df, slot, &fd).unwrap();
            prop_assert!(close(exact, approx, 1e-6), "{slot:?}: {exact} vs {approx}");
        }
    }

    #[test]
    fn total_derivative_is_the_directional_derivative(
        which in 0usize..5,
        a in coeffs(), b in coeffs(), f in coeffs(), g in coeffs(),
    ) {
        let l = builtin(which);
        let grid = PeriodicGrid::new(16, 1).unwrap();
        let (u, e) = (trig(grid, &a).scaled(0.3), trig(grid, &b).scaled(0.3));
        let (df, dg) = (trig(grid, &f).scaled(0.2), trig(grid, &g).scaled(0.2));
        let along = |s: f64| {
            let mut us = u.clone();
            us.axpy(s, &df);
            let mut es = e.clone();
            es.axpy(s, &dg);
            l.evaluate(&us, &es).unwrap()
        };
        let s = 1e-3;
        let numeric = (8.0 * (along(s) - along(-s)) - (along(2.0 * s) - along(-2.0 * s))) / (12.0 * s);
        let d = total_derivative(&l, &u, &e, &df, &dg, &DiffConfig::default()).unwrap();
        prop_assert!(close(d, numeric, 1e-8), "{d} vs {numeric}");
    }

    #[test]
    fn weak_integral_is_linear_and_additive(
        a in coeffs(), b in coeffs(),
        alpha in -3.0..3.0f64,
        half in 4usize..20,
    ) {
        let g = PeriodicGrid::new(8, 1).unwrap();
        let steps = 4 * half;
        let time = TimeGrid::new(-0.3, 1.2, steps).unwrap();
        let q = Quadrature::default();
        let curve = |c: &[f64; 6]| -> DualCurve {
            TimeSeries::from_fn(time, |t| DualDensity::from_fn(g, |x, _| {
                c[0] + c[1] * t + c[2] * (t * x).sin() + c[3] * (2.0 * t).cos() * x.cos() + c[4] * t.powi(5)
            })).unwrap()
        };
        let (f, h) = (curve(&a), curve(&b));
        let comb = TimeSeries::new(
            time,
            f.samples().iter().zip(h.samples()).map(|(x, y)| {
                let mut z = x.scaled(alpha);
                z.axpy(1.0, y);
                z
            }).collect(),
        ).unwrap();
        let mut expect = integrate_dual_curve(&f, &q).unwrap().scaled(alpha);
        expect.axpy(1.0, &integrate_dual_curve(&h, &q).unwrap());
        let got = integrate_dual_curve(&comb, &q).unwrap();
        let scale = 1.0 + expect.sup_norm();
        for (x, y) in got.density().iter().zip(expect.density()) {
            prop_assert!((x - y).abs() <= 1e-13 * scale);
        }
        let split = 2 * half;
        let whole = integrate_dual_curve(&f, &q).unwrap();
        let mut parts = integrate_dual_curve(&f.slice(0, split).unwrap(), &q).unwrap();
        parts.axpy(1.0, &integrate_dual_curve(&f.slice(split, steps).unwrap(), &q).unwrap());
        let scale = 1.0 + whole.sup_norm();
        for (x, y) in parts.density().iter().zip(whole.density()) {
            prop_assert!((x - y).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn constant_h_means_dbr_defect_vanishes_and_weak_form_holds(
        a in coeffs(), k in coeffs(),
        w in 0.5..3.0f64,
        seed in any::<u64>(),
    ) {
        let g = PeriodicGrid::new(8, 1).unwrap();
        let time = TimeGrid::new(0.0, 1.0, 512).unwrap();
        let l = DualDensity::riesz(&trig(g, &a));
        let kappa = DualDensity::riesz(&trig(g, &k));
        let f: DualCurve = TimeSeries::from_fn(time, |t| Ok(l.scaled((w * t).cos()))).unwrap();
        let gc: DualCurve = TimeSeries::from_fn(time, |t| {
            let mut s = l.scaled((w * t).sin() / w);
            s.axpy(1.0, &kappa);
            Ok(s)
        }).unwrap();
        let scale = 1.0 + l.sup_norm() + kappa.sup_norm();
        prop_assert!(dbr_defect(&f, &gc).unwrap() <= 1e-10 * scale);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_variation(&mut rng, &time, &g).unwrap();
        let r = weak_form_residual(&f, &gc, &mu, &Quadrature::default()).unwrap();
        prop_assert!(r.abs() <= 1e-8 * mu.c1_norm() * scale);
    }

    #[test]
    fn dbr_with_zero_f_measures_the_spread_of_g(
        a in coeffs(),
        beta in 0.1..2.0f64,
        w in 0.5..4.0f64,
    ) {
        let g = PeriodicGrid::new(8, 1).unwrap();
        let time = TimeGrid::new(0.0, 1.0, 256).unwrap();
        let l = DualDensity::riesz(&trig(g, &a));
        let f: DualCurve = TimeSeries::from_fn(time, |_| Ok(DualDensity::zeros(g))).unwrap();
        let gc: DualCurve = TimeSeries::from_fn(time, |t| Ok(l.scaled(beta * (w * t).cos()))).unwrap();
        let mean = beta * w.sin() / w;
        let spread = time.times().map(|t| (beta * (w * t).cos() - mean).abs()).fold(0.0, f64::max);
        let defect = dbr_defect(&f, &gc).unwrap();
        prop_assert!(close(defect, spread * l.sup_norm(), 1e-8), "{defect} vs {}", spread * l.sup_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn action_is_additive_over_adjacent_intervals(
        which in 0usize..5,
        c in prop::array::uniform6(-0.7..0.7f64),
        split in 8usize..24,
    ) {
        let l = builtin(which);
        let g = PeriodicGrid::new(16, 1).unwrap();
        let q = Quadrature::default();
        let dt = 1.0 / 64.0;
        let mid = 2.0 * split as f64 * dt;
        let whole = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let left = TimeGrid::new(0.0, mid, 2 * split).unwrap();
        let right = TimeGrid::new(mid, 1.0, 64 - 2 * split).unwrap();
        let s = |t: TimeGrid| action(&l, &smooth_curve(t, g, &c), &q).unwrap();
        let (sw, sl, sr) = (s(whole), s(left), s(right));
        prop_assert!(close(sw, sl + sr, 1e-7), "{sw} vs {sl} + {sr}");
    }

    #[test]
    fn kinetic_density_matches_free_particle(
        a in coeffs(), b in coeffs(),
    ) {
        let user = LagrangianSpec::user_density("0.5*e^2").unwrap();
        let free = LagrangianSpec::free_particle();
        let g = PeriodicGrid::new(16, 1).unwrap();
        let (u, e) = (trig(g, &a), trig(g, &b));
        let cfg = DiffConfig::default();
        prop_assert!(close(user.evaluate(&u, &e).unwrap(), free.evaluate(&u, &e).unwrap(), 1e-12));
        for slot in [Slot::Position, Slot::Velocity] {
            let (x, y) = (
                gradient_density(&user, &u, &e, slot, &cfg).unwrap(),
                gradient_density(&free, &u, &e, slot, &cfg).unwrap(),
            );
            for (p, q) in x.density().iter().zip(y.density()) {
                prop_assert!((p - q).abs() <= 1e-7 * (1.0 + q.abs()));
            }
        }
        prop_assert!(close(user.energy(&u, &e, &cfg).unwrap(), free.energy(&u, &e, &cfg).unwrap(), 1e-7));
        let time = TimeGrid::new(0.0, 1.0, 32).unwrap();
        let curve = smooth_curve(time, g, &a.map(|v| 0.3 * v));
        let q = Quadrature::default();
        prop_assert!(close(action(&user, &curve, &q).unwrap(), action(&free, &curve, &q).unwrap(), 1e-12));
    }

    #[test]
    fn first_variation_is_the_residual_tested_against_the_variation(
        which in 0usize..5,
        c in prop::array::uniform6(-0.7..0.7f64),
        seed in any::<u64>(),
    ) {
        let l = builtin(which);
        let g = PeriodicGrid::new(16, 1).unwrap();
        let time = TimeGrid::new(0.0, 1.0, 128).unwrap();
        let q = Quadrature::default();
        let cfg = DiffConfig::default();
        let curve = smooth_curve(time, g, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_variation(&mut rng, &time, &g).unwrap();
        let tf = first_variation(&l, &curve, &mu, VariationMode::Densities, &cfg, &q).unwrap();
        let r = el_residual(&l, &curve, &cfg).unwrap();
        let w = q.weights(&time).unwrap();
        let tested: f64 = r
            .nodes()
            .zip(r.values())
            .map(|(j, rj)| w[j] * pair(rj, &mu.samples()[j]).unwrap())
            .sum();
        prop_assert!((tf - tested).abs() <= 1e-5 * mu.c1_norm(), "{tf} vs {tested}");
        let bound = 2.0 * PI * time.length() * r.max_norm() * mu.sup_norm();
        prop_assert!(tf.abs() <= bound + 1e-5 * mu.c1_norm());
    }

    #[test]
    fn exact_solutions_have_constant_dbr_momentum(
        amp in 0.2..2.0f64,
        omega in 0.5..2.0f64,
        phase in 0.0..PI,
    ) {
        let l = LagrangianSpec::harmonic(omega).unwrap();
        let g = PeriodicGrid::new(16, 1).unwrap();
        let time = TimeGrid::new(0.0, 1.0, 256).unwrap();
        let cfg = DiffConfig::default();
        let densities = |curve: &CurveInE| {
            let (mut r1, mut r2) = (Vec::new(), Vec::new());
            for (u, e) in curve.samples().iter().zip(curve.lift()) {
                r1.push(gradient_density(&l, u, e, Slot::Position, &cfg).unwrap());
                r2.push(gradient_density(&l, u, e, Slot::Velocity, &cfg).unwrap());
            }
            (TimeSeries::new(time, r1).unwrap(), TimeSeries::new(time, r2).unwrap())
        };
        let exact = CurveInE::from_fn(time, g, |t, x, _| amp * (omega * t + phase).cos() * (1.0 + 0.3 * x.sin())).unwrap();
        let (f, gc) = densities(&exact);
        prop_assert!(dbr_defect(&f, &gc).unwrap() <= 1e-8 * amp);
        let off = CurveInE::from_fn(time, g, |t, x, _| amp * (omega * t + phase).cos() * (1.0 + 0.3 * x.sin()) + 0.1 * amp * t * t).unwrap();
        let (f, gc) = densities(&off);
        let defect = dbr_defect(&f, &gc).unwrap();
        let residual = el_residual(&l, &off, &cfg).unwrap().max_norm();
        prop_assert!(defect > 1e-3 * amp);
        prop_assert!(defect <= time.length() * residual * (1.0 + 1e-6));
    }
}
