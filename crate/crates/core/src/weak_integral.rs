//! Vector-valued integration of curves in `E` and `E*`.
//!
//! Every rule here reduces to node weights `w_j`, so the integral of a
//! sampled curve is the nodewise combination `Σ w_j F(t_j)`. Pairing is
//! linear, hence `pair(∫F, e)` equals the scalar quadrature of
//! `t ↦ pair(F(t), e)` up to floating-point reassociation; that identity is
//! what [`verify_weak_property`] measures.

use rand::Rng;

use crate::error::{Error, Result};
use crate::function_space::{
    linear_combination, pair, DualDensity, GridFunction, GridVector,
};
use crate::timegrid::{TimeGrid, TimeSeries};

pub type DualCurve = TimeSeries<DualDensity>;
pub type PrimalCurve = TimeSeries<GridFunction>;

/// Quadrature rule over a uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    CompositeSimpson,
    /// `points`-point Gauss-Legendre on each cell, fed by the local cubic
    /// interpolant through the four nearest nodes.
    GaussLegendrePerCell { points: usize },
}

impl Quadrature {
    pub fn weights(&self, time: &TimeGrid) -> Result<Vec<f64>> {
        match *self {
            Self::CompositeSimpson => simpson_weights(time),
            Self::GaussLegendrePerCell { points } => gauss_cell_weights(time, points),
        }
    }

    /// Scalar quadrature of sampled values.
    pub fn integrate_scalar(&self, time: &TimeGrid, values: &[f64]) -> Result<f64> {
        let w = self.weights(time)?;
        if values.len() != w.len() {
            return Err(Error::InvalidValue(format!(
                "{} values for {} quadrature nodes",
                values.len(),
                w.len()
            )));
        }
        Ok(w.iter().zip(values).map(|(w, v)| w * v).sum())
    }
}

fn simpson_weights(time: &TimeGrid) -> Result<Vec<f64>> {
    let steps = time.steps();
    if !steps.is_multiple_of(2) {
        return Err(Error::Quadrature(format!(
            "composite Simpson needs an even number of steps, got M = {steps}"
        )));
    }
    let h3 = time.dt() / 3.0;
    Ok((0..=steps)
        .map(|j| {
            if j == 0 || j == steps {
                h3
            } else if j % 2 == 1 {
                4.0 * h3
            } else {
                2.0 * h3
            }
        })
        .collect())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_q`.
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(q);
    for k in 0..q {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=q {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

fn gauss_cell_weights(time: &TimeGrid, points: usize) -> Result<Vec<f64>> {
    if points == 0 || points > 32 {
        return Err(Error::Quadrature(format!(
            "Gauss-Legendre points per cell must be in 1..=32, got {points}"
        )));
    }
    let steps = time.steps();
    if steps < 3 {
        return Err(Error::Quadrature(format!(
            "per-cell Gauss-Legendre needs at least 3 steps for its cubic interpolant, got {steps}"
        )));
    }
    let dt = time.dt();
    let rule = gauss_legendre(points);
    let mut w = vec![0.0; steps + 1];
    for cell in 0..steps {
        let start = cell.saturating_sub(1).min(steps - 3);
        for &(xi, wi) in &rule {
            // Position in units of dt relative to node `start`.
            let s = (cell - start) as f64 + 0.5 * (xi + 1.0);
            for k in 0..4 {
                let mut basis = 1.0;
                for l in 0..4 {
                    if l != k {
                        basis *= (s - l as f64) / (k as f64 - l as f64);
                    }
                }
                w[start + k] += 0.5 * dt * wi * basis;
            }
        }
    }
    Ok(w)
}

fn integrate_series<V: GridVector>(series: &TimeSeries<V>, q: &Quadrature) -> Result<V> {
    let w = q.weights(series.time())?;
    let refs: Vec<&V> = series.samples().iter().collect();
    Ok(linear_combination(&w, &refs))
}

/// The vector `v ∈ E*` with `v(e) = ∫ F(t)(e) dt` for every `e`.
pub fn integrate_dual_curve(curve: &DualCurve, q: &Quadrature) -> Result<DualDensity> {
    integrate_series(curve, q)
}

/// Nodewise integral of a curve in `E`.
pub fn integrate_primal_curve(curve: &PrimalCurve, q: &Quadrature) -> Result<GridFunction> {
    integrate_series(curve, q)
}

/// Running integral `t_j ↦ ∫_a^{t_j} F`: Simpson over successive cell pairs
/// at even nodes, a 3-point single-cell rule to reach odd nodes.
pub fn cumulative_integral<V: GridVector>(curve: &TimeSeries<V>) -> Result<TimeSeries<V>> {
    let time = *curve.time();
    let steps = time.steps();
    if steps < 2 {
        return Err(Error::Precondition(format!(
            "cumulative integral needs at least 2 steps, got {steps}"
        )));
    }
    let f = curve.samples();
    let dt = time.dt();
    let mut out: Vec<V> = Vec::with_capacity(steps + 1);
    out.push(V::zeros(*curve.grid()));
    for j in 1..=steps {
        let next = if j % 2 == 0 {
            // Simpson over [t_{j-2}, t_j].
            let c = dt / 3.0;
            linear_combination(&[1.0, c, 4.0 * c, c], &[&out[j - 2], &f[j - 2], &f[j - 1], &f[j]])
        } else if j < steps {
            // ∫ over [t_{j-1}, t_j] from nodes j-1, j, j+1.
            let c = dt / 12.0;
            linear_combination(
                &[1.0, 5.0 * c, 8.0 * c, -c],
                &[&out[j - 1], &f[j - 1], &f[j], &f[j + 1]],
            )
        } else {
            // Last cell of an odd grid, from nodes j-2, j-1, j.
            let c = dt / 12.0;
            linear_combination(
                &[1.0, -c, 8.0 * c, 5.0 * c],
                &[&out[j - 1], &f[j - 2], &f[j - 1], &f[j]],
            )
        };
        out.push(next);
    }
    TimeSeries::new(time, out)
}

/// Outcome of probing the weak-integral identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakPropertyReport {
    pub probes: usize,
    /// Largest `|pair(v, e) − Q(t ↦ pair(F(t), e))|`.
    pub max_abs: f64,
    /// `max_abs` relative to `|pair(v,e)| + Σ_j |w_j pair(F(t_j), e)|`.
    pub max_rel: f64,
}

/// Compares `pair(v, e)` with the scalar quadrature of `t ↦ pair(F(t), e)`
/// for `probes` random `e` with entries uniform in `[-1, 1]`.
pub fn verify_weak_property<R: Rng + ?Sized>(
    curve: &DualCurve,
    v: &DualDensity,
    q: &Quadrature,
    probes: usize,
    rng: &mut R,
) -> Result<WeakPropertyReport> {
    let grid = *curve.grid();
    grid.ensure_same(v.grid(), "weak-property probe")?;
    let w = q.weights(curve.time())?;
    let mut report = WeakPropertyReport {
        probes,
        max_abs: 0.0,
        max_rel: 0.0,
    };
    for _ in 0..probes {
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let e = GridFunction::from_values(grid, values)?;
        let lhs = pair(v, &e)?;
        let mut rhs = 0.0;
        let mut scale = lhs.abs();
        for (wj, fj) in w.iter().zip(curve.samples()) {
            let term = wj * pair(fj, &e)?;
            rhs += term;
            scale += term.abs();
        }
        let abs = (lhs - rhs).abs();
        let rel = if abs == 0.0 { 0.0 } else { abs / scale };
        report.max_abs = report.max_abs.max(abs);
        report.max_rel = report.max_rel.max(rel);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::PeriodicGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn base() -> DualDensity {
        let g = PeriodicGrid::new(16, 2).unwrap();
        DualDensity::from_fn(g, |x, c| x.sin() + 0.5 * c as f64 + 0.25).unwrap()
    }

    fn curve(a: f64, b: f64, steps: usize, f: impl Fn(f64) -> f64) -> DualCurve {
        let l = base();
        let time = TimeGrid::new(a, b, steps).unwrap();
        TimeSeries::from_fn(time, |t| Ok(l.scaled(f(t)))).unwrap()
    }

    fn err_to(v: &DualDensity, expected: &DualDensity) -> f64 {
        (v - expected).sup_norm()
    }

    #[test]
    fn constant_and_linear_curves() {
        let l = base();
        let q = Quadrature::default();
        let v = integrate_dual_curve(&curve(0.0, 1.0, 8, |_| 1.0), &q).unwrap();
        assert!(err_to(&v, &l) < 1e-14);
        let v = integrate_dual_curve(&curve(0.0, 1.0, 8, |t| t), &q).unwrap();
        assert!(err_to(&v, &l.scaled(0.5)) < 1e-14);
    }

    #[test]
    fn sine_curve_converges_at_fourth_order() {
        let l = base();
        let q = Quadrature::default();
        let err = |m| {
            let v = integrate_dual_curve(&curve(0.0, PI, m, f64::sin), &q).unwrap();
            err_to(&v, &l.scaled(2.0))
        };
        let (e64, e128) = (err(64), err(128));
        assert!(e64 < 1e-6);
        assert!((e64 / e128).log2() > 3.9);
    }

    #[test]
    fn simpson_rejects_odd_steps() {
        let c = curve(0.0, 1.0, 7, |t| t);
        assert!(matches!(
            integrate_dual_curve(&c, &Quadrature::CompositeSimpson),
            Err(Error::Quadrature(_))
        ));
    }

    #[test]
    fn gauss_rule_is_exact_for_cubics_and_fourth_order() {
        for q in 1..=8 {
            let s: f64 = gauss_legendre(q).iter().map(|(_, w)| w).sum();
            assert!((s - 2.0).abs() < 1e-14, "q = {q}");
        }
        let time = TimeGrid::new(0.0, 2.0, 7).unwrap();
        let vals: Vec<f64> = time.times().map(|t| t.powi(3) - t).collect();
        let gl = Quadrature::GaussLegendrePerCell { points: 3 };
        assert!((gl.integrate_scalar(&time, &vals).unwrap() - 2.0).abs() < 1e-13);

        let err = |m| {
            let time = TimeGrid::new(0.0, PI, m).unwrap();
            let vals: Vec<f64> = time.times().map(f64::sin).collect();
            (gl.integrate_scalar(&time, &vals).unwrap() - 2.0).abs()
        };
        assert!((err(32) / err(64)).log2() > 3.8);
    }

    #[test]
    fn primal_examples() {
        let g = PeriodicGrid::new(8, 1).unwrap();
        let u = GridFunction::from_fn(g, |x, _| x.cos() + 2.0).unwrap();
        let q = Quadrature::default();
        let mk = |a, b, m, f: &dyn Fn(f64) -> f64| {
            let time = TimeGrid::new(a, b, m).unwrap();
            TimeSeries::from_fn(time, |t| Ok(u.scaled(f(t)))).unwrap()
        };
        let v = integrate_primal_curve(&mk(0.0, 2.0, 4, &|t| t), &q).unwrap();
        assert!((&v - &u.scaled(2.0)).sup_norm() < 1e-14);
        let err = |m| {
            let v = integrate_primal_curve(&mk(0.0, PI / 2.0, m, &f64::cos), &q).unwrap();
            (&v - &u).sup_norm()
        };
        assert!((err(16) / err(32)).log2() > 3.9);
    }

    #[test]
    fn cumulative_examples() {
        let l = base();
        let zero = cumulative_integral(&curve(0.0, 1.0, 6, |_| 0.0)).unwrap();
        assert!(zero.samples().iter().all(|s| s.sup_norm() == 0.0));

        for steps in [6, 7] {
            let c = cumulative_integral(&curve(1.0, 2.0, steps, |_| 1.0)).unwrap();
            for (j, t) in c.time().times().enumerate() {
                assert!(err_to(&c.samples()[j], &l.scaled(t - 1.0)) < 1e-14);
            }
        }

        let err = |m| {
            let c = cumulative_integral(&curve(0.0, PI, m, f64::cos)).unwrap();
            c.time()
                .times()
                .enumerate()
                .map(|(j, t)| err_to(&c.samples()[j], &l.scaled(t.sin())))
                .fold(0.0, f64::max)
        };
        assert!((err(32) / err(64)).log2() >= 3.0);
    }

    #[test]
    fn cumulative_telescopes_to_the_full_integral() {
        let c = curve(0.0, 1.3, 10, |t| (3.0 * t).cos() + t * t);
        let run = cumulative_integral(&c).unwrap();
        let full = integrate_dual_curve(&c, &Quadrature::default()).unwrap();
        assert!(err_to(run.samples().last().unwrap(), &full) < 1e-12);
    }

    #[test]
    fn weak_property_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = Quadrature::default();
        let c = curve(0.0, 1.0, 16, |t| (2.0 * t).sin() + 1.0);
        let v = integrate_dual_curve(&c, &q).unwrap();
        let rep = verify_weak_property(&c, &v, &q, 20, &mut rng).unwrap();
        assert!(rep.max_rel <= 1e-12);

        let bumped = &v + &DualDensity::riesz(
            &GridFunction::constant(*v.grid(), 1e-3).unwrap(),
        );
        let rep = verify_weak_property(&c, &bumped, &q, 20, &mut rng).unwrap();
        assert!(rep.max_abs > 1e-6);

        let zero = curve(0.0, 1.0, 4, |_| 0.0);
        let rep = verify_weak_property(&zero, &DualDensity::zeros(*v.grid()), &q, 5, &mut rng)
            .unwrap();
        assert_eq!(rep.max_abs, 0.0);
    }
}
