//! Direct minimization of the action over interior node values.
//!
//! The discrete action is `S = Σ_j Δt/2 [L(u_j, v_j) + L(u_{j+1}, v_j)]`
//! with `v_j = (u_{j+1} − u_j)/Δt`; its stationarity conditions are the
//! Störmer–Verlet equations. Descent directions are preconditioned by the
//! inverse of the kinetic Hessian `tridiag(−1, 2, −1)/Δt`, which makes the
//! free particle a one-step solve.

use super::{el_residual, SolveReport};
use crate::calculus::{gradient_density, DiffConfig, Slot};
use crate::error::{Error, Result};
use crate::function_space::{pair, DualDensity, GridFunction, GridVector};
use crate::lagrangian::{CurveInE, LagrangianSpec};
use crate::timegrid::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct BvpOptions {
    pub max_iterations: usize,
    /// Stop once `max_k p₀(G_k)/Δt` falls to this value.
    pub gradient_tol: f64,
    /// Interior starting values; linear interpolation when absent.
    pub initial: Option<Vec<GridFunction>>,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tol: 1e-10,
            initial: None,
        }
    }
}

fn velocities(u: &[GridFunction], dt: f64) -> Vec<GridFunction> {
    u.windows(2).map(|w| (&w[1] - &w[0]).scaled(1.0 / dt)).collect()
}

/// Value of the discrete action and the sum of magnitudes of its terms.
fn action_with_scale(l: &LagrangianSpec, u: &[GridFunction], dt: f64) -> Result<(f64, f64)> {
    let (mut total, mut scale) = (0.0, 0.0);
    for (j, v) in velocities(u, dt).iter().enumerate() {
        let (a, b) = (l.evaluate(&u[j], v)?, l.evaluate(&u[j + 1], v)?);
        total += 0.5 * dt * (a + b);
        scale += 0.5 * dt * (a.abs() + b.abs());
    }
    Ok((total, scale))
}

/// Discrete action of node values `u_0, …, u_M`.
pub fn discrete_action(l: &LagrangianSpec, u: &[GridFunction], dt: f64) -> Result<f64> {
    Ok(action_with_scale(l, u, dt)?.0)
}

/// Gradient densities `G_k = ∂S/∂u_k` at the interior nodes `1..M`.
fn gradient(
    l: &LagrangianSpec,
    u: &[GridFunction],
    dt: f64,
    cfg: &DiffConfig,
) -> Result<Vec<DualDensity>> {
    let v = velocities(u, dt);
    struct Densities {
        position: DualDensity,
        velocity: DualDensity,
    }
    let at = |w: &GridFunction, vj: &GridFunction| -> Result<Densities> {
        Ok(Densities {
            position: gradient_density(l, w, vj, Slot::Position, cfg)?,
            velocity: gradient_density(l, w, vj, Slot::Velocity, cfg)?,
        })
    };
    // Segment j contributes L(u_j, v_j) ("start") and L(u_{j+1}, v_j) ("end").
    let mut start = Vec::with_capacity(v.len());
    let mut end = Vec::with_capacity(v.len());
    for (j, vj) in v.iter().enumerate() {
        start.push(at(&u[j], vj)?);
        end.push(at(&u[j + 1], vj)?);
    }
    Ok((1..u.len() - 1)
        .map(|k| {
            let position = (&end[k - 1].position + &start[k].position).scaled(0.5 * dt);
            let inflow = (&start[k - 1].velocity + &end[k - 1].velocity).scaled(0.5);
            let outflow = (&start[k].velocity + &end[k].velocity).scaled(0.5);
            &(&position + &inflow) - &outflow
        })
        .collect())
}

/// Solves `T x = r` in place for `T = tridiag(−1, 2, −1)`.
fn solve_kinetic(r: &mut [f64]) {
    let n = r.len();
    let mut c = vec![0.0; n];
    let mut denom = 2.0;
    c[0] = -1.0 / denom;
    r[0] /= denom;
    for i in 1..n {
        denom = 2.0 + c[i - 1];
        c[i] = -1.0 / denom;
        r[i] = (r[i] + r[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        r[i] -= c[i] * r[i + 1];
    }
}

fn direction(g: &[DualDensity], dt: f64) -> Vec<GridFunction> {
    let grid = *g[0].grid();
    let mut out: Vec<GridFunction> = vec![GridFunction::zeros(grid); g.len()];
    let mut column = vec![0.0; g.len()];
    for dof in 0..grid.len() {
        for (k, gk) in g.iter().enumerate() {
            column[k] = -dt * gk.as_slice()[dof];
        }
        solve_kinetic(&mut column);
        for (k, x) in column.iter().enumerate() {
            out[k].as_mut_slice()[dof] = *x;
        }
    }
    out
}

fn gradient_norm(g: &[DualDensity], dt: f64) -> f64 {
    g.iter().map(|gk| gk.sup_norm()).fold(0.0, f64::max) / dt
}

/// Minimizes the discrete action with `u(a) = u_a`, `u(b) = u_b` fixed.
///
/// Exhausting the iteration budget or stalling in the line search is
/// reported through `converged = false`, not as an error.
pub fn solve_bvp(
    l: &LagrangianSpec,
    ua: &GridFunction,
    ub: &GridFunction,
    time: &TimeGrid,
    cfg: &DiffConfig,
    opts: &BvpOptions,
) -> Result<SolveReport> {
    cfg.validate()?;
    ua.grid().ensure_same(ub.grid(), "boundary data")?;
    let steps = time.steps();
    let dt = time.dt();
    let mut u: Vec<GridFunction> = Vec::with_capacity(steps + 1);
    u.push(ua.clone());
    match &opts.initial {
        Some(interior) => {
            if interior.len() + 1 != steps {
                return Err(Error::InvalidValue(format!(
                    "{} initial interior values for {steps} steps",
                    interior.len()
                )));
            }
            for w in interior {
                ua.grid().ensure_same(w.grid(), "initial guess")?;
                u.push(w.clone());
            }
        }
        None => {
            let delta = ub - ua;
            for k in 1..steps {
                u.push(ua + &delta.scaled(k as f64 / steps as f64));
            }
        }
    }
    u.push(ub.clone());

    let (mut s, mut scale) = action_with_scale(l, &u, dt)?;
    let mut g = gradient(l, &u, dt, cfg)?;
    let mut gnorm = gradient_norm(&g, dt);
    let mut iterations = 0;
    let mut converged = gnorm <= opts.gradient_tol;
    while !converged && iterations < opts.max_iterations {
        let d = direction(&g, dt);
        let slope: f64 = g
            .iter()
            .zip(&d)
            .map(|(gk, dk)| pair(gk, dk))
            .sum::<Result<f64>>()?;
        let slack = 8.0 * f64::EPSILON * scale.max(s.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = u.clone();
            for (k, dk) in d.iter().enumerate() {
                trial[k + 1].axpy(alpha, dk);
            }
            if let Ok((st, sc)) = action_with_scale(l, &trial, dt) {
                if st <= s + 1e-4 * alpha * slope + slack {
                    accepted = Some((trial, st, sc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, st, sc)) = accepted else {
            break;
        };
        iterations += 1;
        u = trial;
        (s, scale) = (st, sc);
        g = gradient(l, &u, dt, cfg)?;
        gnorm = gradient_norm(&g, dt);
        converged = gnorm <= opts.gradient_tol;
    }

    let solution = CurveInE::from_samples(*time, u)?;
    let residual = el_residual(l, &solution, cfg)?;
    Ok(SolveReport {
        solution,
        iterations,
        residual,
        energy: None,
        action: Some(s),
        gradient_norm: Some(gnorm),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::PeriodicGrid;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(16, 1).unwrap()
    }

    #[test]
    fn kinetic_solve_inverts_tridiagonal() {
        let x: Vec<f64> = (0..7).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut r: Vec<f64> = (0..7)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i < 6 { x[i + 1] } else { 0.0 };
                2.0 * x[i] - left - right
            })
            .collect();
        solve_kinetic(&mut r);
        for (a, b) in r.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let l = LagrangianSpec::sine_gordon(1.0, 0.7).unwrap();
        let dt = 0.05;
        let u: Vec<GridFunction> = (0..9)
            .map(|j| {
                GridFunction::from_fn(grid(), |x, _| (x + 0.3 * j as f64).sin() * 0.4).unwrap()
            })
            .collect();
        let g = gradient(&l, &u, dt, &DiffConfig::default()).unwrap();
        let f = GridFunction::from_fn(grid(), |x, _| (2.0 * x).cos()).unwrap();
        for k in [1, 4, 7] {
            let at = |s: f64| {
                let mut w = u.clone();
                w[k].axpy(s, &f);
                discrete_action(&l, &w, dt).unwrap()
            };
            let h = 1e-4;
            let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            let exact = pair(&g[k - 1], &f).unwrap();
            assert!((fd - exact).abs() < 1e-9 * exact.abs().max(1.0), "{fd} {exact}");
        }
    }

    #[test]
    fn free_particle_gives_linear_interpolation() {
        let time = TimeGrid::new(0.0, 1.0, 32).unwrap();
        let ua = GridFunction::from_fn(grid(), |x, _| x.sin()).unwrap();
        let ub = GridFunction::from_fn(grid(), |x, _| 1.0 + x.cos()).unwrap();
        let mut middle = vec![GridFunction::constant(grid(), 3.0).unwrap(); 31];
        middle[5] = GridFunction::zeros(grid());
        let opts = BvpOptions {
            initial: Some(middle),
            ..BvpOptions::default()
        };
        let l = LagrangianSpec::free_particle();
        let r = solve_bvp(&l, &ua, &ub, &time, &DiffConfig::default(), &opts).unwrap();
        assert!(r.converged);
        for (j, t) in time.times().enumerate() {
            let exact = &ua + &(&ub - &ua).scaled(t);
            assert!((&r.solution.samples()[j] - &exact).sup_norm() < 1e-8);
        }
        assert_eq!(r.solution.samples()[0], ua);
        assert_eq!(r.solution.samples()[32], ub);
    }

    #[test]
    fn equal_endpoints_give_zero_action() {
        let time = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let ua = GridFunction::from_fn(grid(), |x, _| x.sin()).unwrap();
        let l = LagrangianSpec::free_particle();
        let r = solve_bvp(&l, &ua, &ua, &time, &DiffConfig::default(), &BvpOptions::default())
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.action, Some(0.0));
    }

    #[test]
    fn oscillator_boundary_problem() {
        let l = LagrangianSpec::harmonic(1.0).unwrap();
        let y = GridFunction::from_fn(grid(), |x, _| x.sin()).unwrap();
        let err = |m| {
            let time = TimeGrid::new(0.0, 1.0, m).unwrap();
            let r = solve_bvp(&l, &y, &y.scaled(1f64.cos()), &time, &DiffConfig::default(), &BvpOptions::default())
                .unwrap();
            assert!(r.converged);
            time.times()
                .enumerate()
                .map(|(j, t)| (&r.solution.samples()[j] - &y.scaled(t.cos())).sup_norm())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(32), err(64));
        assert!(fine < 1e-4, "{fine}");
        assert!(((coarse / fine).log2() - 2.0).abs() < 0.2);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let l = LagrangianSpec::harmonic(1.0).unwrap();
        let y = GridFunction::from_fn(grid(), |x, _| x.sin()).unwrap();
        let time = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let opts = BvpOptions {
            max_iterations: 1,
            gradient_tol: 1e-14,
            initial: None,
        };
        let r = solve_bvp(&l, &y, &GridFunction::zeros(grid()), &time, &DiffConfig::default(), &opts)
            .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.gradient_norm.unwrap() > 1e-14);
    }
}
