//! Euler-Lagrange residuals, criticality checks and solvers.

mod bvp;
mod convergence;
mod ivp;

pub use bvp::{discrete_action, solve_bvp, BvpOptions};
pub use convergence::{
    convergence_study, fit_order, pair_ladder, ConvergenceRow, ConvergenceTable, ExactCurve, Order,
    StudyKind,
};
pub use ivp::solve_ivp;

use crate::calculus::{gradient_density, DiffConfig, Slot};
use crate::dubois_reymond::{make_test_variation, BumpProfile, VariationField, MARGIN_STEPS};
use crate::error::{Error, Result};
use crate::function_space::{DualDensity, GridFunction, GridVector, PeriodicGrid};
use crate::lagrangian::{first_variation, CurveInE, LagrangianSpec, VariationMode};
use crate::timegrid::{central_time_derivative, TimeGrid};
use crate::weak_integral::Quadrature;

/// Distance, in steps, between an endpoint and the first residual node.
pub const RESIDUAL_OFFSET: usize = 4;

/// `R(t_j) = ρ₁(t_j) − (d/dt ρ₂)(t_j)` on the interior nodes
/// `RESIDUAL_OFFSET ..= M − RESIDUAL_OFFSET`.
#[derive(Debug, Clone, PartialEq)]
pub struct ELResidual {
    time: TimeGrid,
    values: Vec<DualDensity>,
    max_norm: f64,
    l2_norm: f64,
}

impl ELResidual {
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// Node indices carrying a residual value.
    pub fn nodes(&self) -> std::ops::RangeInclusive<usize> {
        RESIDUAL_OFFSET..=self.time.steps() - RESIDUAL_OFFSET
    }

    pub fn values(&self) -> &[DualDensity] {
        &self.values
    }

    /// Residual at time node `j`, if `j` is a residual node.
    pub fn at(&self, j: usize) -> Option<&DualDensity> {
        j.checked_sub(RESIDUAL_OFFSET)
            .and_then(|k| self.values.get(k))
    }

    /// `max_j p₀(R(t_j))`.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// `(Σ_j Δt ‖R(t_j)‖²_{L²})^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm
    }
}

/// Evaluates the Euler-Lagrange residual along the lift of `c`.
pub fn el_residual(l: &LagrangianSpec, c: &CurveInE, cfg: &DiffConfig) -> Result<ELResidual> {
    let time = *c.time();
    let steps = time.steps();
    if steps < 2 * RESIDUAL_OFFSET {
        return Err(Error::Precondition(format!(
            "residual needs M >= {}, got {steps}",
            2 * RESIDUAL_OFFSET
        )));
    }
    let lo = RESIDUAL_OFFSET - 2;
    let rho2 = (lo..=steps - lo)
        .map(|j| gradient_density(l, &c.samples()[j], &c.lift()[j], Slot::Velocity, cfg))
        .collect::<Result<Vec<_>>>()?;
    let weight = c.grid().weight();
    let mut values = Vec::with_capacity(steps - 2 * RESIDUAL_OFFSET + 1);
    let (mut max_norm, mut sq) = (0.0f64, 0.0);
    for j in RESIDUAL_OFFSET..=steps - RESIDUAL_OFFSET {
        let rho1 = gradient_density(l, &c.samples()[j], &c.lift()[j], Slot::Position, cfg)?;
        let r = &rho1 - &central_time_derivative(&time, &rho2, j - lo);
        max_norm = max_norm.max(r.sup_norm());
        sq += time.dt() * weight * r.density().iter().map(|v| v * v).sum::<f64>();
        values.push(r);
    }
    if !(max_norm.is_finite() && sq.is_finite()) {
        return Err(Error::InvalidValue("residual is not finite".into()));
    }
    Ok(ELResidual {
        time,
        values,
        max_norm,
        l2_norm: sq.sqrt(),
    })
}

/// Direction modes for test variations, each of unit sup-norm: per
/// component, the constant and `sin kx`, `cos kx` for `k = 1, 2, 3`.
pub fn direction_modes(grid: &PeriodicGrid) -> Vec<GridFunction> {
    let mut out = Vec::new();
    for c in 0..grid.m() {
        if grid.is_point() {
            out.push(GridFunction::unit(*grid, 0, c));
            continue;
        }
        let mode = |f: &dyn Fn(f64) -> f64| {
            GridFunction::from_fn(*grid, |x, cc| if cc == c { f(x) } else { 0.0 })
                .expect("finite")
        };
        out.push(mode(&|_| 1.0));
        for k in 1..=3 {
            let k = k as f64;
            out.push(mode(&|x| (k * x).sin()));
            out.push(mode(&|x| (k * x).cos()));
        }
    }
    out
}

/// `count` variations cycling through [`direction_modes`] over evenly
/// spaced smooth bumps inside the admissible support.
pub fn variation_family(
    time: &TimeGrid,
    grid: &PeriodicGrid,
    count: usize,
) -> Result<Vec<VariationField>> {
    let steps = time.steps();
    if steps < 2 * MARGIN_STEPS + 2 {
        return Err(Error::Precondition(format!(
            "variations need at least {} steps, got {steps}",
            2 * MARGIN_STEPS + 2
        )));
    }
    let modes = direction_modes(grid);
    let centers = count.div_ceil(modes.len()).max(1);
    let (lo, hi) = (time.t(MARGIN_STEPS), time.t(steps - MARGIN_STEPS));
    let half_width = 0.25 * (hi - lo);
    let center = |k: usize| {
        if centers == 1 {
            0.5 * (lo + hi)
        } else {
            lo + half_width + (hi - lo - 2.0 * half_width) * k as f64 / (centers - 1) as f64
        }
    };
    (0..count)
        .map(|idx| {
            let profile = BumpProfile::smooth(center(idx / modes.len()), half_width);
            make_test_variation(&modes[idx % modes.len()], &profile, time)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    /// `|T_c F(A)| / (p₀(A) + p₀(A′))` per variation.
    pub normalized: Vec<f64>,
    pub max_normalized: f64,
    pub worst: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Maps `f` over `items` on scoped worker threads, preserving order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Checks `T_c F(A) ≈ 0` over a family of `k` compactly supported variations.
pub fn verify_critical(
    l: &LagrangianSpec,
    c: &CurveInE,
    k: usize,
    tol: f64,
    cfg: &DiffConfig,
    q: &Quadrature,
) -> Result<CriticalityReport> {
    let family = variation_family(c.time(), c.grid(), k)?;
    let normalized = par_map(&family, |a| {
        let norm = a.c1_norm();
        first_variation(l, c, a, VariationMode::Direct, cfg, q)
            .map(|d| if norm > 0.0 { d.abs() / norm } else { 0.0 })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (worst, max_normalized) = normalized
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(CriticalityReport {
        passed: max_normalized <= tol,
        normalized,
        max_normalized,
        worst,
        tol,
    })
}

/// Outcome of [`solve_ivp`] or [`solve_bvp`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: CurveInE,
    /// Time steps taken, or descent iterations.
    pub iterations: usize,
    pub residual: ELResidual,
    /// `D₂L(u,v)(v) − L(u,v)` per node, with the integrator's velocities.
    pub energy: Option<Vec<f64>>,
    /// Discrete action of the solution (boundary-value solves).
    pub action: Option<f64>,
    /// `max_k p₀(G_k)/Δt` of the discrete action gradient at exit.
    pub gradient_norm: Option<f64>,
    pub converged: bool,
}
