//! Gateaux partial derivatives `D₁L(u,e)(f)` and `D₂L(u,e)(f)`.
//!
//! The finite-difference backend discretizes the limit `ξ → 0` with a
//! central stencil in `ξ`; the step is `max(fd_step · p₀(base), fd_floor)`
//! divided by `p₀(f)`, so the perturbation `ξf` has a size relative to the
//! base point.

use crate::error::{Error, Result};
use crate::function_space::{pair, DualDensity, FdOrder, GridFunction, GridVector};
use crate::lagrangian::LagrangianSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Analytic,
    FiniteDifference,
}

/// Which argument of `L(u, e)` is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// `D₁`, the configuration slot `u`.
    Position,
    /// `D₂`, the velocity slot `e`.
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    pub backend: Backend,
    pub fd_step: f64,
    pub fd_floor: f64,
    pub fd_order: FdOrder,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Analytic,
            fd_step: 1e-5,
            fd_floor: 1e-7,
            fd_order: FdOrder::Fourth,
        }
    }
}

impl DiffConfig {
    pub fn finite_difference() -> Self {
        Self {
            backend: Backend::FiniteDifference,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fd_step", self.fd_step), ("fd_floor", self.fd_floor)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidValue(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Absolute perturbation size for a base point of sup-norm `base_norm`.
    pub fn step_for(&self, base_norm: f64) -> f64 {
        (self.fd_step * base_norm).max(self.fd_floor)
    }
}

/// Central difference of `g` at 0 with step `xi`.
pub(crate) fn central_difference(
    order: FdOrder,
    xi: f64,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    Ok(match order {
        FdOrder::Second => (g(xi)? - g(-xi)?) / (2.0 * xi),
        FdOrder::Fourth => {
            let near = g(xi)? - g(-xi)?;
            let far = g(2.0 * xi)? - g(-2.0 * xi)?;
            (8.0 * near - far) / (12.0 * xi)
        }
    })
}

fn fd_partial(
    l: &LagrangianSpec,
    u: &GridFunction,
    e: &GridFunction,
    f: &GridFunction,
    slot: Slot,
    cfg: &DiffConfig,
) -> Result<f64> {
    let dir = f.sup_norm();
    if dir == 0.0 {
        return Ok(0.0);
    }
    let base = match slot {
        Slot::Position => u,
        Slot::Velocity => e,
    };
    let xi = cfg.step_for(base.sup_norm()) / dir;
    let mut shifted = base.clone();
    central_difference(cfg.fd_order, xi, |s| {
        shifted.as_mut_slice().copy_from_slice(base.as_slice());
        shifted.axpy(s, f);
        match slot {
            Slot::Position => l.evaluate(&shifted, e),
            Slot::Velocity => l.evaluate(u, &shifted),
        }
    })
}

/// `D_slot L(u, e)(f)`.
pub fn partial_derivative(
    l: &LagrangianSpec,
    u: &GridFunction,
    e: &GridFunction,
    f: &GridFunction,
    slot: Slot,
    cfg: &DiffConfig,
) -> Result<f64> {
    u.grid().ensure_same(e.grid(), "partial derivative")?;
    u.grid().ensure_same(f.grid(), "partial derivative direction")?;
    if cfg.backend == Backend::Analytic {
        if let Some(rho) = l.analytic_density(u, e, slot) {
            return pair(&rho?, f);
        }
    }
    fd_partial(l, u, e, f, slot, cfg)
}

/// The density `ρ` with `pair(ρ, f) = D_slot L(u,e)(f)` for all `f`.
///
/// Without a closed form, each of the `N·m` coordinate directions is probed
/// and rescaled by `N/(2π)` to undo the pairing weight.
pub fn gradient_density(
    l: &LagrangianSpec,
    u: &GridFunction,
    e: &GridFunction,
    slot: Slot,
    cfg: &DiffConfig,
) -> Result<DualDensity> {
    u.grid().ensure_same(e.grid(), "gradient density")?;
    if cfg.backend == Backend::Analytic {
        if let Some(rho) = l.analytic_density(u, e, slot) {
            return rho;
        }
    }
    let grid = *u.grid();
    let inv_weight = 1.0 / grid.weight();
    let mut density = Vec::with_capacity(grid.len());
    for i in 0..grid.n() {
        for c in 0..grid.m() {
            let probe = GridFunction::unit(grid, i, c);
            density.push(fd_partial(l, u, e, &probe, slot, cfg)? * inv_weight);
        }
    }
    DualDensity::from_density(grid, density)
}

/// `dL(u,e)(f,g) = D₁L(u,e)(f) + D₂L(u,e)(g)`.
pub fn total_derivative(
    l: &LagrangianSpec,
    u: &GridFunction,
    e: &GridFunction,
    f: &GridFunction,
    g: &GridFunction,
    cfg: &DiffConfig,
) -> Result<f64> {
    Ok(partial_derivative(l, u, e, f, Slot::Position, cfg)?
        + partial_derivative(l, u, e, g, Slot::Velocity, cfg)?)
}
