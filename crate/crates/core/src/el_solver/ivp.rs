use super::{el_residual, SolveReport};
use crate::calculus::{gradient_density, DiffConfig, Slot};
use crate::error::{Error, Result};
use crate::function_space::{GridFunction, GridVector};
use crate::lagrangian::{CurveInE, LagrangianSpec};
use crate::timegrid::TimeGrid;

/// Sup-norm beyond which a trajectory is declared divergent.
const OVERFLOW_GUARD: f64 = 1e150;

/// `u″ = ρ₁(u, 0)`: for `L = ½⟨e,e⟩ − V(u)` the velocity density is `e`
/// itself, so the Euler-Lagrange equation is Newton's law with this force.
fn force(l: &LagrangianSpec, u: &GridFunction, cfg: &DiffConfig) -> Result<GridFunction> {
    let zero = GridFunction::zeros(*u.grid());
    Ok(gradient_density(l, u, &zero, Slot::Position, cfg)?.to_grid_function())
}

fn check(step: usize, u: &GridFunction, v: &GridFunction) -> Result<()> {
    let size = u.sup_norm().max(v.sup_norm());
    if !(u.is_finite() && v.is_finite()) || size > OVERFLOW_GUARD {
        return Err(Error::Divergence {
            step,
            detail: format!("state sup-norm {size:e}"),
        });
    }
    Ok(())
}

/// Velocity-Verlet integration of `u″ = ρ₁(u, 0)` from `(u₀, v₀)`.
pub fn solve_ivp(
    l: &LagrangianSpec,
    u0: &GridFunction,
    v0: &GridFunction,
    time: &TimeGrid,
    cfg: &DiffConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    u0.grid().ensure_same(v0.grid(), "initial data")?;
    if !l.is_separable(u0.grid())? {
        return Err(Error::UnsupportedForm(format!(
            "{} is not of the form ½⟨e,e⟩ − V(u)",
            l.name()
        )));
    }
    let dt = time.dt();
    let (mut u, mut v) = (u0.clone(), v0.clone());
    check(0, &u, &v)?;
    let mut a = force(l, &u, cfg)?;
    let mut samples = Vec::with_capacity(time.len());
    let mut energy = Vec::with_capacity(time.len());
    samples.push(u.clone());
    energy.push(l.energy(&u, &v, cfg)?);
    let diverged = |step: usize| {
        move |err: Error| match err {
            Error::NonFiniteEvaluation { value, .. } => Error::Divergence {
                step,
                detail: format!("Lagrangian evaluated to {value}"),
            },
            other => other,
        }
    };
    for step in 1..=time.steps() {
        v.axpy(0.5 * dt, &a);
        u.axpy(dt, &v);
        check(step, &u, &v)?;
        a = force(l, &u, cfg).map_err(diverged(step))?;
        v.axpy(0.5 * dt, &a);
        check(step, &u, &v)?;
        samples.push(u.clone());
        energy.push(l.energy(&u, &v, cfg).map_err(diverged(step))?);
    }
    let solution = CurveInE::from_samples(*time, samples)?;
    let residual = el_residual(l, &solution, cfg)?;
    Ok(SolveReport {
        solution,
        iterations: time.steps(),
        residual,
        energy: Some(energy),
        action: None,
        gradient_norm: None,
        converged: true,
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
    fn free_particle_is_exact() {
        let time = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let a = GridFunction::from_fn(grid(), |x, _| x.sin()).unwrap();
        let b = GridFunction::from_fn(grid(), |x, _| 0.5 - x.cos()).unwrap();
        let r = solve_ivp(&LagrangianSpec::free_particle(), &a, &b, &time, &DiffConfig::default())
            .unwrap();
        for (j, t) in time.times().enumerate() {
            let exact = &a + &b.scaled(t);
            assert!((&r.solution.samples()[j] - &exact).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn oscillator_error_is_second_order() {
        let l = LagrangianSpec::harmonic(1.0).unwrap();
        let y = GridFunction::from_fn(grid(), |x, _| 1.0 + x.sin()).unwrap();
        let err = |m| {
            let time = TimeGrid::new(0.0, 2.0, m).unwrap();
            let r = solve_ivp(&l, &y, &GridFunction::zeros(grid()), &time, &DiffConfig::default())
                .unwrap();
            time.times()
                .enumerate()
                .map(|(j, t)| (&r.solution.samples()[j] - &y.scaled(t.cos())).sup_norm())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(100), err(200), err(400));
        for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
            assert!((order - 2.0).abs() < 0.2, "{order}");
        }
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let l = LagrangianSpec::user_density("0.5*e^2 + u^4").unwrap();
        let g = PeriodicGrid::new(8, 1).unwrap();
        let u0 = GridFunction::constant(g, 10.0).unwrap();
        let time = TimeGrid::new(0.0, 100.0, 200).unwrap();
        match solve_ivp(&l, &u0, &GridFunction::zeros(g), &time, &DiffConfig::default()) {
            Err(Error::Divergence { step, .. }) => assert!(step > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_separable_is_rejected() {
        let l = LagrangianSpec::user_density("0.5*e^2*(1 + u^2)").unwrap();
        let g = PeriodicGrid::new(8, 1).unwrap();
        let z = GridFunction::zeros(g);
        let time = TimeGrid::new(0.0, 1.0, 8).unwrap();
        assert!(matches!(
            solve_ivp(&l, &z, &z, &time, &DiffConfig::default()),
            Err(Error::UnsupportedForm(_))
        ));
    }
}
