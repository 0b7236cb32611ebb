//! Lagrangians `L: U × E → ℝ`, lifted curves, the action functional and its
//! first variation.

pub mod curve;
pub mod expr;

use crate::calculus::{gradient_density, DiffConfig, Slot};
use crate::dubois_reymond::VariationField;
use crate::error::{Error, Result};
use crate::function_space::{
    discrete_derivative, pair, pair_unchecked, DualDensity, FdOrder, GridFunction, GridVector,
};
use crate::weak_integral::Quadrature;

pub use curve::CurveInE;
pub use expr::{parse_density, DensityExpression};

#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianKind {
    /// `½⟨e,e⟩`
    FreeParticle,
    /// `½⟨e,e⟩ − ½ω²⟨u,u⟩`
    HarmonicField { omega: f64 },
    /// `½⟨e,e⟩ − ½c²⟨Dₓu,Dₓu⟩`
    Wave { c: f64 },
    /// `½⟨e,e⟩ − ½c²⟨Dₓu,Dₓu⟩ − β∫(1 − cos u)`
    SineGordon { c: f64, beta: f64 },
    /// `(2π/N) Σᵢ ℓ(xᵢ, uᵢ, (Dₓu)ᵢ, eᵢ)`, scalar fields only.
    UserDensity(DensityExpression),
}

/// A Lagrangian together with the spatial stencil used for `Dₓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    pub kind: LagrangianKind,
    pub stencil: FdOrder,
}

impl LagrangianSpec {
    pub fn new(kind: LagrangianKind) -> Result<Self> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidValue(format!(
                    "Lagrangian parameter {name} = {v} must be finite and non-negative"
                )))
            }
        };
        match &kind {
            LagrangianKind::HarmonicField { omega } => nonneg("omega", *omega)?,
            LagrangianKind::Wave { c } => nonneg("c", *c)?,
            LagrangianKind::SineGordon { c, beta } => {
                nonneg("c", *c)?;
                if !beta.is_finite() {
                    return Err(Error::InvalidValue(format!("beta = {beta} is not finite")));
                }
            }
            LagrangianKind::FreeParticle | LagrangianKind::UserDensity(_) => {}
        }
        Ok(Self {
            kind,
            stencil: FdOrder::Fourth,
        })
    }

    pub fn free_particle() -> Self {
        Self::new(LagrangianKind::FreeParticle).expect("valid")
    }

    pub fn harmonic(omega: f64) -> Result<Self> {
        Self::new(LagrangianKind::HarmonicField { omega })
    }

    pub fn wave(c: f64) -> Result<Self> {
        Self::new(LagrangianKind::Wave { c })
    }

    pub fn sine_gordon(c: f64, beta: f64) -> Result<Self> {
        Self::new(LagrangianKind::SineGordon { c, beta })
    }

    pub fn user_density(text: &str) -> Result<Self> {
        Self::new(LagrangianKind::UserDensity(parse_density(text)?))
    }

    pub fn with_stencil(mut self, stencil: FdOrder) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LagrangianKind::FreeParticle => "free-particle",
            LagrangianKind::HarmonicField { .. } => "harmonic",
            LagrangianKind::Wave { .. } => "wave",
            LagrangianKind::SineGordon { .. } => "sine-gordon",
            LagrangianKind::UserDensity(_) => "density",
        }
    }

    pub fn has_analytic_densities(&self) -> bool {
        !matches!(self.kind, LagrangianKind::UserDensity(_))
    }

    /// `L(u, e)`. Non-finite results are reported with the offending point.
    pub fn evaluate(&self, u: &GridFunction, e: &GridFunction) -> Result<f64> {
        u.grid().ensure_same(e.grid(), "Lagrangian arguments")?;
        let w = u.grid().weight();
        let kinetic = || 0.5 * pair_unchecked(e.values(), e.values(), w);
        let gradient_energy = |c: f64| -> Result<f64> {
            if c == 0.0 {
                return Ok(0.0);
            }
            let du = discrete_derivative(u, 1, self.stencil)?;
            Ok(0.5 * c * c * pair_unchecked(du.values(), du.values(), w))
        };
        let value = match &self.kind {
            LagrangianKind::FreeParticle => kinetic(),
            LagrangianKind::HarmonicField { omega } => {
                kinetic() - 0.5 * omega * omega * pair_unchecked(u.values(), u.values(), w)
            }
            LagrangianKind::Wave { c } => kinetic() - gradient_energy(*c)?,
            LagrangianKind::SineGordon { c, beta } => {
                let cosine: f64 = u.values().iter().map(|v| 1.0 - v.cos()).sum();
                kinetic() - gradient_energy(*c)? - beta * w * cosine
            }
            LagrangianKind::UserDensity(expr) => {
                let grid = u.grid();
                if grid.m() != 1 {
                    return Err(Error::UnsupportedForm(format!(
                        "density expressions take scalar fields, got m = {}",
                        grid.m()
                    )));
                }
                let du = discrete_derivative(u, 1, self.stencil)?;
                let mut sum = 0.0;
                for i in 0..grid.n() {
                    sum += expr.eval(grid.node(i), u.get(i, 0), du.get(i, 0), e.get(i, 0));
                }
                w * sum
            }
        };
        if !value.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                value,
                context: format!("{} Lagrangian", self.name()),
                point: Box::new((u.values().to_vec(), e.values().to_vec())),
            });
        }
        Ok(value)
    }

    /// Closed-form density of `D_slot L(u, e)`, when the kind provides one.
    ///
    /// The spatial stencil is antisymmetric, so `⟨Dₓu, Dₓf⟩ = −⟨Dₓ²u, f⟩`
    /// holds exactly on the grid and the gradient term contributes `c²Dₓ²u`.
    pub fn analytic_density(
        &self,
        u: &GridFunction,
        e: &GridFunction,
        slot: Slot,
    ) -> Option<Result<DualDensity>> {
        if let Err(err) = u.grid().ensure_same(e.grid(), "Lagrangian arguments") {
            return Some(Err(err));
        }
        let grid = *u.grid();
        let laplacian = |c: f64| -> Result<GridFunction> {
            Ok(discrete_derivative(u, 2, self.stencil)?.scaled(c * c))
        };
        let density = match (&self.kind, slot) {
            (LagrangianKind::UserDensity(_), _) => return None,
            (_, Slot::Velocity) => Ok(DualDensity::riesz(e)),
            (LagrangianKind::FreeParticle, Slot::Position) => Ok(DualDensity::zeros(grid)),
            (LagrangianKind::HarmonicField { omega }, Slot::Position) => {
                Ok(DualDensity::riesz(&u.scaled(-omega * omega)))
            }
            (LagrangianKind::Wave { c }, Slot::Position) => {
                laplacian(*c).map(|g| DualDensity::riesz(&g))
            }
            (LagrangianKind::SineGordon { c, beta }, Slot::Position) => laplacian(*c).map(|mut g| {
                for (gi, ui) in g.as_mut_slice().iter_mut().zip(u.values()) {
                    *gi -= beta * ui.sin();
                }
                DualDensity::riesz(&g)
            }),
        };
        Some(density)
    }

    /// Whether `L(u,e) = ½⟨e,e⟩ − V(u)`. Decided structurally for builtins and
    /// by probing `D₂L(u,e) = e` at sample points for density expressions.
    pub fn is_separable(&self, grid: &crate::function_space::PeriodicGrid) -> Result<bool> {
        if self.has_analytic_densities() {
            return Ok(true);
        }
        if grid.m() != 1 {
            return Ok(false);
        }
        let cfg = DiffConfig::finite_difference();
        let probes: [(f64, f64, f64); 3] = [(0.3, -0.7, 0.0), (-1.1, 0.4, 1.0), (0.8, 1.9, 2.0)];
        for (a, b, phase) in probes {
            let u = GridFunction::from_fn(*grid, |x, _| a * (x + phase).sin())?;
            let e = GridFunction::from_fn(*grid, |x, _| b * (2.0 * x - phase).cos() + 0.2)?;
            let rho = gradient_density(self, &u, &e, Slot::Velocity, &cfg)?;
            let scale = 1.0 + e.sup_norm();
            let mismatch = rho
                .density()
                .iter()
                .zip(e.values())
                .fold(0.0f64, |acc, (r, ev)| acc.max((r - ev).abs()));
            if mismatch > 1e-6 * scale {
                return Ok(false);
            }
            // The force must not depend on the velocity.
            let at_rest = GridFunction::zeros(*grid);
            let f1 = gradient_density(self, &u, &e, Slot::Position, &cfg)?;
            let f0 = gradient_density(self, &u, &at_rest, Slot::Position, &cfg)?;
            if (&f1 - &f0).sup_norm() > 1e-6 * (1.0 + f0.sup_norm()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `E = D₂L(u,e)(e) − L(u,e)`.
    pub fn energy(&self, u: &GridFunction, e: &GridFunction, cfg: &DiffConfig) -> Result<f64> {
        let rho = gradient_density(self, u, e, Slot::Velocity, cfg)?;
        Ok(pair(&rho, e)? - self.evaluate(u, e)?)
    }
}

/// `F(c) = ∫_J L(u(t), u′(t)) dt` by the given quadrature.
pub fn action(l: &LagrangianSpec, c: &CurveInE, q: &Quadrature) -> Result<f64> {
    let w = q.weights(c.time())?;
    let mut total = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let value = l.evaluate(&c.samples()[j], &c.lift()[j]).map_err(|err| match err {
            Error::NonFiniteEvaluation { value, context, point } => Error::NonFiniteEvaluation {
                value,
                context: format!("{context} at t = {}", c.time().t(j)),
                point,
            },
            other => other,
        })?;
        total += wj * value;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationMode {
    /// `d/ds F(c + sA)` at `s = 0`, by a central difference in `s`.
    Direct,
    /// `∫ {D₁L(u,u′)(μ) + D₂L(u,u′)(μ′)} dt`.
    Densities,
}

/// First variation `T_c F(A)` of the action along a compactly supported `A`.
pub fn first_variation(
    l: &LagrangianSpec,
    c: &CurveInE,
    variation: &VariationField,
    mode: VariationMode,
    cfg: &DiffConfig,
    q: &Quadrature,
) -> Result<f64> {
    c.time().ensure_same(variation.time(), "first variation")?;
    c.grid().ensure_same(variation.grid(), "first variation")?;
    let scale = variation.sup_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    match mode {
        VariationMode::Direct => {
            let step = cfg.step_for(c.sup_norm()) / scale;
            let at = |s: f64| action(l, &c.perturbed(variation, s), q);
            let d = match cfg.fd_order {
                FdOrder::Second => (at(step)? - at(-step)?) / (2.0 * step),
                FdOrder::Fourth => {
                    (-at(2.0 * step)? + 8.0 * at(step)? - 8.0 * at(-step)? + at(-2.0 * step)?)
                        / (12.0 * step)
                }
            };
            Ok(d)
        }
        VariationMode::Densities => {
            let w = q.weights(c.time())?;
            let mut total = 0.0;
            for (j, wj) in w.iter().enumerate() {
                let mu = &variation.samples()[j];
                let dmu = &variation.derivative()[j];
                if mu.sup_norm() == 0.0 && dmu.sup_norm() == 0.0 {
                    continue;
                }
                let (u, e) = (&c.samples()[j], &c.lift()[j]);
                let r1 = gradient_density(l, u, e, Slot::Position, cfg)?;
                let r2 = gradient_density(l, u, e, Slot::Velocity, cfg)?;
                total += wj * (pair(&r1, mu)? + pair(&r2, dmu)?);
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dubois_reymond::{make_test_variation, BumpProfile};
    use crate::function_space::PeriodicGrid;
    use crate::timegrid::TimeGrid;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(32, 1).unwrap()
    }

    #[test]
    fn parameters_are_validated() {
        assert!(LagrangianSpec::harmonic(-1.0).is_err());
        assert!(LagrangianSpec::wave(f64::NAN).is_err());
        assert!(LagrangianSpec::user_density("0.5*e^2 + q").is_err());
    }

    #[test]
    fn free_particle_actions() {
        let l = LagrangianSpec::free_particle();
        let q = Quadrature::default();
        let time = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let still = CurveInE::from_fn(time, grid(), |_, x, _| x.cos()).unwrap();
        assert_eq!(action(&l, &still, &q).unwrap(), 0.0);
        // ⟨1,1⟩ = 2π, so ½⟨y,y⟩ = π.
        let line = CurveInE::from_fn(time, grid(), |t, _, _| t).unwrap();
        assert!((action(&l, &line, &q).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn traveling_wave_action_cancels() {
        let l = LagrangianSpec::wave(1.0).unwrap();
        let q = Quadrature::default();
        let g = PeriodicGrid::new(64, 1).unwrap();
        let time = TimeGrid::new(0.0, 2.0 * PI, 128).unwrap();
        let c = CurveInE::from_fn(time, g, |t, x, _| (x - t).sin()).unwrap();
        let a = action(&l, &c, &q).unwrap();
        // Kinetic and gradient terms differ by stencil truncation only.
        assert!(a.abs() < 1e-4, "action {a}");
    }

    #[test]
    fn user_density_matches_free_particle() {
        let free = LagrangianSpec::free_particle();
        let user = LagrangianSpec::user_density("0.5*e^2").unwrap();
        let q = Quadrature::default();
        let time = TimeGrid::new(0.0, 1.0, 8).unwrap();
        let c = CurveInE::from_fn(time, grid(), |t, x, _| (t * x).sin() + t * t).unwrap();
        let a = action(&free, &c, &q).unwrap();
        let b = action(&user, &c, &q).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn separability() {
        let g = grid();
        assert!(LagrangianSpec::sine_gordon(1.0, 1.0).unwrap().is_separable(&g).unwrap());
        let sep = LagrangianSpec::user_density("0.5*e^2 - 0.5*ux^2 - u^4").unwrap();
        assert!(sep.is_separable(&g).unwrap());
        let non = LagrangianSpec::user_density("0.5*e^2*(1 + u^2)").unwrap();
        assert!(!non.is_separable(&g).unwrap());
    }

    #[test]
    fn nonfinite_evaluation_reports_point() {
        let l = LagrangianSpec::user_density("log(u)").unwrap();
        let u = GridFunction::constant(grid(), -1.0).unwrap();
        let e = GridFunction::zeros(grid());
        match l.evaluate(&u, &e) {
            Err(Error::NonFiniteEvaluation { point, .. }) => assert_eq!(point.0[0], -1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_variation_examples() {
        let q = Quadrature::default();
        let cfg = DiffConfig::default();
        let time = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let g = grid();
        let y = GridFunction::from_fn(g, |x, _| x.sin() + 0.3).unwrap();
        let bump = BumpProfile::polynomial(0.5, 0.3);
        let a = make_test_variation(&y, &bump, &time).unwrap();
        let zero = make_test_variation(&GridFunction::zeros(g), &bump, &time).unwrap();

        let free = LagrangianSpec::free_particle();
        let line = CurveInE::from_fn(time, g, |t, x, _| x.cos() + t * (2.0 * x).sin()).unwrap();
        for mode in [VariationMode::Direct, VariationMode::Densities] {
            assert_eq!(first_variation(&free, &line, &zero, mode, &cfg, &q).unwrap(), 0.0);
            let v = first_variation(&free, &line, &a, mode, &cfg, &q).unwrap();
            assert!(v.abs() < 1e-8, "{mode:?}: {v}");
        }

        let harmonic = LagrangianSpec::harmonic(1.0).unwrap();
        let ty = CurveInE::from_fn(time, g, |t, x, _| t * (x.sin() + 0.3)).unwrap();
        let direct = first_variation(&harmonic, &ty, &a, VariationMode::Direct, &cfg, &q).unwrap();
        let densities = first_variation(&harmonic, &ty, &a, VariationMode::Densities, &cfg, &q).unwrap();
        assert!(direct.abs() > 1e-2);
        assert!((direct - densities).abs() <= 1e-6 * direct.abs());
    }
}
