//! Test variations, the weak-form integral `∫ {f(μ) + g(μ′)} dt`, and the
//! constancy test for `h(t) = g(t) − ∫_a^t f`.
//!
//! Variations vanish on the first and last [`MARGIN_STEPS`] + 1 nodes. On
//! that margin the one-sided lift stencil reads only zeros, so `μ′` equals
//! the zero-extended centered difference everywhere and discrete
//! integration by parts against the quadrature leaves no boundary terms.

use rand::Rng;

use crate::error::{Error, Result};
use crate::function_space::{pair, DualDensity, GridFunction, GridVector, PeriodicGrid};
use crate::timegrid::{time_derivative, TimeGrid, TimeSeries};
use crate::weak_integral::{cumulative_integral, DualCurve, Quadrature};

/// Width of the endpoint margin, in time steps.
pub const MARGIN_STEPS: usize = 4;

/// Scalar profile `φ` of a variation `μ(t) = φ(t)·y`.
#[derive(Debug, Clone, PartialEq)]
pub enum BumpProfile {
    /// `exp(1 − 1/(1 − s²))`, `s = (t − center)/half_width`.
    Smooth { center: f64, half_width: f64 },
    /// `(1 − s²)³`.
    Polynomial { center: f64, half_width: f64 },
    /// Values given at the time nodes.
    Sampled(Vec<f64>),
}

fn smoothstep(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        z * z * z * (10.0 + z * (-15.0 + 6.0 * z))
    }
}

impl BumpProfile {
    pub fn smooth(center: f64, half_width: f64) -> Self {
        Self::Smooth { center, half_width }
    }

    pub fn polynomial(center: f64, half_width: f64) -> Self {
        Self::Polynomial { center, half_width }
    }

    /// The compactly supported profile built from an integrand `η`:
    /// `φ′ = w(η − κ)` with `w` a smooth plateau over the central
    /// `support_fraction` of the interval and `κ` the `w`-weighted mean of `η`,
    /// so `φ(a) = φ(b) = 0` and `∫ η φ′ = ∫ w (η − κ)² ≥ 0`.
    pub fn cumulative(time: &TimeGrid, integrand: &[f64], support_fraction: f64) -> Result<Self> {
        if integrand.len() != time.len() {
            return Err(Error::InvalidValue(format!(
                "{} integrand samples for {} nodes",
                integrand.len(),
                time.len()
            )));
        }
        if !(support_fraction > 0.0 && support_fraction <= 1.0) {
            return Err(Error::InvalidValue(format!(
                "support fraction {support_fraction} outside (0, 1]"
            )));
        }
        let inset = (0.5 * (1.0 - support_fraction) * time.length())
            .max(MARGIN_STEPS as f64 * time.dt());
        let (s0, s1) = (time.start() + inset, time.end() - inset);
        if s1 <= s0 {
            return Err(Error::SupportViolation {
                margin: MARGIN_STEPS,
                detail: format!("time grid with {} steps is too coarse", time.steps()),
            });
        }
        let ramp = 0.1 * (s1 - s0);
        let window: Vec<f64> = time
            .times()
            .map(|t| smoothstep((t - s0) / ramp) * smoothstep((s1 - t) / ramp))
            .collect();
        let grid = crate::function_space::PeriodicGrid::point(1)?;
        let scalar = |v: &[f64]| -> Result<Vec<f64>> {
            let series = TimeSeries::new(
                *time,
                v.iter()
                    .map(|x| GridFunction::from_values(grid, vec![*x]))
                    .collect::<Result<Vec<_>>>()?,
            )?;
            Ok(cumulative_integral(&series)?
                .samples()
                .iter()
                .map(|s| s.values()[0])
                .collect())
        };
        let weighted: Vec<f64> = window.iter().zip(integrand).map(|(w, e)| w * e).collect();
        let total_w = *scalar(&window)?.last().expect("non-empty");
        let total_we = *scalar(&weighted)?.last().expect("non-empty");
        let kappa = if total_w > 0.0 { total_we / total_w } else { 0.0 };
        let slope: Vec<f64> = window
            .iter()
            .zip(integrand)
            .map(|(w, e)| w * (e - kappa))
            .collect();
        let mut values = scalar(&slope)?;
        for (v, t) in values.iter_mut().zip(time.times()) {
            if t <= s0 || t >= s1 {
                *v = 0.0;
            }
        }
        Ok(Self::Sampled(values))
    }

    /// `φ(t_j)` at every node.
    pub fn sample(&self, time: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            Self::Smooth { center, half_width } | Self::Polynomial { center, half_width } => {
                if !(half_width.is_finite() && *half_width > 0.0 && center.is_finite()) {
                    return Err(Error::InvalidValue(format!(
                        "bump center {center}, half-width {half_width}"
                    )));
                }
                let smooth = matches!(self, Self::Smooth { .. });
                Ok(time
                    .times()
                    .map(|t| {
                        let s = (t - center) / half_width;
                        let q = 1.0 - s * s;
                        if q <= 0.0 {
                            0.0
                        } else if smooth {
                            (1.0 - 1.0 / q).exp()
                        } else {
                            q * q * q
                        }
                    })
                    .collect())
            }
            Self::Sampled(values) => {
                if values.len() != time.len() {
                    return Err(Error::InvalidValue(format!(
                        "{} profile samples for {} nodes",
                        values.len(),
                        time.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }

    /// Closed-form `φ′(t)`, when the profile has one.
    pub fn derivative_at(&self, t: f64) -> Option<f64> {
        match *self {
            Self::Smooth { center, half_width } => {
                let s = (t - center) / half_width;
                let q = 1.0 - s * s;
                Some(if q <= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / q).exp() * (-2.0 * s / (q * q)) / half_width
                })
            }
            Self::Polynomial { center, half_width } => {
                let s = (t - center) / half_width;
                let q = 1.0 - s * s;
                Some(if q <= 0.0 { 0.0 } else { -6.0 * s * q * q / half_width })
            }
            Self::Sampled(_) => None,
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Smooth { center, half_width } | Self::Polynomial { center, half_width } => {
                Some((center - half_width, center + half_width))
            }
            Self::Sampled(_) => None,
        }
    }
}

/// A compactly supported variation `μ: [a,b] → E` with its time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationField {
    samples: TimeSeries<GridFunction>,
    derivative: Vec<GridFunction>,
}

impl VariationField {
    /// Validates the endpoint margin and differentiates in time.
    pub fn from_samples(time: TimeGrid, samples: Vec<GridFunction>) -> Result<Self> {
        let steps = time.steps();
        if steps < 2 * MARGIN_STEPS + 2 {
            return Err(Error::SupportViolation {
                margin: MARGIN_STEPS,
                detail: format!("{steps} steps leave no interior for the support"),
            });
        }
        let series = TimeSeries::new(time, samples)?;
        for (j, s) in series.samples().iter().enumerate() {
            let in_margin = j <= MARGIN_STEPS || j >= steps - MARGIN_STEPS;
            if in_margin && s.sup_norm() != 0.0 {
                return Err(Error::SupportViolation {
                    margin: MARGIN_STEPS,
                    detail: format!("sample {j} (t = {}) is non-zero", time.t(j)),
                });
            }
        }
        let derivative = time_derivative(series.time(), series.samples())?;
        Ok(Self {
            samples: series,
            derivative,
        })
    }

    pub fn zeros(time: TimeGrid, grid: crate::function_space::PeriodicGrid) -> Result<Self> {
        Self::from_samples(time, vec![GridFunction::zeros(grid); time.len()])
    }

    pub fn time(&self) -> &TimeGrid {
        self.samples.time()
    }

    pub fn grid(&self) -> &crate::function_space::PeriodicGrid {
        self.samples.grid()
    }

    pub fn samples(&self) -> &[GridFunction] {
        self.samples.samples()
    }

    pub fn derivative(&self) -> &[GridFunction] {
        &self.derivative
    }

    /// `max_j p₀(μ(t_j))`.
    pub fn sup_norm(&self) -> f64 {
        self.samples()
            .iter()
            .fold(0.0, |acc, s| acc.max(s.sup_norm()))
    }

    /// `max_j p₀(μ′(t_j))`.
    pub fn derivative_sup_norm(&self) -> f64 {
        self.derivative
            .iter()
            .fold(0.0, |acc, s| acc.max(s.sup_norm()))
    }

    /// `p₀(μ) + p₀(μ′)` over the time grid, the scale used to normalize
    /// first variations.
    pub fn c1_norm(&self) -> f64 {
        self.sup_norm() + self.derivative_sup_norm()
    }
}

/// `μ(t) = φ(t)·y`.
pub fn make_test_variation(
    y: &GridFunction,
    profile: &BumpProfile,
    time: &TimeGrid,
) -> Result<VariationField> {
    let steps = time.steps();
    if steps < 2 * MARGIN_STEPS + 2 {
        return Err(Error::SupportViolation {
            margin: MARGIN_STEPS,
            detail: format!("{steps} steps leave no interior for the support"),
        });
    }
    let (lo, hi) = (time.t(MARGIN_STEPS), time.t(steps - MARGIN_STEPS));
    if let Some((s0, s1)) = profile.support() {
        let tol = 1e-12 * time.length();
        if s0 < lo - tol || s1 > hi + tol {
            return Err(Error::SupportViolation {
                margin: MARGIN_STEPS,
                detail: format!("profile support [{s0}, {s1}] leaves [{lo}, {hi}]"),
            });
        }
    }
    let phi = profile.sample(time)?;
    let samples = phi
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let in_margin = j <= MARGIN_STEPS || j >= steps - MARGIN_STEPS;
            if in_margin && p.abs() > 1e-300 && profile.support().is_none() {
                return Err(Error::SupportViolation {
                    margin: MARGIN_STEPS,
                    detail: format!("profile is {p} at node {j}"),
                });
            }
            Ok(if in_margin {
                GridFunction::zeros(*y.grid())
            } else {
                y.scaled(*p)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VariationField::from_samples(*time, samples)
}

/// A smooth bump with random center and half-width inside the admissible
/// support, times a random trigonometric polynomial of degree 3 per
/// component (a random vector on the point grid).
pub fn random_variation<R: Rng + ?Sized>(
    rng: &mut R,
    time: &TimeGrid,
    grid: &PeriodicGrid,
) -> Result<VariationField> {
    let steps = time.steps();
    if steps < 2 * MARGIN_STEPS + 2 {
        return Err(Error::SupportViolation {
            margin: MARGIN_STEPS,
            detail: format!("{steps} steps leave no interior for the support"),
        });
    }
    let (lo, hi) = (time.t(MARGIN_STEPS), time.t(steps - MARGIN_STEPS));
    let half_width = 0.5 * (hi - lo) * rng.random_range(0.2..=1.0);
    let center = if hi - lo > 2.0 * half_width {
        rng.random_range(lo + half_width..=hi - half_width)
    } else {
        0.5 * (lo + hi)
    };
    let coeffs: Vec<[f64; 7]> = (0..grid.m())
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
        .collect();
    let point = grid.is_point();
    let y = GridFunction::from_fn(*grid, |x, c| {
        let a = &coeffs[c];
        if point {
            return a[0];
        }
        (1..=3).fold(a[0], |acc, k| {
            let kx = k as f64 * x;
            acc + a[2 * k - 1] * kx.sin() + a[2 * k] * kx.cos()
        })
    })?;
    make_test_variation(&y, &BumpProfile::smooth(center, half_width), time)
}

/// Quadrature of `t ↦ f(t)(μ(t)) + g(t)(μ′(t))`.
pub fn weak_form_residual(
    f: &DualCurve,
    g: &DualCurve,
    mu: &VariationField,
    q: &Quadrature,
) -> Result<f64> {
    f.time().ensure_same(g.time(), "weak form (f, g)")?;
    f.time().ensure_same(mu.time(), "weak form (f, μ)")?;
    let w = q.weights(f.time())?;
    let mut total = 0.0;
    for (j, wj) in w.iter().enumerate() {
        total += wj
            * (pair(&f.samples()[j], &mu.samples()[j])?
                + pair(&g.samples()[j], &mu.derivative()[j])?);
    }
    Ok(total)
}

/// `h(t) = g(t) − ∫_a^t f`, its time average, and the constancy defect.
#[derive(Debug, Clone, PartialEq)]
pub struct DbrAnalysis {
    pub h: DualCurve,
    pub mean: DualDensity,
    /// `max_j p₀(h(t_j) − h̄)`.
    pub defect: f64,
}

pub fn dbr_analysis(f: &DualCurve, g: &DualCurve) -> Result<DbrAnalysis> {
    f.time().ensure_same(g.time(), "DuBois-Reymond (f, g)")?;
    f.grid().ensure_same(g.grid(), "DuBois-Reymond (f, g)")?;
    let running = cumulative_integral(f)?;
    let h_samples: Vec<DualDensity> = g
        .samples()
        .iter()
        .zip(running.samples())
        .map(|(gj, fj)| gj - fj)
        .collect();
    let h = TimeSeries::new(*f.time(), h_samples)?;
    let h0 = h.samples()[0].clone();
    let total = cumulative_integral(&h.map(|hj| hj - &h0))?;
    let mean = &h0
        + &total
            .samples()
            .last()
            .expect("non-empty")
            .scaled(1.0 / f.time().length());
    let defect = h
        .samples()
        .iter()
        .map(|hj| (hj - &mean).sup_norm())
        .fold(0.0, f64::max);
    Ok(DbrAnalysis { h, mean, defect })
}

/// The constancy defect of `h(t) = g(t) − ∫_a^t f`.
pub fn dbr_defect(f: &DualCurve, g: &DualCurve) -> Result<f64> {
    Ok(dbr_analysis(f, g)?.defect)
}

/// A variation certifying a non-zero defect: `y` is the unit field at the
/// node/component where `|h − h̄|` peaks and `φ` is the cumulative profile
/// built from `η(t) = (h(t) − h̄)(y)`. The weak-form residual along it is
/// `∫ w (η − κ)² dt` up to quadrature error.
pub fn dbr_witness(f: &DualCurve, g: &DualCurve, support_fraction: f64) -> Result<VariationField> {
    let analysis = dbr_analysis(f, g)?;
    let grid = *f.grid();
    let (mut best, mut at) = (-1.0, 0);
    for hj in analysis.h.samples() {
        for (k, (a, b)) in hj.density().iter().zip(analysis.mean.density()).enumerate() {
            if (a - b).abs() > best {
                best = (a - b).abs();
                at = k;
            }
        }
    }
    let y = GridFunction::unit(grid, at / grid.m(), at % grid.m());
    let eta = analysis
        .h
        .samples()
        .iter()
        .map(|hj| pair(&(hj - &analysis.mean), &y))
        .collect::<Result<Vec<_>>>()?;
    let profile = BumpProfile::cumulative(f.time(), &eta, support_fraction)?;
    make_test_variation(&y, &profile, f.time())
}
