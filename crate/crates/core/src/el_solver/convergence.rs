use super::{el_residual, par_map, solve_ivp};
use crate::calculus::DiffConfig;
use crate::error::{Error, Result};
use crate::function_space::{GridFunction, GridVector, PeriodicGrid};
use crate::lagrangian::{CurveInE, LagrangianSpec};
use crate::timegrid::TimeGrid;

/// Errors at or below this value carry no convergence information.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Closed-form curves `u(t, x)` with their time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactCurve {
    /// `offset + slope·t`, constant in space.
    Line { offset: f64, slope: f64 },
    /// `cos(ωt)·(1 + ½ sin x)`.
    Oscillator { omega: f64 },
    /// `sin(x − speed·t)`.
    TravelingWave { speed: f64 },
}

impl ExactCurve {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        match *self {
            Self::Line { offset, slope } => offset + slope * t,
            Self::Oscillator { omega } => (omega * t).cos() * (1.0 + 0.5 * x.sin()),
            Self::TravelingWave { speed } => (x - speed * t).sin(),
        }
    }

    pub fn velocity(&self, t: f64, x: f64) -> f64 {
        match *self {
            Self::Line { slope, .. } => slope,
            Self::Oscillator { omega } => -omega * (omega * t).sin() * (1.0 + 0.5 * x.sin()),
            Self::TravelingWave { speed } => -speed * (x - speed * t).cos(),
        }
    }

    pub fn at(&self, grid: PeriodicGrid, t: f64) -> GridFunction {
        GridFunction::from_fn(grid, |x, _| self.value(t, x)).expect("finite")
    }

    pub fn velocity_at(&self, grid: PeriodicGrid, t: f64) -> GridFunction {
        GridFunction::from_fn(grid, |x, _| self.velocity(t, x)).expect("finite")
    }

    pub fn curve(&self, time: TimeGrid, grid: PeriodicGrid) -> Result<CurveInE> {
        CurveInE::from_fn(time, grid, |t, x, _| self.value(t, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// `max_j p₀(R(t_j))` of the exact curve sampled on the grid.
    Residual,
    /// `max_j p₀(u_j − u(t_j))` of the leapfrog solution.
    Ivp,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Residual => "residual",
            Self::Ivp => "ivp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub steps: usize,
    pub dt: f64,
    pub h: f64,
    pub error: f64,
}

/// Fitted convergence order, or `Floor` when too few errors exceed
/// [`ERROR_FLOOR`] to fit a slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Fitted(f64),
    Floor,
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Fitted(v) => write!(f, "{v:.4}"),
            Self::Floor => f.write_str("floor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: StudyKind,
    pub rows: Vec<ConvergenceRow>,
    pub order: Order,
}

/// Pairs `N` and `M` lists into ladder points; a list of length one is
/// broadcast against the other.
pub fn pair_ladder(ns: &[usize], ms: &[usize]) -> Result<Vec<(usize, usize)>> {
    match (ns.len(), ms.len()) {
        (a, b) if a == b => Ok(ns.iter().copied().zip(ms.iter().copied()).collect()),
        (1, _) => Ok(ms.iter().map(|&m| (ns[0], m)).collect()),
        (_, 1) => Ok(ns.iter().map(|&n| (n, ms[0])).collect()),
        (a, b) => Err(Error::InvalidValue(format!(
            "ladder lists of lengths {a} and {b} cannot be paired"
        ))),
    }
}

/// Least-squares slope of `log error` against `log Δt`, or against `log h`
/// when `Δt` is fixed across the ladder.
pub fn fit_order(rows: &[ConvergenceRow]) -> Result<Order> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} ladder points, at least 3 are needed",
            rows.len()
        )));
    }
    let varies = |f: fn(&ConvergenceRow) -> f64| {
        rows.iter().any(|r| (f(r) / f(&rows[0]) - 1.0).abs() > 1e-12)
    };
    let scale: fn(&ConvergenceRow) -> f64 = if varies(|r| r.dt) {
        |r| r.dt
    } else if varies(|r| r.h) {
        |r| r.h
    } else {
        return Err(Error::InvalidValue("ladder does not refine Δt or h".into()));
    };
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > ERROR_FLOOR)
        .map(|r| (scale(r).ln(), r.error.ln()))
        .collect();
    if points.len() < 2 {
        return Ok(Order::Floor);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(Order::Fitted(sxy / sxx))
}

/// Measures errors along a refinement ladder of `(N, M)` points on `[a, b]`.
pub fn convergence_study(
    l: &LagrangianSpec,
    exact: &ExactCurve,
    ladder: &[(usize, usize)],
    interval: (f64, f64),
    kind: StudyKind,
    cfg: &DiffConfig,
) -> Result<ConvergenceTable> {
    if ladder.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} ladder points, at least 3 are needed",
            ladder.len()
        )));
    }
    let rows = par_map(ladder, |&(n, steps)| -> Result<ConvergenceRow> {
        let grid = if n == 1 {
            PeriodicGrid::point(1)?
        } else {
            PeriodicGrid::new(n, 1)?
        };
        let time = TimeGrid::new(interval.0, interval.1, steps)?;
        let error = match kind {
            StudyKind::Residual => el_residual(l, &exact.curve(time, grid)?, cfg)?.max_norm(),
            StudyKind::Ivp => {
                let u0 = exact.at(grid, time.start());
                let v0 = exact.velocity_at(grid, time.start());
                let report = solve_ivp(l, &u0, &v0, &time, cfg)?;
                time.times()
                    .zip(report.solution.samples())
                    .map(|(t, u)| (u - &exact.at(grid, t)).sup_norm())
                    .fold(0.0, f64::max)
            }
        };
        Ok(ConvergenceRow {
            n,
            steps,
            dt: time.dt(),
            h: grid.spacing(),
            error,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let order = fit_order(&rows)?;
    Ok(ConvergenceTable { kind, rows, order })
}
