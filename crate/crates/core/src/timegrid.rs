//! Uniform time grids, sampled curves, and the 4th-order time-difference
//! operator used for canonical lifts.

use crate::error::{Error, Result};
use crate::function_space::{GridVector, PeriodicGrid};

/// Uniform grid `t_j = a + jΔt`, `j = 0..=steps`, on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    a: f64,
    b: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(a: f64, b: f64, steps: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidValue(format!("time interval [{a}, {b}] is empty")));
        }
        if steps == 0 {
            return Err(Error::InvalidValue("time grid needs at least one step".into()));
        }
        Ok(Self { a, b, steps })
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn dt(&self) -> f64 {
        (self.b - self.a) / self.steps as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == self.steps {
            self.b
        } else {
            self.a + j as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|j| self.t(j))
    }

    /// The sub-grid spanning nodes `j0..=j1`.
    pub fn sub(&self, j0: usize, j1: usize) -> Result<Self> {
        if j1 <= j0 || j1 > self.steps {
            return Err(Error::InvalidValue(format!(
                "sub-grid {j0}..={j1} outside 0..={}",
                self.steps
            )));
        }
        Ok(Self {
            a: self.t(j0),
            b: self.t(j1),
            steps: j1 - j0,
        })
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        let tol = 1e-12 * (self.length().abs() + self.a.abs());
        if self.steps != other.steps
            || (self.a - other.a).abs() > tol
            || (self.b - other.b).abs() > tol
        {
            return Err(Error::GridMismatch(format!(
                "{what}: time grids [{}, {}]/{} and [{}, {}]/{}",
                self.a, self.b, self.steps, other.a, other.b, other.steps
            )));
        }
        Ok(())
    }
}

/// Samples of a curve `[a, b] → V` on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<V> {
    time: TimeGrid,
    samples: Vec<V>,
}

impl<V: GridVector> TimeSeries<V> {
    pub fn new(time: TimeGrid, samples: Vec<V>) -> Result<Self> {
        if samples.len() != time.len() {
            return Err(Error::InvalidValue(format!(
                "{} samples for a time grid with {} nodes",
                samples.len(),
                time.len()
            )));
        }
        let grid = *samples[0].grid();
        for s in &samples[1..] {
            grid.ensure_same(s.grid(), "curve samples")?;
        }
        Ok(Self { time, samples })
    }

    pub fn from_fn(time: TimeGrid, f: impl Fn(f64) -> Result<V>) -> Result<Self> {
        let samples = time.times().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(time, samples)
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn samples(&self) -> &[V] {
        &self.samples
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.samples[0].grid()
    }

    pub fn into_samples(self) -> Vec<V> {
        self.samples
    }

    /// Restriction to nodes `j0..=j1`.
    pub fn slice(&self, j0: usize, j1: usize) -> Result<Self> {
        let time = self.time.sub(j0, j1)?;
        Ok(Self {
            time,
            samples: self.samples[j0..=j1].to_vec(),
        })
    }

    pub fn map<W: GridVector>(&self, f: impl Fn(&V) -> W) -> TimeSeries<W> {
        TimeSeries {
            time: self.time,
            samples: self.samples.iter().map(f).collect(),
        }
    }
}

pub(crate) const CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const FORWARD0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const FORWARD1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

/// Stencil for the derivative at node `j` of a grid with `steps` steps:
/// first sample index and coefficients, to be divided by `12Δt`.
pub(crate) fn derivative_stencil(j: usize, steps: usize) -> (usize, [f64; 5]) {
    let neg = |c: [f64; 5]| {
        let mut r = c;
        r.reverse();
        r.map(|v| -v)
    };
    match j {
        0 => (0, FORWARD0),
        1 => (0, FORWARD1),
        _ if j + 1 == steps => (steps - 4, neg(FORWARD1)),
        _ if j == steps => (steps - 4, neg(FORWARD0)),
        _ => (j - 2, CENTRAL),
    }
}

/// 4th-order time derivative of sampled values: centered in the interior,
/// one-sided 5-point at the two nodes nearest each endpoint.
pub fn time_derivative<V: GridVector>(time: &TimeGrid, samples: &[V]) -> Result<Vec<V>> {
    if time.steps() < 4 {
        return Err(Error::Precondition(format!(
            "time differences need at least 4 steps, got {}",
            time.steps()
        )));
    }
    if samples.len() != time.len() {
        return Err(Error::InvalidValue(format!(
            "{} samples for a time grid with {} nodes",
            samples.len(),
            time.len()
        )));
    }
    let scale = 1.0 / (12.0 * time.dt());
    Ok((0..time.len())
        .map(|j| {
            let (start, coeffs) = derivative_stencil(j, time.steps());
            stencil_apply(&samples[start..start + 5], &samples[j], &coeffs, scale)
        })
        .collect())
}

/// Centered 4th-order time derivative at an interior node `2 ≤ j ≤ steps-2`.
pub(crate) fn central_time_derivative<V: GridVector>(time: &TimeGrid, samples: &[V], j: usize) -> V {
    let scale = 1.0 / (12.0 * time.dt());
    stencil_apply(&samples[j - 2..=j + 2], &samples[j], &CENTRAL, scale)
}

/// `scale · Σ c_k (v_k − base)`; the coefficients sum to zero, and
/// differencing first makes constant samples differentiate to exactly zero.
fn stencil_apply<V: GridVector>(window: &[V], base: &V, coeffs: &[f64; 5], scale: f64) -> V {
    let mut out = V::zeros(*base.grid());
    let b = base.as_slice();
    for (v, c) in window.iter().zip(coeffs) {
        if *c == 0.0 {
            continue;
        }
        for ((o, x), y) in out.as_mut_slice().iter_mut().zip(v.as_slice()).zip(b) {
            *o += c * (x - y);
        }
    }
    for o in out.as_mut_slice() {
        *o *= scale;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::GridFunction;

    #[test]
    fn stencils_are_exact_on_quartics() {
        let time = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let g = PeriodicGrid::point(1).unwrap();
        let p = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - t.powi(3) + 0.5 * t.powi(4);
        let dp = |t: f64| -2.0 + 6.0 * t - 3.0 * t * t + 2.0 * t.powi(3);
        let samples: Vec<GridFunction> = time
            .times()
            .map(|t| GridFunction::from_values(g, vec![p(t)]).unwrap())
            .collect();
        let d = time_derivative(&time, &samples).unwrap();
        for (j, t) in time.times().enumerate() {
            assert!((d[j].get(0, 0) - dp(t)).abs() < 1e-11, "node {j}");
        }
    }

    #[test]
    fn too_few_steps() {
        let time = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let g = PeriodicGrid::point(1).unwrap();
        let s = vec![GridFunction::zeros(g); 4];
        assert!(time_derivative(&time, &s).is_err());
    }

    #[test]
    fn sub_grid_endpoints() {
        let time = TimeGrid::new(0.0, 2.0, 8).unwrap();
        let sub = time.sub(2, 6).unwrap();
        assert_eq!(sub.steps(), 4);
        assert!((sub.start() - 0.5).abs() < 1e-15);
        assert!((sub.end() - 1.5).abs() < 1e-15);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
    }
}
