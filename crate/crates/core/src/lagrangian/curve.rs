use crate::dubois_reymond::VariationField;
use crate::error::{Error, Result};
use crate::function_space::{GridFunction, GridVector, PeriodicGrid};
use crate::timegrid::{time_derivative, TimeGrid, TimeSeries};
use crate::weak_integral::PrimalCurve;

/// A sampled curve `c: [a,b] → E` with its canonical lift `(u, u′)`.
///
/// The lift is always recomputed from the samples with the 4th-order time
/// stencil, so `(u, u′)` is a lifted curve by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveInE {
    samples: PrimalCurve,
    lift: Vec<GridFunction>,
}

impl CurveInE {
    pub fn from_samples(time: TimeGrid, samples: Vec<GridFunction>) -> Result<Self> {
        Self::from_series(TimeSeries::new(time, samples)?)
    }

    pub fn from_series(samples: PrimalCurve) -> Result<Self> {
        let lift = time_derivative(samples.time(), samples.samples())?;
        Ok(Self { samples, lift })
    }

    /// Samples `u(t, x, component)` on the space-time grid.
    pub fn from_fn(
        time: TimeGrid,
        grid: PeriodicGrid,
        f: impl Fn(f64, f64, usize) -> f64,
    ) -> Result<Self> {
        let samples = time
            .times()
            .map(|t| GridFunction::from_fn(grid, |x, c| f(t, x, c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(time, samples)
    }

    pub fn time(&self) -> &TimeGrid {
        self.samples.time()
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.samples.grid()
    }

    pub fn samples(&self) -> &[GridFunction] {
        self.samples.samples()
    }

    pub fn series(&self) -> &PrimalCurve {
        &self.samples
    }

    pub fn lift(&self) -> &[GridFunction] {
        &self.lift
    }

    /// `max_j p₀(u(t_j))`.
    pub fn sup_norm(&self) -> f64 {
        self.samples()
            .iter()
            .fold(0.0, |acc, s| acc.max(s.sup_norm()))
    }

    /// `c + s·A`. Its lift is `u′ + s·A′`: the variation vanishes on the
    /// endpoint margin, where the lift stencil and `A′` coincide, so this is
    /// also the recomputed canonical lift of the perturbed samples.
    pub fn perturbed(&self, variation: &VariationField, s: f64) -> Self {
        let mut samples = self.samples.samples().to_vec();
        let mut lift = self.lift.clone();
        for (j, (u, du)) in samples.iter_mut().zip(lift.iter_mut()).enumerate() {
            u.axpy(s, &variation.samples()[j]);
            du.axpy(s, &variation.derivative()[j]);
        }
        Self {
            samples: TimeSeries::new(*self.time(), samples).expect("same shape"),
            lift,
        }
    }

    /// Replaces the samples at interior nodes, keeping both endpoints.
    pub fn with_interior(&self, interior: Vec<GridFunction>) -> Result<Self> {
        let steps = self.time().steps();
        if interior.len() + 1 != steps {
            return Err(Error::InvalidValue(format!(
                "{} interior samples for {} steps",
                interior.len(),
                steps
            )));
        }
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(self.samples()[0].clone());
        samples.extend(interior);
        samples.push(self.samples()[steps].clone());
        Self::from_samples(*self.time(), samples)
    }
}
