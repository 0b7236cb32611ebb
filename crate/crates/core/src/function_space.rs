//! Discrete model of the space of smooth periodic fields `C^∞(S¹, ℝᵐ)`.
//!
//! A field is stored by its values on a uniform periodic grid of `N` nodes
//! `xᵢ = 2πi/N`. Derivatives are centered periodic finite differences, the
//! Fréchet structure is represented by the seminorms
//! `p_k(u) = max_{j ≤ k} max_i |Dʲu(xᵢ)|`, and dual elements are densities
//! acting through the periodic trapezoid pairing `(2π/N) Σᵢ ρᵢ·uᵢ`.
//!
//! Values are laid out node-major: component `c` of node `i` lives at index
//! `i * m + c`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, 2π)` carrying `m`-vector values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodicGrid {
    n: usize,
    m: usize,
}

impl PeriodicGrid {
    pub const MIN_NODES: usize = 8;

    /// Grid with `n` nodes, `n` a power of two no smaller than 8.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < Self::MIN_NODES || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N = {n} must be a power of two and at least {}",
                Self::MIN_NODES
            )));
        }
        if m == 0 {
            return Err(Error::InvalidGrid("fiber dimension m must be positive".into()));
        }
        Ok(Self { n, m })
    }

    /// Single-node grid. Fields on it are elements of ℝᵐ and every spatial
    /// derivative vanishes, which reduces the engine to classical mechanics.
    pub fn point(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGrid("fiber dimension m must be positive".into()));
        }
        Ok(Self { n: 1, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of stored scalars, `N·m`.
    pub fn len(&self) -> usize {
        self.n * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_point(&self) -> bool {
        self.n == 1
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Pairing weight `2π/N` of the periodic trapezoid rule.
    pub fn weight(&self) -> f64 {
        self.spacing()
    }

    pub fn node(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    pub fn refined(&self) -> Self {
        let n = if self.n == 1 { 1 } else { 2 * self.n };
        Self { n, m: self.m }
    }

    pub(crate) fn ensure_same(&self, other: &PeriodicGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: (N = {}, m = {}) vs (N = {}, m = {})",
                self.n, self.m, other.n, other.m
            )));
        }
        Ok(())
    }
}

/// Shared behavior of grid-sampled vectors (fields and densities).
pub trait GridVector: Clone + Sized {
    fn grid(&self) -> &PeriodicGrid;
    fn as_slice(&self) -> &[f64];
    fn as_mut_slice(&mut self) -> &mut [f64];
    /// Builds a vector without validation; `values.len()` must equal `grid.len()`.
    fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self;

    fn zeros(grid: PeriodicGrid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    fn sup_norm(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `self += alpha * other`.
    fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.grid(), other.grid(), "axpy across different grids");
        for (a, b) in self.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *a += alpha * b;
        }
    }

    fn scaled(&self, alpha: f64) -> Self {
        let values = self.as_slice().iter().map(|v| alpha * v).collect();
        Self::from_raw(*self.grid(), values)
    }

    fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

/// Sum `Σ coeffs[k] · items[k]`; all items must share one grid.
pub fn linear_combination<V: GridVector>(coeffs: &[f64], items: &[&V]) -> V {
    assert_eq!(coeffs.len(), items.len());
    assert!(!items.is_empty(), "empty linear combination");
    let grid = *items[0].grid();
    let mut out = vec![0.0; grid.len()];
    for (c, item) in coeffs.iter().zip(items) {
        assert_eq!(item.grid(), &grid, "linear combination across different grids");
        if *c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(item.as_slice()) {
            *o += c * v;
        }
    }
    V::from_raw(grid, out)
}

fn checked_values(grid: &PeriodicGrid, values: &[f64], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidValue(format!(
            "{what} has {} entries, grid needs N·m = {}",
            values.len(),
            grid.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "{what} entry {pos} is not finite ({})",
            values[pos]
        )));
    }
    Ok(())
}

macro_rules! grid_vector_impls {
    ($ty:ident, $field:ident) => {
        impl GridVector for $ty {
            fn grid(&self) -> &PeriodicGrid {
                &self.grid
            }
            fn as_slice(&self) -> &[f64] {
                &self.$field
            }
            fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.$field
            }
            fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), grid.len());
                Self { grid, $field: values }
            }
        }

        impl Add<&$ty> for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                let mut out = self.clone();
                out.axpy(1.0, rhs);
                out
            }
        }

        impl Sub<&$ty> for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                let mut out = self.clone();
                out.axpy(-1.0, rhs);
                out
            }
        }

        impl AddAssign<&$ty> for $ty {
            fn add_assign(&mut self, rhs: &$ty) {
                self.axpy(1.0, rhs);
            }
        }

        impl Mul<&$ty> for f64 {
            type Output = $ty;
            fn mul(self, rhs: &$ty) -> $ty {
                rhs.scaled(self)
            }
        }

        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.scaled(-1.0)
            }
        }
    };
}

/// A smooth periodic field sampled on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

grid_vector_impls!(GridFunction, values);

impl GridFunction {
    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        checked_values(&grid, &values, "grid function")?;
        Ok(Self { grid, values })
    }

    /// Samples `f(x, component)` at every node.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n() {
            let x = grid.node(i);
            for c in 0..grid.m() {
                values.push(f(x, c));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Result<Self> {
        Self::from_values(grid, vec![value; grid.len()])
    }

    /// Unit field at node `i`, component `c`.
    pub fn unit(grid: PeriodicGrid, i: usize, c: usize) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[i * grid.m() + c] = 1.0;
        Self { grid, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.grid.m() + c]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A dual element represented by its density: `l(u) = (2π/N) Σᵢ ρᵢ·uᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualDensity {
    grid: PeriodicGrid,
    density: Vec<f64>,
}

grid_vector_impls!(DualDensity, density);

impl DualDensity {
    pub fn from_density(grid: PeriodicGrid, density: Vec<f64>) -> Result<Self> {
        checked_values(&grid, &density, "dual density")?;
        Ok(Self { grid, density })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, usize) -> f64) -> Result<Self> {
        let u = GridFunction::from_fn(grid, f)?;
        Ok(Self::riesz(&u))
    }

    /// The functional `v ↦ ⟨u, v⟩` whose density equals the values of `u`.
    pub fn riesz(u: &GridFunction) -> Self {
        Self {
            grid: u.grid,
            density: u.values.clone(),
        }
    }

    /// Evaluation of component `c` at node `i`.
    pub fn coordinate_evaluation(grid: PeriodicGrid, i: usize, c: usize) -> Self {
        let mut density = vec![0.0; grid.len()];
        density[i * grid.m() + c] = 1.0 / grid.weight();
        Self { grid, density }
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.density[i * self.grid.m() + c]
    }

    /// The density read back as a field on the same grid.
    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.density.clone(),
        }
    }
}

/// `l(u) = (2π/N) Σᵢ ρᵢ·uᵢ`.
pub fn pair(l: &DualDensity, u: &GridFunction) -> Result<f64> {
    l.grid.ensure_same(&u.grid, "pairing")?;
    Ok(pair_unchecked(l.density(), u.values(), l.grid.weight()))
}

pub(crate) fn pair_unchecked(rho: &[f64], u: &[f64], weight: f64) -> f64 {
    weight * rho.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
}

/// Accuracy order of the centered first-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdOrder {
    Second,
    #[default]
    Fourth,
}

impl FdOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            other => Err(Error::InvalidValue(format!(
                "finite-difference order must be 2 or 4, got {other}"
            ))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Self::Second => 3,
            Self::Fourth => 5,
        }
    }
}

fn derivative_once(grid: &PeriodicGrid, src: &[f64], order: FdOrder) -> Vec<f64> {
    let (n, m) = (grid.n(), grid.m());
    if n == 1 {
        return vec![0.0; src.len()];
    }
    let h = grid.spacing();
    let at = |i: isize, c: usize| src[(i.rem_euclid(n as isize) as usize) * m + c];
    let mut out = vec![0.0; src.len()];
    for i in 0..n as isize {
        for c in 0..m {
            out[i as usize * m + c] = match order {
                FdOrder::Second => (at(i + 1, c) - at(i - 1, c)) / (2.0 * h),
                FdOrder::Fourth => {
                    (-at(i + 2, c) + 8.0 * at(i + 1, c) - 8.0 * at(i - 1, c) + at(i - 2, c))
                        / (12.0 * h)
                }
            };
        }
    }
    out
}

/// `j`-fold application of the centered periodic first-derivative stencil.
pub fn discrete_derivative(u: &GridFunction, j: usize, order: FdOrder) -> Result<GridFunction> {
    let grid = u.grid;
    if !grid.is_point() && grid.n() < order.width() {
        return Err(Error::Precondition(format!(
            "stencil of width {} does not fit on {} nodes",
            order.width(),
            grid.n()
        )));
    }
    let mut values = u.values.clone();
    for _ in 0..j {
        values = derivative_once(&grid, &values, order);
    }
    Ok(GridFunction { grid, values })
}

/// Seminorms `p_0 ≤ p_1 ≤ … ≤ p_{k_max}` generating the discrete C^∞ topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeminormFamily {
    pub max_order: usize,
    pub stencil: FdOrder,
}

impl SeminormFamily {
    pub fn new(max_order: usize) -> Self {
        Self {
            max_order,
            stencil: FdOrder::Fourth,
        }
    }

    pub fn seminorm(&self, u: &GridFunction, k: usize) -> Result<f64> {
        if k > self.max_order {
            return Err(Error::UnsupportedOrder {
                order: k,
                max: self.max_order,
            });
        }
        let mut current = u.clone();
        let mut best = current.sup_norm();
        for _ in 0..k {
            current = discrete_derivative(&current, 1, self.stencil)?;
            best = best.max(current.sup_norm());
        }
        Ok(best)
    }
}

/// Sup-norm seminorm `p_0`.
pub fn p0<V: GridVector>(v: &V) -> f64 {
    v.sup_norm()
}

/// Doubles the grid: even nodes keep their values, odd nodes take the
/// 4-point centered cubic interpolant.
pub fn refine(u: &GridFunction) -> GridFunction {
    let grid = u.grid;
    if grid.is_point() {
        return u.clone();
    }
    let (n, m) = (grid.n(), grid.m());
    let fine = grid.refined();
    let at = |i: isize, c: usize| u.values[(i.rem_euclid(n as isize) as usize) * m + c];
    let mut values = vec![0.0; fine.len()];
    for i in 0..n as isize {
        for c in 0..m {
            values[2 * i as usize * m + c] = at(i, c);
            let inner = at(i, c) + at(i + 1, c);
            let outer = at(i - 1, c) + at(i + 2, c);
            // Written as midpoint + correction so constants survive exactly.
            values[(2 * i as usize + 1) * m + c] = 0.5 * inner + (inner - outer) / 16.0;
        }
    }
    GridFunction { grid: fine, values }
}

/// Restriction to even nodes; the left inverse of [`refine`].
pub fn restrict_to_even(u: &GridFunction) -> Result<GridFunction> {
    let grid = u.grid;
    let coarse = PeriodicGrid::new(grid.n() / 2, grid.m())?;
    let m = grid.m();
    let mut values = Vec::with_capacity(coarse.len());
    for i in 0..coarse.n() {
        values.extend_from_slice(&u.values[2 * i * m..2 * i * m + m]);
    }
    Ok(GridFunction {
        grid: coarse,
        values,
    })
}
