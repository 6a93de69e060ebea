//! Uniform abscissa grids and tabulated densities.
//!
//! Every distribution in the crate is reported as a [`DensityGrid`] (or
//! [`DensityGrid2`] for two pointers). Integrals are composite trapezoid sums;
//! for the Gaussian integrands used here this is accurate far below the
//! tolerances the checks care about, provided the step is a fraction of the
//! narrowest kernel width. [`Grid::covering`] enforces that.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 4001;
/// Half-width of a grid around a kernel centre, in kernel widths.
pub const DEFAULT_SPAN_WIDTHS: f64 = 8.0;
const MAX_POINTS: usize = 1_000_001;
/// Coarsest allowed step, as a fraction of the narrowest kernel width.
const MIN_SAMPLES_PER_WIDTH: f64 = 8.0;

/// Grid settings shared by all density-producing operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub span_widths: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: DEFAULT_POINTS,
            span_widths: DEFAULT_SPAN_WIDTHS,
        }
    }
}

impl GridConfig {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(Error::validation("grid.points", "need at least 3 points"));
        }
        if !(self.span_widths.is_finite() && self.span_widths > 0.0) {
            return Err(Error::validation("grid.span_widths", "must be positive"));
        }
        Ok(())
    }
}

/// A uniform grid `start, start + step, ..., start + (len - 1) * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    start: f64,
    step: f64,
    len: usize,
}

impl Grid {
    pub fn span(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must be finite with hi > lo, got [{lo}, {hi}]"
            )));
        }
        if points < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points".into(),
            ));
        }
        Ok(Self {
            start: lo,
            step: (hi - lo) / (points - 1) as f64,
            len: points,
        })
    }

    /// Grid covering every centre `± cfg.span_widths * width`.
    ///
    /// The point count is raised above `cfg.points` when the span is so wide
    /// relative to `width` that the step would exceed `width / 8`.
    pub fn covering<I>(centers: I, width: f64, cfg: &GridConfig) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in centers {
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument("grid needs finite centres".into()));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel width must be positive, got {width}"
            )));
        }
        let pad = cfg.span_widths * width;
        let (lo, hi) = (lo - pad, hi + pad);
        let needed = ((hi - lo) / width * MIN_SAMPLES_PER_WIDTH).ceil() as usize + 1;
        let points = cfg.points.max(needed).min(MAX_POINTS);
        Self::span(lo, hi, points)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.x(self.len - 1)
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.x(k))
    }

    pub fn tabulate(&self, f: impl FnMut(f64) -> f64) -> DensityGrid {
        DensityGrid {
            grid: *self,
            values: self.points().map(f).collect(),
        }
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// A function tabulated on a uniform grid (usually a probability density,
/// possibly unnormalized).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.step)
    }

    /// First moment divided by the integral.
    pub fn centroid(&self) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .points()
            .zip(&self.values)
            .map(|(x, v)| x * v)
            .collect();
        trapezoid(&weighted, self.grid.step) / self.integral()
    }

    pub fn peak(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Abscissa of the largest tabulated value.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        self.grid.x(best)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum absolute pointwise difference. Both grids must coincide.
    pub fn sup_distance(&self, other: &DensityGrid) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Sup-norm distance after dividing each grid by its own peak.
    pub fn peak_normalized_distance(&self, other: &DensityGrid) -> Result<f64> {
        self.check_same_grid(other)?;
        let (pa, pb) = (self.peak(), other.peak());
        if !(pa > 0.0 && pb > 0.0) {
            return Err(Error::InvalidArgument(
                "peak normalization needs positive peaks".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a / pa - b / pb).abs())
            .fold(0.0, f64::max))
    }

    /// Cumulative trapezoid integral, normalized so the last entry is 1.
    pub fn cdf(&self) -> Result<Vec<f64>> {
        let total = self.integral();
        if !(total > 0.0) {
            return Err(Error::SupportMismatch(
                "density has no positive mass".into(),
            ));
        }
        let h = self.grid.step;
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc / total);
        }
        Ok(out)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        interpolate(&self.grid, &self.values, x, 0.0, 0.0)
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= factor);
        self
    }

    fn check_same_grid(&self, other: &DensityGrid) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::SupportMismatch("density grids differ".into()));
        }
        Ok(())
    }
}

pub(crate) fn interpolate(grid: &Grid, values: &[f64], x: f64, below: f64, above: f64) -> f64 {
    if x < grid.start {
        return below;
    }
    let t = (x - grid.start) / grid.step;
    let k = t.floor() as usize;
    if k + 1 >= grid.len {
        return if k + 1 == grid.len && t == k as f64 {
            values[k]
        } else {
            above
        };
    }
    let frac = t - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}

/// A function of two readings `(x1, x2)` tabulated on a product grid,
/// stored x1-major: `values[i1 * x2.len() + i2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid2 {
    pub x1: Grid,
    pub x2: Grid,
    pub values: Vec<f64>,
}

impl DensityGrid2 {
    pub fn tabulate(x1: Grid, x2: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(x1.len() * x2.len());
        for a in x1.points() {
            for b in x2.points() {
                values.push(f(a, b));
            }
        }
        Self { x1, x2, values }
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.x2.len() + i2]
    }

    /// `∫ ρ(x1, x2) dx2` for each tabulated `x1`.
    pub fn marginal_x1(&self) -> DensityGrid {
        let n2 = self.x2.len();
        DensityGrid {
            grid: self.x1,
            values: self
                .values
                .chunks_exact(n2)
                .map(|row| trapezoid(row, self.x2.step))
                .collect(),
        }
    }

    /// `∫ ρ(x1, x2) dx1` for each tabulated `x2`.
    pub fn marginal_x2(&self) -> DensityGrid {
        let n2 = self.x2.len();
        let mut column = vec![0.0; self.x1.len()];
        let values = (0..n2)
            .map(|i2| {
                for (i1, c) in column.iter_mut().enumerate() {
                    *c = self.values[i1 * n2 + i2];
                }
                trapezoid(&column, self.x1.step)
            })
            .collect();
        DensityGrid {
            grid: self.x2,
            values,
        }
    }

    /// Iterated trapezoid double integral.
    pub fn integral(&self) -> f64 {
        self.marginal_x1().integral()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_is_exact_for_linear_functions() {
        let g = Grid::span(0.0, 2.0, 11).unwrap();
        let d = g.tabulate(|x| 3.0 * x + 1.0);
        assert!((d.integral() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass_on_default_grid() {
        let w = 2.5;
        let g = Grid::covering([1.0], w, &GridConfig::default()).unwrap();
        let d = g.tabulate(|x| (-(x - 1.0) * (x - 1.0) / (w * w)).exp() / (PI.sqrt() * w));
        assert!((d.integral() - 1.0).abs() < 1e-12);
        assert!((d.centroid() - 1.0).abs() < 1e-12);
        let cdf = d.cdf().unwrap();
        assert_eq!(cdf[0], 0.0);
        assert!((cdf[cdf.len() - 1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn covering_raises_resolution_for_narrow_kernels() {
        let g = Grid::covering([0.0, 100.0], 0.01, &GridConfig::default()).unwrap();
        assert!(g.step() <= 0.01 / 8.0 + 1e-15);
        assert!(g.start() < -0.079 && g.end() > 100.079);
    }

    #[test]
    fn interpolation_and_bounds() {
        let g = Grid::span(0.0, 1.0, 3).unwrap();
        let d = DensityGrid {
            grid: g,
            values: vec![0.0, 1.0, 4.0],
        };
        assert_eq!(d.value_at(-0.1), 0.0);
        assert!((d.value_at(0.25) - 0.5).abs() < 1e-15);
        assert!((d.value_at(0.75) - 2.5).abs() < 1e-15);
        assert_eq!(d.value_at(1.0), 4.0);
        assert_eq!(d.value_at(1.01), 0.0);
    }

    #[test]
    fn product_marginals() {
        let a = Grid::span(-6.0, 6.0, 601).unwrap();
        let b = Grid::span(-3.0, 5.0, 401).unwrap();
        let d = DensityGrid2::tabulate(a, b, |x, y| {
            (-x * x).exp() / PI.sqrt() * (-(y - 1.0) * (y - 1.0) / 0.25).exp() / (PI.sqrt() * 0.5)
        });
        assert!((d.integral() - 1.0).abs() < 1e-10);
        let m1 = d.marginal_x1();
        assert!((m1.value_at(0.0) - 1.0 / PI.sqrt()).abs() < 1e-10);
        assert!((d.marginal_x2().integral() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_config_validation() {
        assert!(GridConfig::with_points(2).validate().is_err());
        assert!(GridConfig::default().validate().is_ok());
    }
}
