//! Gaussian pointer kernels and the collapse of broad weighted Gaussian sums.
//!
//! A sum `Σ A_i G((x - B_i)/Δx)` of kernels that are much wider than the
//! spread of the shifts `B_i` is indistinguishable from a single kernel
//! `(Σ A_i) G((x - z)/Δx)` centred at the weighted centroid
//! `z = Σ A_i B_i / Σ A_i`. With mixed-sign weights `z` can land far outside
//! the range of the shifts. For complex weights the same holds for the
//! modulus squared, with `Z = Re[Σ A_i B_i / Σ A_i]`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, Grid, GridConfig};

/// Relative threshold on `|Σ A_i| / max |A_i|` below which the collapse is
/// treated as undefined.
pub const DEFAULT_EPS_SUM: f64 = 1e-12;

/// Which normalization a Gaussian kernel carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    /// `exp(-(x - c)^2 / w^2)`, equal to 1 at the centre.
    Amplitude,
    /// `exp(-(x - c)^2 / w^2) / (sqrt(pi) w)`, unit mass.
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    width: f64,
    center: f64,
}

impl GaussianKernel {
    pub fn new(width: f64, center: f64) -> Result<Self> {
        check_width(width, "width")?;
        if !center.is_finite() {
            return Err(Error::InvalidArgument(
                "kernel centre must be finite".into(),
            ));
        }
        Ok(Self { width, center })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn amplitude(&self, x: f64) -> f64 {
        gaussian(x - self.center, self.width)
    }

    pub fn density(&self, x: f64) -> f64 {
        density(x - self.center, self.width)
    }

    pub fn eval(&self, x: f64, form: KernelForm) -> f64 {
        match form {
            KernelForm::Amplitude => self.amplitude(x),
            KernelForm::Density => self.density(x),
        }
    }

    /// Pointer wavefunction `π^(-1/4) w^(-1/2) exp(-(x - c)^2 / (2 w^2))`,
    /// whose modulus squared is [`GaussianKernel::density`].
    pub fn wavefunction(&self, x: f64) -> f64 {
        wavefunction(x - self.center, self.width)
    }
}

#[inline]
pub fn gaussian(dx: f64, width: f64) -> f64 {
    let s = dx / width;
    (-s * s).exp()
}

/// Unit-mass Gaussian reading density of a pointer of width `width`.
#[inline]
pub fn density(dx: f64, width: f64) -> f64 {
    gaussian(dx, width) / (PI.sqrt() * width)
}

#[inline]
pub fn wavefunction(dx: f64, width: f64) -> f64 {
    let s = dx / width;
    (-0.5 * s * s).exp() / (PI.powf(0.25) * width.sqrt())
}

/// `∫ wavefunction(x - a) wavefunction(x - b) dx`.
#[inline]
pub fn wavefunction_overlap(a: f64, b: f64, width: f64) -> f64 {
    let s = (a - b) / width;
    (-0.25 * s * s).exp()
}

pub(crate) fn check_width(width: f64, what: &str) -> Result<()> {
    if width.is_finite() && width > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} must be positive and finite, got {width}"
        )))
    }
}

/// Weights `A_i`, shifts `B_i` and a common kernel scale `Δx`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedShiftSet {
    weights: Vec<Complex64>,
    shifts: Vec<f64>,
    scale: f64,
    eps_sum: f64,
}

impl WeightedShiftSet {
    pub fn new(weights: Vec<Complex64>, shifts: Vec<f64>, scale: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("weighted shift set is empty".into()));
        }
        if weights.len() != shifts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights but {} shifts",
                weights.len(),
                shifts.len()
            )));
        }
        if weights
            .iter()
            .any(|w| !(w.re.is_finite() && w.im.is_finite()))
            || shifts.iter().any(|b| !b.is_finite())
        {
            return Err(Error::InvalidArgument(
                "weights and shifts must be finite".into(),
            ));
        }
        check_width(scale, "scale")?;
        Ok(Self {
            weights,
            shifts,
            scale,
            eps_sum: DEFAULT_EPS_SUM,
        })
    }

    pub fn real(weights: &[f64], shifts: &[f64], scale: f64) -> Result<Self> {
        Self::new(
            weights.iter().map(|&w| Complex64::new(w, 0.0)).collect(),
            shifts.to_vec(),
            scale,
        )
    }

    pub fn with_eps_sum(mut self, eps: f64) -> Self {
        self.eps_sum = eps;
        self
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_width(scale, "scale")?;
        Ok(Self {
            scale,
            ..self.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weight_sum(&self) -> Complex64 {
        self.weights.iter().sum()
    }

    pub fn is_real(&self) -> bool {
        self.weights.iter().all(|w| w.im == 0.0)
    }

    /// `Σ A_i k(x - B_i)` with `k` in the requested form.
    pub fn mixture_value(&self, x: f64, form: KernelForm) -> Complex64 {
        let norm = match form {
            KernelForm::Amplitude => 1.0,
            KernelForm::Density => 1.0 / (PI.sqrt() * self.scale),
        };
        self.weights
            .iter()
            .zip(&self.shifts)
            .map(|(a, b)| a * gaussian(x - b, self.scale))
            .sum::<Complex64>()
            * norm
    }

    fn checked_sum(&self) -> Result<Complex64> {
        let sum = self.weight_sum();
        let largest = self.weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
        let threshold = self.eps_sum * largest;
        if sum.norm() == 0.0 || sum.norm() < threshold {
            return Err(Error::DegenerateWeightSum {
                magnitude: sum.norm(),
                threshold,
            });
        }
        Ok(sum)
    }

    /// `z = Σ A_i B_i / Σ A_i` for real weights.
    pub fn collapse_center_real(&self) -> Result<f64> {
        if !self.is_real() {
            return Err(Error::InvalidArgument(
                "collapse_center_real needs real weights".into(),
            ));
        }
        let sum = self.checked_sum()?.re;
        let moment: f64 = self
            .weights
            .iter()
            .zip(&self.shifts)
            .map(|(a, b)| a.re * b)
            .sum();
        Ok(moment / sum)
    }

    /// `Z = Re[Σ A_i B_i / Σ A_i]`.
    pub fn collapse_center_complex(&self) -> Result<f64> {
        let sum = self.checked_sum()?;
        let moment: Complex64 = self
            .weights
            .iter()
            .zip(&self.shifts)
            .map(|(a, b)| a * b)
            .sum();
        if sum.im == 0.0 && moment.im == 0.0 {
            return Ok(moment.re / sum.re);
        }
        Ok((moment / sum).re)
    }

    /// Grid covering every shift and the collapsed centre.
    pub fn grid(&self, cfg: &GridConfig) -> Result<Grid> {
        let z = self.collapse_center_complex()?;
        Grid::covering(self.shifts.iter().copied().chain([z]), self.scale, cfg)
    }

    /// Exact `|Σ A_i k(x - B_i)|^2` on `grid`.
    pub fn exact_density(&self, grid: &Grid, form: KernelForm) -> DensityGrid {
        grid.tabulate(|x| self.mixture_value(x, form).norm_sqr())
    }

    /// The signed real part `Re Σ A_i k(x - B_i)` on `grid`.
    pub fn mixture_real(&self, grid: &Grid, form: KernelForm) -> DensityGrid {
        grid.tabulate(|x| self.mixture_value(x, form).re)
    }

    /// Collapsed limit `|Σ A_i|^2 k(x - Z)^2` on `grid`.
    pub fn collapse_limit_on(&self, grid: &Grid, form: KernelForm) -> Result<DensityGrid> {
        let z = self.collapse_center_complex()?;
        let weight = self.weight_sum().norm_sqr();
        let kernel = GaussianKernel::new(self.scale, z)?;
        Ok(grid.tabulate(|x| weight * kernel.eval(x, form).powi(2)))
    }

    /// Collapsed limit on the default grid of this set.
    pub fn collapse_limit_density(
        &self,
        form: KernelForm,
        cfg: &GridConfig,
    ) -> Result<DensityGrid> {
        let grid = self.grid(cfg)?;
        self.collapse_limit_on(&grid, form)
    }

    /// Peak-normalized sup-norm error between the exact modulus squared and
    /// its collapsed limit, for each scale in `scales`.
    pub fn convergence_probe(&self, scales: &[f64], cfg: &GridConfig) -> Result<Vec<f64>> {
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "scales must be strictly increasing".into(),
            ));
        }
        scales
            .iter()
            .map(|&s| {
                let set = self.with_scale(s)?;
                let grid = set.grid(cfg)?;
                let exact = set.exact_density(&grid, KernelForm::Amplitude);
                let limit = set.collapse_limit_on(&grid, KernelForm::Amplitude)?;
                exact.peak_normalized_distance(&limit)
            })
            .collect()
    }
}
