//! Monte Carlo engines and statistics: path sampling, exact sampling of the
//! two-pointer reading distribution, the acceptance filter that reshapes
//! unconditional readings into post-selected ones, histograms and distances.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, Grid, GridConfig};
use crate::kernels::{density, wavefunction};
use crate::output::fmt_num;
use crate::quantum::{PointerSpec, QuantumScenario, QuasiProbTable};

pub const MIN_HISTOGRAM_BINS: usize = 64;
pub const MAX_HISTOGRAM_BINS: usize = 100_000;
/// Allowed overshoot of the rejection ratio before the envelope is declared
/// violated.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Draws an index with probability proportional to a non-negative weight by
/// splitting `[0, total)` into consecutive segments.
#[derive(Debug, Clone)]
pub struct PathSampler {
    cumulative: Vec<f64>,
}

impl PathSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for (index, &value) in weights.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(Error::NegativeWeight { index, value });
            }
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "weight {index} is not finite"
                )));
            }
            acc += value;
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidArgument(
                "sampling weights sum to zero".into(),
            ));
        }
        Ok(Self { cumulative })
    }

    /// Sampler over the flattened `[j][i]` entries of a quasi-probability
    /// table. Fails with `NegativeWeight` as soon as one entry is negative:
    /// there is no such thing as drawing with a negative probability.
    pub fn from_quasi_table(table: &QuasiProbTable) -> Result<Self> {
        Self::new(table.as_slice())
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|c| *c <= u);
        // zero-weight tail entries can never be hit
        k.min(self.cumulative.len() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadingSample {
    pub trial: u64,
    pub final_state: usize,
    pub x1: f64,
    pub x2: f64,
}

/// Exact draws from the joint distribution of final state and two pointer
/// readings.
///
/// The final state is drawn from the finite-width arrival weights, `x1` by
/// rejection from the envelope `N Σ_i |A_ji|^2 ρ(x1 - B_i)` (Cauchy–Schwarz),
/// and `x2` from the second pointer's Gaussian around `F_j`.
pub fn sample_quantum_readings(
    sc: &QuantumScenario,
    pointer1: &PointerSpec,
    pointer2: &PointerSpec,
    trials: u64,
    seed: u64,
) -> Result<Vec<ReadingSample>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = sc.dim();
    if pointer2.couplings.len() != n {
        return Err(Error::validation(
            "pointer2.couplings",
            format!("expected {n} values"),
        ));
    }
    let weights: Vec<f64> = sc
        .finite_width_arrivals(pointer1)?
        .into_iter()
        .map(|w| w.max(0.0))
        .collect();
    let finals = PathSampler::new(&weights)?;
    let table = sc.path_amplitudes();
    let proposals: Vec<Option<PathSampler>> = (0..n)
        .map(|j| {
            PathSampler::new(
                &table
                    .row(j)
                    .iter()
                    .map(|a| a.norm_sqr())
                    .collect::<Vec<_>>(),
            )
            .ok()
        })
        .collect();
    let noise1 =
        Normal::new(0.0, pointer1.width / std::f64::consts::SQRT_2).expect("positive width");
    let noise2 =
        Normal::new(0.0, pointer2.width / std::f64::consts::SQRT_2).expect("positive width");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let j = finals.sample(&mut rng);
        let row = table.row(j);
        let proposal = proposals[j]
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("final state {j} has no amplitude")))?;
        let x1 = loop {
            let i = proposal.sample(&mut rng);
            let x = pointer1.couplings[i] + noise1.sample(&mut rng);
            let mut amp = num_complex::Complex64::new(0.0, 0.0);
            let mut env = 0.0;
            for (a, b) in row.iter().zip(&pointer1.couplings) {
                let g = wavefunction(x - b, pointer1.width);
                amp += a * g;
                env += a.norm_sqr() * g * g;
            }
            let env = n as f64 * env;
            if env <= 0.0 {
                // underflow far in the tails: the target vanishes as well
                continue;
            }
            let ratio = amp.norm_sqr() / env;
            if ratio > 1.0 + ENVELOPE_SLACK {
                return Err(Error::EnvelopeFailure { ratio, x });
            }
            if rng.random::<f64>() < ratio {
                break x;
            }
        };
        let x2 = pointer2.couplings[j] + noise2.sample(&mut rng);
        out.push(ReadingSample {
            trial,
            final_state: j,
            x1,
            x2,
        });
    }
    Ok(out)
}

pub fn write_samples_csv<W: Write>(mut w: W, samples: &[ReadingSample]) -> io::Result<()> {
    writeln!(w, "trial,j,x1,x2")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{}",
            s.trial,
            s.final_state,
            fmt_num(s.x1),
            fmt_num(s.x2)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
    /// Values that fell outside the edges (not part of `total`).
    dropped: u64,
}

impl Histogram {
    pub fn with_edges(values: &[f64], edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "histogram edges must be strictly increasing".into(),
            ));
        }
        let mut counts = vec![0u64; edges.len() - 1];
        let mut dropped = 0;
        let last = *edges.last().unwrap();
        for &v in values {
            if !(v >= edges[0] && v <= last) {
                dropped += 1;
                continue;
            }
            let k = edges.partition_point(|e| *e <= v).clamp(1, counts.len()) - 1;
            counts[k] += 1;
        }
        let total = counts.iter().sum();
        Ok(Self {
            edges,
            counts,
            total,
            dropped,
        })
    }

    pub fn uniform(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(
                "need hi > lo and at least one bin".into(),
            ));
        }
        let edges = (0..=bins)
            .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
            .collect();
        Self::with_edges(values, edges)
    }

    /// Freedman–Diaconis bin width over the sample range, with at least
    /// [`MIN_HISTOGRAM_BINS`] bins.
    pub fn freedman_diaconis(values: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two finite samples".into(),
            ));
        }
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        if !(hi > lo) {
            return Err(Error::InvalidArgument("samples have zero range".into()));
        }
        let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
        let iqr = q(0.75) - q(0.25);
        let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
        let bins = if width > 0.0 {
            ((hi - lo) / width).ceil() as usize
        } else {
            MIN_HISTOGRAM_BINS
        };
        Self::uniform(
            &sorted,
            lo,
            hi,
            bins.clamp(MIN_HISTOGRAM_BINS, MAX_HISTOGRAM_BINS),
        )
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Counts normalized to a probability density.
    pub fn densities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(c, e)| *c as f64 / (self.total as f64 * (e[1] - e[0])))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "bin_left,bin_right,count")?;
        for (c, e) in self.counts.iter().zip(self.edges.windows(2)) {
            writeln!(w, "{},{},{}", fmt_num(e[0]), fmt_num(e[1]), c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Largest CDF difference at the bin edges.
    Ks,
    /// `Σ |bin mass - density mass|` plus density mass outside the bins.
    L1,
}

/// Normalized CDF of a tabulated density at any `x` (0 below, 1 above).
fn cdf_fn(d: &DensityGrid) -> Result<impl Fn(f64) -> f64 + '_> {
    if !(d.integral() > 0.0) {
        return Err(Error::SupportMismatch("density has no mass".into()));
    }
    let cdf = d.cdf()?;
    Ok(move |x: f64| crate::grid::interpolate(&d.grid, &cdf, x, 0.0, 1.0))
}

pub fn distribution_distance(h: &Histogram, d: &DensityGrid, metric: Metric) -> Result<f64> {
    if h.total == 0 {
        return Err(Error::SupportMismatch("histogram is empty".into()));
    }
    let cdf = cdf_fn(d)?;
    let total = h.total as f64;
    match metric {
        Metric::Ks => {
            let mut acc = 0u64;
            let mut worst = (cdf(h.edges[0])).abs();
            for (c, e) in h.counts.iter().zip(&h.edges[1..]) {
                acc += c;
                worst = worst.max((acc as f64 / total - cdf(*e)).abs());
            }
            Ok(worst)
        }
        Metric::L1 => {
            let mut sum = cdf(h.edges[0]) + (1.0 - cdf(*h.edges.last().unwrap()));
            for (c, e) in h.counts.iter().zip(h.edges.windows(2)) {
                sum += (*c as f64 / total - (cdf(e[1]) - cdf(e[0]))).abs();
            }
            Ok(sum)
        }
    }
}

/// Kolmogorov–Smirnov statistic of raw samples against a tabulated density.
pub fn ks_statistic(samples: &[f64], d: &DensityGrid) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::SupportMismatch("no samples".into()));
    }
    let cdf = cdf_fn(d)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let f = cdf(*x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

/// Acceptance probabilities `ω_j(x1) = P_j ρ(x1 - Z_j) / Σ_k P_k ρ(x1 - Z_k)`
/// for keeping a reading `x1` in the sub-ensemble of final state `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceFilter {
    width: f64,
    /// `(P(f_j←I), Z_j)` per final state; `None` for unreachable states.
    terms: Vec<Option<(f64, f64)>>,
    pub grid: Grid,
    /// `ω_j` tabulated on `grid`, one entry per final state.
    pub table: Vec<DensityGrid>,
}

impl AcceptanceFilter {
    /// Filter for broad-pointer shifts `(j, P_j, Z_j)` of an `n`-state system.
    pub fn from_shifts(
        n: usize,
        shifts: &[(usize, f64, f64)],
        width: f64,
        grid: Grid,
    ) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidArgument("no reachable final state".into()));
        }
        let mut terms = vec![None; n];
        for &(j, p, z) in shifts {
            if j >= n {
                return Err(Error::InvalidArgument(format!(
                    "final state {j} out of range"
                )));
            }
            terms[j] = Some((p, z));
        }
        let mut filter = Self {
            width,
            terms,
            grid,
            table: Vec::new(),
        };
        filter.table = (0..n)
            .map(|j| grid.tabulate(|x| filter.value(j, x)))
            .collect();
        Ok(filter)
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// `ω_j(x)`, evaluated in log space so it stays accurate far in the tails.
    pub fn value(&self, j: usize, x: f64) -> f64 {
        let Some((pj, zj)) = self.terms.get(j).copied().flatten() else {
            return 0.0;
        };
        let w2 = self.width * self.width;
        let log_j = pj.ln() - (x - zj).powi(2) / w2;
        let denom: f64 = self
            .terms
            .iter()
            .flatten()
            .map(|(p, z)| (p.ln() - (x - z).powi(2) / w2 - log_j).exp())
            .sum();
        1.0 / denom
    }

    /// Largest deviation from `0 ≤ ω ≤ 1` and from `Σ_j ω_j = 1` on the grid.
    pub fn invariant_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.grid.len() {
            let mut sum = 0.0;
            for t in &self.table {
                let w = t.values[k];
                worst = worst.max(-w).max(w - 1.0);
                sum += w;
            }
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "x")?;
        for j in 0..self.dim() {
            write!(w, ",omega_{j}")?;
        }
        writeln!(w)?;
        for (k, x) in self.grid.points().enumerate() {
            write!(w, "{}", fmt_num(x))?;
            for t in &self.table {
                write!(w, ",{}", fmt_num(t.values[k]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// The acceptance filter of a broad first pointer in scenario `sc`.
/// Unreachable final states get `ω ≡ 0`.
pub fn reshaping_filter(
    sc: &QuantumScenario,
    pointer1: &PointerSpec,
    cfg: &GridConfig,
) -> Result<AcceptanceFilter> {
    let shifts = sc.postselected_shifts(&pointer1.couplings)?;
    let centers = pointer1
        .couplings
        .iter()
        .copied()
        .chain(shifts.iter().map(|s| s.2));
    let grid = Grid::covering(centers, pointer1.width, cfg)?;
    AcceptanceFilter::from_shifts(sc.dim(), &shifts, pointer1.width, grid)
}

/// Ratio of a post-selected broad-pointer Gaussian to the unconditional one
/// centred at the mean shift `y`:
/// `P ρ(x - z) / ρ(x - y) = P exp((2x(z - y) - z^2 + y^2) / Δx^2)`.
pub fn gaussian_ratio_acceptance(arrival: f64, z: f64, y: f64, width: f64, x: f64) -> f64 {
    arrival * ((2.0 * x * (z - y) - z * z + y * y) / (width * width)).exp()
}

/// Where [`gaussian_ratio_acceptance`] reaches 1; beyond this reading the
/// ratio can no longer be an acceptance probability. `None` when `z = y`.
pub fn gaussian_ratio_unit_crossing(arrival: f64, z: f64, y: f64, width: f64) -> Option<f64> {
    if z == y {
        return None;
    }
    Some((z * z - y * y - width * width * arrival.ln()) / (2.0 * (z - y)))
}

/// `(log-prefactor, slope)` of `ln[gaussian_ratio_acceptance]` as a function
/// of `x`, relative to `ln P`: returns `(-(z^2 - y^2)/Δx^2, 2(z - y)/Δx^2)`.
pub fn gaussian_ratio_exponent(z: f64, y: f64, width: f64) -> (f64, f64) {
    let w2 = width * width;
    (-(z * z - y * y) / w2, 2.0 * (z - y) / w2)
}

/// Keep each sample with probability `ω_j(x1)`.
pub fn apply_filter(
    samples: &[ReadingSample],
    filter: &AcceptanceFilter,
    j: usize,
    seed: u64,
) -> Vec<ReadingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .iter()
        .filter(|s| {
            let w = filter.value(j, s.x1);
            // draw for every sample so the stream does not depend on ω
            let u: f64 = rng.random();
            u < w
        })
        .copied()
        .collect()
}

/// Density of `x1` jointly with arrival in `j` in the broad-pointer limit,
/// `P_j ρ(x1 - Z_j)`, on the filter grid.
pub fn conditioned_limit(filter: &AcceptanceFilter, j: usize) -> Option<DensityGrid> {
    let (p, z) = filter.terms.get(j).copied().flatten()?;
    Some(filter.grid.tabulate(|x| p * density(x - z, filter.width)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinConfiguration;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn path_sampler_frequencies() {
        let s = PathSampler::new(&[0.1, 0.0, 0.6, 0.3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0u32; 4];
        let n = 200_000;
        for _ in 0..n {
            counts[s.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        for (c, p) in counts.iter().zip([0.1, 0.0, 0.6, 0.3]) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() <= 4.0 * se + 1e-12);
        }
    }

    #[test]
    fn negative_weights_are_refused() {
        assert_eq!(
            PathSampler::new(&[0.5, -0.1, 0.6]).unwrap_err(),
            Error::NegativeWeight {
                index: 1,
                value: -0.1
            }
        );
        let q = SpinConfiguration::anomalous_example()
            .to_scenario()
            .quasi_probabilities();
        assert!(matches!(
            PathSampler::from_quasi_table(&q),
            Err(Error::NegativeWeight { index: 0, .. })
        ));
        assert!(PathSampler::new(&[0.0, 0.0]).is_err());
    }

    fn single_level() -> QuantumScenario {
        let one = vec![Complex64::new(1.0, 0.0)];
        QuantumScenario::new(
            one.clone(),
            vec![one.clone()],
            vec![1.5],
            vec![one],
            vec![-2.0],
        )
        .unwrap()
    }

    #[test]
    fn single_level_samples_are_plain_gaussians() {
        let sc = single_level();
        let p1 = PointerSpec::for_b(&sc, 0.8).unwrap();
        let p2 = PointerSpec::for_f(&sc, 0.4).unwrap();
        let s = sample_quantum_readings(&sc, &p1, &p2, 50_000, 1).unwrap();
        let n = s.len() as f64;
        let m1 = s.iter().map(|r| r.x1).sum::<f64>() / n;
        let v1 = s.iter().map(|r| (r.x1 - m1).powi(2)).sum::<f64>() / n;
        let m2 = s.iter().map(|r| r.x2).sum::<f64>() / n;
        assert!((m1 - 1.5).abs() < 0.02);
        assert!((v1 - 0.32).abs() < 0.01);
        assert!((m2 + 2.0).abs() < 0.01);
        assert!(s.iter().all(|r| r.final_state == 0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sc = QuantumScenario::random(3, true, &mut rng);
        let p1 = PointerSpec::for_b(&sc, 0.5).unwrap();
        let p2 = PointerSpec::for_f(&sc, 0.1).unwrap();
        let a = sample_quantum_readings(&sc, &p1, &p2, 1000, 9).unwrap();
        let b = sample_quantum_readings(&sc, &p1, &p2, 1000, 9).unwrap();
        let c = sample_quantum_readings(&sc, &p1, &p2, 1000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(sample_quantum_readings(&sc, &p1, &p2, 0, 9).is_err());
    }

    #[test]
    fn final_state_fractions_follow_overlap_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sc = QuantumScenario::random(3, true, &mut rng);
        let p1 = PointerSpec::for_b(&sc, 0.4).unwrap();
        let p2 = PointerSpec::for_f(&sc, 0.1).unwrap();
        let trials = 100_000;
        let s = sample_quantum_readings(&sc, &p1, &p2, trials, 2).unwrap();
        let w = sc.finite_width_arrivals(&p1).unwrap();
        for (j, p) in w.iter().enumerate() {
            let frac = s.iter().filter(|r| r.final_state == j).count() as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((frac - p).abs() <= 3.0 * se, "j={j}: {frac} vs {p}");
        }
    }

    #[test]
    fn histogram_basics() {
        let h = Histogram::uniform(&[0.1, 0.2, 0.5, 0.99, 1.0, 2.0], 0.0, 1.0, 4).unwrap();
        assert_eq!(h.counts(), &[2, 0, 1, 2]);
        assert_eq!(h.total(), 5);
        assert_eq!(h.dropped(), 1);
        assert_eq!(h.counts().iter().sum::<u64>(), h.total());
        assert!(Histogram::with_edges(&[], vec![0.0, 0.0, 1.0]).is_err());
        let fd = Histogram::freedman_diaconis(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fd.bins(), MIN_HISTOGRAM_BINS);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("bin_left,bin_right,count\n"));
    }

    #[test]
    fn distances_trivial_cases() {
        let g = Grid::span(0.0, 1.0, 101).unwrap();
        let uniform = g.tabulate(|_| 1.0);
        let values: Vec<f64> = (0..1000).map(|k| (k as f64 + 0.5) / 1000.0).collect();
        let h = Histogram::uniform(&values, 0.0, 1.0, 10).unwrap();
        assert_abs_diff_eq!(
            distribution_distance(&h, &uniform, Metric::L1).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            distribution_distance(&h, &uniform, Metric::Ks).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let far = Histogram::uniform(&[5.5], 5.0, 6.0, 2).unwrap();
        assert_abs_diff_eq!(
            distribution_distance(&far, &uniform, Metric::L1).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        let empty = Histogram::uniform(&[], 0.0, 1.0, 2).unwrap();
        assert!(matches!(
            distribution_distance(&empty, &uniform, Metric::Ks),
            Err(Error::SupportMismatch(_))
        ));
        let zero = g.tabulate(|_| 0.0);
        assert!(matches!(
            distribution_distance(&h, &zero, Metric::L1),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn ks_of_own_density() {
        let g = Grid::span(-6.0, 6.0, 4001).unwrap();
        let d = g.tabulate(|x| density(x, 1.0));
        let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
        assert!(ks_statistic(&xs, &d).unwrap() < 0.005);
        let h = Histogram::freedman_diaconis(&xs).unwrap();
        assert!(distribution_distance(&h, &d, Metric::Ks).unwrap() < 0.005);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.5).collect();
        assert!(ks_statistic(&shifted, &d).unwrap() > 0.1);
    }

    #[test]
    fn single_final_state_accepts_everything() {
        let sc = single_level();
        let p1 = PointerSpec::for_b(&sc, 2.0).unwrap();
        let f = reshaping_filter(&sc, &p1, &GridConfig::default()).unwrap();
        assert!(f.table[0].values.iter().all(|w| *w == 1.0));
        let samples: Vec<ReadingSample> = (0..100)
            .map(|k| ReadingSample {
                trial: k,
                final_state: 0,
                x1: k as f64 - 50.0,
                x2: 0.0,
            })
            .collect();
        assert_eq!(apply_filter(&samples, &f, 0, 1), samples);
    }

    #[test]
    fn filter_partition_and_reshaping() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let sc = QuantumScenario::random(3, true, &mut rng);
            let p1 = PointerSpec::for_b(&sc, 1e4).unwrap();
            let f = reshaping_filter(&sc, &p1, &GridConfig::default()).unwrap();
            assert!(f.invariant_violation() <= 1e-10);
            let shifts = sc.postselected_shifts(&p1.couplings).unwrap();
            let sum = f.grid.tabulate(|x| {
                shifts
                    .iter()
                    .map(|(_, p, z)| p * density(x - z, p1.width))
                    .sum()
            });
            let peak = density(0.0, p1.width);
            for j in 0..3 {
                let Some(target) = conditioned_limit(&f, j) else {
                    continue;
                };
                for k in 0..f.grid.len() {
                    let got = f.table[j].values[k] * sum.values[k];
                    assert!((got - target.values[k]).abs() <= 1e-8 * peak);
                }
            }
        }
    }

    #[test]
    fn gaussian_ratio_closed_forms() {
        let (p, z, w) = (0.0062, -12.7, 100.0);
        let x = gaussian_ratio_unit_crossing(p, z, 0.0, w).unwrap();
        assert_abs_diff_eq!(
            gaussian_ratio_acceptance(p, z, 0.0, w, x),
            1.0,
            epsilon = 1e-12
        );
        let (c, s) = gaussian_ratio_exponent(z, 0.0, w);
        assert_abs_diff_eq!(
            gaussian_ratio_acceptance(p, z, 0.0, w, 37.0),
            p * (c + s * 37.0).exp(),
            epsilon = 1e-15
        );
        assert!(gaussian_ratio_unit_crossing(p, 1.0, 1.0, w).is_none());
    }

    proptest! {
        #[test]
        fn filter_bounds(x in -1e4f64..1e4, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sc = QuantumScenario::random(3, false, &mut rng);
            let p1 = PointerSpec::for_b(&sc, 3.0).unwrap();
            let f = reshaping_filter(&sc, &p1, &GridConfig::with_points(11)).unwrap();
            let total: f64 = (0..3).map(|j| f.value(j, x)).sum();
            for j in 0..3 {
                let w = f.value(j, x);
                prop_assert!((0.0..=1.0).contains(&w));
            }
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
    }
}
