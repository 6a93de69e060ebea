//! Classical stochastic path networks observed through Gaussian pointers.
//!
//! A particle enters node `i` with probability `P(i←I)` and then moves to
//! final state `j` with probability `P(j←i)`. A first pointer moves by `B_i`
//! when node `i` is crossed; a second one moves by `F_j` on arrival in `j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, DensityGrid2, Grid, GridConfig};
use crate::kernels::{check_width, density};
use crate::sampling::PathSampler;

/// Tolerance on probability sums when validating networks.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;
/// Threshold below which a final state counts as unreachable.
pub const DEFAULT_EPS_PS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalNetwork {
    entry: Vec<f64>,
    /// `branching[j][i] = P(j←i)`.
    branching: Vec<Vec<f64>>,
}

impl ClassicalNetwork {
    pub fn new(entry: Vec<f64>, branching: Vec<Vec<f64>>) -> Result<Self> {
        let n = entry.len();
        if n == 0 {
            return Err(Error::validation(
                "entry",
                "network needs at least one node",
            ));
        }
        for (i, p) in entry.iter().enumerate() {
            check_probability(*p, &format!("entry[{i}]"))?;
        }
        let total: f64 = entry.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::validation(
                "entry",
                format!("sums to {total}, expected 1"),
            ));
        }
        if branching.len() != n {
            return Err(Error::validation(
                "branching",
                format!("expected {n} rows, found {}", branching.len()),
            ));
        }
        for (j, row) in branching.iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation(
                    format!("branching[{j}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            for (i, p) in row.iter().enumerate() {
                check_probability(*p, &format!("branching[{j}][{i}]"))?;
            }
        }
        for i in 0..n {
            let col: f64 = branching.iter().map(|row| row[i]).sum();
            if (col - 1.0).abs() > PROBABILITY_SUM_TOL {
                return Err(Error::validation(
                    format!("branching[*][{i}]"),
                    format!("column sums to {col}, expected 1"),
                ));
            }
        }
        Ok(Self { entry, branching })
    }

    /// Random network with Dirichlet(1)-distributed entry and branching columns.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let entry = random_simplex(n, rng);
        let columns: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(n, rng)).collect();
        let branching = (0..n)
            .map(|j| (0..n).map(|i| columns[i][j]).collect())
            .collect();
        Self::new(entry, branching).expect("normalized by construction")
    }

    pub fn dim(&self) -> usize {
        self.entry.len()
    }

    pub fn entry(&self) -> &[f64] {
        &self.entry
    }

    pub fn branching(&self) -> &[Vec<f64>] {
        &self.branching
    }

    /// Copy of the network with `P(j←i)` replaced for one node `i`.
    pub fn with_branching_column(&self, i: usize, column: &[f64]) -> Result<Self> {
        if i >= self.dim() || column.len() != self.dim() {
            return Err(Error::InvalidArgument(
                "branching column has the wrong shape".into(),
            ));
        }
        let mut branching = self.branching.clone();
        for (j, row) in branching.iter_mut().enumerate() {
            row[i] = column[j];
        }
        Self::new(self.entry.clone(), branching)
    }
}

fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // absorb rounding so the sum is 1 to the last bit the validator cares about
    let drift: f64 = 1.0 - p.iter().sum::<f64>();
    p[0] += drift;
    p
}

fn check_probability(p: f64, path: &str) -> Result<()> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::validation(path, format!("{p} is not a probability")))
    }
}

/// Couplings and widths of the two classical pointers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPointerPair {
    pub b_values: Vec<f64>,
    pub f_values: Vec<f64>,
    pub width1: f64,
    pub width2: f64,
}

impl ClassicalPointerPair {
    pub fn new(b_values: Vec<f64>, f_values: Vec<f64>, width1: f64, width2: f64) -> Result<Self> {
        check_width(width1, "width1")?;
        check_width(width2, "width2")?;
        if b_values.iter().chain(&f_values).any(|v| !v.is_finite()) {
            return Err(Error::validation("pointer", "couplings must be finite"));
        }
        Ok(Self {
            b_values,
            f_values,
            width1,
            width2,
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.b_values.len() != n {
            return Err(Error::validation(
                "b_values",
                format!("expected {n} values"),
            ));
        }
        if self.f_values.len() != n {
            return Err(Error::validation(
                "f_values",
                format!("expected {n} values"),
            ));
        }
        Ok(())
    }

    /// Index of the `F_j` closest to `x2` (post-selection binning).
    pub fn nearest_final(&self, x2: f64) -> usize {
        let mut best = 0;
        for (j, f) in self.f_values.iter().enumerate() {
            if (x2 - f).abs() < (x2 - self.f_values[best]).abs() {
                best = j;
            }
        }
        best
    }

    pub fn check_distinct_finals(&self) -> Result<()> {
        for (a, fa) in self.f_values.iter().enumerate() {
            for fb in &self.f_values[a + 1..] {
                if fa == fb {
                    return Err(Error::validation("f_values", "must be pairwise distinct"));
                }
            }
        }
        Ok(())
    }
}

/// Path probabilities `P(j←i←I)`, stored `[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathProbTable {
    n: usize,
    values: Vec<f64>,
}

impl PathProbTable {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("path table must be square".into()));
        }
        Ok(Self {
            n,
            values: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n + i]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks_exact(self.n)
            .map(|r| r.to_vec())
            .collect()
    }

    /// Flattened `[j][i]` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `P(j←I) = Σ_i P(j←i←I)`.
    pub fn arrivals(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.n)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// `Σ_j P(j←i←I) = P(i←I)`.
    pub fn node_marginals(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(j, i)).sum())
            .collect()
    }

    /// Entries rescaled to sum to one. Reconstructions from noisy data do not
    /// do this on their own.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument(
                "cannot normalize a table with no mass".into(),
            ));
        }
        Ok(Self {
            n: self.n,
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &PathProbTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `P(j←i←I) = P(j←i) P(i←I)`.
pub fn path_probabilities(net: &ClassicalNetwork) -> PathProbTable {
    let n = net.dim();
    let mut values = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            values.push(net.branching[j][i] * net.entry[i]);
        }
    }
    PathProbTable { n, values }
}

/// `y(B) = Σ_i B_i P(i←I)`.
pub fn mean_shift_y(net: &ClassicalNetwork, b_values: &[f64]) -> Result<f64> {
    if b_values.len() != net.dim() {
        return Err(Error::validation(
            "b_values",
            format!("expected {} values", net.dim()),
        ));
    }
    Ok(net.entry.iter().zip(b_values).map(|(p, b)| p * b).sum())
}

/// Grid for the first pointer: all `B_i` padded by the configured span.
pub fn reading_grid(pointer: &ClassicalPointerPair, cfg: &GridConfig) -> Result<Grid> {
    Grid::covering(pointer.b_values.iter().copied(), pointer.width1, cfg)
}

/// `ρ(x1) = Σ_i P(i←I) ρ^I(x1 - B_i)` on `grid`.
pub fn density_no_postselection_on(
    net: &ClassicalNetwork,
    pointer: &ClassicalPointerPair,
    grid: &Grid,
) -> Result<DensityGrid> {
    pointer.check_dim(net.dim())?;
    Ok(grid.tabulate(|x| {
        net.entry
            .iter()
            .zip(&pointer.b_values)
            .map(|(p, b)| p * density(x - b, pointer.width1))
            .sum()
    }))
}

pub fn density_no_postselection(
    net: &ClassicalNetwork,
    pointer: &ClassicalPointerPair,
    cfg: &GridConfig,
) -> Result<DensityGrid> {
    density_no_postselection_on(net, pointer, &reading_grid(pointer, cfg)?)
}

/// `ρ(x1, x2) = Σ_ij P(j←i←I) ρ1^I(x1 - B_i) ρ2^I(x2 - F_j)`.
pub fn joint_density_on(
    net: &ClassicalNetwork,
    pointer: &ClassicalPointerPair,
    x1: Grid,
    x2: Grid,
) -> Result<DensityGrid2> {
    pointer.check_dim(net.dim())?;
    let paths = path_probabilities(net);
    let n = net.dim();
    // per-point kernels are shared across paths
    let k1: Vec<Vec<f64>> = x1
        .points()
        .map(|x| {
            pointer
                .b_values
                .iter()
                .map(|b| density(x - b, pointer.width1))
                .collect()
        })
        .collect();
    let k2: Vec<Vec<f64>> = x2
        .points()
        .map(|x| {
            pointer
                .f_values
                .iter()
                .map(|f| density(x - f, pointer.width2))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(x1.len() * x2.len());
    for a in &k1 {
        for b in &k2 {
            let mut s = 0.0;
            for j in 0..n {
                let mut inner = 0.0;
                for i in 0..n {
                    inner += paths.get(j, i) * a[i];
                }
                s += inner * b[j];
            }
            values.push(s);
        }
    }
    Ok(DensityGrid2 { x1, x2, values })
}

pub fn joint_density(
    net: &ClassicalNetwork,
    pointer: &ClassicalPointerPair,
    cfg: &GridConfig,
) -> Result<DensityGrid2> {
    let x1 = reading_grid(pointer, cfg)?;
    let x2 = Grid::covering(pointer.f_values.iter().copied(), pointer.width2, cfg)?;
    joint_density_on(net, pointer, x1, x2)
}

/// `z_j(B) = Σ_i B_i P(j←i←I) / Σ_i P(j←i←I)`.
pub fn conditional_shift_z(net: &ClassicalNetwork, b_values: &[f64], j: usize) -> Result<f64> {
    conditional_shift_z_with_eps(net, b_values, j, DEFAULT_EPS_PS)
}

pub fn conditional_shift_z_with_eps(
    net: &ClassicalNetwork,
    b_values: &[f64],
    j: usize,
    eps_ps: f64,
) -> Result<f64> {
    let n = net.dim();
    if b_values.len() != n {
        return Err(Error::validation(
            "b_values",
            format!("expected {n} values"),
        ));
    }
    if j >= n {
        return Err(Error::InvalidArgument(format!(
            "final state {j} out of range"
        )));
    }
    let row: Vec<f64> = (0..n).map(|i| net.branching[j][i] * net.entry[i]).collect();
    let arrival: f64 = row.iter().sum();
    if arrival < eps_ps {
        return Err(Error::UnreachableFinalState {
            index: j,
            probability: arrival,
            threshold: eps_ps,
        });
    }
    Ok(row.iter().zip(b_values).map(|(p, b)| p * b).sum::<f64>() / arrival)
}

/// `P(j←i←I) = z_j(π_i) P(j←I)` from measured indicator shifts
/// `shifts[j][i] = z_j(π_i)` and arrival probabilities. No renormalization.
pub fn recover_path_probabilities(shifts: &[Vec<f64>], arrivals: &[f64]) -> Result<PathProbTable> {
    let n = arrivals.len();
    if shifts.len() != n || shifts.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument(
            "shift table must be N x N with N arrivals".into(),
        ));
    }
    let values = shifts
        .iter()
        .zip(arrivals)
        .flat_map(|(row, p)| row.iter().map(move |z| z * p))
        .collect();
    Ok(PathProbTable { n, values })
}

/// One simulated trial: the path taken and both pointer readings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalTrial {
    pub node: usize,
    pub final_state: usize,
    pub x1: f64,
    pub x2: f64,
}

/// Trial-by-trial simulator. Each trial draws a path by splitting `[0, 1)`
/// into `N²` segments of length `P(j←i←I)`, then adds independent Gaussian
/// noise to both pointers.
pub struct TrialSimulator {
    n: usize,
    paths: PathSampler,
    b_values: Vec<f64>,
    f_values: Vec<f64>,
    noise1: Normal<f64>,
    noise2: Normal<f64>,
    rng: ChaCha8Rng,
}

impl TrialSimulator {
    pub fn new(net: &ClassicalNetwork, pointer: &ClassicalPointerPair, seed: u64) -> Result<Self> {
        pointer.check_dim(net.dim())?;
        let table = path_probabilities(net);
        // ρ^I has standard deviation width / sqrt(2)
        let sd = |w: f64| Normal::new(0.0, w / std::f64::consts::SQRT_2).expect("positive width");
        Ok(Self {
            n: net.dim(),
            paths: PathSampler::new(table.as_slice())?,
            b_values: pointer.b_values.clone(),
            f_values: pointer.f_values.clone(),
            noise1: sd(pointer.width1),
            noise2: sd(pointer.width2),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Iterator for TrialSimulator {
    type Item = ClassicalTrial;

    fn next(&mut self) -> Option<ClassicalTrial> {
        let k = self.paths.sample(&mut self.rng);
        let (j, i) = (k / self.n, k % self.n);
        let x1 = self.b_values[i] + self.noise1.sample(&mut self.rng);
        let x2 = self.f_values[j] + self.noise2.sample(&mut self.rng);
        Some(ClassicalTrial {
            node: i,
            final_state: j,
            x1,
            x2,
        })
    }
}

pub fn simulate_trials(
    net: &ClassicalNetwork,
    pointer: &ClassicalPointerPair,
    trials: usize,
    seed: u64,
) -> Result<Vec<ClassicalTrial>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(TrialSimulator::new(net, pointer, seed)?
        .take(trials)
        .collect())
}

/// Post-selected statistics of a batch of trials, with the final state read
/// off the second pointer by nearest-`F_j` binning.
#[derive(Debug, Clone, PartialEq)]
pub struct PostselectedMeans {
    pub counts: Vec<usize>,
    pub mean_x1: Vec<f64>,
    pub total: usize,
}

impl PostselectedMeans {
    pub fn from_trials(trials: &[ClassicalTrial], pointer: &ClassicalPointerPair) -> Self {
        let n = pointer.f_values.len();
        let mut counts = vec![0usize; n];
        let mut sums = vec![0.0; n];
        for t in trials {
            let j = pointer.nearest_final(t.x2);
            counts[j] += 1;
            sums[j] += t.x1;
        }
        let mean_x1 = sums
            .iter()
            .zip(&counts)
            .map(|(s, c)| if *c > 0 { s / *c as f64 } else { f64::NAN })
            .collect();
        Self {
            counts,
            mean_x1,
            total: trials.len(),
        }
    }

    pub fn arrival_fractions(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|c| *c as f64 / self.total as f64)
            .collect()
    }
}

/// Monte Carlo reconstruction of the path table: one run per indicator
/// pointer `B = π_i`, each of `trials` trials, seeds derived from `seed`.
pub fn monte_carlo_path_recovery(
    net: &ClassicalNetwork,
    f_values: &[f64],
    width1: f64,
    width2: f64,
    trials: usize,
    seed: u64,
) -> Result<PathProbTable> {
    let n = net.dim();
    let mut shifts = vec![vec![0.0; n]; n];
    let mut arrivals = vec![0.0; n];
    for i0 in 0..n {
        let b: Vec<f64> = (0..n).map(|i| if i == i0 { 1.0 } else { 0.0 }).collect();
        let pointer = ClassicalPointerPair::new(b, f_values.to_vec(), width1, width2)?;
        let run = simulate_trials(net, &pointer, trials, derive_seed(seed, i0 as u64))?;
        let stats = PostselectedMeans::from_trials(&run, &pointer);
        for j in 0..n {
            shifts[j][i0] = if stats.counts[j] > 0 {
                stats.mean_x1[j]
            } else {
                0.0
            };
        }
        // arrivals are counted over all runs
        for (a, f) in arrivals.iter_mut().zip(stats.arrival_fractions()) {
            *a += f / n as f64;
        }
    }
    recover_path_probabilities(&shifts, &arrivals)
}

/// SplitMix64 step, used to derive independent per-run seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Recovered `P(1←1←I)` (zero-based `(0, 0)`) before and after replacing the
/// branching column of node 2 by `(p, 1 - p)`. A classical measurement of one
/// path does not see changes made elsewhere, so both values coincide.
pub fn classical_locality_demo(net: &ClassicalNetwork, new_p_1_from_2: f64) -> Result<(f64, f64)> {
    if net.dim() != 2 {
        return Err(Error::InvalidArgument(
            "locality demo needs a two-node network".into(),
        ));
    }
    let modified = net.with_branching_column(1, &[new_p_1_from_2, 1.0 - new_p_1_from_2])?;
    let recovered = |n: &ClassicalNetwork| -> Result<f64> {
        let arrival = path_probabilities(n).arrivals()[0];
        Ok(conditional_shift_z(n, &[1.0, 0.0], 0)? * arrival)
    };
    Ok((recovered(net)?, recovered(&modified)?))
}
