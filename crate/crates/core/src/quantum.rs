//! N-level quantum systems probed by one or two von Neumann pointers.
//!
//! The system starts in `|I⟩`, evolves with `U1` to the time of the first
//! pointer (which couples to `B̂ = Σ |b_i⟩ B_i ⟨b_i|`), then with `U2` to the
//! final measurement in the basis `{|f_j⟩}`. The virtual path
//! `f_j ← b_i ← I` carries the amplitude `⟨f_j|U2|b_i⟩⟨b_i|U1|I⟩`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{trapezoid, DensityGrid, DensityGrid2, Grid, GridConfig};
use crate::kernels::{check_width, density, wavefunction, wavefunction_overlap};
use crate::linalg::{gram_deviation, inner, norm_sqr, CMatrix, CVector};

pub const STATE_NORM_TOL: f64 = 1e-12;
pub const BASIS_TOL: f64 = 1e-12;
pub const UNITARITY_TOL: f64 = 1e-10;
/// Threshold on `|⟨f_j|U|I⟩|^2` below which a weak value is not computed.
pub const DEFAULT_EPS_PS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumScenario {
    initial: CVector,
    basis_b: Vec<CVector>,
    b_values: Vec<f64>,
    basis_f: Vec<CVector>,
    f_values: Vec<f64>,
    evolution_1: CMatrix,
    evolution_2: CMatrix,
    eps_ps: f64,
}

impl QuantumScenario {
    /// Scenario with no own dynamics (both evolutions are the identity).
    pub fn new(
        initial: CVector,
        basis_b: Vec<CVector>,
        b_values: Vec<f64>,
        basis_f: Vec<CVector>,
        f_values: Vec<f64>,
    ) -> Result<Self> {
        let n = initial.len();
        Self::with_evolutions(
            initial,
            basis_b,
            b_values,
            basis_f,
            f_values,
            CMatrix::identity(n.max(1)),
            CMatrix::identity(n.max(1)),
        )
    }

    pub fn with_evolutions(
        initial: CVector,
        basis_b: Vec<CVector>,
        b_values: Vec<f64>,
        basis_f: Vec<CVector>,
        f_values: Vec<f64>,
        evolution_1: CMatrix,
        evolution_2: CMatrix,
    ) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::validation("initial", "state vector is empty"));
        }
        let norm = norm_sqr(&initial);
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::validation(
                "initial",
                format!("<I|I> = {norm}, expected 1"),
            ));
        }
        check_basis(&basis_b, n, "basis_b")?;
        check_basis(&basis_f, n, "basis_f")?;
        check_values(&b_values, n, "b_values")?;
        check_values(&f_values, n, "f_values")?;
        for (u, path) in [(&evolution_1, "evolution_1"), (&evolution_2, "evolution_2")] {
            if u.dim() != n {
                return Err(Error::validation(
                    path,
                    format!("expected a {n}x{n} matrix"),
                ));
            }
            let dev = u.unitarity_deviation();
            if dev > UNITARITY_TOL {
                return Err(Error::validation(
                    path,
                    format!("not unitary: max |U†U - 1| = {dev:.3e} > {UNITARITY_TOL:.0e}"),
                ));
            }
        }
        Ok(Self {
            initial,
            basis_b,
            b_values,
            basis_f,
            f_values,
            evolution_1,
            evolution_2,
            eps_ps: DEFAULT_EPS_PS,
        })
    }

    /// Random scenario: random initial state, random bases and evolutions,
    /// `B_i` uniform in `[-1, 1]`, `F_j = j`.
    pub fn random<R: Rng + ?Sized>(n: usize, with_dynamics: bool, rng: &mut R) -> Self {
        let mut initial: CVector = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = norm_sqr(&initial).sqrt();
        initial.iter_mut().for_each(|z| *z /= norm);
        let ub = CMatrix::random_unitary(n, rng);
        let uf = CMatrix::random_unitary(n, rng);
        let (u1, u2) = if with_dynamics {
            (
                CMatrix::random_unitary(n, rng),
                CMatrix::random_unitary(n, rng),
            )
        } else {
            (CMatrix::identity(n), CMatrix::identity(n))
        };
        Self::with_evolutions(
            initial,
            (0..n).map(|i| ub.column(i)).collect(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..n).map(|j| uf.column(j)).collect(),
            (0..n).map(|j| j as f64).collect(),
            u1,
            u2,
        )
        .expect("random scenario is valid by construction")
    }

    pub fn with_eps_ps(mut self, eps: f64) -> Self {
        self.eps_ps = eps;
        self
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[Complex64] {
        &self.initial
    }

    pub fn basis_b(&self) -> &[CVector] {
        &self.basis_b
    }

    pub fn basis_f(&self) -> &[CVector] {
        &self.basis_f
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b_values
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn evolution_1(&self) -> &CMatrix {
        &self.evolution_1
    }

    pub fn evolution_2(&self) -> &CMatrix {
        &self.evolution_2
    }

    /// `B̂ = Σ_i |b_i⟩ B_i ⟨b_i|` for the given eigenvalues.
    pub fn operator_b(&self, couplings: &[f64]) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n);
        for (b, value) in self.basis_b.iter().zip(couplings) {
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] += b[r] * b[c].conj() * *value;
                }
            }
        }
        m
    }

    /// `⟨b_i|U1|I⟩`.
    pub fn node_amplitudes(&self) -> CVector {
        let evolved = self.evolution_1.apply(&self.initial);
        self.basis_b.iter().map(|b| inner(b, &evolved)).collect()
    }

    /// `⟨f_j|U2 U1|I⟩`, computed through the composed evolution.
    pub fn arrival_amplitudes(&self) -> CVector {
        let evolved = self
            .evolution_2
            .apply(&self.evolution_1.apply(&self.initial));
        self.basis_f.iter().map(|f| inner(f, &evolved)).collect()
    }

    pub fn path_amplitudes(&self) -> PathAmplitudeTable {
        let n = self.dim();
        let nodes = self.node_amplitudes();
        let mut values = Vec::with_capacity(n * n);
        for f in &self.basis_f {
            for (b, a) in self.basis_b.iter().zip(&nodes) {
                values.push(inner(f, &self.evolution_2.apply(b)) * a);
            }
        }
        PathAmplitudeTable { n, values }
    }

    /// `P(b_i←I) = |⟨b_i|U1|I⟩|^2`.
    pub fn node_probabilities(&self) -> Vec<f64> {
        self.node_amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .collect()
    }

    /// `P(f_j←I) = |⟨f_j|U2 U1|I⟩|^2`.
    pub fn arrival_probabilities(&self) -> Vec<f64> {
        self.arrival_amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .collect()
    }

    pub fn quasi_probabilities(&self) -> QuasiProbTable {
        QuasiProbTable::from_amplitudes(&self.path_amplitudes())
    }

    fn check_final(&self, j: usize) -> Result<()> {
        if j >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "final state {j} out of range"
            )));
        }
        Ok(())
    }

    /// `Σ_i B_i A_ji / Σ_i A_ji` using the scenario's `B_i`.
    pub fn weak_value(&self, j: usize) -> Result<Complex64> {
        self.weak_value_for(j, &self.b_values)
    }

    pub fn weak_value_for(&self, j: usize, couplings: &[f64]) -> Result<Complex64> {
        self.check_final(j)?;
        check_values(couplings, self.dim(), "couplings")?;
        let table = self.path_amplitudes();
        let row = table.row(j);
        let sum: Complex64 = row.iter().sum();
        self.check_postselection(j, sum.norm_sqr())?;
        let moment: Complex64 = row.iter().zip(couplings).map(|(a, b)| a * b).sum();
        Ok(moment / sum)
    }

    /// Matrix-element form `⟨f_j|U2 B̂ U1|I⟩ / ⟨f_j|U2 U1|I⟩`, which reduces to
    /// `⟨f_j|B̂|I⟩ / ⟨f_j|I⟩` without dynamics.
    pub fn weak_value_matrix_element(&self, j: usize) -> Result<Complex64> {
        self.check_final(j)?;
        let b = self.operator_b(&self.b_values);
        let f = &self.basis_f[j];
        let after_1 = self.evolution_1.apply(&self.initial);
        let num = inner(f, &self.evolution_2.apply(&b.apply(&after_1)));
        let den = inner(f, &self.evolution_2.apply(&after_1));
        self.check_postselection(j, den.norm_sqr())?;
        Ok(num / den)
    }

    fn check_postselection(&self, j: usize, probability: f64) -> Result<()> {
        if probability < self.eps_ps {
            return Err(Error::IllConditionedPostselection {
                index: j,
                probability,
                threshold: self.eps_ps,
            });
        }
        Ok(())
    }

    /// `Z_j = Re[weak value]`, the asymptotic shift of a broad pointer
    /// conditioned on arrival in `f_j`.
    pub fn pointer_shift_z(&self, j: usize) -> Result<f64> {
        Ok(self.weak_value(j)?.re)
    }

    pub fn pointer_shift_z_for(&self, j: usize, couplings: &[f64]) -> Result<f64> {
        Ok(self.weak_value_for(j, couplings)?.re)
    }

    /// The same shift as an average over quasi-probabilities,
    /// `Σ_i B_i P̃_ji / Σ_i P̃_ji`.
    pub fn pointer_shift_z_quasi(&self, j: usize, couplings: &[f64]) -> Result<f64> {
        self.check_final(j)?;
        check_values(couplings, self.dim(), "couplings")?;
        let q = self.quasi_probabilities();
        let row = q.row(j);
        let total: f64 = row.iter().sum();
        self.check_postselection(j, total)?;
        Ok(row.iter().zip(couplings).map(|(p, b)| p * b).sum::<f64>() / total)
    }

    /// `Y(B) = Σ_i B_i P(b_i←I)`.
    pub fn mean_shift_y(&self, couplings: &[f64]) -> Result<f64> {
        check_values(couplings, self.dim(), "couplings")?;
        Ok(self
            .node_probabilities()
            .iter()
            .zip(couplings)
            .map(|(p, b)| p * b)
            .sum())
    }

    /// `⟨I(t1)|B̂|I(t1)⟩`.
    pub fn expectation(&self, couplings: &[f64]) -> Result<f64> {
        check_values(couplings, self.dim(), "couplings")?;
        let evolved = self.evolution_1.apply(&self.initial);
        Ok(inner(&evolved, &self.operator_b(couplings).apply(&evolved)).re)
    }

    /// Grid for the first pointer: couplings padded by the configured span.
    pub fn reading_grid(&self, pointer: &PointerSpec, cfg: &GridConfig) -> Result<Grid> {
        Grid::covering(pointer.couplings.iter().copied(), pointer.width, cfg)
    }

    /// `ρ(x1) = Σ_i P(b_i←I) ρ^I(x1 - B_i)`.
    pub fn density_one_pointer_on(
        &self,
        pointer: &PointerSpec,
        grid: &Grid,
    ) -> Result<DensityGrid> {
        pointer.check_dim(self.dim(), "pointer1")?;
        let p = self.node_probabilities();
        Ok(grid.tabulate(|x| {
            p.iter()
                .zip(&pointer.couplings)
                .map(|(p, b)| p * density(x - b, pointer.width))
                .sum()
        }))
    }

    pub fn density_one_pointer(
        &self,
        pointer: &PointerSpec,
        cfg: &GridConfig,
    ) -> Result<DensityGrid> {
        self.density_one_pointer_on(pointer, &self.reading_grid(pointer, cfg)?)
    }

    /// Amplitude for the system to end in `f_j` with readings `(x1, x2)`:
    /// `Σ_i A_ji G1(x1 - B_i) G2(x2 - F_j)`.
    pub fn joint_amplitude(
        &self,
        pointer1: &PointerSpec,
        pointer2: &PointerSpec,
        j: usize,
        x1: f64,
        x2: f64,
    ) -> Result<Complex64> {
        self.check_final(j)?;
        pointer1.check_dim(self.dim(), "pointer1")?;
        pointer2.check_dim(self.dim(), "pointer2")?;
        let table = self.path_amplitudes();
        Ok(first_pointer_amplitude(table.row(j), pointer1, x1)
            * wavefunction(x2 - pointer2.couplings[j], pointer2.width))
    }

    /// `ρ(x1, x2) = Σ_j |joint amplitude|^2` on the given grids.
    pub fn joint_density_on(
        &self,
        pointer1: &PointerSpec,
        pointer2: &PointerSpec,
        x1: Grid,
        x2: Grid,
    ) -> Result<DensityGrid2> {
        pointer1.check_dim(self.dim(), "pointer1")?;
        pointer2.check_dim(self.dim(), "pointer2")?;
        let slices = self.conditioned_slices(pointer1, &x1);
        let g2: Vec<Vec<f64>> = x2
            .points()
            .map(|x| {
                pointer2
                    .couplings
                    .iter()
                    .map(|f| wavefunction(x - f, pointer2.width).powi(2))
                    .collect()
            })
            .collect();
        let n = self.dim();
        let mut values = Vec::with_capacity(x1.len() * x2.len());
        for k1 in 0..x1.len() {
            for row in &g2 {
                values.push((0..n).map(|j| slices[j].values[k1] * row[j]).sum());
            }
        }
        Ok(DensityGrid2 { x1, x2, values })
    }

    pub fn joint_density(
        &self,
        pointer1: &PointerSpec,
        pointer2: &PointerSpec,
        cfg: &GridConfig,
    ) -> Result<DensityGrid2> {
        let x1 = self.reading_grid(pointer1, cfg)?;
        let x2 = Grid::covering(pointer2.couplings.iter().copied(), pointer2.width, cfg)?;
        self.joint_density_on(pointer1, pointer2, x1, x2)
    }

    /// `|Σ_i A_ji G1(x1 - B_i)|^2` for every `j`: the first pointer's density
    /// jointly with arrival in `f_j`, at finite width.
    pub fn conditioned_slices(&self, pointer1: &PointerSpec, grid: &Grid) -> Vec<DensityGrid> {
        let table = self.path_amplitudes();
        (0..self.dim())
            .map(|j| {
                let row = table.row(j);
                grid.tabulate(|x| first_pointer_amplitude(row, pointer1, x).norm_sqr())
            })
            .collect()
    }

    /// `∫ ρ(x1, x2) dx2` by trapezoid quadrature over an `x2` grid covering
    /// every `F_j`. The joint density is `Σ_j s_j(x1) |G2(x2 - F_j)|^2`, so
    /// the iterated integral is evaluated term by term.
    pub fn causality_marginal(
        &self,
        pointer1: &PointerSpec,
        pointer2: &PointerSpec,
        cfg: &GridConfig,
    ) -> Result<DensityGrid> {
        pointer1.check_dim(self.dim(), "pointer1")?;
        pointer2.check_dim(self.dim(), "pointer2")?;
        let x1 = self.reading_grid(pointer1, cfg)?;
        let x2 = Grid::covering(pointer2.couplings.iter().copied(), pointer2.width, cfg)?;
        let column_mass: Vec<f64> = pointer2
            .couplings
            .iter()
            .map(|f| {
                let col: Vec<f64> = x2
                    .points()
                    .map(|x| wavefunction(x - f, pointer2.width).powi(2))
                    .collect();
                trapezoid(&col, x2.step())
            })
            .collect();
        let slices = self.conditioned_slices(pointer1, &x1);
        let values = (0..x1.len())
            .map(|k| {
                slices
                    .iter()
                    .zip(&column_mass)
                    .map(|(s, m)| s.values[k] * m)
                    .sum()
            })
            .collect();
        Ok(DensityGrid { grid: x1, values })
    }

    /// Reachable final states and their shifts `(j, P(f_j←I), Z_j)`;
    /// states with `P(f_j←I) < eps_ps` are dropped.
    pub fn postselected_shifts(&self, couplings: &[f64]) -> Result<Vec<(usize, f64, f64)>> {
        let arrivals = self.arrival_probabilities();
        let mut out = Vec::new();
        for (j, p) in arrivals.iter().enumerate() {
            if *p < self.eps_ps {
                continue;
            }
            out.push((j, *p, self.pointer_shift_z_for(j, couplings)?));
        }
        Ok(out)
    }

    /// `(Σ_j P(f_j←I) ρ^I(x1 - Z_j), ρ^I(x1 - Y))` on a shared grid.
    pub fn causal_sum_identity(
        &self,
        pointer1: &PointerSpec,
        cfg: &GridConfig,
    ) -> Result<(DensityGrid, DensityGrid)> {
        pointer1.check_dim(self.dim(), "pointer1")?;
        let shifts = self.postselected_shifts(&pointer1.couplings)?;
        let y = self.mean_shift_y(&pointer1.couplings)?;
        let centers = pointer1
            .couplings
            .iter()
            .copied()
            .chain(shifts.iter().map(|s| s.2))
            .chain([y]);
        let grid = Grid::covering(centers, pointer1.width, cfg)?;
        let w = pointer1.width;
        let lhs = grid.tabulate(|x| shifts.iter().map(|(_, p, z)| p * density(x - z, w)).sum());
        let rhs = grid.tabulate(|x| density(x - y, w));
        Ok((lhs, rhs))
    }

    /// Finite-width probability of arrival in each `f_j`, integrated over the
    /// first pointer: `Σ_ii' A_ji A*_ji' exp(-(B_i - B_i')^2 / (4 Δx1^2))`.
    /// Tends to `P(f_j←I)` as the pointer broadens and sums to one exactly.
    pub fn finite_width_arrivals(&self, pointer1: &PointerSpec) -> Result<Vec<f64>> {
        pointer1.check_dim(self.dim(), "pointer1")?;
        let table = self.path_amplitudes();
        let b = &pointer1.couplings;
        Ok((0..self.dim())
            .map(|j| {
                let row = table.row(j);
                let mut s = Complex64::new(0.0, 0.0);
                for (i, ai) in row.iter().enumerate() {
                    for (k, ak) in row.iter().enumerate() {
                        s += ai * ak.conj() * wavefunction_overlap(b[i], b[k], pointer1.width);
                    }
                }
                s.re
            })
            .collect())
    }

    /// Width beyond which `Σ_i P̃_ji ρ^I(x1 - B_i)` stays non-negative over
    /// `±span_widths` kernel widths for every reachable `j`.
    pub fn wide_pointer_width(&self, couplings: &[f64], span_widths: f64) -> Result<f64> {
        check_values(couplings, self.dim(), "couplings")?;
        let q = self.quasi_probabilities();
        let max_b = couplings.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        let mut spread: f64 = 1.0;
        for j in 0..self.dim() {
            let row = q.row(j);
            let total: f64 = row.iter().sum();
            if total < self.eps_ps {
                continue;
            }
            spread = spread.max(row.iter().map(|p| p.abs()).sum::<f64>() / total);
        }
        // exponents of the shifted kernels stay below 1/(4 spread) in magnitude
        Ok((8.0 * span_widths * max_b * spread).max(f64::MIN_POSITIVE))
    }

    /// The three directly observable probabilities per final state.
    pub fn observable_probability_checks(
        &self,
        pointer1: &PointerSpec,
        pointer2: &PointerSpec,
        cfg: &GridConfig,
    ) -> Result<ObservableReport> {
        pointer1.check_dim(self.dim(), "pointer1")?;
        pointer2.check_dim(self.dim(), "pointer2")?;
        let n = self.dim();
        let q = self.quasi_probabilities();
        let direct = self.arrival_probabilities();
        let x1 = self.reading_grid(pointer1, cfg)?;
        let x2 = Grid::covering(pointer2.couplings.iter().copied(), pointer2.width, cfg)?;
        let slices = self.conditioned_slices(pointer1, &x1);
        let slice_mass: Vec<f64> = slices.iter().map(|s| s.integral()).collect();
        // nearest-F_j cell of every x2 grid point
        let cells: Vec<usize> = x2
            .points()
            .map(|x| nearest(&pointer2.couplings, x))
            .collect();
        let kernel_peak = density(0.0, pointer1.width);
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let row = q.row(j);
            let window: f64 = (0..n)
                .map(|jp| {
                    let col: Vec<f64> = x2
                        .points()
                        .zip(&cells)
                        .map(|(x, c)| {
                            if *c == j {
                                wavefunction(x - pointer2.couplings[jp], pointer2.width).powi(2)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    slice_mass[jp] * trapezoid(&col, x2.step())
                })
                .sum();
            let conditioned = x1.tabulate(|x| {
                row.iter()
                    .zip(&pointer1.couplings)
                    .map(|(p, b)| p * density(x - b, pointer1.width))
                    .sum()
            });
            rows.push(ObservableRow {
                final_state: j,
                arrival_from_quasi: row.iter().sum(),
                arrival_direct: direct[j],
                window_probability: window,
                conditioned_min: conditioned.min_value() / kernel_peak,
            });
        }
        Ok(ObservableReport { rows })
    }
}

fn nearest(values: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if (x - v).abs() < (x - values[best]).abs() {
            best = k;
        }
    }
    best
}

fn first_pointer_amplitude(row: &[Complex64], pointer1: &PointerSpec, x1: f64) -> Complex64 {
    row.iter()
        .zip(&pointer1.couplings)
        .map(|(a, b)| a * wavefunction(x1 - b, pointer1.width))
        .sum()
}

fn check_basis(basis: &[CVector], n: usize, path: &str) -> Result<()> {
    if basis.len() != n {
        return Err(Error::validation(
            path,
            format!("expected {n} vectors, found {}", basis.len()),
        ));
    }
    for (k, v) in basis.iter().enumerate() {
        if v.len() != n {
            return Err(Error::validation(
                format!("{path}[{k}]"),
                format!("expected {n} components"),
            ));
        }
    }
    let dev = gram_deviation(basis);
    if dev > BASIS_TOL {
        return Err(Error::validation(
            path,
            format!("not orthonormal: max |Gram - 1| = {dev:.3e} > {BASIS_TOL:.0e}"),
        ));
    }
    Ok(())
}

fn check_values(values: &[f64], n: usize, path: &str) -> Result<()> {
    if values.len() != n {
        return Err(Error::validation(
            path,
            format!("expected {n} values, found {}", values.len()),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(path, "values must be finite"));
    }
    Ok(())
}

/// Path amplitudes `A_ji = A(f_j ← b_i ← I)`, stored `[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAmplitudeTable {
    n: usize,
    values: Vec<Complex64>,
}

impl PathAmplitudeTable {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, i: usize) -> Complex64 {
        self.values[j * self.n + i]
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    /// `Σ_i A_ji = ⟨f_j|U2 U1|I⟩`.
    pub fn row_sums(&self) -> CVector {
        (0..self.n).map(|j| self.row(j).iter().sum()).collect()
    }
}

/// Quasi-probabilities `P̃_ji = Re[A_ji Σ_i' A*_ji']`, stored `[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiProbTable {
    n: usize,
    values: Vec<f64>,
    arrivals: Vec<f64>,
    nodes: Vec<f64>,
}

impl QuasiProbTable {
    pub fn from_amplitudes(table: &PathAmplitudeTable) -> Self {
        let n = table.dim();
        let mut values = Vec::with_capacity(n * n);
        for (j, total) in table.row_sums().iter().enumerate() {
            for a in table.row(j) {
                values.push((a * total.conj()).re);
            }
        }
        Self::from_values(n, values)
    }

    fn from_values(n: usize, values: Vec<f64>) -> Self {
        let arrivals = values.chunks_exact(n).map(|r| r.iter().sum()).collect();
        let nodes = (0..n)
            .map(|i| (0..n).map(|j| values[j * n + i]).sum())
            .collect();
        Self {
            n,
            values,
            arrivals,
            nodes,
        }
    }

    /// Table from explicit `[j][i]` rows, e.g. closed-form spin values.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "quasi-probability table must be square".into(),
            ));
        }
        Ok(Self::from_values(
            n,
            rows.iter().flatten().copied().collect(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Row sums, `P(f_j←I)`.
    pub fn arrival_marginals(&self) -> &[f64] {
        &self.arrivals
    }

    /// Column sums, `P(b_i←I)`.
    pub fn node_marginals(&self) -> &[f64] {
        &self.nodes
    }

    pub fn has_negative(&self) -> bool {
        self.values.iter().any(|v| *v < 0.0)
    }
}

/// Coupling constants and width of one Gaussian pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerSpec {
    pub couplings: Vec<f64>,
    pub width: f64,
}

impl PointerSpec {
    pub fn new(couplings: Vec<f64>, width: f64) -> Result<Self> {
        check_width(width, "pointer width")?;
        if couplings.is_empty() || couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation(
                "couplings",
                "must be non-empty and finite",
            ));
        }
        Ok(Self { couplings, width })
    }

    /// Pointer coupled to the scenario's `B̂`.
    pub fn for_b(sc: &QuantumScenario, width: f64) -> Result<Self> {
        Self::new(sc.b_values.clone(), width)
    }

    /// Pointer coupled to the scenario's `F̂`.
    pub fn for_f(sc: &QuantumScenario, width: f64) -> Result<Self> {
        Self::new(sc.f_values.clone(), width)
    }

    fn check_dim(&self, n: usize, path: &str) -> Result<()> {
        if self.couplings.len() != n {
            return Err(Error::validation(
                format!("{path}.couplings"),
                format!("expected {n} values, found {}", self.couplings.len()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRow {
    pub final_state: usize,
    /// `Σ_i P̃_ji`.
    pub arrival_from_quasi: f64,
    /// `|⟨f_j|U|I⟩|^2`.
    pub arrival_direct: f64,
    /// Probability of an `x2` reading closer to `F_j` than to any other `F`,
    /// by quadrature of the joint density.
    pub window_probability: f64,
    /// Minimum over the grid of `Σ_i P̃_ji ρ^I(x1 - B_i)`, in units of the
    /// kernel peak `1 / (sqrt(pi) Δx1)`.
    pub conditioned_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub rows: Vec<ObservableRow>,
}

impl ObservableReport {
    /// Human-readable descriptions of every value below `-tol`.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            if r.arrival_from_quasi < -tol {
                out.push(format!(
                    "f{}: sum of quasi-probabilities {:.3e} < 0",
                    r.final_state, r.arrival_from_quasi
                ));
            }
            if r.window_probability < -tol {
                out.push(format!(
                    "f{}: x2 window probability {:.3e} < 0",
                    r.final_state, r.window_probability
                ));
            }
            if r.conditioned_min < -tol {
                out.push(format!(
                    "f{}: conditioned x1 density {:.3e} < 0",
                    r.final_state, r.conditioned_min
                ));
            }
        }
        out
    }

    /// Largest `|window probability - Σ_i P̃_ji|`.
    pub fn window_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.window_probability - r.arrival_from_quasi).abs())
            .fold(0.0, f64::max)
    }
}
