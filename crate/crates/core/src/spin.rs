//! Spin-1/2 prepared in `|z↑⟩`, probed along an intermediate direction `n`
//! and post-selected along a final direction `n′`.
//!
//! States in the z basis: `|n↑⟩ = (cos θ/2, e^{iφ} sin θ/2)`,
//! `|n↓⟩ = (-e^{-iφ} sin θ/2, cos θ/2)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, Grid, GridConfig};
use crate::kernels::density;
use crate::linalg::CVector;
use crate::quantum::{QuantumScenario, DEFAULT_EPS_PS};

pub const DEFAULT_MAP_PHI: usize = 360;
pub const DEFAULT_MAP_THETA: usize = 180;
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Direction on the Bloch sphere. `theta` is clamped to `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochDirection {
    pub phi: f64,
    pub theta: f64,
}

impl BlochDirection {
    pub fn new(phi: f64, theta: f64) -> Self {
        Self {
            phi,
            theta: theta.clamp(0.0, PI),
        }
    }

    /// Azimuth reduced to `[0, 2π)`.
    pub fn reduced_phi(&self) -> f64 {
        let r = self.phi.rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    pub fn up(&self) -> CVector {
        spin_up(self.phi, self.theta)
    }

    pub fn down(&self) -> CVector {
        spin_down(self.phi, self.theta)
    }
}

/// `|n↑⟩` from raw angles (no clamping).
pub fn spin_up(phi: f64, theta: f64) -> CVector {
    let (s, c) = (theta / 2.0).sin_cos();
    vec![Complex64::new(c, 0.0), Complex64::from_polar(s, phi)]
}

/// `|n↓⟩` from raw angles (no clamping).
pub fn spin_down(phi: f64, theta: f64) -> CVector {
    let (s, c) = (theta / 2.0).sin_cos();
    vec![-Complex64::from_polar(s, -phi), Complex64::new(c, 0.0)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinConfiguration {
    pub intermediate: BlochDirection,
    pub final_dir: BlochDirection,
}

impl SpinConfiguration {
    pub fn new(intermediate: BlochDirection, final_dir: BlochDirection) -> Self {
        Self {
            intermediate,
            final_dir,
        }
    }

    /// φ=π, θ=π/2 probed, post-selected along φ′=0, θ′=0.95π.
    pub fn anomalous_example() -> Self {
        Self::new(
            BlochDirection::new(PI, PI / 2.0),
            BlochDirection::new(0.0, 0.95 * PI),
        )
    }

    /// Equivalent two-level scenario with `B = F = (1, -1)`.
    pub fn to_scenario(&self) -> QuantumScenario {
        self.to_scenario_with(&[1.0, -1.0])
            .expect("spin scenario is valid by construction")
    }

    pub fn to_scenario_with(&self, b_values: &[f64]) -> Result<QuantumScenario> {
        let n = self.intermediate;
        let f = self.final_dir;
        QuantumScenario::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![n.up(), n.down()],
            b_values.to_vec(),
            vec![f.up(), f.down()],
            vec![1.0, -1.0],
        )
    }
}

/// Closed-form `(P̃1, P̃2, P̃3, P̃4)` for the paths
/// `n′↑←n↑`, `n′↑←n↓`, `n′↓←n↑`, `n′↓←n↓` (all starting from `z↑`).
pub fn spin_quasi_probabilities(cfg: &SpinConfiguration) -> [f64; 4] {
    let (phi, theta) = (cfg.intermediate.phi, cfg.intermediate.theta);
    let (phi_f, theta_f) = (cfg.final_dir.phi, cfg.final_dir.theta);
    let c2 = (theta / 2.0).cos().powi(2);
    let s2 = (theta / 2.0).sin().powi(2);
    let c2f = (theta_f / 2.0).cos().powi(2);
    let s2f = (theta_f / 2.0).sin().powi(2);
    let cross = (phi - phi_f).cos() * theta.sin() * theta_f.sin() / 4.0;
    [
        c2f * c2 + cross,
        c2f * s2 - cross,
        s2f * c2 - cross,
        s2f * s2 + cross,
    ]
}

fn min_quasi(phi: f64, theta: f64, final_dir: BlochDirection) -> f64 {
    let q = spin_quasi_probabilities(&SpinConfiguration::new(
        BlochDirection { phi, theta },
        final_dir,
    ));
    q.into_iter().fold(f64::INFINITY, f64::min)
}

/// Classification of intermediate directions by the sign of the smallest
/// quasi-probability. Cells are stored θ-major: `[k_theta * phis.len() + k_phi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativityMap {
    pub final_dir: BlochDirection,
    pub phis: Vec<f64>,
    pub thetas: Vec<f64>,
    pub min_quasi: Vec<f64>,
}

impl NegativityMap {
    pub fn is_negative(&self, k_phi: usize, k_theta: usize) -> bool {
        self.min_quasi[k_theta * self.phis.len() + k_phi] < 0.0
    }

    pub fn negative_fraction(&self) -> f64 {
        self.min_quasi.iter().filter(|v| **v < 0.0).count() as f64 / self.min_quasi.len() as f64
    }

    /// Points `(φ, θ)` on the region boundary: every sign change of
    /// `min P̃` between θ-neighbours, refined by bisection until
    /// `|min P̃| ≤ tol`.
    pub fn boundary(&self, tol: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let nphi = self.phis.len();
        for (kp, &phi) in self.phis.iter().enumerate() {
            for kt in 1..self.thetas.len() {
                let a = self.min_quasi[(kt - 1) * nphi + kp];
                let b = self.min_quasi[kt * nphi + kp];
                if (a < 0.0) == (b < 0.0) {
                    continue;
                }
                let (mut lo, mut hi) = (self.thetas[kt - 1], self.thetas[kt]);
                let lo_negative = a < 0.0;
                let mut mid = 0.5 * (lo + hi);
                for _ in 0..200 {
                    mid = 0.5 * (lo + hi);
                    let v = min_quasi(phi, mid, self.final_dir);
                    if v.abs() <= tol || hi - lo < 1e-15 {
                        break;
                    }
                    if (v < 0.0) == lo_negative {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push((phi, mid));
            }
        }
        out
    }
}

/// Evaluate the negativity classification on an inclusive
/// `[0, 2π] × [0, π]` grid of `n_phi × n_theta` points.
pub fn negativity_region_map(
    final_dir: BlochDirection,
    n_phi: usize,
    n_theta: usize,
) -> Result<NegativityMap> {
    if n_phi < 2 || n_theta < 2 {
        return Err(Error::InvalidArgument(
            "region map needs at least 2x2 points".into(),
        ));
    }
    let phis: Vec<f64> = (0..n_phi)
        .map(|k| TAU * k as f64 / (n_phi - 1) as f64)
        .collect();
    let thetas: Vec<f64> = (0..n_theta)
        .map(|k| PI * k as f64 / (n_theta - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(n_phi * n_theta);
    for &theta in &thetas {
        for &phi in &phis {
            values.push(min_quasi(phi, theta, final_dir));
        }
    }
    Ok(NegativityMap {
        final_dir,
        phis,
        thetas,
        min_quasi: values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinWeakMeasurement {
    /// `P(n′↑←z↑) = P̃1 + P̃2`.
    pub arrival: f64,
    /// `(P̃1 - P̃2) / (P̃1 + P̃2)`.
    pub shift: f64,
    /// No post-selection: `Σ_i P(n_i←z↑) ρ(x - B_i)`.
    pub unconditional: DensityGrid,
    /// Jointly with arrival in `n′↑` (unnormalized): `arrival · ρ(x - shift)`.
    pub conditioned: DensityGrid,
}

/// Broad pointer coupled to the spin projection along `n` (`B = ±1`),
/// post-selected in `n′↑`.
pub fn weak_spin_measurement(
    cfg: &SpinConfiguration,
    width: f64,
    grid_cfg: &GridConfig,
) -> Result<SpinWeakMeasurement> {
    let q = spin_quasi_probabilities(cfg);
    let arrival = q[0] + q[1];
    if arrival < DEFAULT_EPS_PS {
        return Err(Error::IllConditionedPostselection {
            index: 0,
            probability: arrival,
            threshold: DEFAULT_EPS_PS,
        });
    }
    let shift = (q[0] - q[1]) / arrival;
    let up = q[0] + q[2];
    let down = q[1] + q[3];
    let grid = Grid::covering([1.0, -1.0, shift], width, grid_cfg)?;
    let unconditional =
        grid.tabulate(|x| up * density(x - 1.0, width) + down * density(x + 1.0, width));
    let conditioned = grid.tabulate(|x| arrival * density(x - shift, width));
    Ok(SpinWeakMeasurement {
        arrival,
        shift,
        unconditional,
        conditioned,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub theta_prime: f64,
    /// `A(n′↑←n↑←z↑)`, from the state vectors.
    pub amplitude_1: f64,
    /// `A(n′↑←n↓←z↑)`.
    pub amplitude_2: f64,
    /// `P̃(n′↑←n↑←z↑)`.
    pub quasi_probability: f64,
}

/// Along `θ′ = θ + 2 arccos(β / cos(θ/2))` (with `φ = φ′`) the amplitude of
/// `n′↑←n↑←z↑` stays `β` while its quasi-probability `β cos(θ′/2)` follows
/// the other path.
pub fn nonlocality_sweep(beta: f64, thetas: &[f64]) -> Result<Vec<SweepRow>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1)")));
    }
    let z_up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    thetas
        .iter()
        .map(|&theta| {
            let ratio = beta / (theta / 2.0).cos();
            if !(ratio.abs() <= 1.0) {
                return Err(Error::Domain(format!(
                    "beta / cos(theta/2) = {ratio} > 1 at theta = {theta}"
                )));
            }
            let theta_prime = theta + 2.0 * ratio.acos();
            let f_up = spin_up(0.0, theta_prime);
            let paths = [spin_up(0.0, theta), spin_down(0.0, theta)]
                .map(|b| crate::linalg::inner(&f_up, &b) * crate::linalg::inner(&b, &z_up));
            let total = paths[0] + paths[1];
            Ok(SweepRow {
                theta,
                theta_prime,
                amplitude_1: paths[0].re,
                amplitude_2: paths[1].re,
                quasi_probability: (paths[0] * total.conj()).re,
            })
        })
        .collect()
}

/// Largest admissible `θ` of the sweep: `β / cos(θ/2) ≤ 1`.
pub fn sweep_theta_max(beta: f64) -> f64 {
    2.0 * beta.acos()
}
