//! Declarative scenario files (TOML). Complex numbers are `[re, im]` pairs;
//! matrices are lists of rows; bases are lists of vectors.
//!
//! ```toml
//! kind = "spin"
//! seed = 7
//!
//! [spin]
//! angle_unit = "pi"
//! phi = 1.0
//! theta = 0.5
//! phi_final = 0.0
//! theta_final = 0.95
//!
//! [pointer1]
//! width = 100.0
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::{ClassicalNetwork, ClassicalPointerPair};
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::kernels::WeightedShiftSet;
use crate::linalg::{CMatrix, CVector};
use crate::quantum::{PointerSpec, QuantumScenario};
use crate::spin::{BlochDirection, SpinConfiguration, DEFAULT_MAP_PHI, DEFAULT_MAP_THETA};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0;
/// Points per axis for emitted two-dimensional grids unless overridden.
pub const DEFAULT_POINTS_2D: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Classical,
    Quantum,
    Spin,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Classical => "classical",
            Kind::Quantum => "quantum",
            Kind::Spin => "spin",
        }
    }
}

type Pair = [f64; 2];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    #[serde(default)]
    pub grid: GridConfig,
    pub pointer1: Option<PointerConfig>,
    pub pointer2: Option<PointerConfig>,
    pub classical: Option<ClassicalSection>,
    pub quantum: Option<QuantumSection>,
    pub spin: Option<SpinSection>,
    pub collapse: Option<CollapseSection>,
    pub reshaping: Option<ReshapingSection>,
    pub sweep: Option<SweepSection>,
    pub region_map: Option<RegionMapSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerConfig {
    pub width: Option<f64>,
    /// Defaults to the eigenvalues of the probed observable.
    pub couplings: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub entry: Vec<f64>,
    /// `branching[j][i] = P(j←i)`.
    pub branching: Vec<Vec<f64>>,
    pub b_values: Vec<f64>,
    pub f_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvolutionSpec {
    Matrix(Vec<Vec<Pair>>),
    Generator {
        hamiltonian: Vec<Vec<Pair>>,
        time: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSection {
    pub initial: Vec<Pair>,
    pub basis_b: Vec<Vec<Pair>>,
    pub b_values: Vec<f64>,
    pub basis_f: Vec<Vec<Pair>>,
    pub f_values: Vec<f64>,
    pub evolution_1: Option<EvolutionSpec>,
    pub evolution_2: Option<EvolutionSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Rad,
    /// Angles given in multiples of π.
    Pi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSection {
    #[serde(default)]
    pub angle_unit: AngleUnit,
    pub phi: f64,
    pub theta: f64,
    pub phi_final: f64,
    pub theta_final: f64,
    /// Eigenvalues for `n↑`, `n↓`; defaults to `(1, -1)`.
    pub b_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSection {
    /// Real numbers or `[re, im]` pairs.
    pub weights: Vec<WeightEntry>,
    pub shifts: Vec<f64>,
    pub width: f64,
    /// Widths for the convergence probe, increasing.
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightEntry {
    Real(f64),
    Complex(Pair),
}

impl WeightEntry {
    fn value(&self) -> Complex64 {
        match *self {
            WeightEntry::Real(r) => Complex64::new(r, 0.0),
            WeightEntry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReshapingSection {
    pub final_state: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub beta: Option<f64>,
    pub points: Option<usize>,
    /// Replacement values of `P(1←2)` for the classical counterpart.
    pub classical_p12: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionMapSection {
    pub n_phi: Option<usize>,
    pub n_theta: Option<usize>,
    pub refine: Option<bool>,
}

/// The physical system of a validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Classical {
        network: ClassicalNetwork,
        b_values: Vec<f64>,
        f_values: Vec<f64>,
    },
    Quantum(QuantumScenario),
    Spin {
        config: SpinConfiguration,
        scenario: QuantumScenario,
    },
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    /// `sha256:<hex>` of the file bytes.
    pub digest: String,
    pub system: Option<System>,
    pub collapse: WeightedShiftSet,
    pub collapse_scales: Vec<f64>,
}

/// Weight set used when a file has no `[collapse]` table: two broad
/// Gaussians of weights 1 and -0.8 at 0 and -1, width 30.
pub fn default_collapse() -> WeightedShiftSet {
    WeightedShiftSet::real(&[1.0, -0.8], &[0.0, -1.0], 30.0).expect("valid defaults")
}

pub const DEFAULT_COLLAPSE_SCALES: [f64; 5] = [30.0, 60.0, 120.0, 240.0, 480.0];

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::Validation { path, message } => Error::Validation {
            path: format!("{section}.{path}"),
            message,
        },
        Error::Domain(message) | Error::InvalidArgument(message) => Error::Validation {
            path: section.to_string(),
            message,
        },
        other => other,
    }
}

fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn vector(v: &[Pair]) -> CVector {
    v.iter().map(complex).collect()
}

fn matrix(rows: &[Vec<Pair>], path: &str) -> Result<CMatrix> {
    let rows: Vec<CVector> = rows.iter().map(|r| vector(r)).collect();
    CMatrix::from_rows(&rows).map_err(|e| match e {
        Error::Validation { message, .. } | Error::InvalidArgument(message) => {
            Error::validation(path, message)
        }
        other => other,
    })
}

fn evolution(spec: &Option<EvolutionSpec>, n: usize, path: &str) -> Result<CMatrix> {
    match spec {
        None => Ok(CMatrix::identity(n)),
        Some(EvolutionSpec::Matrix(rows)) => matrix(rows, path),
        Some(EvolutionSpec::Generator { hamiltonian, time }) => {
            let h = matrix(hamiltonian, &format!("{path}.hamiltonian"))?;
            let dev = h.hermiticity_deviation();
            if dev > 1e-12 {
                return Err(Error::validation(
                    format!("{path}.hamiltonian"),
                    format!("not Hermitian: max |H - H†| = {dev:.3e}"),
                ));
            }
            if !time.is_finite() {
                return Err(Error::validation(format!("{path}.time"), "must be finite"));
            }
            CMatrix::unitary_from_hamiltonian(&h, *time).map_err(|e| prefixed(path, e))
        }
    }
}

impl ClassicalSection {
    fn build(&self) -> Result<System> {
        let network = ClassicalNetwork::new(self.entry.clone(), self.branching.clone())
            .map_err(|e| prefixed("classical", e))?;
        let n = network.dim();
        for (values, path) in [
            (&self.b_values, "classical.b_values"),
            (&self.f_values, "classical.f_values"),
        ] {
            if values.len() != n {
                return Err(Error::validation(
                    path,
                    format!("expected {n} values, found {}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(path, "values must be finite"));
            }
        }
        Ok(System::Classical {
            network,
            b_values: self.b_values.clone(),
            f_values: self.f_values.clone(),
        })
    }
}

impl QuantumSection {
    fn build(&self) -> Result<QuantumScenario> {
        let n = self.initial.len();
        let u1 = evolution(&self.evolution_1, n, "quantum.evolution_1")?;
        let u2 = evolution(&self.evolution_2, n, "quantum.evolution_2")?;
        QuantumScenario::with_evolutions(
            vector(&self.initial),
            self.basis_b.iter().map(|v| vector(v)).collect(),
            self.b_values.clone(),
            self.basis_f.iter().map(|v| vector(v)).collect(),
            self.f_values.clone(),
            u1,
            u2,
        )
        .map_err(|e| prefixed("quantum", e))
    }
}

impl SpinSection {
    pub fn configuration(&self) -> Result<SpinConfiguration> {
        let scale = match self.angle_unit {
            AngleUnit::Rad => 1.0,
            AngleUnit::Pi => PI,
        };
        for (v, path) in [
            (self.phi, "spin.phi"),
            (self.theta, "spin.theta"),
            (self.phi_final, "spin.phi_final"),
            (self.theta_final, "spin.theta_final"),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(path, "must be finite"));
            }
        }
        for (v, path) in [
            (self.theta, "spin.theta"),
            (self.theta_final, "spin.theta_final"),
        ] {
            let t = v * scale;
            if !(-1e-12..=PI + 1e-12).contains(&t) {
                return Err(Error::validation(
                    path,
                    format!("polar angle {t} outside [0, pi]"),
                ));
            }
        }
        Ok(SpinConfiguration::new(
            BlochDirection::new(self.phi * scale, self.theta * scale),
            BlochDirection::new(self.phi_final * scale, self.theta_final * scale),
        ))
    }

    fn build(&self) -> Result<System> {
        let config = self.configuration()?;
        let b = self.b_values.clone().unwrap_or_else(|| vec![1.0, -1.0]);
        let scenario = config
            .to_scenario_with(&b)
            .map_err(|e| prefixed("spin", e))?;
        Ok(System::Spin { config, scenario })
    }
}

fn check_pointer(p: &Option<PointerConfig>, path: &str) -> Result<()> {
    if let Some(p) = p {
        if let Some(w) = p.width {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::validation(
                    format!("{path}.width"),
                    "must be positive and finite",
                ));
            }
        }
        if let Some(c) = &p.couplings {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(
                    format!("{path}.couplings"),
                    "must be non-empty and finite",
                ));
            }
        }
    }
    Ok(())
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let digest = format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())));
        Self::from_file(file, digest)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_file(file: ScenarioFile, digest: String) -> Result<Self> {
        file.grid.validate()?;
        check_pointer(&file.pointer1, "pointer1")?;
        check_pointer(&file.pointer2, "pointer2")?;
        if file.trials == Some(0) {
            return Err(Error::validation("trials", "must be at least 1"));
        }
        let system = match file.kind {
            None => {
                if file.classical.is_some() || file.quantum.is_some() || file.spin.is_some() {
                    return Err(Error::validation(
                        "kind",
                        "missing, but a system table is present",
                    ));
                }
                None
            }
            Some(kind) => {
                let present = [
                    (Kind::Classical, file.classical.is_some()),
                    (Kind::Quantum, file.quantum.is_some()),
                    (Kind::Spin, file.spin.is_some()),
                ];
                for (k, is_present) in present {
                    if k != kind && is_present {
                        return Err(Error::validation(
                            k.as_str(),
                            format!("table not allowed for kind = \"{}\"", kind.as_str()),
                        ));
                    }
                }
                let missing =
                    || Error::validation(kind.as_str(), "table is required for this kind");
                Some(match kind {
                    Kind::Classical => file.classical.as_ref().ok_or_else(missing)?.build()?,
                    Kind::Quantum => {
                        System::Quantum(file.quantum.as_ref().ok_or_else(missing)?.build()?)
                    }
                    Kind::Spin => file.spin.as_ref().ok_or_else(missing)?.build()?,
                })
            }
        };
        if let Some(System::Classical { network, .. }) = &system {
            for (p, path) in [(&file.pointer1, "pointer1"), (&file.pointer2, "pointer2")] {
                if let Some(c) = p.as_ref().and_then(|p| p.couplings.as_ref()) {
                    if c.len() != network.dim() {
                        return Err(Error::validation(
                            format!("{path}.couplings"),
                            "length must match the network",
                        ));
                    }
                }
            }
        }
        let (collapse, collapse_scales) = match &file.collapse {
            None => (default_collapse(), DEFAULT_COLLAPSE_SCALES.to_vec()),
            Some(c) => {
                let set = WeightedShiftSet::new(
                    c.weights.iter().map(|w| w.value()).collect(),
                    c.shifts.clone(),
                    c.width,
                )
                .map_err(|e| prefixed("collapse", e))?;
                let scales = c
                    .scales
                    .clone()
                    .unwrap_or_else(|| (0..5).map(|k| c.width * 2f64.powi(k)).collect());
                if scales.is_empty()
                    || scales.windows(2).any(|w| !(w[1] > w[0]))
                    || scales[0] <= 0.0
                {
                    return Err(Error::validation(
                        "collapse.scales",
                        "must be positive and strictly increasing",
                    ));
                }
                (set, scales)
            }
        };
        if let Some(s) = &file.sweep {
            if let Some(b) = s.beta {
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::validation("sweep.beta", "must lie in (0, 1)"));
                }
            }
            if s.points == Some(0) {
                return Err(Error::validation("sweep.points", "must be at least 1"));
            }
            if let Some(ps) = &s.classical_p12 {
                if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::validation(
                        "sweep.classical_p12",
                        "probabilities must lie in [0, 1]",
                    ));
                }
            }
        }
        if let Some(m) = &file.region_map {
            if m.n_phi.is_some_and(|n| n < 2) || m.n_theta.is_some_and(|n| n < 2) {
                return Err(Error::validation(
                    "region_map",
                    "need at least 2 points per axis",
                ));
            }
        }
        Ok(Self {
            file,
            digest,
            system,
            collapse,
            collapse_scales,
        })
    }

    pub fn kind(&self) -> Option<Kind> {
        self.file.kind
    }

    pub fn seed(&self) -> u64 {
        self.file.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn trials(&self) -> u64 {
        self.file.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn grid(&self) -> GridConfig {
        self.file.grid
    }

    /// The quantum scenario of a quantum or spin file.
    pub fn quantum(&self) -> Option<&QuantumScenario> {
        match &self.system {
            Some(System::Quantum(sc)) => Some(sc),
            Some(System::Spin { scenario, .. }) => Some(scenario),
            _ => None,
        }
    }

    pub fn spin(&self) -> Option<&SpinConfiguration> {
        match &self.system {
            Some(System::Spin { config, .. }) => Some(config),
            _ => None,
        }
    }

    pub fn pointer_width(&self, second: bool) -> Option<f64> {
        let p = if second {
            &self.file.pointer2
        } else {
            &self.file.pointer1
        };
        p.as_ref().and_then(|p| p.width)
    }

    fn couplings(&self, second: bool, default: &[f64]) -> Vec<f64> {
        let p = if second {
            &self.file.pointer2
        } else {
            &self.file.pointer1
        };
        p.as_ref()
            .and_then(|p| p.couplings.clone())
            .unwrap_or_else(|| default.to_vec())
    }

    /// First pointer of a quantum or spin scenario (default couplings `B_i`).
    pub fn quantum_pointer1(&self, default_width: f64) -> Result<PointerSpec> {
        let sc = self
            .quantum()
            .ok_or_else(|| Error::validation("kind", "needs a quantum or spin scenario"))?;
        let p = PointerSpec::new(
            self.couplings(false, sc.b_values()),
            self.pointer_width(false).unwrap_or(default_width),
        )?;
        if p.couplings.len() != sc.dim() {
            return Err(Error::validation(
                "pointer1.couplings",
                format!("expected {} values", sc.dim()),
            ));
        }
        Ok(p)
    }

    /// Second pointer (default couplings `F_j`).
    pub fn quantum_pointer2(&self, default_width: f64) -> Result<PointerSpec> {
        let sc = self
            .quantum()
            .ok_or_else(|| Error::validation("kind", "needs a quantum or spin scenario"))?;
        let p = PointerSpec::new(
            self.couplings(true, sc.f_values()),
            self.pointer_width(true).unwrap_or(default_width),
        )?;
        if p.couplings.len() != sc.dim() {
            return Err(Error::validation(
                "pointer2.couplings",
                format!("expected {} values", sc.dim()),
            ));
        }
        Ok(p)
    }

    pub fn classical_pointers(
        &self,
        default_width1: f64,
        default_width2: f64,
    ) -> Result<ClassicalPointerPair> {
        match &self.system {
            Some(System::Classical {
                b_values, f_values, ..
            }) => ClassicalPointerPair::new(
                self.couplings(false, b_values),
                self.couplings(true, f_values),
                self.pointer_width(false).unwrap_or(default_width1),
                self.pointer_width(true).unwrap_or(default_width2),
            ),
            _ => Err(Error::validation("kind", "needs a classical scenario")),
        }
    }

    pub fn classical_network(&self) -> Option<&ClassicalNetwork> {
        match &self.system {
            Some(System::Classical { network, .. }) => Some(network),
            _ => None,
        }
    }

    pub fn region_map_size(&self) -> (usize, usize, bool) {
        let m = self.file.region_map.clone().unwrap_or_default();
        (
            m.n_phi.unwrap_or(DEFAULT_MAP_PHI),
            m.n_theta.unwrap_or(DEFAULT_MAP_THETA),
            m.refine.unwrap_or(false),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPIN: &str = r#"
kind = "spin"
seed = 3

[spin]
angle_unit = "pi"
phi = 1.0
theta = 0.5
phi_final = 0.0
theta_final = 0.95

[pointer1]
width = 100.0
"#;

    #[test]
    fn spin_file() {
        let s = Scenario::from_toml_str(SPIN).unwrap();
        assert_eq!(s.kind(), Some(Kind::Spin));
        assert_eq!(s.seed(), 3);
        assert_eq!(s.trials(), DEFAULT_TRIALS);
        let cfg = s.spin().unwrap();
        assert!((cfg.final_dir.theta - 0.95 * PI).abs() < 1e-15);
        assert!(s.digest.starts_with("sha256:") && s.digest.len() == 7 + 64);
        assert_eq!(s.quantum_pointer1(1.0).unwrap().width, 100.0);
        assert_eq!(s.collapse, default_collapse());
    }

    #[test]
    fn classical_file_paths() {
        let text = r#"
kind = "classical"
[classical]
entry = [0.5, 0.5]
branching = [[0.5, 0.4], [0.5, 0.5]]
b_values = [1.0, -1.0]
f_values = [0.0, 1.0]
"#;
        match Scenario::from_toml_str(text).unwrap_err() {
            Error::Validation { path, message } => {
                assert_eq!(path, "classical.branching[*][1]");
                assert!(message.contains("0.9"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quantum_file_with_generator() {
        let text = r#"
kind = "quantum"
[quantum]
initial = [[1.0, 0.0], [0.0, 0.0]]
basis_b = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
b_values = [1.0, -1.0]
basis_f = [[[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]], [[0.7071067811865476, 0.0], [-0.7071067811865476, 0.0]]]
f_values = [0.0, 1.0]
evolution_1 = { hamiltonian = [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]], time = 0.3 }
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        let sc = s.quantum().unwrap();
        assert!((sc.node_probabilities()[0] - 0.3f64.cos().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_evolution_reports_deviation() {
        let text = r#"
kind = "quantum"
[quantum]
initial = [[1.0, 0.0], [0.0, 0.0]]
basis_b = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
b_values = [1.0, -1.0]
basis_f = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
f_values = [0.0, 1.0]
evolution_2 = [[[1.0, 0.0], [0.1, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
"#;
        match Scenario::from_toml_str(text).unwrap_err() {
            Error::Validation { path, message } => {
                assert_eq!(path, "quantum.evolution_2");
                assert!(message.contains("e-"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Scenario::from_toml_str("kind = "),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str("kind = \"other\""),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str("bogus = 1"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str("kind = \"spin\""),
            Err(Error::Validation { ref path, .. }) if path == "spin"
        ));
        assert!(Scenario::from_toml_str("").is_ok());
    }

    #[test]
    fn collapse_table() {
        let text = r#"
[collapse]
weights = [1.0, [-0.5, 0.2]]
shifts = [0.0, 2.0]
width = 10.0
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        assert!(!s.collapse.is_real());
        assert_eq!(s.collapse_scales, vec![10.0, 20.0, 40.0, 80.0, 160.0]);
    }
}
