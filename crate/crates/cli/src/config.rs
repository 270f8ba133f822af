//! Experiment configuration: a TOML file with one section per concern.
//! Every section and key is optional except `[mobility] diff_tx`; unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use mobidiff::channel::{derive, stokes_einstein_radius, MobilityMode, PhysicalParams};
use mobidiff::detection::{BitSequence, BitTreatment, MonteCarloConfig};
use mobidiff::particlesim::SimConfig;
use mobidiff::{Derived, Params};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub physical: PhysicalSection,
    pub mobility: MobilitySection,
    pub simulation: SimulationSection,
    pub detector: DetectorSection,
    pub monte_carlo: MonteCarloSection,
    pub cir: CirSection,
    pub received_signal: ReceivedSignalSection,
    pub distance_pdf: DistancePdfSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output: PathBuf::from("output"),
            physical: PhysicalSection::default(),
            mobility: MobilitySection::default(),
            simulation: SimulationSection::default(),
            detector: DetectorSection::default(),
            monte_carlo: MonteCarloSection::default(),
            cir: CirSection::default(),
            received_signal: ReceivedSignalSection::default(),
            distance_pdf: DistancePdfSection::default(),
        }
    }
}

/// Mirrors [`PhysicalParams`] except `radius_tx`, which belongs to the
/// mobility cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalSection {
    pub num_molecules: u64,
    pub diff_a: f64,
    pub diff_rx: f64,
    pub r0: f64,
    pub radius_rx: f64,
    pub k_f: f64,
    pub k_b: f64,
    pub k_d: f64,
    pub num_receptors: u64,
    pub receptor_radius: f64,
    pub bit_interval: f64,
    pub sample_offset: f64,
    pub seq_length: usize,
    pub p1: f64,
    pub k_f_mod_override: Option<f64>,
}

impl Default for PhysicalSection {
    fn default() -> Self {
        let p = PhysicalParams::reference();
        Self {
            num_molecules: p.num_molecules,
            diff_a: p.diff_a,
            diff_rx: p.diff_rx,
            r0: p.r0,
            radius_rx: p.radius_rx,
            k_f: p.k_f,
            k_b: p.k_b,
            k_d: p.k_d,
            num_receptors: p.num_receptors,
            receptor_radius: p.receptor_radius,
            bit_interval: p.bit_interval,
            sample_offset: p.sample_offset,
            seq_length: p.seq_length,
            p1: p.p1,
            k_f_mod_override: p.k_f_mod_override,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySection {
    /// One case per entry; zero means both nodes are fixed.
    pub diff_tx: Vec<f64>,
    /// Transmitter radius for mobile cases. Defaults to the Stokes–Einstein
    /// radius of each `diff_tx`.
    pub radius_tx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub dt: f64,
    pub num_realizations: usize,
    pub substeps: u32,
    pub unbind_offset: Option<f64>,
    pub confinement_radius: Option<f64>,
    pub debug_checks: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            dt: 2e-7,
            num_realizations: 2000,
            substeps: 1,
            unbind_offset: None,
            confinement_radius: None,
            debug_checks: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub thresholds: Vec<u64>,
    /// Run the particle simulator alongside the analytical sweep.
    pub simulate: bool,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { thresholds: (0..=8).collect(), simulate: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BitsMode {
    Enumerated,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub num_trajectories: usize,
    pub sequences_per_trajectory: usize,
    pub bit_treatment: Option<BitsMode>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { num_trajectories: 10_000, sequences_per_trajectory: 16, bit_treatment: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CirSection {
    /// Defaults to `t_end / points`.
    pub t_start: Option<f64>,
    /// Defaults to one bit interval.
    pub t_end: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for CirSection {
    fn default() -> Self {
        Self { t_start: None, t_end: None, points: 300, spacing: Spacing::Linear }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceivedSignalSection {
    /// Bit pattern such as "1011"; defaults to `seq_length` ones.
    pub bits: Option<String>,
    /// Defaults to the frame length.
    pub t_end: Option<f64>,
    /// Grid `t_k = k·t_end/points`, `k = 1..=points`.
    pub points: usize,
}

impl Default for ReceivedSignalSection {
    fn default() -> Self {
        Self { bits: None, t_end: None, points: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistancePdfSection {
    /// Elapsed times; defaults to one bit interval.
    pub times: Vec<f64>,
    pub bins: usize,
    pub num_pairs: usize,
    /// Pair-simulation step; defaults to a per-axis step of a hundredth of
    /// the contact radius.
    pub dt: Option<f64>,
}

impl Default for DistancePdfSection {
    fn default() -> Self {
        Self { times: Vec::new(), bins: 100, num_pairs: 100_000, dt: None }
    }
}

/// One mobility case with its parameters resolved.
#[derive(Debug, Clone)]
pub struct Case {
    pub label: String,
    pub params: Params,
    pub derived: Derived,
}

impl Case {
    pub fn is_fixed(&self) -> bool {
        self.derived.mode == MobilityMode::Fixed
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ExperimentConfig {
    /// Parses TOML text and applies `key.path=value` overrides.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        // Parsing the text itself first keeps line and column in the error.
        toml::from_str::<Self>(text).map_err(|e| invalid(format!("config: {e}")))?;
        let mut table: toml::Table = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| invalid(format!("{} is not UTF-8", path.display())))?;
        Ok((Self::from_toml(text, overrides)?, bytes))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.mobility.diff_tx.is_empty() {
            return Err(invalid("mobility.diff_tx: at least one mobility case is required"));
        }
        if self.detector.thresholds.is_empty() {
            return Err(invalid("detector.thresholds: at least one threshold is required"));
        }
        if self.cir.points < 2 || self.received_signal.points < 1 || self.distance_pdf.bins < 2 {
            return Err(invalid("grids need at least two points (cir, distance_pdf) or one (received_signal)"));
        }
        if self.monte_carlo.num_trajectories == 0 {
            return Err(invalid("monte_carlo.num_trajectories must be >= 1"));
        }
        for &t in &self.distance_pdf.times {
            if !(t.is_finite() && t > 0.0) {
                return Err(invalid(format!("distance_pdf.times: {t} is not a positive time")));
            }
        }
        // Resolving every case runs the library's own parameter checks.
        self.cases()?;
        Ok(())
    }

    pub fn cases(&self) -> Result<Vec<Case>, CliError> {
        self.mobility.diff_tx.iter().map(|&d| self.case(d)).collect()
    }

    fn case(&self, diff_tx: f64) -> Result<Case, CliError> {
        if !(diff_tx.is_finite() && diff_tx >= 0.0) {
            return Err(invalid(format!("mobility.diff_tx: {diff_tx} must be finite and >= 0")));
        }
        let s = &self.physical;
        let fixed = diff_tx == 0.0;
        let radius_tx = match (fixed, self.mobility.radius_tx) {
            (true, r) => r.unwrap_or(0.0),
            (false, Some(r)) => r,
            (false, None) => stokes_einstein_radius(diff_tx),
        };
        let params = PhysicalParams {
            num_molecules: s.num_molecules,
            diff_a: s.diff_a,
            diff_tx,
            diff_rx: s.diff_rx,
            r0: s.r0,
            radius_rx: s.radius_rx,
            radius_tx,
            k_f: s.k_f,
            k_b: s.k_b,
            k_d: s.k_d,
            num_receptors: s.num_receptors,
            receptor_radius: s.receptor_radius,
            bit_interval: s.bit_interval,
            sample_offset: s.sample_offset,
            seq_length: s.seq_length,
            p1: s.p1,
            k_f_mod_override: s.k_f_mod_override,
        };
        let mode = if fixed { MobilityMode::Fixed } else { MobilityMode::Mobile };
        let derived = derive(&params, mode).map_err(|e| invalid(format!("physical parameters: {e}")))?;
        let label = if fixed { "fixed".to_string() } else { format!("diff_tx={diff_tx:e}") };
        Ok(Case { label, params, derived })
    }

    pub fn sim_config(&self, case: &Case, seed: u64) -> SimConfig {
        let s = &self.simulation;
        let mut cfg = SimConfig::new(s.dt, s.num_realizations, seed, case.params.radius_rx);
        if let Some(off) = s.unbind_offset {
            cfg.unbind_offset = off;
        }
        cfg.substeps = s.substeps;
        cfg.confinement_radius = s.confinement_radius;
        cfg.debug_checks = s.debug_checks;
        cfg
    }

    pub fn monte_carlo(&self, seed: u64) -> MonteCarloConfig {
        let mut mc = MonteCarloConfig::new(self.monte_carlo.num_trajectories, seed);
        mc.sequences_per_trajectory = self.monte_carlo.sequences_per_trajectory;
        mc.bit_treatment = self.monte_carlo.bit_treatment.map(|b| match b {
            BitsMode::Enumerated => BitTreatment::Enumerated,
            BitsMode::Sampled => BitTreatment::Sampled,
        });
        mc
    }

    pub fn bit_pattern(&self) -> Result<BitSequence, CliError> {
        let len = self.physical.seq_length;
        match &self.received_signal.bits {
            None => Ok(BitSequence::ones(len)),
            Some(s) => {
                let bits = BitSequence::parse(s).map_err(|e| invalid(format!("received_signal.bits: {e}")))?;
                if bits.len() != len {
                    return Err(invalid(format!(
                        "received_signal.bits has {} bits but physical.seq_length is {len}",
                        bits.len()
                    )));
                }
                Ok(bits)
            }
        }
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item.split_once('=').ok_or_else(|| invalid(format!("--set {item}: expected key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(invalid(format!("--set {item}: empty key")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = keys.split_last().expect("nonempty");
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| invalid(format!("--set {item}: {k} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_reference_values() {
        let cfg = ExperimentConfig::from_toml("[mobility]\ndiff_tx = [0.0]\n", &[]).unwrap();
        assert_eq!(cfg.physical.num_molecules, 5000);
        assert_eq!(cfg.cases().unwrap()[0].label, "fixed");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentConfig::from_toml("[mobility]\ndiff_tx = [0.0]\n[physical]\nnum_molecule = 3\n", &[])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("num_molecule") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn empty_case_list_is_invalid() {
        assert!(matches!(ExperimentConfig::from_toml("[mobility]\ndiff_tx = []\n", &[]), Err(CliError::Validation(_))));
        assert!(ExperimentConfig::from_toml("", &[]).is_err());
    }

    #[test]
    fn overrides_replace_and_create_keys() {
        let cfg = ExperimentConfig::from_toml(
            "[mobility]\ndiff_tx = [0.0]\n",
            &["physical.num_molecules=1000".into(), "mobility.diff_tx=[0.0, 1e-9]".into(), "seed=7".into()],
        )
        .unwrap();
        assert_eq!(cfg.physical.num_molecules, 1000);
        assert_eq!(cfg.seed, 7);
        let labels: Vec<String> = cfg.cases().unwrap().into_iter().map(|c| c.label).collect();
        assert_eq!(labels, ["fixed", "diff_tx=1e-9"]);
    }

    #[test]
    fn invalid_physics_is_a_validation_error() {
        let err = ExperimentConfig::from_toml("[mobility]\ndiff_tx = [0.0]\n[physical]\nr0 = 1e-7\n", &[]).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }
}
