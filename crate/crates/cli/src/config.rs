//! Run configuration: one TOML file, validated in full before any computation.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SweepEta,
    SweepEtaPair,
    Vienna,
    Fluctuation,
    VerifyEigen,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SweepEta => "sweep-eta",
            Scenario::SweepEtaPair => "sweep-eta-pair",
            Scenario::Vienna => "vienna",
            Scenario::Fluctuation => "fluctuation",
            Scenario::VerifyEigen => "verify-eigen",
        }
    }

    fn section(self) -> &'static str {
        match self {
            Scenario::SweepEta => "sweep_eta",
            Scenario::SweepEtaPair => "sweep_eta_pair",
            Scenario::Vienna => "vienna",
            Scenario::Fluctuation => "fluctuation",
            Scenario::VerifyEigen => "verify_eigen",
        }
    }
}

pub const DEFAULT_PRECISION: usize = 6;
pub const DEFAULT_N_STARTS: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must agree with the subcommand when given.
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub precision: Option<usize>,
    #[serde(default)]
    pub optimizer: OptimizerOverrides,
    pub sweep_eta: Option<SweepEtaConfig>,
    pub sweep_eta_pair: Option<SweepEtaPairConfig>,
    pub vienna: Option<ViennaConfig>,
    pub fluctuation: Option<FluctuationConfig>,
    pub verify_eigen: Option<VerifyEigenConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOverrides {
    pub n_starts: Option<usize>,
    pub max_iter: Option<usize>,
    pub f_tol: Option<f64>,
    pub x_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEtaConfig {
    pub etas: Vec<f64>,
    #[serde(default)]
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEtaPairConfig {
    pub eta1: Vec<f64>,
    pub eta2: Vec<f64>,
}

/// Every field is optional at parse time so that validation can name all the missing ones.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViennaConfig {
    pub r: Option<f64>,
    pub v: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub n_pairs: Option<f64>,
    /// Seconds.
    pub t_run: Option<f64>,
    /// Seconds.
    pub tau_c: Option<f64>,
    /// Hz.
    pub zeta: Option<f64>,
    /// `[alpha1, alpha2, beta1, beta2]`, degrees.
    pub reference_angles: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationConfig {
    pub etas: Vec<f64>,
    /// Half-widths of the uniform angle errors, degrees.
    pub deltas: Vec<f64>,
    pub quad_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyEigenConfig {
    pub etas: Vec<f64>,
    /// Added to the optimal `r` before checking; nonzero values should fail verification.
    #[serde(default)]
    pub r_offset: f64,
}

/// Fully specified Vienna parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViennaParams {
    pub r: f64,
    pub v: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub n_pairs: f64,
    pub t_run: f64,
    pub tau_c: f64,
    pub zeta: f64,
    pub reference_angles: [f64; 4],
}

impl ViennaConfig {
    pub fn resolve(&self) -> Result<ViennaParams, CliError> {
        let fields = [
            ("r", self.r),
            ("v", self.v),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("n_pairs", self.n_pairs),
            ("t_run", self.t_run),
            ("tau_c", self.tau_c),
            ("zeta", self.zeta),
        ];
        let mut missing: Vec<&str> = fields.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| *k).collect();
        if self.reference_angles.is_none() {
            missing.push("reference_angles");
        }
        if !missing.is_empty() {
            return Err(CliError::Config(format!("[vienna] is missing: {}", missing.join(", "))));
        }
        let get = |v: Option<f64>| v.unwrap_or_default();
        Ok(ViennaParams {
            r: get(self.r),
            v: get(self.v),
            eta1: get(self.eta1),
            eta2: get(self.eta2),
            n_pairs: get(self.n_pairs),
            t_run: get(self.t_run),
            tau_c: get(self.tau_c),
            zeta: get(self.zeta),
            reference_angles: self.reference_angles.unwrap_or_default(),
        })
    }
}

/// Values given on the command line, which take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliOverrides {
    pub output: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quad_order: Option<usize>,
    pub precision: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &CliOverrides) {
        if o.output.is_some() {
            self.output = o.output.clone();
        }
        if o.plot_data.is_some() {
            self.plot_data = o.plot_data.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(p) = o.precision {
            self.precision = Some(p);
        }
        if let (Some(q), Some(f)) = (o.quad_order, self.fluctuation.as_mut()) {
            f.quad_order = Some(q);
        }
    }

    pub fn precision(&self) -> usize {
        self.precision.unwrap_or(DEFAULT_PRECISION)
    }

    pub fn n_starts(&self) -> usize {
        self.optimizer.n_starts.unwrap_or(DEFAULT_N_STARTS)
    }

    /// Checks everything the chosen scenario needs.
    pub fn validate(&self, scenario: Scenario) -> Result<(), CliError> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(CliError::Config(format!(
                    "config is for scenario {} but {} was requested",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        let p = self.precision();
        if !(1..=17).contains(&p) {
            return Err(CliError::Config(format!("precision must be in 1..=17, got {p}")));
        }
        self.validate_optimizer()?;
        let missing = || CliError::Config(format!("missing [{}] section", scenario.section()));
        match scenario {
            Scenario::SweepEta => {
                let c = self.sweep_eta.as_ref().ok_or_else(missing)?;
                check_etas("sweep_eta.etas", &c.etas)?;
                check_nonneg("sweep_eta.zeta", c.zeta)
            }
            Scenario::SweepEtaPair => {
                let c = self.sweep_eta_pair.as_ref().ok_or_else(missing)?;
                check_etas("sweep_eta_pair.eta1", &c.eta1)?;
                check_etas("sweep_eta_pair.eta2", &c.eta2)
            }
            Scenario::Vienna => {
                let p = self.vienna.as_ref().ok_or_else(missing)?.resolve()?;
                check_in("vienna.r", p.r, 0.0, 1.0)?;
                check_in("vienna.v", p.v, 0.0, 1.0)?;
                check_etas("vienna.eta1", &[p.eta1])?;
                check_etas("vienna.eta2", &[p.eta2])?;
                check_nonneg("vienna.n_pairs", p.n_pairs)?;
                check_positive("vienna.t_run", p.t_run)?;
                check_nonneg("vienna.tau_c", p.tau_c)?;
                if p.tau_c >= p.t_run {
                    return Err(CliError::Config("vienna.tau_c must be smaller than vienna.t_run".into()));
                }
                check_nonneg("vienna.zeta", p.zeta)?;
                if p.reference_angles.iter().any(|a| !a.is_finite()) {
                    return Err(CliError::Config("vienna.reference_angles must be finite".into()));
                }
                Ok(())
            }
            Scenario::Fluctuation => {
                let c = self.fluctuation.as_ref().ok_or_else(missing)?;
                check_etas("fluctuation.etas", &c.etas)?;
                if c.deltas.is_empty() {
                    return Err(CliError::Config("fluctuation.deltas must not be empty".into()));
                }
                for &d in &c.deltas {
                    check_nonneg("fluctuation.deltas", d)?;
                }
                match c.quad_order {
                    Some(q) if q < 2 => Err(CliError::Config(format!("fluctuation.quad_order must be >= 2, got {q}"))),
                    _ => Ok(()),
                }
            }
            Scenario::VerifyEigen => {
                let c = self.verify_eigen.as_ref().ok_or_else(missing)?;
                check_etas("verify_eigen.etas", &c.etas)?;
                if !c.r_offset.is_finite() {
                    return Err(CliError::Config("verify_eigen.r_offset must be finite".into()));
                }
                Ok(())
            }
        }
    }

    fn validate_optimizer(&self) -> Result<(), CliError> {
        let o = &self.optimizer;
        if self.n_starts() == 0 {
            return Err(CliError::Config("optimizer.n_starts must be >= 1".into()));
        }
        if o.max_iter == Some(0) {
            return Err(CliError::Config("optimizer.max_iter must be >= 1".into()));
        }
        for (name, v) in [("optimizer.f_tol", o.f_tol), ("optimizer.x_tol", o.x_tol)] {
            if let Some(v) = v {
                check_positive(name, v)?;
            }
        }
        Ok(())
    }
}

fn check_etas(name: &str, etas: &[f64]) -> Result<(), CliError> {
    if etas.is_empty() {
        return Err(CliError::Config(format!("{name} must not be empty")));
    }
    for &e in etas {
        if !(e.is_finite() && e > 0.0 && e <= 1.0) {
            return Err(CliError::Config(format!("{name} values must lie in (0, 1], got {e}")));
        }
    }
    Ok(())
}

fn check_in(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), CliError> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must lie in [{lo}, {hi}], got {v}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite and > 0, got {v}")))
    }
}
