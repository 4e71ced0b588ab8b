//! Count model of the 2013 Vienna Eberhard test: a mixed two-photon state, singles with
//! a constant false-click rate, and accidental coincidences inside a time window.
//!
//! Here the linear-polarization basis is used with the first tensor factor belonging to
//! photon A. Counts are absolute (per run of `N` emitted pairs over `T` seconds).

use crate::eberhard::{EfficiencyPair, Settings};
use crate::error::{check_range, Result};
use crate::linalg::{tensor2x2, HermMat4, Mat2, Mat4, C64};
use crate::optimizer::{nelder_mead, Bounds, OptResult, SimplexConfig};

/// `ρ ∝ |HV⟩⟨HV| + r²|VH⟩⟨VH| + V r (|HV⟩⟨VH| + |VH⟩⟨HV|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViennaState {
    r: f64,
    v: f64,
}

impl ViennaState {
    pub fn new(r: f64, v: f64) -> Result<Self> {
        check_range("r", r, (0.0..=1.0).contains(&r), "0 <= r <= 1")?;
        check_range("V", v, (0.0..=1.0).contains(&v), "0 <= V <= 1")?;
        Ok(ViennaState { r, v })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn visibility(&self) -> f64 {
        self.v
    }

    /// Unit-trace density matrix (prefactor `1/(1+r²)`).
    pub fn density(&self) -> HermMat4 {
        let (r, v) = (self.r, self.v);
        let norm = 1.0 / (1.0 + r * r);
        let mut m = Mat4::zero();
        m[(1, 1)] = C64::new(norm, 0.0);
        m[(1, 2)] = C64::new(v * r * norm, 0.0);
        m[(2, 1)] = C64::new(v * r * norm, 0.0);
        m[(2, 2)] = C64::new(r * r * norm, 0.0);
        HermMat4::new(m).expect("real symmetric")
    }
}

/// Projector onto the ordinary beam of a prism at angle `γ` (degrees).
pub fn projection(gamma_deg: f64) -> Mat2 {
    let (s, c) = gamma_deg.to_radians().sin_cos();
    Mat2::from_real([[c * c, c * s], [c * s, s * s]])
}

/// Detection parameters shared by every count, independent of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub eff: EfficiencyPair,
    /// Emitted pairs per run.
    pub n_pairs: f64,
    /// Run duration, seconds.
    pub t_run: f64,
    /// Coincidence window, seconds.
    pub tau_c: f64,
    /// False-click rate, Hz.
    pub zeta: f64,
}

impl Detection {
    pub fn new(eff: EfficiencyPair, n_pairs: f64, t_run: f64, tau_c: f64, zeta: f64) -> Result<Self> {
        check_range("n_pairs", n_pairs, n_pairs >= 0.0, "N >= 0")?;
        check_range("t_run", t_run, t_run > 0.0, "T > 0 seconds")?;
        check_range("tau_c", tau_c, (0.0..t_run).contains(&tau_c), "0 <= tau_c < T")?;
        check_range("zeta", zeta, zeta >= 0.0, "zeta >= 0 Hz")?;
        Ok(Detection { eff, n_pairs, t_run, tau_c, zeta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViennaExperiment {
    pub state: ViennaState,
    pub detection: Detection,
    pub angles: Settings,
}

impl ViennaExperiment {
    pub fn model(&self) -> CountModel {
        CountModel { rho: self.state.density(), detection: self.detection }
    }

    pub fn with_angles(&self, angles: Settings) -> Self {
        ViennaExperiment { angles, ..*self }
    }

    /// Same experiment with the two detectors exchanged.
    pub fn with_swapped_detectors(&self) -> Self {
        let mut out = *self;
        out.detection.eff = self.detection.eff.swapped();
        out
    }
}

/// Count formulas for an arbitrary two-photon density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountModel {
    pub rho: HermMat4,
    pub detection: Detection,
}

fn trace_with(rho: &HermMat4, op: &Mat4) -> f64 {
    (*rho.as_mat() * *op).trace().re
}

impl CountModel {
    /// Ordinary-beam clicks of detector A, background included.
    pub fn singles_a(&self, alpha_deg: f64) -> f64 {
        let d = &self.detection;
        let op = tensor2x2(&projection(alpha_deg), &Mat2::identity());
        d.eff.eta1() * d.n_pairs * trace_with(&self.rho, &op) + d.zeta * d.t_run
    }

    /// Ordinary-beam clicks of detector B, background included.
    pub fn singles_b(&self, beta_deg: f64) -> f64 {
        let d = &self.detection;
        let op = tensor2x2(&Mat2::identity(), &projection(beta_deg));
        d.eff.eta2() * d.n_pairs * trace_with(&self.rho, &op) + d.zeta * d.t_run
    }

    /// Genuine `(o, o)` coincidences, without accidentals.
    pub fn true_coincidences(&self, alpha_deg: f64, beta_deg: f64) -> f64 {
        let d = &self.detection;
        let op = tensor2x2(&projection(alpha_deg), &projection(beta_deg));
        d.eff.eta1() * d.eff.eta2() * d.n_pairs * trace_with(&self.rho, &op)
    }

    /// Genuine plus accidental `(o, o)` coincidences.
    pub fn coincidences(&self, alpha_deg: f64, beta_deg: f64) -> f64 {
        let n_true = self.true_coincidences(alpha_deg, beta_deg);
        let d = &self.detection;
        n_true + accidentals(self.singles_a(alpha_deg), self.singles_b(beta_deg), n_true, d.tau_c, d.t_run)
    }

    /// `J = −n(α₁,β₁) + S_A(α₁) − n(α₁,β₂) + S_B(β₁) − n(α₂,β₁) + n(α₂,β₂)`.
    pub fn j(&self, a: &Settings) -> f64 {
        -self.coincidences(a.alpha1, a.beta1) + self.singles_a(a.alpha1) - self.coincidences(a.alpha1, a.beta2)
            + self.singles_b(a.beta1)
            - self.coincidences(a.alpha2, a.beta1)
            + self.coincidences(a.alpha2, a.beta2)
    }
}

/// Accidental coincidences `S_A S_B (τ_c/T)(1 − ñ/S_A)(1 − ñ/S_B)`; zero if either
/// singles rate vanishes.
pub fn accidentals(s_a: f64, s_b: f64, n_true: f64, tau_c: f64, t_run: f64) -> f64 {
    if s_a == 0.0 || s_b == 0.0 {
        return 0.0;
    }
    s_a * s_b * (tau_c / t_run) * (1.0 - n_true / s_a) * (1.0 - n_true / s_b)
}

pub fn singles_a(exp: &ViennaExperiment, alpha_deg: f64) -> f64 {
    exp.model().singles_a(alpha_deg)
}

pub fn singles_b(exp: &ViennaExperiment, beta_deg: f64) -> f64 {
    exp.model().singles_b(beta_deg)
}

pub fn true_coincidences(exp: &ViennaExperiment, alpha_deg: f64, beta_deg: f64) -> f64 {
    exp.model().true_coincidences(alpha_deg, beta_deg)
}

pub fn vienna_j(exp: &ViennaExperiment) -> f64 {
    exp.model().j(&exp.angles)
}

/// Default simplex for the four analyzer angles (1° steps, a scale-relative spread test).
pub fn default_simplex() -> SimplexConfig {
    SimplexConfig::with_steps(vec![1.0; 4])
}

/// Minimizes `J` over the four angles with the state and detection held fixed, starting
/// from `exp.angles`.
pub fn optimize_angles(exp: &ViennaExperiment, config: &SimplexConfig) -> Result<(Settings, OptResult)> {
    let model = exp.model();
    let f = |x: &[f64]| {
        let s = Settings { alpha1: x[0], alpha2: x[1], beta1: x[2], beta2: x[3] };
        model.j(&s)
    };
    let res = nelder_mead(f, &exp.angles.as_array(), config, &Bounds::unbounded(4))?;
    let angles = Settings::new(res.x[0], res.x[1], res.x[2], res.x[3])?;
    Ok((angles, res))
}
