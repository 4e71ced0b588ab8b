//! The Eberhard objective `J/N` as a Hermitian quadratic form `ψ†Bψ`.
//!
//! Operators are written in the helicity basis. `σ(α)` acts on the second tensor
//! factor and `τ(β)` on the first, with phases measured from the reference settings
//! `α₁ = ω/2 − 90°` and `β₁ = ω/2` fixed by the prepared state. All counts are per
//! emitted pair, so `N` never appears.

use crate::error::{check_range, Result};
use crate::linalg::{herm_eig4, quad_form, HermMat4, Mat4, StateVec4, C64};
use crate::optimizer::{multi_start, Bounds, OptResult, SimplexConfig};

/// Two-photon state `ψ(r, ω)`; `r` interpolates between a product-like state (`0`) and
/// maximal entanglement (`1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EberhardState {
    r: f64,
    omega_deg: f64,
}

impl EberhardState {
    pub fn new(r: f64, omega_deg: f64) -> Result<Self> {
        check_range("r", r, (0.0..=1.0).contains(&r), "0 <= r <= 1")?;
        check_range("omega", omega_deg, true, "finite degrees")?;
        Ok(EberhardState { r, omega_deg })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn omega_deg(&self) -> f64 {
        self.omega_deg
    }

    /// Reference setting of the first analyzer, `ω/2 − 90°`.
    pub fn alpha1(&self) -> f64 {
        self.omega_deg / 2.0 - 90.0
    }

    /// Reference setting of the second analyzer, `ω/2`.
    pub fn beta1(&self) -> f64 {
        self.omega_deg / 2.0
    }

    pub fn vector(&self) -> StateVec4 {
        eberhard_state(self.r, self.omega_deg).expect("validated at construction")
    }
}

/// `(1/(2√(1+r²))) · ((1+r)e^{−iω}, −(1−r), −(1−r), (1+r)e^{iω})`.
pub fn eberhard_state(r: f64, omega_deg: f64) -> Result<StateVec4> {
    check_range("r", r, (0.0..=1.0).contains(&r), "0 <= r <= 1")?;
    let w = omega_deg.to_radians();
    let scale = 1.0 / (2.0 * (1.0 + r * r).sqrt());
    let big = (1.0 + r) * scale;
    let small = -(1.0 - r) * scale;
    StateVec4::normalized([
        C64::from_polar(big, -w),
        C64::new(small, 0.0),
        C64::new(small, 0.0),
        C64::from_polar(big, w),
    ])
}

/// Analyzer angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Settings {
    pub fn new(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Result<Self> {
        for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2), ("beta1", beta1), ("beta2", beta2)] {
            check_range(name, v, true, "finite degrees")?;
        }
        Ok(Settings { alpha1, alpha2, beta1, beta2 })
    }

    /// The family `α₁ − α₂ = β₁ − β₂ = θ` anchored at the state's reference settings.
    pub fn from_state(state: &EberhardState, theta_deg: f64) -> Self {
        let alpha1 = state.alpha1();
        let beta1 = state.beta1();
        Settings {
            alpha1,
            alpha2: alpha1 - theta_deg,
            beta1,
            beta2: beta1 - theta_deg,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
    }

    /// Each angle shifted by the matching entry of `offsets` (`α₁, α₂, β₁, β₂` order).
    pub fn perturbed(&self, offsets: [f64; 4]) -> Self {
        Settings {
            alpha1: self.alpha1 + offsets[0],
            alpha2: self.alpha2 + offsets[1],
            beta1: self.beta1 + offsets[2],
            beta2: self.beta2 + offsets[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyPair {
    eta1: f64,
    eta2: f64,
}

impl EfficiencyPair {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        check_range("eta1", eta1, eta1 > 0.0 && eta1 <= 1.0, "0 < eta <= 1")?;
        check_range("eta2", eta2, eta2 > 0.0 && eta2 <= 1.0, "0 < eta <= 1")?;
        Ok(EfficiencyPair { eta1, eta2 })
    }

    pub fn equal(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn swapped(&self) -> Self {
        EfficiencyPair { eta1: self.eta2, eta2: self.eta1 }
    }
}

/// One evaluation point of the Eberhard objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EberhardParams {
    pub state: EberhardState,
    /// Common setting difference `α₁ − α₂ = β₁ − β₂`, degrees.
    pub theta_deg: f64,
    pub eff: EfficiencyPair,
    /// Background clicks per emitted pair.
    pub zeta: f64,
}

impl EberhardParams {
    pub fn new(r: f64, omega_deg: f64, theta_deg: f64, eff: EfficiencyPair, zeta: f64) -> Result<Self> {
        check_range("theta", theta_deg, true, "finite degrees")?;
        check_range("zeta", zeta, zeta >= 0.0, "zeta >= 0")?;
        Ok(EberhardParams {
            state: EberhardState::new(r, omega_deg)?,
            theta_deg,
            eff,
            zeta,
        })
    }

    pub fn settings(&self) -> Settings {
        Settings::from_state(&self.state, self.theta_deg)
    }

    /// `(r, ω, θ)`, the coordinates searched by the optimizer.
    pub fn coords(&self) -> [f64; 3] {
        [self.state.r(), self.state.omega_deg(), self.theta_deg]
    }
}

fn phase(angle_deg: f64, ref_deg: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * (angle_deg - ref_deg).to_radians())
}

/// `σ(α)`: unit-modulus phase `e^{2i(α−α_ref)}` at (1,2) and (3,4), conjugates mirrored.
pub fn sigma_op(alpha_deg: f64, alpha_ref_deg: f64) -> HermMat4 {
    let p = phase(alpha_deg, alpha_ref_deg);
    let mut m = Mat4::zero();
    m[(0, 1)] = p;
    m[(1, 0)] = p.conj();
    m[(2, 3)] = p;
    m[(3, 2)] = p.conj();
    HermMat4::new(m).expect("phase pattern is Hermitian")
}

/// `τ(β)`: unit-modulus phase `e^{2i(β−β_ref)}` at (1,3) and (2,4), conjugates mirrored.
pub fn tau_op(beta_deg: f64, beta_ref_deg: f64) -> HermMat4 {
    let p = phase(beta_deg, beta_ref_deg);
    let mut m = Mat4::zero();
    m[(0, 2)] = p;
    m[(1, 3)] = p;
    m[(2, 0)] = p.conj();
    m[(3, 1)] = p.conj();
    HermMat4::new(m).expect("phase pattern is Hermitian")
}

/// Closed-form objective matrix for analyzer differences `Δα = α₁ − α₂`, `Δβ = β₁ − β₂`,
/// per emitted pair.
pub fn closed_form_b(eff: &EfficiencyPair, zeta: f64, d_alpha_deg: f64, d_beta_deg: f64) -> HermMat4 {
    let (e1, e2) = (eff.eta1, eff.eta2);
    let a = (C64::from_polar(1.0, 2.0 * d_alpha_deg.to_radians()) - 1.0) * (e1 / 2.0);
    let b = (C64::from_polar(1.0, 2.0 * d_beta_deg.to_radians()) - 1.0) * e2;
    let diag = C64::new(e1 + e2 - e1 * e2 + 4.0 * zeta, 0.0);
    let s1 = C64::new(e1 * (1.0 - e2), 0.0);
    let s2 = C64::new(e2 * (1.0 - e1), 0.0);
    let both = e1 * e2;

    let m = Mat4([
        [diag, s1, s2, a.conj() * b.conj() - both],
        [s1, diag, a * b.conj() - both, s2],
        [s2, a.conj() * b - both, diag, s1],
        [a * b - both, s2, s1, diag],
    ]);
    HermMat4::new(m.scale(0.5)).expect("closed-form B is Hermitian")
}

/// Objective matrix assembled from the six count operators, with `σ`/`τ` phases measured
/// from `alpha_ref`/`beta_ref`.
pub fn operator_sum_b_with_refs(
    settings: &Settings,
    alpha_ref_deg: f64,
    beta_ref_deg: f64,
    eff: &EfficiencyPair,
    zeta: f64,
) -> HermMat4 {
    let m = operator_sum_matrix(settings, alpha_ref_deg, beta_ref_deg, eff, zeta, 1.0);
    HermMat4::new(m).expect("operator sum of Hermitian commuting factors is Hermitian")
}

/// [`operator_sum_b_with_refs`] referenced to the settings' own `α₁`, `β₁`.
pub fn operator_sum_b(settings: &Settings, eff: &EfficiencyPair, zeta: f64) -> HermMat4 {
    operator_sum_b_with_refs(settings, settings.alpha1, settings.beta1, eff, zeta)
}

/// Shared assembly; `damping` multiplies every `σ` and `τ` (1 for the plain operator sum).
pub(crate) fn operator_sum_matrix(
    settings: &Settings,
    alpha_ref_deg: f64,
    beta_ref_deg: f64,
    eff: &EfficiencyPair,
    zeta: f64,
    damping: f64,
) -> Mat4 {
    let id = Mat4::identity();
    let s1: Mat4 = Mat4::from(sigma_op(settings.alpha1, alpha_ref_deg)).scale(damping);
    let s2: Mat4 = Mat4::from(sigma_op(settings.alpha2, alpha_ref_deg)).scale(damping);
    let t1: Mat4 = Mat4::from(tau_op(settings.beta1, beta_ref_deg)).scale(damping);
    let t2: Mat4 = Mat4::from(tau_op(settings.beta2, beta_ref_deg)).scale(damping);
    let (e1, e2) = (eff.eta1, eff.eta2);

    // n_oe(α₁,β₂) + n_eo(α₂,β₁) + n_oo(α₂,β₂) − n_oo(α₁,β₁)
    let coincidences = (id + s1) * (id - t2) + (id - s2) * (id + t1) + (id + s2) * (id + t2)
        - (id + s1) * (id + t1);
    // n_ou(α₁,β₂) + n_uo(α₂,β₁)
    let singles = (id + s1).scale(e1 * (1.0 - e2) / 2.0) + (id + t1).scale(e2 * (1.0 - e1) / 2.0);

    coincidences.scale(e1 * e2 / 4.0) + singles + id.scale(2.0 * zeta)
}

/// `J/N = ψ(r,ω)† B ψ(r,ω)` with the closed-form `B`.
pub fn j_per_n(params: &EberhardParams) -> Result<f64> {
    let b = closed_form_b(&params.eff, params.zeta, params.theta_deg, params.theta_deg);
    quad_form(&b, &params.state.vector())
}

/// Largest background compatible with a violation at the zero-background optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaMax {
    pub value: f64,
    pub violation: bool,
}

/// Optimized `J/N` values above `-VIOLATION_TOL` are treated as round-off, not violation.
pub const VIOLATION_TOL: f64 = 1e-8;

pub fn is_violation(j0_per_n: f64) -> bool {
    j0_per_n < -VIOLATION_TOL
}

pub fn zeta_max(j0_per_n: f64) -> ZetaMax {
    if j0_per_n < 0.0 {
        ZetaMax { value: -j0_per_n / 2.0, violation: true }
    } else {
        ZetaMax { value: 0.0, violation: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourantFischerReport {
    pub lambda_min: f64,
    /// `ψ†Bψ − λ_min`; zero exactly when ψ is a minimal eigenvector.
    pub rayleigh_gap: f64,
    /// `⟨B²⟩ − ⟨B⟩²`.
    pub quantum_variance: f64,
}

pub fn courant_fischer_check(b: &HermMat4, psi: &StateVec4) -> Result<CourantFischerReport> {
    let eig = herm_eig4(b)?;
    let mean = quad_form(b, psi)?;
    let second = quad_form(&b.square(), psi)?;
    Ok(CourantFischerReport {
        lambda_min: eig.min_value(),
        rayleigh_gap: mean - eig.min_value(),
        quantum_variance: second - mean * mean,
    })
}

/// Maps `(r, ω, θ)` to its canonical representative: `ω ∈ (−180°, 180°]`, `θ ∈ [0°, 90°]`.
///
/// `J` is invariant under `ω → ω + 360°`, `θ → θ + 180°` and `(ω, θ) → (−ω, −θ)`.
pub fn canonical_coords(x: [f64; 3]) -> [f64; 3] {
    let mut omega = wrap_half_open(x[1], 360.0);
    let mut theta = wrap_half_open(x[2], 180.0);
    if theta < 0.0 {
        theta = -theta;
        omega = wrap_half_open(-omega, 360.0);
    }
    [x[0], omega, theta]
}

/// Wraps into `(−period/2, period/2]`.
fn wrap_half_open(v: f64, period: f64) -> f64 {
    let half = period / 2.0;
    let w = v - period * ((v + half) / period).floor();
    if w <= -half {
        w + period
    } else if w > half {
        w - period
    } else {
        w
    }
}

/// Clamping box for `(r, ω, θ)`: only `r` is bounded.
pub fn search_bounds() -> Bounds {
    Bounds::new(vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY], vec![1.0, f64::INFINITY, f64::INFINITY])
        .expect("static bounds")
}

/// Region from which multi-start draws `(r, ω, θ)` starting points.
pub fn start_region() -> Bounds {
    Bounds::new(vec![0.0, 0.0, 0.0], vec![1.0, 45.0, 90.0]).expect("static bounds")
}

/// Default simplex steps: 0.1 in `r`, 5° in each angle.
pub fn default_simplex() -> SimplexConfig {
    SimplexConfig::with_steps(vec![0.1, 5.0, 5.0])
}

/// `J/N` as a function of `(r, ω, θ)`; invalid points evaluate to `+∞`.
pub fn objective(eff: EfficiencyPair, zeta: f64) -> impl Fn(&[f64]) -> f64 + Sync + Send + Copy {
    move |x: &[f64]| {
        EberhardParams::new(x[0], x[1], x[2], eff, zeta)
            .and_then(|p| j_per_n(&p))
            .unwrap_or(f64::INFINITY)
    }
}

/// Multi-start minimization of `J/N` over `(r, ω, θ)`; the returned `x` is canonical.
pub fn optimize_j(
    eff: EfficiencyPair,
    zeta: f64,
    n_starts: usize,
    seed: u64,
    config: &SimplexConfig,
) -> Result<(EberhardParams, OptResult)> {
    let f = objective(eff, zeta);
    let mut res = multi_start(f, &search_bounds(), &start_region(), n_starts, seed, config)?;
    let x = canonical_coords([res.x[0], res.x[1], res.x[2]]);
    res.x = x.to_vec();
    res.f = f(&res.x);
    let params = EberhardParams::new(x[0], x[1], x[2], eff, zeta)?;
    Ok((params, res))
}
