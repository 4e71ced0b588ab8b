//! Statistics of the Eberhard objective when each of the four analyzer angles is
//! independently uniform on `[setting − δ, setting + δ]`.
//!
//! For a fixed state `ψ` the smoothed mean is `J_δ = E_x[⟨B(x)⟩]` and the dispersion is the
//! expected quantum variance `σ²_δ = E_x[⟨B(x)²⟩ − ⟨B(x)⟩²]`; the signal/noise ratio is
//! `K = J_δ / σ_δ` (negative whenever the inequality is violated). Expectations over `x` use
//! a tensor-product Gauss-Legendre rule. Phases stay referenced to the nominal `α₁`, `β₁`.

use rayon::prelude::*;

use crate::eberhard::{
    canonical_coords, closed_form_b, default_simplex, j_per_n, operator_sum_matrix, optimize_j,
    search_bounds, EberhardParams, EfficiencyPair, Settings,
};
use crate::error::{check_range, Result};
use crate::linalg::{quad_form, HermMat4, C64};
use crate::optimizer::{nelder_mead, OptResult, SimplexConfig};
use crate::quadrature::{tensor_nodes4, GaussLegendre};
use crate::summation::neumaier_sum;

pub const DEFAULT_QUAD_ORDER: usize = 8;

/// Dispersions at or below this (rounding level for per-pair objectives) count as zero.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationSpec {
    delta_deg: f64,
    quad_order: usize,
}

impl FluctuationSpec {
    pub fn new(delta_deg: f64, quad_order: usize) -> Result<Self> {
        check_range("delta", delta_deg, delta_deg >= 0.0, "delta >= 0 degrees")?;
        check_range("quad_order", quad_order as f64, quad_order >= 2, "quad_order >= 2")?;
        Ok(FluctuationSpec { delta_deg, quad_order })
    }

    pub fn delta_deg(&self) -> f64 {
        self.delta_deg
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    /// `J/N` at the unperturbed settings.
    pub j_nominal: f64,
    pub j_delta: f64,
    pub sigma_delta: f64,
    /// `J_δ/σ_δ`; `±∞` when `σ_δ = 0`.
    pub k: f64,
    /// `Var_x[⟨B(x)⟩]`, the angle-to-angle spread of the mean that `σ²_δ` leaves out.
    pub between_angle_variance: f64,
}

/// `K = mean / sigma` with a signed infinity for vanishing dispersion.
pub fn snr(mean: f64, sigma: f64) -> f64 {
    if sigma > SIGMA_FLOOR {
        mean / sigma
    } else {
        f64::INFINITY.copysign(mean)
    }
}

/// `B(settings)·ψ` without materializing `B`; uses
/// `B = (η₁η₂/4)(2I − σ₁τ₁ − σ₁τ₂ − σ₂τ₁ + σ₂τ₂) + (η₁(1−η₂)/2)(I+σ₁) + (η₂(1−η₁)/2)(I+τ₁) + 2ζI`.
pub(crate) fn apply_b(
    settings: &Settings,
    alpha_ref: f64,
    beta_ref: f64,
    eff: &EfficiencyPair,
    zeta: f64,
    psi: &[C64; 4],
) -> [C64; 4] {
    let ph = |a: f64, r: f64| C64::from_polar(1.0, 2.0 * (a - r).to_radians());
    let sigma = |p: C64, v: &[C64; 4]| [p * v[1], p.conj() * v[0], p * v[3], p.conj() * v[2]];
    let tau = |p: C64, v: &[C64; 4]| [p * v[2], p * v[3], p.conj() * v[0], p.conj() * v[1]];

    let (ps1, ps2) = (ph(settings.alpha1, alpha_ref), ph(settings.alpha2, alpha_ref));
    let (pt1, pt2) = (ph(settings.beta1, beta_ref), ph(settings.beta2, beta_ref));
    let t1 = tau(pt1, psi);
    let t2 = tau(pt2, psi);
    let t_sum: [C64; 4] = std::array::from_fn(|k| t1[k] + t2[k]);
    let t_diff: [C64; 4] = std::array::from_fn(|k| t2[k] - t1[k]);
    let s1_tsum = sigma(ps1, &t_sum);
    let s2_tdiff = sigma(ps2, &t_diff);
    let s1 = sigma(ps1, psi);

    let (e1, e2) = (eff.eta1(), eff.eta2());
    let both = e1 * e2 / 4.0;
    let a_single = e1 * (1.0 - e2) / 2.0;
    let b_single = e2 * (1.0 - e1) / 2.0;
    let diag = 2.0 * both + a_single + b_single + 2.0 * zeta;
    std::array::from_fn(|k| {
        psi[k] * diag + (s2_tdiff[k] - s1_tsum[k]) * both + s1[k] * a_single + t1[k] * b_single
    })
}

/// `(⟨B⟩, ‖(B − ⟨B⟩)ψ‖²)`; the second entry equals `⟨B²⟩ − ⟨B⟩²` without the cancellation.
fn mean_and_variance(b_psi: &[C64; 4], psi: &[C64; 4]) -> (f64, f64) {
    let mean: f64 = psi.iter().zip(b_psi).map(|(p, v)| (p.conj() * v).re).sum();
    let var = b_psi.iter().zip(psi).map(|(v, p)| (v - p * mean).norm_sqr()).sum();
    (mean, var)
}

/// Quadrature of the smoothed mean and expected quantum variance.
pub fn smoothed_stats(params: &EberhardParams, spec: &FluctuationSpec) -> Result<SnrReport> {
    let rule = GaussLegendre::new(spec.quad_order)?;
    let nodes = tensor_nodes4(&rule, spec.delta_deg);
    let nominal = params.settings();
    let psi = *params.state.vector().amplitudes();

    let per_node: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|node| {
            let s = nominal.perturbed(node.point);
            let b_psi = apply_b(&s, nominal.alpha1, nominal.beta1, &params.eff, params.zeta, &psi);
            let (q, var) = mean_and_variance(&b_psi, &psi);
            (node.weight * q, node.weight * var, node.weight * q * q)
        })
        .collect();

    let j_delta = neumaier_sum(per_node.iter().map(|t| t.0));
    let variance = neumaier_sum(per_node.iter().map(|t| t.1)).max(0.0);
    let mean_sq = neumaier_sum(per_node.iter().map(|t| t.2));
    let sigma_delta = variance.sqrt();
    Ok(SnrReport {
        j_nominal: j_per_n(params)?,
        j_delta,
        sigma_delta,
        k: snr(j_delta, sigma_delta),
        between_angle_variance: (mean_sq - j_delta * j_delta).max(0.0),
    })
}

/// `sin(2δ)/(2δ)`: the uniform average of `e^{2ix}` over `x ∈ [−δ, δ]`.
pub fn damping_factor(delta_deg: f64) -> f64 {
    let x = 2.0 * delta_deg.to_radians();
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Closed-form `E_x[B(x)]`: every `σ` and `τ` in the operator sum is damped by
/// [`damping_factor`]. Exact because each product term involves two distinct angles.
pub fn analytic_mean_b(params: &EberhardParams, delta_deg: f64) -> Result<HermMat4> {
    check_range("delta", delta_deg, delta_deg >= 0.0, "delta >= 0 degrees")?;
    let s = params.settings();
    let m = operator_sum_matrix(&s, s.alpha1, s.beta1, &params.eff, params.zeta, damping_factor(delta_deg));
    HermMat4::new(m)
}

/// Smoothed mean via [`analytic_mean_b`].
pub fn analytic_j_delta(params: &EberhardParams, delta_deg: f64) -> Result<f64> {
    quad_form(&analytic_mean_b(params, delta_deg)?, &params.state.vector())
}

/// Search parameters shared by the optimizing entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub simplex: SimplexConfig,
    pub n_starts: usize,
    pub seed: u64,
    /// Simplex steps for the local refinement that starts from the `J`-optimum.
    pub refine_step: Vec<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            simplex: default_simplex(),
            n_starts: 16,
            seed: 0,
            refine_step: vec![0.01, 0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrOptimum {
    pub params: EberhardParams,
    pub report: SnrReport,
    pub result: OptResult,
}

fn refine<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &EberhardParams,
    search: &SearchConfig,
) -> Result<(EberhardParams, OptResult)> {
    let mut cfg = search.simplex.clone();
    cfg.initial_step = search.refine_step.clone();
    let mut res = nelder_mead(&f, &start.coords(), &cfg, &search_bounds())?;
    let x = canonical_coords([res.x[0], res.x[1], res.x[2]]);
    res.x = x.to_vec();
    res.f = f(&res.x);
    let params = EberhardParams::new(x[0], x[1], x[2], start.eff, start.zeta)?;
    Ok((params, res))
}

fn params_at(x: &[f64], eff: EfficiencyPair, zeta: f64) -> Option<EberhardParams> {
    EberhardParams::new(x[0], x[1], x[2], eff, zeta).ok()
}

/// Minimizes `K` over `(r, ω, θ)`, refining from the multi-start `J/N` optimum.
/// With `δ = 0` the dispersion vanishes at every optimum, so `J/N` itself is minimized.
pub fn optimize_snr(eff: EfficiencyPair, spec: &FluctuationSpec, search: &SearchConfig) -> Result<SnrOptimum> {
    let (j_opt, j_res) = optimize_j(eff, 0.0, search.n_starts, search.seed, &search.simplex)?;
    if spec.delta_deg == 0.0 {
        let report = smoothed_stats(&j_opt, spec)?;
        return Ok(SnrOptimum { params: j_opt, report, result: j_res });
    }
    let spec = *spec;
    let k_of = move |x: &[f64]| -> f64 {
        params_at(x, eff, 0.0)
            .and_then(|p| smoothed_stats(&p, &spec).ok())
            .map(|r| r.k)
            .unwrap_or(f64::INFINITY)
    };
    let (params, result) = refine(k_of, &j_opt, search)?;
    let report = smoothed_stats(&params, &spec)?;
    Ok(SnrOptimum { params, report, result })
}

/// Minimizes the smoothed mean `J_δ` over `(r, ω, θ)`, refining from the `J/N` optimum.
pub fn optimize_smoothed_mean(
    eff: EfficiencyPair,
    spec: &FluctuationSpec,
    search: &SearchConfig,
) -> Result<SnrOptimum> {
    let (j_opt, _) = optimize_j(eff, 0.0, search.n_starts, search.seed, &search.simplex)?;
    let delta = spec.delta_deg;
    let mean_of = move |x: &[f64]| -> f64 {
        params_at(x, eff, 0.0)
            .and_then(|p| analytic_j_delta(&p, delta).ok())
            .unwrap_or(f64::INFINITY)
    };
    let (params, result) = refine(mean_of, &j_opt, search)?;
    let report = smoothed_stats(&params, spec)?;
    Ok(SnrOptimum { params, report, result })
}

/// Closed-form `B` at the nominal settings; the `δ → 0` limit of [`analytic_mean_b`].
pub fn nominal_b(params: &EberhardParams) -> HermMat4 {
    closed_form_b(&params.eff, params.zeta, params.theta_deg, params.theta_deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eberhard::operator_sum_b_with_refs;
    use crate::linalg::herm_eig4;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(r: f64, w: f64, t: f64, eta: f64) -> EberhardParams {
        EberhardParams::new(r, w, t, EfficiencyPair::equal(eta).unwrap(), 0.0).unwrap()
    }

    proptest! {
        #[test]
        fn fast_application_matches_matrix(
            e1 in 0.05..=1.0f64, e2 in 0.05..=1.0f64, zeta in 0.0..0.1f64,
            a in prop::array::uniform4(-180.0..180.0f64), ar in -90.0..90.0f64, br in -90.0..90.0f64,
            r in 0.0..=1.0f64, w in -180.0..180.0f64,
        ) {
            let eff = EfficiencyPair::new(e1, e2).unwrap();
            let s = Settings::new(a[0], a[1], a[2], a[3]).unwrap();
            let psi = crate::eberhard::eberhard_state(r, w).unwrap();
            let fast = apply_b(&s, ar, br, &eff, zeta, psi.amplitudes());
            let slow = operator_sum_b_with_refs(&s, ar, br, &eff, zeta).as_mat().mul_vec(psi.amplitudes());
            for k in 0..4 {
                prop_assert!((fast[k] - slow[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn damping_of_single_phase() {
        // 1-D oracle: average of e^{2i(φ+x)} by midpoint rule on a fine grid
        let (phi, delta) = (0.4f64, 3.0f64);
        let n = 200_000;
        let h = 2.0 * delta / n as f64;
        let avg: C64 = (0..n)
            .map(|i| {
                let x = -delta + (i as f64 + 0.5) * h;
                C64::from_polar(1.0, 2.0 * (phi + x).to_radians())
            })
            .sum::<C64>()
            / n as f64;
        let expected = C64::from_polar(damping_factor(delta), 2.0 * phi.to_radians());
        assert!((avg - expected).norm() < 1e-10);
        assert_eq!(damping_factor(0.0), 1.0);
    }

    #[test]
    fn analytic_mean_at_zero_width_is_nominal() {
        let p = params(0.465228, 14.8979, 37.9215, 0.8);
        let m = analytic_mean_b(&p, 0.0).unwrap();
        assert!(m.as_mat().max_abs_diff(nominal_b(&p).as_mat()) < 1e-15);
    }

    #[test]
    fn quadrature_matches_analytic_mean() {
        for (r, w, t, eta, d) in [(0.741202, 20.9153, 43.6381, 0.9, 0.25), (0.3, 5.0, 30.0, 0.75, 1.0), (0.9, 40.0, 60.0, 1.0, 0.6)] {
            let p = params(r, w, t, eta);
            let spec = FluctuationSpec::new(d, 8).unwrap();
            let q = smoothed_stats(&p, &spec).unwrap();
            assert_abs_diff_eq!(q.j_delta, analytic_j_delta(&p, d).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn quadrature_is_order_stable() {
        let p = params(0.607424, 18.5808, 41.5341, 0.85);
        for d in [0.1, 0.25, 1.0] {
            let lo = smoothed_stats(&p, &FluctuationSpec::new(d, 8).unwrap()).unwrap();
            let hi = smoothed_stats(&p, &FluctuationSpec::new(d, 16).unwrap()).unwrap();
            assert!((lo.j_delta - hi.j_delta).abs() <= 1e-9);
            assert!((lo.sigma_delta - hi.sigma_delta).abs() <= 1e-9);
        }
    }

    #[test]
    fn zero_width_reduces_to_nominal() {
        let p = params(0.310518, 9.73143, 31.9603, 0.75);
        let r = smoothed_stats(&p, &FluctuationSpec::new(0.0, 8).unwrap()).unwrap();
        assert_abs_diff_eq!(r.j_delta, r.j_nominal, epsilon = 1e-15);
        assert_eq!(r.between_angle_variance, 0.0);
    }

    #[test]
    fn mean_error_is_second_order_in_width() {
        let p = params(0.465228, 14.8979, 37.9215, 0.8);
        let gap = |d: f64| {
            let r = smoothed_stats(&p, &FluctuationSpec::new(d, 8).unwrap()).unwrap();
            (r.j_delta - r.j_nominal).abs()
        };
        let ratio = gap(0.2) / gap(0.1);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn eigenvector_has_zero_dispersion_without_noise() {
        // the unconstrained minimizer is an eigenvector of the nominal B; build a state
        // from the eigensolver and evaluate through the fast path
        let p = params(0.999997, 22.5, 45.0, 1.0);
        let b = nominal_b(&p);
        let v = *herm_eig4(&b).unwrap().min_vector();
        let s = p.settings();
        let b_psi = apply_b(&s, s.alpha1, s.beta1, &p.eff, 0.0, v.amplitudes());
        let (_, var) = mean_and_variance(&b_psi, v.amplitudes());
        assert!(var.sqrt() <= 1e-10);
        // and the ψ(r, ω) family reaches it at r = 1
        let exact = params(1.0, 22.5, 45.0, 1.0);
        let r = smoothed_stats(&exact, &FluctuationSpec::new(0.0, 8).unwrap()).unwrap();
        assert!(r.sigma_delta <= 1e-10);
        assert_eq!(r.k, f64::NEG_INFINITY);
    }

    #[test]
    fn snr_sentinels() {
        assert_eq!(snr(-1.0, 0.0), f64::NEG_INFINITY);
        assert_eq!(snr(1.0, 0.0), f64::INFINITY);
        assert_eq!(snr(-1.0, 0.5), -2.0);
    }

    #[test]
    fn variance_matches_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let p = params(0.741202, 20.9153, 43.6381, 0.9);
        let delta = 0.25;
        let quad = smoothed_stats(&p, &FluctuationSpec::new(delta, 8).unwrap()).unwrap();
        let s = p.settings();
        let psi = *p.state.vector().amplitudes();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-delta..=delta));
            let b_psi = apply_b(&s.perturbed(x), s.alpha1, s.beta1, &p.eff, 0.0, &psi);
            let (_, var) = mean_and_variance(&b_psi, &psi);
            sum += var;
            sum_sq += var * var;
        }
        let mean = sum / n as f64;
        let std_err = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        let q = quad.sigma_delta * quad.sigma_delta;
        assert!((q - mean).abs() <= 3.0 * std_err, "quad {q} mc {mean} se {std_err}");
    }

    #[test]
    fn reduction_is_thread_count_independent() {
        let p = params(0.607424, 18.5808, 41.5341, 0.85);
        let spec = FluctuationSpec::new(0.25, 8).unwrap();
        let many = smoothed_stats(&p, &spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| smoothed_stats(&p, &spec).unwrap());
        assert_eq!(many, one);
    }

    #[test]
    fn spec_validation() {
        assert!(FluctuationSpec::new(-0.1, 8).is_err());
        assert!(FluctuationSpec::new(0.1, 1).is_err());
        assert!(analytic_mean_b(&params(0.5, 1.0, 2.0, 0.9), -1.0).is_err());
    }

    #[test]
    fn fluctuation_reference_values_at_eta_09() {
        let p = params(0.741202, 20.9153, 43.6381, 0.9);
        let r = smoothed_stats(&p, &FluctuationSpec::new(0.25, 8).unwrap()).unwrap();
        assert!((r.j_delta / -0.0898932 - 1.0).abs() < 5e-4);
        assert!((r.sigma_delta / 0.00296469 - 1.0).abs() < 5e-4);
        assert!((r.k / -30.3213 - 1.0).abs() < 5e-4);
    }
}
