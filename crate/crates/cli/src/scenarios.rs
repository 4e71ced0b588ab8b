//! One function per scenario. Grid cells run in parallel; rows are written in grid order.

use rayon::prelude::*;

use eberhard_core::eberhard::{
    self, closed_form_b, courant_fischer_check, is_violation, optimize_j, zeta_max, EberhardParams, EfficiencyPair,
    Settings,
};
use eberhard_core::fluctuation::{
    optimize_smoothed_mean, optimize_snr, smoothed_stats, FluctuationSpec, SearchConfig, SnrReport,
    DEFAULT_QUAD_ORDER,
};
use eberhard_core::optimizer::SimplexConfig;
use eberhard_core::vienna::{self, optimize_angles, vienna_j, Detection, ViennaExperiment, ViennaState};

use crate::config::{OptimizerOverrides, RunConfig, Scenario};
use crate::report::{Cell, ResultTable};
use crate::CliError;

/// Largest accepted `ψ†Bψ − λ_min` at a reported optimum.
pub const GAP_THRESHOLD: f64 = 1e-6;
/// Largest accepted quantum variance at a reported optimum.
pub const VARIANCE_THRESHOLD: f64 = 1e-8;

pub const SWEEP_ETA_COLUMNS: [&str; 5] = ["eta", "r", "omega_deg", "theta_deg", "j_per_n"];
pub const SWEEP_ETA_PAIR_COLUMNS: [&str; 7] = ["eta1", "eta2", "r", "omega_deg", "theta_deg", "j_per_n", "zeta_max"];
pub const VIENNA_COLUMNS: [&str; 5] = ["alpha1", "alpha2", "beta1", "beta2", "J"];
pub const VIENNA_ROWS: [&str; 3] = ["reference", "optimized", "permuted"];
pub const FLUCTUATION_COLUMNS: [&str; 9] =
    ["eta", "delta_deg", "r", "omega_deg", "theta_deg", "j", "j_delta", "sigma_delta", "k"];
pub const FLUCTUATION_ROWS: [&str; 3] = ["j_optimal", "mean_optimal", "k_optimal"];
pub const VERIFY_EIGEN_COLUMNS: [&str; 5] = ["eta", "lambda_min", "j_per_n", "rayleigh_gap", "quantum_variance"];

/// A finished table plus the rows that did not meet their convergence or verification test.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: ResultTable,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Validates `config` for `scenario`, then runs it.
pub fn run(scenario: Scenario, config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate(scenario)?;
    match scenario {
        Scenario::SweepEta => run_sweep_eta(config),
        Scenario::SweepEtaPair => run_sweep_eta_pair(config),
        Scenario::Vienna => run_vienna(config),
        Scenario::Fluctuation => run_fluctuation(config),
        Scenario::VerifyEigen => run_verify_eigen(config),
    }
}

fn with_overrides(mut cfg: SimplexConfig, o: &OptimizerOverrides) -> SimplexConfig {
    if let Some(v) = o.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = o.f_tol {
        cfg.f_tol = v;
    }
    if let Some(v) = o.x_tol {
        cfg.x_tol = v;
    }
    cfg
}

fn state_simplex(config: &RunConfig) -> SimplexConfig {
    with_overrides(eberhard::default_simplex(), &config.optimizer)
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

fn coords_cells(p: &EberhardParams) -> [Cell; 3] {
    let [r, w, t] = p.coords();
    [r.into(), w.into(), t.into()]
}

pub fn run_sweep_eta(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = section(&config.sweep_eta, "sweep_eta")?;
    let simplex = state_simplex(config);
    let results: Vec<_> = c
        .etas
        .par_iter()
        .map(|&eta| optimize_j(EfficiencyPair::equal(eta)?, c.zeta, config.n_starts(), config.seed, &simplex))
        .collect();
    let mut table = ResultTable::new(&SWEEP_ETA_COLUMNS, 1);
    let mut failures = Vec::new();
    for (&eta, res) in c.etas.iter().zip(results) {
        let (p, opt) = res?;
        if !opt.converged {
            failures.push(format!("eta={eta}: optimizer did not converge"));
        }
        let mut row = vec![eta.into()];
        row.extend(coords_cells(&p));
        row.push(opt.f.into());
        table.push(row)?;
    }
    Ok(Outcome { table, failures })
}

pub fn run_sweep_eta_pair(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = section(&config.sweep_eta_pair, "sweep_eta_pair")?;
    let simplex = state_simplex(config);
    let grid: Vec<(f64, f64)> = c.eta1.iter().flat_map(|&a| c.eta2.iter().map(move |&b| (a, b))).collect();
    let results: Vec<_> = grid
        .par_iter()
        .map(|&(a, b)| optimize_j(EfficiencyPair::new(a, b)?, 0.0, config.n_starts(), config.seed, &simplex))
        .collect();
    let mut table = ResultTable::new(&SWEEP_ETA_PAIR_COLUMNS, 2);
    let mut failures = Vec::new();
    for (&(a, b), res) in grid.iter().zip(results) {
        let (p, opt) = res?;
        if !opt.converged {
            failures.push(format!("eta1={a}, eta2={b}: optimizer did not converge"));
        }
        let zeta = if is_violation(opt.f) { zeta_max(opt.f).value.into() } else { Cell::Missing };
        let mut row = vec![a.into(), b.into()];
        row.extend(coords_cells(&p));
        row.extend([opt.f.into(), zeta]);
        table.push(row)?;
    }
    Ok(Outcome { table, failures })
}

pub fn vienna_experiment(config: &RunConfig) -> Result<ViennaExperiment, CliError> {
    let p = section(&config.vienna, "vienna")?.resolve()?;
    let [a1, a2, b1, b2] = p.reference_angles;
    Ok(ViennaExperiment {
        state: ViennaState::new(p.r, p.v)?,
        detection: Detection::new(EfficiencyPair::new(p.eta1, p.eta2)?, p.n_pairs, p.t_run, p.tau_c, p.zeta)?,
        angles: Settings::new(a1, a2, b1, b2)?,
    })
}

/// Rows: J at the configured angles, J after optimizing the angles, and J after exchanging
/// the detectors and optimizing again from the optimized angles.
pub fn run_vienna(config: &RunConfig) -> Result<Outcome, CliError> {
    let exp = vienna_experiment(config)?;
    let simplex = with_overrides(vienna::default_simplex(), &config.optimizer);
    let (best, opt) = optimize_angles(&exp, &simplex)?;
    let swapped = exp.with_swapped_detectors().with_angles(best);
    let (best_swapped, opt_swapped) = optimize_angles(&swapped, &simplex)?;

    let mut table = ResultTable::new(&VIENNA_COLUMNS, 0);
    let mut failures = Vec::new();
    let rows = [(exp.angles, vienna_j(&exp), true), (best, opt.f, opt.converged), (best_swapped, opt_swapped.f, opt_swapped.converged)];
    for ((angles, j, converged), label) in rows.into_iter().zip(VIENNA_ROWS) {
        if !converged {
            failures.push(format!("{label}: optimizer did not converge"));
        }
        let mut row: Vec<Cell> = angles.as_array().iter().map(|&a| a.into()).collect();
        row.push(j.into());
        table.push_labeled(row, Some(label))?;
    }
    Ok(Outcome { table, failures })
}

fn fluctuation_row(eta: f64, delta: f64, p: &EberhardParams, r: &SnrReport) -> Vec<Cell> {
    let mut row = vec![eta.into(), delta.into()];
    row.extend(coords_cells(p));
    row.extend([r.j_nominal, r.j_delta, r.sigma_delta].map(Cell::Num));
    // K is unbounded when the dispersion is below the floor.
    row.push(if r.k.is_finite() { r.k.into() } else { Cell::Missing });
    row
}

/// Three rows per `(η, δ)`: the `J/N` optimum, the smoothed-mean optimum and the `K` optimum,
/// each evaluated under the angle fluctuation.
pub fn run_fluctuation(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = section(&config.fluctuation, "fluctuation")?;
    let order = c.quad_order.unwrap_or(DEFAULT_QUAD_ORDER);
    let search = SearchConfig {
        simplex: state_simplex(config),
        n_starts: config.n_starts(),
        seed: config.seed,
        ..SearchConfig::default()
    };
    let grid: Vec<(f64, f64)> = c.etas.iter().flat_map(|&e| c.deltas.iter().map(move |&d| (e, d))).collect();
    let results: Vec<_> = grid
        .par_iter()
        .map(|&(eta, delta)| -> Result<_, CliError> {
            let eff = EfficiencyPair::equal(eta)?;
            let spec = FluctuationSpec::new(delta, order)?;
            let (j_opt, j_res) = optimize_j(eff, 0.0, search.n_starts, search.seed, &search.simplex)?;
            let j_report = smoothed_stats(&j_opt, &spec)?;
            let mean = optimize_smoothed_mean(eff, &spec, &search)?;
            let k = optimize_snr(eff, &spec, &search)?;
            Ok([
                (j_opt, j_report, j_res.converged),
                (mean.params, mean.report, mean.result.converged),
                (k.params, k.report, k.result.converged),
            ])
        })
        .collect();
    let mut table = ResultTable::new(&FLUCTUATION_COLUMNS, 2);
    let mut failures = Vec::new();
    for (&(eta, delta), res) in grid.iter().zip(results) {
        for ((p, report, converged), label) in res?.into_iter().zip(FLUCTUATION_ROWS) {
            if !converged {
                failures.push(format!("eta={eta}, delta={delta}, {label}: optimizer did not converge"));
            }
            table.push_labeled(fluctuation_row(eta, delta, &p, &report), Some(label))?;
        }
    }
    Ok(Outcome { table, failures })
}

/// Checks that each optimal state is a minimal eigenvector of `B` with zero dispersion.
/// `r_offset` moves the state away from the optimum first.
pub fn run_verify_eigen(config: &RunConfig) -> Result<Outcome, CliError> {
    let c = section(&config.verify_eigen, "verify_eigen")?;
    let simplex = state_simplex(config);
    let results: Vec<_> = c
        .etas
        .par_iter()
        .map(|&eta| -> Result<_, CliError> {
            let (p, opt) = optimize_j(EfficiencyPair::equal(eta)?, 0.0, config.n_starts(), config.seed, &simplex)?;
            let r = (p.state.r() + c.r_offset).clamp(0.0, 1.0);
            let checked = EberhardParams::new(r, p.state.omega_deg(), p.theta_deg, p.eff, 0.0)?;
            let b = closed_form_b(&checked.eff, 0.0, checked.theta_deg, checked.theta_deg);
            let report = courant_fischer_check(&b, &checked.state.vector())?;
            Ok((report, opt.converged))
        })
        .collect();
    let mut table = ResultTable::new(&VERIFY_EIGEN_COLUMNS, 1);
    let mut failures = Vec::new();
    for (&eta, res) in c.etas.iter().zip(results) {
        let (cf, converged) = res?;
        if !converged {
            failures.push(format!("eta={eta}: optimizer did not converge"));
        }
        if cf.rayleigh_gap > GAP_THRESHOLD {
            failures.push(format!("eta={eta}: Rayleigh gap {:e} exceeds {GAP_THRESHOLD:e}", cf.rayleigh_gap));
        }
        if cf.quantum_variance > VARIANCE_THRESHOLD {
            failures.push(format!(
                "eta={eta}: quantum variance {:e} exceeds {VARIANCE_THRESHOLD:e}",
                cf.quantum_variance
            ));
        }
        let j = cf.lambda_min + cf.rayleigh_gap;
        table.push(vec![
            eta.into(),
            cf.lambda_min.into(),
            j.into(),
            cf.rayleigh_gap.into(),
            cf.quantum_variance.into(),
        ])?;
    }
    Ok(Outcome { table, failures })
}
