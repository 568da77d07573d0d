//! The acceptance criteria, each returning a structured outcome.

use std::f64::consts::PI;

use lattice_heat::chain::{build_matrices, dispersion, ModelMatrices};
use lattice_heat::continuum::{compare_discrete_continuum, CompareScenario, ContinuumField, HeatProblem, HeatSolver};
use lattice_heat::diffusion::{
    diffusion_profile, gibbs_covariance, heat_capacity_density, quad_diffusion_set, source_density,
    source_density_from_profile, Stencil,
};
use lattice_heat::moments::{
    evolve, gaussian_profile, hotspot_state, moment_rhs, site_observables, stationary_covariance,
    CovarianceState, EvolveOptions, Preparation,
};
use lattice_heat::{klemens_conductivity, transport_coefficients, ChainParams, VelocityModel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::oracles;

/// One numeric check inside a criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Informational checks are reported but do not decide the outcome.
    pub informational: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when the run itself aborted.
    pub error: Option<String>,
}

impl Outcome {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            passed: true,
            checks: Vec::new(),
            error: None,
        }
    }

    /// Records `measured <= tolerance`.
    fn at_most(&mut self, label: impl Into<String>, measured: f64, tolerance: f64) {
        let passed = measured <= tolerance;
        self.push(label.into(), measured, tolerance, passed, false);
    }

    fn require(&mut self, label: impl Into<String>, measured: f64, tolerance: f64, passed: bool) {
        self.push(label.into(), measured, tolerance, passed, false);
    }

    fn inform(&mut self, label: impl Into<String>, measured: f64, tolerance: f64) {
        let passed = measured <= tolerance;
        self.push(label.into(), measured, tolerance, passed, true);
    }

    fn push(&mut self, label: String, measured: f64, tolerance: f64, passed: bool, informational: bool) {
        if !informational && !passed {
            self.passed = false;
        }
        self.checks.push(Check {
            label,
            measured,
            tolerance,
            passed,
            informational,
        });
    }

    fn fail(mut self, err: impl std::fmt::Display) -> Self {
        self.passed = false;
        self.error = Some(err.to_string());
        self
    }

    /// Headline line followed by one indented line per check.
    pub fn report(&self) -> String {
        let mut out = format!(
            "{} criterion {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name
        );
        if let Some(e) = &self.error {
            out.push_str(&format!("\n    error: {e}"));
        }
        for c in &self.checks {
            let tag = match (c.informational, c.passed) {
                (true, _) => "info",
                (false, true) => "ok",
                (false, false) => "FAIL",
            };
            out.push_str(&format!("\n    [{tag}] {}: measured {:.6e}", c.label, c.measured));
            if c.tolerance.is_finite() {
                out.push_str(&format!(", tolerance {:.3e}", c.tolerance));
            }
        }
        out
    }
}

fn rel_max_dev(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

fn with_error(outcome: Outcome, res: Result<Outcome, lattice_heat::Error>) -> Outcome {
    match res {
        Ok(o) => o,
        Err(e) => outcome.fail(e),
    }
}

/// Seed of the random states in criterion 1 unless another is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Criterion 1: structured matrix right-hand side against the site-by-site
/// transcription on 100 random symmetric states.
pub fn moment_fidelity() -> Outcome {
    moment_fidelity_seeded(DEFAULT_SEED)
}

pub fn moment_fidelity_seeded(seed: u64) -> Outcome {
    let out = Outcome::new(1, "moment-equation fidelity");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(1, "moment-equation fidelity");
        let params = ChainParams {
            n_sites: 4,
            gamma_fric: 0.02,
            ..ChainParams::default()
        };
        let prof = diffusion_profile(&params, params.bath_temp, Stencil::Periodic)?;
        let m = build_matrices(&params, &prof)?;
        let friction = oracles::ring_matrix(4, params.lambda_fric, params.gamma_fric);
        let d = m.diffusion();
        let d_xx = d.view((0, 0), (4, 4)).into_owned();
        let d_pp = d.view((4, 4), (4, 4)).into_owned();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut worst, mut worst_printed) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let raw = DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
            let state = CovarianceState::new(&raw + raw.transpose(), 0.0);
            let rhs = moment_rhs(&state, &m)?;
            let t = oracles::transcribed_rates(&state.sigma, &params, &friction, &d_xx, &d_pp, 2.0);
            let printed = oracles::transcribed_rates(&state.sigma, &params, &friction, &d_xx, &d_pp, 1.0);
            for k in 0..4 {
                worst = worst
                    .max((rhs[(k, k)] - t.x_sq[k]).abs())
                    .max((rhs[(4 + k, 4 + k)] - t.p_sq[k]).abs())
                    .max((rhs[(k, (k + 1) % 4)] - t.x_next[k]).abs());
                worst_printed = worst_printed.max((rhs[(4 + k, 4 + k)] - printed.p_sq[k]).abs());
            }
        }
        out.at_most("max |matrix RHS - transcription|", worst, 1e-13);
        out.inform("max deviation with a single (m w0^2 + 2 xi)<x p> factor", worst_printed, 1e-13);
        Ok(out)
    };
    with_error(out, run())
}

/// Criterion 2: stationary state under integral-derived diffusion equals the
/// Gibbs state.
pub fn gibbs_stationarity() -> Outcome {
    let out = Outcome::new(2, "Gibbs stationarity / fluctuation-dissipation");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(2, "Gibbs stationarity / fluctuation-dissipation");
        let (mut worst, mut worst_oracle, mut worst_nn) = (0.0f64, 0.0f64, 0.0f64);
        for gamma in [0.0, 0.02] {
            for n in [8, 64] {
                for temp in [0.5, 2.0, 50.0] {
                    let params = ChainParams {
                        n_sites: n,
                        lambda_fric: 0.1,
                        gamma_fric: gamma,
                        bath_temp: temp,
                        ..ChainParams::default()
                    };
                    let prof = diffusion_profile(&params, temp, Stencil::Periodic)?;
                    let stat = stationary_covariance(&build_matrices(&params, &prof)?)?;
                    let gibbs = gibbs_covariance(&params, temp)?;
                    stat.check_psd(1e-10)?;
                    worst = worst.max(rel_max_dev(&stat.sigma, &gibbs.sigma));
                    let oracle = oracles::normal_mode_gibbs(&params, temp);
                    worst_oracle = worst_oracle.max(rel_max_dev(&gibbs.sigma, &oracle));
                    let nn = diffusion_profile(&params, temp, Stencil::NearestNeighbor)?;
                    let stat_nn = stationary_covariance(&build_matrices(&params, &nn)?)?;
                    worst_nn = worst_nn.max(rel_max_dev(&stat_nn.sigma, &gibbs.sigma));
                }
            }
        }
        out.at_most("max relative |stationary - Gibbs| (periodic stencil)", worst, 1e-9);
        out.at_most("max relative |Gibbs - normal-mode oracle|", worst_oracle, 1e-9);
        out.inform("same with on-site/nearest-neighbour diffusion only", worst_nn, 1e-9);
        Ok(out)
    };
    with_error(out, run())
}

/// Least-squares slope of ln y against t.
fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    sxy / sxx
}

/// Criterion 3: for γ = 0 the total energy relaxes at exactly 2λ towards
/// N·a·s/2λ.
pub fn energy_decay() -> Outcome {
    let out = Outcome::new(3, "exact total-energy decay");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(3, "exact total-energy decay");
        let params = ChainParams::default();
        let n = params.n_sites;
        let prof = diffusion_profile(&params, params.bath_temp, Stencil::NearestNeighbor)?;
        let m = build_matrices(&params, &prof)?;
        let s = source_density_from_profile(&params, &prof);
        let u_eq = n as f64 * params.lattice_const * s / (2.0 * params.lambda_fric);

        let stat = stationary_covariance(&m)?;
        let u_stat = oracles::trace_energy(&stat.sigma, &params);
        out.at_most("|U_eq(stationary) / (N a s / 2 lambda) - 1|", (u_stat / u_eq - 1.0).abs(), 1e-6);

        let init = hotspot_state(
            &params,
            10.0,
            params.bath_temp,
            &gaussian_profile(n, 20.0, 3.0),
            Preparation::LocalGibbs,
        )?;
        let opts = EvolveOptions {
            hbar: Some(params.hbar),
            ..EvolveOptions::new(3.0 / params.lambda_fric, f64::INFINITY).stride(20)
        };
        let (mut t, mut y) = (Vec::new(), Vec::new());
        evolve(&init, &m, &opts, |st| {
            t.push(st.time);
            y.push(site_observables(st, &params).total_energy - u_eq);
        })?;
        let rate = -log_slope(&t, &y);
        out.at_most(
            "|fitted rate / 2 lambda - 1|",
            (rate / (2.0 * params.lambda_fric) - 1.0).abs(),
            1e-3,
        );
        Ok(out)
    };
    with_error(out, run())
}

/// Criterion 4: quadrature against the printed high-temperature forms, and
/// s = 2λk_BT/a.
pub fn high_temperature_forms() -> Outcome {
    let out = Outcome::new(4, "high-temperature closed forms");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(4, "high-temperature closed forms");
        for gamma in [0.0, 0.02] {
            let params = ChainParams {
                gamma_fric: gamma,
                ..ChainParams::default()
            };
            let temp = 50.0 * params.hbar * params.omega_max() / params.k_boltz;
            let quad = quad_diffusion_set(&params, temp)?;
            let printed = oracles::printed_high_temp(&params, temp);
            let tag = format!("gamma = {gamma}");
            out.at_most(format!("{tag}: |D_xx quad / printed - 1|"), (quad.d_xx / printed.d_xx - 1.0).abs(), 0.01);
            out.at_most(format!("{tag}: |D_pp quad / printed - 1|"), (quad.d_pp / printed.d_pp - 1.0).abs(), 0.01);
            out.at_most(format!("{tag}: |D_ex quad / printed - 1|"), (quad.d_ex / printed.d_ex - 1.0).abs(), 0.01);
            let ratio = source_density(&params, &quad) * params.lattice_const / (2.0 * params.lambda_fric * params.k_boltz * temp);
            out.at_most(format!("{tag}: |s a / (2 lambda k_B T) - 1|"), (ratio - 1.0).abs(), 0.005);
            let fixed = lattice_heat::diffusion::high_temp_diffusion(&params, temp)?;
            out.inform(
                format!("{tag}: |D_ex quad / library closed form - 1|"),
                (quad.d_ex / fixed.d_ex - 1.0).abs(),
                0.01,
            );
            let printed_set = lattice_heat::diffusion::DiffusionSet {
                d_xx: printed.d_xx,
                d_pp: printed.d_pp,
                d_ex: printed.d_ex,
                temp,
            };
            let printed_ratio =
                source_density(&params, &printed_set) * params.lattice_const / (2.0 * params.lambda_fric * params.k_boltz * temp);
            out.inform(format!("{tag}: |s a / (2 lambda k_B T) - 1| from printed forms"), (printed_ratio - 1.0).abs(), 0.005);
        }
        Ok(out)
    };
    with_error(out, run())
}

/// Criterion 5: classical plateau and zero-temperature limit of C(T).
pub fn heat_capacity_limits() -> Outcome {
    let out = Outcome::new(5, "heat capacity limits");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(5, "heat capacity limits");
        let params = ChainParams::default();
        let unit = params.k_boltz / params.lattice_const;
        let base = params.hbar * params.omega_max() / params.k_boltz;
        let mut lowest = f64::INFINITY;
        let mut highest = f64::NEG_INFINITY;
        for factor in [50.0, 100.0, 1e3, 1e5] {
            let c = heat_capacity_density(&params, factor * base)? / unit;
            lowest = lowest.min(c);
            highest = highest.max(c);
        }
        out.require("min C a / k_B for k_B T >= 50 hbar w(pi)", lowest, 0.99, lowest >= 0.99);
        out.require("max C a / k_B for k_B T >= 50 hbar w(pi)", highest, 1.0, highest <= 1.0);
        let c0 = heat_capacity_density(&params, 0.0)?;
        out.require("C(0)", c0, 0.0, c0 == 0.0);
        Ok(out)
    };
    with_error(out, run())
}

/// Criterion 6: mode-sum conductivity against κ = a²ξ/(2λm)·C(T).
pub fn conductivity_consistency() -> Outcome {
    let out = Outcome::new(6, "conductivity consistency");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(6, "conductivity consistency");
        let params = ChainParams {
            n_sites: 1024,
            omega0: 0.0,
            ..ChainParams::default()
        };
        let temp = 50.0 * params.hbar * params.omega_max() / params.k_boltz;
        let kappa = transport_coefficients(&params, temp)?.kappa;
        let k_disp = klemens_conductivity(&params, temp, VelocityModel::Dispersion)?;
        out.at_most("|kappa_klemens(a dw/dq) / kappa - 1|", (k_disp / kappa - 1.0).abs(), 0.02);
        let k_long = klemens_conductivity(&params, temp, VelocityModel::LongWavelength)?;
        out.inform("|kappa_klemens(a sqrt(xi/m)) / kappa - 1|", (k_long / kappa - 1.0).abs(), 0.02);
        Ok(out)
    };
    with_error(out, run())
}

/// Criterion 7: heat-equation solver against the periodic Green's function.
pub fn pde_correctness() -> Outcome {
    let out = Outcome::new(7, "PDE correctness");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(7, "PDE correctness");
        let params = ChainParams::default();
        let source = source_density(&params, &quad_diffusion_set(&params, params.bath_temp)?);
        let problem = HeatProblem::from_chain(&params, source)?;
        let (cells, dx) = (512usize, 0.5);
        let length = cells as f64 * dx;
        let (bg, amp, center, width) = (0.5 * problem.equilibrium(), 2.0 * problem.equilibrium(), 0.4 * length, 8.0);
        let exact = |x: f64, t: f64| {
            oracles::heat_green(x, t, length, problem.diff_const, problem.decay_rate, source, bg, amp, center, width)
        };
        let u0 = (0..cells).map(|i| exact(i as f64 * dx, 0.0)).collect();
        let mut field = ContinuumField::new(u0, dx, 0.0)?;
        let t = 1.0 / params.lambda_fric;
        HeatSolver::new(problem, dx, None)?.advance(&mut field, t)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (i, v) in field.values.iter().enumerate() {
            let e = exact(i as f64 * dx, t);
            num += (v - e).powi(2);
            den += e * e;
        }
        out.at_most("L2-relative deviation at t = 1/lambda", (num / den).sqrt(), 1e-4);
        Ok(out)
    };
    with_error(out, run())
}

/// Chain used for the discrete-to-continuum experiment.
pub fn emergence_params() -> ChainParams {
    ChainParams {
        n_sites: 256,
        omega0: 0.05,
        xi: 1.0,
        mass: 1.0,
        lattice_const: 1.0,
        lambda_fric: 0.2,
        gamma_fric: 0.0,
        bath_temp: 100.0,
        ..ChainParams::default()
    }
}

/// Criterion 8: coarse-grained chain energy density against the heat
/// equation, and the discrete Fourier-law slope.
pub fn continuum_emergence() -> Outcome {
    let out = Outcome::new(8, "discrete to continuum emergence");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(8, "discrete to continuum emergence");
        let params = emergence_params();
        let b = transport_coefficients(&params, params.bath_temp)?.range_b;
        let mut excess = Vec::new();
        for (i, factor) in [8.0, 12.0, 16.0].into_iter().enumerate() {
            let sc = CompareScenario::standard(&params, 200.0, 100.0, Some(factor * b));
            let r = compare_discrete_continuum(&params, &sc)?;
            if i == 0 {
                out.at_most("max L2-relative deviation, t in [0.5, 5]/lambda, width 8b", r.max_deviation, 0.05);
                let slope = r.fit_slope.unwrap_or(f64::NAN);
                out.at_most(
                    "|Fourier-fit slope / (a^2 xi / 2 lambda m) - 1|, width 8b",
                    (slope / r.diff_const - 1.0).abs(),
                    0.10,
                );
                out.inform("Fourier-fit slope / (a^2 xi / 2 lambda m), width 8b", slope / r.diff_const, f64::INFINITY);
            }
            out.inform(
                format!("max deviation of the excess over u_eq, width {factor}b"),
                r.max_excess_deviation,
                f64::INFINITY,
            );
            out.inform(format!("max L2-relative deviation, width {factor}b"), r.max_deviation, 0.05);
            excess.push(r.max_excess_deviation);
        }
        let monotone = excess.windows(2).all(|w| w[1] < w[0]);
        out.require(
            "excess deviation decreases over widths 8b, 12b, 16b (last value)",
            *excess.last().unwrap(),
            excess[0],
            monotone,
        );
        Ok(out)
    };
    with_error(out, run())
}

/// Criterion 9: closed chain conserves energy; Σ stays positive.
pub fn conservation() -> Outcome {
    let out = Outcome::new(9, "conservation sanity");
    let run = || -> Result<Outcome, lattice_heat::Error> {
        let mut out = Outcome::new(9, "conservation sanity");
        let params = ChainParams::default();
        let m = ModelMatrices::hamiltonian(&params);
        let init = hotspot_state(
            &params,
            10.0,
            1.0,
            &gaussian_profile(params.n_sites, 10.0, 2.0),
            Preparation::LocalGibbs,
        )?;
        let w_pi = dispersion(&params, PI);
        let u0 = oracles::trace_energy(&init.sigma, &params);
        let mut drift = 0.0f64;
        let mut min_ratio = f64::INFINITY;
        let opts = EvolveOptions::new(100.0 / w_pi, 0.01 / w_pi).stride(200);
        let end = evolve(&init, &m, &opts, |st| {
            drift = drift.max((oracles::trace_energy(&st.sigma, &params) / u0 - 1.0).abs());
            let (lo, hi) = st.spectrum_bounds();
            min_ratio = min_ratio.min(lo / hi);
        })?;
        out.at_most("max |U(t) / U(0) - 1| over t <= 100 / w(pi)", drift, 1e-9);
        out.require("min eigenvalue / max eigenvalue of Sigma", min_ratio, -1e-10, min_ratio >= -1e-10);
        let obs = site_observables(&end, &params);
        out.inform(
            "|sum of site energies / trace energy - 1| at the end",
            (obs.total_energy / oracles::trace_energy(&end.sigma, &params) - 1.0).abs(),
            1e-12,
        );
        Ok(out)
    };
    with_error(out, run())
}

/// Every criterion in order.
pub fn run_all() -> Vec<Outcome> {
    run_all_seeded(DEFAULT_SEED)
}

pub fn run_all_seeded(seed: u64) -> Vec<Outcome> {
    vec![
        moment_fidelity_seeded(seed),
        gibbs_stationarity(),
        energy_decay(),
        high_temperature_forms(),
        heat_capacity_limits(),
        conductivity_consistency(),
        pde_correctness(),
        continuum_emergence(),
        conservation(),
    ]
}
