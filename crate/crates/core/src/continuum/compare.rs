//! Runs a hotspot on the chain and the matching heat-equation problem side
//! by side.

use serde::{Deserialize, Serialize};

use super::heat::{ContinuumField, HeatProblem, HeatSolver};
use crate::chain::{build_matrices, ChainParams};
use crate::diffusion::{diffusion_profile, source_density_from_profile, Stencil};
use crate::error::{Error, Result};
use crate::moments::{evolve, gaussian_profile, hotspot_state, site_observables, EvolveOptions, Preparation};

fn periodic_stencil() -> Stencil {
    Stencil::Periodic
}

/// A hotspot relaxation experiment. Times are absolute; lengths are in the
/// units of the lattice constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareScenario {
    pub t_hot: f64,
    /// Bath temperature; overrides `bath_temp` of the chain.
    pub t_cold: f64,
    /// Standard deviation of the Gaussian hotspot. Absent means the whole
    /// ring starts hot.
    #[serde(default)]
    pub hotspot_width: Option<f64>,
    pub t_final: f64,
    pub sample_interval: f64,
    /// Interval over which deviations and the Fourier-law fit are evaluated;
    /// defaults to [0.5, 5]/λ clipped to t_final.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub preparation: Preparation,
    #[serde(default = "periodic_stencil")]
    pub stencil: Stencil,
    #[serde(default)]
    pub dt_max: Option<f64>,
}

impl CompareScenario {
    /// Window [0.5, 5]/λ, samples every 0.1/λ.
    pub fn standard(params: &ChainParams, t_hot: f64, t_cold: f64, hotspot_width: Option<f64>) -> Self {
        let lam = params.lambda_fric;
        Self {
            t_hot,
            t_cold,
            hotspot_width,
            t_final: 5.0 / lam,
            sample_interval: 0.1 / lam,
            window: None,
            preparation: Preparation::default(),
            stencil: Stencil::Periodic,
            dt_max: None,
        }
    }

    fn window_for(&self, params: &ChainParams) -> [f64; 2] {
        self.window.unwrap_or_else(|| {
            let lam = params.lambda_fric;
            [(0.5 / lam).min(self.t_final), (5.0 / lam).min(self.t_final)]
        })
    }

    fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.t_cold >= 0.0) {
            bad.push(format!("t_cold = {} (need >= 0)", self.t_cold));
        }
        if !(self.t_hot >= self.t_cold) {
            bad.push(format!("t_hot = {} (need >= t_cold)", self.t_hot));
        }
        if !(self.t_final > 0.0) {
            bad.push(format!("t_final = {} (need > 0)", self.t_final));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval <= self.t_final) {
            bad.push(format!("sample_interval = {} (need in (0, t_final])", self.sample_interval));
        }
        if let Some(w) = self.hotspot_width {
            if !(w > 0.0) {
                bad.push(format!("hotspot_width = {w} (need > 0)"));
            }
        }
        if let Some([a, b]) = self.window {
            if !(a <= b) {
                bad.push(format!("window [{a}, {b}] is empty"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }
}

/// Side-by-side trajectories and agreement measures.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub times: Vec<f64>,
    /// u_k(t) = E_k / a on the chain.
    pub chain_density: Vec<Vec<f64>>,
    pub pde_density: Vec<Vec<f64>>,
    /// J_k on the chain (from site k−1 into site k).
    pub chain_current: Vec<Vec<f64>>,
    /// ‖u_chain − u_pde‖ / ‖u_chain‖ per sample.
    pub deviation: Vec<f64>,
    /// ‖u_chain − u_pde‖ / ‖u_chain − u_eq‖ per sample.
    pub excess_deviation: Vec<f64>,
    pub window: [f64; 2],
    pub max_deviation: f64,
    pub max_excess_deviation: f64,
    /// Through-origin least-squares slope of the site current against
    /// −(u_{k+1} − u_{k−1})/2a over the window; `None` when there is no
    /// gradient to fit.
    pub fit_slope: Option<f64>,
    pub diff_const: f64,
    pub source: f64,
    pub u_eq: f64,
    pub range_b: f64,
    /// Regime warnings; the run still completes.
    pub flags: Vec<String>,
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn compare_discrete_continuum(params: &ChainParams, scenario: &CompareScenario) -> Result<CompareReport> {
    scenario.check()?;
    let params = ChainParams {
        bath_temp: scenario.t_cold,
        ..params.clone()
    };
    params.validate()?;
    let n = params.n_sites;
    let a = params.lattice_const;
    let lam = params.lambda_fric;
    let range_b = a / (2.0 * lam) * (params.xi / params.mass).sqrt();

    let mut flags = Vec::new();
    if let Some(w) = scenario.hotspot_width {
        if w < 8.0 * range_b {
            flags.push(format!("hotspot width {w} is below 8b = {}", 8.0 * range_b));
        }
    }
    if range_b < a {
        flags.push(format!("b = {range_b} is shorter than the lattice constant {a}"));
    }
    if params.gamma_fric != 0.0 {
        flags.push("gamma != 0: neighbour-friction terms are absent from the continuum equation".into());
    }

    let diff = diffusion_profile(&params, scenario.t_cold, scenario.stencil)?;
    let matrices = build_matrices(&params, &diff)?;
    let source = source_density_from_profile(&params, &diff);
    let profile = match scenario.hotspot_width {
        Some(w) => gaussian_profile(n, 0.5 * n as f64, w / a),
        None => vec![1.0; n],
    };
    let mut state = hotspot_state(&params, scenario.t_hot, scenario.t_cold, &profile, scenario.preparation)?;

    let problem = HeatProblem::from_chain(&params, source)?;
    let solver = HeatSolver::new(problem, a, None)?;
    let u_eq = problem.equilibrium();

    let obs0 = site_observables(&state, &params);
    let mut field = ContinuumField::new(obs0.densities.clone(), a, 0.0)?;
    let samples = (scenario.t_final / scenario.sample_interval).round().max(1.0) as usize;
    let dt_max = scenario.dt_max.unwrap_or(f64::INFINITY);

    let mut times = vec![0.0];
    let mut chain_density = vec![obs0.densities];
    let mut chain_current = vec![obs0.currents];
    let mut pde_density = vec![field.values.clone()];
    for i in 1..=samples {
        let t = scenario.t_final * i as f64 / samples as f64;
        let opts = EvolveOptions {
            sample_stride: usize::MAX,
            hbar: Some(params.hbar),
            ..EvolveOptions::new(t, dt_max)
        };
        state = evolve(&state, &matrices, &opts, |_| {})?;
        solver.advance(&mut field, t)?;
        let obs = site_observables(&state, &params);
        times.push(t);
        chain_density.push(obs.densities);
        chain_current.push(obs.currents);
        pde_density.push(field.values.clone());
    }

    let eq = vec![u_eq; n];
    let deviation: Vec<f64> = chain_density
        .iter()
        .zip(&pde_density)
        .map(|(c, p)| l2(c, p) / l2(c, &vec![0.0; n]))
        .collect();
    let excess_deviation: Vec<f64> = chain_density
        .iter()
        .zip(&pde_density)
        .map(|(c, p)| {
            let excess = l2(c, &eq);
            if excess > 0.0 {
                l2(c, p) / excess
            } else {
                0.0
            }
        })
        .collect();

    let window = scenario.window_for(&params);
    let in_window = |t: f64| t >= window[0] * (1.0 - 1e-12) && t <= window[1] * (1.0 + 1e-12);
    let mut max_deviation = 0.0f64;
    let mut max_excess_deviation = 0.0f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &t) in times.iter().enumerate() {
        if !in_window(t) {
            continue;
        }
        max_deviation = max_deviation.max(deviation[i]);
        max_excess_deviation = max_excess_deviation.max(excess_deviation[i]);
        let u = &chain_density[i];
        let j = &chain_current[i];
        for k in 0..n {
            let (prev, next) = ((k + n - 1) % n, (k + 1) % n);
            let grad = -(u[next] - u[prev]) / (2.0 * a);
            // J_k sits on the bond (k−1, k); average the two bonds of site k.
            let current = 0.5 * (j[k] + j[next]);
            sxy += current * grad;
            sxx += grad * grad;
        }
    }
    let fit_slope = if sxx > 0.0 { Some(sxy / sxx) } else { None };

    Ok(CompareReport {
        times,
        chain_density,
        pde_density,
        chain_current,
        deviation,
        excess_deviation,
        window,
        max_deviation,
        max_excess_deviation,
        fit_slope,
        diff_const: problem.diff_const,
        source,
        u_eq,
        range_b,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ChainParams {
        ChainParams {
            n_sites: 32,
            omega0: 0.3,
            lambda_fric: 0.25,
            ..ChainParams::default()
        }
    }

    #[test]
    fn uniform_heating_follows_the_exponential_law() {
        let p = small();
        let sc = CompareScenario::standard(&p, 20.0, 10.0, None);
        let r = compare_discrete_continuum(&p, &sc).unwrap();
        assert!(r.max_deviation < 1e-3, "{}", r.max_deviation);
        assert!(r.fit_slope.is_none());
        let last = r.chain_density.last().unwrap();
        let t = *r.times.last().unwrap();
        let u0 = r.chain_density[0][0];
        let exact = r.u_eq + (u0 - r.u_eq) * (-2.0 * p.lambda_fric * t).exp();
        assert!((last[0] - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn narrow_hotspot_is_flagged() {
        let p = small();
        let sc = CompareScenario {
            t_final: 1.0,
            sample_interval: 0.5,
            ..CompareScenario::standard(&p, 20.0, 10.0, Some(1.0))
        };
        let r = compare_discrete_continuum(&p, &sc).unwrap();
        assert!(r.flags.iter().any(|f| f.contains("8b")));
        assert_eq!(r.times.len(), 3);
    }

    #[test]
    fn bad_scenarios_list_every_problem() {
        let p = small();
        let sc = CompareScenario {
            t_hot: 1.0,
            t_final: -1.0,
            ..CompareScenario::standard(&p, 20.0, 10.0, Some(-2.0))
        };
        match compare_discrete_continuum(&p, &sc) {
            Err(Error::InvalidParams(v)) => assert!(v.len() >= 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }
}
