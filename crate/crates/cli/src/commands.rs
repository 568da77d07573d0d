//! The subcommand workflows. Each validates its keys, writes its CSV
//! artifacts into the output directory and returns the summary.

use std::path::Path;

use lattice_heat::chain::{dispersion, group_velocity, mode_grid};
use lattice_heat::continuum::{compare_discrete_continuum, CompareScenario};
use lattice_heat::diffusion::{diffusion_profile, heat_capacity_density, quad_diffusion_set, source_density, source_density_from_profile, Stencil};
use lattice_heat::moments::{evolve, gaussian_profile, hotspot_state, site_observables, EvolveOptions};
use lattice_heat::{build_matrices, klemens_conductivity, transport_coefficients, ChainParams, Error};
use serde_json::json;

use crate::config::{temperatures, ScenarioConfig};
use crate::report::{num, write_csv, Outcome, SummaryItem};

/// Chain and run problems in one list, chain keys prefixed.
fn validate(chain: &ChainParams, mut run_errors: Vec<String>) -> Result<(), Error> {
    let mut all: Vec<String> = match chain.validate() {
        Err(Error::InvalidParams(v)) => v.into_iter().map(|m| format!("chain.{m}")).collect(),
        Err(e) => return Err(e),
        Ok(()) => Vec::new(),
    };
    all.append(&mut run_errors);
    if all.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParams(all))
    }
}

fn positive(errors: &mut Vec<String>, key: &str, value: Option<f64>) {
    if let Some(v) = value {
        if !(v > 0.0 && v.is_finite()) {
            errors.push(format!("run.{key} = {v} (need > 0)"));
        }
    }
}

fn sweep(config: &ScenarioConfig) -> Result<Vec<f64>, Error> {
    let temps = temperatures(&config.run, &config.chain);
    let run_errors = temps.as_ref().err().cloned().unwrap_or_default();
    validate(&config.chain, run_errors)?;
    Ok(temps.unwrap_or_default())
}

fn high_temp_threshold(p: &ChainParams) -> f64 {
    50.0 * p.hbar * p.omega_max() / p.k_boltz
}

pub fn coefficients(config: &ScenarioConfig, out: &Path) -> anyhow::Result<Outcome> {
    let temps = sweep(config)?;
    let p = &config.chain;
    let mut rows = Vec::with_capacity(temps.len());
    let mut last = None;
    for &t in &temps {
        let set = quad_diffusion_set(p, t)?;
        let s = source_density(p, &set);
        let ratio = if t > 0.0 {
            s * p.lattice_const / (2.0 * p.lambda_fric * p.k_boltz * t)
        } else {
            f64::NAN
        };
        let c = heat_capacity_density(p, t)?;
        rows.push(vec![
            num(t),
            num(set.d_xx),
            num(set.d_pp),
            num(set.d_ex),
            num(s),
            num(ratio),
            num(c),
            num(s / (2.0 * p.lambda_fric)),
        ]);
        last = Some((t, ratio, c * p.lattice_const / p.k_boltz));
    }
    let path = out.join("coefficients.csv");
    write_csv(
        &path,
        &["temp", "d_xx", "d_pp", "d_ex", "source", "source_ratio", "heat_capacity", "u_eq"],
        rows,
    )?;
    let mut summary = vec![SummaryItem::info("rows", temps.len() as f64)];
    if let Some((t, ratio, c)) = last {
        let hot = t >= high_temp_threshold(p);
        summary.push(if hot {
            SummaryItem::criterion("source_ratio_at_temp_max", ratio, 4)
        } else {
            SummaryItem::info("source_ratio_at_temp_max", ratio)
        });
        summary.push(if hot {
            SummaryItem::criterion("heat_capacity_ratio_at_temp_max", c, 5)
        } else {
            SummaryItem::info("heat_capacity_ratio_at_temp_max", c)
        });
    }
    Ok(Outcome {
        summary,
        artifacts: vec![path],
        ..Outcome::default()
    })
}

pub fn dispersion_table(config: &ScenarioConfig, out: &Path) -> anyhow::Result<Outcome> {
    validate(&config.chain, Vec::new())?;
    let p = &config.chain;
    let mut grid = mode_grid(p.n_sites);
    grid.sort_by(f64::total_cmp);
    let path = out.join("dispersion.csv");
    write_csv(
        &path,
        &["q", "omega", "group_velocity"],
        grid.iter()
            .map(|&q| vec![num(q), num(dispersion(p, q)), num(p.lattice_const * group_velocity(p, q))]),
    )?;
    Ok(Outcome {
        summary: vec![
            SummaryItem::info("omega_max", p.omega_max()),
            SummaryItem::info("modes", grid.len() as f64),
        ],
        artifacts: vec![path],
        ..Outcome::default()
    })
}

pub fn conductivity(config: &ScenarioConfig, out: &Path) -> anyhow::Result<Outcome> {
    let temps = sweep(config)?;
    let p = &config.chain;
    let model = config.run.velocity_model.unwrap_or_default();
    let mut rows = Vec::with_capacity(temps.len());
    let mut last = None;
    for &t in &temps {
        let tc = transport_coefficients(p, t)?;
        let kk = klemens_conductivity(p, t, model)?;
        rows.push(vec![num(t), num(tc.heat_capacity), num(tc.kappa), num(kk), num(tc.sigma_diffusivity)]);
        last = Some((t, tc.kappa, kk));
    }
    let path = out.join("conductivity.csv");
    write_csv(&path, &["temp", "heat_capacity", "kappa_continuum", "kappa_klemens", "sigma"], rows)?;
    let mut summary = vec![SummaryItem::info("rows", temps.len() as f64)];
    if let Some((t, kappa, kk)) = last {
        let ratio = kk / kappa;
        summary.push(if t >= high_temp_threshold(p) && p.omega0 == 0.0 {
            SummaryItem::criterion("klemens_over_continuum_at_temp_max", ratio, 6)
        } else {
            SummaryItem::info("klemens_over_continuum_at_temp_max", ratio)
        });
    }
    Ok(Outcome {
        summary,
        artifacts: vec![path],
        details: json!({ "velocity_model": model }),
        ..Outcome::default()
    })
}

/// Least-squares slope of ln y against t over the points with y > 0.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, y)| *y > 0.0).map(|&(t, y)| (t, y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

pub fn relax(config: &ScenarioConfig, out: &Path) -> anyhow::Result<Outcome> {
    let p = &config.chain;
    let run = &config.run;
    let mut bad = Vec::new();
    let t_hot = run.t_hot.unwrap_or(f64::NAN);
    if run.t_hot.is_none() {
        bad.push("run.t_hot is required".into());
    } else if !(t_hot >= p.bath_temp) {
        bad.push(format!("run.t_hot = {t_hot} (need >= chain.bath_temp = {})", p.bath_temp));
    }
    positive(&mut bad, "hotspot_width", run.hotspot_width);
    positive(&mut bad, "t_final", run.t_final);
    positive(&mut bad, "dt_max", run.dt_max);
    if run.sample_stride == Some(0) {
        bad.push("run.sample_stride = 0 (need >= 1)".into());
    }
    validate(p, bad)?;

    let n = p.n_sites;
    let stencil = run.stencil.unwrap_or_default();
    let prof = diffusion_profile(p, p.bath_temp, stencil)?;
    let m = build_matrices(p, &prof)?;
    let u_eq_total = n as f64 * p.lattice_const * source_density_from_profile(p, &prof) / (2.0 * p.lambda_fric);
    let profile = match run.hotspot_width {
        Some(w) => gaussian_profile(n, run.hotspot_center.unwrap_or(0.5 * n as f64), w / p.lattice_const),
        None => vec![1.0; n],
    };
    let init = hotspot_state(p, t_hot, p.bath_temp, &profile, run.preparation.unwrap_or_default())?;
    let opts = EvolveOptions {
        hbar: Some(p.hbar),
        ..EvolveOptions::new(run.t_final.unwrap_or(3.0 / p.lambda_fric), run.dt_max.unwrap_or(f64::INFINITY))
            .stride(run.sample_stride.unwrap_or(10))
    };
    let mut site_rows = Vec::new();
    let mut total_rows = Vec::new();
    let mut excess = Vec::new();
    evolve(&init, &m, &opts, |s| {
        let obs = site_observables(s, p);
        for k in 0..n {
            site_rows.push(vec![num(s.time), k.to_string(), num(obs.densities[k]), num(obs.currents[k])]);
        }
        total_rows.push(vec![num(s.time), num(obs.total_energy), num(obs.total_energy - u_eq_total)]);
        excess.push((s.time, obs.total_energy - u_eq_total));
    })?;
    let sites = out.join("relax_sites.csv");
    let totals = out.join("relax_total.csv");
    write_csv(&sites, &["time", "site", "energy_density", "current"], site_rows)?;
    write_csv(&totals, &["time", "total_energy", "excess_energy"], total_rows)?;

    let rate_ratio = -log_slope(&excess) / (2.0 * p.lambda_fric);
    let mut flags = Vec::new();
    if p.gamma_fric != 0.0 {
        flags.push("gamma != 0: the total energy is not expected to decay at exactly 2 lambda".into());
    }
    let rate_item = if p.gamma_fric == 0.0 {
        SummaryItem::criterion("fitted_rate_over_2lambda", rate_ratio, 3)
    } else {
        SummaryItem::info("fitted_rate_over_2lambda", rate_ratio)
    };
    Ok(Outcome {
        summary: vec![
            rate_item,
            SummaryItem::info("u_eq_total", u_eq_total),
            SummaryItem::info("final_excess_energy", excess.last().map(|e| e.1).unwrap_or(f64::NAN)),
        ],
        artifacts: vec![sites, totals],
        flags,
        details: json!({ "stencil": stencil }),
        ..Outcome::default()
    })
}

pub fn compare(config: &ScenarioConfig, out: &Path) -> anyhow::Result<Outcome> {
    let p = &config.chain;
    let run = &config.run;
    let mut bad = Vec::new();
    if run.t_hot.is_none() {
        bad.push("run.t_hot is required".into());
    }
    validate(p, bad)?;
    let t_cold = run.t_cold.unwrap_or(p.bath_temp);
    let base = CompareScenario::standard(p, run.t_hot.unwrap_or(f64::NAN), t_cold, run.hotspot_width);
    let scenario = CompareScenario {
        t_final: run.t_final.unwrap_or(base.t_final),
        sample_interval: run.sample_interval.unwrap_or(base.sample_interval),
        window: run.window,
        preparation: run.preparation.unwrap_or_default(),
        stencil: run.stencil.unwrap_or(Stencil::Periodic),
        dt_max: run.dt_max,
        ..base
    };
    let r = compare_discrete_continuum(p, &scenario)?;
    let a = p.lattice_const;
    let mut chain_rows = Vec::new();
    let mut pde_rows = Vec::new();
    for (i, &t) in r.times.iter().enumerate() {
        for k in 0..p.n_sites {
            let x = k as f64 * a;
            chain_rows.push(vec![
                num(t),
                k.to_string(),
                num(x),
                num(r.chain_density[i][k]),
                num(r.chain_current[i][k]),
            ]);
            pde_rows.push(vec![num(t), k.to_string(), num(x), num(r.pde_density[i][k])]);
        }
    }
    let chain_path = out.join("compare_chain.csv");
    let pde_path = out.join("compare_pde.csv");
    let dev_path = out.join("compare_deviation.csv");
    write_csv(&chain_path, &["time", "site", "x", "energy_density", "current"], chain_rows)?;
    write_csv(&pde_path, &["time", "cell", "x", "energy_density"], pde_rows)?;
    write_csv(
        &dev_path,
        &["time", "deviation", "excess_deviation"],
        r.times
            .iter()
            .zip(r.deviation.iter().zip(&r.excess_deviation))
            .map(|(t, (d, e))| vec![num(*t), num(*d), num(*e)]),
    )?;
    let slope = r.fit_slope.unwrap_or(f64::NAN);
    Ok(Outcome {
        summary: vec![
            SummaryItem::criterion("max_l2_deviation", r.max_deviation, 8),
            SummaryItem::criterion("fourier_fit_slope_over_diff_const", slope / r.diff_const, 8),
            SummaryItem::info("max_excess_deviation", r.max_excess_deviation),
            SummaryItem::info("fourier_fit_slope", slope),
            SummaryItem::info("diff_const", r.diff_const),
            SummaryItem::info("range_b", r.range_b),
            SummaryItem::info("u_eq", r.u_eq),
        ],
        artifacts: vec![chain_path, pde_path, dev_path],
        flags: r.flags.clone(),
        details: json!({
            "times": r.times,
            "deviation": r.deviation,
            "excess_deviation": r.excess_deviation,
            "window": r.window,
            "fit_slope": r.fit_slope,
            "diff_const": r.diff_const,
            "source": r.source,
        }),
        ..Outcome::default()
    })
}

pub fn verify(config: &ScenarioConfig, out: &Path) -> anyhow::Result<Outcome> {
    let outcomes = lattice_heat_verify::run_all_seeded(config.meta.seed);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for o in &outcomes {
        println!("{}", o.report());
        for c in &o.checks {
            rows.push(vec![
                o.id.to_string(),
                c.label.clone(),
                num(c.measured),
                num(c.tolerance),
                c.passed.to_string(),
                c.informational.to_string(),
            ]);
            let name = format!("criterion_{}: {}", o.id, c.label);
            summary.push(if c.informational {
                SummaryItem::info(name, c.measured)
            } else {
                SummaryItem::criterion(name, c.measured, o.id)
            });
        }
    }
    let path = out.join("verify.csv");
    write_csv(&path, &["criterion", "check", "measured", "tolerance", "passed", "informational"], rows)?;
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    Ok(Outcome {
        summary,
        artifacts: vec![path],
        flags: failed.iter().map(|id| format!("criterion {id} failed")).collect(),
        details: serde_json::to_value(&outcomes)?,
        failed_criteria: !failed.is_empty(),
    })
}
