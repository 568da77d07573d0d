//! Bath-induced diffusion coefficients, their high-temperature limits, the
//! continuum source density, and the thermal (Gibbs) state of the ring.
//!
//! Two evaluation routes coexist. Diffusion coefficients use Brillouin-zone
//! integrals over q ∈ [−π, π], which describe an infinite chain. Gibbs
//! covariances use the N-mode sum of the simulated ring. For ω₀ > 0 the two
//! differ only by exponentially small aliasing terms.

use std::f64::consts::PI;

use serde::Serialize;

use crate::chain::{dispersion, mode_grid, ChainParams, DiffusionProfile};
use crate::error::{Error, Result};
use crate::moments::CovarianceState;
use crate::quadrature::{integrate, QuadOptions};

/// coth(x) via `expm1`, accurate for both small and large arguments.
pub fn coth(x: f64) -> f64 {
    if x.is_infinite() {
        return x.signum();
    }
    1.0 + 2.0 / (2.0 * x).exp_m1()
}

/// Thermal occupation factor coth(ħω / 2k_BT); identically 1 at T = 0.
pub fn thermal_factor(params: &ChainParams, omega: f64, temp: f64) -> f64 {
    if temp == 0.0 {
        1.0
    } else {
        coth(params.hbar * omega / (2.0 * params.k_boltz * temp))
    }
}

/// Mode heat capacity in units of k_B: (x / sinh x)² with x = ħω / 2k_BT.
pub(crate) fn mode_heat_capacity(params: &ChainParams, omega: f64, temp: f64) -> f64 {
    if temp == 0.0 {
        return 0.0;
    }
    let x = params.hbar * omega / (2.0 * params.k_boltz * temp);
    if x == 0.0 {
        1.0
    } else if x > 350.0 {
        0.0
    } else {
        (x / x.sinh()).powi(2)
    }
}

/// Which phase-space variable a diffusion coefficient couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    Position,
    Momentum,
}

/// How far the diffusion circulants extend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// D_xx on site, D_ex on the two neighbours, D_pp on site only.
    #[default]
    NearestNeighbor,
    /// Every displacement, from the zone integrals summed over periodic
    /// images of the ring.
    Periodic,
    /// Every displacement, from the N-mode sum of the ring directly.
    ModeSum,
}

fn check_temperature(temp: f64) -> Result<()> {
    if temp < 0.0 || temp.is_nan() {
        Err(Error::NegativeTemperature(temp))
    } else {
        Ok(())
    }
}

/// Unrestricted zone integral for any displacement and either kind:
///
/// position: (ħ/4πm) ∫ coth(ħω/2k_BT) / ω · cos(qr) · (λ + 2γ cos q) dq
/// momentum: (ħm/4π) ∫ coth(ħω/2k_BT) · ω · cos(qr) · (λ + 2γ cos q) dq
pub fn diffusion_integral(params: &ChainParams, temp: f64, kind: DiffusionKind, r: usize) -> Result<f64> {
    params.validate()?;
    check_temperature(temp)?;
    if kind == DiffusionKind::Position && params.omega0 == 0.0 {
        return Err(Error::ZeroModeDivergence(
            "position-type zone integral diverges at q = 0 when omega0 = 0; use a mode sum",
        ));
    }
    let rf = r as f64;
    let kernel = |q: f64| {
        let w = dispersion(params, q);
        let th = thermal_factor(params, w, temp);
        let weight = params.friction_symbol(q) * (q * rf).cos();
        match kind {
            DiffusionKind::Position => th / w * weight,
            DiffusionKind::Momentum => th * w * weight,
        }
    };
    let prefactor = match kind {
        DiffusionKind::Position => params.hbar / (4.0 * PI * params.mass),
        DiffusionKind::Momentum => params.hbar * params.mass / (4.0 * PI),
    };
    // Scale the absolute tolerance to the size of the r = 0 integrand so the
    // relative accuracy does not depend on the unit system.
    let scale = kernel(0.0).abs().max(kernel(PI).abs()).max(f64::MIN_POSITIVE);
    let opts = QuadOptions {
        abs_tol: 1e-12 * scale,
        rel_tol: 1e-10,
        ..QuadOptions::default()
    };
    // Even integrand: integrate the half zone and double.
    let half = integrate(kernel, 0.0, PI, opts)?;
    Ok(2.0 * prefactor * half.value)
}

/// Diffusion coefficient by zone quadrature, restricted to the displacements
/// the model defines: r ∈ {0, 1, …} for position type, r = 0 for momentum.
pub fn quad_diffusion(params: &ChainParams, temp: f64, kind: DiffusionKind, r: usize) -> Result<f64> {
    if kind == DiffusionKind::Momentum && r != 0 {
        return Err(Error::MomentumDisplacement(r));
    }
    diffusion_integral(params, temp, kind, r)
}

/// On-site and nearest-neighbour diffusion coefficients at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionSet {
    pub d_xx: f64,
    pub d_pp: f64,
    pub d_ex: f64,
    pub temp: f64,
}

/// D_xx, D_pp and D_ex by zone quadrature.
pub fn quad_diffusion_set(params: &ChainParams, temp: f64) -> Result<DiffusionSet> {
    Ok(DiffusionSet {
        d_xx: quad_diffusion(params, temp, DiffusionKind::Position, 0)?,
        d_pp: quad_diffusion(params, temp, DiffusionKind::Momentum, 0)?,
        d_ex: quad_diffusion(params, temp, DiffusionKind::Position, 1)?,
        temp,
    })
}

/// Classical (coth x ≈ 1/x) limit of the zone integrals, in closed form.
///
/// With A = ω₀² + 2ξ/m, Ω = ω(π) = √(ω₀² + 4ξ/m) and B = 2ξ/m:
///
/// - D_pp = mλk_BT
/// - D_xx = λk_BT / (mω₀Ω) + γk_BT·(A − ω₀Ω) / (ξω₀Ω)
/// - D_ex = λk_BT·(A − ω₀Ω) / (2ξω₀Ω) + γ-term
///
/// A − ω₀Ω is evaluated as B² / (A + ω₀Ω) so the ξ → 0 limit stays finite.
pub fn high_temp_diffusion(params: &ChainParams, temp: f64) -> Result<DiffusionSet> {
    params.validate()?;
    check_temperature(temp)?;
    if params.omega0 == 0.0 {
        return Err(Error::ZeroModeDivergence(
            "high-temperature position diffusion diverges as 1/omega0",
        ));
    }
    let (m, w0, xi) = (params.mass, params.omega0, params.xi);
    let kt = params.k_boltz * temp;
    let (lam, gam) = (params.lambda_fric, params.gamma_fric);
    let a = w0 * w0 + 2.0 * xi / m;
    let big_omega = (w0 * w0 + 4.0 * xi / m).sqrt();
    let gap = w0 * big_omega;
    // (A − ω₀Ω) / ξ without cancellation.
    let excess_over_xi = 4.0 * xi / (m * m * (a + gap));

    let d_pp = m * lam * kt;
    let d_xx = lam * kt / (m * gap) + gam * kt * excess_over_xi / gap;
    let d_ex_lambda = lam * kt * excess_over_xi / (2.0 * gap);
    let d_ex_gamma =
        (2.0 * gam * kt / (m * w0 * w0)) / (1.0 + 2.0 * xi / (2.0 * xi + m * w0 * w0) + big_omega / w0);
    Ok(DiffusionSet {
        d_xx,
        d_pp,
        d_ex: d_ex_lambda + d_ex_gamma,
        temp,
    })
}

/// Source density s = (1/a)[D_pp/m + (mω₀² + 2ξ)D_xx − 2ξD_ex].
pub fn source_density(params: &ChainParams, diff: &DiffusionSet) -> f64 {
    let onsite = params.mass * params.omega0 * params.omega0 + 2.0 * params.xi;
    (diff.d_pp / params.mass + onsite * diff.d_xx - 2.0 * params.xi * diff.d_ex) / params.lattice_const
}

/// Source density implied by the r = 0, 1 entries of a diffusion profile.
pub fn source_density_from_profile(params: &ChainParams, profile: &DiffusionProfile) -> f64 {
    let set = DiffusionSet {
        d_xx: profile.xx.first().copied().unwrap_or(0.0),
        d_pp: profile.pp.first().copied().unwrap_or(0.0),
        d_ex: profile.xx.get(1).copied().unwrap_or(0.0),
        temp: params.bath_temp,
    };
    source_density(params, &set)
}

/// Decay rate of the zone-integral kernels in the displacement r: the
/// distance of the nearest complex singularity (ω² = 0) from the real axis.
fn kernel_decay_rate(params: &ChainParams) -> f64 {
    if params.xi == 0.0 {
        return f64::INFINITY;
    }
    (1.0 + params.mass * params.omega0 * params.omega0 / (2.0 * params.xi)).acosh()
}

// Beyond this many displacements the periodic-image route is abandoned in
// favour of the equivalent mode sum.
const MAX_IMAGE_REACH: usize = 4096;

/// Diffusion coefficients by displacement at temperature `temp`.
pub fn diffusion_profile(params: &ChainParams, temp: f64, stencil: Stencil) -> Result<DiffusionProfile> {
    params.validate()?;
    check_temperature(temp)?;
    let n = params.n_sites;
    match stencil {
        Stencil::NearestNeighbor => Ok(DiffusionProfile {
            xx: vec![
                quad_diffusion(params, temp, DiffusionKind::Position, 0)?,
                quad_diffusion(params, temp, DiffusionKind::Position, 1)?,
            ],
            pp: vec![quad_diffusion(params, temp, DiffusionKind::Momentum, 0)?],
        }),
        Stencil::Periodic => {
            if params.omega0 == 0.0 {
                return Err(Error::ZeroModeDivergence(
                    "periodic stencil needs convergent zone integrals; use the mode-sum stencil",
                ));
            }
            // e^{-36} ≈ 2e-16 relative to the r = 0 entry.
            let reach = (36.0 / kernel_decay_rate(params)).ceil() as usize + 2;
            let reach = reach.max(n);
            if reach > MAX_IMAGE_REACH {
                log::debug!("periodic stencil reach {reach} too long, using the mode sum");
                return diffusion_profile(params, temp, Stencil::ModeSum);
            }
            let mut ix = Vec::with_capacity(reach + 1);
            let mut ip = Vec::with_capacity(reach + 1);
            for r in 0..=reach {
                ix.push(diffusion_integral(params, temp, DiffusionKind::Position, r)?);
                ip.push(diffusion_integral(params, temp, DiffusionKind::Momentum, r)?);
            }
            let fold = |table: &[f64], d: usize| -> f64 {
                let n = n as i64;
                let reach = reach as i64;
                let mut acc = 0.0;
                let mut j = -(reach / n) - 1;
                while j * n <= reach + n {
                    let m = (d as i64 + j * n).abs();
                    if m <= reach {
                        acc += table[m as usize];
                    }
                    j += 1;
                }
                acc
            };
            Ok(DiffusionProfile {
                xx: (0..=n / 2).map(|d| fold(&ix, d)).collect(),
                pp: (0..=n / 2).map(|d| fold(&ip, d)).collect(),
            })
        }
        Stencil::ModeSum => {
            let modes = thermal_modes(params, temp)?;
            let nf = n as f64;
            let mut xx = vec![0.0; n / 2 + 1];
            let mut pp = vec![0.0; n / 2 + 1];
            for mode in &modes {
                let weight = params.friction_symbol(mode.q);
                for (d, (x, p)) in xx.iter_mut().zip(pp.iter_mut()).enumerate() {
                    let c = (mode.q * d as f64).cos() * weight / nf;
                    *x += mode.x_var * c;
                    *p += mode.p_var * c;
                }
            }
            Ok(DiffusionProfile { xx, pp })
        }
    }
}

/// Thermal second moments of one normal mode of the ring.
#[derive(Debug, Clone, Copy)]
struct ThermalMode {
    q: f64,
    x_var: f64,
    p_var: f64,
}

fn check_gibbs(params: &ChainParams, temp: f64) -> Result<()> {
    params.validate()?;
    check_temperature(temp)?;
    if params.omega0 == 0.0 && params.xi == 0.0 {
        return Err(Error::InvalidParams(vec![
            "omega0 = xi = 0: every mode is free, no Gibbs state".into(),
        ]));
    }
    Ok(())
}

/// Mode-resolved thermal variances; the free q = 0 mode of an acoustic
/// chain (ω₀ = 0) has no Gibbs state and is left out.
fn thermal_modes(params: &ChainParams, temp: f64) -> Result<Vec<ThermalMode>> {
    check_gibbs(params, temp)?;
    Ok(mode_grid(params.n_sites)
        .into_iter()
        .filter_map(|q| {
            let omega = dispersion(params, q);
            if omega == 0.0 {
                return None;
            }
            let th = thermal_factor(params, omega, temp);
            Some(ThermalMode {
                q,
                x_var: params.hbar * th / (2.0 * params.mass * omega),
                p_var: params.hbar * params.mass * omega * th / 2.0,
            })
        })
        .collect())
}

/// Displacement profiles ⟨x_k x_{k+d}⟩ and ⟨p_k p_{k+d}⟩ of the Gibbs state,
/// d = 0…N/2.
pub fn gibbs_profile(params: &ChainParams, temp: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let modes = thermal_modes(params, temp)?;
    let n = params.n_sites;
    let nf = n as f64;
    let mut xx = vec![0.0; n / 2 + 1];
    let mut pp = vec![0.0; n / 2 + 1];
    for mode in &modes {
        for (d, (x, p)) in xx.iter_mut().zip(pp.iter_mut()).enumerate() {
            let c = (mode.q * d as f64).cos() / nf;
            *x += mode.x_var * c;
            *p += mode.p_var * c;
        }
    }
    Ok((xx, pp))
}

/// Thermal covariance of the ring at temperature `temp`; the position–momentum
/// block vanishes.
pub fn gibbs_covariance(params: &ChainParams, temp: f64) -> Result<CovarianceState> {
    let (xx, pp) = gibbs_profile(params, temp)?;
    let n = params.n_sites;
    let ring = |v: &[f64], i: usize, j: usize| {
        let d = i.abs_diff(j);
        v[d.min(n - d)]
    };
    let sigma = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => ring(&xx, i, j),
        (false, false) => ring(&pp, i - n, j - n),
        _ => 0.0,
    });
    Ok(CovarianceState::new(sigma, 0.0))
}

/// Equilibrium energy density: the on-site energy of the Gibbs state divided
/// by the lattice constant.
pub fn gibbs_energy_density(params: &ChainParams, temp: f64) -> Result<f64> {
    let (xx, pp) = gibbs_profile(params, temp)?;
    let onsite = 0.5 * params.mass * params.omega0 * params.omega0 + params.xi;
    let e_site = pp[0] / (2.0 * params.mass) + onsite * xx[0] - params.xi * xx[1];
    Ok(e_site / params.lattice_const)
}

/// Heat capacity density C(T) = ∂u_eq/∂T from the analytic derivative of
/// the mode energies (ħω/2) coth(ħω/2k_BT).
pub fn heat_capacity_density(params: &ChainParams, temp: f64) -> Result<f64> {
    check_gibbs(params, temp)?;
    let per_site: f64 = mode_grid(params.n_sites)
        .into_iter()
        .map(|q| dispersion(params, q))
        .filter(|&w| w > 0.0)
        .map(|w| mode_heat_capacity(params, w, temp))
        .sum::<f64>()
        / params.n_sites as f64;
    Ok(params.k_boltz * per_site / params.lattice_const)
}

/// Thermal equilibrium at one temperature, with its energy and heat
/// capacity densities.
#[derive(Debug, Clone)]
pub struct GibbsSummary {
    pub covariance: CovarianceState,
    pub energy_density: f64,
    pub heat_capacity_density: f64,
}

pub fn gibbs_summary(params: &ChainParams, temp: f64) -> Result<GibbsSummary> {
    Ok(GibbsSummary {
        covariance: gibbs_covariance(params, temp)?,
        energy_density: gibbs_energy_density(params, temp)?,
        heat_capacity_density: heat_capacity_density(params, temp)?,
    })
}
