//! Continuum limit of the chain: transport coefficients, the heat equation
//! with decay and source, and the discrete-versus-continuum comparison.

mod compare;
mod heat;

pub use compare::{compare_discrete_continuum, CompareReport, CompareScenario};
pub use heat::{fourier_current, solve_heat, ContinuumField, HeatProblem, HeatSolver};

use serde::{Deserialize, Serialize};

use crate::chain::{group_velocity, mode_grid, ChainParams};
use crate::diffusion::{heat_capacity_density, mode_heat_capacity};
use crate::error::Result;

/// Transport coefficients of the continuum heat equation at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportCoefficients {
    /// b = (a/2λ)√(ξ/m)
    pub range_b: f64,
    /// v_eff = a√(ξ/m)
    pub eff_velocity: f64,
    /// 2λb² = a²ξ/(2λm)
    pub diff_const: f64,
    /// κ = 2λb²·C(T)
    pub kappa: f64,
    /// σ = κa/k_B at high temperature, i.e. a²ξ/(2λm)
    pub sigma_diffusivity: f64,
    pub heat_capacity: f64,
    pub temp: f64,
}

pub fn transport_coefficients(params: &ChainParams, temp: f64) -> Result<TransportCoefficients> {
    params.validate()?;
    let a = params.lattice_const;
    let sound = (params.xi / params.mass).sqrt();
    let range_b = a / (2.0 * params.lambda_fric) * sound;
    let eff_velocity = a * sound;
    let diff_const = 2.0 * params.lambda_fric * range_b * range_b;
    let heat_capacity = heat_capacity_density(params, temp)?;
    Ok(TransportCoefficients {
        range_b,
        eff_velocity,
        diff_const,
        kappa: diff_const * heat_capacity,
        sigma_diffusivity: a * a * params.xi / (2.0 * params.lambda_fric * params.mass),
        heat_capacity,
        temp,
    })
}

/// Phonon velocity used in the mode-sum conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityModel {
    /// a·dω/dq from the full dispersion.
    #[default]
    Dispersion,
    /// a√(ξ/m) for every mode, the long-wavelength slope of the acoustic chain.
    LongWavelength,
}

/// Mode-sum conductivity κ = (1/Na) Σ_q v(q)·v(q)τ·∂ε(q,T)/∂T with a
/// q-independent relaxation time τ = 1/2λ.
pub fn klemens_conductivity(params: &ChainParams, temp: f64, velocity: VelocityModel) -> Result<f64> {
    // Same validity checks as the heat capacity it is compared against.
    heat_capacity_density(params, temp)?;
    let a = params.lattice_const;
    let tau = 0.5 / params.lambda_fric;
    let long = a * (params.xi / params.mass).sqrt();
    let sum: f64 = mode_grid(params.n_sites)
        .into_iter()
        .map(|q| {
            let v = match velocity {
                VelocityModel::Dispersion => a * group_velocity(params, q),
                VelocityModel::LongWavelength => long,
            };
            let omega = crate::chain::dispersion(params, q);
            // The free q = 0 mode of an acoustic ring has no thermal state
            // and is left out, as in the heat capacity.
            let c = if omega > 0.0 {
                mode_heat_capacity(params, omega, temp)
            } else {
                0.0
            };
            v * v * tau * params.k_boltz * c
        })
        .sum();
    Ok(sum / (params.n_sites as f64 * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn acoustic(n: usize) -> ChainParams {
        ChainParams {
            n_sites: n,
            omega0: 0.0,
            ..ChainParams::default()
        }
    }

    #[test]
    fn coefficient_identities() {
        let p = ChainParams {
            lambda_fric: 0.37,
            xi: 2.3,
            mass: 0.7,
            lattice_const: 1.9,
            ..ChainParams::default()
        };
        let c = transport_coefficients(&p, 3.0).unwrap();
        assert_relative_eq!(c.diff_const, c.eff_velocity * c.range_b, max_relative = 1e-15);
        assert_relative_eq!(c.diff_const, c.sigma_diffusivity, max_relative = 1e-15);
        assert_relative_eq!(c.kappa, c.diff_const * c.heat_capacity, max_relative = 1e-15);
    }

    #[test]
    fn high_temperature_kappa() {
        let p = ChainParams {
            lambda_fric: 0.5,
            ..acoustic(256)
        };
        let c = transport_coefficients(&p, 1e5).unwrap();
        // One of the 256 modes is the free translation.
        assert_relative_eq!(c.kappa, 255.0 / 256.0, max_relative = 1e-6);
        assert_relative_eq!(c.sigma_diffusivity, 1.0);
    }

    #[test]
    fn frozen_chain_does_not_conduct() {
        let p = ChainParams::default();
        assert_eq!(transport_coefficients(&p, 0.0).unwrap().kappa, 0.0);
        assert_eq!(klemens_conductivity(&p, 0.0, VelocityModel::Dispersion).unwrap(), 0.0);
    }

    #[test]
    fn effective_velocity_is_the_acoustic_slope() {
        let p = ChainParams {
            xi: 2.0,
            mass: 0.5,
            lattice_const: 1.5,
            ..acoustic(64)
        };
        let h = 1e-6;
        let slope = p.lattice_const * (crate::chain::dispersion(&p, h) - crate::chain::dispersion(&p, 0.0)) / h;
        let c = transport_coefficients(&p, 1.0).unwrap();
        assert_relative_eq!(c.eff_velocity, slope, max_relative = 1e-9);
    }

    #[test]
    fn mode_sum_converges_in_ring_size() {
        let base = ChainParams::default();
        let k512 = klemens_conductivity(&ChainParams { n_sites: 512, ..base.clone() }, 1.0, VelocityModel::Dispersion).unwrap();
        let k1024 = klemens_conductivity(&ChainParams { n_sites: 1024, ..base }, 1.0, VelocityModel::Dispersion).unwrap();
        assert!((k512 - k1024).abs() <= 1e-3 * k1024);
    }

    #[test]
    fn long_wavelength_velocity_reproduces_continuum_kappa() {
        let p = acoustic(1024);
        let t = 50.0 * p.omega_max();
        let k = klemens_conductivity(&p, t, VelocityModel::LongWavelength).unwrap();
        let c = transport_coefficients(&p, t).unwrap();
        assert_relative_eq!(k, c.kappa, max_relative = 1e-12);
    }

    #[test]
    fn zone_edge_slowdown_lowers_the_mode_sum() {
        let p = acoustic(1024);
        let t = 0.1 * p.hbar * p.omega_max() / p.k_boltz;
        let k = klemens_conductivity(&p, t, VelocityModel::Dispersion).unwrap();
        let c = transport_coefficients(&p, t).unwrap();
        assert!(k < c.kappa);
        // High temperature: ⟨cos²(q/2)⟩ over the zone is 1/2.
        let t = 1e4;
        let k = klemens_conductivity(&p, t, VelocityModel::Dispersion).unwrap();
        let c = transport_coefficients(&p, t).unwrap();
        assert_relative_eq!(k / c.kappa, 0.5, max_relative = 1e-3);
    }
}
