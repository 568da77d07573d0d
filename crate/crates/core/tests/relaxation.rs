use lattice_heat::chain::{build_matrices, ChainParams};
use lattice_heat::diffusion::{diffusion_profile, gibbs_covariance, source_density_from_profile, Stencil};
use lattice_heat::moments::{
    evolve, evolve_trajectory, gaussian_profile, hotspot_state, site_observables, stationary_covariance,
    top_hat_profile, EvolveOptions, Preparation,
};
use proptest::prelude::*;

fn ring(n: usize, gamma: f64) -> ChainParams {
    ChainParams {
        n_sites: n,
        gamma_fric: gamma,
        ..ChainParams::default()
    }
}

#[test]
fn total_energy_follows_the_exponential_law() {
    let p = ring(16, 0.0);
    let prof = diffusion_profile(&p, p.bath_temp, Stencil::NearestNeighbor).unwrap();
    let m = build_matrices(&p, &prof).unwrap();
    let u_eq = 16.0 * source_density_from_profile(&p, &prof) / (2.0 * p.lambda_fric);
    let init = hotspot_state(&p, 8.0, p.bath_temp, &top_hat_profile(16, &[3, 4, 5]), Preparation::Diagonal).unwrap();
    let u0 = site_observables(&init, &p).total_energy;
    let traj = evolve_trajectory(&init, &m, &EvolveOptions::new(10.0, 0.02).stride(50)).unwrap();
    for s in &traj {
        let exact = u_eq + (u0 - u_eq) * (-2.0 * p.lambda_fric * s.time).exp();
        let got = site_observables(s, &p).total_energy;
        assert!((got - exact).abs() < 1e-10 * exact, "t = {}: {got} vs {exact}", s.time);
    }
}

#[test]
fn hotspot_relaxes_to_the_stationary_state() {
    let p = ChainParams {
        lambda_fric: 0.5,
        ..ring(8, 0.05)
    };
    let prof = diffusion_profile(&p, p.bath_temp, Stencil::Periodic).unwrap();
    let m = build_matrices(&p, &prof).unwrap();
    let init = hotspot_state(&p, 6.0, p.bath_temp, &gaussian_profile(8, 2.0, 1.0), Preparation::LocalGibbs).unwrap();
    let end = evolve(&init, &m, &EvolveOptions::new(40.0, 0.05), |_| {}).unwrap();
    let gibbs = gibbs_covariance(&p, p.bath_temp).unwrap();
    let stat = stationary_covariance(&m).unwrap();
    assert!((&stat.sigma - &gibbs.sigma).amax() < 1e-12 * gibbs.sigma.amax());
    assert!((&end.sigma - &gibbs.sigma).amax() < 1e-6 * gibbs.sigma.amax());
}

#[test]
fn heat_spreads_symmetrically_from_a_centred_hotspot() {
    let p = ring(16, 0.0);
    let prof = diffusion_profile(&p, p.bath_temp, Stencil::Periodic).unwrap();
    let m = build_matrices(&p, &prof).unwrap();
    let init = hotspot_state(&p, 9.0, p.bath_temp, &gaussian_profile(16, 8.0, 1.5), Preparation::LocalGibbs).unwrap();
    let end = evolve(&init, &m, &EvolveOptions::new(5.0, 0.05), |_| {}).unwrap();
    let obs = site_observables(&end, &p);
    for d in 1..8 {
        let (l, r) = (obs.energies[8 - d], obs.energies[8 + d]);
        assert!((l - r).abs() < 1e-10 * l);
    }
    // Energy flows outwards on both sides of the centre.
    assert!(obs.currents[10] > 0.0 && obs.currents[7] < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_keeps_sigma_symmetric_and_positive(
        n in 3usize..9,
        gamma_frac in 0.0f64..0.5,
        t_hot in 0.0f64..20.0,
        centre in 0.0f64..8.0,
        width in 0.5f64..3.0,
    ) {
        let p = ring(n, gamma_frac * 0.1);
        let prof = diffusion_profile(&p, p.bath_temp, Stencil::ModeSum).unwrap();
        let m = build_matrices(&p, &prof).unwrap();
        let init = hotspot_state(&p, p.bath_temp + t_hot, p.bath_temp, &gaussian_profile(n, centre, width), Preparation::LocalGibbs).unwrap();
        let traj = evolve_trajectory(&init, &m, &EvolveOptions::new(3.0, 0.05).stride(10)).unwrap();
        for s in traj {
            prop_assert!((&s.sigma - s.sigma.transpose()).amax() == 0.0);
            prop_assert!(s.check_psd(1e-10).is_ok());
            prop_assert!(s.uncertainty_violation(p.hbar) < 1e-9);
        }
    }
}
