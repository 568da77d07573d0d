//! Reference computations that share no code path with the library
//! routines they check.

use lattice_heat::ChainParams;
use nalgebra::{DMatrix, SymmetricEigen};

/// Ring neighbour index k ± 1.
fn wrap(k: isize, n: usize) -> usize {
    k.rem_euclid(n as isize) as usize
}

/// Site-by-site transcription of the second-moment equations for ⟨x_k²⟩,
/// ⟨p_k²⟩ and ⟨x_k x_{k+1}⟩, with α = η = 0 and friction/diffusion given as
/// dense N×N site matrices.
///
/// `onsite_factor` multiplies (mω₀² + 2ξ)⟨x_k p_k⟩ in the ⟨p_k²⟩ equation;
/// the value consistent with the Hamiltonian is 2.
pub struct Transcribed {
    pub x_sq: Vec<f64>,
    pub p_sq: Vec<f64>,
    pub x_next: Vec<f64>,
}

pub fn transcribed_rates(
    sigma: &DMatrix<f64>,
    params: &ChainParams,
    friction: &DMatrix<f64>,
    d_xx: &DMatrix<f64>,
    d_pp: &DMatrix<f64>,
    onsite_factor: f64,
) -> Transcribed {
    let n = friction.nrows();
    let m = params.mass;
    let xi = params.xi;
    let xx = |i: usize, j: usize| sigma[(i, j)];
    let pp = |i: usize, j: usize| sigma[(n + i, n + j)];
    // ⟨x_i p_j⟩ and ⟨p_i x_j⟩ (symmetrized, so equal up to index order)
    let xp = |i: usize, j: usize| sigma[(i, n + j)];
    let px = |i: usize, j: usize| sigma[(n + i, j)];
    let lam = |i: usize, j: usize| friction[(i, j)];

    let mut x_sq = vec![0.0; n];
    let mut p_sq = vec![0.0; n];
    let mut x_next = vec![0.0; n];
    for k in 0..n {
        let kp = wrap(k as isize + 1, n);
        let km = wrap(k as isize - 1, n);

        let mut v = -2.0 * lam(k, k) * xx(k, k) + 2.0 * px(k, k) / m;
        for j in 0..n {
            if j != k {
                v -= 2.0 * lam(k, j) * xx(k, j);
            }
        }
        x_sq[k] = v + 2.0 * d_xx[(k, k)];

        let mut v = -2.0 * lam(k, k) * pp(k, k)
            - onsite_factor * (m * params.omega0 * params.omega0 + 2.0 * xi) * xp(k, k);
        for j in 0..n {
            if j != k {
                v -= 2.0 * lam(k, j) * pp(k, j);
                let delta = (j == km) as u8 as f64 + (j == kp) as u8 as f64;
                v += 2.0 * xi * delta * px(k, j);
            }
        }
        p_sq[k] = v + 2.0 * d_pp[(k, k)];

        let mut v = -(lam(k, k) + lam(kp, kp)) * xx(k, kp) + (xp(k, kp) + xp(kp, k)) / m;
        for j in 0..n {
            if j != k {
                v -= lam(k, j) * xx(kp, j);
            }
            if j != kp {
                v -= lam(kp, j) * xx(k, j);
            }
        }
        x_next[k] = v + 2.0 * d_xx[(k, kp)];
    }
    Transcribed { x_sq, p_sq, x_next }
}

/// Dense N×N site matrix with `diag` on the diagonal and `nn` between ring
/// neighbours.
pub fn ring_matrix(n: usize, diag: f64, nn: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if j == wrap(i as isize + 1, n) || j == wrap(i as isize - 1, n) {
            nn
        } else {
            0.0
        }
    })
}

/// Thermal covariance from a dense eigen-decomposition of the stiffness
/// matrix: Σ_xx = U diag(ħ coth(ħΩ/2kT) / 2mΩ) Uᵀ and
/// Σ_pp = U diag(ħmΩ coth(ħΩ/2kT) / 2) Uᵀ.
pub fn normal_mode_gibbs(params: &ChainParams, temp: f64) -> DMatrix<f64> {
    let n = params.n_sites;
    let m = params.mass;
    let k = ring_matrix(n, m * params.omega0 * params.omega0 + 2.0 * params.xi, -params.xi);
    let eig = SymmetricEigen::new(k);
    let mut sigma = DMatrix::zeros(2 * n, 2 * n);
    for (idx, &kval) in eig.eigenvalues.iter().enumerate() {
        let omega = (kval / m).sqrt();
        let occ = if temp == 0.0 {
            1.0
        } else {
            1.0 / (params.hbar * omega / (2.0 * params.k_boltz * temp)).tanh()
        };
        let xv = params.hbar * occ / (2.0 * m * omega);
        let pv = params.hbar * m * omega * occ / 2.0;
        let u = eig.eigenvectors.column(idx);
        for i in 0..n {
            for j in 0..n {
                let uu = u[i] * u[j];
                sigma[(i, j)] += xv * uu;
                sigma[(n + i, n + j)] += pv * uu;
            }
        }
    }
    sigma
}

/// High-temperature diffusion coefficients exactly as printed, including
/// the neighbour-friction (γ) terms.
pub struct PrintedHighTemp {
    pub d_xx: f64,
    pub d_pp: f64,
    pub d_ex: f64,
}

pub fn printed_high_temp(params: &ChainParams, temp: f64) -> PrintedHighTemp {
    let (m, w0, xi) = (params.mass, params.omega0, params.xi);
    let (lam, gam) = (params.lambda_fric, params.gamma_fric);
    let kt = params.k_boltz * temp;
    let root = (w0 * w0 + 4.0 * xi / m).sqrt();
    let bracket = (w0 * w0 + 2.0 * xi / m - w0 * root) / root;
    PrintedHighTemp {
        d_xx: lam * kt / (m * w0 * root) + gam * kt / (xi * w0) * bracket,
        d_pp: m * lam * kt,
        d_ex: lam * kt / (xi * w0) * bracket
            + (2.0 * gam * kt / (m * w0 * w0))
                / (1.0 + 2.0 * xi / (2.0 * xi + m * w0 * w0) + (1.0 + 4.0 * xi / (m * w0 * w0)).sqrt()),
    }
}

/// Closed-form solution of u_t = D u_xx − ρu + s on a periodic domain of
/// length `length`, for u(x, 0) = bg + amp·exp(−(x − c)²/2w²) (images summed).
#[allow(clippy::too_many_arguments)]
pub fn heat_green(x: f64, t: f64, length: f64, diff: f64, rate: f64, source: f64, bg: f64, amp: f64, c: f64, w: f64) -> f64 {
    let var = w * w + 2.0 * diff * t;
    let images: f64 = (-8..=8)
        .map(|j| {
            let d = x - c + j as f64 * length;
            (-0.5 * d * d / var).exp()
        })
        .sum();
    let decay = (-rate * t).exp();
    let eq = source / rate;
    eq + (bg - eq) * decay + amp * w / var.sqrt() * images * decay
}

/// Total energy ½tr(KΣ_xx) + tr(Σ_pp)/2m from dense traces.
pub fn trace_energy(sigma: &DMatrix<f64>, params: &ChainParams) -> f64 {
    let n = params.n_sites;
    let k = ring_matrix(n, params.mass * params.omega0 * params.omega0 + 2.0 * params.xi, -params.xi);
    let sxx = sigma.view((0, 0), (n, n));
    let spp = sigma.view((n, n), (n, n));
    0.5 * (k * sxx).trace() + spp.trace() / (2.0 * params.mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_gibbs_variances() {
        // ξ = 0 leaves independent oscillators.
        let p = ChainParams {
            n_sites: 3,
            xi: 0.0,
            omega0: 2.0,
            ..ChainParams::default()
        };
        let s = normal_mode_gibbs(&p, 0.0);
        assert!((s[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((s[(3, 3)] - 1.0).abs() < 1e-14);
        assert!(s[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn green_function_at_time_zero() {
        let u = heat_green(3.0, 0.0, 1000.0, 1.0, 0.1, 0.5, 2.0, 1.0, 3.0, 1.0);
        assert!((u - 3.0).abs() < 1e-14);
    }

    #[test]
    fn ring_matrix_wraps() {
        let k = ring_matrix(4, 2.0, -1.0);
        assert_eq!(k[(0, 3)], -1.0);
        assert_eq!(k[(0, 2)], 0.0);
    }
}
