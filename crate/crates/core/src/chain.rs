//! Lattice and bath parameters, phonon dispersion, and the matrices that
//! generate the second-moment dynamics of the damped harmonic ring.
//!
//! Phase-space ordering is fixed as `(x_1 … x_N, p_1 … p_N)`. Every N×N
//! block that appears (stiffness, friction, diffusion) is a symmetric
//! circulant, which is what the Fourier-space solvers downstream rely on.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the chain and of the bath it is coupled to.
///
/// Keys missing from a serialized form take their [`Default`] values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainParams {
    pub n_sites: usize,
    pub mass: f64,
    pub omega0: f64,
    pub xi: f64,
    pub lattice_const: f64,
    /// On-site friction λ_kk.
    #[serde(rename = "lambda")]
    pub lambda_fric: f64,
    /// Nearest-neighbour friction λ_{k,k±1}.
    #[serde(rename = "gamma")]
    pub gamma_fric: f64,
    pub hbar: f64,
    pub k_boltz: f64,
    pub bath_temp: f64,
}

impl Default for ChainParams {
    /// Natural-unit parameter set used by `verify`.
    fn default() -> Self {
        Self {
            n_sites: 64,
            mass: 1.0,
            omega0: 1.0,
            xi: 1.0,
            lattice_const: 1.0,
            lambda_fric: 0.1,
            gamma_fric: 0.0,
            hbar: 1.0,
            k_boltz: 1.0,
            bath_temp: 2.0,
        }
    }
}

impl ChainParams {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };
        check(self.n_sites >= 3, format!("n_sites = {} (need >= 3)", self.n_sites));
        check(
            self.mass.is_finite() && self.mass > 0.0,
            format!("mass = {} (need > 0)", self.mass),
        );
        check(
            self.omega0.is_finite() && self.omega0 >= 0.0,
            format!("omega0 = {} (need >= 0)", self.omega0),
        );
        check(
            self.xi.is_finite() && self.xi >= 0.0,
            format!("xi = {} (need >= 0)", self.xi),
        );
        check(
            self.lattice_const.is_finite() && self.lattice_const > 0.0,
            format!("lattice_const = {} (need > 0)", self.lattice_const),
        );
        check(
            self.lambda_fric.is_finite() && self.lambda_fric > 0.0,
            format!("lambda = {} (need > 0)", self.lambda_fric),
        );
        check(
            self.gamma_fric.is_finite() && self.gamma_fric >= 0.0,
            format!("gamma = {} (need >= 0)", self.gamma_fric),
        );
        check(
            2.0 * self.gamma_fric <= self.lambda_fric,
            format!(
                "gamma = {} exceeds lambda/2 = {} (diffusion would not be PSD)",
                self.gamma_fric,
                self.lambda_fric / 2.0
            ),
        );
        check(
            self.hbar.is_finite() && self.hbar > 0.0,
            format!("hbar = {} (need > 0)", self.hbar),
        );
        check(
            self.k_boltz.is_finite() && self.k_boltz > 0.0,
            format!("k_boltz = {} (need > 0)", self.k_boltz),
        );
        check(
            self.bath_temp.is_finite() && self.bath_temp >= 0.0,
            format!("bath_temp = {} (need >= 0)", self.bath_temp),
        );
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }

    /// Highest phonon frequency, reached at the zone edge.
    pub fn omega_max(&self) -> f64 {
        dispersion(self, PI)
    }

    /// Sound velocity a·√(ξ/m) of the acoustic branch.
    pub fn sound_velocity(&self) -> f64 {
        self.lattice_const * (self.xi / self.mass).sqrt()
    }

    /// Friction symbol λ + 2γ cos q.
    pub fn friction_symbol(&self, q: f64) -> f64 {
        self.lambda_fric + 2.0 * self.gamma_fric * q.cos()
    }
}

/// Phonon dispersion ω(q) = √(ω₀² + (4ξ/m) sin²(q/2)) with dimensionless q.
pub fn dispersion(params: &ChainParams, q: f64) -> f64 {
    let s = (0.5 * q).sin();
    (params.omega0 * params.omega0 + 4.0 * params.xi / params.mass * s * s).sqrt()
}

/// Group velocity dω/dq in frequency units (multiply by `a` for length/time).
///
/// At the acoustic zero mode (ω₀ = 0, q = 0) the one-sided limit √(ξ/m) is
/// returned.
pub fn group_velocity(params: &ChainParams, q: f64) -> f64 {
    let w = dispersion(params, q);
    if w == 0.0 {
        return (params.xi / params.mass).sqrt();
    }
    if params.omega0 == 0.0 {
        // (ξ/m) sin q / ω loses precision as both vanish near q = 0.
        return (params.xi / params.mass).sqrt() * (0.5 * q).cos() * q.signum();
    }
    params.xi / params.mass * q.sin() / w
}

/// Wavenumbers 2πn/N, n = 0…N−1, folded into (−π, π].
pub fn mode_grid(n_sites: usize) -> Vec<f64> {
    (0..n_sites)
        .map(|n| {
            if 2 * n <= n_sites {
                2.0 * PI * n as f64 / n_sites as f64
            } else {
                2.0 * PI * (n as f64 - n_sites as f64) / n_sites as f64
            }
        })
        .collect()
}

/// Symmetric circulant N×N matrix stored by displacement: entry (i, j) is
/// `coeffs[d]` with d the ring distance between i and j, and zero when d is
/// beyond the stored range.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCirculant {
    n: usize,
    coeffs: Vec<f64>,
}

impl SymmetricCirculant {
    pub fn new(n: usize, mut coeffs: Vec<f64>) -> Self {
        coeffs.truncate(n / 2 + 1);
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { n, coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, vec![0.0])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at ring distance `d`.
    pub fn at_distance(&self, d: usize) -> f64 {
        let d = d % self.n;
        let d = d.min(self.n - d);
        self.coeffs.get(d).copied().unwrap_or(0.0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        self.at_distance(d)
    }

    /// Largest displacement with a stored coefficient.
    pub fn reach(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Eigenvalue on the Fourier mode e^{iqk}.
    pub fn symbol(&self, q: f64) -> f64 {
        (0..self.n)
            .map(|d| self.at_distance(d) * (q * d as f64).cos())
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Writes `scale · C · src` into `dst` (accumulating), where `src` and
    /// `dst` are length-N slices.
    pub(crate) fn apply_acc(&self, scale: f64, src: &[f64], dst: &mut [f64]) {
        let n = self.n;
        let reach = self.reach();
        for (i, out) in dst.iter_mut().enumerate() {
            let mut acc = self.coeffs[0] * src[i];
            for d in 1..=reach {
                let c = self.coeffs[d];
                if c == 0.0 {
                    continue;
                }
                let fwd = src[(i + d) % n];
                // For even N the zone-edge partner coincides with itself.
                if 2 * d == n {
                    acc += c * fwd;
                } else {
                    acc += c * (fwd + src[(i + n - d) % n]);
                }
            }
            *out += scale * acc;
        }
    }
}

/// Bath-induced diffusion coefficients by displacement, as produced by the
/// diffusion module: `xx[r]` = D_{x_k x_{k+r}}, `pp[r]` = D_{p_k p_{k+r}}.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionProfile {
    pub xx: Vec<f64>,
    pub pp: Vec<f64>,
}

impl DiffusionProfile {
    pub fn zero() -> Self {
        Self {
            xx: vec![0.0],
            pp: vec![0.0],
        }
    }
}

/// Drift and diffusion generators of dΣ/dt = AΣ + ΣAᵀ + 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    mass: f64,
    stiffness: SymmetricCirculant,
    friction: SymmetricCirculant,
    diffusion_xx: SymmetricCirculant,
    diffusion_pp: SymmetricCirculant,
}

/// Stiffness circulant K: mω₀² + 2ξ on the diagonal, −ξ on the neighbours.
pub fn stiffness(params: &ChainParams) -> SymmetricCirculant {
    SymmetricCirculant::new(
        params.n_sites,
        vec![
            params.mass * params.omega0 * params.omega0 + 2.0 * params.xi,
            -params.xi,
        ],
    )
}

/// Friction circulant Λ: λ on the diagonal, γ on the neighbours.
pub fn friction(params: &ChainParams) -> SymmetricCirculant {
    SymmetricCirculant::new(params.n_sites, vec![params.lambda_fric, params.gamma_fric])
}

/// Assembles the drift and diffusion matrices for a validated parameter set
/// and a diffusion profile evaluated at the bath temperature.
pub fn build_matrices(params: &ChainParams, diffusion: &DiffusionProfile) -> Result<ModelMatrices> {
    params.validate()?;
    let n = params.n_sites;
    Ok(ModelMatrices {
        mass: params.mass,
        stiffness: stiffness(params),
        friction: friction(params),
        diffusion_xx: SymmetricCirculant::new(n, diffusion.xx.clone()),
        diffusion_pp: SymmetricCirculant::new(n, diffusion.pp.clone()),
    })
}

impl ModelMatrices {
    /// Closed (Hamiltonian) chain: no friction, no diffusion.
    pub fn hamiltonian(params: &ChainParams) -> Self {
        let n = params.n_sites;
        Self {
            mass: params.mass,
            stiffness: stiffness(params),
            friction: SymmetricCirculant::zeros(n),
            diffusion_xx: SymmetricCirculant::zeros(n),
            diffusion_pp: SymmetricCirculant::zeros(n),
        }
    }

    pub fn from_parts(
        mass: f64,
        stiffness: SymmetricCirculant,
        friction: SymmetricCirculant,
        diffusion_xx: SymmetricCirculant,
        diffusion_pp: SymmetricCirculant,
    ) -> Result<Self> {
        let n = stiffness.dim();
        for c in [&friction, &diffusion_xx, &diffusion_pp] {
            if c.dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: c.dim(),
                });
            }
        }
        Ok(Self {
            mass,
            stiffness,
            friction,
            diffusion_xx,
            diffusion_pp,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn stiffness(&self) -> &SymmetricCirculant {
        &self.stiffness
    }

    pub fn friction(&self) -> &SymmetricCirculant {
        &self.friction
    }

    pub fn diffusion_xx(&self) -> &SymmetricCirculant {
        &self.diffusion_xx
    }

    pub fn diffusion_pp(&self) -> &SymmetricCirculant {
        &self.diffusion_pp
    }

    /// Dense drift A = [[−Λ, I/m], [−K, −Λ]].
    pub fn drift(&self) -> DMatrix<f64> {
        let n = self.n_sites();
        let lam = self.friction.to_dense();
        let k = self.stiffness.to_dense();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, 0), (n, n)).copy_from(&(-&lam));
        a.view_mut((n, n), (n, n)).copy_from(&(-&lam));
        a.view_mut((n, 0), (n, n)).copy_from(&(-&k));
        for i in 0..n {
            a[(i, n + i)] = 1.0 / self.mass;
        }
        a
    }

    /// Dense diffusion D = diag(Dˣˣ, Dᵖᵖ).
    pub fn diffusion(&self) -> DMatrix<f64> {
        let n = self.n_sites();
        let mut d = DMatrix::zeros(2 * n, 2 * n);
        d.view_mut((0, 0), (n, n)).copy_from(&self.diffusion_xx.to_dense());
        d.view_mut((n, n), (n, n)).copy_from(&self.diffusion_pp.to_dense());
        d
    }

    /// Applies the drift to a length-2N column: `dst = A · src`.
    pub(crate) fn apply_drift(&self, src: &[f64], dst: &mut [f64]) {
        let n = self.n_sites();
        let (sx, sp) = src.split_at(n);
        let (dx, dp) = dst.split_at_mut(n);
        for (o, p) in dx.iter_mut().zip(sp) {
            *o = p / self.mass;
        }
        dp.fill(0.0);
        self.friction.apply_acc(-1.0, sx, dx);
        self.stiffness.apply_acc(-1.0, sx, dp);
        self.friction.apply_acc(-1.0, sp, dp);
    }

    /// Per-mode 2×2 drift [[−Λ_q, 1/m], [−K_q, −Λ_q]] and diffusion
    /// (Dˣˣ_q, Dᵖᵖ_q) for wavenumber q.
    pub fn mode_blocks(&self, q: f64) -> ModeBlock {
        ModeBlock {
            damping: self.friction.symbol(q),
            stiffness: self.stiffness.symbol(q),
            inv_mass: 1.0 / self.mass,
            dxx: self.diffusion_xx.symbol(q),
            dpp: self.diffusion_pp.symbol(q),
        }
    }
}

/// Fourier-space view of the generators on a single mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBlock {
    pub damping: f64,
    pub stiffness: f64,
    pub inv_mass: f64,
    pub dxx: f64,
    pub dpp: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ChainParams {
        ChainParams {
            n_sites: 4,
            mass: 1.3,
            omega0: 0.7,
            xi: 0.9,
            lattice_const: 1.0,
            lambda_fric: 0.2,
            gamma_fric: 0.05,
            ..ChainParams::default()
        }
    }

    #[test]
    fn dispersion_limits() {
        let mut p = ChainParams {
            omega0: 3.0,
            xi: 1e-14,
            ..ChainParams::default()
        };
        assert_relative_eq!(dispersion(&p, 1.1), 3.0, max_relative = 1e-12);
        p.omega0 = 0.0;
        p.xi = 1.0;
        assert_relative_eq!(dispersion(&p, PI), 2.0, max_relative = 1e-15);
        p.omega0 = 1.0;
        assert_relative_eq!(dispersion(&p, PI / 2.0), 3f64.sqrt(), max_relative = 1e-15);
        assert_eq!(dispersion(&p, 0.4), dispersion(&p, -0.4));
    }

    #[test]
    fn dispersion_matches_dense_stiffness_spectrum() {
        let p = ChainParams {
            n_sites: 64,
            ..ChainParams::default()
        };
        let k = stiffness(&p).to_dense();
        let q = PI / 2.0;
        let v = nalgebra::DVector::from_fn(64, |i, _| (q * i as f64).cos());
        let kv = &k * &v;
        let w2 = dispersion(&p, q).powi(2) * p.mass;
        for i in 0..64 {
            assert_relative_eq!(kv[i], w2 * v[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn acoustic_group_velocity_matches_slope() {
        let p = ChainParams {
            omega0: 0.0,
            xi: 2.0,
            mass: 0.5,
            ..ChainParams::default()
        };
        // |sin(q/2)| kinks at 0, so difference centrally just beside it.
        let (q, h) = (1e-6, 1e-7);
        let fd = (dispersion(&p, q + h) - dispersion(&p, q - h)) / (2.0 * h);
        assert_relative_eq!(fd, 2.0, max_relative = 1e-6);
        assert_relative_eq!(group_velocity(&p, 0.0), 2.0);
        let h = 1e-6;
        let q = 0.3;
        let fd = (dispersion(&p, q + h) - dispersion(&p, q - h)) / (2.0 * h);
        assert_relative_eq!(group_velocity(&p, q), fd, max_relative = 1e-8);
    }

    #[test]
    fn mode_grids() {
        let g = mode_grid(4);
        assert_eq!(g, vec![0.0, PI / 2.0, PI, -PI / 2.0]);
        let g = mode_grid(3);
        assert_relative_eq!(g[1], 2.0 * PI / 3.0);
        assert_relative_eq!(g[2], -2.0 * PI / 3.0);
        assert!(mode_grid(6).contains(&PI));
    }

    #[test]
    fn validation_lists_every_offence() {
        let p = ChainParams {
            n_sites: 2,
            mass: -1.0,
            gamma_fric: 1.0,
            ..ChainParams::default()
        };
        match p.validate() {
            Err(Error::InvalidParams(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn drift_blocks_without_neighbour_friction() {
        let p = ChainParams {
            gamma_fric: 0.0,
            ..params()
        };
        let m = build_matrices(&p, &DiffusionProfile::zero()).unwrap();
        let a = m.drift();
        let n = 4;
        for k in 0..n {
            assert_eq!(a[(k, k)], -p.lambda_fric);
            assert_eq!(a[(k, (k + 1) % n)], 0.0);
            let kk = p.mass * p.omega0.powi(2) + 2.0 * p.xi;
            assert_eq!(a[(n + k, k)], -kk);
            assert_eq!(a[(n + k, (k + 1) % n)], p.xi);
            assert_eq!(a[(n + k, (k + n - 1) % n)], p.xi);
            assert_eq!(a[(k, n + k)], 1.0 / p.mass);
        }
    }

    #[test]
    fn decoupled_chain_is_block_diagonal() {
        let p = ChainParams {
            xi: 0.0,
            gamma_fric: 0.0,
            ..params()
        };
        let a = build_matrices(&p, &DiffusionProfile::zero()).unwrap().drift();
        let n = 4;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if i % n != j % n {
                    assert_eq!(a[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn drift_is_dissipative() {
        let m = build_matrices(&params(), &DiffusionProfile::zero()).unwrap();
        for ev in m.drift().complex_eigenvalues().iter() {
            assert!(ev.re <= 1e-12, "{ev}");
        }
    }

    #[test]
    fn drift_commutes_with_cyclic_shift() {
        let m = build_matrices(&params(), &DiffusionProfile::zero()).unwrap();
        let a = m.drift();
        let n = 4;
        let shift = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let (bi, si) = (i / n, i % n);
            let (bj, sj) = (j / n, j % n);
            if bi == bj && sj == (si + 1) % n {
                1.0
            } else {
                0.0
            }
        });
        assert_eq!(&shift * &a, &a * &shift);
    }

    #[test]
    fn structured_drift_matches_dense() {
        let p = ChainParams {
            n_sites: 6,
            ..params()
        };
        let m = build_matrices(&p, &DiffusionProfile::zero()).unwrap();
        let a = m.drift();
        let src: Vec<f64> = (0..12).map(|i| (i as f64 * 0.77).sin()).collect();
        let mut dst = vec![0.0; 12];
        m.apply_drift(&src, &mut dst);
        let dense = &a * nalgebra::DVector::from_vec(src);
        for i in 0..12 {
            assert_relative_eq!(dst[i], dense[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn circulant_even_ring_zone_edge() {
        let c = SymmetricCirculant::new(4, vec![1.0, 0.5, 0.25]);
        let dense = c.to_dense();
        assert_eq!(dense[(0, 2)], 0.25);
        let src = [1.0, 2.0, 3.0, 4.0];
        let mut dst = [0.0; 4];
        c.apply_acc(1.0, &src, &mut dst);
        let expect = &dense * nalgebra::DVector::from_row_slice(&src);
        for i in 0..4 {
            assert_relative_eq!(dst[i], expect[i]);
        }
        assert_relative_eq!(c.symbol(PI), 1.0 - 1.0 + 0.25);
    }
}
