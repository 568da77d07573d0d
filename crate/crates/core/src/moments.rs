//! Second-moment dynamics dΣ/dt = AΣ + ΣAᵀ + 2D of the damped ring: time
//! stepping, the stationary state, and per-site energy and current
//! observables.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::Serialize;

use crate::chain::{mode_grid, ChainParams, ModelMatrices};
use crate::diffusion::gibbs_covariance;
use crate::error::{Error, Result};

/// Symmetric matrix of symmetrized second moments in the ordering
/// (x_1 … x_N, p_1 … p_N), stamped with the time it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub sigma: DMatrix<f64>,
    pub time: f64,
}

impl CovarianceState {
    /// Wraps `sigma`, replacing it by its symmetric part.
    pub fn new(sigma: DMatrix<f64>, time: f64) -> Self {
        let mut state = Self { sigma, time };
        state.symmetrize();
        state
    }

    pub fn n_sites(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn symmetrize(&mut self) {
        let n = self.sigma.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.sigma[(i, j)] + self.sigma[(j, i)]);
                self.sigma[(i, j)] = avg;
                self.sigma[(j, i)] = avg;
            }
        }
    }

    /// ⟨x_i x_j⟩
    pub fn xx(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i, j)]
    }

    /// ⟨p_i p_j⟩
    pub fn pp(&self, i: usize, j: usize) -> f64 {
        let n = self.n_sites();
        self.sigma[(n + i, n + j)]
    }

    /// ⟨x_i p_j⟩ (symmetrized)
    pub fn xp(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i, self.n_sites() + j)]
    }

    /// Smallest and largest eigenvalue.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let eig = self.sigma.clone().symmetric_eigenvalues();
        (eig.min(), eig.max())
    }

    /// Fails unless the smallest eigenvalue is at least `-tol` times the
    /// largest.
    ///
    /// A Cholesky factorization of Σ + tol·max(diag)·I settles the common
    /// case; the eigen-decomposition only runs when that fails.
    pub fn check_psd(&self, tol: f64) -> Result<()> {
        let max_diag = self.sigma.diagonal().max();
        let mut shifted = self.sigma.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += tol * max_diag.abs();
        }
        if shifted.cholesky().is_some() {
            return Ok(());
        }
        let (min_eig, max_eig) = self.spectrum_bounds();
        if min_eig >= -tol * max_eig.abs() {
            Ok(())
        } else {
            Err(Error::NotPsd {
                time: self.time,
                min_eig,
                max_eig,
            })
        }
    }

    /// Largest violation of the single-site uncertainty relation
    /// ⟨x²⟩⟨p²⟩ − ⟨xp⟩² ≥ ħ²/4, as a fraction of ħ²/4 (0 if none).
    pub fn uncertainty_violation(&self, hbar: f64) -> f64 {
        let bound = 0.25 * hbar * hbar;
        (0..self.n_sites())
            .map(|k| {
                let det = self.xx(k, k) * self.pp(k, k) - self.xp(k, k).powi(2);
                ((bound - det) / bound).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

fn check_dims(state: &CovarianceState, matrices: &ModelMatrices) -> Result<()> {
    let expected = 2 * matrices.n_sites();
    let (r, c) = state.sigma.shape();
    if r != expected || c != expected {
        return Err(Error::Dimension {
            expected,
            got: r.max(c),
        });
    }
    Ok(())
}

// out = AΣ + (AΣ)ᵀ + 2D, using the banded structure of A and D.
fn rhs_into(sigma: &DMatrix<f64>, matrices: &ModelMatrices, a_sigma: &mut DMatrix<f64>, out: &mut DMatrix<f64>) {
    let dim = sigma.nrows();
    let n = dim / 2;
    for c in 0..dim {
        let src = sigma.column(c);
        let mut dst = a_sigma.column_mut(c);
        matrices.apply_drift(src.as_slice(), dst.as_mut_slice());
    }
    for j in 0..dim {
        for i in 0..dim {
            out[(i, j)] = a_sigma[(i, j)] + a_sigma[(j, i)];
        }
    }
    for (offset, circ) in [(0, matrices.diffusion_xx()), (n, matrices.diffusion_pp())] {
        let reach = circ.reach().min(n / 2);
        for i in 0..n {
            for d in 0..=reach {
                let v = 2.0 * circ.at_distance(d);
                if v == 0.0 {
                    continue;
                }
                out[(offset + i, offset + (i + d) % n)] += v;
                if d != 0 && 2 * d != n {
                    out[(offset + i, offset + (i + n - d) % n)] += v;
                }
            }
        }
    }
}

// dst += alpha·x
fn axpy(dst: &mut DMatrix<f64>, alpha: f64, x: &DMatrix<f64>) {
    for (d, s) in dst.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *d += alpha * s;
    }
}

/// Right-hand side AΣ + ΣAᵀ + 2D of the moment equations.
pub fn moment_rhs(state: &CovarianceState, matrices: &ModelMatrices) -> Result<DMatrix<f64>> {
    check_dims(state, matrices)?;
    let dim = state.sigma.nrows();
    let mut work = DMatrix::zeros(dim, dim);
    let mut out = DMatrix::zeros(dim, dim);
    rhs_into(&state.sigma, matrices, &mut work, &mut out);
    Ok(out)
}

/// Time-stepping controls for [`evolve`].
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub dt_max: f64,
    /// Steps between observer calls.
    pub sample_stride: usize,
    /// Relative PSD tolerance checked at every sample; `None` disables it.
    pub psd_tol: Option<f64>,
    /// When set, single-site uncertainty violations are logged.
    pub hbar: Option<f64>,
}

impl EvolveOptions {
    pub fn new(t_final: f64, dt_max: f64) -> Self {
        Self {
            t_final,
            dt_max,
            sample_stride: 10,
            psd_tol: Some(1e-10),
            hbar: None,
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride.max(1);
        self
    }
}

/// Step size actually used: dt_max capped by 0.05/ω_max and 0.05/λ, then
/// shrunk so that a whole number of steps spans the interval.
pub fn step_plan(matrices: &ModelMatrices, t0: f64, opts: &EvolveOptions) -> Result<(usize, f64)> {
    if !(opts.dt_max > 0.0) {
        return Err(Error::InvalidParams(vec![format!("dt_max = {} (need > 0)", opts.dt_max)]));
    }
    if !(opts.t_final >= t0) {
        return Err(Error::InvalidParams(vec![format!(
            "t_final = {} precedes the state time {t0}",
            opts.t_final
        )]));
    }
    let n = matrices.n_sites();
    let omega_max = mode_grid(n)
        .into_iter()
        .map(|q| (matrices.stiffness().symbol(q) * matrices.mass().recip()).max(0.0).sqrt())
        .fold(0.0, f64::max);
    let lambda = matrices.friction().at_distance(0);
    let mut dt = opts.dt_max;
    if omega_max > 0.0 {
        dt = dt.min(0.05 / omega_max);
    }
    if lambda > 0.0 {
        dt = dt.min(0.05 / lambda);
    }
    let span = opts.t_final - t0;
    if span == 0.0 {
        return Ok((0, dt));
    }
    let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, span / steps as f64))
}

/// Integrates the moment equations with the classical fixed-step RK4 scheme,
/// calling `observer` on the initial state, every `sample_stride` steps and
/// on the final state. Returns the final state.
pub fn evolve<F>(
    state: &CovarianceState,
    matrices: &ModelMatrices,
    opts: &EvolveOptions,
    mut observer: F,
) -> Result<CovarianceState>
where
    F: FnMut(&CovarianceState),
{
    check_dims(state, matrices)?;
    let (steps, h) = step_plan(matrices, state.time, opts)?;
    let dim = state.sigma.nrows();
    let t0 = state.time;
    let mut cur = state.clone();
    let mut work = DMatrix::zeros(dim, dim);
    let mut k = [
        DMatrix::zeros(dim, dim),
        DMatrix::zeros(dim, dim),
        DMatrix::zeros(dim, dim),
        DMatrix::zeros(dim, dim),
    ];
    let mut stage = DMatrix::zeros(dim, dim);
    let stride = opts.sample_stride.max(1);

    let inspect = |s: &CovarianceState| -> Result<()> {
        if let Some(tol) = opts.psd_tol {
            s.check_psd(tol)?;
        }
        if let Some(hbar) = opts.hbar {
            let v = s.uncertainty_violation(hbar);
            if v > 1e-9 {
                log::warn!("uncertainty relation violated by {v:e} (relative) at t = {}", s.time);
            }
        }
        Ok(())
    };

    inspect(&cur)?;
    observer(&cur);
    for step in 1..=steps {
        rhs_into(&cur.sigma, matrices, &mut work, &mut k[0]);
        stage.copy_from(&cur.sigma);
        axpy(&mut stage, 0.5 * h, &k[0]);
        rhs_into(&stage, matrices, &mut work, &mut k[1]);
        stage.copy_from(&cur.sigma);
        axpy(&mut stage, 0.5 * h, &k[1]);
        rhs_into(&stage, matrices, &mut work, &mut k[2]);
        stage.copy_from(&cur.sigma);
        axpy(&mut stage, h, &k[2]);
        rhs_into(&stage, matrices, &mut work, &mut k[3]);
        axpy(&mut cur.sigma, h / 6.0, &k[0]);
        axpy(&mut cur.sigma, h / 3.0, &k[1]);
        axpy(&mut cur.sigma, h / 3.0, &k[2]);
        axpy(&mut cur.sigma, h / 6.0, &k[3]);
        cur.symmetrize();
        cur.time = t0 + step as f64 * h;
        if step % stride == 0 || step == steps {
            inspect(&cur)?;
            observer(&cur);
        }
    }
    Ok(cur)
}

/// [`evolve`], collecting every sampled state.
pub fn evolve_trajectory(
    state: &CovarianceState,
    matrices: &ModelMatrices,
    opts: &EvolveOptions,
) -> Result<Vec<CovarianceState>> {
    let mut out = Vec::new();
    evolve(state, matrices, opts, |s| out.push(s.clone()))?;
    Ok(out)
}

/// Solves AΣ + ΣAᵀ + 2D = 0 mode by mode: each Fourier mode of the ring
/// gives an independent 2×2 Lyapunov equation.
pub fn stationary_covariance(matrices: &ModelMatrices) -> Result<CovarianceState> {
    let n = matrices.n_sites();
    let grid = mode_grid(n);
    let mut modes = Vec::with_capacity(n);
    for &q in &grid {
        let b = matrices.mode_blocks(q);
        if !(b.damping > 0.0) {
            return Err(Error::NotHurwitz { q, damping: b.damping });
        }
        // Unknowns (X, Y, P) of the mode covariance [[X, Y], [Y, P]].
        let lhs = Matrix3::new(
            -2.0 * b.damping,
            2.0 * b.inv_mass,
            0.0,
            -b.stiffness,
            -2.0 * b.damping,
            b.inv_mass,
            0.0,
            -2.0 * b.stiffness,
            -2.0 * b.damping,
        );
        let rhs = Vector3::new(-2.0 * b.dxx, 0.0, -2.0 * b.dpp);
        let sol = lhs.lu().solve(&rhs).ok_or(Error::Singular("mode Lyapunov solve"))?;
        modes.push((q, sol));
    }
    let nf = n as f64;
    let mut profile = vec![[0.0; 3]; n / 2 + 1];
    for (d, entry) in profile.iter_mut().enumerate() {
        for (q, sol) in &modes {
            let c = (q * d as f64).cos() / nf;
            entry[0] += sol[0] * c;
            entry[1] += sol[1] * c;
            entry[2] += sol[2] * c;
        }
    }
    let sigma = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, si) = (i / n, i % n);
        let (bj, sj) = (j / n, j % n);
        let d = si.abs_diff(sj);
        let d = d.min(n - d);
        match (bi, bj) {
            (0, 0) => profile[d][0],
            (1, 1) => profile[d][2],
            _ => profile[d][1],
        }
    });
    Ok(CovarianceState::new(sigma, f64::INFINITY))
}

/// Dense Kronecker-product solve of the same Lyapunov equation. Cost grows
/// as N⁶; meant for validating [`stationary_covariance`] on small rings.
pub fn stationary_covariance_dense(matrices: &ModelMatrices) -> Result<CovarianceState> {
    let a = matrices.drift();
    let dim = a.nrows();
    if let Some(ev) = a.complex_eigenvalues().iter().find(|ev| ev.re >= 0.0) {
        return Err(Error::NotHurwitz { q: f64::NAN, damping: -ev.re });
    }
    let eye = DMatrix::<f64>::identity(dim, dim);
    let op = eye.kronecker(&a) + a.kronecker(&eye);
    let d = matrices.diffusion();
    let rhs = nalgebra::DVector::from_iterator(dim * dim, d.iter().map(|v| -2.0 * v));
    let vec_sigma = op.lu().solve(&rhs).ok_or(Error::Singular("dense Lyapunov solve"))?;
    let sigma = DMatrix::from_column_slice(dim, dim, vec_sigma.as_slice());
    Ok(CovarianceState::new(sigma, f64::INFINITY))
}

/// Per-site energies, bond currents and energy densities of one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteObservables {
    pub time: f64,
    pub energies: Vec<f64>,
    /// J_k carries energy from site k−1 into site k.
    pub currents: Vec<f64>,
    pub densities: Vec<f64>,
    pub total_energy: f64,
}

/// On-site energies E_k, currents J_k = (ξ/2m)(⟨x_{k−1}p_k⟩ − ⟨x_k p_{k−1}⟩)
/// and densities u_k = E_k / a.
pub fn site_observables(state: &CovarianceState, params: &ChainParams) -> SiteObservables {
    let n = state.n_sites();
    let onsite = 0.5 * params.mass * params.omega0 * params.omega0 + params.xi;
    let energies: Vec<f64> = (0..n)
        .map(|k| {
            let (prev, next) = ((k + n - 1) % n, (k + 1) % n);
            state.pp(k, k) / (2.0 * params.mass) + onsite * state.xx(k, k)
                - 0.5 * params.xi * (state.xx(k, next) + state.xx(k, prev))
        })
        .collect();
    let currents = (0..n)
        .map(|k| {
            let prev = (k + n - 1) % n;
            params.xi / (2.0 * params.mass) * (state.xp(prev, k) - state.xp(k, prev))
        })
        .collect();
    let densities = energies.iter().map(|e| e / params.lattice_const).collect();
    let total_energy = energies.iter().sum();
    SiteObservables {
        time: state.time,
        energies,
        currents,
        densities,
        total_energy,
    }
}

/// Instantaneous dE_k/dt from the on-site energy balance: decay, bath
/// source, current divergence, and the nearest-neighbour-friction terms.
///
/// The friction terms include the next-nearest correlations
/// (γξ/2)(2⟨x_{k−1}x_{k+1}⟩ + ⟨x_k x_{k+2}⟩ + ⟨x_k x_{k−2}⟩) that the
/// moment equations generate for γ ≠ 0.
pub fn energy_rate(state: &CovarianceState, params: &ChainParams, matrices: &ModelMatrices) -> Vec<f64> {
    let n = state.n_sites();
    let obs = site_observables(state, params);
    let (m, xi) = (params.mass, params.xi);
    let lam = matrices.friction().at_distance(0);
    let gam = matrices.friction().at_distance(1);
    let onsite = m * params.omega0 * params.omega0 + 2.0 * xi;
    let dxx = matrices.diffusion_xx();
    let source = matrices.diffusion_pp().at_distance(0) / m + onsite * dxx.at_distance(0)
        - 2.0 * xi * dxx.at_distance(1);
    (0..n)
        .map(|k| {
            let (p1, n1) = ((k + n - 1) % n, (k + 1) % n);
            let (p2, n2) = ((k + n - 2) % n, (k + 2) % n);
            let exchange = -xi / (2.0 * m)
                * (state.xp(k, n1) + state.xp(k, p1) - state.xp(n1, k) - state.xp(p1, k));
            let friction = -gam / m * (state.pp(k, n1) + state.pp(k, p1))
                - gam * onsite * (state.xx(k, n1) + state.xx(k, p1))
                + 0.5 * gam * xi * (2.0 * state.xx(k, k) + state.xx(n1, n1) + state.xx(p1, p1))
                + 0.5 * gam * xi * (2.0 * state.xx(p1, n1) + state.xx(k, n2) + state.xx(k, p2));
            -2.0 * lam * obs.energies[k] + source + exchange + friction
        })
        .collect()
}

/// Discrepancy between the sampled dE_k/dt and the energy-balance right-hand
/// side along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceResidual {
    /// Interior sample times at which central differences were taken.
    pub times: Vec<f64>,
    /// residuals[i][k] at times[i], site k.
    pub residuals: Vec<Vec<f64>>,
    pub max_abs_residual: f64,
    pub max_abs_rate: f64,
    /// max |residual| / max |dE/dt| (absolute residual when the rate vanishes).
    pub normalized: f64,
}

pub fn energy_balance_residual(
    trajectory: &[CovarianceState],
    params: &ChainParams,
    matrices: &ModelMatrices,
) -> Result<BalanceResidual> {
    if trajectory.len() < 3 {
        return Err(Error::CoarseSampling(format!(
            "need at least 3 samples, got {}",
            trajectory.len()
        )));
    }
    let h = trajectory[1].time - trajectory[0].time;
    for w in trajectory.windows(2) {
        if ((w[1].time - w[0].time) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(Error::CoarseSampling("samples are not uniformly spaced".into()));
        }
    }
    let omega_max = params.omega_max();
    if h * omega_max > 0.5 || h * params.lambda_fric > 0.5 {
        return Err(Error::CoarseSampling(format!(
            "sample spacing {h} too long against 1/omega_max = {}",
            1.0 / omega_max
        )));
    }
    let energies: Vec<Vec<f64>> = trajectory
        .iter()
        .map(|s| site_observables(s, params).energies)
        .collect();
    let mut times = Vec::new();
    let mut residuals = Vec::new();
    let mut max_abs_residual = 0.0f64;
    let mut max_abs_rate = 0.0f64;
    for i in 1..trajectory.len() - 1 {
        let rate = energy_rate(&trajectory[i], params, matrices);
        let row: Vec<f64> = (0..rate.len())
            .map(|k| {
                let fd = (energies[i + 1][k] - energies[i - 1][k]) / (2.0 * h);
                max_abs_rate = max_abs_rate.max(fd.abs());
                fd - rate[k]
            })
            .collect();
        max_abs_residual = row.iter().fold(max_abs_residual, |a, r| a.max(r.abs()));
        times.push(trajectory[i].time);
        residuals.push(row);
    }
    let normalized = if max_abs_rate > 0.0 {
        max_abs_residual / max_abs_rate
    } else {
        max_abs_residual
    };
    Ok(BalanceResidual {
        times,
        residuals,
        max_abs_residual,
        max_abs_rate,
        normalized,
    })
}

/// How the excess energy of a hot region is loaded into the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preparation {
    /// Σ = G(T_cold) + S (G(T_hot) − G(T_cold)) S with S = diag(√φ):
    /// locally thermal wherever the profile φ is smooth.
    #[default]
    LocalGibbs,
    /// Only the x–x and p–p diagonals of hot sites are raised by φ times the
    /// difference of the Gibbs site variances.
    Diagonal,
}

/// Periodic Gaussian profile exp(−d²/2w²), d the ring distance to `center`.
pub fn gaussian_profile(n_sites: usize, center: f64, width: f64) -> Vec<f64> {
    let nf = n_sites as f64;
    (0..n_sites)
        .map(|k| {
            let raw = (k as f64 - center).rem_euclid(nf);
            let d = raw.min(nf - raw);
            (-0.5 * d * d / (width * width)).exp()
        })
        .collect()
}

/// 1 on the listed sites, 0 elsewhere.
pub fn top_hat_profile(n_sites: usize, hot_sites: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; n_sites];
    for &k in hot_sites {
        if k < n_sites {
            v[k] = 1.0;
        }
    }
    v
}

/// Cold thermal background with the excess of a hotter Gibbs state added
/// where `profile` (values in [0, 1]) is nonzero. Both preparations keep Σ
/// positive semidefinite.
pub fn hotspot_state(
    params: &ChainParams,
    t_hot: f64,
    t_cold: f64,
    profile: &[f64],
    preparation: Preparation,
) -> Result<CovarianceState> {
    let n = params.n_sites;
    if profile.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: profile.len(),
        });
    }
    if let Some(bad) = profile.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParams(vec![format!("profile value {bad} outside [0, 1]")]));
    }
    if t_hot < t_cold {
        return Err(Error::InvalidParams(vec![format!(
            "t_hot = {t_hot} below t_cold = {t_cold}"
        )]));
    }
    let cold = gibbs_covariance(params, t_cold)?;
    let hot = gibbs_covariance(params, t_hot)?;
    let excess = &hot.sigma - &cold.sigma;
    let mut sigma = cold.sigma;
    match preparation {
        Preparation::LocalGibbs => {
            let root: Vec<f64> = profile.iter().map(|v| v.sqrt()).collect();
            for j in 0..2 * n {
                for i in 0..2 * n {
                    sigma[(i, j)] += root[i % n] * root[j % n] * excess[(i, j)];
                }
            }
        }
        Preparation::Diagonal => {
            for k in 0..n {
                sigma[(k, k)] += profile[k] * excess[(k, k)];
                sigma[(n + k, n + k)] += profile[k] * excess[(n + k, n + k)];
            }
        }
    }
    Ok(CovarianceState::new(sigma, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_matrices, DiffusionProfile};
    use crate::diffusion::{diffusion_profile, Stencil};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize) -> ChainParams {
        ChainParams {
            n_sites: n,
            ..ChainParams::default()
        }
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> CovarianceState {
        let g = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.gen_range(-1.0..1.0));
        CovarianceState::new(&g * g.transpose() + DMatrix::identity(2 * n, 2 * n), 0.0)
    }

    #[test]
    fn rhs_matches_dense_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ChainParams {
            gamma_fric: 0.04,
            ..params(6)
        };
        let m = build_matrices(&p, &diffusion_profile(&p, 1.0, Stencil::Periodic).unwrap()).unwrap();
        let s = random_state(6, &mut rng);
        let a = m.drift();
        let dense = &a * &s.sigma + &s.sigma * a.transpose() + 2.0 * m.diffusion();
        let fast = moment_rhs(&s, &m).unwrap();
        assert!((dense - fast).amax() < 1e-13);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = build_matrices(&params(4), &DiffusionProfile::zero()).unwrap();
        let s = CovarianceState::new(DMatrix::identity(6, 6), 0.0);
        assert!(matches!(moment_rhs(&s, &m), Err(Error::Dimension { .. })));
    }

    #[test]
    fn closed_chain_conserves_energy_in_ground_state() {
        let p = params(8);
        let m = ModelMatrices::hamiltonian(&p);
        let g = gibbs_covariance(&p, 0.0).unwrap();
        let rhs = moment_rhs(&g, &m).unwrap();
        assert!(rhs.amax() < 1e-14);
    }

    #[test]
    fn gibbs_is_stationary_under_mode_sum_diffusion() {
        let p = ChainParams {
            gamma_fric: 0.02,
            ..params(8)
        };
        let prof = diffusion_profile(&p, p.bath_temp, Stencil::ModeSum).unwrap();
        let m = build_matrices(&p, &prof).unwrap();
        let g = gibbs_covariance(&p, p.bath_temp).unwrap();
        let rhs = moment_rhs(&g, &m).unwrap();
        assert!(rhs.amax() < 1e-12 * m.diffusion().amax());
    }

    #[test]
    fn fourier_and_dense_stationary_solves_agree() {
        for n in [4, 7] {
            let p = ChainParams {
                gamma_fric: 0.03,
                ..params(n)
            };
            let prof = diffusion_profile(&p, 1.0, Stencil::ModeSum).unwrap();
            let m = build_matrices(&p, &prof).unwrap();
            let a = stationary_covariance(&m).unwrap();
            let b = stationary_covariance_dense(&m).unwrap();
            assert!((&a.sigma - &b.sigma).amax() < 1e-12 * a.sigma.amax());
        }
    }

    #[test]
    fn undamped_modes_are_rejected() {
        let p = params(4);
        let m = ModelMatrices::hamiltonian(&p);
        assert!(matches!(stationary_covariance(&m), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn equilibrium_carries_no_current() {
        let p = params(8);
        let obs = site_observables(&gibbs_covariance(&p, 3.0).unwrap(), &p);
        assert!(obs.currents.iter().all(|j| *j == 0.0));
        assert_relative_eq!(obs.total_energy, obs.energies.iter().sum::<f64>());
    }

    #[test]
    fn single_oscillator_zero_point_energy() {
        let p = ChainParams { xi: 0.0, ..params(5) };
        let obs = site_observables(&gibbs_covariance(&p, 0.0).unwrap(), &p);
        for e in obs.energies {
            assert_relative_eq!(e, 0.5 * p.hbar * p.omega0, max_relative = 1e-14);
        }
    }

    #[test]
    fn uniform_heating_keeps_sites_equal() {
        let p = params(8);
        let prof = diffusion_profile(&p, 1.0, Stencil::NearestNeighbor).unwrap();
        let m = build_matrices(&p, &prof).unwrap();
        let s = gibbs_covariance(&p, 4.0).unwrap();
        let end = evolve(&s, &m, &EvolveOptions::new(3.0, 0.05), |_| {}).unwrap();
        let obs = site_observables(&end, &p);
        for k in 1..8 {
            assert_relative_eq!(obs.energies[k], obs.energies[0], max_relative = 1e-12);
            assert_relative_eq!(obs.currents[k], obs.currents[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_chain_rate_is_pure_current_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(6);
        let m = ModelMatrices::hamiltonian(&p);
        let closed = ChainParams {
            gamma_fric: 0.0,
            ..p.clone()
        };
        let s = random_state(6, &mut rng);
        let rate = energy_rate(&s, &closed, &m);
        let j = site_observables(&s, &p).currents;
        for k in 0..6 {
            let div = j[(k + 1) % 6] - j[k];
            assert_relative_eq!(rate[k], -div, epsilon = 1e-13);
        }
        let telescoped: f64 = (0..6).map(|k| j[(k + 1) % 6] - j[k]).sum();
        assert!(telescoped.abs() < 1e-13);
    }

    #[test]
    fn energy_balance_closes_along_a_trajectory() {
        let p = ChainParams {
            gamma_fric: 0.03,
            ..params(8)
        };
        let prof = diffusion_profile(&p, p.bath_temp, Stencil::Periodic).unwrap();
        let m = build_matrices(&p, &prof).unwrap();
        let s = hotspot_state(&p, 6.0, p.bath_temp, &top_hat_profile(8, &[2, 3]), Preparation::LocalGibbs).unwrap();
        let traj = evolve_trajectory(&s, &m, &EvolveOptions::new(4.0, 0.005).stride(1)).unwrap();
        let res = energy_balance_residual(&traj, &p, &m).unwrap();
        assert!(res.normalized < 1e-4, "{}", res.normalized);
    }

    #[test]
    fn coarse_sampling_is_flagged() {
        let p = params(8);
        let prof = diffusion_profile(&p, 1.0, Stencil::NearestNeighbor).unwrap();
        let m = build_matrices(&p, &prof).unwrap();
        let s = gibbs_covariance(&p, 4.0).unwrap();
        let traj = evolve_trajectory(&s, &m, &EvolveOptions::new(5.0, 0.05).stride(20)).unwrap();
        assert!(matches!(energy_balance_residual(&traj, &p, &m), Err(Error::CoarseSampling(_))));
    }

    #[test]
    fn preparations_stay_positive() {
        let p = params(16);
        let prof = gaussian_profile(16, 5.0, 2.0);
        for prep in [Preparation::LocalGibbs, Preparation::Diagonal] {
            let s = hotspot_state(&p, 9.0, 1.0, &prof, prep).unwrap();
            s.check_psd(1e-12).unwrap();
        }
    }

    #[test]
    fn gaussian_profile_wraps() {
        let g = gaussian_profile(10, 0.0, 1.0);
        assert_eq!(g[0], 1.0);
        assert_relative_eq!(g[1], g[9]);
    }
}
