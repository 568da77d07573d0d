//! Periodic 1D heat equation with uniform decay and source,
//! ∂u/∂t = D∂²u/∂x² − 2λu + s, integrated with RK4 on a central-difference
//! Laplacian.

use crate::chain::ChainParams;
use crate::error::{Error, Result};

/// Energy density sampled on a uniform periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumField {
    pub values: Vec<f64>,
    pub dx: f64,
    pub time: f64,
}

impl ContinuumField {
    pub fn new(values: Vec<f64>, dx: f64, time: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if values.len() < 8 {
            bad.push(format!("grid has {} cells (need >= 8)", values.len()));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            bad.push(format!("dx = {dx} (need > 0)"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            bad.push(format!("value {} at cell {i} is not finite", values[i]));
        }
        if bad.is_empty() {
            Ok(Self { values, dx, time })
        } else {
            Err(Error::InvalidParams(bad))
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain_length(&self) -> f64 {
        self.dx * self.values.len() as f64
    }

    /// Cell centres x_i = i·dx.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| i as f64 * self.dx).collect()
    }

    /// ∫u dx by the (spectrally accurate) periodic rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }
}

/// Coefficients of ∂u/∂t = D∂²u/∂x² − κ_d u + s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatProblem {
    pub diff_const: f64,
    pub decay_rate: f64,
    pub source: f64,
}

impl HeatProblem {
    /// D = a²ξ/(2λm), decay 2λ, and the given source density.
    pub fn from_chain(params: &ChainParams, source: f64) -> Result<Self> {
        params.validate()?;
        if !(source >= 0.0) {
            return Err(Error::InvalidParams(vec![format!("source = {source} (need >= 0)")]));
        }
        let a = params.lattice_const;
        Ok(Self {
            diff_const: a * a * params.xi / (2.0 * params.lambda_fric * params.mass),
            decay_rate: 2.0 * params.lambda_fric,
            source,
        })
    }

    /// Uniform fixed point s / 2λ.
    pub fn equilibrium(&self) -> f64 {
        self.source / self.decay_rate
    }
}

/// Explicit RK4 integrator for a [`HeatProblem`] on a grid of spacing `dx`.
#[derive(Debug, Clone)]
pub struct HeatSolver {
    problem: HeatProblem,
    dx: f64,
    dt: f64,
}

impl HeatSolver {
    /// Bounds every step must respect: dt ≤ 0.4·dx²/D and dt ≤ 0.1/decay.
    pub fn step_bound(problem: &HeatProblem, dx: f64) -> f64 {
        let mut bound = f64::INFINITY;
        if problem.diff_const > 0.0 {
            bound = bound.min(0.4 * dx * dx / problem.diff_const);
        }
        if problem.decay_rate > 0.0 {
            bound = bound.min(0.1 / problem.decay_rate);
        }
        bound
    }

    /// Uses `dt` if given (rejected when it breaks [`Self::step_bound`]),
    /// otherwise min(0.4·dx²/D, 0.02/decay).
    pub fn new(problem: HeatProblem, dx: f64, dt: Option<f64>) -> Result<Self> {
        let bound = Self::step_bound(&problem, dx);
        let dt = match dt {
            Some(dt) => {
                if !(dt > 0.0) || dt > bound {
                    return Err(Error::Cfl { dt, bound });
                }
                dt
            }
            None => {
                let mut dt = bound;
                if problem.decay_rate > 0.0 {
                    dt = dt.min(0.02 / problem.decay_rate);
                }
                if !dt.is_finite() {
                    dt = 1.0;
                }
                dt
            }
        };
        Ok(Self { problem, dx, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn problem(&self) -> &HeatProblem {
        &self.problem
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let m = u.len();
        let c = self.problem.diff_const / (self.dx * self.dx);
        for i in 0..m {
            let left = u[(i + m - 1) % m];
            let right = u[(i + 1) % m];
            out[i] = c * (left - 2.0 * u[i] + right) - self.problem.decay_rate * u[i] + self.problem.source;
        }
    }

    /// Steps `field` forward to `t_target` with an even subdivision of the
    /// interval into steps no longer than `dt`.
    pub fn advance(&self, field: &mut ContinuumField, t_target: f64) -> Result<()> {
        if (field.dx - self.dx).abs() > 1e-12 * self.dx {
            return Err(Error::InvalidParams(vec![format!(
                "field dx = {} differs from solver dx = {}",
                field.dx, self.dx
            )]));
        }
        let span = t_target - field.time;
        if span < 0.0 {
            return Err(Error::InvalidParams(vec![format!(
                "target time {t_target} precedes field time {}",
                field.time
            )]));
        }
        if span == 0.0 {
            return Ok(());
        }
        let steps = (span / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let t0 = field.time;
        let m = field.len();
        let mut k = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
        let mut stage = vec![0.0; m];
        for step in 1..=steps {
            let u = &mut field.values;
            self.rhs(u, &mut k[0]);
            for i in 0..m {
                stage[i] = u[i] + 0.5 * h * k[0][i];
            }
            self.rhs(&stage, &mut k[1]);
            for i in 0..m {
                stage[i] = u[i] + 0.5 * h * k[1][i];
            }
            self.rhs(&stage, &mut k[2]);
            for i in 0..m {
                stage[i] = u[i] + h * k[2][i];
            }
            self.rhs(&stage, &mut k[3]);
            for i in 0..m {
                u[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
            field.time = t0 + step as f64 * h;
        }
        Ok(())
    }
}

/// Integrates from `field0` to `t_final` and returns the field at
/// `samples + 1` evenly spaced times, the first being `field0` itself.
pub fn solve_heat(
    field0: &ContinuumField,
    params: &ChainParams,
    source: f64,
    t_final: f64,
    samples: usize,
) -> Result<Vec<ContinuumField>> {
    let problem = HeatProblem::from_chain(params, source)?;
    let solver = HeatSolver::new(problem, field0.dx, None)?;
    let samples = samples.max(1);
    let mut field = field0.clone();
    let mut out = vec![field.clone()];
    let t0 = field0.time;
    for i in 1..=samples {
        solver.advance(&mut field, t0 + (t_final - t0) * i as f64 / samples as f64)?;
        out.push(field.clone());
    }
    Ok(out)
}

/// Fourier-law current J = −D·∂u/∂x with a central difference.
pub fn fourier_current(field: &ContinuumField, diff_const: f64) -> Vec<f64> {
    let m = field.len();
    let u = &field.values;
    (0..m)
        .map(|i| -diff_const * (u[(i + 1) % m] - u[(i + m - 1) % m]) / (2.0 * field.dx))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ChainParams {
        ChainParams {
            lambda_fric: 0.2,
            ..ChainParams::default()
        }
    }

    fn problem(source: f64) -> HeatProblem {
        HeatProblem::from_chain(&params(), source).unwrap()
    }

    // Periodic heat kernel applied to a Gaussian, with decay and relaxation
    // of the background towards s/decay.
    #[allow(clippy::too_many_arguments)]
    fn green(x: f64, t: f64, length: f64, p: &HeatProblem, bg: f64, amp: f64, c: f64, w: f64) -> f64 {
        let var = w * w + 2.0 * p.diff_const * t;
        let images: f64 = (-6..=6)
            .map(|j| {
                let d = x - c + j as f64 * length;
                (-0.5 * d * d / var).exp()
            })
            .sum();
        let decay = (-p.decay_rate * t).exp();
        p.equilibrium() + (bg - p.equilibrium()) * decay + amp * w / var.sqrt() * images * decay
    }

    #[test]
    fn field_validation() {
        assert!(ContinuumField::new(vec![0.0; 7], 1.0, 0.0).is_err());
        assert!(ContinuumField::new(vec![f64::NAN; 8], 1.0, 0.0).is_err());
        match ContinuumField::new(vec![0.0; 3], -1.0, 0.0) {
            Err(Error::InvalidParams(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cfl_violations_are_rejected() {
        let p = problem(0.0);
        let bound = HeatSolver::step_bound(&p, 1.0);
        assert!(matches!(HeatSolver::new(p, 1.0, Some(1.01 * bound)), Err(Error::Cfl { .. })));
        assert!(HeatSolver::new(p, 1.0, Some(bound)).is_ok());
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let p = problem(3.0);
        let solver = HeatSolver::new(p, 0.5, None).unwrap();
        let mut f = ContinuumField::new(vec![p.equilibrium(); 16], 0.5, 0.0).unwrap();
        solver.advance(&mut f, 10.0).unwrap();
        for v in &f.values {
            assert_relative_eq!(*v, p.equilibrium(), max_relative = 1e-14);
        }
    }

    #[test]
    fn uniform_field_decays_exponentially() {
        let pp = params();
        let f0 = ContinuumField::new(vec![2.0; 32], 1.0, 0.0).unwrap();
        let t = 3.0 / pp.lambda_fric;
        let traj = solve_heat(&f0, &pp, 0.0, t, 1).unwrap();
        let exact = 2.0 * (-2.0 * pp.lambda_fric * t).exp();
        for v in &traj[1].values {
            assert_relative_eq!(*v, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn gaussian_matches_green_function() {
        let p = problem(0.8);
        let (m, dx) = (512, 0.25);
        let length = m as f64 * dx;
        let (bg, amp, c, w) = (1.0, 3.0, 0.5 * length, 6.0);
        let u0 = (0..m).map(|i| green(i as f64 * dx, 0.0, length, &p, bg, amp, c, w)).collect();
        let mut f = ContinuumField::new(u0, dx, 0.0).unwrap();
        let t = 1.0 / 0.2;
        HeatSolver::new(p, dx, None).unwrap().advance(&mut f, t).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, v) in f.values.iter().enumerate() {
            let exact = green(i as f64 * dx, t, length, &p, bg, amp, c, w);
            num += (v - exact).powi(2);
            den += exact * exact;
        }
        assert!((num / den).sqrt() < 1e-4, "{}", (num / den).sqrt());
    }

    #[test]
    fn decay_compensated_excess_is_conserved() {
        let p = problem(0.6);
        let dx = 0.5;
        let u0: Vec<f64> = (0..64).map(|i| p.equilibrium() + (-(i as f64 - 20.0).powi(2) / 18.0).exp()).collect();
        let mut f = ContinuumField::new(u0, dx, 0.0).unwrap();
        let excess = |f: &ContinuumField| (f.integral() - p.equilibrium() * f.domain_length()) * (p.decay_rate * f.time).exp();
        let start = excess(&f);
        HeatSolver::new(p, dx, None).unwrap().advance(&mut f, 7.0).unwrap();
        assert_relative_eq!(excess(&f), start, max_relative = 1e-6);
    }

    #[test]
    fn uniform_field_carries_no_current() {
        let f = ContinuumField::new(vec![4.0; 10], 1.0, 0.0).unwrap();
        assert!(fourier_current(&f, 2.0).iter().all(|j| *j == 0.0));
    }

    #[test]
    fn ramp_gives_constant_interior_current() {
        // Periodic sawtooth: linear on the interior, one jump at the seam.
        let slope = 0.3;
        let f = ContinuumField::new((0..20).map(|i| slope * i as f64 * 0.5).collect(), 0.5, 0.0).unwrap();
        let j = fourier_current(&f, 1.7);
        for v in &j[1..19] {
            assert_relative_eq!(*v, -1.7 * slope, max_relative = 1e-12);
        }
    }

    #[test]
    fn bump_current_is_antisymmetric() {
        let m = 33;
        let f = ContinuumField::new((0..m).map(|i| (-((i as f64 - 16.0) / 3.0).powi(2)).exp()).collect(), 1.0, 0.0)
            .unwrap();
        let j = fourier_current(&f, 1.0);
        assert_eq!(j[16], 0.0);
        for d in 1..16 {
            assert_relative_eq!(j[16 + d], -j[16 - d], max_relative = 1e-14);
        }
    }
}
