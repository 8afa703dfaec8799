//! Open-loop minimum-energy transfers: the closed-form control law, its
//! energy, and sampled trajectories for checking both.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::gramian::{default_big_m, ExtendedInverse, Gramian};

/// Default number of sampling intervals per phase.
pub const DEFAULT_SAMPLES: usize = 2000;

/// Displacement components outside the reachable subspace larger than this
/// fraction of `|Δx|` make a target unreachable.
pub const UNREACHABLE_TOLERANCE: f64 = 1e-6;

// RK4 substeps per sampling interval when integrating states.
pub(crate) const SUBSTEPS: usize = 4;

/// Move the state from `x_start` to `x_goal` within `span`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTask {
    pub x_start: DVector<f64>,
    pub x_goal: DVector<f64>,
    pub span: f64,
}

impl TransferTask {
    pub fn new(x_start: DVector<f64>, x_goal: DVector<f64>, span: f64) -> Result<Self> {
        if x_start.len() != x_goal.len() {
            return Err(Error::Dimension(format!(
                "start has {} states, goal has {}",
                x_start.len(),
                x_goal.len()
            )));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::InvalidArgument(format!("span must be positive, got {span}")));
        }
        if x_start.iter().chain(x_goal.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transfer endpoints".into()));
        }
        Ok(Self { x_start, x_goal, span })
    }

    /// Transfer out of the origin.
    pub fn from_origin(x_goal: DVector<f64>, span: f64) -> Result<Self> {
        Self::new(DVector::zeros(x_goal.len()), x_goal, span)
    }
}

/// Uniformly sampled states and inputs.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// `∫ uᵀu dt` by composite Simpson over `inputs`.
    pub energy: f64,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().unwrap()
    }

    /// Moves the time grid by `offset`.
    pub fn shifted(mut self, offset: f64) -> Self {
        let dt = self.dt();
        let t0 = self.times[0] + offset;
        for (k, t) in self.times.iter_mut().enumerate() {
            *t = t0 + k as f64 * dt;
        }
        self
    }
}

/// `Δx = x_goal - e^{A span} x_start`.
pub fn delta_x(task: &TransferTask, a: &DMatrix<f64>) -> Result<DVector<f64>> {
    if a.nrows() != task.x_start.len() {
        return Err(Error::Dimension(format!(
            "task has {} states, A is {}x{}",
            task.x_start.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    if task.x_start.iter().all(|v| *v == 0.0) {
        return Ok(task.x_goal.clone());
    }
    let e = matrix_exponential(a, task.span)?;
    Ok(&task.x_goal - e * &task.x_start)
}

fn check_horizon(task: &TransferTask, g: &Gramian) -> Result<()> {
    if (g.horizon() - task.span).abs() > 1e-12 * task.span {
        return Err(Error::InvalidArgument(format!(
            "Gramian horizon {} does not match task span {}",
            g.horizon(),
            task.span
        )));
    }
    if g.dim() != task.x_start.len() {
        return Err(Error::Dimension("Gramian and task differ in state dimension".into()));
    }
    Ok(())
}

/// `W⁻¹ Δx`: Cholesky solve for full-rank Gramians, otherwise the solve on
/// the reachable subspace after checking that `Δx` lies in it.
pub(crate) fn solve_gramian(g: &Gramian, dx: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = dx.norm();
    if norm == 0.0 {
        return Ok(DVector::zeros(dx.len()));
    }
    if g.is_full_rank() {
        if let Some(chol) = Cholesky::new(g.matrix().clone()) {
            return Ok(chol.solve(dx));
        }
    }
    let rank = g.numerical_rank();
    let coords = g.eigenvectors().tr_mul(dx);
    let outside = coords.rows(rank, g.dim() - rank).norm();
    if outside > UNREACHABLE_TOLERANCE * norm {
        let energy = ExtendedInverse::new(g, default_big_m(g))?.quadratic_form(dx);
        return Err(Error::Unreachable {
            outside: outside / norm,
            energy,
        });
    }
    let mut scaled = DVector::zeros(dx.len());
    for i in 0..rank {
        scaled[i] = coords[i] / g.eigenvalues()[i];
    }
    Ok(g.eigenvectors() * scaled)
}

/// Minimum transfer energy `Δxᵀ W⁻¹ Δx` for the Gramian `g` of `(a, b)` over
/// the task span.
pub fn optimal_energy(task: &TransferTask, g: &Gramian, a: &DMatrix<f64>) -> Result<f64> {
    check_horizon(task, g)?;
    let dx = delta_x(task, a)?;
    let y = solve_gramian(g, &dx)?;
    Ok(dx.dot(&y).max(0.0))
}

/// Samples `u*(t) = Bᵀ e^{Aᵀ(T - t)} W⁻¹ Δx` on `samples` uniform intervals
/// and integrates the states under that input with RK4.
pub fn optimal_control(
    task: &TransferTask,
    g: &Gramian,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    samples: usize,
) -> Result<Trajectory> {
    check_horizon(task, g)?;
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension("input matrix and A differ in rows".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 sampling intervals required, got {samples}"
        )));
    }
    let dx = delta_x(task, a)?;
    let y = solve_gramian(g, &dx)?;

    // Costate p(t) = e^{Aᵀ(T - t)} y on a grid fine enough for the RK4 stages,
    // propagated backwards from p(T) = y.
    let fine = 2 * SUBSTEPS * samples;
    let delta = task.span / fine as f64;
    let step = matrix_exponential(&a.transpose(), delta)?;
    let mut costate = vec![DVector::zeros(a.nrows()); fine + 1];
    costate[fine] = y;
    for j in (0..fine).rev() {
        costate[j] = &step * &costate[j + 1];
    }
    let bt = b.transpose();
    let u_fine: Vec<DVector<f64>> = costate.iter().map(|p| &bt * p).collect();

    let h = task.span / samples as f64;
    let hs = h / SUBSTEPS as f64;
    let mut x = task.x_start.clone();
    let mut states = Vec::with_capacity(samples + 1);
    states.push(x.clone());
    for k in 0..samples {
        for i in 0..SUBSTEPS {
            let j = 2 * (SUBSTEPS * k + i);
            let bu0 = b * &u_fine[j];
            let bu1 = b * &u_fine[j + 1];
            let bu2 = b * &u_fine[j + 2];
            x = rk4_step(a, &x, &bu0, &bu1, &bu2, hs);
        }
        states.push(x.clone());
    }
    if states.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("state integration diverged".into()));
    }
    let inputs: Vec<DVector<f64>> = (0..=samples).map(|k| u_fine[2 * SUBSTEPS * k].clone()).collect();
    let energy = integrate_energy(&inputs, h)?;
    let times = (0..=samples).map(|k| k as f64 * h).collect();
    Ok(Trajectory {
        times,
        states,
        inputs,
        energy,
    })
}

/// One RK4 step of `dx/dt = A x + f(t)` given the forcing at the start,
/// midpoint and end of the step.
pub(crate) fn rk4_step(
    a: &DMatrix<f64>,
    x: &DVector<f64>,
    f0: &DVector<f64>,
    f_mid: &DVector<f64>,
    f1: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let k1 = a * x + f0;
    let k2 = a * (x + &k1 * (h / 2.0)) + f_mid;
    let k3 = a * (x + &k2 * (h / 2.0)) + f_mid;
    let k4 = a * (x + &k3 * h) + f1;
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// `∫ |u(t)|² dt` over uniformly spaced samples.
pub fn integrate_energy(inputs: &[DVector<f64>], dt: f64) -> Result<f64> {
    let values: Vec<f64> = inputs.iter().map(|u| u.norm_squared()).collect();
    integrate_uniform(&values, dt)
}

/// Composite Simpson's rule; for an odd number of intervals the last three
/// use Simpson's 3/8 rule, and a single interval falls back to the trapezoid.
pub fn integrate_uniform(values: &[f64], dt: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples to integrate, got {}",
            values.len()
        )));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sample spacing must be positive, got {dt}"
        )));
    }
    let intervals = values.len() - 1;
    if intervals == 1 {
        return Ok(0.5 * dt * (values[0] + values[1]));
    }
    let simpson = |v: &[f64]| -> f64 {
        let n = v.len() - 1;
        let mut s = v[0] + v[n];
        for (i, x) in v.iter().enumerate().take(n).skip(1) {
            s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
        }
        s * dt / 3.0
    };
    if intervals.is_multiple_of(2) {
        return Ok(simpson(values));
    }
    let split = intervals - 3;
    let tail = &values[split..];
    let three_eighths = 3.0 * dt / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3]);
    let head = if split > 0 { simpson(&values[..=split]) } else { 0.0 };
    Ok(head + three_eighths)
}
