//! Attack/defense episodes: a minimum-energy attack followed by a
//! minimum-energy restoration, and a minimum-energy attack against a
//! continuously running LQ state-feedback defender.

use std::io::Write;

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::{json_number, sig};
use crate::gramian::{default_steps, gramian};
use crate::linalg::{check_finite, solve_lyapunov, symmetrize};
use crate::minenergy::{integrate_uniform, optimal_control, rk4_step, Trajectory, TransferTask, SUBSTEPS};
use crate::model::{is_stable, LtiSystem};
use crate::resilience::{csv_err, resilience_index};

/// Closed-loop characteristic time the default LQ defender is tuned to.
pub const DEFAULT_LQ_CHARACTERISTIC_TIME: f64 = 4.73;

const RICCATI_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeKind {
    /// Minimum-energy attack, then minimum-energy restoration.
    MinimumEnergy,
    /// Minimum-energy attack on the closed loop of an always-on LQ defender.
    LqFeedback,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub kind: EpisodeKind,
    pub attack_trajectory: Trajectory,
    /// Restoration phase, or the post-attack observation phase for LQ episodes.
    pub defense_trajectory: Trajectory,
    pub attack_energy: f64,
    pub defense_energy: f64,
    /// `None` when the defender spent no energy.
    pub measured_ratio: Option<f64>,
    pub theoretical_rho: f64,
    /// Distance of the final state from the origin.
    pub terminal_error: f64,
    /// Attack target `x₁`.
    pub attack_target: DVector<f64>,
    /// Distance between the state at the end of the attack and `x₁`.
    pub attack_miss: f64,
    /// LQ gain for feedback episodes; defender input is `-K x`.
    pub defense_gain: Option<DMatrix<f64>>,
    attack_inputs: usize,
    defense_inputs: usize,
}

impl ScenarioReport {
    /// `"closed-loop"` when the index was computed for `A - Bd K`.
    pub fn index_dynamics(&self) -> &'static str {
        match self.kind {
            EpisodeKind::MinimumEnergy => "open-loop",
            EpisodeKind::LqFeedback => "closed-loop",
        }
    }

    /// Time at which `|x(t)|` is largest over both phases.
    pub fn peak_state_time(&self) -> f64 {
        let mut best = (0.0, f64::NEG_INFINITY);
        for tr in [&self.attack_trajectory, &self.defense_trajectory] {
            for (t, x) in tr.times.iter().zip(&tr.states) {
                let n = x.norm();
                if n > best.1 {
                    best = (*t, n);
                }
            }
        }
        best.0
    }

    pub fn to_document(&self) -> Value {
        json!({
            "kind": match self.kind {
                EpisodeKind::MinimumEnergy => "minimum-energy",
                EpisodeKind::LqFeedback => "lq-feedback",
            },
            "attack_energy": self.attack_energy,
            "defense_energy": self.defense_energy,
            "measured_ratio": self.measured_ratio.map(json_number),
            "ratio_defined": self.measured_ratio.is_some(),
            "theoretical_rho": json_number(self.theoretical_rho),
            "index_dynamics": self.index_dynamics(),
            "terminal_error": self.terminal_error,
            "attack_miss": self.attack_miss,
            "attack_target": self.attack_target.iter().cloned().collect::<Vec<f64>>(),
            "horizons": {
                "attack": self.attack_trajectory.end_time() - self.attack_trajectory.start_time(),
                "defense": self.defense_trajectory.end_time() - self.defense_trajectory.start_time(),
            },
            "peak_state_time": self.peak_state_time(),
        })
    }

    /// Columns `t, <states>, ua1.., ud1.., phase`. The sample at the phase
    /// boundary appears once per phase.
    pub fn write_trajectory_csv<W: Write>(&self, out: W, labels: Option<&[String]>, digits: usize) -> Result<()> {
        let n = self.attack_target.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        match labels {
            Some(l) if l.len() == n => header.extend(l.iter().cloned()),
            _ => header.extend((1..=n).map(|i| format!("x{i}"))),
        }
        header.extend((1..=self.attack_inputs).map(|i| format!("ua{i}")));
        header.extend((1..=self.defense_inputs).map(|i| format!("ud{i}")));
        header.push("phase".into());
        w.write_record(&header).map_err(csv_err)?;

        let zeros_a = DVector::zeros(self.attack_inputs);
        let zeros_d = DVector::zeros(self.defense_inputs);
        let (first, second) = match self.kind {
            EpisodeKind::MinimumEnergy => ("attack", "defense"),
            EpisodeKind::LqFeedback => ("attack", "observe"),
        };
        let feedback = |x: &DVector<f64>| match &self.defense_gain {
            Some(k) => -(k * x),
            None => zeros_d.clone(),
        };
        let mut row = |t: f64, x: &DVector<f64>, ua: &DVector<f64>, ud: &DVector<f64>, phase: &str| {
            let mut rec = vec![sig(t, digits)];
            rec.extend(x.iter().chain(ua.iter()).chain(ud.iter()).map(|v| sig(*v, digits)));
            rec.push(phase.to_string());
            w.write_record(&rec).map_err(csv_err)
        };
        let at = &self.attack_trajectory;
        for k in 0..at.times.len() {
            row(
                at.times[k],
                &at.states[k],
                &at.inputs[k],
                &feedback(&at.states[k]),
                first,
            )?;
        }
        let dt = &self.defense_trajectory;
        for k in 0..dt.times.len() {
            row(dt.times[k], &dt.states[k], &zeros_a, &dt.inputs[k], second)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Attack from rest to `x_worst_scale · x_worst` over the attack horizon, then
/// restore to rest over the defense horizon, each with the open-loop
/// minimum-energy law and the other side idle.
pub fn run_min_energy_episode(
    system: &LtiSystem,
    x_worst_scale: f64,
    attack_horizon: f64,
    defense_horizon: f64,
    samples: usize,
) -> Result<ScenarioReport> {
    if !x_worst_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "attack scale must be finite, got {x_worst_scale}"
        )));
    }
    let a = system.a();
    let index = resilience_index(system, attack_horizon, defense_horizon)?;
    let x1 = &index.x_worst * x_worst_scale;

    let attack_task = TransferTask::from_origin(x1.clone(), attack_horizon)?;
    let attack = optimal_control(&attack_task, &index.attack_gramian, a, system.b_attack(), samples)?;

    // the defender restores from the state actually reached
    let handoff = attack.final_state().clone();
    let wd = gramian(a, system.b_defend(), defense_horizon, default_steps(a, defense_horizon))?;
    let defense_task = TransferTask::new(handoff, DVector::zeros(system.n()), defense_horizon)?;
    let defense = optimal_control(&defense_task, &wd, a, system.b_defend(), samples)?.shifted(attack_horizon);

    let attack_energy = attack.energy;
    let defense_energy = defense.energy;
    Ok(ScenarioReport {
        kind: EpisodeKind::MinimumEnergy,
        measured_ratio: (defense_energy > 0.0).then(|| attack_energy / defense_energy),
        theoretical_rho: index.rho,
        terminal_error: defense.final_state().norm(),
        attack_miss: (attack.final_state() - &x1).norm(),
        attack_target: x1,
        attack_energy,
        defense_energy,
        defense_gain: None,
        attack_inputs: system.attack_inputs(),
        defense_inputs: system.defense_inputs(),
        attack_trajectory: attack,
        defense_trajectory: defense,
    })
}

/// State feedback `u_d = -K x` from the algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct LqController {
    pub gain: DMatrix<f64>,
    pub q_weight: DMatrix<f64>,
    pub r_weight: DMatrix<f64>,
    /// Stabilizing Riccati solution `P`.
    pub riccati: DMatrix<f64>,
    pub closed_loop_abscissa: f64,
}

impl LqController {
    pub fn closed_loop(&self, system: &LtiSystem) -> DMatrix<f64> {
        system.a() - system.b_defend() * &self.gain
    }

    pub fn characteristic_time(&self) -> f64 {
        1.0 / self.closed_loop_abscissa.abs()
    }

    /// `‖Aᵀ P + P A - P B R⁻¹ Bᵀ P + Q‖`.
    pub fn riccati_residual(&self, system: &LtiSystem) -> f64 {
        let a = system.a();
        let p = &self.riccati;
        let b = system.b_defend();
        let pb = p * b;
        let r_inv = self
            .r_weight
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::zeros(b.ncols(), b.ncols()));
        (a.transpose() * p + p * a - &pb * r_inv * pb.transpose() + &self.q_weight).norm()
    }
}

/// Newton-Kleinman iteration from the zero gain, which is stabilizing
/// because `A` must be stable.
pub fn design_lqr(system: &LtiSystem, q_weight: &DMatrix<f64>, r_weight: &DMatrix<f64>) -> Result<LqController> {
    let n = system.n();
    let m = system.defense_inputs();
    if q_weight.shape() != (n, n) || r_weight.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "Q must be {n}x{n} and R {m}x{m}, got {:?} and {:?}",
            q_weight.shape(),
            r_weight.shape()
        )));
    }
    check_finite(q_weight, "Q")?;
    check_finite(r_weight, "R")?;
    let q = symmetrize(q_weight);
    let r_chol = Cholesky::new(symmetrize(r_weight))
        .ok_or_else(|| Error::InvalidArgument("R must be symmetric positive definite".into()))?;
    if q.symmetric_eigenvalues().min() < -1e-12 * q.norm() {
        return Err(Error::InvalidArgument("Q must be positive semidefinite".into()));
    }
    let a = system.a();
    let b = system.b_defend();
    let open = is_stable(a)?;
    if !open.stable {
        return Err(Error::InvalidArgument(format!(
            "the zero-gain seed needs a stable A (spectral abscissa {:e})",
            open.abscissa
        )));
    }
    if b.iter().all(|v| *v == 0.0) {
        warn!("defender input matrix is zero; returning K = 0 for the already stable A");
        let p = solve_lyapunov(&a.transpose(), &q)?;
        return Ok(LqController {
            gain: DMatrix::zeros(m, n),
            q_weight: q,
            r_weight: symmetrize(r_weight),
            riccati: p,
            closed_loop_abscissa: open.abscissa,
        });
    }

    let mut k = DMatrix::zeros(m, n);
    let mut p_prev: Option<DMatrix<f64>> = None;
    for _ in 0..RICCATI_MAX_ITERATIONS {
        let acl = a - b * &k;
        let p = solve_lyapunov(&acl.transpose(), &(&q + k.transpose() * r_weight * &k))?;
        k = r_chol.solve(&(b.transpose() * &p));
        let converged = p_prev
            .as_ref()
            .is_some_and(|prev| (&p - prev).norm() <= 1e-13 * p.norm().max(f64::MIN_POSITIVE));
        p_prev = Some(p);
        if converged {
            let acl = a - b * &k;
            let abscissa = is_stable(&acl)?.abscissa;
            return Ok(LqController {
                gain: k,
                q_weight: q,
                r_weight: symmetrize(r_weight),
                riccati: p_prev.unwrap(),
                closed_loop_abscissa: abscissa,
            });
        }
    }
    Err(Error::RiccatiNonConvergence(RICCATI_MAX_ITERATIONS))
}

/// LQ design with `R = r·I`, `r` chosen so the closed loop has the given
/// characteristic time.
pub fn calibrate_lqr(system: &LtiSystem, q_weight: &DMatrix<f64>, target_time: f64) -> Result<LqController> {
    if !(target_time.is_finite() && target_time > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target time must be positive, got {target_time}"
        )));
    }
    let m = system.defense_inputs();
    let design = |log_r: f64| design_lqr(system, q_weight, &(DMatrix::identity(m, m) * log_r.exp()));
    let miss = |c: &LqController| c.characteristic_time() - target_time;

    // Larger control cost means a slower closed loop; bracket around r = 1.
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let start = miss(&design(0.0)?);
    if start == 0.0 {
        return design(0.0);
    }
    let step = if start < 0.0 { 10f64.ln() } else { -(10f64.ln()) };
    let mut found = false;
    for i in 1..=12 {
        let x = step * i as f64;
        if miss(&design(x)?).signum() != start.signum() {
            (lo, hi) = if step > 0.0 { (x - step, x) } else { (x, x - step) };
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::Numerical(format!(
            "no control weight reaches closed-loop characteristic time {target_time}"
        )));
    }
    let lo_sign = miss(&design(lo)?).signum();
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let c = design(mid)?;
        let d = miss(&c);
        if d.abs() <= 1e-10 * target_time || hi - lo < 1e-14 {
            return Ok(c);
        }
        if d.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    design(0.5 * (lo + hi))
}

/// Integrates `dx/dt = A x` on `samples` uniform intervals.
fn free_response(a: &DMatrix<f64>, x0: &DVector<f64>, span: f64, samples: usize) -> Vec<DVector<f64>> {
    let h = span / samples as f64;
    let hs = h / SUBSTEPS as f64;
    let zero = DVector::zeros(x0.len());
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(samples + 1);
    out.push(x.clone());
    for _ in 0..samples {
        for _ in 0..SUBSTEPS {
            x = rk4_step(a, &x, &zero, &zero, &zero, hs);
        }
        out.push(x.clone());
    }
    out
}

/// Minimum-energy attack designed on the closed loop `A - Bd K` reaching the
/// closed-loop worst case at `attack_horizon`, then free closed-loop motion
/// until `observe_until`. Defense energy is `∫ |K x|² dt` over the whole
/// window; the index uses the closed loop with defense span
/// `observe_until - attack_horizon`.
pub fn run_lq_episode(
    system: &LtiSystem,
    controller: &LqController,
    attack_horizon: f64,
    observe_until: f64,
    samples: usize,
) -> Result<ScenarioReport> {
    if observe_until.is_nan() || observe_until <= attack_horizon {
        return Err(Error::InvalidArgument(format!(
            "observation end {observe_until} must follow the attack horizon {attack_horizon}"
        )));
    }
    if controller.gain.shape() != (system.defense_inputs(), system.n()) {
        return Err(Error::Dimension("LQ gain does not match the system".into()));
    }
    let acl = controller.closed_loop(system);
    if !is_stable(&acl)?.stable {
        return Err(Error::InvalidArgument("LQ gain does not stabilize the system".into()));
    }
    let closed = system.with_dynamics(acl.clone())?;
    let index = resilience_index(&closed, attack_horizon, observe_until - attack_horizon)?;
    let x1 = index.x_worst.clone();

    let task = TransferTask::from_origin(x1.clone(), attack_horizon)?;
    let attack = optimal_control(&task, &index.attack_gramian, &acl, system.b_attack(), samples)?;

    let observe_span = observe_until - attack_horizon;
    let states = free_response(&acl, attack.final_state(), observe_span, samples);
    if states.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("closed-loop integration diverged".into()));
    }
    let k = &controller.gain;
    let inputs: Vec<DVector<f64>> = states.iter().map(|x| -(k * x)).collect();
    let h = observe_span / samples as f64;
    let observe_energy = integrate_uniform(&inputs.iter().map(|u| u.norm_squared()).collect::<Vec<_>>(), h)?;
    let during_attack: Vec<f64> = attack.states.iter().map(|x| (k * x).norm_squared()).collect();
    let defense_energy = integrate_uniform(&during_attack, attack.dt())? + observe_energy;

    let observe = Trajectory {
        times: (0..=samples).map(|i| attack_horizon + i as f64 * h).collect(),
        states,
        inputs,
        energy: observe_energy,
    };
    let attack_energy = attack.energy;
    Ok(ScenarioReport {
        kind: EpisodeKind::LqFeedback,
        measured_ratio: (defense_energy > 0.0).then(|| attack_energy / defense_energy),
        theoretical_rho: index.rho,
        terminal_error: observe.final_state().norm(),
        attack_miss: (attack.final_state() - &x1).norm(),
        attack_target: x1,
        attack_energy,
        defense_energy,
        defense_gain: Some(k.clone()),
        attack_inputs: system.attack_inputs(),
        defense_inputs: system.defense_inputs(),
        attack_trajectory: attack,
        defense_trajectory: observe,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rank correlation needs two equal-length series of at least 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("rank correlation of a constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman correlation between measured energy ratios and indices.
pub fn ranking_agreement(reports: &[ScenarioReport], indices: &[f64]) -> Result<f64> {
    let measured = reports
        .iter()
        .map(|r| {
            r.measured_ratio
                .ok_or_else(|| Error::InvalidArgument("episode has no defined energy ratio".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    spearman(&measured, indices)
}
