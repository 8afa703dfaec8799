//! The resilience index: the smallest ratio, over attack displacements
//! `x₁`, of the attacker's minimum energy to reach `x₁` from rest and the
//! defender's minimum energy to bring `x₁` back to rest.
//!
//! With `W_a` the attacker's Gramian over the attack window and
//! `W̃_d = e^{-A s} W_d e^{-Aᵀ s}` the defender's Gramian back-propagated over
//! the defense span `s`, the index is
//!
//! ```text
//! ρ = min_x (xᵀ W_a⁻¹ x) / (xᵀ W̃_d⁻¹ x) = 1 / max_x (xᵀ W_a x) / (xᵀ W̃_d x)
//! ```
//!
//! and the right-hand form is evaluated as a symmetric-definite generalized
//! eigenproblem whitened by the Cholesky factor of `W̃_d`, so a singular
//! attacker Gramian needs no special treatment.
//!
//! The two quotients have different optimizers. The top eigenvector `v`
//! maximizes the right-hand one, while the displacement minimizing the
//! energy ratio is `W_a v` (equivalently `W̃_d v`). That displacement is what
//! an attacker should steer to, and it is what [`ResilienceResult::x_worst`]
//! holds.

use std::io::Write;

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::{json_number, sig};
use crate::gramian::{default_big_m, default_steps, defender_tilde_gramian, gramian, ExtendedInverse, Gramian};
use crate::linalg::{check_square, generalized_symmetric_eigen};
use crate::model::{controllability, is_stable, LtiSystem, DEFAULT_RANK_TOLERANCE};

/// Relative gap below which the top generalized eigenvalue counts as repeated.
const DEGENERACY_GAP: f64 = 1e-8;

/// Gramian integration resolution used by the index routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Integration {
    /// Multiplies [`default_steps`]; 2 halves the step size.
    pub step_multiplier: usize,
}

impl Default for Integration {
    fn default() -> Self {
        Self { step_multiplier: 1 }
    }
}

impl Integration {
    pub fn steps(&self, a: &DMatrix<f64>, horizon: f64) -> usize {
        default_steps(a, horizon) * self.step_multiplier.max(1)
    }
}

#[derive(Debug, Clone)]
pub struct ResilienceResult {
    /// `1 / lambda_max`, or `f64::INFINITY` when the attacker cannot move the state.
    pub rho: f64,
    /// Largest generalized eigenvalue of `(W_a, W̃_d)`.
    pub lambda_max: f64,
    /// Unit-norm displacement minimizing the attack/defense energy ratio,
    /// `W_a v` for the top eigenvector `v`; first non-negligible entry positive.
    pub x_worst: DVector<f64>,
    /// Unit-norm top generalized eigenvector `v` with `W_a v = lambda_max W̃_d v`,
    /// same sign convention. It maximizes the Gramian quotient, whereas the
    /// energy ratio of the inverse forms is minimized by `x_worst`.
    pub eigenvector: DVector<f64>,
    pub attack_horizon: f64,
    pub defense_horizon: f64,
    /// The top eigenvalue is repeated, so `x_worst` is one of many minimizers.
    pub degenerate: bool,
    /// `false` when `A` was not stable and the index was evaluated mechanically.
    pub stable_dynamics: bool,
    pub attack_gramian: Gramian,
    pub defense_gramian_tilde: Gramian,
}

impl ResilienceResult {
    pub fn is_infinite(&self) -> bool {
        self.rho.is_infinite()
    }

    /// `{rho, lambda_max, x_worst, horizons}` with `rho = "inf"` when unbounded.
    pub fn to_document(&self) -> Value {
        json!({
            "rho": json_number(self.rho),
            "lambda_max": self.lambda_max,
            "x_worst": self.x_worst.iter().cloned().collect::<Vec<f64>>(),
            "eigenvector": self.eigenvector.iter().cloned().collect::<Vec<f64>>(),
            "horizons": {
                "attack": self.attack_horizon,
                "defense": self.defense_horizon,
            },
            "degenerate": self.degenerate,
            "stable_dynamics": self.stable_dynamics,
        })
    }
}

fn check_horizon(h: f64, what: &str) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} must be positive and finite, got {h}"
        )))
    }
}

fn require_controllable(a: &DMatrix<f64>, b_defend: &DMatrix<f64>) -> Result<()> {
    let report = controllability(a, b_defend, DEFAULT_RANK_TOLERANCE)?;
    if report.is_controllable {
        Ok(())
    } else {
        Err(Error::Uncontrollable {
            rank: report.numerical_rank,
            n: report.state_dim,
            unreachable: report.unreachable_dim(),
        })
    }
}

fn dynamics_are_stable(a: &DMatrix<f64>) -> Result<bool> {
    let st = is_stable(a)?;
    if !st.stable {
        warn!(
            "A is not stable (spectral abscissa {:e}); the index is evaluated but has no energy-ratio guarantee",
            st.abscissa
        );
    }
    Ok(st.stable)
}

/// Attacker Gramian over the attack window.
pub fn attack_gramian(a: &DMatrix<f64>, b_attack: &DMatrix<f64>, horizon: f64, integ: Integration) -> Result<Gramian> {
    check_horizon(horizon, "attack horizon")?;
    gramian(a, b_attack, horizon, integ.steps(a, horizon))
}

/// Back-propagated defender Gramian `W̃_d` over the defense window.
pub fn defense_gramian_tilde(
    a: &DMatrix<f64>,
    b_defend: &DMatrix<f64>,
    horizon: f64,
    integ: Integration,
) -> Result<Gramian> {
    check_horizon(horizon, "defense horizon")?;
    let wd = gramian(a, b_defend, horizon, integ.steps(a, horizon))?;
    defender_tilde_gramian(a, &wd, horizon)
}

/// `ρ(0, t₁, t₁ + t₂)` for attack span `t₁` and defense span `t₂`.
pub fn resilience_index(system: &LtiSystem, attack_horizon: f64, defense_horizon: f64) -> Result<ResilienceResult> {
    resilience_index_with(system, attack_horizon, defense_horizon, Integration::default())
}

pub fn resilience_index_with(
    system: &LtiSystem,
    attack_horizon: f64,
    defense_horizon: f64,
    integ: Integration,
) -> Result<ResilienceResult> {
    check_horizon(attack_horizon, "attack horizon")?;
    check_horizon(defense_horizon, "defense horizon")?;
    let a = system.a();
    require_controllable(a, system.b_defend())?;
    let stable = dynamics_are_stable(a)?;
    let wa = attack_gramian(a, system.b_attack(), attack_horizon, integ)?;
    let wt = defense_gramian_tilde(a, system.b_defend(), defense_horizon, integ)?;
    let mut r = index_from_gramians(wa, wt)?;
    r.stable_dynamics = stable;
    Ok(r)
}

/// Solves the generalized eigenproblem for precomputed `W_a` and `W̃_d`.
pub fn index_from_gramians(wa: Gramian, wt: Gramian) -> Result<ResilienceResult> {
    if wa.dim() != wt.dim() {
        return Err(Error::Dimension("attack and defense Gramians differ in size".into()));
    }
    let n = wa.dim();
    let eig = generalized_symmetric_eigen(wa.matrix(), wt.matrix()).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(format!("defender Gramian is not positive definite: {msg}")),
        other => other,
    })?;
    let lambda = eig.values[0];
    let rho = if wa.lambda_max() <= 0.0 || lambda <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / lambda
    };
    let degenerate = n > 1 && lambda > 0.0 && (lambda - eig.values[1]) < DEGENERACY_GAP * lambda;
    let eigenvector = canonical_direction(eig.vectors.column(0).into_owned());
    // W_a v lies in the attacker's reachable set even when W_a is singular
    let x_worst = if rho.is_finite() {
        canonical_direction(wa.matrix() * &eigenvector)
    } else {
        eigenvector.clone()
    };
    Ok(ResilienceResult {
        rho,
        lambda_max: lambda.max(0.0),
        x_worst,
        eigenvector,
        attack_horizon: wa.horizon(),
        defense_horizon: wt.horizon(),
        degenerate,
        stable_dynamics: true,
        attack_gramian: wa,
        defense_gramian_tilde: wt,
    })
}

/// Normalizes to unit length with the first non-negligible entry positive.
fn canonical_direction(mut x: DVector<f64>) -> DVector<f64> {
    let norm = x.norm();
    if norm == 0.0 {
        let mut e = DVector::zeros(x.len());
        e[0] = 1.0;
        return e;
    }
    x /= norm;
    let big = x.amax();
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-9 * big) {
        if *first < 0.0 {
            x.neg_mut();
        }
    }
    x
}

/// `(x₁ᵀ W_a⁻¹ x₁) / (x₁ᵀ W̃_d⁻¹ x₁)` with extended inverses; a displacement the
/// attacker cannot reach comes out at the scale of `M`.
pub fn energy_ratio_theoretical(
    system: &LtiSystem,
    x1: &DVector<f64>,
    attack_horizon: f64,
    defense_horizon: f64,
) -> Result<f64> {
    check_horizon(attack_horizon, "attack horizon")?;
    check_horizon(defense_horizon, "defense horizon")?;
    let a = system.a();
    let integ = Integration::default();
    let wa = attack_gramian(a, system.b_attack(), attack_horizon, integ)?;
    let wt = defense_gramian_tilde(a, system.b_defend(), defense_horizon, integ)?;
    energy_ratio_from_gramians(&wa, &wt, x1)
}

pub fn energy_ratio_from_gramians(wa: &Gramian, wt: &Gramian, x1: &DVector<f64>) -> Result<f64> {
    if x1.len() != wa.dim() || x1.len() != wt.dim() {
        return Err(Error::Dimension("displacement and Gramians differ in size".into()));
    }
    if x1.norm() == 0.0 {
        return Err(Error::InvalidArgument("displacement must be nonzero".into()));
    }
    let num = ExtendedInverse::new(wa, default_big_m(wa))?.quadratic_form(x1);
    let den = ExtendedInverse::new(wt, default_big_m(wt))?.quadratic_form(x1);
    Ok(num / den)
}

/// The three Rayleigh-quotient extrema of an SPD pair `(A, B)` and the
/// relation between their minimizers, each from its own eigen-solve.
#[derive(Debug, Clone)]
pub struct LemmaCheck {
    /// `min xᵀA⁻¹x / xᵀB⁻¹x`
    pub inverse_form: f64,
    /// `min xᵀBx / xᵀAx`
    pub swapped_form: f64,
    /// `(max xᵀAx / xᵀBx)⁻¹`
    pub reciprocal_form: f64,
    /// Minimizer of the inverse form.
    pub x_l: DVector<f64>,
    /// Maximizer of `xᵀAx / xᵀBx`.
    pub x_mr: DVector<f64>,
    /// Angle in radians between `x_l` and `B x_mr`, sign-insensitive.
    pub relation_angle: f64,
}

impl LemmaCheck {
    /// Largest pairwise relative disagreement among the three values.
    pub fn max_relative_spread(&self) -> f64 {
        let v = [self.inverse_form, self.swapped_form, self.reciprocal_form];
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi.abs()
    }
}

pub fn lemma_check(a_spd: &DMatrix<f64>, b_spd: &DMatrix<f64>) -> Result<LemmaCheck> {
    check_square(a_spd, "A")?;
    if a_spd.shape() != b_spd.shape() {
        return Err(Error::Dimension("lemma matrices differ in size".into()));
    }
    let spd = |m: &DMatrix<f64>, name: &str| {
        if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max() {
            return Err(Error::InvalidArgument(format!("{name} is not symmetric")));
        }
        Cholesky::new(m.clone()).ok_or_else(|| Error::InvalidArgument(format!("{name} is not positive definite")))
    };
    let ca = spd(a_spd, "A")?;
    let cb = spd(b_spd, "B")?;
    let n = a_spd.nrows();

    let inv = generalized_symmetric_eigen(&ca.inverse(), &cb.inverse())?;
    let swapped = generalized_symmetric_eigen(b_spd, a_spd)?;
    let direct = generalized_symmetric_eigen(a_spd, b_spd)?;

    let x_l = inv.vectors.column(n - 1).into_owned();
    let x_mr = direct.vectors.column(0).into_owned();
    let relation_angle = unsigned_angle(&x_l, &(b_spd * &x_mr));
    Ok(LemmaCheck {
        inverse_form: inv.values[n - 1],
        swapped_form: swapped.values[n - 1],
        reciprocal_form: 1.0 / direct.values[0],
        x_l,
        x_mr,
        relation_angle,
    })
}

/// Angle between the lines spanned by `u` and `v`, in `[0, π/2]`.
pub fn unsigned_angle(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let u = u.normalize();
    let mut v = v.normalize();
    if u.dot(&v) < 0.0 {
        v.neg_mut();
    }
    2.0 * (&u - &v).norm().atan2((&u + &v).norm())
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub dt: f64,
    pub result: ResilienceResult,
}

/// `ρ(0, Δt, 2Δt)` for each `Δt`, evaluated independently.
pub fn sweep(system: &LtiSystem, horizons: &[f64]) -> Result<Vec<SweepPoint>> {
    sweep_with(system, horizons, Integration::default())
}

pub fn sweep_with(system: &LtiSystem, horizons: &[f64], integ: Integration) -> Result<Vec<SweepPoint>> {
    validate_sorted(horizons)?;
    horizons
        .par_iter()
        .map(|&dt| resilience_index_with(system, dt, dt, integ).map(|result| SweepPoint { dt, result }))
        .collect()
}

fn validate_sorted(horizons: &[f64]) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("no horizons given".into()));
    }
    for h in horizons {
        check_horizon(*h, "sweep horizon")?;
    }
    if horizons.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("sweep horizons must be sorted ascending".into()));
    }
    Ok(())
}

/// `count` log-spaced values from `min` to `max` inclusive.
pub fn log_range(count: usize, min: f64, max: f64) -> Result<Vec<f64>> {
    if count == 0 || !(max.is_finite() && min > 0.0 && max >= min) {
        return Err(Error::InvalidArgument(format!(
            "bad log range: count {count}, min {min}, max {max}"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                max
            } else {
                (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// One entry of a placement table or sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// The index, possibly `f64::INFINITY`.
    Index(f64),
    /// `(A, Bd)` is not controllable for this defender.
    Uncontrollable {
        unreachable: usize,
    },
    Failed(String),
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Index(v) => Some(*v),
            _ => None,
        }
    }

    /// CSV rendering: the number, `inf`, or `nan` for cells without a value.
    pub fn render(&self, digits: usize) -> String {
        match self {
            Cell::Index(v) => sig(*v, digits),
            _ => "nan".into(),
        }
    }
}

/// Indices for every attacker/defender pairing; rows are attackers.
#[derive(Debug, Clone)]
pub struct PlacementTable {
    pub attackers: Vec<String>,
    pub defenders: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
    pub attack_horizon: f64,
    pub defense_horizon: f64,
}

impl PlacementTable {
    pub fn value(&self, attacker: &str, defender: &str) -> Option<f64> {
        let i = self.attackers.iter().position(|n| n == attacker)?;
        let j = self.defenders.iter().position(|n| n == defender)?;
        self.cells[i][j].value()
    }

    /// Defender with the largest index against attacker `row`.
    pub fn best_defender(&self, row: usize) -> Option<usize> {
        argbest(self.cells[row].iter().map(Cell::value), |a, b| a > b)
    }

    /// Attacker with the smallest index against defender `col`.
    pub fn weakest_attacker(&self, col: usize) -> Option<usize> {
        argbest(self.cells.iter().map(|r| r[col].value()), |a, b| a < b)
    }

    /// Header `attacker\defender,<defenders..>`, one row per attacker.
    pub fn write_csv<W: Write>(&self, out: W, digits: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["attacker\\defender".to_string()];
        header.extend(self.defenders.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (name, row) in self.attackers.iter().zip(&self.cells) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|c| c.render(digits)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn argbest(values: impl Iterator<Item = Option<f64>>, better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| better(v, b)) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn check_options(n: usize, options: &[(String, DMatrix<f64>)], side: &str) -> Result<()> {
    if options.is_empty() {
        return Err(Error::InvalidArgument(format!("no {side} options")));
    }
    for (name, b) in options {
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "{side} option '{name}' is {}x{}, expected {n} rows",
                b.nrows(),
                b.ncols()
            )));
        }
    }
    Ok(())
}

/// Every attacker option against every defender option. Gramians are built
/// once per option; cells whose defender pair is uncontrollable are flagged
/// rather than failing the table.
pub fn placement_table(
    a: &DMatrix<f64>,
    attackers: &[(String, DMatrix<f64>)],
    defenders: &[(String, DMatrix<f64>)],
    attack_horizon: f64,
    defense_horizon: f64,
) -> Result<PlacementTable> {
    placement_table_with(
        a,
        attackers,
        defenders,
        attack_horizon,
        defense_horizon,
        Integration::default(),
    )
}

pub fn placement_table_with(
    a: &DMatrix<f64>,
    attackers: &[(String, DMatrix<f64>)],
    defenders: &[(String, DMatrix<f64>)],
    attack_horizon: f64,
    defense_horizon: f64,
    integ: Integration,
) -> Result<PlacementTable> {
    check_square(a, "A")?;
    check_horizon(attack_horizon, "attack horizon")?;
    check_horizon(defense_horizon, "defense horizon")?;
    let n = a.nrows();
    check_options(n, attackers, "attacker")?;
    check_options(n, defenders, "defender")?;
    dynamics_are_stable(a)?;

    let attack: Vec<Result<Gramian>> = attackers
        .par_iter()
        .map(|(_, b)| attack_gramian(a, b, attack_horizon, integ))
        .collect();
    let defense: Vec<Result<Gramian>> = defenders
        .par_iter()
        .map(|(_, b)| {
            require_controllable(a, b)?;
            defense_gramian_tilde(a, b, defense_horizon, integ)
        })
        .collect();

    let cells = attack
        .iter()
        .map(|wa| {
            defense
                .iter()
                .map(|wt| match (wa, wt) {
                    (_, Err(Error::Uncontrollable { unreachable, .. })) => Cell::Uncontrollable {
                        unreachable: *unreachable,
                    },
                    (Err(e), _) | (_, Err(e)) => Cell::Failed(e.to_string()),
                    (Ok(wa), Ok(wt)) => match index_from_gramians(wa.clone(), wt.clone()) {
                        Ok(r) => Cell::Index(r.rho),
                        Err(e) => Cell::Failed(e.to_string()),
                    },
                })
                .collect()
        })
        .collect();

    Ok(PlacementTable {
        attackers: attackers.iter().map(|(n, _)| n.clone()).collect(),
        defenders: defenders.iter().map(|(n, _)| n.clone()).collect(),
        cells,
        attack_horizon,
        defense_horizon,
    })
}

/// `ρ(0, Δt, 2Δt)` for one attacker against several defenders.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub horizons: Vec<f64>,
    pub defenders: Vec<String>,
    /// One row per horizon, one cell per defender.
    pub cells: Vec<Vec<Cell>>,
}

impl SweepTable {
    pub fn column(&self, defender: &str) -> Option<Vec<Option<f64>>> {
        let j = self.defenders.iter().position(|n| n == defender)?;
        Some(self.cells.iter().map(|r| r[j].value()).collect())
    }

    /// Header `dt,<defenders..>`, one row per horizon.
    pub fn write_csv<W: Write>(&self, out: W, digits: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["dt".to_string()];
        header.extend(self.defenders.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (dt, row) in self.horizons.iter().zip(&self.cells) {
            let mut rec = vec![sig(*dt, digits)];
            rec.extend(row.iter().map(|c| c.render(digits)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sweep_defenders(
    a: &DMatrix<f64>,
    b_attack: &DMatrix<f64>,
    defenders: &[(String, DMatrix<f64>)],
    horizons: &[f64],
) -> Result<SweepTable> {
    validate_sorted(horizons)?;
    let attacker = [("attacker".to_string(), b_attack.clone())];
    let rows: Result<Vec<Vec<Cell>>> = horizons
        .par_iter()
        .map(|&dt| placement_table(a, &attacker, defenders, dt, dt).map(|t| t.cells.into_iter().next().unwrap()))
        .collect();
    Ok(SweepTable {
        horizons: horizons.to_vec(),
        defenders: defenders.iter().map(|(n, _)| n.clone()).collect(),
        cells: rows?,
    })
}
