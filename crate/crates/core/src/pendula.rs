//! Three pendula in a chain, coupled by springs between neighbours.
//!
//! Linearized about the hanging equilibrium,
//! `m l θ̈_i = -m g θ_i - Σ_j k l (θ_i - θ_j) - d_i θ̇_i + τ_i / l + F_i`,
//! with defender torques `τ_i` at the bases and attacker forces `F_i` on the
//! masses. State ordering is `[θ_1, θ_2, θ_3, θ̇_1, θ̇_2, θ̇_3]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::LtiSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulaParams {
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// N/m
    pub spring: f64,
    /// m/s²
    pub gravity: f64,
    /// Per-pendulum damping, 1/s.
    pub damping: [f64; 3],
}

impl Default for PendulaParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            spring: 10.0,
            gravity: 10.0,
            damping: [0.1, 0.1, 0.3],
        }
    }
}

impl PendulaParams {
    pub fn validate(&self) -> Result<()> {
        let scalars = [self.mass, self.length, self.gravity];
        if scalars
            .iter()
            .chain(self.damping.iter())
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "pendula parameters must be positive: {self:?}"
            )));
        }
        // a zero spring decouples the pendula, which is still a valid model
        if !(self.spring.is_finite() && self.spring >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spring constant must be non-negative: {}",
                self.spring
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pendulum {
    Left,
    Middle,
    Right,
}

impl Pendulum {
    pub const ALL: [Pendulum; 3] = [Pendulum::Left, Pendulum::Middle, Pendulum::Right];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Named input location used by the benchmark option sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    Left,
    Middle,
    Right,
    All,
}

impl Placement {
    pub const ALL: [Placement; 4] = [Placement::Left, Placement::Middle, Placement::Right, Placement::All];

    pub fn pendula(self) -> Vec<Pendulum> {
        match self {
            Placement::Left => vec![Pendulum::Left],
            Placement::Middle => vec![Pendulum::Middle],
            Placement::Right => vec![Pendulum::Right],
            Placement::All => Pendulum::ALL.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Placement::Left => "Left",
            Placement::Middle => "Middle",
            Placement::Right => "Right",
            Placement::All => "All",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Placement::Left),
            "middle" => Ok(Placement::Middle),
            "right" => Ok(Placement::Right),
            "all" => Ok(Placement::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown placement '{other}' (expected left, middle, right or all)"
            ))),
        }
    }
}

/// Parses `pendula:<attacker>/<defender>`.
pub fn parse_selector(s: &str) -> Result<(Placement, Placement)> {
    let rest = s
        .strip_prefix("pendula:")
        .ok_or_else(|| Error::InvalidArgument(format!("'{s}' is not a pendula selector")))?;
    let (att, def) = rest
        .split_once('/')
        .ok_or_else(|| Error::InvalidArgument(format!("selector '{s}' needs <attacker>/<defender>")))?;
    Ok((att.parse()?, def.parse()?))
}

/// State matrix `A`.
pub fn dynamics(params: &PendulaParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let PendulaParams {
        mass: m,
        length: l,
        spring: k,
        gravity: g,
        damping: d,
    } = *params;
    let mut stiffness = DMatrix::zeros(3, 3);
    for i in 0..3 {
        stiffness[(i, i)] -= m * g;
        // chain 1-2-3
        for j in [i.wrapping_sub(1), i + 1] {
            if j < 3 {
                stiffness[(i, i)] -= k * l;
                stiffness[(i, j)] += k * l;
            }
        }
    }
    let mut a = DMatrix::zeros(6, 6);
    a.view_mut((0, 3), (3, 3)).fill_with_identity();
    a.view_mut((3, 0), (3, 3)).copy_from(&(stiffness / (m * l)));
    for i in 0..3 {
        a[(3 + i, 3 + i)] = -d[i] / (m * l);
    }
    Ok(a)
}

fn input_matrix(selection: &[Pendulum], gain: f64) -> Result<DMatrix<f64>> {
    let mut picked = selection.to_vec();
    picked.sort();
    picked.dedup();
    if picked.is_empty() {
        return Err(Error::InvalidArgument("input selection must not be empty".into()));
    }
    let mut b = DMatrix::zeros(6, picked.len());
    for (c, p) in picked.iter().enumerate() {
        b[(3 + p.index(), c)] = gain;
    }
    Ok(b)
}

/// Attacker forces enter as `F_i / (m l)`.
pub fn attack_matrix(params: &PendulaParams, selection: &[Pendulum]) -> Result<DMatrix<f64>> {
    params.validate()?;
    input_matrix(selection, 1.0 / (params.mass * params.length))
}

/// Defender torques enter as `τ_i / (m l²)`.
pub fn defense_matrix(params: &PendulaParams, selection: &[Pendulum]) -> Result<DMatrix<f64>> {
    params.validate()?;
    input_matrix(selection, 1.0 / (params.mass * params.length * params.length))
}

pub fn state_labels() -> Vec<String> {
    ["theta1", "theta2", "theta3", "omega1", "omega2", "omega3"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn build(params: &PendulaParams, attacker: &[Pendulum], defender: &[Pendulum]) -> Result<LtiSystem> {
    LtiSystem::new(
        dynamics(params)?,
        attack_matrix(params, attacker)?,
        defense_matrix(params, defender)?,
    )?
    .with_labels(state_labels())
}

pub fn build_placement(params: &PendulaParams, attacker: Placement, defender: Placement) -> Result<LtiSystem> {
    build(params, &attacker.pendula(), &defender.pendula())
}

/// Named attacker and defender input matrices.
#[derive(Debug, Clone)]
pub struct OptionSet {
    pub attackers: Vec<(String, DMatrix<f64>)>,
    pub defenders: Vec<(String, DMatrix<f64>)>,
}

/// Left / Middle / Right / All for both sides.
pub fn standard_option_set(params: &PendulaParams) -> Result<OptionSet> {
    let mut attackers = Vec::new();
    let mut defenders = Vec::new();
    for p in Placement::ALL {
        attackers.push((p.name().to_string(), attack_matrix(params, &p.pendula())?));
        defenders.push((p.name().to_string(), defense_matrix(params, &p.pendula())?));
    }
    Ok(OptionSet { attackers, defenders })
}

/// Kinetic plus potential energy (gravity and springs) of a state.
pub fn mechanical_energy(params: &PendulaParams, x: &DVector<f64>) -> f64 {
    let PendulaParams {
        mass: m,
        length: l,
        spring: k,
        gravity: g,
        ..
    } = *params;
    let theta = x.rows(0, 3);
    let omega = x.rows(3, 3);
    let kinetic = 0.5 * m * l * l * omega.norm_squared();
    let gravity = 0.5 * m * g * l * theta.norm_squared();
    let springs = 0.5 * k * l * l * ((theta[0] - theta[1]).powi(2) + (theta[1] - theta[2]).powi(2));
    kinetic + gravity + springs
}

/// State permutation swapping the left and right pendulum.
pub fn mirror_permutation() -> DMatrix<f64> {
    let mut p = DMatrix::zeros(6, 6);
    for (i, j) in [(0, 2), (1, 1), (2, 0), (3, 5), (4, 4), (5, 3)] {
        p[(i, j)] = 1.0;
    }
    p
}
