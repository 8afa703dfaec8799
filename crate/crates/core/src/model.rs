//! The two-input LTI system `dx/dt = A x + Ba ua + Bd ud` and its diagnostics.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_square, from_rows, numerical_rank, to_rows};

/// Default relative singular-value cutoff for Kalman-matrix rank decisions.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-9;

/// Linear time-invariant system with separate attacker and defender inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b_attack: DMatrix<f64>,
    b_defend: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b_attack: DMatrix<f64>, b_defend: DMatrix<f64>) -> Result<Self> {
        check_square(&a, "A")?;
        let n = a.nrows();
        for (m, name) in [(&b_attack, "Ba"), (&b_defend, "Bd")] {
            if m.nrows() != n {
                return Err(Error::Dimension(format!(
                    "{name} has {} rows but A is {n}x{n}",
                    m.nrows()
                )));
            }
            if m.ncols() == 0 {
                return Err(Error::Dimension(format!("{name} has no columns")));
            }
        }
        check_finite(&a, "A")?;
        check_finite(&b_attack, "Ba")?;
        check_finite(&b_defend, "Bd")?;
        Ok(Self {
            a,
            b_attack,
            b_defend,
            labels: None,
        })
    }

    /// Attaches one name per state.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} labels for {} states",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same dynamics and defender, different attacker input map.
    pub fn with_attack(&self, b_attack: DMatrix<f64>) -> Result<Self> {
        let mut s = Self::new(self.a.clone(), b_attack, self.b_defend.clone())?;
        s.labels = self.labels.clone();
        Ok(s)
    }

    /// Same dynamics and attacker, different defender input map.
    pub fn with_defense(&self, b_defend: DMatrix<f64>) -> Result<Self> {
        let mut s = Self::new(self.a.clone(), self.b_attack.clone(), b_defend)?;
        s.labels = self.labels.clone();
        Ok(s)
    }

    /// Replaces the dynamics matrix, e.g. with a closed loop `A - Bd K`.
    pub fn with_dynamics(&self, a: DMatrix<f64>) -> Result<Self> {
        let mut s = Self::new(a, self.b_attack.clone(), self.b_defend.clone())?;
        s.labels = self.labels.clone();
        Ok(s)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_attack(&self) -> &DMatrix<f64> {
        &self.b_attack
    }

    pub fn b_defend(&self) -> &DMatrix<f64> {
        &self.b_defend
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn attack_inputs(&self) -> usize {
        self.b_attack.ncols()
    }

    pub fn defense_inputs(&self) -> usize {
        self.b_defend.ncols()
    }
}

/// On-disk form of a system: `{"A": [[..]], "Ba": [[..]], "Bd": [[..]], "labels": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDocument {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Ba")]
    pub b_attack: Vec<Vec<f64>>,
    #[serde(rename = "Bd")]
    pub b_defend: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl TryFrom<SystemDocument> for LtiSystem {
    type Error = Error;

    fn try_from(doc: SystemDocument) -> Result<Self> {
        let sys = LtiSystem::new(
            from_rows(&doc.a, "A")?,
            from_rows(&doc.b_attack, "Ba")?,
            from_rows(&doc.b_defend, "Bd")?,
        )?;
        match doc.labels {
            Some(l) => sys.with_labels(l),
            None => Ok(sys),
        }
    }
}

impl From<&LtiSystem> for SystemDocument {
    fn from(sys: &LtiSystem) -> Self {
        Self {
            a: to_rows(&sys.a),
            b_attack: to_rows(&sys.b_attack),
            b_defend: to_rows(&sys.b_defend),
            labels: sys.labels.clone(),
        }
    }
}

/// Parses and validates a system document.
pub fn load_system(source: &str) -> Result<LtiSystem> {
    let doc: SystemDocument = serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    doc.try_into()
}

fn compact<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data always serializes")
}

/// Serializes a system with one matrix row per line; floats use shortest
/// round-trip formatting so `load_system(save_system(s)) == s` bit for bit.
pub fn save_system(sys: &LtiSystem) -> String {
    let doc = SystemDocument::from(sys);
    let matrix = |rows: &[Vec<f64>]| {
        let body: Vec<String> = rows.iter().map(|r| format!("    {}", compact(r))).collect();
        format!("[\n{}\n  ]", body.join(",\n"))
    };
    let mut fields = vec![
        format!("  \"A\": {}", matrix(&doc.a)),
        format!("  \"Ba\": {}", matrix(&doc.b_attack)),
        format!("  \"Bd\": {}", matrix(&doc.b_defend)),
    ];
    if let Some(labels) = &doc.labels {
        fields.push(format!("  \"labels\": {}", compact(labels)));
    }
    format!("{{\n{}\n}}", fields.join(",\n"))
}

pub fn read_system_file(path: impl AsRef<Path>) -> Result<LtiSystem> {
    load_system(&std::fs::read_to_string(path)?)
}

pub fn write_system_file(sys: &LtiSystem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_system(sys) + "\n")?;
    Ok(())
}

/// Kalman-rank controllability of a pair `(A, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllabilityReport {
    pub numerical_rank: usize,
    pub is_controllable: bool,
    pub rank_tolerance: f64,
    pub state_dim: usize,
}

impl ControllabilityReport {
    /// Dimension of the subspace the input cannot reach.
    pub fn unreachable_dim(&self) -> usize {
        self.state_dim - self.numerical_rank
    }
}

/// Kalman matrix `[B, AB, ..., A^{n-1} B]`.
pub fn kalman_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a, "A")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, A is {n}x{n}",
            b.nrows()
        )));
    }
    let m = b.ncols();
    let mut k = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        k.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    Ok(k)
}

/// Numerical rank of the Kalman matrix with singular values below
/// `tolerance * sigma_max` treated as zero.
pub fn controllability(a: &DMatrix<f64>, b: &DMatrix<f64>, tolerance: f64) -> Result<ControllabilityReport> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be positive, got {tolerance}"
        )));
    }
    let k = kalman_matrix(a, b)?;
    let n = a.nrows();
    let rank = numerical_rank(&k, tolerance);
    Ok(ControllabilityReport {
        numerical_rank: rank,
        is_controllable: rank == n,
        rank_tolerance: tolerance,
        state_dim: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part among the eigenvalues of A.
    pub abscissa: f64,
}

impl Stability {
    /// Reciprocal of the slowest decay rate; `None` unless stable.
    pub fn characteristic_time(&self) -> Option<f64> {
        self.stable.then(|| 1.0 / self.abscissa.abs())
    }
}

pub fn is_stable(a: &DMatrix<f64>) -> Result<Stability> {
    check_square(a, "A")?;
    check_finite(a, "A")?;
    let eig = a.clone().complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("eigenvalue solver failed".into()));
    }
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    // real parts within roundoff of the imaginary axis count as marginal
    let margin = 1e-12 * a.norm().max(1.0);
    Ok(Stability {
        stable: abscissa < -margin,
        abscissa,
    })
}

/// `1 / |max Re λ(A)|` for stable `A`.
pub fn characteristic_time(a: &DMatrix<f64>) -> Result<Option<f64>> {
    Ok(is_stable(a)?.characteristic_time())
}
