//! Controllability Gramians: finite horizon via the differential Lyapunov
//! equation, infinite horizon via the algebraic one, the defender's
//! back-propagated Gramian and the spectral extended inverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::linalg::{check_finite, check_square, solve_lyapunov, sorted_symmetric_eigen, symmetrize};
use crate::model::is_stable;

/// Eigenvalues below this fraction of the largest one count as zero.
pub const GRAMIAN_RANK_TOLERANCE: f64 = 1e-9;

/// Negative eigenvalues larger than this fraction of the largest one mean
/// the matrix is not a Gramian.
const PSD_TOLERANCE: f64 = 1e-8;

/// Minimum number of integrator steps for a finite-horizon Gramian.
pub const MIN_STEPS: usize = 2000;

/// Symmetric positive semidefinite Gramian with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct Gramian {
    w: DMatrix<f64>,
    horizon: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    numerical_rank: usize,
}

impl Gramian {
    /// Symmetrizes `w`, decomposes it and clamps roundoff-level negative
    /// eigenvalues to zero. `horizon` is `f64::INFINITY` for the Lyapunov limit.
    pub fn from_matrix(w: DMatrix<f64>, horizon: f64) -> Result<Self> {
        check_square(&w, "Gramian")?;
        check_finite(&w, "Gramian")?;
        let w = symmetrize(&w);
        let (mut eigenvalues, eigenvectors) = sorted_symmetric_eigen(&w);
        let top = eigenvalues[0].max(0.0);
        let lowest = eigenvalues[eigenvalues.len() - 1];
        if lowest < -PSD_TOLERANCE * top || (top == 0.0 && lowest < 0.0) {
            return Err(Error::Numerical(format!(
                "Gramian is not positive semidefinite (eigenvalue {lowest:e}, largest {top:e})"
            )));
        }
        eigenvalues.apply(|v| *v = v.max(0.0));
        let numerical_rank = eigenvalues
            .iter()
            .filter(|v| top > 0.0 && **v > GRAMIAN_RANK_TOLERANCE * top)
            .count();
        Ok(Self {
            w,
            horizon,
            eigenvalues,
            eigenvectors,
            numerical_rank,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Nonincreasing, clamped at zero.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn numerical_rank(&self) -> usize {
        self.numerical_rank
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_full_rank(&self) -> bool {
        self.numerical_rank == self.dim()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `xᵀ W x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.w * x))
    }

    /// Orthonormal basis of the numerically reachable subspace (columns).
    pub fn range_basis(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.numerical_rank).into_owned()
    }
}

/// Default integrator steps: `max(2000, 200 * horizon / T_sys)`, with
/// `T_sys` the characteristic time of `a` (2000 when `a` is not stable).
pub fn default_steps(a: &DMatrix<f64>, horizon: f64) -> usize {
    let t_sys = is_stable(a).ok().and_then(|s| s.characteristic_time());
    match t_sys {
        Some(t) if horizon.is_finite() => MIN_STEPS.max((200.0 * horizon / t).ceil() as usize),
        _ => MIN_STEPS,
    }
}

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    check_square(a, "A")?;
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, A is {n}x{n}",
            b.nrows(),
            n = a.nrows()
        )));
    }
    check_finite(a, "A")?;
    check_finite(b, "B")
}

/// Finite-horizon Gramian: integrates `dW/dt = A W + W Aᵀ + B Bᵀ` from
/// `W(0) = 0` with `steps` classical Runge-Kutta steps.
pub fn gramian(a: &DMatrix<f64>, b: &DMatrix<f64>, horizon: f64, steps: usize) -> Result<Gramian> {
    check_pair(a, b)?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be finite and non-negative, got {horizon}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "at least one integrator step is required".into(),
        ));
    }
    let n = a.nrows();
    let mut w = DMatrix::zeros(n, n);
    if horizon > 0.0 {
        let bbt = b * b.transpose();
        let rhs = |w: &DMatrix<f64>| {
            let aw = a * w;
            &aw + aw.transpose() + &bbt
        };
        let h = horizon / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&w);
            let k2 = rhs(&(&w + &k1 * (h / 2.0)));
            let k3 = rhs(&(&w + &k2 * (h / 2.0)));
            let k4 = rhs(&(&w + &k3 * h));
            w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "Gramian integration diverged over horizon {horizon} with {steps} steps"
            )));
        }
    }
    Gramian::from_matrix(w, horizon)
}

/// [`gramian`] with [`default_steps`].
pub fn gramian_auto(a: &DMatrix<f64>, b: &DMatrix<f64>, horizon: f64) -> Result<Gramian> {
    gramian(a, b, horizon, default_steps(a, horizon))
}

/// Infinite-horizon Gramian solving `A W + W Aᵀ = -B Bᵀ`; requires stable `A`.
pub fn gramian_infinite(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Gramian> {
    check_pair(a, b)?;
    let st = is_stable(a)?;
    if !st.stable {
        return Err(Error::Unstable(st.abscissa));
    }
    let w = solve_lyapunov(a, &(b * b.transpose()))?;
    Gramian::from_matrix(w, f64::INFINITY)
}

/// `W̃_d = e^{-A s} W_d e^{-Aᵀ s}` for defense span `s`: the Gramian whose
/// inverse prices a displacement at the start of the defense window.
pub fn defender_tilde_gramian(a: &DMatrix<f64>, w_d: &Gramian, defense_span: f64) -> Result<Gramian> {
    check_square(a, "A")?;
    if a.nrows() != w_d.dim() {
        return Err(Error::Dimension("Gramian and A differ in size".into()));
    }
    if !(defense_span.is_finite() && defense_span > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "defense span must be positive, got {defense_span}"
        )));
    }
    let e = matrix_exponential(a, -defense_span)?;
    let w = &e * w_d.matrix() * e.transpose();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("back-propagated Gramian overflowed".into()));
    }
    Gramian::from_matrix(w, defense_span)
}

/// `U diag(1/λ_1, .., 1/λ_k, M, .., M) Uᵀ` for a semidefinite Gramian.
#[derive(Debug, Clone)]
pub struct ExtendedInverse {
    basis: DMatrix<f64>,
    inverse_eigenvalues: DVector<f64>,
    big_m: f64,
}

/// Default `M`: `1e12 / λ_max`.
pub fn default_big_m(g: &Gramian) -> f64 {
    let top = g.lambda_max();
    if top > 0.0 {
        1e12 / top
    } else {
        1e12
    }
}

impl ExtendedInverse {
    pub fn new(g: &Gramian, big_m: f64) -> Result<Self> {
        if !(big_m.is_finite() && big_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "M must be positive and finite, got {big_m}"
            )));
        }
        let rank = g.numerical_rank();
        let inverse_eigenvalues = DVector::from_iterator(
            g.dim(),
            g.eigenvalues()
                .iter()
                .enumerate()
                .map(|(i, l)| if i < rank { 1.0 / l } else { big_m }),
        );
        Ok(Self {
            basis: g.eigenvectors().clone(),
            inverse_eigenvalues,
            big_m,
        })
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn inverse_eigenvalues(&self) -> &DVector<f64> {
        &self.inverse_eigenvalues
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let coords = self.basis.tr_mul(x).component_mul(&self.inverse_eigenvalues);
        &self.basis * coords
    }

    /// `xᵀ W⁻¹ x` in the extended sense.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        let coords = self.basis.tr_mul(x);
        coords
            .iter()
            .zip(self.inverse_eigenvalues.iter())
            .map(|(c, l)| c * c * l)
            .sum()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        &self.basis * DMatrix::from_diagonal(&self.inverse_eigenvalues) * self.basis.transpose()
    }
}

pub fn extended_inverse(g: &Gramian, big_m: f64) -> Result<ExtendedInverse> {
    ExtendedInverse::new(g, big_m)
}
