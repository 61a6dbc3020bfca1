//! Dense operator layer on the 2^n-dimensional register space: multiplication
//! and self-adjoint observable matrices, projected state density matrices,
//! exact phase-evolved expectations, Hermitian spectra, and the dense Fourier
//! matrix.
//!
//! Everything here is deliberately dense and simple: this layer is the
//! independent oracle the gate-level pipeline is validated against, and at
//! the register sizes involved (n <= 12) clarity beats scale.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::classical::{eigenfrequency, Frequencies, Observable, TorusPoint};
use crate::rkha::{
    eta_l, kappa_infinite, kappa_n, pnorm, psi, structure_constant, IndexSetN, MultiIndex,
    RkhaError, RkhaParams,
};

/// Relative tolerance used for the infinite kernel sums behind bias
/// correction; well below every acceptance tolerance in the test suite.
pub const BIAS_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OpalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix of size {0} is not square with power-of-two dimension")]
    BadShape(usize),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("bias correction requires support inside the index set (or the zero index), got {0:?}")]
    BiasSupport(Vec<i64>),
    #[error("eigenvector index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Rkha(#[from] RkhaError),
}

/// A 2^n x 2^n complex matrix, rows and columns indexed by the register
/// ordering of the truncated index set.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n: u32,
    mat: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self, OpalgError> {
        let rows = mat.nrows();
        if rows != mat.ncols() || !rows.is_power_of_two() || rows < 2 {
            return Err(OpalgError::BadShape(rows));
        }
        Ok(Self {
            n: rows.trailing_zeros(),
            mat,
        })
    }

    pub fn identity(n: u32) -> Self {
        let dim = 1usize << n;
        Self {
            n,
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            mat: self.mat.adjoint(),
        }
    }

    /// Largest absolute entry of `A - A^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }
}

fn check_setup(f: &Observable, params: &RkhaParams) -> Result<(), OpalgError> {
    if f.d() != params.d() {
        return Err(OpalgError::DimensionMismatch(format!(
            "observable dimension {} vs parameter dimension {}",
            f.d(),
            params.d()
        )));
    }
    Ok(())
}

fn tilde_coeff(fhat: Complex64, l: &MultiIndex, params: &RkhaParams) -> Complex64 {
    fhat * (params.tau() * pnorm(l, params.p()) / 2.0).exp()
}

/// Matrix of the multiplication operator: entry `(i, j) = c_(j, i-j) ftilde_(i-j)`
/// wherever `i - j` lies in the support of `f`.
pub fn mult_operator(
    f: &Observable,
    n: u32,
    params: &RkhaParams,
) -> Result<DenseOperator, OpalgError> {
    check_setup(f, params)?;
    let iset = IndexSetN::new(n, params.d())?;
    let dim = iset.len();
    let mut mat = DMatrix::zeros(dim, dim);
    for (l, &fhat) in f.coeffs() {
        let ftilde = tilde_coeff(fhat, l, params);
        for jr in 0..dim {
            let j = iset.multi_index(jr);
            if let Some(ir) = iset.rank(&j.add(l)) {
                mat[(ir, jr)] = structure_constant(&j, l, params) * ftilde;
            }
        }
    }
    DenseOperator::from_matrix(mat)
}

/// Hermitian observable matrix: the Hermitian part `(A + A^dagger) / 2` of
/// the multiplication-operator matrix. For self-adjoint `f` this coincides
/// with the symmetric formula
/// `(i, j) = (c_(j, i-j) + c_(i, j-i)) ftilde_(i-j) / 2`. With
/// `bias_correct`, each coefficient is premultiplied by `kappa / eta_l` to
/// counter the contraction the subspace projection applies to individual
/// modes.
pub fn selfadjoint_operator(
    f: &Observable,
    n: u32,
    params: &RkhaParams,
    bias_correct: bool,
) -> Result<DenseOperator, OpalgError> {
    check_setup(f, params)?;
    let iset = IndexSetN::new(n, params.d())?;
    let kappa = if bias_correct {
        kappa_infinite(params, BIAS_REL_TOL)?
    } else {
        0.0
    };
    let dim = iset.len();
    let mut mat: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    for (l, &fhat) in f.coeffs() {
        let mut ftilde = tilde_coeff(fhat, l, params);
        if bias_correct {
            if !(l.is_zero() || l.in_index_set()) {
                return Err(OpalgError::BiasSupport(l.components().to_vec()));
            }
            ftilde *= kappa / eta_l(l, params, BIAS_REL_TOL)?;
        }
        for jr in 0..dim {
            let j = iset.multi_index(jr);
            if let Some(ir) = iset.rank(&j.add(l)) {
                mat[(ir, jr)] += structure_constant(&j, l, params) * ftilde;
            }
        }
    }
    let herm = DMatrix::from_fn(dim, dim, |i, j| {
        (mat[(i, j)] + mat[(j, i)].conj()) / 2.0
    });
    DenseOperator::from_matrix(herm)
}

/// Projected state of a torus point: rank-1, trace-1 Hermitian matrix with
/// entries `psi_i^*(x) psi_j(x) / kappa_n`.
pub fn density_matrix(
    x: &TorusPoint,
    n: u32,
    params: &RkhaParams,
) -> Result<DenseOperator, OpalgError> {
    if x.d() != params.d() {
        return Err(OpalgError::DimensionMismatch(format!(
            "point dimension {} vs parameter dimension {}",
            x.d(),
            params.d()
        )));
    }
    let iset = IndexSetN::new(n, params.d())?;
    let kn = kappa_n(&iset, params);
    let dim = iset.len();
    // u_i = psi_i^*(x) / sqrt(kappa_n); the matrix is u u^dagger.
    let u: Vec<Complex64> = (0..dim)
        .map(|r| psi(&iset.multi_index(r), x.angles(), params).conj() / kn.sqrt())
        .collect();
    let mat = DMatrix::from_fn(dim, dim, |i, j| u[i] * u[j].conj());
    DenseOperator::from_matrix(mat)
}

/// Entrywise phase evolution: `(i, j) -> e^(i (omega_j - omega_i) t) (i, j)`.
/// Applied to a density matrix this advances the state by time `t`; applied
/// with `-t` to an observable matrix it gives the dual picture.
pub fn phase_evolve(
    op: &DenseOperator,
    t: f64,
    d: usize,
    freqs: &Frequencies,
) -> Result<DenseOperator, OpalgError> {
    let iset = IndexSetN::new(op.n(), d)?;
    let omegas: Vec<f64> = (0..iset.len())
        .map(|r| eigenfrequency(&iset.multi_index(r), freqs))
        .collect();
    let dim = op.dim();
    let mat = DMatrix::from_fn(dim, dim, |i, j| {
        op.entry(i, j) * Complex64::new(0.0, (omegas[j] - omegas[i]) * t).exp()
    });
    DenseOperator::from_matrix(mat)
}

/// `tr(rho * op)`, evaluated entrywise without forming the product.
pub fn expectation(rho: &DenseOperator, op: &DenseOperator) -> Result<Complex64, OpalgError> {
    if rho.dim() != op.dim() {
        return Err(OpalgError::DimensionMismatch(format!(
            "trace of {} x {} against {} x {}",
            rho.dim(),
            rho.dim(),
            op.dim(),
            op.dim()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            acc += rho.entry(i, j) * op.entry(j, i);
        }
    }
    Ok(acc)
}

/// Exact matrix-mechanical value of the evolved observable at time `t`:
/// `tr(Psi^t(rho_x) S_f)` with the bias-corrected self-adjoint matrix.
pub fn evolve_expectation(
    f: &Observable,
    x: &TorusPoint,
    t: f64,
    n: u32,
    params: &RkhaParams,
    freqs: &Frequencies,
) -> Result<Complex64, OpalgError> {
    let s = selfadjoint_operator(f, n, params, true)?;
    let rho = density_matrix(x, n, params)?;
    let rho_t = phase_evolve(&rho, t, params.d(), freqs)?;
    expectation(&rho_t, &s)
}

/// Full eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    n: u32,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// Rebuild `U diag(s) U^dagger`.
    pub fn reconstruct(&self) -> DenseOperator {
        let dim = self.eigenvalues.len();
        let diag = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mat = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        DenseOperator::from_matrix(mat).expect("square power-of-two by construction")
    }
}

/// Hermitian eigendecomposition with deterministic ordering: ascending
/// eigenvalues, ties broken by lexicographic comparison of eigenvector
/// entries (real part, then imaginary part).
pub fn hermitian_spectrum(op: &DenseOperator) -> Result<Spectrum, OpalgError> {
    let defect = op.hermiticity_defect();
    if defect > 1e-10 {
        return Err(OpalgError::NotHermitian(defect));
    }
    let eig = nalgebra::SymmetricEigen::new(op.matrix().clone());
    let dim = op.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
            .then_with(|| {
                for i in 0..dim {
                    let (za, zb) = (eig.eigenvectors[(i, a)], eig.eigenvectors[(i, b)]);
                    let c = za
                        .re
                        .partial_cmp(&zb.re)
                        .unwrap()
                        .then(za.im.partial_cmp(&zb.im).unwrap());
                    if c != std::cmp::Ordering::Equal {
                        return c;
                    }
                }
                std::cmp::Ordering::Equal
            })
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Spectrum {
        n: op.n(),
        eigenvalues,
        eigenvectors,
    })
}

/// Modulus of the eigenvector's basis-function expansion on a uniform angle
/// grid (`grid_size` points per dimension, dimension 1 slowest), normalized
/// so the function has unit L^2 norm against the normalized torus measure.
pub fn eigenfunction_grid(
    spec: &Spectrum,
    index: usize,
    grid_size: usize,
    params: &RkhaParams,
) -> Result<Vec<f64>, OpalgError> {
    if index >= spec.len() {
        return Err(OpalgError::IndexOutOfRange {
            index,
            len: spec.len(),
        });
    }
    let iset = IndexSetN::new(spec.n(), params.d())?;
    let v = spec.eigenvector(index);
    let indices: Vec<MultiIndex> = iset.iter().collect();
    let weights: Vec<f64> = indices
        .iter()
        .map(|j| (-params.tau() * pnorm(j, params.p()) / 2.0).exp())
        .collect();

    // ||sum_b v_b psi_(j_b)||_(L^2)^2 = sum_b |v_b|^2 e^(-tau |j_b|_p).
    let norm_sq: f64 = v
        .iter()
        .zip(&weights)
        .map(|(z, w)| z.norm_sqr() * w * w)
        .sum();
    let scale = 1.0 / norm_sq.sqrt();

    let d = params.d();
    let total = grid_size.pow(d as u32);
    let step = std::f64::consts::TAU / grid_size as f64;
    let mut out = Vec::with_capacity(total);
    let mut angles = vec![0.0f64; d];
    for g in 0..total {
        let mut rem = g;
        for i in (0..d).rev() {
            angles[i] = (rem % grid_size) as f64 * step;
            rem /= grid_size;
        }
        let mut u = Complex64::new(0.0, 0.0);
        for ((z, j), w) in v.iter().zip(&indices).zip(&weights) {
            let phase: f64 = j
                .components()
                .iter()
                .zip(&angles)
                .map(|(&ji, &th)| ji as f64 * th)
                .sum();
            u += z * w * Complex64::new(0.0, phase).exp();
        }
        out.push(u.norm() * scale);
    }
    Ok(out)
}

/// Dense matrix of the register Fourier transform: the tensor product over
/// dimensions of the 2^(n/d)-point kernel `e^(-2 pi i p m / 2^(n/d)) / sqrt(2^(n/d))`,
/// dimension 1 occupying the most significant block.
pub fn fourier_matrix(n: u32, d: usize) -> Result<DenseOperator, OpalgError> {
    let iset = IndexSetN::new(n, d)?;
    let w = iset.width();
    let block_len = 1usize << w;
    let scale = 1.0 / (block_len as f64).sqrt();
    let block = DMatrix::from_fn(block_len, block_len, |p, m| {
        let angle = -std::f64::consts::TAU * (p as f64) * (m as f64) / block_len as f64;
        Complex64::new(0.0, angle).exp() * scale
    });
    let mut full = block.clone();
    for _ in 1..d {
        full = full.kronecker(&block);
    }
    DenseOperator::from_matrix(full)
}
