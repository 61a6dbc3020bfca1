//! Reproducing kernel Hilbert algebra on the d-torus.
//!
//! The algebra is spanned by weighted Fourier modes `psi_j = e^{-tau*|j|_p/2} phi_j`
//! over multi-indices `j` with all components nonzero. This module owns the index
//! bookkeeping (the truncated index set for an n-qubit register and its ordinal
//! enumeration), the fractional p-norm, the structure constants of the pointwise
//! product, and the kernel normalization sums (finite and infinite) together with
//! the per-mode sums used for bias correction downstream.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_ur};
use thiserror::Error;

/// Largest per-dimension summation cutoff tried before giving up on an
/// infinite kernel sum.
const MAX_CUTOFF: u64 = 1 << 28;

/// Converged one-dimensional sums keyed by the bit patterns of
/// (p, tau, rel_tol); the slow-decaying cases take ~1e7 terms and are
/// requested repeatedly by the operator layer.
static SUM_CACHE: OnceLock<Mutex<HashMap<(u64, u64, u64), f64>>> = OnceLock::new();

#[derive(Debug, Error)]
pub enum RkhaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(
        "kernel sum did not reach relative tolerance {rel_tol:e} within cutoff {cutoff} \
         (bracket half-width {half_width:e})"
    )]
    TailNotConverged {
        rel_tol: f64,
        cutoff: u64,
        half_width: f64,
    },
}

/// Kernel parameters: torus dimension `d`, exponent `p` in (0,1) and locality
/// scale `tau > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkhaParams {
    d: usize,
    p: f64,
    tau: f64,
}

impl RkhaParams {
    pub fn new(d: usize, p: f64, tau: f64) -> Result<Self, RkhaError> {
        if d == 0 {
            return Err(RkhaError::InvalidParams("d must be >= 1".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(RkhaError::InvalidParams(format!(
                "p must lie in (0,1), got {p}"
            )));
        }
        if !(tau > 0.0) {
            return Err(RkhaError::InvalidParams(format!(
                "tau must be positive, got {tau}"
            )));
        }
        Ok(Self { d, p, tau })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// A d-vector of integer Fourier indices.
///
/// Membership in the algebra's index set requires every component to be
/// nonzero; the all-zero index is still representable because observables may
/// carry a constant term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(components: Vec<i64>) -> Self {
        Self(components)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    /// True when every component is nonzero (the index belongs to the
    /// algebra's index set).
    pub fn in_index_set(&self) -> bool {
        self.0.iter().all(|&c| c != 0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.d(), other.d(), "dimension mismatch");
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.d(), other.d(), "dimension mismatch");
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn neg(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|&a| -a).collect())
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

/// Fractional p-norm `|j|_p = sum_i |j_i|^p`.
pub fn pnorm(j: &MultiIndex, p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    j.components()
        .iter()
        .map(|&c| (c.abs() as f64).powf(p))
        .sum()
}

/// Structure constant `c_{jl} = exp(-tau (|j|_p + |l|_p - |j+l|_p) / 2)` of
/// the pointwise product: `psi_j * psi_l = c_{jl} psi_{j+l}`.
pub fn structure_constant(j: &MultiIndex, l: &MultiIndex, params: &RkhaParams) -> f64 {
    let p = params.p();
    let excess = pnorm(j, p) + pnorm(l, p) - pnorm(&j.add(l), p);
    (-params.tau() * excess / 2.0).exp()
}

/// Pointwise value of the weighted basis function
/// `psi_j(x) = e^{-tau |j|_p / 2} e^{i j . x}`.
pub fn psi(j: &MultiIndex, angles: &[f64], params: &RkhaParams) -> Complex64 {
    assert_eq!(j.d(), angles.len(), "dimension mismatch");
    let phase: f64 = j
        .components()
        .iter()
        .zip(angles)
        .map(|(&ji, &th)| ji as f64 * th)
        .sum();
    (-params.tau() * pnorm(j, params.p()) / 2.0).exp() * Complex64::new(0.0, phase).exp()
}

/// Truncated index set for an n-qubit register: per dimension the indices
/// `{-2^(w-1), .., -1, 1, .., 2^(w-1)}` with `w = n/d`, enumerated by the
/// order-preserving ordinal map, and overall ranks formed by concatenating the
/// per-dimension ordinals most-significant-dimension first (so the rank equals
/// the computational-basis integer used by the circuit layer).
#[derive(Debug, Clone)]
pub struct IndexSetN {
    n: u32,
    d: usize,
    width: u32,
}

impl IndexSetN {
    pub fn new(n: u32, d: usize) -> Result<Self, RkhaError> {
        if d == 0 || n == 0 || n as usize % d != 0 {
            return Err(RkhaError::InvalidParams(format!(
                "qubit count n={n} must be a positive multiple of d={d}"
            )));
        }
        Ok(Self {
            n,
            d,
            width: n / d as u32,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Qubits per torus dimension.
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of indices, `2^n`.
    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ordinal of a single component within one dimension's index range.
    pub fn ordinal(&self, component: i64) -> Option<u64> {
        let half = 1i64 << (self.width - 1);
        if component >= -half && component <= -1 {
            Some((component + half) as u64)
        } else if component >= 1 && component <= half {
            Some((component + half - 1) as u64)
        } else {
            None
        }
    }

    /// Inverse of [`ordinal`](Self::ordinal).
    pub fn component(&self, ordinal: u64) -> i64 {
        debug_assert!(ordinal < (1u64 << self.width));
        let half = 1i64 << (self.width - 1);
        let o = ordinal as i64;
        if o < half {
            o - half
        } else {
            o - half + 1
        }
    }

    /// Rank of a multi-index: per-dimension ordinals concatenated with
    /// dimension 1 most significant. Returns `None` when any component falls
    /// outside the truncated range (including zero).
    pub fn rank(&self, j: &MultiIndex) -> Option<usize> {
        if j.d() != self.d {
            return None;
        }
        let mut r = 0u64;
        for &c in j.components() {
            r = (r << self.width) | self.ordinal(c)?;
        }
        Some(r as usize)
    }

    /// Multi-index at a given rank.
    pub fn multi_index(&self, rank: usize) -> MultiIndex {
        debug_assert!(rank < self.len());
        let mask = (1u64 << self.width) - 1;
        let mut comps = vec![0i64; self.d];
        for i in 0..self.d {
            let shift = (self.d - 1 - i) as u32 * self.width;
            comps[i] = self.component((rank as u64 >> shift) & mask);
        }
        MultiIndex(comps)
    }

    /// All multi-indices in rank order.
    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.len()).map(|r| self.multi_index(r))
    }

    pub fn contains(&self, j: &MultiIndex) -> bool {
        self.rank(j).is_some()
    }
}

/// Finite kernel normalization `kappa_n = sum_{j in J_n} e^{-tau |j|_p}`,
/// computed through its per-dimension factorization.
pub fn kappa_n(iset: &IndexSetN, params: &RkhaParams) -> f64 {
    let mut per_dim = 0.0;
    for o in 0..(1u64 << iset.width()) {
        let c = iset.component(o);
        per_dim += (-params.tau() * (c.abs() as f64).powf(params.p())).exp();
    }
    per_dim.powi(iset.d() as i32)
}

/// Kernel section value `k_n(x, y) = sum_{j in J_n} conj(psi_j(x)) psi_j(y)`.
pub fn kernel_n(x: &[f64], y: &[f64], iset: &IndexSetN, params: &RkhaParams) -> Complex64 {
    assert_eq!(x.len(), iset.d());
    assert_eq!(y.len(), iset.d());
    // Per-dimension factorization of the sum.
    let mut total = Complex64::new(1.0, 0.0);
    for i in 0..iset.d() {
        let mut dim_sum = Complex64::new(0.0, 0.0);
        for o in 0..(1u64 << iset.width()) {
            let c = iset.component(o);
            let w = (-params.tau() * (c.abs() as f64).powf(params.p())).exp();
            dim_sum += w * Complex64::new(0.0, c as f64 * (y[i] - x[i])).exp();
        }
        total *= dim_sum;
    }
    total
}

/// One-dimensional infinite sum `2 sum_{j>=1} e^{-tau j^p}` evaluated by
/// direct summation up to a cutoff `M` plus the integral-bracket midpoint for
/// the remainder. The remainder of a decreasing integrand is sandwiched by
/// `int_{M+1}^inf <= R <= int_M^inf`, and the cutoff doubles until the bracket
/// half-width meets the requested relative tolerance.
fn one_dim_infinite_sum(p: f64, tau: f64, rel_tol: f64) -> Result<f64, RkhaError> {
    let key = (p.to_bits(), tau.to_bits(), rel_tol.to_bits());
    let cache = SUM_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit);
    }

    // int_a^inf e^{-tau u^p} du expressed through the upper incomplete gamma.
    let tail = |a: f64| -> f64 {
        let s = 1.0 / p;
        let x = tau * a.powf(p);
        (s / tau.powf(s)) * gamma(s) * gamma_ur(s, x)
    };

    let mut cutoff = 1024u64;
    // Compensated (Kahan) summation: the sums reach ~1e7 slowly-decaying
    // terms at the tolerances used for bias correction.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut next = 1u64;
    loop {
        while next <= cutoff {
            let term = (-tau * (next as f64).powf(p)).exp();
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            next += 1;
        }
        let hi = tail(cutoff as f64);
        let lo = tail(cutoff as f64 + 1.0);
        let half_width = (hi - lo) / 2.0;
        if half_width <= rel_tol * (sum + lo) {
            let value = 2.0 * (sum + (hi + lo) / 2.0);
            cache.lock().unwrap().insert(key, value);
            return Ok(value);
        }
        if cutoff >= MAX_CUTOFF {
            return Err(RkhaError::TailNotConverged {
                rel_tol,
                cutoff,
                half_width,
            });
        }
        cutoff *= 2;
    }
}

/// Infinite kernel normalization `kappa = sum_{j in J} e^{-tau |j|_p}`,
/// equal to the d-th power of the one-dimensional sum.
pub fn kappa_infinite(params: &RkhaParams, rel_tol: f64) -> Result<f64, RkhaError> {
    if !(rel_tol > 0.0) {
        return Err(RkhaError::InvalidParams(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let one = one_dim_infinite_sum(params.p(), params.tau(), rel_tol)?;
    Ok(one.powi(params.d() as i32))
}

/// Per-mode sum `eta_l = sum over {j in J : j+l in J} of e^{-tau |j|_p}`.
///
/// Factorizes over dimensions; each factor equals the full one-dimensional
/// sum minus the single excluded term `j_i = -l_i` (nothing is excluded when
/// `l_i = 0`). Used as `kappa / eta_l` to counter the contraction that the
/// operator representation applies to each mode.
pub fn eta_l(l: &MultiIndex, params: &RkhaParams, rel_tol: f64) -> Result<f64, RkhaError> {
    if l.d() != params.d() {
        return Err(RkhaError::InvalidParams(format!(
            "index dimension {} does not match parameter dimension {}",
            l.d(),
            params.d()
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(RkhaError::InvalidParams(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let one = one_dim_infinite_sum(params.p(), params.tau(), rel_tol)?;
    let mut total = 1.0;
    for &li in l.components() {
        if li == 0 {
            total *= one;
        } else {
            total *= one - (-params.tau() * (li.abs() as f64).powf(params.p())).exp();
        }
    }
    Ok(total)
}
