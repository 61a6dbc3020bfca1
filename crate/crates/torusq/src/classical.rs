//! Classical ground truth: torus rotations, bandlimited observables, and
//! exact Koopman evolution.
//!
//! Everything downstream (operator matrices, circuits, measurement) is
//! validated against values produced here, so this module deliberately stays
//! at the level of plain Fourier arithmetic.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rkha::{IndexSetN, MultiIndex};

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("frequencies must all be strictly positive, got {0:?}")]
    NonPositiveFrequency(Vec<f64>),
    #[error("observable must have at least one coefficient")]
    EmptyObservable,
    #[error("observable indices mix dimensions {0} and {1}")]
    MixedDimensions(usize, usize),
    #[error("duplicate observable index {0:?}")]
    DuplicateIndex(Vec<i64>),
    #[error("unknown observable preset '{0}'")]
    UnknownPreset(String),
}

/// A point on the d-torus, angles stored reduced into `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    angles: Vec<f64>,
}

impl TorusPoint {
    pub fn new(angles: Vec<f64>) -> Self {
        Self {
            angles: angles.into_iter().map(|a| a.rem_euclid(TAU)).collect(),
        }
    }

    /// Identity element (all angles zero).
    pub fn origin(d: usize) -> Self {
        Self {
            angles: vec![0.0; d],
        }
    }

    pub fn d(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

/// Rotation frequency vector; rational independence is the caller's
/// responsibility and is not machine-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequencies {
    alphas: Vec<f64>,
}

impl Frequencies {
    pub fn new(alphas: Vec<f64>) -> Result<Self, ClassicalError> {
        if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0)) {
            return Err(ClassicalError::NonPositiveFrequency(alphas));
        }
        Ok(Self { alphas })
    }

    pub fn d(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// Advance the rotation: componentwise `theta_i + alpha_i * t` mod `2*pi`.
pub fn flow(x: &TorusPoint, t: f64, freqs: &Frequencies) -> TorusPoint {
    assert_eq!(x.d(), freqs.d(), "dimension mismatch");
    TorusPoint::new(
        x.angles()
            .iter()
            .zip(freqs.alphas())
            .map(|(&th, &a)| th + a * t)
            .collect(),
    )
}

/// Eigenfrequency `omega_j = sum_i j_i alpha_i` of the Fourier mode `phi_j`.
pub fn eigenfrequency(j: &MultiIndex, freqs: &Frequencies) -> f64 {
    assert_eq!(j.d(), freqs.d(), "dimension mismatch");
    j.components()
        .iter()
        .zip(freqs.alphas())
        .map(|(&ji, &a)| ji as f64 * a)
        .sum()
}

/// One term of the on-disk observable schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableCoeff {
    pub index: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// A function on the torus with finite Fourier support:
/// `f(x) = sum_j fhat_j e^{i j . x}`. The all-zero index carries the constant
/// term; every other index must have all components nonzero to belong to the
/// algebra's index set, which is checked where it matters (operator
/// construction, config validation) rather than here.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    d: usize,
    coeffs: BTreeMap<MultiIndex, Complex64>,
}

impl Observable {
    pub fn new(coeffs: BTreeMap<MultiIndex, Complex64>) -> Result<Self, ClassicalError> {
        let mut iter = coeffs.keys();
        let d = iter.next().ok_or(ClassicalError::EmptyObservable)?.d();
        for j in iter {
            if j.d() != d {
                return Err(ClassicalError::MixedDimensions(d, j.d()));
            }
        }
        Ok(Self { d, coeffs })
    }

    pub fn from_entries(entries: &[ObservableCoeff]) -> Result<Self, ClassicalError> {
        let mut coeffs = BTreeMap::new();
        for e in entries {
            let j = MultiIndex::new(e.index.clone());
            if coeffs
                .insert(j, Complex64::new(e.re, e.im))
                .is_some()
            {
                return Err(ClassicalError::DuplicateIndex(e.index.clone()));
            }
        }
        Self::new(coeffs)
    }

    pub fn to_entries(&self) -> Vec<ObservableCoeff> {
        self.coeffs
            .iter()
            .map(|(j, c)| ObservableCoeff {
                index: j.components().to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    /// Named presets: "sin" (sin theta, d=1), "cos" (cos theta, d=1),
    /// "sin1cos2" (sin theta^1 cos theta^2, d=2).
    pub fn preset(name: &str) -> Result<Self, ClassicalError> {
        let half_i = Complex64::new(0.0, 0.5);
        let quarter_i = Complex64::new(0.0, 0.25);
        let mut coeffs = BTreeMap::new();
        match name {
            "sin" => {
                coeffs.insert(MultiIndex::new(vec![1]), -half_i);
                coeffs.insert(MultiIndex::new(vec![-1]), half_i);
            }
            "cos" => {
                coeffs.insert(MultiIndex::new(vec![1]), Complex64::new(0.5, 0.0));
                coeffs.insert(MultiIndex::new(vec![-1]), Complex64::new(0.5, 0.0));
            }
            "sin1cos2" => {
                coeffs.insert(MultiIndex::new(vec![1, 1]), -quarter_i);
                coeffs.insert(MultiIndex::new(vec![1, -1]), -quarter_i);
                coeffs.insert(MultiIndex::new(vec![-1, 1]), quarter_i);
                coeffs.insert(MultiIndex::new(vec![-1, -1]), quarter_i);
            }
            other => return Err(ClassicalError::UnknownPreset(other.to_string())),
        }
        Self::new(coeffs)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, j: &MultiIndex) -> Complex64 {
        self.coeffs
            .get(j)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// True when `fhat(-j) = conj(fhat(j))` for every index, i.e. the
    /// function is real-valued.
    pub fn is_self_adjoint(&self) -> bool {
        self.coeffs.iter().all(|(j, c)| {
            let mirrored = self.coeff(&j.neg());
            (mirrored - c.conj()).norm() < 1e-14
        })
    }

    /// True when every index is the all-zero constant index or lies in the
    /// truncated index set.
    pub fn supported_on(&self, iset: &IndexSetN) -> bool {
        self.coeffs
            .keys()
            .all(|j| j.is_zero() || iset.contains(j))
    }

    /// Sum of coefficient magnitudes; an upper bound for `|f|` on the torus.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Pointwise value `sum_j fhat_j e^{i j . theta}`.
    pub fn evaluate(&self, x: &TorusPoint) -> Complex64 {
        assert_eq!(x.d(), self.d, "dimension mismatch");
        self.coeffs
            .iter()
            .map(|(j, c)| {
                let phase: f64 = j
                    .components()
                    .iter()
                    .zip(x.angles())
                    .map(|(&ji, &th)| ji as f64 * th)
                    .sum();
                c * Complex64::new(0.0, phase).exp()
            })
            .sum()
    }

    /// Coefficient-space Koopman evolution: each `fhat_j` picks up the phase
    /// `e^{i omega_j t}`.
    pub fn evolve(&self, t: f64, freqs: &Frequencies) -> Observable {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(j, c)| {
                let phase = Complex64::new(0.0, eigenfrequency(j, freqs) * t).exp();
                (j.clone(), c * phase)
            })
            .collect();
        Observable {
            d: self.d,
            coeffs,
        }
    }
}

/// Value of the evolved observable, `(U^t f)(x) = f(Phi^t(x))`.
pub fn koopman_evolve(f: &Observable, x: &TorusPoint, t: f64, freqs: &Frequencies) -> Complex64 {
    f.evaluate(&flow(x, t, freqs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn freqs(a: &[f64]) -> Frequencies {
        Frequencies::new(a.to_vec()).unwrap()
    }

    fn angle_close(a: f64, b: f64, tol: f64) -> bool {
        let diff = (a - b).rem_euclid(TAU);
        diff.min(TAU - diff) < tol
    }

    #[test]
    fn flow_examples() {
        let x = TorusPoint::new(vec![1.2, 5.9]);
        let fr = freqs(&[1.0, 2.0]);
        assert_eq!(flow(&x, 0.0, &fr), x);

        let quarter = flow(&TorusPoint::origin(1), 0.25, &freqs(&[TAU]));
        assert_relative_eq!(quarter.angles()[0], PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn flow_group_property() {
        let fr = freqs(&[TAU, 3.0 * std::f64::consts::SQRT_2 * PI]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = TorusPoint::new(vec![rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)]);
            let (s, t) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let two_step = flow(&flow(&x, s, &fr), t, &fr);
            let one_step = flow(&x, s + t, &fr);
            for i in 0..2 {
                assert!(angle_close(
                    two_step.angles()[i],
                    one_step.angles()[i],
                    1e-12
                ));
            }
        }
    }

    #[test]
    fn frequencies_reject_nonpositive() {
        assert!(Frequencies::new(vec![1.0, 0.0]).is_err());
        assert!(Frequencies::new(vec![-2.0]).is_err());
        assert!(Frequencies::new(vec![]).is_err());
    }

    #[test]
    fn evaluate_presets() {
        let sin = Observable::preset("sin").unwrap();
        let at = sin.evaluate(&TorusPoint::new(vec![PI / 2.0]));
        assert_relative_eq!(at.re, 1.0, epsilon = 1e-14);
        assert!(at.im.abs() < 1e-14);

        let cos = Observable::preset("cos").unwrap();
        let at = cos.evaluate(&TorusPoint::new(vec![0.0]));
        assert_relative_eq!(at.re, 1.0, epsilon = 1e-14);

        let sc = Observable::preset("sin1cos2").unwrap();
        let x = TorusPoint::new(vec![1.0, 2.5]);
        let at = sc.evaluate(&x);
        assert_relative_eq!(at.re, 1.0f64.sin() * 2.5f64.cos(), epsilon = 1e-13);
        assert!(at.im.abs() < 1e-14);

        assert!(sin.is_self_adjoint());
        assert!(cos.is_self_adjoint());
        assert!(sc.is_self_adjoint());
        assert!(Observable::preset("tan").is_err());
    }

    #[test]
    fn constant_observable() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::zero(1), Complex64::new(0.7, -0.2));
        let f = Observable::new(coeffs).unwrap();
        for th in [0.0, 1.0, 4.5] {
            let v = f.evaluate(&TorusPoint::new(vec![th]));
            assert!((v - Complex64::new(0.7, -0.2)).norm() < 1e-15);
        }
    }

    #[test]
    fn koopman_evolution_paths_agree() {
        // Composition with the flow vs. phase multiplication on coefficients.
        let fr = freqs(&[TAU, 3.0]);
        let f = Observable::preset("sin1cos2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = TorusPoint::new(vec![rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)]);
            let t = rng.gen_range(-5.0..5.0);
            let composed = koopman_evolve(&f, &x, t, &fr);
            let phased = f.evolve(t, &fr).evaluate(&x);
            assert!((composed - phased).norm() < 1e-12);
        }
    }

    #[test]
    fn koopman_fig_value() {
        let f = Observable::preset("sin").unwrap();
        let got = koopman_evolve(
            &f,
            &TorusPoint::new(vec![2.5]),
            0.94,
            &freqs(&[TAU]),
        );
        assert_relative_eq!(got.re, (2.5 + TAU * 0.94).sin(), epsilon = 1e-13);
    }

    #[test]
    fn eigenfrequency_examples() {
        let fr = freqs(&[1.5, 2.25]);
        assert_eq!(
            eigenfrequency(&MultiIndex::new(vec![1]), &freqs(&[1.5])),
            1.5
        );
        assert_eq!(
            eigenfrequency(&MultiIndex::new(vec![-2, -1]), &fr),
            -2.0 * 1.5 - 2.25
        );
        assert_eq!(
            eigenfrequency(&MultiIndex::new(vec![2, 2]), &fr),
            2.0 * (1.5 + 2.25)
        );
    }

    #[test]
    fn evolution_is_linear_and_bounded() {
        let fr = freqs(&[TAU]);
        let f = Observable::preset("sin").unwrap();
        let g = Observable::preset("cos").unwrap();
        let (a, b) = (Complex64::new(0.3, 0.1), Complex64::new(-1.2, 0.4));

        let mut combined = BTreeMap::new();
        for (j, c) in f.coeffs() {
            *combined.entry(j.clone()).or_insert(Complex64::new(0.0, 0.0)) += a * c;
        }
        for (j, c) in g.coeffs() {
            *combined.entry(j.clone()).or_insert(Complex64::new(0.0, 0.0)) += b * c;
        }
        let h = Observable::new(combined).unwrap();

        let x = TorusPoint::new(vec![1.3]);
        let bound = f.l1_norm();
        for k in 0..200 {
            let t = 0.013 * k as f64;
            let lhs = koopman_evolve(&h, &x, t, &fr);
            let rhs = a * koopman_evolve(&f, &x, t, &fr) + b * koopman_evolve(&g, &x, t, &fr);
            assert!((lhs - rhs).norm() < 1e-12);
            assert!(koopman_evolve(&f, &x, t, &fr).norm() <= bound + 1e-12);
        }
    }

    #[test]
    fn entries_round_trip() {
        let f = Observable::preset("sin1cos2").unwrap();
        let entries = f.to_entries();
        let back = Observable::from_entries(&entries).unwrap();
        assert_eq!(f, back);

        let dup = vec![
            ObservableCoeff {
                index: vec![1],
                re: 1.0,
                im: 0.0,
            },
            ObservableCoeff {
                index: vec![1],
                re: 2.0,
                im: 0.0,
            },
        ];
        assert!(Observable::from_entries(&dup).is_err());
    }
}
