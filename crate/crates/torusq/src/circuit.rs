//! Gate-level circuit representation and statevector simulation, plus the
//! three pipeline stages: state preparation (exact amplitude load or the
//! Hadamard + phase approximation), the diagonal evolution stage, and the
//! register Fourier transform.
//!
//! Conventions, fixed project-wide: amplitude index = register integer value
//! with bit 1 most significant; gate qubit `q` addresses bit `q+1` of that
//! register, i.e. integer bit position `n-1-q`. `Rz(theta)` is
//! `diag(e^(-i theta/2), e^(i theta/2))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::classical::{Frequencies, TorusPoint};
use crate::rkha::{kappa_n, pnorm, IndexSetN, RkhaError, RkhaParams};
use crate::walsh::{shift_walsh_coeffs, WalshCoeffs, WalshError};

/// Minimum amplitude count before gate updates fan out to worker threads;
/// below this the per-task overhead dominates.
#[cfg(feature = "parallel")]
const PAR_MIN_AMPS: usize = 1 << 12;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("qubit index {q} out of range for {n} qubits")]
    QubitOutOfRange { q: usize, n: u32 },
    #[error("amplitude vector has length {got}, expected {expected}")]
    BadAmplitudeLength { got: usize, expected: usize },
    #[error("vector norm {0} is not 1 within 1e-12")]
    NotUnitNorm(f64),
    #[error("amplitude load requires the all-zeros input state")]
    LoadOnNonZeroState,
    #[error("state has {got} qubits, circuit expects {expected}")]
    StateWidthMismatch { got: u32, expected: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Walsh(#[from] WalshError),
    #[error(transparent)]
    Index(#[from] RkhaError),
}

/// One gate. Qubit indices are zero-based and count from the most
/// significant register bit.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Hadamard { q: usize },
    Rz { q: usize, angle: f64 },
    ControlledPhase { control: usize, target: usize, angle: f64 },
    Swap { q1: usize, q2: usize },
    LoadAmplitudes { amplitudes: Vec<Complex64> },
}

/// Serialization view of a gate: name, qubit list, optional angle. Amplitude
/// loads list every qubit; their payload is reproducible from the run
/// configuration and is not embedded in the dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateDumpEntry {
    pub gate: String,
    pub qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// An ordered gate list over `n` qubit wires.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: u32,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: u32, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let check = |q: usize| {
            if q >= n as usize {
                Err(CircuitError::QubitOutOfRange { q, n })
            } else {
                Ok(())
            }
        };
        for g in &gates {
            match g {
                Gate::Hadamard { q } | Gate::Rz { q, .. } => check(*q)?,
                Gate::ControlledPhase {
                    control, target, ..
                } => {
                    check(*control)?;
                    check(*target)?;
                    if control == target {
                        return Err(CircuitError::QubitOutOfRange {
                            q: *target,
                            n,
                        });
                    }
                }
                Gate::Swap { q1, q2 } => {
                    check(*q1)?;
                    check(*q2)?;
                }
                Gate::LoadAmplitudes { amplitudes } => {
                    let expected = 1usize << n;
                    if amplitudes.len() != expected {
                        return Err(CircuitError::BadAmplitudeLength {
                            got: amplitudes.len(),
                            expected,
                        });
                    }
                    let norm = seq_norm(amplitudes);
                    if (norm - 1.0).abs() > 1e-12 {
                        return Err(CircuitError::NotUnitNorm(norm));
                    }
                }
            }
        }
        Ok(Self { n, gates })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Concatenate another circuit of the same width.
    pub fn extend(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        if other.n != self.n {
            return Err(CircuitError::StateWidthMismatch {
                got: other.n,
                expected: self.n,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    pub fn dump_entries(&self) -> Vec<GateDumpEntry> {
        self.gates
            .iter()
            .map(|g| match g {
                Gate::Hadamard { q } => GateDumpEntry {
                    gate: "h".into(),
                    qubits: vec![*q],
                    angle: None,
                },
                Gate::Rz { q, angle } => GateDumpEntry {
                    gate: "rz".into(),
                    qubits: vec![*q],
                    angle: Some(*angle),
                },
                Gate::ControlledPhase {
                    control,
                    target,
                    angle,
                } => GateDumpEntry {
                    gate: "cp".into(),
                    qubits: vec![*control, *target],
                    angle: Some(*angle),
                },
                Gate::Swap { q1, q2 } => GateDumpEntry {
                    gate: "swap".into(),
                    qubits: vec![*q1, *q2],
                    angle: None,
                },
                Gate::LoadAmplitudes { .. } => GateDumpEntry {
                    gate: "load".into(),
                    qubits: (0..self.n as usize).collect(),
                    angle: None,
                },
            })
            .collect()
    }
}

/// 2^n complex amplitudes indexed by register integer value.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: u32,
    amps: Vec<Complex64>,
}

fn seq_norm(amps: &[Complex64]) -> f64 {
    // Reductions stay sequential everywhere so results do not depend on the
    // parallel feature or thread count.
    amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl StateVector {
    /// The all-zeros basis state.
    pub fn ground(n: u32) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn basis(n: u32, value: usize) -> Self {
        assert!(value < 1 << n);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[value] = Complex64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, CircuitError> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(CircuitError::BadAmplitudeLength {
                got: len,
                expected: len.next_power_of_two().max(2),
            });
        }
        let norm = seq_norm(&amps);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CircuitError::NotUnitNorm(norm));
        }
        Ok(Self {
            n: len.trailing_zeros(),
            amps,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        seq_norm(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.n, other.n);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Overlap magnitude; 1 means equal up to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    fn is_ground(&self) -> bool {
        (self.amps[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12
            && self.amps[1..].iter().all(|z| z.norm() < 1e-12)
    }

    fn bit_pos(&self, q: usize) -> u32 {
        self.n - 1 - q as u32
    }

    fn apply_pairwise<F>(&mut self, q: usize, f: F, parallel: bool)
    where
        F: Fn(Complex64, Complex64) -> (Complex64, Complex64) + Sync,
    {
        let pos = self.bit_pos(q);
        let half = 1usize << pos;
        let block = half << 1;
        let work = |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = f(*a, *b);
                *a = x;
                *b = y;
            }
        };
        #[cfg(feature = "parallel")]
        if parallel && self.amps.len() >= PAR_MIN_AMPS {
            if block >= self.amps.len() {
                // One giant block: parallelize across the paired halves.
                let (lo, hi) = self.amps.split_at_mut(half);
                lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(a, b)| {
                    let (x, y) = f(*a, *b);
                    *a = x;
                    *b = y;
                });
            } else {
                self.amps.par_chunks_exact_mut(block).for_each(work);
            }
            return;
        }
        let _ = parallel;
        self.amps.chunks_exact_mut(block).for_each(work);
    }

    fn apply_diagonal<F>(&mut self, f: F, parallel: bool)
    where
        F: Fn(usize) -> Complex64 + Sync,
    {
        #[cfg(feature = "parallel")]
        if parallel && self.amps.len() >= PAR_MIN_AMPS {
            self.amps
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, a)| *a *= f(i));
            return;
        }
        let _ = parallel;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= f(i);
        }
    }

    fn apply_gate(&mut self, gate: &Gate, parallel: bool) -> Result<(), CircuitError> {
        match gate {
            Gate::Hadamard { q } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_pairwise(*q, move |a, b| (s * (a + b), s * (a - b)), parallel);
            }
            Gate::Rz { q, angle } => {
                let lower = Complex64::new(0.0, -angle / 2.0).exp();
                let upper = Complex64::new(0.0, angle / 2.0).exp();
                let mask = 1usize << self.bit_pos(*q);
                self.apply_diagonal(
                    move |i| if i & mask == 0 { lower } else { upper },
                    parallel,
                );
            }
            Gate::ControlledPhase {
                control,
                target,
                angle,
            } => {
                let phase = Complex64::new(0.0, *angle).exp();
                let one = Complex64::new(1.0, 0.0);
                let mask = (1usize << self.bit_pos(*control)) | (1usize << self.bit_pos(*target));
                self.apply_diagonal(
                    move |i| if i & mask == mask { phase } else { one },
                    parallel,
                );
            }
            Gate::Swap { q1, q2 } => {
                if q1 != q2 {
                    let m1 = 1usize << self.bit_pos(*q1);
                    let m2 = 1usize << self.bit_pos(*q2);
                    for i in 0..self.amps.len() {
                        if i & m1 != 0 && i & m2 == 0 {
                            self.amps.swap(i, i ^ m1 ^ m2);
                        }
                    }
                }
            }
            Gate::LoadAmplitudes { amplitudes } => {
                if !self.is_ground() {
                    return Err(CircuitError::LoadOnNonZeroState);
                }
                self.amps.copy_from_slice(amplitudes);
            }
        }
        Ok(())
    }
}

fn run(
    circuit: &Circuit,
    input: Option<&StateVector>,
    parallel: bool,
) -> Result<StateVector, CircuitError> {
    let mut state = match input {
        Some(s) => {
            if s.n() != circuit.n() {
                return Err(CircuitError::StateWidthMismatch {
                    got: s.n(),
                    expected: circuit.n(),
                });
            }
            s.clone()
        }
        None => StateVector::ground(circuit.n()),
    };
    for gate in circuit.gates() {
        state.apply_gate(gate, parallel)?;
    }
    Ok(state)
}

/// Apply the circuit to the given input (default: the all-zeros state).
/// With the `parallel` feature enabled, large registers update amplitudes on
/// worker threads; results are bitwise identical to the sequential path.
pub fn simulate(
    circuit: &Circuit,
    input: Option<&StateVector>,
) -> Result<StateVector, CircuitError> {
    run(circuit, input, cfg!(feature = "parallel"))
}

/// Single-threaded simulation regardless of feature flags; the baseline the
/// benchmark suite compares against.
pub fn simulate_sequential(
    circuit: &Circuit,
    input: Option<&StateVector>,
) -> Result<StateVector, CircuitError> {
    run(circuit, input, false)
}

/// Exact state preparation: one amplitude load with
/// `v_b = conj(psi_(j_b)(x)) / sqrt(kappa_n)`.
pub fn prep_exact(
    x: &TorusPoint,
    n: u32,
    params: &RkhaParams,
) -> Result<Circuit, CircuitError> {
    if x.d() != params.d() {
        return Err(CircuitError::DimensionMismatch(format!(
            "point dimension {} vs parameter dimension {}",
            x.d(),
            params.d()
        )));
    }
    let iset = IndexSetN::new(n, params.d())?;
    let root_kn = kappa_n(&iset, params).sqrt();
    let amplitudes: Vec<Complex64> = (0..iset.len())
        .map(|b| {
            let j = iset.multi_index(b);
            let weight = (-params.tau() * pnorm(&j, params.p()) / 2.0).exp();
            let phase: f64 = j
                .components()
                .iter()
                .zip(x.angles())
                .map(|(&ji, &th)| ji as f64 * th)
                .sum();
            weight * Complex64::new(0.0, -phase).exp() / root_kn
        })
        .collect();
    Circuit::new(n, vec![Gate::LoadAmplitudes { amplitudes }])
}

fn rz_stage_from_coeffs(n: u32, coeffs: &WalshCoeffs, t: f64) -> Vec<Gate> {
    (0..n as usize)
        .map(|q| Gate::Rz {
            q,
            angle: 2.0 * coeffs.get(1 << q) * t,
        })
        .collect()
}

/// Shallow approximate preparation: Hadamards into the uniform state, then
/// one Rz per qubit applying the diagonal shift phase `e^(-i j(b) . x)`. The
/// shift is the unit-time evolution whose "frequencies" are the angles of
/// `x`, so the Rz angles come from the same closed-form Walsh coefficients
/// as the evolution stage.
pub fn prep_efficient(x: &TorusPoint, n: u32, d: usize) -> Result<Circuit, CircuitError> {
    if x.d() != d {
        return Err(CircuitError::DimensionMismatch(format!(
            "point dimension {} vs torus dimension {d}",
            x.d()
        )));
    }
    let coeffs = shift_walsh_coeffs(n, d, x.angles())?;
    let mut gates: Vec<Gate> = (0..n as usize).map(|q| Gate::Hadamard { q }).collect();
    gates.extend(rz_stage_from_coeffs(n, &coeffs, 1.0));
    Circuit::new(n, gates)
}

/// Diagonal evolution stage: exactly n Rz gates, qubit `q` turning by
/// `2 h_(2^q) t`. On a basis state `|b>` the net effect is the phase
/// `e^(-i omega_(j_b) t)` with no residual global phase (the constant Walsh
/// coefficient of the spectral function vanishes by symmetry of the index
/// set).
pub fn koopman_stage(
    n: u32,
    d: usize,
    freqs: &Frequencies,
    t: f64,
) -> Result<Circuit, CircuitError> {
    let coeffs = crate::walsh::hamiltonian_walsh_coeffs(n, d, freqs)?;
    Circuit::new(n, rz_stage_from_coeffs(n, &coeffs, t))
}

/// Which unitary the Fourier stage implements: the register transform with
/// kernel `e^(-2 pi i p m / 2^(n/d))` per dimension block, or its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QftDirection {
    Forward,
    Adjoint,
}

/// Gate-level register Fourier transform, one independent block per torus
/// dimension: Hadamards with controlled phases, then the bit-order reversal
/// swaps. The measurement pipeline applies the adjoint.
pub fn qft_stage(n: u32, d: usize, direction: QftDirection) -> Result<Circuit, CircuitError> {
    let iset = IndexSetN::new(n, d)?;
    let w = iset.width() as usize;
    let mut gates = Vec::new();
    for dim in 0..d {
        let base = dim * w;
        let mut block = Vec::new();
        for a in 0..w {
            block.push(Gate::Hadamard { q: base + a });
            for b in (a + 1)..w {
                block.push(Gate::ControlledPhase {
                    control: base + b,
                    target: base + a,
                    angle: -std::f64::consts::TAU / (1u64 << (b - a + 1)) as f64,
                });
            }
        }
        for a in 0..w / 2 {
            block.push(Gate::Swap {
                q1: base + a,
                q2: base + w - 1 - a,
            });
        }
        match direction {
            QftDirection::Forward => gates.extend(block),
            QftDirection::Adjoint => {
                for gate in block.into_iter().rev() {
                    gates.push(match gate {
                        Gate::ControlledPhase {
                            control,
                            target,
                            angle,
                        } => Gate::ControlledPhase {
                            control,
                            target,
                            angle: -angle,
                        },
                        other => other,
                    });
                }
            }
        }
    }
    Circuit::new(n, gates)
}

/// The full measurement-ready pipeline: preparation at `x`, evolution to
/// time `t`, then the adjoint Fourier stage.
pub fn pipeline(
    x: &TorusPoint,
    t: f64,
    n: u32,
    params: &RkhaParams,
    freqs: &Frequencies,
    efficient_prep: bool,
) -> Result<Circuit, CircuitError> {
    let mut c = if efficient_prep {
        prep_efficient(x, n, params.d())?
    } else {
        prep_exact(x, n, params)?
    };
    c.extend(&koopman_stage(n, params.d(), freqs, t)?)?;
    c.extend(&qft_stage(n, params.d(), QftDirection::Adjoint)?)?;
    Ok(c)
}
