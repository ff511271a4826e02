//! Dense statevector simulation of post-selected circuits and exact oracles.

use std::collections::HashMap;

use log::warn;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{step_plan, Circuit};
use crate::dense::eigh;
use crate::error::{Error, Result};
use crate::gate::{hx_matrix, hy_dag_matrix, hy_matrix, Gate};
use crate::pauli::{apply_masks, dense_matrix, Hamiltonian, HamiltonianTerm, PauliOp, PauliString};

/// Largest register (visible plus ancillas) the simulator allocates.
pub const STATEVECTOR_LIMIT: usize = 24;

/// Branch probabilities below this reject the whole trajectory.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-300;

const RESET_TOLERANCE: f64 = 1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        if index >> n_qubits != 0 {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amplitudes = vec![C0; 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// `|+⟩^{⊗n}`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(StateVector { n_qubits, amplitudes: vec![a; dim] })
    }

    /// Basis state from a `0`/`1` string, qubit 0 first.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let mut index = 0usize;
        for c in bits.chars() {
            index = index << 1
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::invalid(format!("bad bit '{c}' in '{bits}'"))),
                };
        }
        if bits.is_empty() {
            return Err(Error::invalid("empty bitstring"));
        }
        Self::basis(bits.len(), index)
    }

    /// Normalized copy of the given amplitudes.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_size(n_qubits)?;
        let mut s = StateVector { n_qubits, amplitudes };
        s.normalize()?;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroWeight);
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(n)
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    fn bit(&self, q: usize) -> usize {
        PauliString::bit(self.n_qubits, q)
    }

    pub fn apply_single(&mut self, q: usize, m: &[[Complex64; 2]; 2]) {
        let b = self.bit(q);
        for x in 0..self.amplitudes.len() {
            if x & b == 0 {
                let (a0, a1) = (self.amplitudes[x], self.amplitudes[x | b]);
                self.amplitudes[x] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[x | b] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let (c, t) = (self.bit(control), self.bit(target));
        for x in 0..self.amplitudes.len() {
            if x & c != 0 && x & t == 0 {
                self.amplitudes.swap(x, x | t);
            }
        }
    }

    /// `exp(-i (angle/2) P)`.
    pub fn apply_pauli_rotation(&mut self, angle: f64, p: &PauliString) {
        let (flip, phase, ny) = p.masks();
        let c = Complex64::new((angle / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(angle / 2.0).sin());
        if flip == 0 {
            for x in 0..self.amplitudes.len() {
                let (ph, _) = apply_masks(flip, phase, ny, x);
                self.amplitudes[x] *= c + s * ph;
            }
            return;
        }
        for x in 0..self.amplitudes.len() {
            let y = x ^ flip;
            if x < y {
                let (px, _) = apply_masks(flip, phase, ny, x);
                let (py, _) = apply_masks(flip, phase, ny, y);
                let (ax, ay) = (self.amplitudes[x], self.amplitudes[y]);
                self.amplitudes[y] = c * ay + s * px * ax;
                self.amplitudes[x] = c * ax + s * py * ay;
            }
        }
    }

    /// `P|ψ⟩` as a new vector.
    pub fn apply_pauli(&self, p: &PauliString) -> Vec<Complex64> {
        let (flip, phase, ny) = p.masks();
        let mut out = vec![C0; self.amplitudes.len()];
        for (x, a) in self.amplitudes.iter().enumerate() {
            let (ph, y) = apply_masks(flip, phase, ny, x);
            out[y] = ph * a;
        }
        out
    }

    pub fn prob_one(&self, q: usize) -> f64 {
        let b = self.bit(q);
        self.amplitudes.iter().enumerate().filter(|(x, _)| x & b != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Zeroes the branch with qubit `q ≠ value`, renormalizes and returns
    /// the kept probability.
    fn project(&mut self, q: usize, value: bool) -> f64 {
        let b = self.bit(q);
        let mut p = 0.0;
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            if (x & b != 0) != value {
                *a = C0;
            } else {
                p += a.norm_sqr();
            }
        }
        if p > 0.0 {
            let n = p.sqrt();
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        p
    }

    fn flip(&mut self, q: usize) {
        let b = self.bit(q);
        for x in 0..self.amplitudes.len() {
            if x & b == 0 {
                self.amplitudes.swap(x, x | b);
            }
        }
    }

    /// Appends `k` qubits in `|0⟩` as the least significant bits.
    pub fn with_ancillas(&self, k: usize) -> Result<StateVector> {
        check_size(self.n_qubits + k)?;
        let mut amplitudes = vec![C0; 1 << (self.n_qubits + k)];
        for (x, a) in self.amplitudes.iter().enumerate() {
            amplitudes[x << k] = *a;
        }
        Ok(StateVector { n_qubits: self.n_qubits + k, amplitudes })
    }

    /// Drops `k` trailing qubits, which must be in `|0⟩`.
    pub fn without_ancillas(&self, k: usize) -> Result<StateVector> {
        let mask = (1usize << k) - 1;
        let stray: f64 = self.amplitudes.iter().enumerate().filter(|(x, _)| x & mask != 0).map(|(_, a)| a.norm_sqr()).sum();
        if stray > RESET_TOLERANCE {
            return Err(Error::invalid("ancillas are not in |0⟩"));
        }
        let amplitudes = self.amplitudes.iter().enumerate().filter(|(x, _)| x & mask == 0).map(|(_, a)| *a).collect();
        Ok(StateVector { n_qubits: self.n_qubits - k, amplitudes })
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        crate::dense::fidelity(&self.amplitudes, &other.amplitudes)
    }

    /// Samples a basis index from the Born distribution.
    fn sample(&self, rng: &mut impl Rng) -> usize {
        let r: f64 = rng.random::<f64>() * self.norm_sqr();
        let mut acc = 0.0;
        for (x, a) in self.amplitudes.iter().enumerate() {
            acc += a.norm_sqr();
            if r < acc {
                return x;
            }
        }
        self.amplitudes.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > STATEVECTOR_LIMIT {
        return Err(Error::DenseLimit { n, limit: STATEVECTOR_LIMIT });
    }
    Ok(())
}

/// How the simulator should prepare the visible register.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Bitstring(String),
    Plus,
    Amplitudes(Vec<Complex64>),
}

impl InitialState {
    /// `plus`, a `0`/`1` string, or a JSON array of reals or `[re, im]` pairs.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if s == "plus" || (!s.is_empty() && s.chars().all(|c| c == '+')) {
            return Ok(InitialState::Plus);
        }
        if s.starts_with('[') {
            let v: serde_json::Value =
                serde_json::from_str(s).map_err(|e| Error::invalid(format!("bad amplitude JSON: {e}")))?;
            let arr = v.as_array().ok_or_else(|| Error::invalid("amplitudes must be a JSON array"))?;
            let mut amps = Vec::with_capacity(arr.len());
            for item in arr {
                let c = match item {
                    serde_json::Value::Number(n) => Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0),
                    serde_json::Value::Array(p) if p.len() == 2 => Complex64::new(
                        p[0].as_f64().ok_or_else(|| Error::invalid("amplitude parts must be numbers"))?,
                        p[1].as_f64().ok_or_else(|| Error::invalid("amplitude parts must be numbers"))?,
                    ),
                    _ => return Err(Error::invalid("amplitudes must be numbers or [re, im] pairs")),
                };
                amps.push(c);
            }
            return Ok(InitialState::Amplitudes(amps));
        }
        if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
            return Ok(InitialState::Bitstring(s.to_string()));
        }
        Err(Error::invalid(format!("unrecognized initial state '{spec}'")))
    }

    pub fn build(&self, n_qubits: usize) -> Result<StateVector> {
        let s = match self {
            InitialState::Plus => StateVector::plus(n_qubits)?,
            InitialState::Bitstring(b) => StateVector::from_bitstring(b)?,
            InitialState::Amplitudes(a) => StateVector::from_amplitudes(a.clone())?,
        };
        if s.n_qubits() != n_qubits {
            return Err(Error::Dimension { expected: n_qubits, got: s.n_qubits() });
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactRunResult {
    /// Renormalized visible-register state.
    pub state: StateVector,
    pub cumulative_success: f64,
    pub log_success: f64,
    pub log_norm: f64,
}

fn required_outcomes(c: &Circuit) -> HashMap<usize, u8> {
    c.gates
        .iter()
        .filter_map(|g| if let Gate::PostSelect { bit, value } = g { Some((*bit, *value)) } else { None })
        .collect()
}

fn apply_unitary(s: &mut StateVector, g: &Gate) {
    match g {
        Gate::Hx(q) => s.apply_single(*q, &hx_matrix()),
        Gate::Hy(q) => s.apply_single(*q, &hy_matrix()),
        Gate::HyDag(q) => s.apply_single(*q, &hy_dag_matrix()),
        Gate::CX { control, target } => s.apply_cx(*control, *target),
        Gate::PauliRotation { angle, string } => s.apply_pauli_rotation(*angle, string),
        _ => unreachable!("non-unitary gate"),
    }
}

fn prepare(c: &Circuit, psi0: &StateVector) -> Result<StateVector> {
    if psi0.n_qubits() != c.n_visible {
        return Err(Error::Dimension { expected: c.n_visible, got: psi0.n_qubits() });
    }
    psi0.with_ancillas(c.n_ancilla)
}

/// Applies `c` with every measurement projected onto the outcome its
/// post-selection demands.
pub fn run_exact(c: &Circuit, psi0: &StateVector) -> Result<ExactRunResult> {
    let required = required_outcomes(c);
    let mut s = prepare(c, psi0)?;
    let mut log_success = 0.0;
    for g in &c.gates {
        match g {
            Gate::Measure { qubit, bit } => {
                let Some(&v) = required.get(bit) else {
                    return Err(Error::invalid(format!("measurement into bit {bit} is never post-selected")));
                };
                let p = s.project(*qubit, v == 1);
                if p < MIN_BRANCH_PROBABILITY {
                    return Err(Error::ZeroWeight);
                }
                log_success += p.ln();
            }
            Gate::PostSelect { .. } => {}
            Gate::Reset(q) => {
                let p1 = s.prob_one(*q);
                if p1 > 1.0 - RESET_TOLERANCE {
                    s.flip(*q);
                } else if p1 > RESET_TOLERANCE {
                    return Err(Error::invalid(format!("reset of qubit {q} which is not in a product state")));
                }
                s.project(*q, false);
            }
            g => apply_unitary(&mut s, g),
        }
    }
    let state = s.without_ancillas(c.n_ancilla)?;
    Ok(ExactRunResult { state, cumulative_success: log_success.exp(), log_success, log_norm: c.log_norm })
}

/// Per-qubit terminal measurement basis.
pub fn terminal_rotation(s: &mut StateVector, basis: &PauliString) {
    for q in basis.support() {
        match basis.op(q) {
            PauliOp::X => s.apply_single(q, &hx_matrix()),
            PauliOp::Y => s.apply_single(q, &hy_dag_matrix()),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub accepted: bool,
    /// Classical bits written so far (unwritten bits stay 0).
    pub bits: Vec<u8>,
    /// Visible-register bitstring in the terminal basis, for accepted shots.
    pub sample: Option<u64>,
}

/// One trajectory; a failed post-selection stops it immediately.
fn run_one(c: &Circuit, start: &StateVector, basis: &PauliString, rng: &mut ChaCha8Rng, keep_bits: bool) -> ShotOutcome {
    let mut s = start.clone();
    let mut bits = vec![0u8; c.n_bits];
    for g in &c.gates {
        match g {
            Gate::Measure { qubit, bit } => {
                let p1 = s.prob_one(*qubit);
                let one = rng.random::<f64>() < p1;
                s.project(*qubit, one);
                bits[*bit] = one as u8;
            }
            Gate::PostSelect { bit, value } => {
                if bits[*bit] != *value {
                    if !keep_bits {
                        bits = Vec::new();
                    }
                    return ShotOutcome { accepted: false, bits, sample: None };
                }
            }
            Gate::Reset(q) => {
                let one = rng.random::<f64>() < s.prob_one(*q);
                s.project(*q, one);
                if one {
                    s.flip(*q);
                }
            }
            g => apply_unitary(&mut s, g),
        }
    }
    let full_basis = basis.embed(s.n_qubits(), 0);
    terminal_rotation(&mut s, &full_basis);
    let x = s.sample(rng);
    if !keep_bits {
        bits = Vec::new();
    }
    ShotOutcome { accepted: true, bits, sample: Some((x >> c.n_ancilla) as u64) }
}

fn check_basis(c: &Circuit, basis: &PauliString) -> Result<()> {
    if basis.n_qubits() != c.n_visible {
        return Err(Error::Dimension { expected: c.n_visible, got: basis.n_qubits() });
    }
    Ok(())
}

/// Sequential shots from one ChaCha8 stream seeded with `seed`.
pub fn run_shots(c: &Circuit, psi0: &StateVector, n_shots: usize, seed: u64, basis: &PauliString) -> Result<Vec<ShotOutcome>> {
    check_basis(c, basis)?;
    let start = prepare(c, psi0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_shots).map(|_| run_one(c, &start, basis, &mut rng, true)).collect())
}

/// Accepted samples of one batch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSamples {
    pub shots: usize,
    pub samples: Vec<u64>,
}

impl BatchSamples {
    pub fn accepted(&self) -> usize {
        self.samples.len()
    }
}

/// `n_batches` batches of `shots_per_batch` shots, batch `i` seeded with
/// `seed ^ i`; the result does not depend on the thread schedule.
pub fn run_batches(
    c: &Circuit,
    psi0: &StateVector,
    shots_per_batch: usize,
    n_batches: usize,
    seed: u64,
    basis: &PauliString,
) -> Result<Vec<BatchSamples>> {
    check_basis(c, basis)?;
    let start = prepare(c, psi0)?;
    Ok((0..n_batches)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let samples = (0..shots_per_batch)
                .filter_map(|_| run_one(c, &start, basis, &mut rng, false).sample)
                .collect();
            BatchSamples { shots: shots_per_batch, samples }
        })
        .collect())
}

/// `⟨ψ|H|ψ⟩`.
pub fn expectation(psi: &StateVector, h: &Hamiltonian) -> Result<f64> {
    if psi.n_qubits() != h.n_qubits() {
        return Err(Error::Dimension { expected: h.n_qubits(), got: psi.n_qubits() });
    }
    let mut total = Complex64::new(0.0, 0.0);
    for t in h.terms() {
        total += t.coefficient * term_expectation(psi, &t.string);
    }
    debug_assert!(total.im.abs() < 1e-10 * (1.0 + total.re.abs()));
    Ok(total.re)
}

fn term_expectation(psi: &StateVector, p: &PauliString) -> Complex64 {
    let v = psi.apply_pauli(p);
    psi.amplitudes.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>() / psi.norm_sqr()
}

/// `⟨P⟩` for every term.
pub fn term_expectations(psi: &StateVector, terms: &[HamiltonianTerm]) -> Vec<f64> {
    terms.iter().map(|t| term_expectation(psi, &t.string).re).collect()
}

/// Eigenvalue (±1) of a string's diagonalized form on a terminal-basis sample.
pub fn sample_value(sample: u64, n_qubits: usize, p: &PauliString) -> f64 {
    let odd = p.support().iter().filter(|&&q| sample >> (n_qubits - 1 - q) & 1 == 1).count() % 2 == 1;
    if odd {
        -1.0
    } else {
        1.0
    }
}

/// Sample means of each term over accepted samples, all measured in a basis
/// compatible with every term.
pub fn expectation_from_samples(samples: &[u64], n_qubits: usize, terms: &[HamiltonianTerm]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::NoAcceptedSamples);
    }
    Ok(terms
        .iter()
        .map(|t| samples.iter().map(|&s| sample_value(s, n_qubits, &t.string)).sum::<f64>() / samples.len() as f64)
        .collect())
}

/// Measurement groups: a terminal basis and the indices of the
/// (non-identity) terms it measures, formed greedily in term order.
pub fn measurement_groups(h: &Hamiltonian) -> Vec<(PauliString, Vec<usize>)> {
    let n = h.n_qubits();
    let mut groups: Vec<(PauliString, Vec<usize>)> = Vec::new();
    for (i, t) in h.terms().iter().enumerate() {
        if t.string.is_identity() {
            continue;
        }
        if let Some(g) = groups.iter_mut().find(|g| g.0.qubitwise_compatible(&t.string)) {
            let mut sites: Vec<(usize, PauliOp)> = g.0.support().into_iter().map(|q| (q, g.0.op(q))).collect();
            sites.extend(t.string.support().into_iter().map(|q| (q, t.string.op(q))));
            g.0 = PauliString::from_sparse(n, &sites);
            g.1.push(i);
        } else {
            groups.push((t.string.clone(), vec![i]));
        }
    }
    groups
}

/// Normalized `exp(-τ H) ψ₀` through the eigendecomposition of `H`.
pub fn imaginary_time_oracle(h: &Hamiltonian, tau: f64, psi0: &StateVector) -> Result<StateVector> {
    if psi0.n_qubits() != h.n_qubits() {
        return Err(Error::Dimension { expected: h.n_qubits(), got: psi0.n_qubits() });
    }
    let m = dense_matrix(h, crate::pauli::DEFAULT_DENSE_LIMIT)?;
    let (vals, vecs) = eigh(&m);
    let e0 = vals[0];
    let psi = DVector::from_column_slice(psi0.amplitudes());
    let coeffs = vecs.adjoint() * psi;
    let scaled = DVector::from_iterator(
        vals.len(),
        coeffs.iter().zip(&vals).map(|(c, e)| c * (-tau * (e - e0)).exp()),
    );
    let out = vecs * scaled;
    StateVector::from_amplitudes(out.iter().copied().collect())
}

/// `exp(-x P)` up to the positive factor `e^{|x|}`.
fn apply_term_exponential(s: &mut StateVector, p: &PauliString, x: f64) {
    if p.is_identity() || x == 0.0 {
        return;
    }
    let e = (-2.0 * x.abs()).exp();
    let a = Complex64::new((1.0 + e) / 2.0, 0.0);
    let b = Complex64::new(x.signum() * (1.0 - e) / 2.0, 0.0);
    let pv = s.apply_pauli(p);
    for (v, w) in s.amplitudes.iter_mut().zip(pv) {
        *v = a * *v - b * w;
    }
}

/// Dense product of per-term exponentials grouped as in
/// [`crate::circuit::trotter_step`], normalized.
pub fn trotterized_oracle(h: &Hamiltonian, tau: f64, dtau: f64, order: u8, psi0: &StateVector) -> Result<StateVector> {
    if psi0.n_qubits() != h.n_qubits() {
        return Err(Error::Dimension { expected: h.n_qubits(), got: psi0.n_qubits() });
    }
    if order != 1 && order != 2 {
        return Err(Error::invalid(format!("Trotter order must be 1 or 2, got {order}")));
    }
    let (steps, dt) = step_plan(tau, dtau)?;
    let mut s = psi0.clone();
    let (one, rest): (Vec<&HamiltonianTerm>, Vec<&HamiltonianTerm>) = h.terms().iter().partition(|t| t.string.weight() == 1);
    for _ in 0..steps {
        if order == 1 {
            for t in h.terms() {
                apply_term_exponential(&mut s, &t.string, dt * t.coefficient);
            }
        } else {
            for t in &one {
                apply_term_exponential(&mut s, &t.string, dt / 2.0 * t.coefficient);
            }
            for t in &rest {
                apply_term_exponential(&mut s, &t.string, dt * t.coefficient);
            }
            for t in &one {
                apply_term_exponential(&mut s, &t.string, dt / 2.0 * t.coefficient);
            }
        }
        s.normalize()?;
    }
    Ok(s)
}

/// Lowest two eigenvalues of the dense Hamiltonian.
pub fn low_spectrum(h: &Hamiltonian) -> Result<(f64, f64)> {
    let m = dense_matrix(h, crate::pauli::DEFAULT_DENSE_LIMIT)?;
    let (vals, _) = eigh(&m);
    let e1 = vals.get(1).copied().unwrap_or(vals[0]);
    Ok((vals[0], e1))
}

/// `E_1 - E_0` of the dense Hamiltonian (0 for degenerate ground states).
pub fn spectral_gap(h: &Hamiltonian) -> Result<f64> {
    let (e0, e1) = low_spectrum(h)?;
    if e1 - e0 < 1e-10 {
        warn!("degenerate ground state");
    }
    Ok(e1 - e0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{trotter_step, CircuitOptions};
    use crate::pauli::parse_hamiltonian;

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(2, 1);
        let psi = StateVector::from_amplitudes(vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(0.3, 0.0),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.0, 0.7),
        ])
        .unwrap();
        let r = run_exact(&c, &psi).unwrap();
        assert_eq!(r.cumulative_success, 1.0);
        assert!(r.state.fidelity(&psi) > 1.0 - 1e-15);
    }

    #[test]
    fn rotation_matches_dense() {
        let mut s = StateVector::plus(2).unwrap();
        let p: PauliString = "YX".parse().unwrap();
        s.apply_pauli_rotation(0.8, &p);
        let u = crate::dense::expm_hermitian(&p.dense_matrix(), Complex64::new(0.0, -0.4));
        let v = &u * DVector::from_element(4, Complex64::new(0.5, 0.0));
        for (a, b) in s.amplitudes().iter().zip(v.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn expectations_of_product_states() {
        let h = Hamiltonian::tfim_ring3();
        assert!((expectation(&StateVector::plus(3).unwrap(), &h).unwrap() + 3.0).abs() < 1e-12);
        assert!((expectation(&StateVector::zero(3).unwrap(), &h).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_diagonal_case() {
        let h = parse_hamiltonian("1.0 Z").unwrap();
        let s = imaginary_time_oracle(&h, 1.0, &StateVector::plus(1).unwrap()).unwrap();
        let r = s.amplitudes()[0].re / s.amplitudes()[1].re;
        assert!((r - (-2.0f64).exp()).abs() < 1e-12);
        let same = imaginary_time_oracle(&h, 0.0, &StateVector::plus(1).unwrap()).unwrap();
        assert!(same.fidelity(&StateVector::plus(1).unwrap()) > 1.0 - 1e-15);
    }

    #[test]
    fn oracle_annihilated_state() {
        let h = parse_hamiltonian("1.0 Z").unwrap();
        let one = StateVector::from_bitstring("1").unwrap();
        let s = trotterized_oracle(&h, 1.0, 1.0, 1, &one).unwrap();
        assert!(s.fidelity(&one) > 1.0 - 1e-15);
    }

    #[test]
    fn zero_weight_trajectory() {
        let mut c = Circuit::new(1, 1);
        c.gates.push(Gate::Measure { qubit: 0, bit: 0 });
        c.gates.push(Gate::PostSelect { bit: 0, value: 1 });
        c.n_bits = 1;
        assert_eq!(run_exact(&c, &StateVector::zero(1).unwrap()).unwrap_err(), Error::ZeroWeight);
    }

    #[test]
    fn two_body_success_law() {
        let h = parse_hamiltonian("0.7 ZZ").unwrap();
        let opts = CircuitOptions { order: 1, ..Default::default() };
        let c = trotter_step(&h, 1.0, &opts).unwrap();
        let psi = StateVector::from_amplitudes(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.2, 0.4),
            Complex64::new(0.1, -0.6),
        ])
        .unwrap();
        let r = run_exact(&c, &psi).unwrap();
        // s = +1, so σ1 = σ2 is the damped branch
        let alpha = psi.amplitudes()[0].norm_sqr() + psi.amplitudes()[3].norm_sqr();
        let expect = 1.0 - (1.0 - (-4.0f64 * 0.7).exp()) * alpha;
        assert!((r.cumulative_success - expect).abs() < 1e-12);
    }

    #[test]
    fn shots_are_deterministic() {
        let h = parse_hamiltonian("0.25 ZZ").unwrap();
        let c = trotter_step(&h, 1.0, &CircuitOptions { order: 1, ..Default::default() }).unwrap();
        let z: PauliString = "ZZ".parse().unwrap();
        let a = run_shots(&c, &StateVector::plus(2).unwrap(), 200, 7, &z).unwrap();
        let b = run_shots(&c, &StateVector::plus(2).unwrap(), 200, 7, &z).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().any(|o| !o.accepted));
    }

    #[test]
    fn no_measurement_all_zeros() {
        let c = Circuit::new(3, 0);
        let z: PauliString = "ZZZ".parse().unwrap();
        let out = run_shots(&c, &StateVector::zero(3).unwrap(), 50, 1, &z).unwrap();
        assert!(out.iter().all(|o| o.accepted && o.sample == Some(0)));
    }

    #[test]
    fn samples_estimate_terms() {
        let h = Hamiltonian::tfim_ring3();
        let zz = &h.terms()[..3];
        assert_eq!(expectation_from_samples(&[0, 0, 0], 3, zz).unwrap(), vec![1.0; 3]);
        assert_eq!(expectation_from_samples(&[], 3, zz).unwrap_err(), Error::NoAcceptedSamples);
        let groups = measurement_groups(&h);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].0.to_string(), "ZZZ");
        assert_eq!(groups[1].0.to_string(), "XXX");
    }

    #[test]
    fn terminal_y_basis() {
        // H^y† maps the +1 eigenvector of Y onto |0⟩
        let mut s = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]).unwrap();
        terminal_rotation(&mut s, &"Y".parse().unwrap());
        assert!(s.amplitudes()[1].norm() < 1e-14);
    }

    #[test]
    fn initial_state_specs() {
        assert_eq!(InitialState::parse("plus").unwrap(), InitialState::Plus);
        assert_eq!(InitialState::parse("+++").unwrap(), InitialState::Plus);
        assert_eq!(InitialState::parse("010").unwrap().build(3).unwrap(), StateVector::basis(3, 2).unwrap());
        let s = InitialState::parse("[[1,0],[0,1]]").unwrap().build(1).unwrap();
        assert!((s.amplitudes()[1].im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(InitialState::parse("[1,1,1]").unwrap().build(1).is_err());
        assert!(InitialState::parse("abc").is_err());
    }

    #[test]
    fn tfim_gap() {
        let (e0, _) = low_spectrum(&Hamiltonian::tfim_ring3()).unwrap();
        assert!((e0 + 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(spectral_gap(&Hamiltonian::tfim_ring3()).unwrap() > 0.0);
    }
}
