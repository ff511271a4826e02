//! Ancilla circuits realizing `exp(-Δτ H)` by post-selection.
//!
//! Visible qubits are `0..n_visible`, ancillas follow them. Every hidden unit
//! becomes one ancilla prepared in `|0⟩`, coupled through
//! `exp(-i W_r σ_r X_a)` rotations plus a bias rotation on `X_a`, then
//! measured and post-selected on 0, leaving `cos(C + Σ W_r σ_r)` on the
//! visible register.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::pauli::{basis_rotation_layer, Hamiltonian, HamiltonianTerm, PauliOp, PauliString};
use crate::rbm::{decompose_diagonal_hamiltonian, decompose_one_body, Decomposition, HiddenUnit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Hidden units coupled directly to the rotated Pauli factors.
    Rbm,
    /// Basis rotations and a CX parity ladder onto one qubit, then a
    /// single-site encoding.
    Cx,
}

impl FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbm" => Ok(Route::Rbm),
            "cx" => Ok(Route::Cx),
            _ => Err(Error::invalid(format!("unknown route '{s}' (expected rbm or cx)"))),
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Rbm => "rbm",
            Route::Cx => "cx",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AncillaPolicy {
    /// One ancilla, measured and reset after every encoding.
    Single,
    /// A pool of ancillas; mutually commuting encodings share a wave.
    Pooled(usize),
}

impl AncillaPolicy {
    pub fn pool_size(&self) -> usize {
        match self {
            AncillaPolicy::Single => 1,
            AncillaPolicy::Pooled(n) => *n,
        }
    }
}

impl FromStr for AncillaPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "single" {
            return Ok(AncillaPolicy::Single);
        }
        if let Some(n) = s.strip_prefix("pooled:") {
            let n: usize = n.parse().map_err(|_| Error::invalid(format!("bad pool size in '{s}'")))?;
            if n == 0 {
                return Err(Error::invalid("pool size must be positive"));
            }
            return Ok(AncillaPolicy::Pooled(n));
        }
        Err(Error::invalid(format!("unknown ancilla policy '{s}' (expected single or pooled:N)")))
    }
}

impl fmt::Display for AncillaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AncillaPolicy::Single => f.write_str("single"),
            AncillaPolicy::Pooled(n) => write!(f, "pooled:{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitOptions {
    pub route: Route,
    pub ancilla: AncillaPolicy,
    /// Trotter order, 1 or 2.
    pub order: u8,
}

impl Default for CircuitOptions {
    fn default() -> Self {
        CircuitOptions { route: Route::Rbm, ancilla: AncillaPolicy::Single, order: 2 }
    }
}

/// One hidden unit on explicit visible Pauli factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    pub bias: f64,
    pub weights: Vec<(PauliString, f64)>,
}

impl Encoding {
    /// Visible Pauli content of the encoding, used for commutation checks.
    fn footprint(&self, n: usize) -> PauliString {
        let mut sites = Vec::new();
        for (p, _) in &self.weights {
            for q in p.support() {
                sites.push((q, p.op(q)));
            }
        }
        PauliString::from_sparse(n, &sites)
    }

    fn compatible(&self, other: &Encoding, n: usize) -> bool {
        self.footprint(n).qubitwise_compatible(&other.footprint(n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_visible: usize,
    pub n_ancilla: usize,
    pub n_bits: usize,
    pub gates: Vec<Gate>,
    /// `Σ ln A` over all encodings plus `-Δτ c` of identity terms.
    pub log_norm: f64,
    /// `Σ ln` of each encoding's success probability averaged over a
    /// uniform visible register.
    pub model_log_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub qubits: usize,
    pub ancillas: usize,
    pub depth: usize,
    pub counts: BTreeMap<String, usize>,
}

impl Circuit {
    pub fn new(n_visible: usize, n_ancilla: usize) -> Self {
        Circuit { n_visible, n_ancilla, n_bits: 0, gates: Vec::new(), log_norm: 0.0, model_log_success: 0.0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_visible + self.n_ancilla
    }

    pub fn ancilla(&self, j: usize) -> usize {
        self.n_visible + j
    }

    /// Product of the per-encoding averaged success probabilities.
    pub fn model_success(&self) -> f64 {
        self.model_log_success.exp()
    }

    pub fn n_postselections(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::PostSelect { .. })).count()
    }

    /// `ln` of the factor turning the post-selected block into the target
    /// operator: each post-selection leaves `cos(·) = (2A)^{-1} exp(…)`.
    pub fn block_log_scale(&self) -> f64 {
        self.log_norm + self.n_postselections() as f64 * LN_2
    }

    /// Appends another circuit on the same registers.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_visible != self.n_visible {
            return Err(Error::Dimension { expected: self.n_visible, got: other.n_visible });
        }
        self.n_ancilla = self.n_ancilla.max(other.n_ancilla);
        let shift = self.n_bits;
        for g in &other.gates {
            self.gates.push(match g {
                Gate::Measure { qubit, bit } => Gate::Measure { qubit: *qubit, bit: bit + shift },
                Gate::PostSelect { bit, value } => Gate::PostSelect { bit: bit + shift, value: *value },
                other => other.clone(),
            });
        }
        self.n_bits += other.n_bits;
        self.log_norm += other.log_norm;
        self.model_log_success += other.model_log_success;
        Ok(())
    }

    /// Longest chain of gates sharing a qubit (classical post-selection is
    /// attached to its measurement and does not add depth).
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.n_qubits()];
        let mut depth = 0;
        for g in &self.gates {
            let qs = g.qubits();
            if qs.is_empty() {
                continue;
            }
            let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    pub fn summary(&self) -> CircuitSummary {
        let mut counts = BTreeMap::new();
        for g in &self.gates {
            *counts.entry(g.name().to_string()).or_insert(0) += 1;
        }
        CircuitSummary { qubits: self.n_qubits(), ancillas: self.n_ancilla, depth: self.depth(), counts }
    }

    /// One JSON object per gate, one per line.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&serde_json::to_string(g).expect("gates serialize"));
            s.push('\n');
        }
        s
    }
}

/// Emits hidden-unit encodings, allocating ancillas and classical bits.
struct Emitter<'a> {
    circuit: &'a mut Circuit,
    policy: AncillaPolicy,
    wave: Vec<Encoding>,
    next_single: usize,
}

impl<'a> Emitter<'a> {
    fn new(circuit: &'a mut Circuit, policy: AncillaPolicy) -> Self {
        Emitter { circuit, policy, wave: Vec::new(), next_single: 0 }
    }

    fn push(&mut self, enc: Encoding) {
        let n = self.circuit.n_visible;
        let full = self.wave.len() >= self.policy.pool_size();
        let clash = self.wave.iter().any(|w| !w.compatible(&enc, n));
        if full || clash {
            self.flush();
        }
        self.wave.push(enc);
        if self.policy == AncillaPolicy::Single {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let wave = std::mem::take(&mut self.wave);
        let mut measured = Vec::with_capacity(wave.len());
        for (j, enc) in wave.iter().enumerate() {
            let a = self.circuit.ancilla(j);
            let width = self.circuit.n_qubits();
            encode_unit_gates(&mut self.circuit.gates, width, a, enc);
            measured.push(a);
        }
        self.measure(&measured);
    }

    fn measure(&mut self, ancillas: &[usize]) {
        for &a in ancillas {
            let bit = self.circuit.n_bits;
            self.circuit.n_bits += 1;
            self.circuit.gates.push(Gate::Measure { qubit: a, bit });
            self.circuit.gates.push(Gate::PostSelect { bit, value: 0 });
            self.circuit.gates.push(Gate::Reset(a));
        }
    }

    /// Next ancilla for an encoding that is measured on its own.
    fn lone_ancilla(&mut self) -> usize {
        self.flush();
        let j = self.next_single % self.policy.pool_size();
        self.next_single += 1;
        self.circuit.ancilla(j)
    }
}

/// Rotations `exp(-i W σ X_a)` for each weight and `exp(-i C X_a)`.
fn encode_unit_gates(gates: &mut Vec<Gate>, width: usize, a: usize, enc: &Encoding) {
    for (p, w) in &enc.weights {
        let mut sites: Vec<(usize, PauliOp)> = p.support().into_iter().map(|q| (q, p.op(q))).collect();
        sites.push((a, PauliOp::X));
        gates.push(Gate::PauliRotation { angle: 2.0 * w, string: PauliString::from_sparse(width, &sites) });
    }
    gates.push(Gate::PauliRotation {
        angle: 2.0 * enc.bias,
        string: PauliString::from_sparse(width, &[(a, PauliOp::X)]),
    });
}

/// Maps a diagonal-form hidden unit onto the Pauli factors of `basis`.
pub fn unit_encoding(unit: &HiddenUnit, basis: &PauliString) -> Encoding {
    let n = basis.n_qubits();
    Encoding {
        bias: unit.bias,
        weights: unit
            .weights
            .iter()
            .map(|&(q, w)| {
                let op = match basis.op(q) {
                    PauliOp::I => PauliOp::Z,
                    op => op,
                };
                (PauliString::from_sparse(n, &[(q, op)]), w)
            })
            .collect(),
    }
}

/// The hidden units of `dec` alone (induced couplings are left out), each
/// mapped onto the Pauli factors of `basis`.
pub fn decomposition_circuit(dec: &Decomposition, basis: &PauliString, policy: AncillaPolicy) -> Circuit {
    let mut c = Circuit::new(basis.n_qubits(), policy.pool_size());
    c.log_norm = dec.log_norm;
    let mut em = Emitter::new(&mut c, policy);
    for unit in &dec.hidden_units {
        em.circuit.model_log_success += unit.average_success().ln();
        em.push(unit_encoding(unit, basis));
    }
    em.flush();
    c
}

/// Combined basis of a set of qubit-wise compatible strings.
fn shared_basis(n: usize, terms: &[&HamiltonianTerm]) -> PauliString {
    let mut sites = Vec::new();
    for t in terms {
        for q in t.string.support() {
            sites.push((q, t.string.op(q)));
        }
    }
    PauliString::from_sparse(n, &sites)
}

/// Splits terms into maximal runs of mutually qubit-wise compatible strings.
fn compatible_blocks<'a>(terms: &[&'a HamiltonianTerm]) -> Vec<Vec<&'a HamiltonianTerm>> {
    let mut blocks: Vec<Vec<&HamiltonianTerm>> = Vec::new();
    for &t in terms {
        match blocks.last_mut() {
            Some(b) if b.iter().all(|o| o.string.qubitwise_compatible(&t.string)) => b.push(t),
            _ => blocks.push(vec![t]),
        }
    }
    blocks
}

/// `exp(-dτ Σ c P)` for one compatible block through hidden units.
fn emit_block_rbm(em: &mut Emitter<'_>, block: &[&HamiltonianTerm], dtau: f64) -> Result<()> {
    let n = em.circuit.n_visible;
    let basis = shared_basis(n, block);
    let diag_terms: Vec<HamiltonianTerm> = block
        .iter()
        .map(|t| {
            let sites: Vec<(usize, PauliOp)> = t.string.support().into_iter().map(|q| (q, PauliOp::Z)).collect();
            HamiltonianTerm::new(t.coefficient, PauliString::from_sparse(n, &sites))
        })
        .collect();
    let diag = Hamiltonian::new(diag_terms)?;
    for dec in decompose_diagonal_hamiltonian(&diag, dtau)? {
        em.circuit.log_norm += dec.log_norm;
        for unit in &dec.hidden_units {
            em.circuit.model_log_success += unit.average_success().ln();
            em.push(unit_encoding(unit, &basis));
        }
    }
    Ok(())
}

/// `exp(-dτ c P)` through a parity ladder onto the last support qubit.
fn emit_term_cx(em: &mut Emitter<'_>, term: &HamiltonianTerm, dtau: f64) {
    let n = em.circuit.n_visible;
    let width = em.circuit.n_qubits();
    let k = dtau * term.coefficient;
    let support = term.string.support();
    let last = *support.last().expect("non-identity term");
    let rot = basis_rotation_layer(&term.string);
    let a = em.lone_ancilla();
    let g = &mut em.circuit.gates;
    for gate in &rot.before {
        g.push(gate.clone());
    }
    for w in support.windows(2) {
        g.push(Gate::CX { control: w[0], target: w[1] });
    }
    let dec = decompose_one_body(k);
    let unit = &dec.hidden_units[0];
    let enc = Encoding {
        bias: unit.bias,
        weights: vec![(PauliString::from_sparse(n, &[(last, PauliOp::Z)]), unit.weights[0].1)],
    };
    encode_unit_gates(g, width, a, &enc);
    for w in support.windows(2).rev() {
        g.push(Gate::CX { control: w[0], target: w[1] });
    }
    for gate in &rot.after {
        g.push(gate.clone());
    }
    em.circuit.log_norm += dec.log_norm;
    em.circuit.model_log_success += unit.average_success().ln();
    em.measure(&[a]);
}

fn swap_in_string(p: &PauliString, a: usize, b: usize) -> PauliString {
    let sites: Vec<(usize, PauliOp)> = p
        .support()
        .into_iter()
        .map(|q| (if q == a { b } else if q == b { a } else { q }, p.op(q)))
        .collect();
    PauliString::from_sparse(p.n_qubits(), &sites)
}

/// Exchanges the roles of qubits `a` and `b` in every gate.
fn swap_qubits(c: &mut Circuit, a: usize, b: usize) {
    let sw = |q: usize| if q == a { b } else if q == b { a } else { q };
    for g in &mut c.gates {
        let swapped = match &*g {
            Gate::Hx(q) => Gate::Hx(sw(*q)),
            Gate::Hy(q) => Gate::Hy(sw(*q)),
            Gate::HyDag(q) => Gate::HyDag(sw(*q)),
            Gate::Reset(q) => Gate::Reset(sw(*q)),
            Gate::CX { control, target } => Gate::CX { control: sw(*control), target: sw(*target) },
            Gate::Measure { qubit, bit } => Gate::Measure { qubit: sw(*qubit), bit: *bit },
            Gate::PauliRotation { angle, string } => Gate::PauliRotation { angle: *angle, string: swap_in_string(string, a, b) },
            other => other.clone(),
        };
        *g = swapped;
    }
}

fn single_term_fragment(term: &HamiltonianTerm, dtau: f64, ancilla: usize, route: Route) -> Result<Circuit> {
    let n = term.string.n_qubits();
    if ancilla < n {
        return Err(Error::invalid(format!("ancilla {ancilla} overlaps the {n} visible qubits")));
    }
    let mut c = Circuit::new(n, ancilla - n + 1);
    let opts = CircuitOptions { route, ancilla: AncillaPolicy::Single, order: 1 };
    emit_group(&mut c, &[term], dtau, &opts)?;
    swap_qubits(&mut c, n, ancilla);
    Ok(c)
}

/// `exp(-dτ c P)` through hidden units coupled to the Pauli factors of `P`
/// (induced couplings are encoded as further units), using `ancilla`.
pub fn encode_term_rbm(term: &HamiltonianTerm, dtau: f64, ancilla: usize) -> Result<Circuit> {
    single_term_fragment(term, dtau, ancilla, Route::Rbm)
}

/// `exp(-dτ c P)` through basis rotations, a CX ladder and a one-body
/// encoding on the last support qubit, using `ancilla`.
pub fn encode_term_cx(term: &HamiltonianTerm, dtau: f64, ancilla: usize) -> Result<Circuit> {
    single_term_fragment(term, dtau, ancilla, Route::Cx)
}

/// Appends `exp(-dτ Σ_terms c P)` (in the given order) to `circuit`.
fn emit_group(circuit: &mut Circuit, terms: &[&HamiltonianTerm], dtau: f64, opts: &CircuitOptions) -> Result<()> {
    let mut non_identity = Vec::with_capacity(terms.len());
    for &t in terms {
        if t.string.is_identity() {
            circuit.log_norm -= dtau * t.coefficient;
        } else {
            non_identity.push(t);
        }
    }
    let mut em = Emitter::new(circuit, opts.ancilla);
    match opts.route {
        Route::Rbm => {
            for block in compatible_blocks(&non_identity) {
                emit_block_rbm(&mut em, &block, dtau)?;
            }
        }
        Route::Cx => {
            for t in non_identity {
                if t.coefficient * dtau != 0.0 {
                    emit_term_cx(&mut em, t, dtau);
                }
            }
        }
    }
    em.flush();
    Ok(())
}

fn check_options(opts: &CircuitOptions) -> Result<()> {
    if opts.order != 1 && opts.order != 2 {
        return Err(Error::invalid(format!("Trotter order must be 1 or 2, got {}", opts.order)));
    }
    if opts.ancilla.pool_size() == 0 {
        return Err(Error::invalid("pool size must be positive"));
    }
    Ok(())
}

/// Single Trotter step approximating `exp(-dτ H)`.
///
/// First order applies the terms in input order. Second order splits the
/// Hamiltonian into one-body terms `A` and the rest `B` and applies
/// `A(dτ/2) B(dτ) A(dτ/2)`.
pub fn trotter_step(h: &Hamiltonian, dtau: f64, opts: &CircuitOptions) -> Result<Circuit> {
    check_options(opts)?;
    if !(dtau.is_finite() && dtau >= 0.0) {
        return Err(Error::invalid("time step must be finite and non-negative"));
    }
    let mut c = Circuit::new(h.n_qubits(), opts.ancilla.pool_size());
    let all: Vec<&HamiltonianTerm> = h.terms().iter().collect();
    if opts.order == 1 {
        emit_group(&mut c, &all, dtau, opts)?;
    } else {
        let (a, b): (Vec<&HamiltonianTerm>, Vec<&HamiltonianTerm>) = all.iter().partition(|t| t.string.weight() == 1);
        emit_group(&mut c, &a, dtau / 2.0, opts)?;
        emit_group(&mut c, &b, dtau, opts)?;
        emit_group(&mut c, &a, dtau / 2.0, opts)?;
    }
    Ok(c)
}

/// `round(τ/Δτ)` and the step size that makes the steps cover `τ` exactly.
pub fn step_plan(tau: f64, dtau: f64) -> Result<(usize, f64)> {
    if !(dtau > 0.0 && dtau.is_finite()) || !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau must be non-negative and dtau positive"));
    }
    let steps = (tau / dtau).round() as usize;
    if steps == 0 {
        return Ok((0, 0.0));
    }
    Ok((steps, tau / steps as f64))
}

/// `round(τ/Δτ)` Trotter steps, concatenated.
pub fn build_qite_circuit(h: &Hamiltonian, tau: f64, dtau: f64, opts: &CircuitOptions) -> Result<Circuit> {
    let (steps, dt) = step_plan(tau, dtau)?;
    let mut c = Circuit::new(h.n_qubits(), opts.ancilla.pool_size());
    if steps == 0 {
        check_options(opts)?;
        return Ok(c);
    }
    let step = trotter_step(h, dt, opts)?;
    for _ in 0..steps {
        c.extend(&step)?;
    }
    Ok(c)
}
