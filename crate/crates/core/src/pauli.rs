//! Pauli strings, weighted Pauli-string Hamiltonians and their text format.
//!
//! Qubit `q` is character `q` of a Pauli word (leftmost is qubit 0) and bit
//! `n - 1 - q` of a basis-state index, i.e. qubit 0 is the most significant
//! bit.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::Gate;

/// Largest register that `dense_matrix` builds by default.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    /// 2×2 matrix in the computational basis.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let r = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliOp::I => [[r, o], [o, r]],
            PauliOp::X => [[o, r], [r, o]],
            PauliOp::Y => [[o, -i], [i, o]],
            PauliOp::Z => [[r, o], [o, -r]],
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A tensor product of single-qubit Pauli operators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<PauliOp>,
}

impl PauliString {
    pub fn new(ops: Vec<PauliOp>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::invalid("a Pauli string needs at least one qubit"));
        }
        Ok(PauliString { ops })
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString { ops: vec![PauliOp::I; n_qubits.max(1)] }
    }

    /// String acting as `op` on each listed qubit and identity elsewhere.
    pub fn from_sparse(n_qubits: usize, sites: &[(usize, PauliOp)]) -> Self {
        let mut ops = vec![PauliOp::I; n_qubits.max(1)];
        for &(q, op) in sites {
            ops[q] = op;
        }
        PauliString { ops }
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    pub fn op(&self, q: usize) -> PauliOp {
        self.ops[q]
    }

    /// Indices where the operator is not the identity.
    pub fn support(&self) -> Vec<usize> {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, op)| **op != PauliOp::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Interaction order (number of non-identity sites).
    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|op| **op != PauliOp::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.ops.iter().all(|op| matches!(op, PauliOp::I | PauliOp::Z))
    }

    /// Same string padded with identities to `width` qubits, shifted by `offset`.
    pub fn embed(&self, width: usize, offset: usize) -> PauliString {
        let mut ops = vec![PauliOp::I; width];
        for (q, op) in self.ops.iter().enumerate() {
            ops[q + offset] = *op;
        }
        PauliString { ops }
    }

    /// Bit of qubit `q` in a basis index of an `n`-qubit register.
    #[inline]
    pub fn bit(n: usize, q: usize) -> usize {
        1usize << (n - 1 - q)
    }

    /// (flip mask, phase mask, number of Y factors) for index-level application.
    pub fn masks(&self) -> (usize, usize, u32) {
        let n = self.ops.len();
        let mut flip = 0;
        let mut phase = 0;
        let mut ny = 0;
        for (q, op) in self.ops.iter().enumerate() {
            let b = Self::bit(n, q);
            match op {
                PauliOp::I => {}
                PauliOp::X => flip |= b,
                PauliOp::Z => phase |= b,
                PauliOp::Y => {
                    flip |= b;
                    phase |= b;
                    ny += 1;
                }
            }
        }
        (flip, phase, ny)
    }

    /// True when the two strings agree on every qubit where both act
    /// non-trivially, which makes them (and any products of their factors)
    /// commute.
    pub fn qubitwise_compatible(&self, other: &PauliString) -> bool {
        self.ops
            .iter()
            .zip(&other.ops)
            .all(|(a, b)| *a == PauliOp::I || *b == PauliOp::I || a == b)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .zip(&other.ops)
            .filter(|(a, b)| **a != PauliOp::I && **b != PauliOp::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// `P|x> = phase * |y>`.
    pub fn apply_to_index(&self, x: usize) -> (Complex64, usize) {
        let (flip, phase, ny) = self.masks();
        apply_masks(flip, phase, ny, x)
    }

    /// Dense 2^n × 2^n matrix.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits();
        let (flip, phase, ny) = self.masks();
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            let (c, y) = apply_masks(flip, phase, ny, x);
            m[(y, x)] = c;
        }
        m
    }
}

#[inline]
pub(crate) fn apply_masks(flip: usize, phase: usize, ny: u32, x: usize) -> (Complex64, usize) {
    // Y = i X Z, so P|x> = i^{#Y} (-1)^{|x & zmask|} |x ^ xmask>.
    let sign = if (x & phase).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    let c = match ny % 4 {
        0 => Complex64::new(sign, 0.0),
        1 => Complex64::new(0.0, sign),
        2 => Complex64::new(-sign, 0.0),
        _ => Complex64::new(0.0, -sign),
    };
    (c, x ^ flip)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            write!(f, "{}", op)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| {
                PauliOp::from_char(c)
                    .ok_or_else(|| Error::invalid(format!("character '{c}' outside {{I,X,Y,Z}}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(ops)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    #[serde(rename = "coeff")]
    pub coefficient: f64,
    #[serde(rename = "word")]
    pub string: PauliString,
}

impl HamiltonianTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        HamiltonianTerm { coefficient, string }
    }

    pub fn parse(coefficient: f64, word: &str) -> Result<Self> {
        Ok(HamiltonianTerm { coefficient, string: word.parse()? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<HamiltonianTerm>,
}

impl Hamiltonian {
    pub fn new(terms: Vec<HamiltonianTerm>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyHamiltonian)?;
        let n_qubits = first.string.n_qubits();
        for t in &terms {
            if t.string.n_qubits() != n_qubits {
                return Err(Error::invalid("all terms must act on the same number of qubits"));
            }
            if !t.coefficient.is_finite() {
                return Err(Error::invalid("coefficients must be finite"));
            }
        }
        Ok(Hamiltonian { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    /// Three-site transverse-field Ising ring at the critical point,
    /// `Σ Z_i Z_{i+1} - Σ X_i` with periodic boundaries.
    pub fn tfim_ring3() -> Self {
        parse_hamiltonian("1.0 ZZI\n1.0 IZZ\n1.0 ZIZ\n-1.0 XII\n-1.0 IXI\n-1.0 IIX\n")
            .expect("hard-coded model parses")
    }
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{} {}", t.coefficient, t.string)?;
        }
        Ok(())
    }
}

impl FromStr for Hamiltonian {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_hamiltonian(s)
    }
}

/// Parses one `<coefficient> <word>` term per line; `#` starts a comment.
pub fn parse_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let mut terms = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut fields = line.split_whitespace();
        let coeff_txt = fields.next().ok_or_else(|| err("missing coefficient".into()))?;
        let word = fields.next().ok_or_else(|| err("missing Pauli word".into()))?;
        if let Some(extra) = fields.next() {
            return Err(err(format!("unexpected trailing field '{extra}'")));
        }
        if coeff_txt.contains(['i', 'j']) && coeff_txt.parse::<f64>().is_err() {
            return Err(err(format!("complex coefficient '{coeff_txt}' not supported")));
        }
        let coefficient: f64 = coeff_txt
            .parse()
            .map_err(|_| err(format!("malformed coefficient '{coeff_txt}'")))?;
        if !coefficient.is_finite() {
            return Err(err(format!("non-finite coefficient '{coeff_txt}'")));
        }
        if let Some(c) = word.chars().find(|c| PauliOp::from_char(*c).is_none()) {
            return Err(err(format!("character '{c}' outside {{I,X,Y,Z}}")));
        }
        let n = word.chars().count();
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(err(format!("word length {n} differs from earlier length {w}")))
            }
            _ => {}
        }
        terms.push(HamiltonianTerm::parse(coefficient, word).map_err(|e| err(e.to_string()))?);
    }
    if terms.is_empty() {
        return Err(Error::EmptyHamiltonian);
    }
    Hamiltonian::new(terms)
}

/// `Σ_k c_k P_k` as a dense Hermitian matrix.
pub fn dense_matrix(h: &Hamiltonian, limit: usize) -> Result<DMatrix<Complex64>> {
    let n = h.n_qubits();
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for t in h.terms() {
        let (flip, phase, ny) = t.string.masks();
        for x in 0..dim {
            let (c, y) = apply_masks(flip, phase, ny, x);
            m[(y, x)] += c * t.coefficient;
        }
    }
    Ok(m)
}

/// Single-qubit rotations taking a Pauli string to its diagonal form.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisRotation {
    /// Gates applied (in time order) before the diagonal operator.
    pub before: Vec<Gate>,
    /// Gates applied (in time order) after the diagonal operator.
    pub after: Vec<Gate>,
    /// `Z` on the support of the input, `I` elsewhere.
    pub diagonalized: PauliString,
}

/// Rotations with `p = V · diagonalized · V†`, where the circuit applies
/// `before` (= V†) then the diagonal operator then `after` (= V).
///
/// X sites use `H^x` on both sides. Y sites use `H^y†` before and `H^y`
/// after, from `σ^y = H^y σ^z H^y†`.
pub fn basis_rotation_layer(p: &PauliString) -> BasisRotation {
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut diag = Vec::with_capacity(p.n_qubits());
    for (q, op) in p.ops().iter().enumerate() {
        match op {
            PauliOp::I => diag.push(PauliOp::I),
            PauliOp::Z => diag.push(PauliOp::Z),
            PauliOp::X => {
                before.push(Gate::Hx(q));
                after.push(Gate::Hx(q));
                diag.push(PauliOp::Z);
            }
            PauliOp::Y => {
                before.push(Gate::HyDag(q));
                after.push(Gate::Hy(q));
                diag.push(PauliOp::Z);
            }
        }
    }
    BasisRotation { before, after, diagonalized: PauliString { ops: diag } }
}
