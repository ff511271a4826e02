//! Auxiliary-field (unitary RBM) identities for non-unitary Pauli exponentials.
//!
//! A hidden unit with bias `C` and weights `W_r` marginalizes to
//!
//! ```text
//! Σ_{h=±1} exp[-i h (C + Σ_r W_r σ_r)] = 2 cos(C + Σ_r W_r σ_r),
//! ```
//!
//! and a [`Decomposition`] records the prefactor `A = exp(log_norm)` together
//! with the lower-order couplings the unit produces besides the target term:
//!
//! ```text
//! exp(-K P - Σ_induced K_Q Q) = A Σ_h exp[-i h (C + Σ_r W_r σ_r)].
//! ```
//!
//! Subset masks used by [`induced_couplings`] put local visible index `r` on
//! bit `r`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{expm_hermitian, max_abs_diff};
use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, HamiltonianTerm, PauliOp, PauliString, DEFAULT_DENSE_LIMIT};

/// Couplings with magnitude at or below this are treated as absent.
pub const COUPLING_CUTOFF: f64 = 1e-15;

/// Largest order handled by the 2^M Walsh evaluation.
pub const MAX_WALSH_ORDER: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenUnit {
    pub bias: f64,
    /// `(visible index, W_r)` pairs.
    pub weights: Vec<(usize, f64)>,
}

impl HiddenUnit {
    /// `C + Σ W_r z_r` for `z_r = sign(r)`.
    pub fn argument(&self, sign: impl Fn(usize) -> f64) -> f64 {
        self.bias + self.weights.iter().map(|&(q, w)| w * sign(q)).sum::<f64>()
    }

    /// Post-selection probability averaged over a uniform visible register,
    /// `2^{-M} Σ_z cos²(C + Σ W_r z_r)`.
    pub fn average_success(&self) -> f64 {
        let m = self.weights.len();
        let total: f64 = (0..1usize << m)
            .map(|c| {
                let arg = self.bias
                    + self
                        .weights
                        .iter()
                        .enumerate()
                        .map(|(r, &(_, w))| if c >> r & 1 == 1 { -w } else { w })
                        .sum::<f64>();
                arg.cos().powi(2)
            })
            .sum();
        total / (1usize << m) as f64
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().map(|&(q, _)| q)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `ln A`.
    pub log_norm: f64,
    pub hidden_units: Vec<HiddenUnit>,
    /// Lower-order couplings produced alongside the target term.
    #[serde(rename = "induced")]
    pub induced_terms: Vec<HamiltonianTerm>,
}

impl Decomposition {
    /// `A Σ_h Π_units exp[-i h (C + Σ W_r σ_r)]` as a dense matrix, with σ on
    /// each qubit taken from `basis` (its non-identity entries).
    pub fn marginal_operator(&self, basis: &PauliString) -> DMatrix<Complex64> {
        let n = basis.n_qubits();
        let dim = 1usize << n;
        let mut acc = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(self.log_norm.exp(), 0.0);
        for unit in &self.hidden_units {
            let mut g = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(unit.bias, 0.0);
            for &(q, w) in &unit.weights {
                let op = match basis.op(q) {
                    PauliOp::I => PauliOp::Z,
                    op => op,
                };
                g += PauliString::from_sparse(n, &[(q, op)]).dense_matrix() * Complex64::new(w, 0.0);
            }
            let sum = expm_hermitian(&g, Complex64::new(0.0, -1.0)) + expm_hermitian(&g, Complex64::new(0.0, 1.0));
            acc = acc * sum;
        }
        acc
    }

    /// `marginal_operator · exp(+Σ induced)`, which equals the target
    /// exponential `exp(-K P)` for a single-term decomposition.
    pub fn reconstruct(&self, basis: &PauliString) -> DMatrix<Complex64> {
        let n = basis.n_qubits();
        let dim = 1usize << n;
        let mut ind = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.induced_terms {
            let mapped = rotate_word(&t.string, basis);
            ind += mapped.dense_matrix() * Complex64::new(t.coefficient, 0.0);
        }
        self.marginal_operator(basis) * expm_hermitian(&ind, Complex64::new(1.0, 0.0))
    }
}

/// Replaces each `Z` of a diagonal word by the operator `basis` has there.
pub fn rotate_word(word: &PauliString, basis: &PauliString) -> PauliString {
    let sites: Vec<(usize, PauliOp)> = word
        .support()
        .into_iter()
        .map(|q| {
            let op = match basis.op(q) {
                PauliOp::I => PauliOp::Z,
                op => op,
            };
            (q, op)
        })
        .collect();
    PauliString::from_sparse(word.n_qubits(), &sites)
}

fn sign_of(k: f64) -> f64 {
    if k < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `W` with `cos(2W) = exp(-2|K|)`, evaluated without cancellation at small K.
fn two_body_weight(k: f64) -> f64 {
    let a = k.abs();
    0.5 * (-(-4.0 * a).exp_m1()).sqrt().atan2((-2.0 * a).exp())
}

fn three_four_body_weight(k: f64) -> f64 {
    0.5 * (-(-8.0 * k.abs()).exp_m1()).powf(0.25).atan()
}

fn three_four_body_log_norm(w: f64) -> f64 {
    // A = ½ [sec⁴(2W) sec(4W)]^{1/8}
    (0.5f64).ln() - ((2.0 * w).cos().ln() * 4.0 + (4.0 * w).cos().ln()) / 8.0
}

fn z_word(n: usize, sites: &[usize]) -> PauliString {
    let s: Vec<(usize, PauliOp)> = sites.iter().map(|&q| (q, PauliOp::Z)).collect();
    PauliString::from_sparse(n, &s)
}

/// `exp(-K σ) = A Σ_h exp[-i W (σ + s) h]`.
pub fn decompose_one_body(k: f64) -> Decomposition {
    let s = sign_of(k);
    let w = two_body_weight(k);
    Decomposition {
        log_norm: k.abs() - LN_2,
        hidden_units: vec![HiddenUnit { bias: s * w, weights: vec![(0, w)] }],
        induced_terms: vec![],
    }
}

/// `exp(-K σ_1 σ_2) = A Σ_h exp[-i W (σ_1 + s σ_2) h]`, nothing induced.
pub fn decompose_two_body(k: f64) -> Decomposition {
    let s = sign_of(k);
    let w = two_body_weight(k);
    Decomposition {
        log_norm: k.abs() - LN_2,
        hidden_units: vec![HiddenUnit { bias: 0.0, weights: vec![(0, w), (1, s * w)] }],
        induced_terms: vec![],
    }
}

/// Three equal weights with bias `sW`; induces all one- and two-body terms.
pub fn decompose_three_body(k: f64) -> Decomposition {
    if k == 0.0 {
        return Decomposition::default();
    }
    let s = sign_of(k);
    let w = three_four_body_weight(k);
    let kk = -(4.0 * w).cos().ln() / 8.0;
    let mut induced = Vec::with_capacity(6);
    for q in 0..3 {
        induced.push(HamiltonianTerm::new(s * kk, z_word(3, &[q])));
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        induced.push(HamiltonianTerm::new(kk, z_word(3, &[a, b])));
    }
    Decomposition {
        log_norm: three_four_body_log_norm(w),
        hidden_units: vec![HiddenUnit { bias: s * w, weights: vec![(0, w), (1, w), (2, w)] }],
        induced_terms: induced,
    }
}

/// Weights `(W, W, W, sW)`, no bias; induces only two-body terms.
pub fn decompose_four_body(k: f64) -> Decomposition {
    if k == 0.0 {
        return Decomposition::default();
    }
    let s = sign_of(k);
    let w = three_four_body_weight(k);
    let kk = -(4.0 * w).cos().ln() / 8.0;
    let mut induced = Vec::with_capacity(6);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        induced.push(HamiltonianTerm::new(kk, z_word(4, &[a, b])));
    }
    for (a, b) in [(0, 3), (1, 3), (2, 3)] {
        induced.push(HamiltonianTerm::new(s * kk, z_word(4, &[a, b])));
    }
    Decomposition {
        log_norm: three_four_body_log_norm(w),
        hidden_units: vec![HiddenUnit { bias: 0.0, weights: vec![(0, w), (1, w), (2, w), (3, s * w)] }],
        induced_terms: induced,
    }
}

/// Equal-weight solution for the highest-order coupling of an `M`-body term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralSolution {
    pub weight: f64,
    /// One coupling carries `-W` (the last weight for even M, the bias for odd M).
    pub sign_flip: bool,
    pub bias: f64,
    /// `π/(2M') - W` with `M'` the even order used, kept at full precision.
    pub delta: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Top coupling of `m` (even) equal weights `W = π/(2m) - δ`:
/// `-2^{-m} Σ_k (-1)^k C(m,k) ln cos((2k-m)W)` with the two outermost
/// cosines written as `sin(mδ)`.
fn even_top_coupling(m: usize, delta: f64) -> f64 {
    let w = FRAC_PI_2 / m as f64 - delta;
    let mut acc = 0.0;
    for k in 0..=m {
        let j = (2 * k as i64 - m as i64).unsigned_abs() as usize;
        let c = if j == m { (m as f64 * delta).sin() } else { (j as f64 * w).cos() };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(m, k) * c.ln();
    }
    -acc / (1u64 << m) as f64
}

/// Solves for the weight that gives the `M`-body coupling `k_target`.
///
/// Even M uses `C = 0` and `M` equal weights, odd M uses `C = W` and the
/// even formula with `M + 1`. For `k_target < 0` one coupling is negated.
/// The top coupling increases monotonically from 0 at `W = 0` to `+∞` at
/// `W = π/(2M)`; the root is bracketed in `ln δ` with `δ = π/(2M) - W` and
/// polished with secant steps.
pub fn solve_general_weight(m: usize, k_target: f64) -> Result<GeneralSolution> {
    if m == 0 {
        return Err(Error::invalid("order must be at least 1"));
    }
    if !k_target.is_finite() {
        return Err(Error::invalid("coupling must be finite"));
    }
    let flip = k_target < 0.0;
    let target = k_target.abs();
    let m_eff = if m % 2 == 0 { m } else { m + 1 };
    let half = FRAC_PI_2 / m_eff as f64;
    let delta = if target == 0.0 {
        half
    } else {
        let f = |u: f64| even_top_coupling(m_eff, u.exp()) - target;
        // f is increasing as u = ln δ decreases.
        let mut hi = half.ln();
        let mut lo = -700.0;
        if f(lo) < 0.0 {
            return Err(Error::invalid(format!("coupling {k_target} out of reach for order {m}")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo).abs() < 1e-13 {
                break;
            }
        }
        let (mut u0, mut u1) = (lo, hi);
        let (mut f0, mut f1) = (f(u0), f(u1));
        for _ in 0..8 {
            if f1 == f0 || f1.abs() < 1e-15 {
                break;
            }
            let u2 = u1 - f1 * (u1 - u0) / (f1 - f0);
            if !(u2.is_finite()) || u2 < lo - 1.0 || u2 > hi + 1.0 {
                break;
            }
            u0 = u1;
            f0 = f1;
            u1 = u2;
            f1 = f(u1);
        }
        let u = if f1.abs() <= f0.abs() { u1 } else { u0 };
        u.exp()
    };
    let w = half - delta;
    let bias = if m % 2 == 0 {
        0.0
    } else if flip {
        -w
    } else {
        w
    };
    Ok(GeneralSolution { weight: w, sign_flip: flip, bias, delta })
}

/// The hidden unit belonging to [`solve_general_weight`]'s solution,
/// indexed on local visible sites `0..m`.
pub fn general_unit(m: usize, k_target: f64) -> Result<HiddenUnit> {
    let sol = solve_general_weight(m, k_target)?;
    let mut weights: Vec<(usize, f64)> = (0..m).map(|r| (r, sol.weight)).collect();
    if m % 2 == 0 && sol.sign_flip {
        weights[m - 1].1 = -sol.weight;
    }
    Ok(HiddenUnit { bias: sol.bias, weights })
}

/// In-place Walsh–Hadamard transform.
fn fwht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `cos(C + Σ W_r z_r)` with the argument summed exactly (as a double-double)
/// and reduced against `π/2` in extended precision, so values next to a
/// zero of the cosine keep their relative accuracy.
fn unit_cos(unit: &HiddenUnit, sign: impl Fn(usize) -> f64) -> f64 {
    const PIO2_HI: f64 = 1.570_796_326_794_896_6;
    const PIO2_LO: f64 = 6.123_233_995_736_766e-17;
    let (mut hi, mut lo) = (unit.bias, 0.0);
    for &(q, w) in &unit.weights {
        let (s, e) = two_sum(hi, w * sign(q));
        hi = s;
        lo += e;
    }
    let (hi, lo) = two_sum(hi, lo);
    let n = (hi / PIO2_HI).round();
    let r = (-n).mul_add(PIO2_HI, hi) + (lo - n * PIO2_LO);
    match (n as i64).rem_euclid(4) {
        0 => r.cos(),
        1 => -r.sin(),
        2 => -r.cos(),
        _ => r.sin(),
    }
}

/// `L(z) = ln[2 cos(C + Σ W_r z_r)]` for every configuration; bit `r` of
/// the index set means `z_r = -1`.
pub fn log_marginal_table(m: usize, unit: &HiddenUnit) -> Result<Vec<f64>> {
    (0..1usize << m)
        .map(|c| {
            let v = 2.0 * unit_cos(unit, |r| if c >> r & 1 == 1 { -1.0 } else { 1.0 });
            if v <= 0.0 {
                Err(Error::DomainBoundary)
            } else {
                Ok(v.ln())
            }
        })
        .collect()
}

/// All `2^M` couplings `K_P` (indexed by subset mask, `K_∅` at 0) matched by
/// a single hidden unit on local sites `0..m`:
/// `K_P = -2^{-M} Σ_z (Π_{j∈P} z_j) L(z)`.
pub fn induced_couplings(m: usize, unit: &HiddenUnit) -> Result<Vec<f64>> {
    if m > MAX_WALSH_ORDER {
        return Err(Error::invalid(format!("order {m} above the Walsh limit {MAX_WALSH_ORDER}")));
    }
    if unit.weights.iter().any(|&(r, _)| r >= m) {
        return Err(Error::invalid("unit weight outside the local register"));
    }
    let mut v = log_marginal_table(m, unit)?;
    fwht(&mut v);
    let scale = -1.0 / (1usize << m) as f64;
    Ok(v.into_iter().map(|x| x * scale).collect())
}

/// Rebuilds `L(z)` from couplings: `L(z) = -Σ_P K_P Π_{j∈P} z_j`.
pub fn evaluate_log_marginal(couplings: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = couplings.iter().map(|k| -k).collect();
    fwht(&mut v);
    v
}

/// Decomposition of `exp(-K Z_0 ⋯ Z_{m-1})` on local sites, closed forms up
/// to four-body, the equal-weight solution above that.
pub fn decompose_term(m: usize, k: f64) -> Result<Decomposition> {
    match m {
        0 => Ok(Decomposition { log_norm: -k, ..Default::default() }),
        _ if k == 0.0 => Ok(Decomposition::default()),
        1 => Ok(decompose_one_body(k)),
        2 => Ok(decompose_two_body(k)),
        3 => Ok(decompose_three_body(k)),
        4 => Ok(decompose_four_body(k)),
        _ => {
            let unit = general_unit(m, k)?;
            let table = induced_couplings(m, &unit)?;
            let full = (1usize << m) - 1;
            let induced = (1..full)
                .filter(|&p| table[p].abs() > COUPLING_CUTOFF)
                .map(|p| {
                    let sites: Vec<usize> = (0..m).filter(|r| p >> r & 1 == 1).collect();
                    HamiltonianTerm::new(table[p], z_word(m, &sites))
                })
                .collect();
            Ok(Decomposition { log_norm: table[0], hidden_units: vec![unit], induced_terms: induced })
        }
    }
}

/// Decomposition of `exp(-c P)` for a single term, placed on the term's
/// support; the hidden units act on the Pauli factors of `P` itself.
pub fn decompose_pauli_term(term: &HamiltonianTerm) -> Result<Decomposition> {
    let support = term.string.support();
    Ok(place(decompose_term(support.len(), term.coefficient)?, &support, term.string.n_qubits()))
}

/// Largest entrywise deviation of the rebuilt operator from `exp(-c P)`.
pub fn reconstruction_error(term: &HamiltonianTerm, dec: &Decomposition) -> Result<f64> {
    let n = term.string.n_qubits();
    if n > DEFAULT_DENSE_LIMIT {
        return Err(Error::DenseLimit { n, limit: DEFAULT_DENSE_LIMIT });
    }
    let want = if term.coefficient == 0.0 {
        DMatrix::identity(1 << n, 1 << n)
    } else {
        expm_hermitian(&term.string.dense_matrix(), Complex64::new(-term.coefficient, 0.0))
    };
    Ok(max_abs_diff(&dec.reconstruct(&term.string), &want))
}

/// Remaps a local-site decomposition onto the listed global qubits.
fn place(dec: Decomposition, support: &[usize], n: usize) -> Decomposition {
    Decomposition {
        log_norm: dec.log_norm,
        hidden_units: dec
            .hidden_units
            .into_iter()
            .map(|u| HiddenUnit { bias: u.bias, weights: u.weights.into_iter().map(|(r, w)| (support[r], w)).collect() })
            .collect(),
        induced_terms: dec
            .induced_terms
            .into_iter()
            .map(|t| {
                let sites: Vec<usize> = t.string.support().into_iter().map(|r| support[r]).collect();
                HamiltonianTerm::new(t.coefficient, z_word(n, &sites))
            })
            .collect(),
    }
}

/// Expresses `exp(-τ H)` for a Z-string Hamiltonian as a product of
/// single-unit decompositions.
///
/// The highest-order remaining coupling is decomposed first; its induced
/// couplings are subtracted from the table (they were produced on top of the
/// target term and must be undone) and the loop repeats until nothing is
/// left. A constant (all-identity) part comes back as a final decomposition
/// without hidden units. The product of all returned marginal operators is
/// `exp(-τ H)`.
pub fn decompose_diagonal_hamiltonian(h: &Hamiltonian, tau: f64) -> Result<Vec<Decomposition>> {
    let n = h.n_qubits();
    if n > 64 {
        return Err(Error::invalid("at most 64 qubits in a diagonal table"));
    }
    let mut table: BTreeMap<u64, f64> = BTreeMap::new();
    for t in h.terms() {
        if !t.string.is_diagonal() {
            return Err(Error::NotDiagonal(t.string.to_string()));
        }
        let mask = t.string.support().iter().fold(0u64, |m, &q| m | 1 << q);
        *table.entry(mask).or_insert(0.0) += tau * t.coefficient;
    }
    let constant = table.remove(&0).unwrap_or(0.0);
    let mut out = Vec::new();
    loop {
        table.retain(|_, v| v.abs() > COUPLING_CUTOFF);
        let Some((&mask, &k)) = table.iter().max_by(|a, b| {
            a.0.count_ones().cmp(&b.0.count_ones()).then_with(|| b.0.cmp(a.0))
        }) else {
            break;
        };
        table.remove(&mask);
        let support: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        let dec = place(decompose_term(support.len(), k)?, &support, n);
        for t in &dec.induced_terms {
            let m = t.string.support().iter().fold(0u64, |m, &q| m | 1 << q);
            *table.entry(m).or_insert(0.0) -= t.coefficient;
        }
        out.push(dec);
    }
    if constant != 0.0 {
        out.push(Decomposition { log_norm: -constant, ..Default::default() });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessKind {
    TwoBody,
    ThreeBody,
}

/// Post-selection model of a single encoding with coupling `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessModel {
    pub kind: SuccessKind,
    pub coupling: f64,
}

impl SuccessModel {
    pub fn two_body(coupling: f64) -> Self {
        SuccessModel { kind: SuccessKind::TwoBody, coupling }
    }

    pub fn three_body(coupling: f64) -> Self {
        SuccessModel { kind: SuccessKind::ThreeBody, coupling }
    }

    pub fn sign(&self) -> f64 {
        sign_of(self.coupling)
    }
}

/// Success probability given occupation probabilities.
///
/// Two-body (and one-body) encodings take `[α]` with `α = P(σ_1 = s σ_2)`
/// (`P(σ = s)` for one body); three-body encodings take `[α_2, α_4]` with
/// `α_n = P(|σ_1 + σ_2 + σ_3 + s| = n)`.
pub fn success_probability(model: &SuccessModel, alphas: &[f64]) -> Result<f64> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::invalid(format!("occupation probability {a} outside [0, 1]")));
    }
    let k = model.coupling.abs();
    let p = match model.kind {
        SuccessKind::TwoBody => {
            let [alpha] = alphas else {
                return Err(Error::invalid("two-body model takes one occupation probability"));
            };
            1.0 + (-4.0 * k).exp_m1() * alpha
        }
        SuccessKind::ThreeBody => {
            let [a2, a4] = alphas else {
                return Err(Error::invalid("three-body model takes two occupation probabilities"));
            };
            if a2 + a4 > 1.0 + 1e-12 {
                return Err(Error::invalid("occupation probabilities sum above 1"));
            }
            let w = three_four_body_weight(k);
            1.0 - (2.0 * w).sin().powi(2) * a2 - (4.0 * w).sin().powi(2) * a4
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Success probability averaged over all visible configurations.
pub fn average_success_probability(model: &SuccessModel) -> f64 {
    let k = model.coupling.abs();
    match model.kind {
        SuccessKind::TwoBody => 0.5 * (1.0 + (-4.0 * k).exp()),
        SuccessKind::ThreeBody => {
            let w = three_four_body_weight(k);
            (3.0 + 4.0 * (2.0 * w).cos().powi(2) + (4.0 * w).cos().powi(2)) / 8.0
        }
    }
}
