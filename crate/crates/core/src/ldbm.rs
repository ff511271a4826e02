//! Lateral deep Boltzmann machine (L-DBM) wave functions.
//!
//! ```text
//! Ψ(z) = exp(log_norm) Σ_h exp[i(Σ a_i z_i + Σ z_i W_ij h_j + Σ_{j<k} h_j L_jk h_k + Σ b_j h_j)]
//! ```
//!
//! with `z_i = +1` for `|0⟩` and `-1` for `|1⟩`. Gates and imaginary-time
//! factors are absorbed exactly by adding hidden units.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, LN_2};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::contract::{log_sum, min_degree_order, PairwiseModel};
use crate::error::{Error, Result};
use crate::pauli::{basis_rotation_layer, Hamiltonian, HamiltonianTerm, PauliOp};
use crate::rbm::decompose_diagonal_hamiltonian;
use crate::sim::StateVector;

/// Hidden units above which [`LdbmNetwork::amplitude`] refuses to sweep.
pub const MARGINALIZATION_LIMIT: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LdbmNetwork {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    /// `w[i][j] = W_ij`, one row per visible qubit.
    w: Vec<Vec<Complex64>>,
    /// `lateral[k]` holds `(j, L_jk)` for `j < k`.
    lateral: Vec<Vec<(usize, Complex64)>>,
    log_norm: Complex64,
}

/// Normalized state of a network plus `ln` of the norm that was divided out.
#[derive(Clone, Debug, PartialEq)]
pub struct NetState {
    pub state: StateVector,
    pub log_norm: f64,
}

impl LdbmNetwork {
    /// `N` visible qubits, no hidden units, all parameters zero (`|+⟩^N` up
    /// to normalization).
    pub fn new(n_visible: usize) -> Self {
        LdbmNetwork { a: vec![ZERO; n_visible], b: vec![], w: vec![vec![]; n_visible], lateral: vec![], log_norm: ZERO }
    }

    /// Computational basis state, qubit 0 first.
    pub fn basis_state(bits: &[bool]) -> Self {
        let mut net = Self::new(bits.len());
        for (q, &one) in bits.iter().enumerate() {
            // 2cos(π/4 (z ∓ 1)) vanishes on the unwanted value
            let bias = if one { FRAC_PI_4 } else { -FRAC_PI_4 };
            net.push_unit(&[(q, re(FRAC_PI_4))], &[], re(bias));
            net.log_norm -= LN_2;
        }
        net
    }

    pub fn from_parts(
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        w: Vec<Vec<Complex64>>,
        l: Vec<Vec<Complex64>>,
        log_norm: Complex64,
    ) -> Result<Self> {
        let (n, m) = (a.len(), b.len());
        if w.len() != n || w.iter().any(|r| r.len() != m) {
            return Err(Error::invalid(format!("W must be {n}×{m}")));
        }
        if l.len() != m || l.iter().any(|r| r.len() != m) {
            return Err(Error::invalid(format!("L must be {m}×{m}")));
        }
        let mut lateral = vec![Vec::new(); m];
        for (j, row) in l.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if k <= j && v != ZERO {
                    return Err(Error::invalid("L must be strictly upper triangular"));
                }
                if k > j && v != ZERO {
                    lateral[k].push((j, v));
                }
            }
        }
        Ok(LdbmNetwork { a, b, w, lateral, log_norm })
    }

    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn weight(&self, i: usize, j: usize) -> Complex64 {
        self.w[i][j]
    }

    /// `L_jk` for any ordering of `j ≠ k`.
    pub fn lateral(&self, j: usize, k: usize) -> Complex64 {
        let (lo, hi) = if j < k { (j, k) } else { (k, j) };
        self.lateral[hi].iter().filter(|(x, _)| *x == lo).map(|(_, v)| *v).sum()
    }

    /// All nonzero lateral couplings as `(j, k, L_jk)` with `j < k`.
    pub fn laterals(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for (k, row) in self.lateral.iter().enumerate() {
            for &(j, v) in row {
                if v != ZERO {
                    out.push((j, k, v));
                }
            }
        }
        out
    }

    pub fn log_norm(&self) -> Complex64 {
        self.log_norm
    }

    /// True when every parameter is real.
    pub fn is_real(&self) -> bool {
        let r = |c: &Complex64| c.im == 0.0;
        self.a.iter().all(r)
            && self.b.iter().all(r)
            && self.w.iter().flatten().all(r)
            && self.lateral.iter().flatten().all(|(_, v)| r(v))
    }

    fn check_visible(&self, l: usize) -> Result<()> {
        if l >= self.n_visible() {
            return Err(Error::invalid(format!("visible index {l} out of range for {} qubits", self.n_visible())));
        }
        Ok(())
    }

    fn push_unit(&mut self, visible: &[(usize, Complex64)], lateral: &[(usize, Complex64)], bias: Complex64) -> usize {
        let j = self.b.len();
        self.b.push(bias);
        for row in &mut self.w {
            row.push(ZERO);
        }
        for &(i, v) in visible {
            self.w[i][j] += v;
        }
        self.lateral.push(lateral.iter().copied().filter(|(_, v)| *v != ZERO).collect());
        j
    }

    /// New unit coupled to `l` with weight `w_new`; every existing coupling
    /// `W_lj` moves to a lateral `-W_lj` onto the new unit and is severed.
    fn sever_into_new_unit(&mut self, l: usize, w_new: Complex64, bias: Complex64) {
        let moved: Vec<(usize, Complex64)> =
            self.w[l].iter().enumerate().filter(|(_, v)| **v != ZERO).map(|(j, v)| (j, -v)).collect();
        for v in &mut self.w[l] {
            *v = ZERO;
        }
        self.push_unit(&[(l, w_new)], &moved, bias);
    }

    /// `H^x_l`.
    pub fn apply_hx(&mut self, l: usize) -> Result<()> {
        self.check_visible(l)?;
        let bias = -(self.a[l] + FRAC_PI_4);
        self.sever_into_new_unit(l, re(FRAC_PI_4), bias);
        self.a[l] = re(FRAC_PI_4);
        self.log_norm += Complex64::new(-0.5 * LN_2, -FRAC_PI_4);
        Ok(())
    }

    /// `H^y_l = (1/√2)[[-i, i], [1, 1]]`.
    pub fn apply_hy(&mut self, l: usize) -> Result<()> {
        self.check_visible(l)?;
        let bias = -self.a[l] + FRAC_PI_4;
        self.sever_into_new_unit(l, re(FRAC_PI_4), bias);
        self.a[l] = ZERO;
        self.log_norm += re(FRAC_1_SQRT_2.ln());
        Ok(())
    }

    /// `H^y†_l`.
    pub fn apply_hy_dag(&mut self, l: usize) -> Result<()> {
        self.check_visible(l)?;
        let bias = -self.a[l];
        self.sever_into_new_unit(l, re(-FRAC_PI_4), bias);
        self.a[l] = re(FRAC_PI_4);
        self.log_norm += re(FRAC_1_SQRT_2.ln());
        Ok(())
    }

    /// `diag(e^{iφ}, e^{-iφ})` on qubit `l`.
    pub fn apply_rz(&mut self, l: usize, phi: f64) -> Result<()> {
        self.check_visible(l)?;
        self.a[l] += phi;
        Ok(())
    }

    /// `exp(-i φ Z_l1 Z_l2)`.
    pub fn apply_rzz(&mut self, l1: usize, l2: usize, phi: f64) -> Result<()> {
        self.check_visible(l1)?;
        self.check_visible(l2)?;
        if l1 == l2 {
            return Err(Error::invalid("rzz needs two distinct qubits"));
        }
        self.a[l1] += FRAC_PI_4;
        self.a[l2] += FRAC_PI_4;
        let ha = self.push_unit(&[(l1, re(FRAC_PI_4)), (l2, re(FRAC_PI_4))], &[], re(-FRAC_PI_4));
        self.push_unit(&[], &[(ha, re(FRAC_PI_4))], re(phi + FRAC_PI_4));
        self.log_norm += Complex64::new(-LN_2, -FRAC_PI_4);
        Ok(())
    }

    /// `exp(-dτ c P)` for a Z-string term, one hidden unit per
    /// decomposition step (induced couplings included).
    pub fn apply_diagonal_imaginary(&mut self, term: &HamiltonianTerm, dtau: f64) -> Result<()> {
        if term.string.n_qubits() != self.n_visible() {
            return Err(Error::Dimension { expected: self.n_visible(), got: term.string.n_qubits() });
        }
        if !term.string.is_diagonal() {
            return Err(Error::NotDiagonal(term.string.to_string()));
        }
        let h = Hamiltonian::new(vec![term.clone()])?;
        for dec in decompose_diagonal_hamiltonian(&h, dtau)? {
            self.log_norm += dec.log_norm;
            for unit in &dec.hidden_units {
                let vis: Vec<(usize, Complex64)> = unit.weights.iter().map(|&(q, w)| (q, re(-w))).collect();
                self.push_unit(&vis, &[], re(-unit.bias));
            }
        }
        Ok(())
    }

    /// `exp(-dτ c P)` for any Pauli term, rotating it to a Z-string first.
    pub fn apply_term_imaginary(&mut self, term: &HamiltonianTerm, dtau: f64) -> Result<()> {
        if term.string.n_qubits() != self.n_visible() {
            return Err(Error::Dimension { expected: self.n_visible(), got: term.string.n_qubits() });
        }
        let rot = basis_rotation_layer(&term.string);
        let sites: Vec<(usize, PauliOp)> = term.string.support().into_iter().map(|q| (q, term.string.op(q))).collect();
        for &(q, op) in &sites {
            match op {
                PauliOp::X => self.apply_hx(q)?,
                PauliOp::Y => self.apply_hy_dag(q)?,
                _ => {}
            }
        }
        self.apply_diagonal_imaginary(&HamiltonianTerm::new(term.coefficient, rot.diagonalized), dtau)?;
        for &(q, op) in &sites {
            match op {
                PauliOp::X => self.apply_hx(q)?,
                PauliOp::Y => self.apply_hy(q)?,
                _ => {}
            }
        }
        Ok(())
    }

    /// `Σ a_i z_i` and the per-unit fields `b_j + Σ_i z_i W_ij`.
    fn fields(&self, z: &[f64]) -> (Complex64, Vec<Complex64>) {
        let visible: Complex64 = self.a.iter().zip(z).map(|(a, z)| a * z).sum();
        let mut f = self.b.clone();
        for (row, &zi) in self.w.iter().zip(z) {
            for (fj, w) in f.iter_mut().zip(row) {
                *fj += w * zi;
            }
        }
        (visible, f)
    }

    fn check_config(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n_visible() {
            return Err(Error::Dimension { expected: self.n_visible(), got: z.len() });
        }
        if z.iter().any(|v| *v != 1.0 && *v != -1.0) {
            return Err(Error::invalid("configuration entries must be ±1"));
        }
        Ok(())
    }

    /// `Ψ(z)` by a Gray-code sweep over the hidden units.
    pub fn amplitude(&self, z: &[f64]) -> Result<Complex64> {
        self.check_config(z)?;
        let m = self.n_hidden();
        if m > MARGINALIZATION_LIMIT {
            return Err(Error::MarginalizationLimit { m, limit: MARGINALIZATION_LIMIT });
        }
        let mut l = vec![vec![ZERO; m]; m];
        for (j, k, v) in self.laterals() {
            l[j][k] += v;
            l[k][j] += v;
        }
        let (visible, f) = self.fields(z);
        let mut h = vec![1.0f64; m];
        let mut g: Vec<Complex64> = (0..m).map(|j| f[j] + l[j].iter().sum::<Complex64>()).collect();
        let mut e: Complex64 = f.iter().sum::<Complex64>() + self.laterals().iter().map(|t| t.2).sum::<Complex64>();
        let i = Complex64::new(0.0, 1.0);
        let mut total = (i * e).exp();
        for t in 1..1usize << m {
            let j = t.trailing_zeros() as usize;
            let old = h[j];
            e -= 2.0 * old * g[j];
            for (k, gk) in g.iter_mut().enumerate() {
                if k != j {
                    *gk -= 2.0 * old * l[k][j];
                }
            }
            h[j] = -old;
            total += (i * e).exp();
        }
        Ok((self.log_norm + i * visible).exp() * total)
    }

    /// Pairwise model over the hidden units for configuration `z`.
    fn hidden_model(&self, z: &[f64]) -> (Complex64, PairwiseModel) {
        let (visible, fields) = self.fields(z);
        (visible, PairwiseModel { fields, couplings: self.laterals() })
    }

    fn elimination_order(&self) -> Vec<usize> {
        let edges: Vec<(usize, usize)> = self.laterals().iter().map(|&(j, k, _)| (j, k)).collect();
        min_degree_order(self.n_hidden(), &edges).0
    }

    /// `ln Ψ(z)` by variable elimination; no limit on the hidden count.
    pub fn log_amplitude(&self, z: &[f64]) -> Result<Complex64> {
        self.check_config(z)?;
        let order = self.elimination_order();
        let (visible, model) = self.hidden_model(z);
        Ok(self.log_norm + Complex64::new(0.0, 1.0) * visible + log_sum(&model, &order)?)
    }

    /// `ln Ψ` for every basis index (qubit 0 most significant).
    pub fn log_amplitudes(&self) -> Result<Vec<Complex64>> {
        let n = self.n_visible();
        if n > crate::sim::STATEVECTOR_LIMIT {
            return Err(Error::DenseLimit { n, limit: crate::sim::STATEVECTOR_LIMIT });
        }
        let small = self.n_hidden() <= MARGINALIZATION_LIMIT.min(12);
        let order = if small { Vec::new() } else { self.elimination_order() };
        (0..1usize << n)
            .map(|x| {
                let z = index_to_config(n, x);
                if small {
                    Ok(self.amplitude(&z)?.ln())
                } else {
                    let (visible, model) = self.hidden_model(&z);
                    Ok(self.log_norm + Complex64::new(0.0, 1.0) * visible + log_sum(&model, &order)?)
                }
            })
            .collect()
    }

    /// Unnormalized amplitudes including `exp(log_norm)`.
    pub fn amplitudes(&self) -> Result<Vec<Complex64>> {
        Ok(self.log_amplitudes()?.into_iter().map(|l| l.exp()).collect())
    }

    /// Normalized state over all `2^N` configurations.
    pub fn statevector(&self) -> Result<NetState> {
        let logs = self.log_amplitudes()?;
        let top = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::ZeroWeight);
        }
        let amps: Vec<Complex64> = logs.iter().map(|l| (l - top).exp()).collect();
        let mut state = StateVector::from_amplitudes(amps.clone())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        state.normalize()?;
        Ok(NetState { state, log_norm: top + norm.ln() })
    }
}

/// `z` for basis index `x`: `+1` where the qubit's bit is 0.
pub fn index_to_config(n: usize, x: usize) -> Vec<f64> {
    (0..n).map(|q| if x >> (n - 1 - q) & 1 == 0 { 1.0 } else { -1.0 }).collect()
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct NetworkJson {
    N: usize,
    M: usize,
    a: Vec<[f64; 2]>,
    b: Vec<[f64; 2]>,
    W: Vec<Vec<[f64; 2]>>,
    L: Vec<Vec<[f64; 2]>>,
    log_norm: [f64; 2],
}

fn pair(c: &Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn unpair(p: &[f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl Serialize for LdbmNetwork {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.n_hidden();
        let mut l = vec![vec![[0.0, 0.0]; m]; m];
        for (j, k, v) in self.laterals() {
            l[j][k] = pair(&v);
        }
        NetworkJson {
            N: self.n_visible(),
            M: m,
            a: self.a.iter().map(pair).collect(),
            b: self.b.iter().map(pair).collect(),
            W: self.w.iter().map(|r| r.iter().map(pair).collect()).collect(),
            L: l,
            log_norm: pair(&self.log_norm),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LdbmNetwork {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = NetworkJson::deserialize(d)?;
        if j.a.len() != j.N || j.b.len() != j.M {
            return Err(serde::de::Error::custom("N or M disagrees with the bias lengths"));
        }
        let conv = |m: &Vec<Vec<[f64; 2]>>| m.iter().map(|r| r.iter().map(unpair).collect()).collect();
        LdbmNetwork::from_parts(
            j.a.iter().map(unpair).collect(),
            j.b.iter().map(unpair).collect(),
            conv(&j.W),
            conv(&j.L),
            unpair(&j.log_norm),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Three-layer network: visible, hidden, deep; no couplings inside a layer
/// and none between visible and deep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbmNetwork {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub b_deep: Vec<Complex64>,
    /// `w[i][j]`, visible `i` to hidden `j`.
    pub w: Vec<Vec<Complex64>>,
    /// `w_deep[j][k]`, hidden `j` to deep `k`.
    pub w_deep: Vec<Vec<Complex64>>,
    pub log_norm: Complex64,
}

impl DbmNetwork {
    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }

    pub fn n_deep(&self) -> usize {
        self.b_deep.len()
    }

    /// The same wave function written as an L-DBM whose laterals are the
    /// hidden–deep couplings (deep units follow the hidden ones).
    pub fn to_ldbm(&self) -> LdbmNetwork {
        let (m, md) = (self.n_hidden(), self.n_deep());
        let mut b = self.b.clone();
        b.extend_from_slice(&self.b_deep);
        let w = self.w.iter().map(|r| r.iter().copied().chain(std::iter::repeat(ZERO).take(md)).collect()).collect();
        let mut lateral = vec![Vec::new(); m + md];
        for (j, row) in self.w_deep.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if v != ZERO {
                    lateral[m + k].push((j, v));
                }
            }
        }
        LdbmNetwork { a: self.a.clone(), b, w, lateral, log_norm: self.log_norm }
    }

    pub fn statevector(&self) -> Result<NetState> {
        self.to_ldbm().statevector()
    }
}

/// `W̃` and `ln A` with `exp(i c x y) = A Σ_h exp[-i W̃ (x + y) h]`, from the
/// two-body identity at imaginary coupling `K = -i c`.
pub fn mediator(c: Complex64) -> Result<(Complex64, Complex64)> {
    let k = Complex64::new(0.0, -1.0) * c;
    let arg = (-2.0 * k).exp();
    let w = 0.5 * arg.acos();
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::DomainBoundary);
    }
    Ok((w, k - LN_2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layer {
    Hidden,
    Deep,
}

/// Rewrites an L-DBM as a DBM with the same amplitudes.
///
/// Units without laterals stay hidden and units without visible couplings
/// become deep. A unit with both stays hidden when all its lateral partners
/// are deep-only units; otherwise it turns deep and each of its visible
/// couplings is carried by a new hidden mediator. Any remaining deep–deep
/// lateral is likewise replaced by a mediator.
pub fn ldbm_to_dbm(net: &LdbmNetwork) -> Result<DbmNetwork> {
    let m = net.n_hidden();
    let n = net.n_visible();
    let laterals = net.laterals();
    let mut partners = vec![Vec::new(); m];
    for &(j, k, _) in &laterals {
        partners[j].push(k);
        partners[k].push(j);
    }
    let has_visible: Vec<bool> = (0..m).map(|j| (0..n).any(|i| net.w[i][j] != ZERO)).collect();
    let pure_deep: Vec<bool> = (0..m).map(|j| !has_visible[j] && !partners[j].is_empty()).collect();
    let layer: Vec<Layer> = (0..m)
        .map(|j| {
            if partners[j].is_empty() {
                Layer::Hidden
            } else if !has_visible[j] {
                Layer::Deep
            } else if partners[j].iter().all(|&k| pure_deep[k]) {
                Layer::Hidden
            } else {
                Layer::Deep
            }
        })
        .collect();

    let hidden_ids: Vec<usize> = (0..m).filter(|&j| layer[j] == Layer::Hidden).collect();
    let deep_ids: Vec<usize> = (0..m).filter(|&j| layer[j] == Layer::Deep).collect();
    let deep_pos = |j: usize| deep_ids.binary_search(&j).expect("deep unit");
    let md = deep_ids.len();

    let mut b: Vec<Complex64> = hidden_ids.iter().map(|&j| net.b[j]).collect();
    let b_deep: Vec<Complex64> = deep_ids.iter().map(|&j| net.b[j]).collect();
    let mut w: Vec<Vec<Complex64>> = (0..n).map(|i| hidden_ids.iter().map(|&j| net.w[i][j]).collect()).collect();
    let mut w_deep: Vec<Vec<Complex64>> = vec![vec![ZERO; md]; hidden_ids.len()];
    let mut log_norm = net.log_norm;

    let mut add_mediator = |visible: Option<usize>, deep: &[usize], c: Complex64,
                            b: &mut Vec<Complex64>,
                            w: &mut Vec<Vec<Complex64>>,
                            w_deep: &mut Vec<Vec<Complex64>>|
     -> Result<()> {
        let (wt, ln_a) = mediator(c)?;
        log_norm += ln_a;
        b.push(ZERO);
        for (i, row) in w.iter_mut().enumerate() {
            row.push(if Some(i) == visible { -wt } else { ZERO });
        }
        let mut row = vec![ZERO; md];
        for &k in deep {
            row[k] += -wt;
        }
        w_deep.push(row);
        Ok(())
    };

    for (jj, &j) in hidden_ids.iter().enumerate() {
        for &k in &partners[j] {
            w_deep[jj][deep_pos(k)] += net.lateral(j, k);
        }
    }
    for &j in &deep_ids {
        for i in 0..n {
            let c = net.w[i][j];
            if c != ZERO {
                add_mediator(Some(i), &[deep_pos(j)], c, &mut b, &mut w, &mut w_deep)?;
            }
        }
    }
    for &(j, k, c) in &laterals {
        if layer[j] == Layer::Deep && layer[k] == Layer::Deep {
            add_mediator(None, &[deep_pos(j), deep_pos(k)], c, &mut b, &mut w, &mut w_deep)?;
        }
    }
    Ok(DbmNetwork { a: net.a.clone(), b, b_deep, w, w_deep, log_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::fidelity;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn brute(net: &LdbmNetwork, z: &[f64]) -> Complex64 {
        let m = net.n_hidden();
        let i = c(0.0, 1.0);
        let mut total = ZERO;
        for hc in 0..1usize << m {
            let h: Vec<f64> = (0..m).map(|j| if hc >> j & 1 == 0 { 1.0 } else { -1.0 }).collect();
            let mut e = ZERO;
            for (q, zq) in z.iter().enumerate() {
                e += net.a[q] * zq;
                for j in 0..m {
                    e += zq * net.w[q][j] * h[j];
                }
            }
            for j in 0..m {
                e += net.b[j] * h[j];
            }
            for (j, k, v) in net.laterals() {
                e += h[j] * v * h[k];
            }
            total += (i * e).exp();
        }
        net.log_norm.exp() * total
    }

    fn sample_net() -> LdbmNetwork {
        LdbmNetwork::from_parts(
            vec![c(0.3, 0.0), c(-0.7, 0.1)],
            vec![c(0.2, 0.0), c(1.1, 0.0), c(-0.4, 0.05)],
            vec![vec![c(0.5, 0.0), ZERO, c(0.9, 0.0)], vec![c(-0.2, 0.0), c(0.6, 0.0), ZERO]],
            vec![
                vec![ZERO, c(0.8, 0.0), ZERO],
                vec![ZERO, ZERO, c(-0.3, 0.0)],
                vec![ZERO, ZERO, ZERO],
            ],
            c(0.1, 0.2),
        )
        .unwrap()
    }

    #[test]
    fn empty_net_is_uniform() {
        let net = LdbmNetwork::new(1);
        assert_eq!(net.amplitude(&[1.0]).unwrap(), c(1.0, 0.0));
        let s = net.statevector().unwrap();
        assert!((s.state.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn single_unit_factorizes() {
        let net = LdbmNetwork::from_parts(
            vec![c(0.4, 0.0), c(0.1, 0.0)],
            vec![c(0.3, 0.0)],
            vec![vec![c(0.7, 0.0)], vec![c(-0.5, 0.0)]],
            vec![vec![ZERO]],
            ZERO,
        )
        .unwrap();
        let z = [1.0, -1.0];
        let expect = 2.0 * (0.3f64 + 0.7 + 0.5).cos() * c(0.0, 0.4 - 0.1).exp();
        assert!((net.amplitude(&z).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn gray_code_matches_brute_force() {
        let net = sample_net();
        for x in 0..4 {
            let z = index_to_config(2, x);
            let a = net.amplitude(&z).unwrap();
            assert!((a - brute(&net, &z)).norm() < 1e-12);
            assert!((net.log_amplitude(&z).unwrap().exp() - a).norm() < 1e-12);
        }
    }

    #[test]
    fn basis_state_net() {
        let net = LdbmNetwork::basis_state(&[false, true]);
        let amps = net.amplitudes().unwrap();
        assert!((amps[1] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(amps[0].norm() < 1e-14 && amps[2].norm() < 1e-14 && amps[3].norm() < 1e-14);
    }

    #[test]
    fn hx_on_zero_gives_plus() {
        let mut net = LdbmNetwork::basis_state(&[false]);
        net.apply_hx(0).unwrap();
        let amps = net.amplitudes().unwrap();
        assert!((amps[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((amps[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn fresh_hx_bias() {
        let mut net = LdbmNetwork::new(2);
        net.apply_hx(1).unwrap();
        assert_eq!(net.b()[0], c(-FRAC_PI_4, 0.0));
        assert!(net.laterals().is_empty());
        assert_eq!(net.a()[1], c(FRAC_PI_4, 0.0));
    }

    #[test]
    fn rz_period() {
        let mut net = sample_net();
        let before = net.amplitudes().unwrap();
        net.apply_rz(0, 2.0 * std::f64::consts::PI).unwrap();
        let after = net.amplitudes().unwrap();
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rzz_rejects_same_qubit() {
        assert!(LdbmNetwork::new(2).apply_rzz(1, 1, 0.3).is_err());
        assert!(LdbmNetwork::new(2).apply_hx(2).is_err());
    }

    #[test]
    fn diagonal_three_body_unit_count() {
        let mut net = LdbmNetwork::new(3);
        net.apply_diagonal_imaginary(&HamiltonianTerm::parse(1.0, "ZZZ").unwrap(), 0.3).unwrap();
        assert_eq!(net.n_hidden(), 7);
        assert!(net.is_real());
        let before = net.clone();
        net.apply_diagonal_imaginary(&HamiltonianTerm::parse(1.0, "ZZZ").unwrap(), 0.0).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn json_round_trip() {
        let net = sample_net();
        let s = serde_json::to_string(&net).unwrap();
        assert!(s.contains("\"N\":2") && s.contains("\"M\":3"));
        let back: LdbmNetwork = serde_json::from_str(&s).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn dbm_of_pure_rbm_has_no_deep_layer() {
        let net = LdbmNetwork::from_parts(
            vec![ZERO],
            vec![c(0.3, 0.0), c(0.1, 0.0)],
            vec![vec![c(0.2, 0.0), c(0.4, 0.0)]],
            vec![vec![ZERO; 2]; 2],
            ZERO,
        )
        .unwrap();
        let d = ldbm_to_dbm(&net).unwrap();
        assert_eq!(d.n_deep(), 0);
        assert_eq!(d.n_hidden(), 2);
    }

    #[test]
    fn dbm_after_hx_on_basis_net() {
        let mut net = LdbmNetwork::basis_state(&[false]);
        net.apply_hx(0).unwrap();
        let d = ldbm_to_dbm(&net).unwrap();
        assert_eq!((d.n_hidden(), d.n_deep()), (1, 1));
        let a = net.amplitudes().unwrap();
        let b = d.to_ldbm().amplitudes().unwrap();
        assert!(fidelity(&a, &b) > 1.0 - 1e-12);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn mediator_identity() {
        for cc in [c(0.3, 0.0), c(-1.2, 0.0), c(0.5, 0.2)] {
            let (wt, ln_a) = mediator(cc).unwrap();
            for (x, y) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let lhs = (c(0.0, 1.0) * cc * x * y).exp();
                let rhs = ln_a.exp() * 2.0 * (wt * (x + y)).cos();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }
}
