//! Exact sums over ±1 variables of pairwise complex exponentials by
//! variable elimination.
//!
//! Evaluates `ln Σ_h exp[i(Σ_j f_j h_j + Σ_(a,b) c_ab h_a h_b)]` for
//! networks far beyond brute-force size as long as the interaction graph has
//! small treewidth, which holds for networks grown gate by gate on a few
//! visible qubits.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest intermediate factor (in variables) the eliminator will build.
pub const MAX_FACTOR_WIDTH: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseModel {
    pub fields: Vec<Complex64>,
    pub couplings: Vec<(usize, usize, Complex64)>,
}

impl PairwiseModel {
    pub fn n_vars(&self) -> usize {
        self.fields.len()
    }
}

#[derive(Clone, Debug)]
struct Factor {
    vars: Vec<usize>,
    table: Vec<Complex64>,
    log_scale: f64,
}

/// Greedy min-degree order with fill-in; also returns the largest clique
/// (eliminated variable plus its neighbours) it creates.
pub fn min_degree_order(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, usize) {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    while let Some(&v) = alive.iter().min_by_key(|&&v| (adj[v].len(), v)) {
        alive.remove(&v);
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        width = width.max(nb.len() + 1);
        for &x in &nb {
            adj[x].remove(&v);
            for &y in &nb {
                if x != y {
                    adj[x].insert(y);
                }
            }
        }
        adj[v].clear();
        order.push(v);
    }
    (order, width)
}

fn spin(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Complex logarithm of the sum, eliminating in the given order (a
/// permutation of all variables).
pub fn log_sum(model: &PairwiseModel, order: &[usize]) -> Result<Complex64> {
    let n = model.n_vars();
    if order.len() != n {
        return Err(Error::Dimension { expected: n, got: order.len() });
    }
    let i = Complex64::new(0.0, 1.0);
    let mut factors: Vec<Option<Factor>> = Vec::with_capacity(n + model.couplings.len());
    let mut by_var: Vec<Vec<usize>> = vec![Vec::new(); n];
    let push = |f: Factor, factors: &mut Vec<Option<Factor>>, by_var: &mut Vec<Vec<usize>>| {
        let id = factors.len();
        for &v in &f.vars {
            by_var[v].push(id);
        }
        factors.push(Some(f));
    };
    for (v, &f) in model.fields.iter().enumerate() {
        let table = vec![(i * f).exp(), (-i * f).exp()];
        push(Factor { vars: vec![v], table, log_scale: 0.0 }, &mut factors, &mut by_var);
    }
    for &(a, b, c) in &model.couplings {
        if a == b {
            return Err(Error::invalid("self coupling in pairwise model"));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = (i * c).exp();
        let m = (-i * c).exp();
        // index bit 0 is `lo`, bit 1 is `hi`
        push(Factor { vars: vec![lo, hi], table: vec![p, m, m, p], log_scale: 0.0 }, &mut factors, &mut by_var);
    }

    let mut scalar = Complex64::new(0.0, 0.0);
    for &v in order {
        let ids: Vec<usize> = by_var[v].iter().copied().filter(|&id| factors[id].is_some()).collect();
        let group: Vec<Factor> = ids.iter().map(|&id| factors[id].take().expect("alive factor")).collect();
        let mut union: BTreeSet<usize> = BTreeSet::new();
        for f in &group {
            union.extend(f.vars.iter().copied());
        }
        union.remove(&v);
        let out_vars: Vec<usize> = union.into_iter().collect();
        if out_vars.len() + 1 > MAX_FACTOR_WIDTH {
            return Err(Error::MarginalizationLimit { m: out_vars.len() + 1, limit: MAX_FACTOR_WIDTH });
        }
        // position of each factor variable in the output index; v is the extra top bit
        let k = out_vars.len();
        let maps: Vec<Vec<usize>> = group
            .iter()
            .map(|f| {
                f.vars.iter().map(|x| if *x == v { k } else { out_vars.binary_search(x).expect("in union") }).collect()
            })
            .collect();
        let mut table = vec![Complex64::new(0.0, 0.0); 1 << k];
        for (idx, slot) in table.iter_mut().enumerate() {
            let mut total = Complex64::new(0.0, 0.0);
            for vb in 0..2usize {
                let full = idx | vb << k;
                let mut prod = Complex64::new(1.0, 0.0);
                for (f, map) in group.iter().zip(&maps) {
                    let mut fi = 0;
                    for (bit, &pos) in map.iter().enumerate() {
                        fi |= (full >> pos & 1) << bit;
                    }
                    prod *= f.table[fi];
                }
                total += prod;
            }
            *slot = total;
        }
        let max = table.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut log_scale: f64 = group.iter().map(|f| f.log_scale).sum();
        if max == 0.0 {
            return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
        }
        for c in &mut table {
            *c /= max;
        }
        log_scale += max.ln();
        if k == 0 {
            scalar += table[0].ln() + log_scale;
        } else {
            push(Factor { vars: out_vars, table, log_scale }, &mut factors, &mut by_var);
        }
    }
    for f in factors.into_iter().flatten() {
        debug_assert!(f.vars.is_empty());
        scalar += f.table[0].ln() + f.log_scale;
    }
    Ok(scalar)
}

/// Brute-force reference sum for small models.
pub fn brute_force_sum(model: &PairwiseModel) -> Complex64 {
    let n = model.n_vars();
    let i = Complex64::new(0.0, 1.0);
    (0..1usize << n)
        .map(|c| {
            let h = |v: usize| spin(c >> v & 1);
            let mut e: Complex64 = model.fields.iter().enumerate().map(|(v, f)| f * h(v)).sum();
            for &(a, b, w) in &model.couplings {
                e += w * h(a) * h(b);
            }
            (i * e).exp()
        })
        .sum()
}
