//! Line-oriented L-DBM op scripts.

use std::fmt;

use anyhow::{anyhow, bail, Context, Result};
use qite_core::ldbm::{ldbm_to_dbm, LdbmNetwork};
use qite_core::HamiltonianTerm;
use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Qubits(usize),
    Basis(Vec<bool>),
    Hx(usize),
    Hy(usize),
    HyDag(usize),
    Rz(usize, f64),
    Rzz(usize, usize, f64),
    Imag(String, f64),
    ToDbm,
    Dump,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Qubits(n) => write!(f, "qubits {n}"),
            Op::Basis(b) => write!(f, "basis {}", b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>()),
            Op::Hx(l) => write!(f, "hx {l}"),
            Op::Hy(l) => write!(f, "hy {l}"),
            Op::HyDag(l) => write!(f, "hydag {l}"),
            Op::Rz(l, p) => write!(f, "rz {l} {p}"),
            Op::Rzz(a, b, p) => write!(f, "rzz {a} {b} {p}"),
            Op::Imag(w, k) => write!(f, "imag {w} {k}"),
            Op::ToDbm => write!(f, "to-dbm"),
            Op::Dump => write!(f, "dump"),
        }
    }
}

fn arg<T: std::str::FromStr>(parts: &[&str], i: usize, line: usize) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let raw = parts.get(i).ok_or_else(|| anyhow!("line {line}: '{}' expects more arguments", parts[0]))?;
    raw.parse().with_context(|| format!("line {line}: bad argument '{raw}'"))
}

/// Parses a script; blank lines and `#` comments are skipped.
pub fn parse_script(text: &str) -> Result<Vec<Op>> {
    let mut ops = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        let expect = |n: usize| -> Result<()> {
            if parts.len() != n + 1 {
                bail!("line {line}: '{}' takes {n} argument(s)", parts[0]);
            }
            Ok(())
        };
        let op = match parts[0] {
            "qubits" => {
                expect(1)?;
                Op::Qubits(arg(&parts, 1, line)?)
            }
            "basis" => {
                expect(1)?;
                let bits = parts[1]
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(anyhow!("line {line}: basis expects a 0/1 string")),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Op::Basis(bits)
            }
            "hx" => {
                expect(1)?;
                Op::Hx(arg(&parts, 1, line)?)
            }
            "hy" => {
                expect(1)?;
                Op::Hy(arg(&parts, 1, line)?)
            }
            "hydag" => {
                expect(1)?;
                Op::HyDag(arg(&parts, 1, line)?)
            }
            "rz" => {
                expect(2)?;
                Op::Rz(arg(&parts, 1, line)?, arg(&parts, 2, line)?)
            }
            "rzz" => {
                expect(3)?;
                Op::Rzz(arg(&parts, 1, line)?, arg(&parts, 2, line)?, arg(&parts, 3, line)?)
            }
            "imag" => {
                expect(2)?;
                Op::Imag(parts[1].to_string(), arg(&parts, 2, line)?)
            }
            "to-dbm" => {
                expect(0)?;
                Op::ToDbm
            }
            "dump" => {
                expect(0)?;
                Op::Dump
            }
            other => bail!("line {line}: unknown op '{other}'"),
        };
        ops.push(op);
    }
    Ok(ops)
}

fn complex(re: f64, im: f64) -> Value {
    json!([re, im])
}

/// `|0...0⟩` on `n` qubits, the starting point of a script.
pub fn zero_state(n: usize) -> LdbmNetwork {
    LdbmNetwork::basis_state(&vec![false; n])
}

/// Final network plus anything `dump`/`to-dbm` reported along the way.
pub struct ScriptRun {
    pub net: LdbmNetwork,
    pub events: Vec<Value>,
}

/// Runs `ops` starting from `initial` (replaced by `qubits`/`basis` ops).
pub fn run_script(ops: &[Op], initial: Option<LdbmNetwork>) -> Result<ScriptRun> {
    let mut net = initial;
    let mut events = Vec::new();
    for op in ops {
        match op {
            Op::Qubits(n) => {
                net = Some(zero_state(*n));
                continue;
            }
            Op::Basis(bits) => {
                net = Some(LdbmNetwork::basis_state(bits));
                continue;
            }
            _ => {}
        }
        let cur = net.as_mut().ok_or_else(|| anyhow!("'{op}' before the network size is known"))?;
        let res = match op {
            Op::Hx(l) => cur.apply_hx(*l),
            Op::Hy(l) => cur.apply_hy(*l),
            Op::HyDag(l) => cur.apply_hy_dag(*l),
            Op::Rz(l, p) => cur.apply_rz(*l, *p),
            Op::Rzz(a, b, p) => cur.apply_rzz(*a, *b, *p),
            Op::Imag(w, k) => {
                let term = HamiltonianTerm::parse(1.0, w).with_context(|| format!("'{op}'"))?;
                cur.apply_term_imaginary(&term, *k)
            }
            Op::ToDbm => {
                let dbm = ldbm_to_dbm(cur).with_context(|| format!("'{op}'"))?;
                events.push(json!({
                    "op": "to-dbm",
                    "visible": dbm.n_visible(),
                    "hidden": dbm.n_hidden(),
                    "deep": dbm.n_deep(),
                }));
                *cur = dbm.to_ldbm();
                Ok(())
            }
            Op::Dump => {
                events.push(json!({ "op": "dump", "network": serde_json::to_value(&*cur)? }));
                Ok(())
            }
            Op::Qubits(_) | Op::Basis(_) => unreachable!(),
        };
        res.with_context(|| format!("'{op}'"))?;
    }
    let net = net.ok_or_else(|| anyhow!("script never sets the number of qubits"))?;
    Ok(ScriptRun { net, events })
}

/// Normalized statevector, unit counts and events as one JSON document.
pub fn report(run: &ScriptRun) -> Result<Value> {
    let ns = run.net.statevector()?;
    let amps: Vec<Value> = ns.state.amplitudes().iter().map(|a| complex(a.re, a.im)).collect();
    let ln = run.net.log_norm();
    Ok(json!({
        "visible": run.net.n_visible(),
        "hidden": run.net.n_hidden(),
        "laterals": run.net.laterals().len(),
        "real": run.net.is_real(),
        "log_norm": complex(ln.re, ln.im),
        "state_log_norm": ns.log_norm,
        "statevector": amps,
        "events": run.events,
    }))
}
