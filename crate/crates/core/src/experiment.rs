//! End-to-end imaginary-time runs producing CSV rows.

use std::f64::consts::LN_10;
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_qite_circuit, step_plan, trotter_step, AncillaPolicy, CircuitOptions, Route};
use crate::error::{Error, Result};
use crate::pauli::Hamiltonian;
use crate::sim::{
    expectation, imaginary_time_oracle, low_spectrum, measurement_groups, run_batches, run_exact, sample_value,
    term_expectations, trotterized_oracle, InitialState, StateVector,
};
use crate::stats::{jackknife, ratio_estimator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Shots,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "shots" => Ok(Mode::Shots),
            _ => Err(Error::invalid(format!("unknown mode '{s}' (expected exact or shots)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub hamiltonian: Hamiltonian,
    /// Checkpoints, ascending.
    pub taus: Vec<f64>,
    pub dtau: f64,
    pub circuit: CircuitOptions,
    pub shots: usize,
    pub batches: usize,
    pub seed: u64,
    pub init: InitialState,
    pub mode: Mode,
}

impl RunConfig {
    /// Settings of the three-site transverse-field Ising study.
    pub fn ising_demo(paper_scale: bool) -> Self {
        RunConfig {
            hamiltonian: Hamiltonian::tfim_ring3(),
            taus: (0..=20).map(|k| k as f64 * 0.05).collect(),
            dtau: 0.01,
            circuit: CircuitOptions { route: Route::Rbm, ancilla: AncillaPolicy::Single, order: 2 },
            shots: if paper_scale { 1_000_000 } else { 100_000 },
            batches: 100,
            seed: 2024,
            init: InitialState::Plus,
            mode: Mode::Shots,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(Error::invalid("at least one tau checkpoint is required"));
        }
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::invalid("dtau must be positive"));
        }
        for w in self.taus.windows(2) {
            if w[1] < w[0] {
                return Err(Error::invalid("tau checkpoints must be ascending"));
            }
        }
        for &t in &self.taus {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("tau {t} must be finite and non-negative")));
            }
            let r = t / self.dtau;
            if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::invalid(format!("tau {t} is not a multiple of dtau {}", self.dtau)));
            }
        }
        if self.circuit.order != 1 && self.circuit.order != 2 {
            return Err(Error::invalid("order must be 1 or 2"));
        }
        if self.mode == Mode::Shots {
            if self.batches < 2 {
                return Err(Error::TooFewBatches(self.batches));
            }
            if self.shots % self.batches != 0 {
                return Err(Error::invalid(format!("shots {} not divisible by batches {}", self.shots, self.batches)));
            }
            let groups = measurement_groups(&self.hamiltonian).len().max(1);
            if self.shots / self.batches / groups == 0 {
                return Err(Error::invalid("too few shots for the measurement groups and batches"));
            }
        }
        self.init.build(self.hamiltonian.n_qubits())?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub tau: f64,
    pub e_mean: f64,
    pub e_err: f64,
    /// Energy carried by the Z-only terms.
    pub zz_mean: f64,
    pub zz_err: f64,
    /// Energy carried by all other terms.
    pub x_mean: f64,
    pub x_err: f64,
    pub acceptance: f64,
    pub acceptance_model: f64,
    pub effective_samples: usize,
    /// Exact mode only: energy of the exact and of the Trotterized propagator.
    pub e_exact: Option<f64>,
    pub e_trotter: Option<f64>,
}

pub const CSV_HEADER: &str = "tau,E_mean,E_err,ZZ_mean,ZZ_err,X_mean,X_err,acceptance,acceptance_model,effective_samples";

pub fn csv_header(mode: Mode) -> String {
    match mode {
        Mode::Shots => CSV_HEADER.to_string(),
        Mode::Exact => format!("{CSV_HEADER},E_exact,E_trotter"),
    }
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

impl Row {
    pub fn to_csv(&self) -> String {
        let mut s = [
            num(self.tau),
            num(self.e_mean),
            num(self.e_err),
            num(self.zz_mean),
            num(self.zz_err),
            num(self.x_mean),
            num(self.x_err),
            num(self.acceptance),
            num(self.acceptance_model),
            self.effective_samples.to_string(),
        ]
        .join(",");
        if let (Some(a), Some(b)) = (self.e_exact, self.e_trotter) {
            let _ = write!(s, ",{},{}", num(a), num(b));
        }
        s
    }
}

fn split_energy(h: &Hamiltonian, psi: &StateVector) -> (f64, f64) {
    let vals = term_expectations(psi, h.terms());
    let mut zz = 0.0;
    let mut x = 0.0;
    for (t, v) in h.terms().iter().zip(vals) {
        if t.string.is_diagonal() {
            zz += t.coefficient * v;
        } else {
            x += t.coefficient * v;
        }
    }
    (zz, x)
}

/// Runs every checkpoint, handing each row to `sink` as soon as it exists.
pub fn evolve_with(cfg: &RunConfig, mut sink: impl FnMut(&Row) -> Result<()>) -> Result<Vec<Row>> {
    cfg.validate()?;
    let psi0 = cfg.init.build(cfg.hamiltonian.n_qubits())?;
    let mut rows = Vec::with_capacity(cfg.taus.len());
    match cfg.mode {
        Mode::Exact => {
            let step = trotter_step(&cfg.hamiltonian, cfg.dtau, &cfg.circuit)?;
            let mut psi = psi0.clone();
            let mut done = 0usize;
            let mut log_success = 0.0;
            let mut model = 0.0;
            for &tau in &cfg.taus {
                let (steps, _) = step_plan(tau, cfg.dtau)?;
                while done < steps {
                    let r = run_exact(&step, &psi)?;
                    psi = r.state;
                    log_success += r.log_success;
                    model += step.model_log_success;
                    done += 1;
                }
                let (zz, x) = split_energy(&cfg.hamiltonian, &psi);
                let exact = imaginary_time_oracle(&cfg.hamiltonian, tau, &psi0)?;
                let trot = trotterized_oracle(&cfg.hamiltonian, tau, cfg.dtau, cfg.circuit.order, &psi0)?;
                let row = Row {
                    tau,
                    e_mean: expectation(&psi, &cfg.hamiltonian)?,
                    e_err: 0.0,
                    zz_mean: zz,
                    zz_err: 0.0,
                    x_mean: x,
                    x_err: 0.0,
                    acceptance: log_success.exp(),
                    acceptance_model: model.exp(),
                    effective_samples: 0,
                    e_exact: Some(expectation(&exact, &cfg.hamiltonian)?),
                    e_trotter: Some(expectation(&trot, &cfg.hamiltonian)?),
                };
                sink(&row)?;
                rows.push(row);
            }
        }
        Mode::Shots => {
            for (ci, &tau) in cfg.taus.iter().enumerate() {
                let row = shots_row(cfg, &psi0, tau, ci)?;
                sink(&row)?;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn evolve(cfg: &RunConfig) -> Result<Vec<Row>> {
    evolve_with(cfg, |_| Ok(()))
}

/// Base seed of one (checkpoint, measurement group) stream.
fn derived_seed(seed: u64, checkpoint: usize, group: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((checkpoint as u64) << 16) | group as u64);
    rng.next_u64()
}

fn shots_row(cfg: &RunConfig, psi0: &StateVector, tau: f64, checkpoint: usize) -> Result<Row> {
    let h = &cfg.hamiltonian;
    let n = h.n_qubits();
    let circuit = build_qite_circuit(h, tau, cfg.dtau, &cfg.circuit)?;
    let groups = measurement_groups(h);
    let per_batch = cfg.shots / cfg.batches / groups.len().max(1);
    let constant: f64 = h.terms().iter().filter(|t| t.string.is_identity()).map(|t| t.coefficient).sum();

    // groups use disjoint shots, so their estimates are independent and
    // their errors add in quadrature
    let mut zz = (0.0, 0.0);
    let mut x = (0.0, 0.0);
    let mut e = (constant, 0.0);
    let mut accepted_total = 0usize;
    let mut shots_total = 0usize;
    for (gi, (basis, idx)) in groups.iter().enumerate() {
        let batches = run_batches(&circuit, psi0, per_batch, cfg.batches, derived_seed(cfg.seed, checkpoint, gi), basis)?;
        let counts: Vec<usize> = batches.iter().map(|b| b.accepted()).collect();
        accepted_total += counts.iter().sum::<usize>();
        shots_total += batches.iter().map(|b| b.shots).sum::<usize>();
        let sums = |diagonal: Option<bool>| -> Vec<f64> {
            batches
                .iter()
                .map(|b| {
                    idx.iter()
                        .map(|&ti| &h.terms()[ti])
                        .filter(|t| diagonal.is_none_or(|d| t.string.is_diagonal() == d))
                        .map(|t| t.coefficient * b.samples.iter().map(|&s| sample_value(s, n, &t.string)).sum::<f64>())
                        .sum()
                })
                .collect()
        };
        for (acc, part) in [(&mut zz, Some(true)), (&mut x, Some(false)), (&mut e, None)] {
            let est = jackknife(&ratio_estimator(&sums(part), &counts)?.values)?;
            acc.0 += est.mean;
            acc.1 += est.std_error.powi(2);
        }
    }
    let (ej, zj, xj) = (
        (e.0, e.1.sqrt()),
        (zz.0, zz.1.sqrt()),
        (x.0, x.1.sqrt()),
    );
    Ok(Row {
        tau,
        e_mean: ej.0,
        e_err: ej.1,
        zz_mean: zj.0,
        zz_err: zj.1,
        x_mean: xj.0,
        x_err: xj.1,
        acceptance: accepted_total as f64 / shots_total.max(1) as f64,
        acceptance_model: circuit.model_success(),
        effective_samples: accepted_total,
        e_exact: None,
        e_trotter: None,
    })
}

/// `λ` in `P(τ) = 10^{-λτ}` by least squares through the origin over rows
/// with `τ > 0` and nonzero acceptance.
pub fn fit_lambda(rows: &[Row]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.tau > 0.0 && r.acceptance > 0.0).map(|r| (r.tau, r.acceptance.log10())).collect();
    if pts.is_empty() {
        return None;
    }
    let num: f64 = pts.iter().map(|(t, y)| t * y).sum();
    let den: f64 = pts.iter().map(|(t, _)| t * t).sum();
    Some(-num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub ground_energy: f64,
    pub spectral_gap: f64,
    pub lambda_fit: Option<f64>,
    pub lambda_reference: f64,
    pub final_tau: f64,
    pub final_energy: f64,
    pub final_energy_err: f64,
    pub final_acceptance: f64,
    pub final_acceptance_model: f64,
    pub shots: usize,
    pub batches: usize,
    pub seed: u64,
}

pub fn summarize(cfg: &RunConfig, rows: &[Row]) -> Result<DemoSummary> {
    let (e0, e1) = low_spectrum(&cfg.hamiltonian)?;
    let last = rows.last().ok_or_else(|| Error::invalid("no rows"))?;
    Ok(DemoSummary {
        ground_energy: e0,
        spectral_gap: e1 - e0,
        lambda_fit: fit_lambda(rows),
        lambda_reference: LN_10,
        final_tau: last.tau,
        final_energy: last.e_mean,
        final_energy_err: last.e_err,
        final_acceptance: last.acceptance,
        final_acceptance_model: last.acceptance_model,
        shots: cfg.shots,
        batches: cfg.batches,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_cfg(taus: Vec<f64>) -> RunConfig {
        RunConfig { mode: Mode::Exact, taus, ..RunConfig::ising_demo(false) }
    }

    #[test]
    fn tau_zero_row() {
        let rows = evolve(&exact_cfg(vec![0.0])).unwrap();
        assert!((rows[0].e_mean + 3.0).abs() < 1e-12);
        assert_eq!(rows[0].acceptance, 1.0);
        assert_eq!(rows[0].acceptance_model, 1.0);
    }

    #[test]
    fn validation() {
        let mut c = exact_cfg(vec![0.015]);
        assert!(c.validate().is_err());
        c.taus = vec![0.5, 0.1];
        assert!(c.validate().is_err());
        let mut s = RunConfig::ising_demo(false);
        s.shots = 1001;
        assert!(s.validate().is_err());
        s.shots = 1000;
        s.batches = 1;
        assert_eq!(s.validate().unwrap_err(), Error::TooFewBatches(1));
    }

    #[test]
    fn csv_format() {
        let rows = evolve(&exact_cfg(vec![0.0])).unwrap();
        let line = rows[0].to_csv();
        assert_eq!(line.split(',').count(), 12);
        assert!(line.starts_with("0.00000000000e0,-3.00000000000e0,"));
        assert_eq!(csv_header(Mode::Shots).split(',').count(), 10);
    }

    #[test]
    fn lambda_fit_recovers_slope() {
        let rows: Vec<Row> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&t| Row {
                tau: t,
                e_mean: 0.0,
                e_err: 0.0,
                zz_mean: 0.0,
                zz_err: 0.0,
                x_mean: 0.0,
                x_err: 0.0,
                acceptance: 10f64.powf(-2.0 * t),
                acceptance_model: 0.0,
                effective_samples: 0,
                e_exact: None,
                e_trotter: None,
            })
            .collect();
        assert!((fit_lambda(&rows).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_shots_run_is_deterministic() {
        let cfg = RunConfig { taus: vec![0.0, 0.1], shots: 2000, batches: 10, ..RunConfig::ising_demo(false) };
        let a = evolve(&cfg).unwrap();
        let b = evolve(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].acceptance, 1.0);
        assert_eq!(a[0].effective_samples, 2000);
    }
}
