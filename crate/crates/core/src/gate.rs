//! Gate-level intermediate representation.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::pauli::PauliString;

/// One instruction of a [`crate::circuit::Circuit`].
///
/// `PauliRotation { angle, string }` is `exp(-i (angle / 2) P)`, so a
/// rotation labelled `R(2W)` carries `angle = 2W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", content = "args")]
pub enum Gate {
    Hx(usize),
    Hy(usize),
    HyDag(usize),
    CX { control: usize, target: usize },
    PauliRotation { angle: f64, string: PauliString },
    Measure { qubit: usize, bit: usize },
    PostSelect { bit: usize, value: u8 },
    Reset(usize),
}

impl Gate {
    /// Qubits touched by the gate (empty for classical-only instructions).
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Hx(q) | Gate::Hy(q) | Gate::HyDag(q) | Gate::Reset(q) => vec![*q],
            Gate::CX { control, target } => vec![*control, *target],
            Gate::PauliRotation { string, .. } => string.support(),
            Gate::Measure { qubit, .. } => vec![*qubit],
            Gate::PostSelect { .. } => vec![],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Hx(_) => "hx",
            Gate::Hy(_) => "hy",
            Gate::HyDag(_) => "hydag",
            Gate::CX { .. } => "cx",
            Gate::PauliRotation { .. } => "pauli_rotation",
            Gate::Measure { .. } => "measure",
            Gate::PostSelect { .. } => "postselect",
            Gate::Reset(_) => "reset",
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Gate::Measure { .. } | Gate::PostSelect { .. } | Gate::Reset(_))
    }
}

/// Hadamard, `(1/√2)[[1, 1], [1, -1]]`.
pub fn hx_matrix() -> [[Complex64; 2]; 2] {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

/// `(1/√2)[[-i, i], [1, 1]]`, the rotation with `σ^y = H^y σ^z H^y†`.
pub fn hy_matrix() -> [[Complex64; 2]; 2] {
    let s = FRAC_1_SQRT_2;
    [
        [Complex64::new(0.0, -s), Complex64::new(0.0, s)],
        [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
    ]
}

pub fn hy_dag_matrix() -> [[Complex64; 2]; 2] {
    let m = hy_matrix();
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliOp;

    fn mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    }

    fn max_diff(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((a[i][j] - b[i][j]).norm());
            }
        }
        d
    }

    #[test]
    fn rotation_identities() {
        let z = PauliOp::Z.matrix();
        let x = mul(mul(hx_matrix(), z), hx_matrix());
        assert!(max_diff(x, PauliOp::X.matrix()) < 1e-14);
        let y = mul(mul(hy_matrix(), z), hy_dag_matrix());
        assert!(max_diff(y, PauliOp::Y.matrix()) < 1e-14);
        let id = mul(hy_matrix(), hy_dag_matrix());
        assert!(max_diff(id, PauliOp::I.matrix()) < 1e-14);
    }

    #[test]
    fn json_shape() {
        let g = Gate::PauliRotation { angle: 0.5, string: "ZIX".parse().unwrap() };
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"gate":"PauliRotation","args":{"angle":0.5,"string":"ZIX"}}"#);
        assert_eq!(serde_json::to_string(&Gate::Hx(2)).unwrap(), r#"{"gate":"Hx","args":2}"#);
        let back: Gate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
