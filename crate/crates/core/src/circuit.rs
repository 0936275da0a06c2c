//! Checkerboard random circuits.
//!
//! Each layer is one sublayer of gates on `(0,1), (2,3), ...` followed by one
//! on `(1,2), (3,4), ...`, so a circuit with `k` layers on an open chain of
//! `n` qubits holds `k (n - 1)` gates when `n` is odd. Gates are Haar random
//! two-qubit unitaries drawn in circuit order from a single seeded stream,
//! which makes a shallower circuit a prefix of a deeper one with the same
//! seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, haar_unitary_from_gaussian};
use crate::tensor::{ComplexTensor, C64};

/// Gate unitarity tolerance, enforced on construction and on load.
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

/// A two-qubit gate. `matrix[(a, b), (c, d)]` maps input `(c, d)` on
/// `(pair.0, pair.1)` to output `(a, b)`; as a rank-4 tensor its axes are
/// `(out_q, out_q+1, in_q, in_q+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub pair: (usize, usize),
    pub matrix: ComplexTensor,
}

impl Gate {
    pub fn new(pair: (usize, usize), matrix: ComplexTensor) -> Result<Self> {
        if matrix.shape() != [4, 4] {
            return Err(Error::Shape(format!("two-qubit gate has shape {:?}", matrix.shape())));
        }
        let deviation = unitarity_defect(&matrix)?;
        if !(deviation <= UNITARITY_TOLERANCE) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Gate { pair, matrix })
    }

    pub fn as_tensor(&self) -> ComplexTensor {
        self.matrix.reshape(&[2, 2, 2, 2]).expect("4x4")
    }
}

/// `max |U† U - I|`.
pub fn unitarity_defect(u: &ComplexTensor) -> Result<f64> {
    u.col_isometry_defect()
}

/// Haar-random 4x4 unitary from i.i.d. complex Gaussian entries, QR, and
/// the diagonal phase fix.
pub fn random_two_qubit_gate(pair: (usize, usize), rng: &mut impl Rng) -> Gate {
    let g = gaussian_matrix(4, 4, rng);
    let matrix = haar_unitary_from_gaussian(&g).expect("4x4 Gaussian");
    Gate { pair, matrix }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub gates: Vec<Gate>,
}

/// Pairs of one checkerboard layer, in application order.
pub fn checkerboard_pairs(n: usize) -> Vec<(usize, usize)> {
    let even = (0..n.saturating_sub(1)).step_by(2);
    let odd = (1..n.saturating_sub(1)).step_by(2);
    even.chain(odd).map(|q| (q, q + 1)).collect()
}

pub fn checkerboard_circuit(n: usize, k: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Config(format!("checkerboard circuit needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layer = checkerboard_pairs(n);
    let gates = (0..k)
        .flat_map(|_| layer.iter().copied())
        .map(|pair| random_two_qubit_gate(pair, &mut rng))
        .collect();
    Ok(Circuit { n, k, seed, gates })
}

impl Circuit {
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Checks adjacency, range, sublayer disjointness and unitarity.
    pub fn validate(&self) -> Result<()> {
        for (i, g) in self.gates.iter().enumerate() {
            let (a, b) = g.pair;
            if b != a + 1 || b >= self.n {
                return Err(Error::Qubits(format!("gate {i} acts on ({a}, {b}) in {} qubits", self.n)));
            }
            let deviation = unitarity_defect(&g.matrix)?;
            if !(deviation <= UNITARITY_TOLERANCE) {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(())
    }

    /// Consecutive runs of gates that share no qubit.
    pub fn sublayers(&self) -> Vec<&[Gate]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.gates.len() {
            let split = i == self.gates.len() || {
                let (a, b) = self.gates[i].pair;
                self.gates[start..i].iter().any(|g| [g.pair.0, g.pair.1].iter().any(|q| *q == a || *q == b))
            };
            if split {
                out.push(&self.gates[start..i]);
                start = i;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CircuitRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: CircuitRecord = serde_json::from_str(s)?;
        rec.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    pair: [usize; 2],
    matrix: Vec<Vec<[f64; 2]>>,
}

/// `{n, k, seed, gates: [{pair: [q, q+1], matrix: 4x4 of [re, im]}]}`.
#[derive(Serialize, Deserialize)]
struct CircuitRecord {
    n: usize,
    k: usize,
    seed: u64,
    gates: Vec<GateRecord>,
}

impl From<&Circuit> for CircuitRecord {
    fn from(c: &Circuit) -> Self {
        CircuitRecord {
            n: c.n,
            k: c.k,
            seed: c.seed,
            gates: c
                .gates
                .iter()
                .map(|g| GateRecord {
                    pair: [g.pair.0, g.pair.1],
                    matrix: (0..4)
                        .map(|r| (0..4).map(|c| [g.matrix.at(r, c).re, g.matrix.at(r, c).im]).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(rec: CircuitRecord) -> Result<Self> {
        let gates = rec
            .gates
            .into_iter()
            .map(|g| {
                if g.matrix.len() != 4 || g.matrix.iter().any(|row| row.len() != 4) {
                    return Err(Error::Format("gate matrix must be 4x4".into()));
                }
                let data = g.matrix.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
                Gate::new((g.pair[0], g.pair[1]), ComplexTensor::from_vec(vec![4, 4], data)?)
            })
            .collect::<Result<_>>()?;
        let c = Circuit {
            n: rec.n,
            k: rec.k,
            seed: rec.seed,
            gates,
        };
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::determinant;

    #[test]
    fn layout_small() {
        let c = checkerboard_circuit(4, 1, 0).unwrap();
        let pairs: Vec<_> = c.gates.iter().map(|g| g.pair).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (1, 2)]);
    }

    #[test]
    fn gate_count_for_27_qubits() {
        let c = checkerboard_circuit(27, 1, 0).unwrap();
        assert_eq!(c.gate_count(), 26);
        assert_eq!(c.sublayers().len(), 2);
        assert_eq!(checkerboard_circuit(9, 3, 0).unwrap().gate_count(), 24);
    }

    #[test]
    fn gates_are_unitary() {
        let c = checkerboard_circuit(9, 2, 1).unwrap();
        for g in &c.gates {
            assert!(unitarity_defect(&g.matrix).unwrap() < 1e-12);
            assert!((determinant(&g.matrix).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sublayers_are_disjoint() {
        let c = checkerboard_circuit(9, 3, 2).unwrap();
        let subs = c.sublayers();
        assert_eq!(subs.len(), 6);
        for s in subs {
            let mut seen = vec![false; 9];
            for g in s {
                for q in [g.pair.0, g.pair.1] {
                    assert!(!seen[q]);
                    seen[q] = true;
                }
            }
        }
    }

    #[test]
    fn deeper_circuit_extends_shallower() {
        let a = checkerboard_circuit(9, 1, 7).unwrap();
        let b = checkerboard_circuit(9, 2, 7).unwrap();
        assert_eq!(&b.gates[..a.gates.len()], &a.gates[..]);
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = checkerboard_circuit(9, 2, 3).unwrap().to_json().unwrap();
        let b = checkerboard_circuit(9, 2, 3).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let back = Circuit::from_json(&a).unwrap();
        assert_eq!(back, checkerboard_circuit(9, 2, 3).unwrap());
        assert_eq!(back.to_json().unwrap(), a);
    }

    #[test]
    fn tampered_matrix_is_rejected() {
        let c = checkerboard_circuit(3, 1, 4).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        let x = v["gates"][0]["matrix"][1][2][0].as_f64().unwrap();
        v["gates"][0]["matrix"][1][2][0] = serde_json::json!(x + 1e-6);
        assert!(matches!(Circuit::from_json(&v.to_string()), Err(Error::NotUnitary { .. })));
        assert!(Circuit::from_json("{\"n\": 3}").is_err());
    }

    #[test]
    fn empty_circuit_is_valid() {
        let c = checkerboard_circuit(2, 0, 0).unwrap();
        assert!(c.gates.is_empty());
        let back = Circuit::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(checkerboard_circuit(1, 1, 0).is_err());
    }
}
