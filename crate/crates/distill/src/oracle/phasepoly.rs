//! Exact operator algebra for diagonal-times-X operators.
//!
//! Every operator appearing in the non-Abelian stabilizer identities — Pauli
//! products, S, S-dagger, T, controlled-Z products, CCZ — has the form
//!
//! ```text
//!     U = w^g * D * X(m),      w = exp(i*pi/4)
//! ```
//!
//! where `D = diag(w^phase[x])` with eighth-root exponents in Z_8 and `X(m)`
//! flips the qubits in the mask `m`. Products of such operators stay in the
//! form, and all arithmetic is integer arithmetic mod 8, so identities are
//! checked exactly rather than to floating-point tolerance.

use num_complex::Complex64;
use thiserror::Error;

use crate::gf2::BitVec;

#[derive(Debug, Error)]
pub enum PhasePolyError {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// `w^global * diag(w^phase[x]) * X(x_mask)` on `n` qubits, `w = exp(i*pi/4)`.
#[derive(Clone, PartialEq, Eq)]
pub struct PhasePolyOperator {
    n: usize,
    x_mask: u64,
    global: u8,
    phase: Vec<u8>,
}

impl PhasePolyOperator {
    pub fn identity(n: usize) -> Self {
        assert!(n <= 20, "operator tables above 20 qubits are impractical");
        PhasePolyOperator {
            n,
            x_mask: 0,
            global: 0,
            phase: vec![0; 1 << n],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    /// Diagonal operator with `phase[x] = k * popcount(x & mask) mod 8`.
    /// `k = 1` gives a T product, `2` an S product, `4` a Z product,
    /// `7` a T-dagger product, `6` an S-dagger product.
    fn diag_weighted(n: usize, mask: u64, k: u8) -> Self {
        let mut op = Self::identity(n);
        for (x, p) in op.phase.iter_mut().enumerate() {
            *p = (k as u32 * (x as u64 & mask).count_ones()) as u8 % 8;
        }
        op
    }

    pub fn t_product(n: usize, mask: u64) -> Self {
        Self::diag_weighted(n, mask, 1)
    }

    pub fn s_product(n: usize, mask: u64) -> Self {
        Self::diag_weighted(n, mask, 2)
    }

    pub fn s_dagger_product(n: usize, mask: u64) -> Self {
        Self::diag_weighted(n, mask, 6)
    }

    pub fn t_dagger_product(n: usize, mask: u64) -> Self {
        Self::diag_weighted(n, mask, 7)
    }

    pub fn z_product(n: usize, mask: u64) -> Self {
        Self::diag_weighted(n, mask, 4)
    }

    pub fn x_product(n: usize, mask: u64) -> Self {
        let mut op = Self::identity(n);
        op.x_mask = mask;
        op
    }

    /// `-1` times the identity.
    pub fn minus_one(n: usize) -> Self {
        let mut op = Self::identity(n);
        op.global = 4;
        op
    }

    pub fn controlled_z(n: usize, a: usize, b: usize) -> Self {
        let mut op = Self::identity(n);
        for (x, p) in op.phase.iter_mut().enumerate() {
            if x >> a & 1 == 1 && x >> b & 1 == 1 {
                *p = 4;
            }
        }
        op
    }

    pub fn ccz(n: usize, a: usize, b: usize, c: usize) -> Self {
        let mut op = Self::identity(n);
        for (x, p) in op.phase.iter_mut().enumerate() {
            if x >> a & 1 == 1 && x >> b & 1 == 1 && x >> c & 1 == 1 {
                *p = 4;
            }
        }
        op
    }

    /// Z-type Pauli product over a support vector, honoring the sign.
    pub fn pauli_z(n: usize, support: &BitVec, negated: bool) -> Self {
        let mut op = Self::diag_weighted(n, support.as_u64(), 4);
        if negated {
            op.global = 4;
        }
        op
    }

    /// Operator product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &PhasePolyOperator) -> Result<PhasePolyOperator, PhasePolyError> {
        if self.n != rhs.n {
            return Err(PhasePolyError::DimensionMismatch(self.n, rhs.n));
        }
        let mut phase = vec![0u8; 1 << self.n];
        for (y, p) in phase.iter_mut().enumerate() {
            *p = (self.phase[y] + rhs.phase[y ^ self.x_mask as usize]) % 8;
        }
        Ok(PhasePolyOperator {
            n: self.n,
            x_mask: self.x_mask ^ rhs.x_mask,
            global: (self.global + rhs.global) % 8,
            phase,
        })
    }

    /// Folds the global phase into the table. Two operators are equal iff
    /// their normalized forms are identical.
    pub fn normalized(&self) -> PhasePolyOperator {
        let mut op = self.clone();
        for p in op.phase.iter_mut() {
            *p = (*p + op.global) % 8;
        }
        op.global = 0;
        op
    }

    /// If `self = w^k * other`, returns `Some(k)`.
    pub fn phase_relative_to(&self, other: &PhasePolyOperator) -> Option<u8> {
        if self.n != other.n || self.x_mask != other.x_mask {
            return None;
        }
        let a = self.normalized();
        let b = other.normalized();
        let k = (a.phase[0] + 8 - b.phase[0]) % 8;
        for (pa, pb) in a.phase.iter().zip(&b.phase) {
            if (*pb + k) % 8 != *pa {
                return None;
            }
        }
        Some(k)
    }

    /// Action on a dense state: `psi'[x ^ m] = w^(g + phase[x ^ m... ]) psi[x]`.
    pub fn apply(&self, amps: &mut [Complex64]) {
        assert_eq!(amps.len(), 1 << self.n);
        let omega: [Complex64; 8] = std::array::from_fn(|k| {
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * k as f64)
        });
        let m = self.x_mask as usize;
        if m != 0 {
            // X part first: psi[x] moves to x ^ m.
            for x in 0..amps.len() {
                let y = x ^ m;
                if x < y {
                    amps.swap(x, y);
                }
            }
        }
        for (x, a) in amps.iter_mut().enumerate() {
            *a *= omega[(self.global + self.phase[x]) as usize % 8];
        }
    }
}

impl std::fmt::Debug for PhasePolyOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "PhasePolyOperator(n={}, x_mask={:#x}, global={})",
            self.n, self.x_mask, self.global
        )
    }
}

/// One verified commutation identity.
#[derive(Clone, Debug)]
pub struct RelationCheck {
    pub name: &'static str,
    /// Global phase of lhs relative to rhs, when they match up to phase.
    pub phase: Option<u8>,
}

impl RelationCheck {
    pub fn pass(&self) -> bool {
        self.phase.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct RelationReport {
    pub checks: Vec<RelationCheck>,
}

impl RelationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(RelationCheck::pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationSet {
    T15,
    Ccz,
}

fn chain(ops: &[&PhasePolyOperator]) -> PhasePolyOperator {
    let mut acc = ops[0].clone();
    for op in &ops[1..] {
        acc = acc.compose(op).unwrap();
    }
    acc
}

/// Builds both sides of every listed commutation identity for the expanded
/// non-Abelian stabilizer group and compares them exactly.
pub fn verify_relations(set: RelationSet) -> RelationReport {
    use crate::codes::pattern_support;
    let mut checks = Vec::new();
    match set {
        RelationSet::T15 => {
            let n = 16;
            let sup = |p: &str| pattern_support(n, 4, p).as_u64();
            let x1 = PhasePolyOperator::x_product(n, sup("1***"));
            let s1 = PhasePolyOperator::s_product(n, sup("1***"));
            let s2 = PhasePolyOperator::s_product(n, sup("*1**"));
            let z1 = PhasePolyOperator::z_product(n, sup("1***"));
            let z11 = PhasePolyOperator::z_product(n, sup("11**"));
            let t_all = PhasePolyOperator::t_product(n, sup("****"));
            let s1_dag = PhasePolyOperator::s_dagger_product(n, sup("1***"));
            checks.push(RelationCheck {
                name: "X[1***] S[1***] = S[1***] Z[1***] X[1***]",
                phase: chain(&[&x1, &s1]).phase_relative_to(&chain(&[&s1, &z1, &x1])),
            });
            checks.push(RelationCheck {
                name: "X[1***] S[*1**] = S[*1**] Z[11**] X[1***]",
                phase: chain(&[&x1, &s2]).phase_relative_to(&chain(&[&s2, &z11, &x1])),
            });
            checks.push(RelationCheck {
                name: "X[1***] T[****] = T[****] S^[1***] X[1***]",
                phase: chain(&[&x1, &t_all]).phase_relative_to(&chain(&[&t_all, &s1_dag, &x1])),
            });
        }
        RelationSet::Ccz => {
            let n = 11;
            let sup = |p: &str| pattern_support(n, 3, p).as_u64();
            let bit = |q: usize| 1u64 << q;
            let neg = PhasePolyOperator::minus_one(n);
            // Group generators.
            let t_ccz = chain(&[
                &PhasePolyOperator::t_product(n, sup("***")),
                &PhasePolyOperator::ccz(n, 8, 9, 10),
            ]);
            let g1 = chain(&[
                &neg,
                &PhasePolyOperator::s_product(n, sup("0**")),
                &PhasePolyOperator::controlled_z(n, 9, 10),
            ]);
            // Measurement-side operators.
            let x_star0star_x9 = PhasePolyOperator::x_product(n, sup("*0*") | bit(9));
            let x_0_x8 = PhasePolyOperator::x_product(n, sup("0**") | bit(8));
            let x_all = PhasePolyOperator::x_product(n, sup("***"));
            let z10_z00 = chain(&[
                &neg,
                &PhasePolyOperator::z_product(n, bit(10)),
                &PhasePolyOperator::z_product(n, sup("00*")),
            ]);
            let z_0 = PhasePolyOperator::z_product(n, sup("0**"));
            let sdg_0_c9z10 = chain(&[
                &neg,
                &PhasePolyOperator::s_dagger_product(n, sup("0**")),
                &PhasePolyOperator::controlled_z(n, 9, 10),
            ]);
            let sdg_all = PhasePolyOperator::s_dagger_product(n, sup("***"));
            checks.push(RelationCheck {
                name: "X[*0*] X9 (-S[0**] C9 Z10) = (-S[0**] C9 Z10)(-Z10 Z[00*]) X[*0*] X9",
                phase: chain(&[&x_star0star_x9, &g1]).phase_relative_to(&chain(&[
                    &g1,
                    &z10_z00,
                    &x_star0star_x9,
                ])),
            });
            checks.push(RelationCheck {
                name: "X[0**] X8 (-S[0**] C9 Z10) = (-S[0**] C9 Z10) Z[0**] X[0**] X8",
                phase: chain(&[&x_0_x8, &g1]).phase_relative_to(&chain(&[&g1, &z_0, &x_0_x8])),
            });
            checks.push(RelationCheck {
                name: "X[***] (-S[0**] C9 Z10) = (-S[0**] C9 Z10) Z[0**] X[***]",
                phase: chain(&[&x_all, &g1]).phase_relative_to(&chain(&[&g1, &z_0, &x_all])),
            });
            checks.push(RelationCheck {
                name: "X[0**] X8 T[***] C8 C9 Z10 = T[***] C8 C9 Z10 (-S^[0**] C9 Z10) X[0**] X8",
                phase: chain(&[&x_0_x8, &t_ccz]).phase_relative_to(&chain(&[
                    &t_ccz,
                    &sdg_0_c9z10,
                    &x_0_x8,
                ])),
            });
            checks.push(RelationCheck {
                name: "X[***] T[***] C8 C9 Z10 = T[***] C8 C9 Z10 S^[***] X[***]",
                phase: chain(&[&x_all, &t_ccz])
                    .phase_relative_to(&chain(&[&t_ccz, &sdg_all, &x_all])),
            });
        }
    }
    RelationReport { checks }
}
