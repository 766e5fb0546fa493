//! Dense state-vector backend for the brute-force oracle.
//!
//! Tiles are qubits and tile `q` is bit `q` of the amplitude index. The
//! largest state used is 16 qubits (65536 amplitudes), so everything is a
//! straight pass over the amplitude array.

use num_complex::Complex64;
use thiserror::Error;

use crate::gf2::BitVec;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("projection onto the requested outcome has zero probability")]
    NullProjection,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|+>` on every tile.
    pub fn all_plus(n: usize) -> Self {
        assert!(n <= 16, "state vectors above 16 qubits are out of scope");
        let amp = Complex64::new((1.0 / (1u64 << n) as f64).sqrt(), 0.0);
        StateVector {
            n,
            amps: vec![amp; 1 << n],
        }
    }

    /// `|+>` on output tiles and `|T> = T|+>` on the tiles in `t_mask`.
    pub fn magic_inputs(n: usize, t_mask: u64) -> Self {
        let mut s = Self::all_plus(n);
        s.apply_t_product(t_mask);
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.n, other.n);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn apply_diag_weighted(&mut self, mask: u64, k: u8) {
        let omega: [Complex64; 8] = std::array::from_fn(|j| {
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * j as f64)
        });
        for (x, a) in self.amps.iter_mut().enumerate() {
            let w = (k as u32 * (x as u64 & mask).count_ones()) % 8;
            *a *= omega[w as usize];
        }
    }

    pub fn apply_t_product(&mut self, mask: u64) {
        self.apply_diag_weighted(mask, 1);
    }

    pub fn apply_s_product(&mut self, mask: u64) {
        self.apply_diag_weighted(mask, 2);
    }

    pub fn apply_s_dagger_product(&mut self, mask: u64) {
        self.apply_diag_weighted(mask, 6);
    }

    pub fn apply_z_product(&mut self, mask: u64) {
        self.apply_diag_weighted(mask, 4);
    }

    pub fn apply_x_product(&mut self, mask: u64) {
        if mask == 0 {
            return;
        }
        let m = mask as usize;
        for x in 0..self.amps.len() {
            let y = x ^ m;
            if x < y {
                self.amps.swap(x, y);
            }
        }
    }

    /// Probability that the signed Z product `(-1)^negated * Z(mask)` is
    /// measured with outcome 1.
    pub fn z_outcome_one_probability(&self, mask: u64, negated: bool) -> f64 {
        let mut p1 = 0.0;
        for (x, a) in self.amps.iter().enumerate() {
            let parity = (x as u64 & mask).count_ones() & 1 == 1;
            if parity ^ negated {
                p1 += a.norm_sqr();
            }
        }
        p1
    }

    /// Projects onto the given outcome of a signed Z product measurement and
    /// renormalizes. Returns the probability of that outcome.
    pub fn project_z(
        &mut self,
        mask: u64,
        negated: bool,
        outcome: bool,
    ) -> Result<f64, StateError> {
        let p1 = self.z_outcome_one_probability(mask, negated);
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p < 1e-12 {
            return Err(StateError::NullProjection);
        }
        let scale = 1.0 / p.sqrt();
        for (x, a) in self.amps.iter_mut().enumerate() {
            let parity = (x as u64 & mask).count_ones() & 1 == 1;
            if parity ^ negated == outcome {
                *a *= scale;
            } else {
                *a = Complex64::ZERO;
            }
        }
        Ok(p)
    }

    /// In-place Hadamard on every tile in `mask`. After transforming, basis
    /// index bit `q` is the X-measurement outcome of tile `q`.
    pub fn hadamard_all(&mut self, mask: u64) {
        for q in 0..self.n {
            if mask >> q & 1 == 0 {
                continue;
            }
            let bit = 1usize << q;
            for x in 0..self.amps.len() {
                if x & bit == 0 {
                    let a = self.amps[x];
                    let b = self.amps[x | bit];
                    self.amps[x] = (a + b) * FRAC_1_SQRT_2;
                    self.amps[x | bit] = (a - b) * FRAC_1_SQRT_2;
                }
            }
        }
    }

    /// Reduced density matrix over `tiles` (row-major, dimension `2^k`),
    /// tracing out everything else. `tiles[0]` is the least significant bit
    /// of the reduced index.
    pub fn reduced_density(&self, tiles: &[usize]) -> Vec<Complex64> {
        let k = tiles.len();
        assert!(k <= 4);
        let dim = 1usize << k;
        let mut rho = vec![Complex64::ZERO; dim * dim];
        let keep_mask: usize = tiles.iter().map(|&q| 1usize << q).sum();
        // Group amplitudes by the traced-out configuration.
        for x in 0..self.amps.len() {
            if x & keep_mask != 0 {
                continue;
            }
            // x ranges over environment configurations only.
            let mut col: Vec<(usize, Complex64)> = Vec::with_capacity(dim);
            for s in 0..dim {
                let mut idx = x;
                for (j, &q) in tiles.iter().enumerate() {
                    if s >> j & 1 == 1 {
                        idx |= 1 << q;
                    }
                }
                col.push((s, self.amps[idx]));
            }
            for &(i, ai) in &col {
                for &(j, aj) in &col {
                    rho[i * dim + j] += ai * aj.conj();
                }
            }
        }
        rho
    }

    /// `<target| rho |target>` for a pure target over the same tile order.
    pub fn fidelity_of_reduced(rho: &[Complex64], target: &[Complex64]) -> f64 {
        let dim = target.len();
        assert_eq!(rho.len(), dim * dim);
        let mut acc = Complex64::ZERO;
        for i in 0..dim {
            for j in 0..dim {
                acc += target[i].conj() * rho[i * dim + j] * target[j];
            }
        }
        acc.re
    }
}

/// Normalized `|T>` on one qubit.
pub fn t_state() -> [Complex64; 2] {
    let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    [Complex64::new(FRAC_1_SQRT_2, 0.0), w * FRAC_1_SQRT_2]
}

/// `X^x Z^z |T>` with X applied last.
pub fn pauli_corrected_t_state(x: bool, z: bool) -> [Complex64; 2] {
    let mut v = t_state();
    if z {
        v[1] = -v[1];
    }
    if x {
        v.swap(0, 1);
    }
    v
}

/// `Z_a^za Z_b^zb Z_c^zc |CCZ>` over three qubits (`a` least significant).
pub fn pauli_corrected_ccz_state(z: [bool; 3]) -> [Complex64; 8] {
    let amp = Complex64::new(1.0 / 8f64.sqrt(), 0.0);
    let mut v = [amp; 8];
    v[7] = -v[7]; // CCZ phase on |111>
    for (x, a) in v.iter_mut().enumerate() {
        let mut sign = false;
        for (j, &zj) in z.iter().enumerate() {
            sign ^= zj && x >> j & 1 == 1;
        }
        if sign {
            *a = -*a;
        }
    }
    v
}

/// Normalized projection of the code's magic-state inputs onto the joint
/// eigenspaces selected by `frame` (one bit per frame generator).
pub fn build_code_state(
    code: &crate::codes::CodeSpec,
    frame: &BitVec,
) -> Result<StateVector, StateError> {
    assert_eq!(frame.len(), code.frame_rank());
    let mut state = StateVector::magic_inputs(code.n_tiles, code.input_tiles().as_u64());
    for (j, g) in code.frame_generators.iter().enumerate() {
        state.project_z(g.support.as_u64(), g.negated, frame.get(j))?;
    }
    Ok(state)
}
