//! End-to-end simulation of distillation circuits with injected faults.
//!
//! A run prepares the magic-state inputs, measures the Z stabilizer sequence
//! in order, reconstructs the Z Pauli frame from the recorded outcomes,
//! applies the destabilizer-derived corrections (S on input tiles, X on
//! output tiles), measures every input tile in the X basis, checks the X
//! Pauli frame, and compares the post-selected output state against the
//! Pauli-corrected ideal magic state.
//!
//! Measurement outcomes in the Z phase are deterministic given the sampled
//! frame — Pauli faults flip eigenvalues and the S-type residues they leave
//! are diagonal — so only the frame is sampled. The terminal X measurements
//! are exhaustively enumerated instead: one Hadamard transform turns every
//! X-outcome branch into a basis index, and the scan visits all of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codes::{derive_destabilizers, verify_destabilizers, CodeId, MeasurementSequence};
use crate::ftcheck::{ErrorPattern, FaultLocation, FrameSystem, Verdict};
use crate::gf2::{BitVec, ImageBasis};
use crate::oracle::statevec::{pauli_corrected_ccz_state, pauli_corrected_t_state, StateVector};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Frame(#[from] crate::ftcheck::FtError),
    #[error(transparent)]
    State(#[from] crate::oracle::statevec::StateError),
    #[error("step {step}: outcome probability {prob} is neither deterministic nor balanced")]
    BadOutcomeProbability { step: usize, prob: f64 },
    #[error("destabilizer set is invalid and none could be derived")]
    InvalidDestabilizers,
}

/// Aggregate result of simulating one fault pattern.
#[derive(Clone, Copy, Debug)]
pub struct SimOutcome {
    /// Probability-weighted fraction of runs rejected by frame or X-frame
    /// inconsistency, averaged over frame samples.
    pub detected_fraction: f64,
    /// Minimum output fidelity over all undetected branches (1.0 when every
    /// branch was detected).
    pub min_undetected_fidelity: f64,
    /// Whether any undetected branch survived post-selection.
    pub undetected_exists: bool,
    pub branches: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SimPolicy {
    pub frames: usize,
    pub seed: u64,
    /// Undetected branches below `1 - fidelity_floor` count as corrupted.
    pub fidelity_floor: f64,
}

impl Default for SimPolicy {
    fn default() -> Self {
        SimPolicy {
            frames: 4,
            seed: 1,
            fidelity_floor: 1e-6,
        }
    }
}

/// Destabilizer supports for the frame-correction step, one per carrier
/// measurement, in carrier order.
struct CorrectionPlan {
    carriers: Vec<usize>,
    destab_supports: Vec<BitVec>,
}

fn correction_plan(
    seq: &MeasurementSequence,
    sys: &FrameSystem,
) -> Result<CorrectionPlan, SimError> {
    let k = seq.code.frame_rank();
    let carriers = seq.destab_carrier_indices();
    if carriers.len() == k && verify_destabilizers(seq).pass() {
        let destab_supports = carriers
            .iter()
            .map(|&i| seq.steps[i].destabilizer.unwrap().support)
            .collect();
        return Ok(CorrectionPlan {
            carriers,
            destab_supports,
        });
    }
    if !carriers.is_empty() {
        return Err(SimError::InvalidDestabilizers);
    }
    // No destabilizers shipped: take the first rank-increasing steps as
    // carriers and solve for a destabilizer set.
    let mut basis = ImageBasis::new(k);
    let mut derived_carriers = Vec::new();
    for (i, row) in sys.rows().iter().enumerate() {
        if basis.insert(*row) {
            derived_carriers.push(i);
        }
    }
    if derived_carriers.len() != k {
        return Err(SimError::InvalidDestabilizers);
    }
    let supports: Vec<BitVec> = derived_carriers
        .iter()
        .map(|&i| seq.steps[i].measurement.support)
        .collect();
    let destabs =
        derive_destabilizers(&seq.code, &supports).ok_or(SimError::InvalidDestabilizers)?;
    Ok(CorrectionPlan {
        carriers: derived_carriers,
        destab_supports: destabs.into_iter().map(|d| d.support).collect(),
    })
}

/// Result of the branch scan for one frame sample.
struct FrameRun {
    detected_mass: f64,
    min_undetected_fidelity: f64,
    undetected_exists: bool,
    branches: u64,
}

fn run_frame(
    seq: &MeasurementSequence,
    sys: &FrameSystem,
    plan: &CorrectionPlan,
    pattern: Option<&ErrorPattern>,
    frame: &BitVec,
) -> Result<FrameRun, SimError> {
    let code = &seq.code;
    let n = seq.len();
    let input_mask = code.input_tiles().as_u64();
    let mut state = StateVector::magic_inputs(code.n_tiles, input_mask);

    let x_at_slot = |slot: usize| -> u64 {
        let mut m = 0u64;
        if let Some(p) = pattern {
            for loc in &p.locations {
                if let FaultLocation::XError { tile, slot: s } = *loc {
                    if s == slot {
                        m ^= 1 << tile;
                    }
                }
            }
        }
        m
    };
    let flip_count = |step: usize| -> bool {
        pattern
            .map(|p| {
                p.locations
                    .iter()
                    .filter(|l| matches!(l, FaultLocation::MeasFlip { step: s } if *s == step))
                    .count()
                    & 1
                    == 1
            })
            .unwrap_or(false)
    };

    // Z measurement phase.
    let mut recorded = BitVec::zeros(n);
    let mut rank_basis = ImageBasis::new(code.frame_rank());
    for (i, step) in seq.steps.iter().enumerate() {
        state.apply_x_product(x_at_slot(i));
        let row = sys.rows()[i];
        let support = step.measurement.support.as_u64();
        let outcome = if rank_basis.insert(row) {
            // Fresh frame information: outcome is balanced, force the
            // sampled frame bit.
            let forced = row.overlap_parity(frame);
            let p = state.project_z(support, step.measurement.negated, forced)?;
            if (p - 0.5).abs() > 1e-9 {
                return Err(SimError::BadOutcomeProbability { step: i, prob: p });
            }
            forced
        } else {
            let p1 = state.z_outcome_one_probability(support, step.measurement.negated);
            if p1 > 1e-9 && p1 < 1.0 - 1e-9 {
                return Err(SimError::BadOutcomeProbability { step: i, prob: p1 });
            }
            let o = p1 > 0.5;
            state.project_z(support, step.measurement.negated, o)?;
            o
        };
        recorded.set(i, outcome ^ flip_count(i));
    }
    state.apply_x_product(x_at_slot(n));

    // Frame reconstruction. Inconsistency rejects the whole run.
    if !sys.image().contains(&recorded) {
        return Ok(FrameRun {
            detected_mass: 1.0,
            min_undetected_fidelity: 1.0,
            undetected_exists: false,
            branches: 0,
        });
    }

    // Clifford frame correction from the carrier outcomes: X on corrected
    // output tiles, S on corrected input tiles.
    let mut correction = BitVec::zeros(code.n_tiles);
    for (j, &carrier) in plan.carriers.iter().enumerate() {
        if recorded.get(carrier) {
            correction.xor_assign(&plan.destab_supports[j]);
        }
    }
    let corr_in = correction.as_u64() & input_mask;
    let corr_out = correction.as_u64() & !input_mask;
    state.apply_x_product(corr_out);
    state.apply_s_product(corr_in);

    // Terminal X measurements, all branches at once.
    state.hadamard_all(input_mask);

    // Residual Y = (i X Z) per corrected input tile: the Z part flips the
    // recorded X outcome, so detector parities and logical bits are read
    // relative to the correction.
    let parity = |a: u64| -> bool { a.count_ones() & 1 == 1 };
    let mut check_masks: Vec<(u64, bool)> = Vec::new();
    let mut logical_masks: Vec<(u64, bool)> = Vec::new();
    for det in &code.x_detectors {
        let sup = det.support.as_u64();
        let inp = sup & input_mask;
        let offset = parity(corr_in & inp);
        if sup & !input_mask == 0 {
            check_masks.push((inp, offset));
        } else {
            logical_masks.push((inp, offset));
        }
    }

    let floor = 1e-18;
    let mut detected_mass = 0.0;
    let mut min_fid = 1.0f64;
    let mut undetected_exists = false;
    let mut branches = 0u64;
    match code.id {
        CodeId::T15 => {
            let t15_logical_offset = parity(corr_in & input_mask);
            debug_assert!(corr_out <= 1, "t15 has a single output tile");
            for xi in 0..1usize << 15 {
                let base = xi << 1;
                let v = [state.amps()[base], state.amps()[base | 1]];
                let w = v[0].norm_sqr() + v[1].norm_sqr();
                if w < floor {
                    continue;
                }
                branches += 1;
                let x_bits = (base as u64) & input_mask;
                if check_masks
                    .iter()
                    .any(|&(m, off)| parity(x_bits & m) != off)
                {
                    detected_mass += w;
                    continue;
                }
                let l = parity(x_bits) ^ t15_logical_offset;
                // Teleportation leaves X Z^l |T> on the output tile.
                let target = pauli_corrected_t_state(true, l);
                let ip = target[0].conj() * v[0] + target[1].conj() * v[1];
                let fid = ip.norm_sqr() / w;
                undetected_exists = true;
                min_fid = min_fid.min(fid);
            }
        }
        CodeId::Ccz => {
            for xi in 0..1usize << 8 {
                let mut v = [num_complex::Complex64::ZERO; 8];
                let mut w = 0.0;
                for (o, vo) in v.iter_mut().enumerate() {
                    *vo = state.amps()[xi | o << 8];
                    w += vo.norm_sqr();
                }
                if w < floor {
                    continue;
                }
                branches += 1;
                let x_bits = xi as u64;
                if check_masks
                    .iter()
                    .any(|&(m, off)| parity(x_bits & m) != off)
                {
                    detected_mass += w;
                    continue;
                }
                let mut z = [false; 3];
                for (a, &(m, off)) in logical_masks.iter().enumerate() {
                    z[a] = parity(x_bits & m) ^ off;
                }
                let target = pauli_corrected_ccz_state(z);
                let mut ip = num_complex::Complex64::ZERO;
                for (o, vo) in v.iter().enumerate() {
                    ip += target[o].conj() * vo;
                }
                let fid = ip.norm_sqr() / w;
                undetected_exists = true;
                min_fid = min_fid.min(fid);
            }
        }
    }
    Ok(FrameRun {
        detected_mass,
        min_undetected_fidelity: min_fid,
        undetected_exists,
        branches,
    })
}

/// Simulates `pattern` (or the noiseless circuit) over sampled frames.
pub fn simulate_circuit(
    seq: &MeasurementSequence,
    pattern: Option<&ErrorPattern>,
    policy: SimPolicy,
) -> Result<SimOutcome, SimError> {
    let sys = FrameSystem::build(seq)?;
    let plan = correction_plan(seq, &sys)?;
    let k = seq.code.frame_rank();
    let mut detected = 0.0;
    let mut min_fid = 1.0f64;
    let mut undetected = false;
    let mut branches = 0u64;
    for f in 0..policy.frames {
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        rng.set_stream(f as u64);
        let mut frame = BitVec::zeros(k);
        for j in 0..k {
            frame.set(j, rng.gen::<bool>());
        }
        let run = run_frame(seq, &sys, &plan, pattern, &frame)?;
        detected += run.detected_mass;
        min_fid = min_fid.min(run.min_undetected_fidelity);
        undetected |= run.undetected_exists;
        branches += run.branches;
    }
    Ok(SimOutcome {
        detected_fraction: detected / policy.frames as f64,
        min_undetected_fidelity: min_fid,
        undetected_exists: undetected,
        branches,
    })
}

/// One verifier/oracle disagreement.
///
/// The verifier's Violation verdict is a statement of the linear outcome
/// model and can be conservative: a consistent flip whose wrong correction
/// leaves only input-tile S-residues is still caught by the X Pauli frame.
/// Disagreements therefore record the empirical adjudication rather than
/// implying a checker bug.
#[derive(Clone, Debug)]
pub struct Disagreement {
    pub pattern: ErrorPattern,
    pub verdict: Verdict,
    pub outcome: SimOutcome,
}

#[derive(Clone, Debug)]
pub struct CrossvalReport {
    pub patterns_checked: u64,
    pub disagreements: Vec<Disagreement>,
}

impl CrossvalReport {
    pub fn pass(&self) -> bool {
        self.disagreements.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CrossvalSpec {
    /// Check every size-1 pattern.
    pub size1: bool,
    /// Number of seeded random size-2 patterns.
    pub pairs: usize,
    pub policy: SimPolicy,
}

impl Default for CrossvalSpec {
    fn default() -> Self {
        CrossvalSpec {
            size1: true,
            pairs: 0,
            policy: SimPolicy::default(),
        }
    }
}

fn all_locations(sys: &FrameSystem) -> Vec<FaultLocation> {
    let n = sys.n_steps();
    let mut locs: Vec<FaultLocation> = (0..n)
        .map(|step| FaultLocation::MeasFlip { step })
        .collect();
    for tile in 0..sys.code.n_tiles {
        if sys.code.output_tiles.get(tile) {
            continue;
        }
        for slot in 0..=n {
            locs.push(FaultLocation::XError { tile, slot });
        }
    }
    locs
}

/// Checks the verifier's verdict against the simulator:
/// a Violation must exhibit an undetected branch with fidelity below the
/// floor, and anything else must not.
pub fn crossvalidate(
    seq: &MeasurementSequence,
    spec: CrossvalSpec,
) -> Result<CrossvalReport, SimError> {
    let sys = FrameSystem::build(seq)?;
    let locations = all_locations(&sys);
    let mut patterns: Vec<ErrorPattern> = Vec::new();
    if spec.size1 {
        patterns.extend(locations.iter().map(|&l| ErrorPattern::single(l)));
    }
    if spec.pairs > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.policy.seed ^ 0x9e3779b97f4a7c15);
        for _ in 0..spec.pairs {
            let a = locations[rng.gen_range(0..locations.len())];
            let b = locations[rng.gen_range(0..locations.len())];
            patterns.push(ErrorPattern::pair(a, b));
        }
    }
    let results: Result<Vec<Option<Disagreement>>, SimError> = patterns
        .par_iter()
        .map(|p| {
            let verdict = sys.classify(p).verdict;
            let outcome = simulate_circuit(seq, Some(p), spec.policy)?;
            let oracle_bad = outcome.undetected_exists
                && outcome.min_undetected_fidelity < 1.0 - spec.policy.fidelity_floor;
            let agree = match verdict {
                Verdict::Violation => oracle_bad,
                Verdict::Detected | Verdict::TrivialEquivalent => !oracle_bad,
            };
            Ok((!agree).then(|| Disagreement {
                pattern: p.clone(),
                verdict,
                outcome,
            }))
        })
        .collect();
    Ok(CrossvalReport {
        patterns_checked: patterns.len() as u64,
        disagreements: results?.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::build_t15;
    use crate::seqfile;
    use std::sync::Arc;

    fn table2() -> MeasurementSequence {
        seqfile::parse(include_str!("../../fixtures/t15_table2.seq")).unwrap()
    }

    fn table3() -> MeasurementSequence {
        seqfile::parse(include_str!("../../fixtures/ccz_table3.seq")).unwrap()
    }

    #[test]
    fn noiseless_table2_is_clean() {
        let out = simulate_circuit(
            &table2(),
            None,
            SimPolicy {
                frames: 8,
                seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.detected_fraction, 0.0);
        assert!(out.undetected_exists);
        assert!(
            out.min_undetected_fidelity > 1.0 - 1e-9,
            "fidelity {}",
            out.min_undetected_fidelity
        );
    }

    #[test]
    fn noiseless_table3_is_clean() {
        let out = simulate_circuit(
            &table3(),
            None,
            SimPolicy {
                frames: 8,
                seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.detected_fraction, 0.0);
        assert!(out.min_undetected_fidelity > 1.0 - 1e-9);
    }

    #[test]
    fn measurement_flip_on_table2_is_always_detected() {
        let p = ErrorPattern::single(FaultLocation::MeasFlip { step: 0 });
        let out = simulate_circuit(
            &table2(),
            Some(&p),
            SimPolicy {
                frames: 8,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.detected_fraction, 1.0);
        assert!(!out.undetected_exists);
    }

    #[test]
    fn square_system_misses_a_measurement_flip() {
        let seq = MeasurementSequence::generators_repeated(Arc::new(build_t15()), 1);
        let p = ErrorPattern::single(FaultLocation::MeasFlip { step: 0 });
        let out = simulate_circuit(
            &seq,
            Some(&p),
            SimPolicy {
                frames: 4,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.undetected_exists);
        assert!(
            out.min_undetected_fidelity < 1.0 - 1e-6,
            "expected corruption, fidelity {}",
            out.min_undetected_fidelity
        );
    }

    #[test]
    fn table2_size1_crossvalidation_agrees() {
        let spec = CrossvalSpec {
            size1: true,
            pairs: 0,
            policy: SimPolicy {
                frames: 2,
                seed: 11,
                ..Default::default()
            },
        };
        let report = crossvalidate(&table2(), spec).unwrap();
        assert!(report.pass(), "disagreements: {:?}", report.disagreements);
    }

    #[test]
    fn table3_size1_crossvalidation_agrees() {
        let spec = CrossvalSpec {
            size1: true,
            pairs: 0,
            policy: SimPolicy {
                frames: 2,
                seed: 11,
                ..Default::default()
            },
        };
        let report = crossvalidate(&table3(), spec).unwrap();
        assert!(report.pass(), "disagreements: {:?}", report.disagreements);
    }
}
