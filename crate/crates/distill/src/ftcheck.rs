//! Fault-tolerance verification of measurement sequences.
//!
//! Every fault location is either a flipped measurement outcome or an X
//! error on a tile in one of the gaps between measurements. A fault pattern
//! induces a flip vector over the measurement outcomes; the pattern is
//! detectable exactly when that vector is inconsistent with the linear map
//! from frame bits to outcomes, i.e. lies outside the image of the
//! measurement matrix.
//!
//! An X error can be commuted to either end of the circuit. Commuting it
//! forward absorbs it into the terminal X measurement; commuting it backward
//! converts it into an input error that the X Pauli frame detects. The two
//! choices change the flip vector by the tile's full column mask, which is
//! always in the image, so direction never affects consistency — only
//! whether a consistent pattern can be nulled to the trivial one.

use std::sync::Arc;

use thiserror::Error;

use crate::codes::{CodeSpec, MeasurementSequence};
use crate::gf2::{BitVec, ImageBasis};

#[derive(Debug, Error)]
pub enum FtError {
    #[error("step {step}: measurement support is outside the stabilizer span")]
    UnresolvableSupport { step: usize },
    #[error("sequence has {got} steps; at most {max} are supported")]
    TooManySteps { got: usize, max: usize },
    #[error("all-orders check supports at most {max} steps, sequence has {got}")]
    TooManyOrders { got: usize, max: usize },
}

/// A single fault location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaultLocation {
    /// The recorded outcome of step `step` is flipped.
    MeasFlip { step: usize },
    /// An X error on `tile` in the gap before step `slot` (`slot == n_steps`
    /// is the gap after the last measurement).
    XError { tile: usize, slot: usize },
}

impl std::fmt::Display for FaultLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FaultLocation::MeasFlip { step } => write!(f, "meas_flip(step={step})"),
            FaultLocation::XError { tile, slot } => write!(f, "x_error(tile={tile},slot={slot})"),
        }
    }
}

/// A multiset of at most `max_errors` fault locations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ErrorPattern {
    pub locations: Vec<FaultLocation>,
}

impl std::fmt::Display for ErrorPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, loc) in self.locations.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{loc}")?;
        }
        Ok(())
    }
}

impl ErrorPattern {
    pub fn single(loc: FaultLocation) -> Self {
        ErrorPattern {
            locations: vec![loc],
        }
    }

    pub fn pair(a: FaultLocation, b: FaultLocation) -> Self {
        ErrorPattern {
            locations: vec![a, b],
        }
    }

    pub fn x_error_count(&self) -> usize {
        self.locations
            .iter()
            .filter(|l| matches!(l, FaultLocation::XError { .. }))
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Flip vector inconsistent: the frame reconstruction fails and the run
    /// is rejected.
    Detected,
    /// Consistent, and some commutation direction assignment nulls the flip
    /// vector; residues are caught by the X Pauli frame or are harmless.
    TrivialEquivalent,
    /// Consistent but not nullable: an undetected logical error.
    Violation,
}

/// Classification of one pattern, with the all-forward flip vector as
/// witness and, for trivial patterns, the nulling direction assignment.
#[derive(Clone, Debug)]
pub struct PatternVerdict {
    pub verdict: Verdict,
    pub flip: BitVec,
    pub nulling_directions: Option<Vec<Direction>>,
}

/// The GF(2) linear system of a loaded sequence: the measurement matrix, a
/// basis of its column space for O(rank) consistency queries, and per-tile
/// flip masks.
#[derive(Clone, Debug)]
pub struct FrameSystem {
    pub code: Arc<CodeSpec>,
    n_steps: usize,
    /// Row `i`: frame-generator coefficients of measurement `i`.
    rows: Vec<BitVec>,
    /// Basis of the column space of the measurement matrix in outcome space.
    image: ImageBasis,
    /// Residues of the unit outcome vectors, `reduce(e_i)`.
    unit_residues: Vec<BitVec>,
    /// `tile_masks[q]`: steps whose support contains tile `q`.
    tile_masks: Vec<BitVec>,
    /// First and one-past-last step touching each tile (`None` if untouched).
    tile_range: Vec<Option<(usize, usize)>>,
    /// `cluster_boundary[s]`: slot `s` sits between two stage clusters.
    /// Steps without stage labels are their own clusters, so a sequence
    /// without labels has every boundary set.
    cluster_boundary: Vec<bool>,
    frame_rank: usize,
}

impl FrameSystem {
    pub fn build(seq: &MeasurementSequence) -> Result<FrameSystem, FtError> {
        let n = seq.len();
        if n > BitVec::MAX_LEN {
            return Err(FtError::TooManySteps {
                got: n,
                max: BitVec::MAX_LEN,
            });
        }
        let mut rows = Vec::with_capacity(n);
        for (i, s) in seq.supports().enumerate() {
            match seq.code.decompose_support(s) {
                Some(c) => rows.push(c),
                None => return Err(FtError::UnresolvableSupport { step: i }),
            }
        }
        let mut sys = Self::from_parts(
            Arc::clone(&seq.code),
            rows,
            seq.supports().copied().collect(),
        );
        for s in 1..n {
            let (a, b) = (&seq.steps[s - 1].stage, &seq.steps[s].stage);
            sys.cluster_boundary[s] = match (a, b) {
                (Some(a), Some(b)) => a != b,
                _ => true,
            };
        }
        Ok(sys)
    }

    /// Builds the system from pre-decomposed rows; `rows[i]` must be the
    /// frame coefficients of `supports[i]`. Lets samplers with cached
    /// decompositions skip the solver.
    pub fn from_parts(
        code: Arc<CodeSpec>,
        rows: Vec<BitVec>,
        supports: Vec<BitVec>,
    ) -> FrameSystem {
        let n = rows.len();
        let k = code.frame_rank();
        let mut image = ImageBasis::new(n);
        for j in 0..k {
            let mut col = BitVec::zeros(n);
            for (i, r) in rows.iter().enumerate() {
                if r.get(j) {
                    col.set(i, true);
                }
            }
            image.insert(col);
        }
        let unit_residues = (0..n)
            .map(|i| image.reduce(&BitVec::from_indices(n, &[i])))
            .collect();
        let mut tile_masks = vec![BitVec::zeros(n); code.n_tiles];
        for (i, s) in supports.iter().enumerate() {
            for q in s.iter_ones() {
                tile_masks[q].set(i, true);
            }
        }
        let tile_range = tile_masks
            .iter()
            .map(|m| {
                m.lowest_set().map(|first| {
                    let last = (0..n).rev().find(|&i| m.get(i)).unwrap();
                    (first, last + 1)
                })
            })
            .collect();
        let frame_rank = {
            let mut b = ImageBasis::new(k);
            for r in &rows {
                b.insert(*r);
            }
            b.rank()
        };
        FrameSystem {
            code,
            n_steps: n,
            rows,
            image,
            unit_residues,
            tile_masks,
            tile_range,
            cluster_boundary: vec![true; n + 1],
            frame_rank,
        }
    }

    /// The same system with measurements reordered; `order[i]` is the
    /// original index of the step performed at position `i`.
    pub fn with_order(&self, order: &[usize]) -> FrameSystem {
        assert_eq!(order.len(), self.n_steps);
        let n = self.n_steps;
        let rows: Vec<BitVec> = order.iter().map(|&i| self.rows[i]).collect();
        let mut supports = vec![BitVec::zeros(self.code.n_tiles); n];
        for (pos, sup) in supports.iter_mut().enumerate() {
            for (q, m) in self.tile_masks.iter().enumerate() {
                if m.get(order[pos]) {
                    sup.set(q, true);
                }
            }
        }
        FrameSystem::from_parts(Arc::clone(&self.code), rows, supports)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn frame_rank(&self) -> usize {
        self.frame_rank
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn image(&self) -> &ImageBasis {
        &self.image
    }

    pub fn tile_mask(&self, tile: usize) -> &BitVec {
        &self.tile_masks[tile]
    }

    /// Steps at or after `slot` whose support contains `tile`.
    pub fn forward_mask(&self, tile: usize, slot: usize) -> BitVec {
        debug_assert!(slot <= self.n_steps);
        let low = if slot >= 64 {
            u64::MAX
        } else {
            (1u64 << slot) - 1
        };
        BitVec::from_bits(self.n_steps, self.tile_masks[tile].as_u64() & !low)
    }

    /// Steps strictly before `slot` whose support contains `tile`.
    pub fn backward_mask(&self, tile: usize, slot: usize) -> BitVec {
        self.tile_masks[tile].xor(&self.forward_mask(tile, slot))
    }

    /// Flip vector of a pattern under the given direction assignment (one
    /// direction per X error, in pattern order).
    pub fn flip_vector(&self, pattern: &ErrorPattern, directions: &[Direction]) -> BitVec {
        assert_eq!(directions.len(), pattern.x_error_count());
        let mut v = BitVec::zeros(self.n_steps);
        let mut d = directions.iter();
        for loc in &pattern.locations {
            match *loc {
                FaultLocation::MeasFlip { step } => v.flip(step),
                FaultLocation::XError { tile, slot } => {
                    let m = match d.next().unwrap() {
                        Direction::Forward => self.forward_mask(tile, slot),
                        Direction::Backward => self.backward_mask(tile, slot),
                    };
                    v.xor_assign(&m);
                }
            }
        }
        v
    }

    /// Classifies one pattern. Consistency is evaluated once under the
    /// all-forward assignment; direction choices cannot change it, so only
    /// the consistent branch searches assignments for a nulling one.
    pub fn classify(&self, pattern: &ErrorPattern) -> PatternVerdict {
        let n_x = pattern.x_error_count();
        let all_forward = vec![Direction::Forward; n_x];
        let flip = self.flip_vector(pattern, &all_forward);
        if !self.image.contains(&flip) {
            return PatternVerdict {
                verdict: Verdict::Detected,
                flip,
                nulling_directions: None,
            };
        }
        // Toggling one X error's direction XORs its tile's full column mask.
        let masks: Vec<&BitVec> = pattern
            .locations
            .iter()
            .filter_map(|l| match *l {
                FaultLocation::XError { tile, .. } => Some(&self.tile_masks[tile]),
                FaultLocation::MeasFlip { .. } => None,
            })
            .collect();
        for assign in 0u32..1 << n_x {
            let mut v = flip;
            for (j, m) in masks.iter().enumerate() {
                if assign >> j & 1 == 1 {
                    v.xor_assign(m);
                }
            }
            if v.is_zero() {
                let dirs = (0..n_x)
                    .map(|j| {
                        if assign >> j & 1 == 1 {
                            Direction::Backward
                        } else {
                            Direction::Forward
                        }
                    })
                    .collect();
                return PatternVerdict {
                    verdict: Verdict::TrivialEquivalent,
                    flip,
                    nulling_directions: Some(dirs),
                };
            }
        }
        PatternVerdict {
            verdict: Verdict::Violation,
            flip,
            nulling_directions: None,
        }
    }

    /// Tiles eligible for X error enumeration.
    fn fault_tiles(&self, include_output: bool) -> Vec<usize> {
        (0..self.code.n_tiles)
            .filter(|&q| include_output || !self.code.output_tiles.get(q))
            .collect()
    }

    /// Runs `visit` on every violation among patterns of size 1..=max_errors,
    /// in early-exit-friendly order: single measurement flips, single X
    /// errors by slot, then pairs. Returns false if `visit` stopped the scan.
    /// With `cluster_slots`, X errors are placed only at stage-cluster
    /// boundaries instead of every inter-measurement gap.
    ///
    /// Enumeration works on residues: the classifier above is definitionally
    /// equivalent but this path avoids materializing patterns, which matters
    /// for search throughput.
    fn scan_violations(
        &self,
        max_errors: usize,
        include_output: bool,
        cluster_slots: bool,
        visit: &mut dyn FnMut(ErrorPattern) -> bool,
    ) -> bool {
        let n = self.n_steps;
        let tiles = self.fault_tiles(include_output);
        let slot_ok = |s: usize| !cluster_slots || self.cluster_boundary[s];

        // Residue of the forward flip vector for (tile, slot), built
        // incrementally from slot n down to 0; the reducer is linear.
        let x_residue = |q: usize| -> Vec<BitVec> {
            let mut res = vec![BitVec::zeros(n); n + 2];
            for s in (0..=n).rev() {
                let mut r = res[s + 1];
                if s < n && self.tile_masks[q].get(s) {
                    r.xor_assign(&self.unit_residues[s]);
                }
                res[s] = r;
            }
            res.truncate(n + 1);
            res
        };

        // Single measurement flips: a unit vector is never nullable, so a
        // consistent one is a violation outright.
        for i in 0..n {
            if self.unit_residues[i].is_zero()
                && !visit(ErrorPattern::single(FaultLocation::MeasFlip { step: i }))
            {
                return false;
            }
        }

        // Single X errors. Trivial iff no touched step on one side.
        let tile_res: Vec<Vec<BitVec>> = tiles.iter().map(|&q| x_residue(q)).collect();
        for (ti, &q) in tiles.iter().enumerate() {
            let (first, end) = match self.tile_range[q] {
                Some(r) => r,
                None => continue,
            };
            for (s, res) in tile_res[ti].iter().enumerate() {
                let trivial = s >= end || s <= first;
                if slot_ok(s)
                    && !trivial
                    && res.is_zero()
                    && !visit(ErrorPattern::single(FaultLocation::XError {
                        tile: q,
                        slot: s,
                    }))
                {
                    return false;
                }
            }
        }

        if max_errors < 2 {
            return true;
        }

        // Measurement flip pairs: e_i ^ e_j is nonzero for i != j, so
        // consistency alone is a violation.
        for i in 0..n {
            for j in i + 1..n {
                if self.unit_residues[i] == self.unit_residues[j]
                    && !visit(ErrorPattern::pair(
                        FaultLocation::MeasFlip { step: i },
                        FaultLocation::MeasFlip { step: j },
                    ))
                {
                    return false;
                }
            }
        }

        // Measurement flip + X error: nullable iff one direction's flip set
        // is exactly {i}.
        for i in 0..n {
            let e_i = BitVec::from_indices(n, &[i]);
            for (ti, &q) in tiles.iter().enumerate() {
                for (s, res) in tile_res[ti].iter().enumerate() {
                    if !slot_ok(s) || !res.xor(&self.unit_residues[i]).is_zero() {
                        continue;
                    }
                    let fwd = self.forward_mask(q, s);
                    let bwd = self.backward_mask(q, s);
                    if fwd == e_i || bwd == e_i {
                        continue;
                    }
                    if !visit(ErrorPattern::pair(
                        FaultLocation::MeasFlip { step: i },
                        FaultLocation::XError { tile: q, slot: s },
                    )) {
                        return false;
                    }
                }
            }
        }

        // X error pairs: nullable iff some direction combination cancels.
        for (ti, &q1) in tiles.iter().enumerate() {
            for (tj, &q2) in tiles.iter().enumerate().skip(ti) {
                for s1 in (0..=n).filter(|&s| slot_ok(s)) {
                    let s2_start = if tj == ti { s1 } else { 0 };
                    for s2 in (s2_start..=n).filter(|&s| slot_ok(s)) {
                        let r = tile_res[ti][s1].xor(&tile_res[tj][s2]);
                        if !r.is_zero() {
                            continue;
                        }
                        let f1 = self.forward_mask(q1, s1);
                        let f2 = self.forward_mask(q2, s2);
                        let m1 = &self.tile_masks[q1];
                        let m2 = &self.tile_masks[q2];
                        let base = f1.xor(&f2);
                        let trivial = base.is_zero()
                            || base.xor(m1).is_zero()
                            || base.xor(m2).is_zero()
                            || base.xor(m1).xor(m2).is_zero();
                        if trivial {
                            continue;
                        }
                        if !visit(ErrorPattern::pair(
                            FaultLocation::XError { tile: q1, slot: s1 },
                            FaultLocation::XError { tile: q2, slot: s2 },
                        )) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InsufficiencyReason {
    UnresolvableSupport { step: usize },
    FrameRankDeficient { rank: usize, need: usize },
    Violations,
}

#[derive(Clone, Debug)]
pub struct SufficiencyReport {
    pub sufficient: bool,
    pub reason: Option<InsufficiencyReason>,
    /// Violations found; capped in collect mode, first-only in boolean mode.
    pub violations: Vec<ErrorPattern>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_errors: usize,
    pub include_output_tiles: bool,
    /// Place X errors only at stage-cluster boundaries.
    pub cluster_slots: bool,
    /// Stop at the first violation instead of collecting up to `cap`.
    pub early_exit: bool,
    pub violation_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_errors: 2,
            include_output_tiles: false,
            cluster_slots: false,
            early_exit: false,
            violation_cap: 32,
        }
    }
}

/// Decides whether a sequence detects every fault pattern within budget.
pub fn check_sufficiency(seq: &MeasurementSequence, opts: CheckOptions) -> SufficiencyReport {
    let sys = match FrameSystem::build(seq) {
        Ok(s) => s,
        Err(FtError::UnresolvableSupport { step }) => {
            return SufficiencyReport {
                sufficient: false,
                reason: Some(InsufficiencyReason::UnresolvableSupport { step }),
                violations: Vec::new(),
            }
        }
        Err(_) => {
            return SufficiencyReport {
                sufficient: false,
                reason: Some(InsufficiencyReason::FrameRankDeficient {
                    rank: 0,
                    need: seq.code.frame_rank(),
                }),
                violations: Vec::new(),
            }
        }
    };
    check_sufficiency_system(&sys, opts)
}

pub fn check_sufficiency_system(sys: &FrameSystem, opts: CheckOptions) -> SufficiencyReport {
    let need = sys.code.frame_rank();
    if sys.frame_rank() < need {
        return SufficiencyReport {
            sufficient: false,
            reason: Some(InsufficiencyReason::FrameRankDeficient {
                rank: sys.frame_rank(),
                need,
            }),
            violations: Vec::new(),
        };
    }
    let mut violations = Vec::new();
    let cap = if opts.early_exit {
        1
    } else {
        opts.violation_cap
    };
    sys.scan_violations(
        opts.max_errors,
        opts.include_output_tiles,
        opts.cluster_slots,
        &mut |p| {
            violations.push(p);
            violations.len() < cap
        },
    );
    if violations.is_empty() {
        SufficiencyReport {
            sufficient: true,
            reason: None,
            violations,
        }
    } else {
        SufficiencyReport {
            sufficient: false,
            reason: Some(InsufficiencyReason::Violations),
            violations,
        }
    }
}

/// Entry `i` is true iff removing step `i` makes the sequence insufficient.
pub fn check_necessity(seq: &MeasurementSequence, opts: CheckOptions) -> Vec<bool> {
    let fast = CheckOptions {
        early_exit: true,
        ..opts
    };
    (0..seq.len())
        .map(|i| !check_sufficiency(&seq.without_step(i), fast).sufficient)
        .collect()
}

#[derive(Clone, Debug)]
pub struct CczReport {
    pub n_steps: usize,
    pub frame_rank: usize,
    pub measurement_count_ok: bool,
    pub frame_rank_ok: bool,
    /// Every single outcome flip is inconsistent.
    pub parity_coverage_ok: bool,
    /// Measurements touching each input tile.
    pub participation: Vec<usize>,
    pub participation_ok: bool,
    pub single_pattern_violations: Vec<ErrorPattern>,
    pub orders_checked: u64,
    /// First measurement order that failed the single-pattern check, if any.
    pub failing_order: Option<Vec<usize>>,
}

impl CczReport {
    pub fn pass(&self) -> bool {
        self.measurement_count_ok
            && self.frame_rank_ok
            && self.parity_coverage_ok
            && self.participation_ok
            && self.single_pattern_violations.is_empty()
            && self.failing_order.is_none()
    }
}

const MAX_ORDER_STEPS: usize = 10;

/// Distance-2 requirements for a CCZ sequence: at least 8 measurements of
/// full frame rank, every single flip inconsistent, every input tile in at
/// most 3 measurements, no size-1 violation — optionally for every
/// measurement order.
pub fn check_ccz(seq: &MeasurementSequence, all_orders: bool) -> Result<CczReport, FtError> {
    let sys = FrameSystem::build(seq)?;
    let k = seq.code.frame_rank();
    let n = sys.n_steps();
    let input_tiles: Vec<usize> = (0..seq.code.n_tiles)
        .filter(|&q| !seq.code.output_tiles.get(q))
        .collect();
    let participation: Vec<usize> = input_tiles
        .iter()
        .map(|&q| sys.tile_mask(q).weight())
        .collect();
    let mut report = CczReport {
        n_steps: n,
        frame_rank: sys.frame_rank(),
        measurement_count_ok: n > k,
        frame_rank_ok: sys.frame_rank() == k,
        parity_coverage_ok: (0..n).all(|i| !sys.image().contains(&BitVec::from_indices(n, &[i]))),
        participation_ok: participation.iter().all(|&c| c <= 3),
        participation,
        single_pattern_violations: Vec::new(),
        orders_checked: 0,
        failing_order: None,
    };
    sys.scan_violations(1, false, false, &mut |p| {
        report.single_pattern_violations.push(p);
        report.single_pattern_violations.len() < 8
    });
    report.orders_checked = 1;

    if all_orders && report.pass() {
        if n > MAX_ORDER_STEPS {
            return Err(FtError::TooManyOrders {
                got: n,
                max: MAX_ORDER_STEPS,
            });
        }
        // Heap's algorithm over step indices; the identity order was already
        // checked above but is revisited harmlessly.
        let mut order: Vec<usize> = (0..n).collect();
        let mut c = vec![0usize; n];
        let check = |order: &[usize], report: &mut CczReport| -> bool {
            report.orders_checked += 1;
            let permuted = sys.with_order(order);
            let ok = permuted.scan_violations(1, false, false, &mut |_| false)
                && (0..n).all(|i| !permuted.image().contains(&BitVec::from_indices(n, &[i])));
            if !ok && report.failing_order.is_none() {
                report.failing_order = Some(order.to_vec());
            }
            ok
        };
        if check(&order, &mut report) {
            let mut i = 0;
            while i < n {
                if c[i] < i {
                    if i % 2 == 0 {
                        order.swap(0, i);
                    } else {
                        order.swap(c[i], i);
                    }
                    if !check(&order, &mut report) {
                        break;
                    }
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
        }
    }
    Ok(report)
}
