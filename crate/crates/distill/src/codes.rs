//! The two code contexts used by the distillation protocols.
//!
//! The 15-to-1 context ("t15") places one output tile and 15 input tiles on
//! the vertices of a tesseract, labeled by 4-bit strings read MSB-first
//! (`0000 = 0`, ..., `1111 = 15`), and wraps the inputs in the `[[15,1,3]]`
//! code with a Bell pair to the output tile. The 8-to-CCZ context ("ccz")
//! places 8 input tiles on the vertices of a cube (3-bit labels, tiles 0-7)
//! and three output tiles 8-10, wrapping the inputs in the `[[8,3,2]]` code
//! with three Bell pairs.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::gf2::{BitVec, Gf2Matrix};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("expected {expected} generators, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("bit order must be a permutation of 0..{0}")]
    BadBitOrder(usize),
    #[error("support is outside the stabilizer span")]
    OutsideSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliKind {
    Z,
    X,
}

/// A signed product of same-type Pauli operators over tiles.
///
/// This is the shared currency for stabilizers, destabilizers, and
/// measurements. The sign is stored but never affects GF(2) detectability;
/// it offsets measurement outcomes affinely.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliProduct {
    pub kind: PauliKind,
    pub support: BitVec,
    pub negated: bool,
}

impl PauliProduct {
    pub fn z(support: BitVec) -> Self {
        PauliProduct {
            kind: PauliKind::Z,
            support,
            negated: false,
        }
    }

    pub fn x(support: BitVec) -> Self {
        PauliProduct {
            kind: PauliKind::X,
            support,
            negated: false,
        }
    }

    pub fn negated_z(support: BitVec) -> Self {
        PauliProduct {
            kind: PauliKind::Z,
            support,
            negated: true,
        }
    }

    pub fn weight(&self) -> usize {
        self.support.weight()
    }

    /// Two Pauli products commute iff their supports overlap evenly or they
    /// share a kind.
    pub fn commutes_with(&self, other: &PauliProduct) -> bool {
        self.kind == other.kind || !self.support.overlap_parity(&other.support)
    }
}

impl fmt::Debug for PauliProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "-")?;
        }
        let k = match self.kind {
            PauliKind::Z => "Z",
            PauliKind::X => "X",
        };
        write!(f, "{k}{:?}", self.support)
    }
}

/// Support of a product pattern like `1***` or `*00`, read MSB-first over
/// `label_bits` bit positions: the product runs over every tile whose label
/// matches the pattern.
pub fn pattern_support(n_tiles: usize, label_bits: usize, pattern: &str) -> BitVec {
    assert_eq!(
        pattern.len(),
        label_bits,
        "pattern width must match label bits"
    );
    let mut v = BitVec::zeros(n_tiles);
    for tile in 0..1usize << label_bits {
        let matches = pattern.chars().enumerate().all(|(pos, c)| {
            let bit = tile >> (label_bits - 1 - pos) & 1;
            match c {
                '*' => true,
                '0' => bit == 0,
                '1' => bit == 1,
                _ => panic!("bad pattern char {c:?}"),
            }
        });
        if matches {
            v.set(tile, true);
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeId {
    T15,
    Ccz,
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeId::T15 => write!(f, "t15"),
            CodeId::Ccz => write!(f, "ccz"),
        }
    }
}

/// Echelon form of the frame generator supports with coefficient tracking,
/// so support decomposition is a single reduction pass.
#[derive(Clone, Debug)]
struct DecomposeSolver {
    // (reduced support, generator coefficients), echelon by support pivot
    rows: Vec<(BitVec, BitVec)>,
    n_tiles: usize,
    n_generators: usize,
}

impl DecomposeSolver {
    fn build(n_tiles: usize, generators: &[PauliProduct]) -> Self {
        let k = generators.len();
        let mut rows: Vec<(BitVec, BitVec)> = Vec::with_capacity(k);
        for (j, g) in generators.iter().enumerate() {
            let mut s = g.support;
            let mut c = BitVec::from_indices(k, &[j]);
            for (rs, rc) in &rows {
                if let Some(p) = rs.lowest_set() {
                    if s.get(p) {
                        s.xor_assign(rs);
                        c.xor_assign(rc);
                    }
                }
            }
            assert!(!s.is_zero(), "frame generators must be independent");
            for (rs, rc) in rows.iter_mut() {
                if rs.get(s.lowest_set().unwrap()) {
                    rs.xor_assign(&s);
                    rc.xor_assign(&c);
                }
            }
            rows.push((s, c));
            rows.sort_by_key(|(rs, _)| rs.lowest_set());
        }
        DecomposeSolver {
            rows,
            n_tiles,
            n_generators: k,
        }
    }

    fn decompose(&self, support: &BitVec) -> Option<BitVec> {
        assert_eq!(support.len(), self.n_tiles);
        let mut s = *support;
        let mut c = BitVec::zeros(self.n_generators);
        for (rs, rc) in &self.rows {
            if s.get(rs.lowest_set().unwrap()) {
                s.xor_assign(rs);
                c.xor_assign(rc);
            }
        }
        if s.is_zero() {
            Some(c)
        } else {
            None
        }
    }
}

/// One of the two code contexts: tile layout, frame generators, X detectors.
///
/// In both contexts the input state is fixed: every non-output tile is
/// prepared as `|T>` and every output tile as `|+>`.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    pub id: CodeId,
    pub n_tiles: usize,
    pub output_tiles: BitVec,
    /// Independent Z-type generators whose outcomes form the Z Pauli frame.
    pub frame_generators: Vec<PauliProduct>,
    /// X-type stabilizers reconstructed from the terminal X measurements.
    pub x_detectors: Vec<PauliProduct>,
    solver: DecomposeSolver,
}

impl CodeSpec {
    pub fn frame_rank(&self) -> usize {
        self.frame_generators.len()
    }

    pub fn input_tiles(&self) -> BitVec {
        let mut v = BitVec::zeros(self.n_tiles);
        for t in 0..self.n_tiles {
            if !self.output_tiles.get(t) {
                v.set(t, true);
            }
        }
        v
    }

    /// Coefficients of `support` over the frame generators, or `None` when
    /// the support is outside the stabilizer span (the caller rejects such a
    /// measurement). The representation is unique because the generators are
    /// independent.
    pub fn decompose_support(&self, support: &BitVec) -> Option<BitVec> {
        self.solver.decompose(support)
    }
}

/// The 16-tile tesseract context for 15-to-1 distillation.
pub fn build_t15() -> CodeSpec {
    let n = 16;
    let zp = |p: &str| PauliProduct::z(pattern_support(n, 4, p));
    let xp = |p: &str| PauliProduct::x(pattern_support(n, 4, p));
    let frame_generators = vec![
        zp("****"),
        zp("1***"),
        zp("*1**"),
        zp("**1*"),
        zp("***1"),
        zp("11**"),
        zp("1*1*"),
        zp("1**1"),
        zp("*11*"),
        zp("*1*1"),
        zp("**11"),
    ];
    let x_detectors = vec![xp("1***"), xp("*1**"), xp("**1*"), xp("***1")];
    let solver = DecomposeSolver::build(n, &frame_generators);
    let spec = CodeSpec {
        id: CodeId::T15,
        n_tiles: n,
        output_tiles: BitVec::from_indices(n, &[0]),
        frame_generators,
        x_detectors,
        solver,
    };
    debug_assert!(spec.x_detectors.iter().all(|d| {
        spec.frame_generators
            .iter()
            .all(|g| !d.support.overlap_parity(&g.support))
    }));
    spec
}

/// The 11-tile cube context for 8-to-CCZ distillation: inputs 0-7, outputs
/// 8-10, with signed Bell stabilizers tying each output to the code block.
pub fn build_ccz() -> CodeSpec {
    let n = 11;
    let zc = |p: &str| pattern_support(n, 3, p);
    let bell_z = |p: &str, out: usize| {
        let mut s = zc(p);
        s.set(out, true);
        PauliProduct::negated_z(s)
    };
    let bell_x = |p: &str, out: usize| {
        let mut s = zc(p);
        s.set(out, true);
        PauliProduct::x(s)
    };
    let frame_generators = vec![
        PauliProduct::z(zc("***")),
        PauliProduct::z(zc("0**")),
        PauliProduct::z(zc("*0*")),
        PauliProduct::z(zc("**0")),
        bell_z("*00", 8),
        bell_z("0*0", 9),
        bell_z("00*", 10),
    ];
    let x_detectors = vec![
        PauliProduct::x(zc("***")),
        bell_x("0**", 8),
        bell_x("*0*", 9),
        bell_x("**0", 10),
    ];
    let solver = DecomposeSolver::build(n, &frame_generators);
    CodeSpec {
        id: CodeId::Ccz,
        n_tiles: n,
        output_tiles: BitVec::from_indices(n, &[8, 9, 10]),
        frame_generators,
        x_detectors,
        solver,
    }
}

pub fn build_code(id: CodeId) -> CodeSpec {
    match id {
        CodeId::T15 => build_t15(),
        CodeId::Ccz => build_ccz(),
    }
}

/// Encoding matrix of the `[15,11,3]` Hamming code used to protect the 11
/// frame bits: each row selects the generators whose product forms one
/// redundant check measurement.
pub const HAMMING_ENCODING: [[u8; 11]; 4] = [
    [1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 1],
    [1, 0, 0, 1, 1, 0, 1, 1, 0, 1, 1],
    [0, 1, 0, 1, 0, 1, 1, 0, 1, 1, 1],
    [0, 0, 1, 0, 1, 1, 0, 1, 1, 1, 1],
];

/// Default assignment of generator index to Hamming column for the canonical
/// t15 generator order. Column bit patterns mark the asterisk positions of a
/// generator, which puts the canonical list in reverse column order.
pub fn default_hamming_bit_order() -> [usize; 11] {
    let mut order = [0usize; 11];
    for (g, slot) in order.iter_mut().enumerate() {
        *slot = 10 - g;
    }
    order
}

/// Forms the 4 redundant check products selected by the rows of
/// [`HAMMING_ENCODING`]. `bit_order[g]` gives the Hamming column assigned to
/// generator `g`.
pub fn hamming_redundancy(
    generators: &[PauliProduct],
    bit_order: &[usize],
) -> Result<Vec<PauliProduct>, CodeError> {
    if generators.len() != 11 {
        return Err(CodeError::GeneratorCount {
            expected: 11,
            got: generators.len(),
        });
    }
    let mut seen = [false; 11];
    if bit_order.len() != 11 {
        return Err(CodeError::BadBitOrder(11));
    }
    for &c in bit_order {
        if c >= 11 || seen[c] {
            return Err(CodeError::BadBitOrder(11));
        }
        seen[c] = true;
    }
    let n = generators[0].support.len();
    let mut products = Vec::with_capacity(4);
    for row in &HAMMING_ENCODING {
        let mut support = BitVec::zeros(n);
        let mut negated = false;
        for (g, gen) in generators.iter().enumerate() {
            if row[bit_order[g]] == 1 {
                support.xor_assign(&gen.support);
                negated ^= gen.negated;
            }
        }
        products.push(PauliProduct {
            kind: PauliKind::Z,
            support,
            negated,
        });
    }
    Ok(products)
}

/// One step of a measurement sequence.
#[derive(Clone, Debug)]
pub struct Step {
    pub measurement: PauliProduct,
    pub stage: Option<String>,
    pub destabilizer: Option<PauliProduct>,
}

impl Step {
    pub fn bare(measurement: PauliProduct) -> Self {
        Step {
            measurement,
            stage: None,
            destabilizer: None,
        }
    }
}

/// An ordered list of Z-type stabilizer measurements over a code context.
#[derive(Clone, Debug)]
pub struct MeasurementSequence {
    pub code: Arc<CodeSpec>,
    pub steps: Vec<Step>,
}

impl MeasurementSequence {
    pub fn new(code: Arc<CodeSpec>, steps: Vec<Step>) -> Self {
        MeasurementSequence { code, steps }
    }

    /// The code's frame generators measured once each, repeated `repeats`
    /// times, with no stage labels or destabilizers.
    pub fn generators_repeated(code: Arc<CodeSpec>, repeats: usize) -> Self {
        let mut steps = Vec::new();
        for _ in 0..repeats {
            for g in &code.frame_generators {
                steps.push(Step::bare(*g));
            }
        }
        MeasurementSequence { code, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn supports(&self) -> impl Iterator<Item = &BitVec> + '_ {
        self.steps.iter().map(|s| &s.measurement.support)
    }

    /// A copy with step `i` removed.
    pub fn without_step(&self, i: usize) -> MeasurementSequence {
        let mut steps = self.steps.clone();
        steps.remove(i);
        MeasurementSequence {
            code: Arc::clone(&self.code),
            steps,
        }
    }

    pub fn destab_carrier_indices(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.destabilizer.map(|_| i))
            .collect()
    }
}

/// Per-step result of the destabilizer checks.
#[derive(Clone, Debug)]
pub struct DestabCheck {
    pub step: usize,
    /// Odd overlap with its own measurement.
    pub anticommutes_own: bool,
    /// Even overlap with every other destabilizer-carrying measurement.
    pub commutes_others: bool,
}

impl DestabCheck {
    pub fn pass(&self) -> bool {
        self.anticommutes_own && self.commutes_others
    }
}

#[derive(Clone, Debug)]
pub struct DestabReport {
    pub checks: Vec<DestabCheck>,
    /// The destabilizer-carrying measurements are independent and span the
    /// full frame.
    pub carriers_full_rank: bool,
    pub carrier_count: usize,
    pub frame_rank: usize,
}

impl DestabReport {
    pub fn pass(&self) -> bool {
        self.carriers_full_rank && self.checks.iter().all(DestabCheck::pass)
    }
}

/// Checks that the destabilizer-carrying steps form an independent set of
/// full frame rank and that destabilizer `j` flips exactly frame bit `j`:
/// odd support overlap with its own measurement, even with every other
/// carrier measurement.
pub fn verify_destabilizers(seq: &MeasurementSequence) -> DestabReport {
    let carriers = seq.destab_carrier_indices();
    let k = seq.code.frame_rank();
    let mut m = Gf2Matrix::new(k);
    let mut full_rank = carriers.len() == k;
    for &i in &carriers {
        match seq
            .code
            .decompose_support(&seq.steps[i].measurement.support)
        {
            Some(c) => m.push_row(c),
            None => full_rank = false,
        }
    }
    let carriers_full_rank = full_rank && m.rank() == k;
    let mut checks = Vec::with_capacity(carriers.len());
    for &i in &carriers {
        let d = seq.steps[i].destabilizer.as_ref().unwrap();
        let anticommutes_own = d.support.overlap_parity(&seq.steps[i].measurement.support);
        let commutes_others = carriers
            .iter()
            .filter(|&&j| j != i)
            .all(|&j| !d.support.overlap_parity(&seq.steps[j].measurement.support));
        checks.push(DestabCheck {
            step: i,
            anticommutes_own,
            commutes_others,
        });
    }
    DestabReport {
        checks,
        carriers_full_rank,
        carrier_count: carriers.len(),
        frame_rank: k,
    }
}

/// Solves for a destabilizer set for the given carrier steps: X products
/// with odd overlap against their own measurement and even against the
/// others. Used when a sequence ships without explicit destabilizers.
pub fn derive_destabilizers(
    code: &CodeSpec,
    carrier_supports: &[BitVec],
) -> Option<Vec<PauliProduct>> {
    let k = carrier_supports.len();
    let m = Gf2Matrix::from_rows(code.n_tiles, carrier_supports.to_vec());
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let rhs = BitVec::from_indices(k, &[j]);
        let d = m.solve(&rhs)?;
        out.push(PauliProduct::x(d));
    }
    Some(out)
}

/// In-span supports of the given weight, in lexicographic tile order.
/// These are the valid weight-`w` stabilizer measurements of the code.
pub fn enumerate_span_supports(code: &CodeSpec, weight: usize) -> Vec<BitVec> {
    let mut out = Vec::new();
    let n = code.n_tiles;
    let mut combo: Vec<usize> = (0..weight).collect();
    loop {
        let v = BitVec::from_indices(n, &combo);
        if code.decompose_support(&v).is_some() {
            out.push(v);
        }
        // next combination
        let mut i = weight;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + n - weight {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        combo[i] += 1;
        for j in i + 1..weight {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_span_contains(gens: &[PauliProduct], v: &BitVec) -> bool {
        // Enumerate all generator combinations.
        let k = gens.len();
        for combo in 0u32..1 << k {
            let mut acc = BitVec::zeros(v.len());
            for (i, g) in gens.iter().enumerate() {
                if combo >> i & 1 == 1 {
                    acc.xor_assign(&g.support);
                }
            }
            if acc == *v {
                return true;
            }
        }
        false
    }

    #[test]
    fn t15_has_eleven_frame_generators() {
        let code = build_t15();
        assert_eq!(code.frame_rank(), 11);
        assert_eq!(code.n_tiles, 16);
        assert_eq!(code.x_detectors.len(), 4);
    }

    #[test]
    fn z_1star_support_is_upper_half() {
        let s = pattern_support(16, 4, "1***");
        assert_eq!(s, BitVec::from_indices(16, &[8, 9, 10, 11, 12, 13, 14, 15]));
    }

    #[test]
    fn t15_generator_supports_are_independent() {
        let code = build_t15();
        let m = Gf2Matrix::from_rows(
            16,
            code.frame_generators.iter().map(|g| g.support).collect(),
        );
        assert_eq!(m.rank(), 11);
    }

    #[test]
    fn ccz_has_seven_frame_generators() {
        let code = build_ccz();
        assert_eq!(code.frame_rank(), 7);
        assert_eq!(code.n_tiles, 11);
        let m = Gf2Matrix::from_rows(
            11,
            code.frame_generators.iter().map(|g| g.support).collect(),
        );
        assert_eq!(m.rank(), 7);
    }

    #[test]
    fn ccz_bell_stabilizer_support_and_sign() {
        let code = build_ccz();
        let bell = &code.frame_generators[4];
        assert_eq!(bell.support, BitVec::from_indices(11, &[0, 4, 8]));
        assert!(bell.negated);
    }

    #[test]
    fn x_detectors_commute_with_frame_generators() {
        for code in [build_t15(), build_ccz()] {
            for d in &code.x_detectors {
                for g in &code.frame_generators {
                    assert!(
                        !d.support.overlap_parity(&g.support),
                        "{d:?} anticommutes with {g:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn decompose_frame_generator_is_unit_vector() {
        let code = build_t15();
        for (j, g) in code.frame_generators.iter().enumerate() {
            let c = code.decompose_support(&g.support).unwrap();
            assert_eq!(c, BitVec::from_indices(11, &[j]));
        }
    }

    #[test]
    fn decompose_table2_row() {
        let code = build_t15();
        let s = BitVec::from_indices(16, &[3, 7, 8, 12]);
        let c = code.decompose_support(&s).unwrap();
        // Independent check: the coefficients actually reconstruct the support.
        let mut acc = BitVec::zeros(16);
        for j in c.iter_ones() {
            acc.xor_assign(&code.frame_generators[j].support);
        }
        assert_eq!(acc, s);
        assert!(brute_span_contains(&code.frame_generators, &s));
    }

    #[test]
    fn weight_one_output_support_is_outside_span() {
        let code = build_t15();
        let s = BitVec::from_indices(16, &[0]);
        assert!(code.decompose_support(&s).is_none());
        assert!(!brute_span_contains(&code.frame_generators, &s));
    }

    #[test]
    fn hamming_matrix_rank_is_four() {
        let rows: Vec<BitVec> = HAMMING_ENCODING
            .iter()
            .map(|row| {
                BitVec::from_indices(
                    11,
                    &row.iter()
                        .enumerate()
                        .filter_map(|(i, &b)| (b == 1).then_some(i))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let m = Gf2Matrix::from_rows(11, rows);
        assert_eq!(m.rank(), 4);
    }

    #[test]
    fn default_redundancy_reproduces_quoted_products() {
        let code = build_t15();
        let red = hamming_redundancy(&code.frame_generators, &default_hamming_bit_order()).unwrap();
        let expect = [
            pattern_support(16, 4, "*000").xor(&pattern_support(16, 4, "*111")),
            pattern_support(16, 4, "0*00").xor(&pattern_support(16, 4, "1*11")),
            pattern_support(16, 4, "00*0").xor(&pattern_support(16, 4, "11*1")),
            pattern_support(16, 4, "000*").xor(&pattern_support(16, 4, "111*")),
        ];
        assert_eq!(red.len(), 4);
        for (r, e) in red.iter().zip(&expect) {
            assert_eq!(r.support, *e);
            assert!(!r.negated);
            assert!(code.decompose_support(&r.support).is_some());
        }
        assert_eq!(red[0].support, BitVec::from_indices(16, &[0, 7, 8, 15]));
    }

    #[test]
    fn hamming_words_have_distance_three() {
        // Every nonzero 11-bit word plus its 4 check bits has weight >= 3.
        for w in 1u32..1 << 11 {
            let mut weight = w.count_ones();
            for row in &HAMMING_ENCODING {
                let mut bit = 0u32;
                for (i, &r) in row.iter().enumerate() {
                    bit ^= (w >> i & 1) * r as u32;
                }
                weight += bit;
            }
            assert!(weight >= 3, "word {w:#013b} has weight {weight}");
        }
    }

    #[test]
    fn hamming_redundancy_rejects_wrong_generator_count() {
        let code = build_ccz();
        let err = hamming_redundancy(&code.frame_generators, &default_hamming_bit_order());
        assert!(matches!(err, Err(CodeError::GeneratorCount { .. })));
    }

    #[test]
    fn span_support_counts_for_t15() {
        let code = build_t15();
        let all = enumerate_span_supports(&code, 4);
        assert_eq!(all.len(), 140);
        let with_output = all.iter().filter(|s| s.get(0)).count();
        assert_eq!(with_output, 35);
    }

    #[test]
    fn derived_destabilizers_satisfy_overlap_conditions() {
        let code = build_t15();
        let supports: Vec<BitVec> = code.frame_generators.iter().map(|g| g.support).collect();
        let destabs = derive_destabilizers(&code, &supports).unwrap();
        for (j, d) in destabs.iter().enumerate() {
            for (i, s) in supports.iter().enumerate() {
                assert_eq!(d.support.overlap_parity(s), i == j);
            }
        }
    }
}
