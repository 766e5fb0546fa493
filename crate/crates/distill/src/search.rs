//! Randomized exploration of the measurement-sequence design space.
//!
//! Samplers draw weight-4 sequences under the standard 17-step profile
//! (first 14 exclude the output tile, last 3 include it) or with no
//! positional constraint. Each comes in two flavors: `span` draws uniformly
//! from the weight-4 elements of the stabilizer group, `raw` draws uniformly
//! from all weight-4 tile subsets, most of which fall outside the stabilizer
//! span and fail verification at load. The sufficiency probability estimator
//! partitions samples into per-chunk counter-based RNG streams, so the hit
//! count is identical for any thread count.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codes::{enumerate_span_supports, CodeSpec, MeasurementSequence, PauliProduct, Step};
use crate::ftcheck::{
    check_necessity, check_sufficiency, check_sufficiency_system, CheckOptions, FrameSystem,
};
use crate::gf2::BitVec;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("local optimization exhausted its addition budget ({0} additions)")]
    BudgetExhausted(usize),
    #[error("sequence grew past the {0}-step limit")]
    TooLong(usize),
}

/// Positional constraints of the standard 17-measurement profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConstraints {
    pub length: usize,
    pub weight: usize,
    pub prefix_excluding_output: usize,
    pub suffix_including_output: usize,
}

impl SamplerConstraints {
    pub fn std17() -> Self {
        SamplerConstraints {
            length: 17,
            weight: 4,
            prefix_excluding_output: 14,
            suffix_including_output: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SamplerProfile {
    /// Stabilizer-group supports, 14 output-free then 3 output-including.
    SpanStd17,
    /// Stabilizer-group supports, no positional constraint.
    SpanAny17,
    /// Uniform 4-subsets, 14 over tiles 1-15 then 3 of {0}+3-subset.
    RawStd17,
    /// Uniform 4-subsets of all 16 tiles, no positional constraint.
    RawAny17,
}

impl SamplerProfile {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerProfile::SpanStd17 => "span-std17",
            SamplerProfile::SpanAny17 => "span-any17",
            SamplerProfile::RawStd17 => "raw-std17",
            SamplerProfile::RawAny17 => "raw-any17",
        }
    }
}

/// Candidate supports pre-split by output-tile membership, with their frame
/// coefficients cached (`None` for out-of-span raw entries).
pub struct Sampler {
    code: Arc<CodeSpec>,
    profile: SamplerProfile,
    constraints: SamplerConstraints,
    output_free: Vec<(BitVec, Option<BitVec>)>,
    output_incl: Vec<(BitVec, Option<BitVec>)>,
}

fn subsets_of_weight(n: usize, weight: usize) -> Vec<BitVec> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..weight).collect();
    'outer: loop {
        out.push(BitVec::from_indices(n, &combo));
        let mut i = weight;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if combo[i] != i + n - weight {
                break;
            }
            if i == 0 {
                break 'outer;
            }
        }
        combo[i] += 1;
        for j in i + 1..weight {
            combo[j] = combo[j - 1] + 1;
        }
    }
    out
}

impl Sampler {
    pub fn new(code: Arc<CodeSpec>, profile: SamplerProfile) -> Self {
        let constraints = SamplerConstraints::std17();
        let supports: Vec<BitVec> = match profile {
            SamplerProfile::SpanStd17 | SamplerProfile::SpanAny17 => {
                enumerate_span_supports(&code, constraints.weight)
            }
            SamplerProfile::RawStd17 | SamplerProfile::RawAny17 => {
                subsets_of_weight(code.n_tiles, constraints.weight)
            }
        };
        let annotate = |s: &BitVec| (*s, code.decompose_support(s));
        let output_free = supports
            .iter()
            .filter(|s| s.and(&code.output_tiles).is_zero())
            .map(&annotate)
            .collect();
        let output_incl = supports
            .iter()
            .filter(|s| !s.and(&code.output_tiles).is_zero())
            .map(&annotate)
            .collect();
        Sampler {
            code,
            profile,
            constraints,
            output_free,
            output_incl,
        }
    }

    pub fn profile(&self) -> SamplerProfile {
        self.profile
    }

    pub fn constraints(&self) -> SamplerConstraints {
        self.constraints
    }

    pub fn pool_sizes(&self) -> (usize, usize) {
        (self.output_free.len(), self.output_incl.len())
    }

    fn draw<'a>(&'a self, rng: &mut ChaCha8Rng, position: usize) -> &'a (BitVec, Option<BitVec>) {
        let constrained = matches!(
            self.profile,
            SamplerProfile::SpanStd17 | SamplerProfile::RawStd17
        );
        if constrained {
            if position < self.constraints.prefix_excluding_output {
                &self.output_free[rng.gen_range(0..self.output_free.len())]
            } else {
                &self.output_incl[rng.gen_range(0..self.output_incl.len())]
            }
        } else {
            let total = self.output_free.len() + self.output_incl.len();
            let i = rng.gen_range(0..total);
            if i < self.output_free.len() {
                &self.output_free[i]
            } else {
                &self.output_incl[i - self.output_free.len()]
            }
        }
    }

    /// Draws the support/coefficient rows of one sequence into `buf`.
    fn sample_rows(&self, rng: &mut ChaCha8Rng, buf: &mut Vec<(BitVec, Option<BitVec>)>) {
        buf.clear();
        for pos in 0..self.constraints.length {
            buf.push(*self.draw(rng, pos));
        }
    }

    /// Draws one sequence; duplicates are permitted (independent draws).
    pub fn sample_sequence(&self, rng: &mut ChaCha8Rng) -> MeasurementSequence {
        let mut rows = Vec::new();
        self.sample_rows(rng, &mut rows);
        let steps = rows
            .iter()
            .map(|(s, _)| Step::bare(PauliProduct::z(*s)))
            .collect();
        MeasurementSequence::new(Arc::clone(&self.code), steps)
    }
}

/// Binomial estimate of the sufficiency probability.
#[derive(Clone, Copy, Debug)]
pub struct ProbabilityEstimate {
    pub hits: u64,
    pub samples: u64,
    pub point: Option<f64>,
    pub stderr: Option<f64>,
}

impl ProbabilityEstimate {
    fn from_counts(hits: u64, samples: u64) -> Self {
        if samples == 0 {
            return ProbabilityEstimate {
                hits,
                samples,
                point: None,
                stderr: None,
            };
        }
        let p = hits as f64 / samples as f64;
        ProbabilityEstimate {
            hits,
            samples,
            point: Some(p),
            stderr: Some((p * (1.0 - p) / samples as f64).sqrt()),
        }
    }
}

/// A sufficient sequence found during estimation, with its layout metrics.
#[derive(Clone, Debug)]
pub struct SearchHit {
    pub sample_index: u64,
    pub sequence: MeasurementSequence,
    pub metrics: StageMetrics,
}

const CHUNK: u64 = 8192;

fn rng_for_chunk(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk.wrapping_add(1));
    rng
}

/// Counts sufficient sequences among `n_samples` seeded draws. Deterministic
/// for a fixed `(profile, seed, n_samples)` regardless of thread count.
/// Sufficient sequences are returned as hits, ordered by sample index.
pub fn estimate_sufficiency_probability(
    sampler: &Sampler,
    n_samples: u64,
    seed: u64,
    max_errors: usize,
) -> (ProbabilityEstimate, Vec<SearchHit>) {
    estimate_with_progress(sampler, n_samples, seed, max_errors, None)
}

/// As [`estimate_sufficiency_probability`], reporting the cumulative sample
/// count after each finished chunk. Progress callbacks observe scheduling
/// order; the estimate itself does not.
pub fn estimate_with_progress(
    sampler: &Sampler,
    n_samples: u64,
    seed: u64,
    max_errors: usize,
    progress: Option<&(dyn Fn(u64) + Sync)>,
) -> (ProbabilityEstimate, Vec<SearchHit>) {
    let n_chunks = n_samples.div_ceil(CHUNK);
    let done = std::sync::atomic::AtomicU64::new(0);
    let results: Vec<(u64, Vec<SearchHit>)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng_for_chunk(seed, chunk);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(n_samples);
            let mut hits = 0u64;
            let mut found = Vec::new();
            let mut rows: Vec<(BitVec, Option<BitVec>)> = Vec::with_capacity(17);
            let opts = CheckOptions {
                max_errors,
                early_exit: true,
                ..Default::default()
            };
            for idx in lo..hi {
                sampler.sample_rows(&mut rng, &mut rows);
                if rows.iter().any(|(_, c)| c.is_none()) {
                    continue; // outside the stabilizer span: rejected at load
                }
                let sys = FrameSystem::from_parts(
                    Arc::clone(&sampler.code),
                    rows.iter().map(|(_, c)| c.unwrap()).collect(),
                    rows.iter().map(|(s, _)| *s).collect(),
                );
                if check_sufficiency_system(&sys, opts).sufficient {
                    hits += 1;
                    let steps: Vec<Step> = rows
                        .iter()
                        .map(|(s, _)| Step::bare(PauliProduct::z(*s)))
                        .collect();
                    let seq = MeasurementSequence::new(Arc::clone(&sampler.code), steps);
                    let metrics = stage_metrics(&seq);
                    found.push(SearchHit {
                        sample_index: idx,
                        sequence: seq,
                        metrics,
                    });
                }
            }
            if let Some(report) = progress {
                let total =
                    done.fetch_add(hi - lo, std::sync::atomic::Ordering::Relaxed) + (hi - lo);
                report(total);
            }
            (hits, found)
        })
        .collect();
    let hits: u64 = results.iter().map(|(h, _)| h).sum();
    let mut found: Vec<SearchHit> = results.into_iter().flat_map(|(_, f)| f).collect();
    found.sort_by_key(|h| h.sample_index);
    (ProbabilityEstimate::from_counts(hits, n_samples), found)
}

/// Layout metrics of a sequence against the three-stage floor plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageMetrics {
    /// Longest prefix whose support union covers at most 9 distinct
    /// non-output tiles.
    pub stage1_prefix: usize,
    /// Tiles covered by that prefix.
    pub stage1_union: BitVec,
    /// Greedy left-to-right packing of the middle steps into runs of
    /// pairwise support-disjoint measurements.
    pub stage2_clusters: usize,
    pub cluster_sizes: Vec<usize>,
    /// The last three steps all touch an output tile.
    pub suffix_ok: bool,
}

pub fn stage_metrics(seq: &MeasurementSequence) -> StageMetrics {
    let code = &seq.code;
    let n = seq.len();
    let suffix = 3.min(n);
    let input_mask = code.input_tiles();

    let mut union = BitVec::zeros(code.n_tiles);
    let mut stage1_prefix = 0;
    let mut stage1_union = union;
    for (i, s) in seq.supports().enumerate() {
        let mut next = union;
        for q in s.and(&input_mask).iter_ones() {
            next.set(q, true);
        }
        if next.weight() > 9 {
            break;
        }
        union = next;
        stage1_prefix = i + 1;
        stage1_union = union;
    }

    let mid_end = n.saturating_sub(suffix);
    let mid_start = stage1_prefix.min(mid_end);
    let mut clusters = 0;
    let mut cluster_sizes = Vec::new();
    let mut cluster_union = BitVec::zeros(code.n_tiles);
    let mut size = 0usize;
    for s in seq.steps[mid_start..mid_end]
        .iter()
        .map(|st| &st.measurement.support)
    {
        if size > 0 && !cluster_union.disjoint_with(s) {
            cluster_sizes.push(size);
            cluster_union = BitVec::zeros(code.n_tiles);
            size = 0;
        }
        if size == 0 {
            clusters += 1;
        }
        for q in s.iter_ones() {
            cluster_union.set(q, true);
        }
        size += 1;
    }
    if size > 0 {
        cluster_sizes.push(size);
    }

    let suffix_ok = suffix > 0
        && seq.steps[n - suffix..]
            .iter()
            .all(|st| !st.measurement.support.and(&code.output_tiles).is_zero());

    StageMetrics {
        stage1_prefix,
        stage1_union,
        stage2_clusters: clusters,
        cluster_sizes,
        suffix_ok,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OptimizeBudget {
    pub max_additions: usize,
}

impl Default for OptimizeBudget {
    fn default() -> Self {
        OptimizeBudget { max_additions: 500 }
    }
}

/// Drives a sequence to a locally optimal one: add random in-span supports
/// while insufficient, drop the first unnecessary step while any, stop when
/// sufficient with every step necessary.
pub fn local_optimize(
    seq: &MeasurementSequence,
    rng: &mut ChaCha8Rng,
    budget: OptimizeBudget,
) -> Result<MeasurementSequence, SearchError> {
    let code = Arc::clone(&seq.code);
    let weight = if code.id == crate::codes::CodeId::T15 {
        4
    } else {
        3
    };
    let pool = enumerate_span_supports(&code, weight);
    let opts = CheckOptions {
        early_exit: true,
        ..Default::default()
    };
    let mut current = seq.clone();
    let mut additions = 0usize;
    loop {
        if check_sufficiency(&current, opts).sufficient {
            let necessity = check_necessity(&current, opts);
            match necessity.iter().position(|&b| !b) {
                None => return Ok(current),
                Some(i) => {
                    current = current.without_step(i);
                }
            }
        } else {
            if additions >= budget.max_additions {
                return Err(SearchError::BudgetExhausted(additions));
            }
            if current.len() >= BitVec::MAX_LEN {
                return Err(SearchError::TooLong(BitVec::MAX_LEN));
            }
            let support = pool[rng.gen_range(0..pool.len())];
            let at = rng.gen_range(0..=current.len());
            current
                .steps
                .insert(at, Step::bare(PauliProduct::z(support)));
            additions += 1;
        }
    }
}
