//! Acceptance suite: one test per criterion, each printing a pass line with
//! its elapsed time (run with `--nocapture` to see them). Criterion 12 is
//! the extended statistical reproduction and stays behind `--ignored`; its
//! sample counts can be overridden through `DISTILL_C12_*` variables.

use std::sync::Arc;
use std::time::{Duration, Instant};

use distill::codes::{
    build_t15, default_hamming_bit_order, hamming_redundancy, verify_destabilizers,
    MeasurementSequence, Step,
};
use distill::ftcheck::{
    check_ccz, check_necessity, check_sufficiency, CheckOptions, FaultLocation,
};
use distill::gf2::BitVec;
use distill::model::{
    cost_table, multi_level_time, spacetime_summary, AmplificationRegime, DistillationModel, Levels,
};
use distill::oracle::phasepoly::{verify_relations, PhasePolyOperator, RelationSet};
use distill::oracle::sim::{crossvalidate, simulate_circuit, CrossvalSpec, SimPolicy};
use distill::oracle::statevec::build_code_state;
use distill::search::{estimate_sufficiency_probability, stage_metrics, Sampler, SamplerProfile};
use distill::seqfile;

fn table2() -> MeasurementSequence {
    seqfile::parse(include_str!("../fixtures/t15_table2.seq")).unwrap()
}

fn table3() -> MeasurementSequence {
    seqfile::parse(include_str!("../fixtures/ccz_table3.seq")).unwrap()
}

fn generators_x3() -> MeasurementSequence {
    seqfile::parse(include_str!("../fixtures/t15_generators_x3.seq")).unwrap()
}

fn pass(criterion: u32, label: &str, start: Instant, budget: Option<Duration>) {
    let elapsed = start.elapsed();
    println!("ACCEPTANCE {criterion:02} {label}: PASS ({elapsed:.2?})");
    if let Some(budget) = budget {
        assert!(
            elapsed <= budget,
            "criterion {criterion} exceeded its runtime budget: {elapsed:.2?} > {budget:.2?}"
        );
    }
}

#[test]
fn criterion_01_table2_necessary_and_sufficient() {
    let start = Instant::now();
    let seq = table2();
    let opts = CheckOptions::default();
    let report = check_sufficiency(&seq, opts);
    assert!(report.sufficient, "{:?}", report.reason);
    let necessity = check_necessity(&seq, opts);
    assert_eq!(necessity.len(), 17);
    assert!(necessity.iter().all(|&b| b), "{necessity:?}");
    pass(
        1,
        "table2 sufficient, 17/17 necessary",
        start,
        Some(Duration::from_secs(1)),
    );
}

#[test]
fn criterion_02_triple_repetition_baseline() {
    let start = Instant::now();
    let seq = generators_x3();
    assert_eq!(seq.len(), 33);
    let opts = CheckOptions::default();
    assert!(check_sufficiency(&seq, opts).sufficient);
    let necessity = check_necessity(&seq, opts);
    assert!(necessity.iter().all(|&b| b));
    pass(
        2,
        "33-step triple repetition necessary and sufficient",
        start,
        Some(Duration::from_secs(5)),
    );
}

#[test]
fn criterion_03_hamming_encoding_is_insufficient() {
    let start = Instant::now();
    let code = Arc::new(build_t15());
    let red = hamming_redundancy(&code.frame_generators, &default_hamming_bit_order()).unwrap();
    let mut steps: Vec<Step> = code
        .frame_generators
        .iter()
        .map(|g| Step::bare(*g))
        .collect();
    steps.extend(red.iter().map(|r| Step::bare(*r)));
    let seq = MeasurementSequence::new(code, steps);
    assert_eq!(seq.len(), 15);
    let report = check_sufficiency(&seq, CheckOptions::default());
    assert!(
        !report.sufficient,
        "default Hamming ordering unexpectedly sufficient"
    );
    let has_x_violation = report.violations.iter().any(|p| {
        p.locations
            .iter()
            .any(|l| matches!(l, FaultLocation::XError { .. }))
    });
    assert!(has_x_violation, "violations: {:?}", report.violations);
    pass(
        3,
        "15-step Hamming encoding fails with an X-error violation",
        start,
        None,
    );
}

#[test]
fn criterion_04_table3_all_orders() {
    let start = Instant::now();
    let seq = table3();
    let report = check_ccz(&seq, true).unwrap();
    assert!(report.pass(), "{report:?}");
    assert_eq!(report.orders_checked, 40321); // listed order + all 8! permutations
    assert!(report.participation.iter().all(|&c| c <= 3));
    let trimmed = seq.without_step(7);
    let trimmed_report = check_ccz(&trimmed, false).unwrap();
    assert!(!trimmed_report.pass());
    assert!(!trimmed_report.parity_coverage_ok || !trimmed_report.measurement_count_ok);
    pass(
        4,
        "table3 passes all 8! orders; redundancy removal fails",
        start,
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn criterion_05_destabilizer_checks() {
    let start = Instant::now();
    let t2 = table2();
    let report = verify_destabilizers(&t2);
    assert_eq!(report.carrier_count, 11);
    assert!(report.pass(), "{report:?}");
    let omitted = BitVec::from_indices(16, &[3, 5, 6, 7, 13]);
    for step in &t2.steps {
        if let Some(d) = &step.destabilizer {
            assert!(
                d.support.and(&omitted).is_zero(),
                "destabilizer {:?} touches an omitted tile",
                d
            );
        }
    }
    let t3 = table3();
    let report = verify_destabilizers(&t3);
    assert_eq!(report.carrier_count, 7);
    assert!(report.pass(), "{report:?}");
    assert!(t3.steps[7].destabilizer.is_none());
    pass(
        5,
        "table2 and table3 destabilizers pass; omitted tiles untouched",
        start,
        None,
    );
}

#[test]
fn criterion_06_hamming_redundancy_reproduction() {
    let start = Instant::now();
    let code = build_t15();
    let red = hamming_redundancy(&code.frame_generators, &default_hamming_bit_order()).unwrap();
    let expect = [
        BitVec::from_indices(16, &[0, 7, 8, 15]),
        BitVec::from_indices(16, &[0, 4, 11, 15]),
        BitVec::from_indices(16, &[0, 2, 13, 15]),
        BitVec::from_indices(16, &[0, 1, 14, 15]),
    ];
    assert_eq!(red.len(), 4);
    for (r, e) in red.iter().zip(&expect) {
        assert_eq!(r.support, *e);
    }
    pass(
        6,
        "default Hamming redundancy products reproduced",
        start,
        None,
    );
}

#[test]
fn criterion_07_table2_stage_metrics() {
    let start = Instant::now();
    let seq = table2();
    let m = stage_metrics(&seq);
    assert!(m.stage1_prefix >= 4);
    assert_eq!(
        m.stage1_union,
        BitVec::from_indices(16, &[1, 3, 4, 5, 6, 7, 8, 12, 15])
    );
    assert_eq!(m.stage2_clusters, 4);
    // The greedy clusters must match the stage labels 2a..2d.
    let labels: Vec<&str> = seq.steps[4..14]
        .iter()
        .map(|s| s.stage.as_deref().unwrap())
        .collect();
    let mut boundaries = vec![0usize];
    for size in &m.cluster_sizes {
        boundaries.push(boundaries.last().unwrap() + size);
    }
    for w in boundaries.windows(2) {
        let cluster: std::collections::HashSet<&&str> = labels[w[0]..w[1]].iter().collect();
        assert_eq!(cluster.len(), 1, "cluster spans stage labels {labels:?}");
    }
    assert!(m.suffix_ok);
    for step in &seq.steps[14..] {
        assert!(step.measurement.support.get(0));
    }
    pass(
        7,
        "table2 stage metrics: prefix 4, clusters 2a-2d, output suffix",
        start,
        None,
    );
}

#[test]
fn criterion_08_oracle_identities_and_noiseless_runs() {
    let start = Instant::now();
    for (set, count) in [(RelationSet::T15, 3), (RelationSet::Ccz, 5)] {
        let report = verify_relations(set);
        assert_eq!(report.checks.len(), count);
        for c in &report.checks {
            assert_eq!(c.phase, Some(0), "{}", c.name);
        }
    }
    // Tesseract state invariance under T on every tile.
    let code = build_t15();
    let state = build_code_state(&code, &BitVec::zeros(11)).unwrap();
    let mut amps = state.amps().to_vec();
    PhasePolyOperator::t_product(16, 0xFFFF).apply(&mut amps);
    let diff: f64 = amps
        .iter()
        .zip(state.amps())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    assert!(diff.sqrt() < 1e-9);
    // Noiseless distillation of both tables over 32 sampled frames.
    let policy = SimPolicy {
        frames: 32,
        seed: 2024,
        fidelity_floor: 1e-6,
    };
    for seq in [table2(), table3()] {
        let out = simulate_circuit(&seq, None, policy).unwrap();
        assert_eq!(out.detected_fraction, 0.0);
        assert!(out.undetected_exists);
        assert!(
            out.min_undetected_fidelity > 1.0 - 1e-9,
            "fidelity {}",
            out.min_undetected_fidelity
        );
    }
    pass(
        8,
        "identities exact; noiseless fidelity 1 over 32 frames",
        start,
        None,
    );
}

#[test]
fn criterion_09_crossvalidation() {
    let start = Instant::now();
    let policy = SimPolicy {
        frames: 4,
        seed: 77,
        fidelity_floor: 1e-6,
    };
    let t2 = crossvalidate(
        &table2(),
        CrossvalSpec {
            size1: true,
            pairs: 2000,
            policy,
        },
    )
    .unwrap();
    assert!(t2.patterns_checked >= 2287);
    assert!(t2.pass(), "table2 disagreements: {:?}", t2.disagreements);
    let t3 = crossvalidate(
        &table3(),
        CrossvalSpec {
            size1: true,
            pairs: 0,
            policy,
        },
    )
    .unwrap();
    assert!(t3.pass(), "table3 disagreements: {:?}", t3.disagreements);
    pass(
        9,
        "verifier agrees with the state-vector oracle",
        start,
        Some(Duration::from_secs(600)),
    );
}

#[test]
fn criterion_10_model_golden_values() {
    let start = Instant::now();
    let m = DistillationModel::default();
    let em = &m.error_model;
    assert_eq!(em.logical_error_rate(0.007, 5).unwrap(), 0.3);
    assert_eq!(em.logical_error_rate(0.007, 4).unwrap(), 0.09);
    assert_eq!(m.min_base_distance(7e-4, 7e-4).unwrap().d0, 5);
    assert!((m.ideal_threshold() - 0.16903).abs() < 1e-4);
    let p_star = m.amplification_tangency();
    assert!((p_star - 7.23e-8).abs() / 7.23e-8 < 0.02, "p* = {p_star}");
    let coeff = m.amplification_analysis(1e-12, 7, 1.0).fixed_point.unwrap() / 1e-12;
    assert!(
        (coeff - 1.384e8).abs() / 1.384e8 < 0.01,
        "coefficient {coeff}"
    );
    let ratio = m
        .amplification_analysis(7e-4, 7, 100.0)
        .d_out_ratio
        .unwrap();
    assert!((ratio - 0.500).abs() < 0.005, "ratio {ratio}");
    for d in [5.0, 11.0, 31.0] {
        assert_eq!(multi_level_time(5.0 * d, 0.0, Levels::Infinite), 15.0 * d);
    }
    for d in [3u64, 9, 27] {
        let s = spacetime_summary(d);
        let d3 = (d * d * d) as f64;
        assert_eq!(s.t_infinite, 45.0 * d3);
        assert_eq!(s.ccz, 63.0 * d3);
        let table = cost_table(d, 1, 1);
        let t_prep = table.iter().find(|e| e.gate == "|T> preparation").unwrap();
        assert_eq!(t_prep.spacetime(), 45.0 * d3);
        let c_prep = table
            .iter()
            .find(|e| e.gate == "|CCZ> preparation")
            .unwrap();
        assert_eq!(c_prep.spacetime(), 63.0 * d3);
    }
    pass(10, "model golden values", start, None);
}

#[test]
fn criterion_11_model_property_suite() {
    let start = Instant::now();
    let m = DistillationModel::default();
    // Recursion/ratio identity, one step at a time in log space (an
    // absolute log difference is a relative Omega difference).
    let lse = |a: f64, b: f64| {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    };
    for &d0 in &[3u64, 5, 7] {
        for &p in &[1e-8, 1e-5, 7e-4] {
            let curve = m.log_error_curve(p, d0, 4).unwrap();
            for w in curve.windows(2) {
                let ln_omega = w[0].2 - w[0].1;
                let ln_omega3 = w[1].2 - w[1].1;
                let ln_rec = (450.0 * p).ln() + 3.0 * lse(ln_omega, 67.5f64.ln());
                assert!(
                    (ln_omega3 - ln_rec).abs() < 1e-12,
                    "d0={d0} p={p}: {ln_omega3} vs {ln_rec}"
                );
            }
        }
    }
    // Threshold and minimum-distance formulations agree.
    for &p in &[1e-6, 1e-5, 1e-4, 7e-4, 2e-3, 5e-3] {
        let min_d0 = m.min_base_distance(p, p).map(|r| r.d0);
        for &d0 in &[3u64, 5, 7, 9] {
            let feasible = m.distillation_threshold(p, d0).unwrap().feasible;
            let bound_ok = matches!(min_d0, Ok(b) if b <= d0);
            assert_eq!(feasible, bound_ok, "p={p}, d0={d0}");
        }
    }
    pass(11, "omega identity and threshold consistency", start, None);
}

/// Extended statistical reproduction. Run with:
/// `cargo test --release --test acceptance -- --ignored --nocapture`
/// Sample counts come from DISTILL_C12_UNCONSTRAINED_SAMPLES and
/// DISTILL_C12_CONSTRAINED_SAMPLES (defaults 5e8 and 2e9).
#[test]
#[ignore]
fn criterion_12_statistical_reproduction() {
    let start = Instant::now();
    let env_u64 = |name: &str, default: u64| {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(default)
    };
    let seed = 20250810;
    let code = Arc::new(build_t15());

    let n_any = env_u64("DISTILL_C12_UNCONSTRAINED_SAMPLES", 500_000_000);
    let any = Sampler::new(Arc::clone(&code), SamplerProfile::SpanAny17);
    let (est_any, _) = estimate_sufficiency_probability(&any, n_any, seed, 2);
    println!(
        "c12 unconstrained (span-any17): samples={} hits={} point={:?} stderr={:?}",
        est_any.samples, est_any.hits, est_any.point, est_any.stderr
    );
    let combined = (est_any.stderr.unwrap().powi(2) + (0.1e-6f64).powi(2)).sqrt();
    assert!(
        (est_any.point.unwrap() - 3.8e-6).abs() <= 3.0 * combined,
        "unconstrained rate {:?} is not within 3 combined errors of 3.8e-6",
        est_any.point
    );

    let n_std = env_u64("DISTILL_C12_CONSTRAINED_SAMPLES", 2_000_000_000);
    let std = Sampler::new(Arc::clone(&code), SamplerProfile::SpanStd17);
    let (est_std, hits) = estimate_sufficiency_probability(&std, n_std, seed, 2);
    println!(
        "c12 constrained (span-std17): samples={} hits={} point={:?} stderr={:?}",
        est_std.samples, est_std.hits, est_std.point, est_std.stderr
    );
    let combined = (est_std.stderr.unwrap().powi(2) + (0.08e-7f64).powi(2)).sqrt();
    assert!(
        (est_std.point.unwrap() - 6.36e-7).abs() <= 3.0 * combined,
        "constrained rate {:?} is not within 3 combined errors of 6.36e-7",
        est_std.point
    );

    // Conditional stage-1 fraction over the accumulated sufficient log.
    let stage1 = hits.iter().filter(|h| h.metrics.stage1_prefix >= 4).count();
    let frac = stage1 as f64 / hits.len() as f64;
    let frac_err = (frac * (1.0 - frac) / hits.len() as f64).sqrt();
    println!(
        "c12 stage-1 fraction: {stage1}/{} = {frac:.4} +- {frac_err:.4}",
        hits.len()
    );
    let combined = (frac_err.powi(2) + (0.3e-2f64).powi(2)).sqrt();
    assert!(
        (frac - 6.5e-2).abs() <= 3.0 * combined,
        "stage-1 fraction {frac}"
    );
    pass(12, "statistical reproduction", start, None);
}

#[test]
fn criterion_13_curve_regimes() {
    let start = Instant::now();
    let m = DistillationModel::default();
    for &p in &[1e-3, 1e-4] {
        let d0 = m.min_base_distance(p, p).unwrap().d0;
        let levels = 5;
        let curve = m.magic_error_curve(p, d0, None, levels).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 < w[0].1, "p_M not decreasing at p={p}: {curve:?}");
        }
        assert_eq!(
            m.amplification_analysis(p, d0, 1.0).regime,
            AmplificationRegime::Growing
        );
        let omega = m.omega_curve(p, d0, levels).unwrap();
        for w in omega.windows(2) {
            assert!(w[1].1 > w[0].1, "omega not growing at p={p}");
        }
        let time = m.expected_time_curve(p, d0, levels).unwrap();
        for point in &time[1..] {
            let d = point.d as f64;
            assert!(
                point.expected >= 5.0 * d,
                "expected {} below 5d at p={p}",
                point.expected
            );
            assert!(
                point.expected <= 15.0 * d * 1.6,
                "expected {} above 1.6 * 15d at p={p}",
                point.expected
            );
        }
    }
    pass(
        13,
        "curve regimes: p_M falls, omega grows, time within bounds",
        start,
        None,
    );
}
