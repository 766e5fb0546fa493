//! Command-line entry point.
//!
//! Subcommands map one-to-one onto the library modules; every stochastic
//! command takes an explicit seed and its artifacts are byte-identical for
//! identical configuration. Exit codes: 0 pass, 1 verification failure,
//! 2 usage or domain error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use distill::codes::{build_code, verify_destabilizers, CodeId};
use distill::ftcheck::{check_ccz, check_necessity, check_sufficiency, CheckOptions};
use distill::model::{cost_table, spacetime_summary, DistillationModel};
use distill::oracle::phasepoly::{verify_relations, RelationSet};
use distill::oracle::sim::{crossvalidate, CrossvalSpec, SimPolicy};
use distill::search::{
    estimate_with_progress, local_optimize, stage_metrics, OptimizeBudget, Sampler, SamplerProfile,
};
use distill::seqfile;

#[derive(Parser)]
#[command(
    name = "distill",
    version,
    about = "Verify, search, and cost fault-tolerant magic state distillation sequences"
)]
struct Cli {
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a sequence file for fault-tolerance sufficiency and necessity.
    Verify(VerifyArgs),
    /// Check the distance-2 requirements of a CCZ sequence.
    CczVerify(CczVerifyArgs),
    /// Sample random sequences and estimate the sufficiency probability.
    Search(SearchArgs),
    /// Cross-validate the verifier against the state-vector oracle.
    Crossval(CrossvalArgs),
    /// Verify the non-Abelian stabilizer commutation identities.
    Relations(RelationsArgs),
    /// Emit error and time curves of the recursive distillation model.
    Analyze(AnalyzeArgs),
    /// Emit the gate cost table at a given code distance.
    Cost(CostArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Sequence file to check.
    #[arg(long)]
    seq: PathBuf,
    /// Largest fault pattern size to enumerate.
    #[arg(long, default_value_t = 2)]
    max_errors: usize,
    /// Also place X errors on output tiles.
    #[arg(long)]
    include_output_tiles: bool,
    /// Skip the per-step necessity pass.
    #[arg(long)]
    skip_necessity: bool,
}

#[derive(Args)]
struct CczVerifyArgs {
    #[arg(long)]
    seq: PathBuf,
    /// Re-check the single-fault criteria for every measurement order.
    #[arg(long)]
    all_orders: bool,
}

#[derive(Args)]
struct SearchArgs {
    /// Sampling profile.
    #[arg(long, value_enum, default_value_t = SamplerProfile::SpanStd17)]
    profile: SamplerProfile,
    #[arg(long)]
    samples: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    max_errors: usize,
    /// Locally optimize each hit (trim unnecessary measurements).
    #[arg(long)]
    optimize: bool,
    /// Append one record per sufficient sequence found.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write the summary row as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Report progress to stderr every this many samples.
    #[arg(long)]
    progress: Option<u64>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Frame samples per pattern.
    #[arg(long, default_value_t = 4)]
    frames: usize,
    /// Random size-2 patterns to add to the full size-1 sweep.
    #[arg(long, default_value_t = 0)]
    pairs: usize,
    /// Skip the exhaustive size-1 sweep.
    #[arg(long)]
    skip_size1: bool,
}

#[derive(Args)]
struct RelationsArgs {
    /// Identity set: t15, ccz, or all.
    #[arg(long, default_value = "all")]
    set: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Physical error rate. When omitted, curves are emitted for the
    /// illustrative defaults 1e-3 and 1e-4.
    #[arg(long)]
    p: Option<f64>,
    /// Base code distance (odd). Defaults to the smallest distance
    /// satisfying the base-distance bound at p.
    #[arg(long)]
    d0: Option<u64>,
    /// Recursion levels.
    #[arg(long, default_value_t = 4)]
    levels: u32,
    /// Error-curve CSV destination (stdout when omitted).
    #[arg(long)]
    out_errors: Option<PathBuf>,
    /// Time-curve CSV destination (not emitted when omitted).
    #[arg(long)]
    out_time: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Code distance.
    #[arg(long)]
    d: u64,
    /// Ancilla tiles along the path of a multi-qubit gate.
    #[arg(long, default_value_t = 1)]
    path_length: u64,
    /// Targets of a CZ^n gate.
    #[arg(long, default_value_t = 1)]
    targets: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum RunError {
    Usage(String),
}

impl<E: std::error::Error> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError::Usage(e.to_string())
    }
}

fn write_artifact(path: &Option<PathBuf>, content: &str) -> Result<(), RunError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(RunError::from),
        None => {
            print!("{content}");
            std::io::stdout().flush().map_err(RunError::from)
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.12e}")
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, RunError> {
    let seq = seqfile::load(&args.seq)?;
    let opts = CheckOptions {
        max_errors: args.max_errors,
        include_output_tiles: args.include_output_tiles,
        ..Default::default()
    };
    println!("seq={}", args.seq.display());
    println!("code={}", seq.code.id);
    println!("steps={}", seq.len());
    let report = check_sufficiency(&seq, opts);
    println!("sufficient={}", report.sufficient);
    if let Some(reason) = &report.reason {
        println!("reason={reason:?}");
    }
    for (i, v) in report.violations.iter().enumerate() {
        println!("violation_{i}={v}");
    }
    let carriers = seq.destab_carrier_indices();
    if !carriers.is_empty() {
        let destab = verify_destabilizers(&seq);
        println!("destabilizers={}", carriers.len());
        println!("destab_checks_pass={}", destab.pass());
    }
    if report.sufficient && !args.skip_necessity {
        let necessity = check_necessity(&seq, opts);
        let count = necessity.iter().filter(|&&b| b).count();
        println!("necessary_count={count}");
        println!("necessary_total={}", necessity.len());
        let bits: String = necessity
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        println!("necessary_bits={bits}");
    }
    Ok(report.sufficient)
}

fn cmd_ccz_verify(args: &CczVerifyArgs) -> Result<bool, RunError> {
    let seq = seqfile::load(&args.seq)?;
    if seq.code.id != CodeId::Ccz {
        return Err(RunError::Usage(
            "ccz-verify expects a `code ccz` sequence".into(),
        ));
    }
    let report = check_ccz(&seq, args.all_orders)?;
    println!("seq={}", args.seq.display());
    println!("steps={}", report.n_steps);
    println!("frame_rank={}", report.frame_rank);
    println!("measurement_count_ok={}", report.measurement_count_ok);
    println!("parity_coverage_ok={}", report.parity_coverage_ok);
    println!(
        "max_participation={}",
        report.participation.iter().max().copied().unwrap_or(0)
    );
    println!("participation_ok={}", report.participation_ok);
    println!(
        "single_pattern_violations={}",
        report.single_pattern_violations.len()
    );
    println!("orders_checked={}", report.orders_checked);
    if let Some(order) = &report.failing_order {
        println!("failing_order={order:?}");
    }
    println!("pass={}", report.pass());
    Ok(report.pass())
}

fn cmd_search(args: &SearchArgs) -> Result<bool, RunError> {
    if args.optimize && args.log.is_none() {
        return Err(RunError::Usage(
            "--optimize writes to the hit log; pass --log".into(),
        ));
    }
    let code = Arc::new(build_code(CodeId::T15));
    let sampler = Sampler::new(code, args.profile);
    let total = args.samples;
    let reporter = args.progress.map(|every| {
        let last = std::sync::atomic::AtomicU64::new(0);
        move |done: u64| {
            let prev = last.load(std::sync::atomic::Ordering::Relaxed);
            if done / every > prev / every || done == total {
                last.store(done, std::sync::atomic::Ordering::Relaxed);
                eprintln!("progress: {done}/{total} samples");
            }
        }
    });
    let (estimate, hits) = estimate_with_progress(
        &sampler,
        args.samples,
        args.seed,
        args.max_errors,
        reporter.as_ref().map(|r| r as &(dyn Fn(u64) + Sync)),
    );
    println!("profile={}", args.profile.name());
    println!("seed={}", args.seed);
    println!("samples={}", estimate.samples);
    println!("hits={}", estimate.hits);
    match (estimate.point, estimate.stderr) {
        (Some(p), Some(e)) => {
            println!("point={}", fmt_f(p));
            println!("stderr={}", fmt_f(e));
        }
        _ => println!("point=absent"),
    }

    if let Some(log_path) = &args.log {
        let mut log = String::new();
        log.push_str(&format!(
            "# search hits: profile={} seed={} samples={}\n",
            args.profile.name(),
            args.seed,
            args.samples
        ));
        for hit in &hits {
            let steps: Vec<String> = hit
                .sequence
                .steps
                .iter()
                .map(seqfile::format_step)
                .collect();
            log.push_str(&format!(
                "hit sample={} stage1_prefix={} stage2_clusters={} suffix_ok={} steps={}\n",
                hit.sample_index,
                hit.metrics.stage1_prefix,
                hit.metrics.stage2_clusters,
                hit.metrics.suffix_ok,
                steps.join("|")
            ));
            if args.optimize {
                let mut rng = rand::SeedableRng::seed_from_u64(args.seed ^ hit.sample_index);
                match local_optimize(&hit.sequence, &mut rng, OptimizeBudget::default()) {
                    Ok(opt) => {
                        let m = stage_metrics(&opt);
                        let steps: Vec<String> =
                            opt.steps.iter().map(seqfile::format_step).collect();
                        log.push_str(&format!(
                            "opt sample={} steps_len={} stage1_prefix={} steps={}\n",
                            hit.sample_index,
                            opt.len(),
                            m.stage1_prefix,
                            steps.join("|")
                        ));
                    }
                    Err(e) => {
                        log.push_str(&format!("opt sample={} failed={e}\n", hit.sample_index))
                    }
                }
            }
        }
        use std::fs::OpenOptions;
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)?;
        f.write_all(log.as_bytes())?;
    }

    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("profile,seed,samples,hits,point,stderr\n");
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            args.profile.name(),
            args.seed,
            estimate.samples,
            estimate.hits,
            estimate.point.map(fmt_f).unwrap_or_default(),
            estimate.stderr.map(fmt_f).unwrap_or_default(),
        ));
        std::fs::write(csv_path, csv)?;
    }
    Ok(true)
}

fn cmd_crossval(args: &CrossvalArgs) -> Result<bool, RunError> {
    let seq = seqfile::load(&args.seq)?;
    let spec = CrossvalSpec {
        size1: !args.skip_size1,
        pairs: args.pairs,
        policy: SimPolicy {
            frames: args.frames,
            seed: args.seed,
            fidelity_floor: 1e-6,
        },
    };
    let report = crossvalidate(&seq, spec)?;
    println!("seq={}", args.seq.display());
    println!("seed={}", args.seed);
    println!("frames={}", args.frames);
    println!("patterns={}", report.patterns_checked);
    println!("disagreements={}", report.disagreements.len());
    for d in &report.disagreements {
        println!(
            "disagreement pattern={} verdict={:?} detected={} min_fidelity={}",
            d.pattern,
            d.verdict,
            d.outcome.detected_fraction,
            fmt_f(d.outcome.min_undetected_fidelity)
        );
    }
    println!("pass={}", report.pass());
    Ok(report.pass())
}

fn cmd_relations(args: &RelationsArgs) -> Result<bool, RunError> {
    let sets: Vec<RelationSet> = match args.set.as_str() {
        "t15" => vec![RelationSet::T15],
        "ccz" => vec![RelationSet::Ccz],
        "all" => vec![RelationSet::T15, RelationSet::Ccz],
        other => return Err(RunError::Usage(format!("unknown relation set `{other}`"))),
    };
    let mut all_pass = true;
    for set in sets {
        let report = verify_relations(set);
        for c in &report.checks {
            match c.phase {
                Some(k) => println!("relation pass phase={k} name={}", c.name),
                None => println!("relation FAIL name={}", c.name),
            }
        }
        all_pass &= report.pass();
    }
    println!("all_pass={all_pass}");
    Ok(all_pass)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<bool, RunError> {
    let model = DistillationModel::default();
    // Parameter sets: either the requested p, or the illustrative defaults.
    let ps: Vec<(f64, bool)> = match args.p {
        Some(p) => vec![(p, false)],
        None => vec![(1e-3, true), (1e-4, true)],
    };
    let mut runs = Vec::new();
    for &(p, illustrative) in &ps {
        let d0 = match args.d0 {
            Some(d0) => d0,
            None => model.min_base_distance(p, p)?.d0,
        };
        runs.push((p, d0, illustrative));
    }

    let mut errors_csv = String::from("d,p_L,p_M,omega\n");
    let mut time_csv = String::from("d,nominal_cycles,expected_cycles\n");
    for &(p, d0, illustrative) in &runs {
        if runs.len() > 1 {
            let note = if illustrative {
                " (illustrative default)"
            } else {
                ""
            };
            errors_csv.push_str(&format!("# p={} d0={d0}{note}\n", fmt_f(p)));
            time_csv.push_str(&format!("# p={} d0={d0}{note}\n", fmt_f(p)));
        }
        let errors = model.magic_error_curve(p, d0, None, args.levels)?;
        let omega = model.omega_curve(p, d0, args.levels)?;
        for ((d, p_m), (_, om)) in errors.iter().zip(&omega) {
            let p_l = model.error_model.logical_error_rate(p, *d)?;
            errors_csv.push_str(&format!(
                "{d},{},{},{}\n",
                fmt_f(p_l),
                fmt_f(*p_m),
                fmt_f(*om)
            ));
        }
        if args.out_time.is_some() {
            let curve = model.expected_time_curve(p, d0, args.levels)?;
            for point in &curve {
                time_csv.push_str(&format!(
                    "{},{},{}\n",
                    point.d,
                    fmt_f(point.nominal),
                    fmt_f(point.expected)
                ));
            }
        }
    }
    write_artifact(&args.out_errors, &errors_csv)?;
    if let Some(out_time) = &args.out_time {
        write_artifact(&Some(out_time.clone()), &time_csv)?;
    }
    Ok(true)
}

fn cmd_cost(args: &CostArgs) -> Result<bool, RunError> {
    let entries = cost_table(args.d, args.path_length, args.targets);
    let mut csv =
        String::from("gate,space_qubits,time_cycles_expected,time_cycles_deviation,time_cycles_max,resource,spacetime_qubitcycles\n");
    for e in &entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.gate,
            e.space,
            e.time_expected,
            e.time_deviation,
            e.time_max,
            e.resource.unwrap_or("-"),
            e.spacetime()
        ));
    }
    let s = spacetime_summary(args.d);
    csv.push_str(&format!(
        "# |T> distillation spacetime: one level {} qubitcycles, infinite levels {}\n",
        s.t_one_level, s.t_infinite
    ));
    csv.push_str(&format!(
        "# |CCZ> distillation spacetime: {} qubitcycles\n",
        s.ccz
    ));
    csv.push_str(&format!(
        "# reference designs: Reed-Muller teleportation {} / {}, compact rotation-based {} / {}, CCZ {}\n",
        s.baseline_reed_muller_one,
        s.baseline_reed_muller_infinite,
        s.baseline_compact_one,
        s.baseline_compact_infinite,
        s.baseline_ccz
    ));
    write_artifact(&args.out, &csv)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::CczVerify(a) => cmd_ccz_verify(a),
        Command::Search(a) => cmd_search(a),
        Command::Crossval(a) => cmd_crossval(a),
        Command::Relations(a) => cmd_relations(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Cost(a) => cmd_cost(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
