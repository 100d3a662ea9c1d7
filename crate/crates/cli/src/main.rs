//! `permuc` command line: compile, verify, bench.
//!
//! Exit codes: 0 success, 1 a verification or benchmark row failed,
//! 2 bad input, 3 internal error. Errors go to stderr as one JSON object.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use permuc::benchgen::{mean_std, overhead, BenchmarkSpec, Family, InstanceMetrics, OverheadReport};
use permuc::circuit_text::{parse_circuit, write_circuit};
use permuc::ir::Hamiltonian;
use permuc::pipeline::{compile_layers, CompileOptions, Compiled, PassTimings, PlacementOptions, ScheduleKind};
use permuc::scheduler::SinglesPolicy;
use permuc::simcheck::{verify_multilayer, verify_segments, Segment, DEFAULT_CAP};
use permuc::synth::{expand, GateSet, Metrics};
use permuc::topology::{preset, topology_for, DeviceTopology};
use permuc::Error;

#[derive(Parser)]
#[command(name = "permuc", version, about = "Permutation-aware compiler for 2-local Hamiltonians and QAOA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a Hamiltonian (or several QAOA layers) for a device.
    Compile(CompileArgs),
    /// Check a compiled circuit file against its Hamiltonian.
    Verify(VerifyArgs),
    /// Generate benchmark instances, compile them, and tabulate metrics.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Device: preset name, `grid`/`line`/`all2all` (sized to fit), or a topology JSON file.
    #[arg(long, default_value = "grid")]
    topo: String,
    /// Gate set name (cnot, cz, syc, iswap) or a gate-set JSON file.
    #[arg(long, default_value = "cnot")]
    gateset: String,
    #[arg(long, default_value = "hybrid")]
    schedule: ScheduleKind,
    #[arg(long, env = "PERMUC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    placement_iters: Option<usize>,
    #[arg(long)]
    placement_tenure: Option<usize>,
    #[arg(long)]
    placement_restarts: Option<usize>,
    /// Keep SWAPs plain instead of merging them with co-located blocks.
    #[arg(long)]
    no_dress: bool,
}

#[derive(Args)]
struct CompileArgs {
    /// Hamiltonian JSON; repeat once per QAOA layer.
    #[arg(long, required = true)]
    ham: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Single-qubit placement: interleaved (default) or trailing.
    #[arg(long, default_value = "interleaved", value_parser = parse_singles)]
    singles: SinglesPolicy,
    /// Also write the routing trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output directory for circuit.txt, metrics.json, timings.json and schedule.json.
    /// Without it the metrics JSON goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    ham: PathBuf,
    /// Largest logical qubit count simulated densely.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated families.
    #[arg(long, value_delimiter = ',', required = true)]
    family: Vec<Family>,
    /// Sizes: comma-separated values or inclusive ranges `a..b`. Sizes a family
    /// cannot take are skipped.
    #[arg(long, required = true)]
    n: String,
    /// Number of seeds per size, starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[command(flatten)]
    common: Common,
    /// QAOA depth or Trotter steps.
    #[arg(long, default_value_t = 1)]
    layers: usize,
    /// Drop the transverse X field from the Ising family.
    #[arg(long)]
    no_x_field: bool,
    /// Run the equivalence check on instances within the cap.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for bench.csv, summary.csv and per-instance metrics JSON.
    /// Without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_singles(s: &str) -> Result<SinglesPolicy, String> {
    match s {
        "interleaved" => Ok(SinglesPolicy::Interleaved),
        "trailing" => Ok(SinglesPolicy::Trailing),
        _ => Err(format!("expected interleaved or trailing, got {s:?}")),
    }
}

/// Deterministic per-instance record; no wall-clock fields.
#[derive(Serialize)]
struct MetricsReport {
    instance: String,
    n: usize,
    topology: String,
    m: usize,
    gateset: String,
    schedule: ScheduleKind,
    seed: u64,
    layers: usize,
    placement_cost: u64,
    initial_map: Vec<usize>,
    final_map: Vec<usize>,
    metrics: Metrics,
    nomap: Metrics,
    overhead: OverheadReport,
}

fn report(instance: String, c: &Compiled, topo: &DeviceTopology, opts: &CompileOptions) -> Result<MetricsReport, Error> {
    let ov = overhead(
        &InstanceMetrics { instance: instance.clone(), metrics: c.metrics.clone() },
        &InstanceMetrics { instance: instance.clone(), metrics: c.nomap.clone() },
    )?;
    Ok(MetricsReport {
        instance,
        n: c.whole.n,
        topology: topo.name.clone(),
        m: topo.m,
        gateset: opts.gateset.label().to_string(),
        schedule: opts.schedule,
        seed: opts.seed,
        layers: c.layers.len(),
        placement_cost: c.placement_cost,
        initial_map: c.whole.initial_map.as_slice().to_vec(),
        final_map: c.whole.final_map.as_slice().to_vec(),
        metrics: c.metrics.clone(),
        nomap: c.nomap.clone(),
        overhead: ov,
    })
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn load_topology(spec: &str, n: usize) -> Result<DeviceTopology, Error> {
    let path = Path::new(spec);
    if path.is_file() {
        return DeviceTopology::from_json(&read(path)?);
    }
    match spec {
        "grid" | "line" | "all2all" => topology_for(spec, n),
        _ => preset(spec),
    }
}

fn load_gateset(spec: &str) -> Result<GateSet, Error> {
    let path = Path::new(spec);
    if path.is_file() {
        GateSet::from_json(&read(path)?)
    } else {
        GateSet::from_name(spec)
    }
}

fn options(common: &Common, singles: SinglesPolicy) -> Result<CompileOptions, Error> {
    Ok(CompileOptions {
        seed: common.seed,
        schedule: common.schedule,
        gateset: load_gateset(&common.gateset)?,
        placement: PlacementOptions {
            iters: common.placement_iters,
            tenure: common.placement_tenure,
            restarts: common.placement_restarts,
            time_budget_ms: None,
        },
        singles,
        dress: !common.no_dress,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn run_compile(args: &CompileArgs) -> Result<ExitCode, Error> {
    let hams = args.ham.iter().map(|p| Hamiltonian::from_json(&read(p)?)).collect::<Result<Vec<_>, _>>()?;
    let n = hams[0].n;
    let topo = load_topology(&args.common.topo, n)?;
    let opts = options(&args.common, args.singles)?;
    let c = compile_layers(&hams, &topo, &opts)?;
    let stem = args.ham[0].file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let metrics = to_json(&report(stem, &c, &topo, &opts)?);

    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let ex = expand(&c.whole, &opts.gateset)?;
            write(&dir.join("circuit.txt"), &write_circuit(&ex, n, opts.gateset.label())?)?;
            write(&dir.join("metrics.json"), &metrics)?;
            write(&dir.join("timings.json"), &to_json(&c.timings))?;
            write(&dir.join("schedule.json"), &to_json(&c.whole))?;
        }
        None => print!("{metrics}"),
    }
    if let Some(path) = &args.trace {
        #[derive(Serialize)]
        struct Trace<'a> {
            routed: &'a permuc::router::RoutedProgram,
            steps: &'a [permuc::router::TraceStep],
        }
        write(path, &to_json(&Trace { routed: &c.routed, steps: &c.routed.trace }))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: &VerifyArgs) -> Result<ExitCode, Error> {
    let parsed = parse_circuit(&read(&args.circuit)?)?;
    let h = Hamiltonian::from_json(&read(&args.ham)?)?;
    if parsed.logical != h.n {
        return Err(Error::Invalid(format!("circuit has {} logical qubits, Hamiltonian {}", parsed.logical, h.n)));
    }
    let rep = verify_segments(&[Segment { expanded: &parsed.expanded, ham: &h }], parsed.corrupted, args.cap)?;
    print!("{}", to_json(&rep));
    Ok(if rep.ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// `4..8,12` to `[4, 5, 6, 7, 8, 12]`.
fn parse_sizes(s: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::Invalid(format!("cannot parse sizes {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

#[derive(Serialize, Default)]
struct Row {
    family: String,
    n: usize,
    seed: u64,
    topology: String,
    status: String,
    swaps: usize,
    swaps_dressed: usize,
    two_qubit_count: usize,
    two_qubit_depth: usize,
    total_depth: usize,
    depth_blocks: usize,
    nomap_two_qubit_count: usize,
    nomap_two_qubit_depth: usize,
    nomap_total_depth: usize,
    verified: String,
    max_dev: String,
    unify_ms: f64,
    placement_ms: f64,
    routing_ms: f64,
    scheduling_ms: f64,
    synthesis_ms: f64,
    error: String,
}

struct Outcome {
    row: Row,
    report: Option<MetricsReport>,
}

fn bench_instance(spec: &BenchmarkSpec, args: &BenchArgs) -> Outcome {
    let mut row = Row {
        family: spec.family.to_string(),
        n: spec.n,
        seed: spec.seed,
        verified: "skipped".into(),
        ..Row::default()
    };
    let result = (|| -> Result<Option<MetricsReport>, Error> {
        let hams = spec.generate()?;
        let topo = load_topology(&args.common.topo, spec.n)?;
        row.topology = topo.name.clone();
        let mut opts = options(&args.common, spec.family.singles_policy())?;
        opts.seed = spec.seed;
        let c = compile_layers(&hams, &topo, &opts)?;
        let m = &c.metrics;
        row.swaps = m.swaps;
        row.swaps_dressed = m.swaps_dressed;
        row.two_qubit_count = m.two_qubit_count;
        row.two_qubit_depth = m.two_qubit_depth;
        row.total_depth = m.total_depth;
        row.depth_blocks = m.depth_blocks;
        row.nomap_two_qubit_count = c.nomap.two_qubit_count;
        row.nomap_two_qubit_depth = c.nomap.two_qubit_depth;
        row.nomap_total_depth = c.nomap.total_depth;
        let PassTimings { unify_ms, placement_ms, routing_ms, scheduling_ms, synthesis_ms } = c.timings;
        (row.unify_ms, row.placement_ms, row.routing_ms, row.scheduling_ms, row.synthesis_ms) =
            (unify_ms, placement_ms, routing_ms, scheduling_ms, synthesis_ms);
        if args.verify && spec.n <= args.cap {
            // A Hamiltonian with steps = r compiles to r layers; group them back.
            let layers = c.expand_layers(&opts.gateset)?;
            let rep = if hams.len() == layers.len() {
                verify_multilayer(&layers, &hams, args.cap)?
            } else {
                let whole = expand(&c.whole, &opts.gateset)?;
                verify_segments(&[Segment { expanded: &whole, ham: &hams[0] }], Vec::new(), args.cap)?
            };
            row.verified = rep.ok.to_string();
            row.max_dev = format!("{:.3e}", rep.max_dev);
        }
        Ok(Some(report(spec.instance_id(), &c, &topo, &opts)?))
    })();
    match result {
        Ok(report) => {
            row.status = if row.verified == "false" { "failed" } else { "ok" }.into();
            Outcome { row, report }
        }
        Err(e) => {
            row.status = "error".into();
            row.error = e.to_string();
            Outcome { row, report: None }
        }
    }
}

#[derive(Serialize)]
struct SummaryRow {
    family: String,
    n: usize,
    instances: usize,
    swaps_mean: f64,
    swaps_std: f64,
    two_qubit_count_mean: f64,
    two_qubit_count_std: f64,
    two_qubit_depth_mean: f64,
    two_qubit_depth_std: f64,
    total_depth_mean: f64,
    total_depth_std: f64,
}

fn summarize(rows: &[Row]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.status == "ok") {
        let k = (r.family.clone(), r.n);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(family, n)| {
            let group: Vec<&Row> = rows.iter().filter(|r| r.status == "ok" && r.family == family && r.n == n).collect();
            let stat = |f: fn(&Row) -> usize| mean_std(&group.iter().map(|r| f(r) as f64).collect::<Vec<_>>());
            let (swaps_mean, swaps_std) = stat(|r| r.swaps);
            let (two_qubit_count_mean, two_qubit_count_std) = stat(|r| r.two_qubit_count);
            let (two_qubit_depth_mean, two_qubit_depth_std) = stat(|r| r.two_qubit_depth);
            let (total_depth_mean, total_depth_std) = stat(|r| r.total_depth);
            SummaryRow {
                family,
                n,
                instances: group.len(),
                swaps_mean,
                swaps_std,
                two_qubit_count_mean,
                two_qubit_count_std,
                two_qubit_depth_mean,
                two_qubit_depth_std,
                total_depth_mean,
                total_depth_std,
            }
        })
        .collect()
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

fn run_bench(args: &BenchArgs) -> Result<ExitCode, Error> {
    let sizes = parse_sizes(&args.n)?;
    load_gateset(&args.common.gateset)?;
    if args.layers == 0 {
        return Err(Error::Invalid("--layers must be at least 1".into()));
    }
    let mut specs = Vec::new();
    for &family in &args.family {
        for &n in sizes.iter().filter(|&&n| family.accepts(n)) {
            for seed in args.common.seed..args.common.seed + args.seeds {
                specs.push(BenchmarkSpec {
                    layers: args.layers,
                    x_field: !args.no_x_field,
                    ..BenchmarkSpec::new(family, n, seed)
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let started = Instant::now();
    let outcomes: Vec<Outcome> = pool.install(|| specs.par_iter().map(|s| bench_instance(s, args)).collect());
    let (rows, reports): (Vec<Row>, Vec<Option<MetricsReport>>) =
        outcomes.into_iter().map(|o| (o.row, o.report)).unzip();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let table = csv_string(&rows)?;

    match &args.out {
        Some(dir) => {
            let inst = dir.join("instances");
            fs::create_dir_all(&inst)?;
            write(&dir.join("bench.csv"), &table)?;
            write(&dir.join("summary.csv"), &csv_string(&summarize(&rows))?)?;
            for r in reports.iter().flatten() {
                write(&inst.join(format!("{}.json", r.instance)), &to_json(r))?;
            }
        }
        None => print!("{table}"),
    }
    eprintln!(
        "{} instances, {failed} failed, {:.1} s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(a) => run_compile(a),
        Command::Verify(a) => run_verify(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let input = e.is_input_error();
            let kind = if input { "input" } else { "internal" };
            eprintln!("{}", serde_json::json!({ "error": e.to_string(), "kind": kind }));
            ExitCode::from(if input { 2 } else { 3 })
        }
    }
}
