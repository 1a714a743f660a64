use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use numa_sched::c2c::{group_by_max_partner, group_by_sorted_pairs};
use numa_sched::config::RunConfig;
use numa_sched::cost::grouping_c2c_cost;
use numa_sched::dram::{aggregate_group_dram, assign_global_greedy, assign_per_node_greedy};
use numa_sched::oracle::{assignment_cost, best_assignment_bruteforce, best_grouping_bruteforce};
use numa_sched::report::{fmt_pct, parse_trace, per_quantum_csv, summary_line, sweep_csv, write_trace};
use numa_sched::sim::{sweep_with_threads, C2cAlg, DramAlg};
use numa_sched::{gen_trace, simulate, sweep, Cycles, Error, Policy, Trace};

const THREADS_ENV: &str = "NUMA_SCHED_THREADS";

#[derive(Parser)]
#[command(name = "numa-sched", version, about = "ccNUMA thread scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace.
    Gen(Settings),
    /// Replay one policy over a trace.
    Run(Settings),
    /// Evaluate policies over a grid of remote latencies.
    Sweep {
        #[command(flatten)]
        settings: Settings,
        /// Take every (c2c, DRAM) remote latency combination instead of
        /// pairing the lists positionally.
        #[arg(long)]
        cross: bool,
        /// Evaluate every policy with affinity both off and on.
        #[arg(long)]
        both_affinity: bool,
    },
    /// Compare heuristic costs with exhaustive search, quantum by quantum.
    Oracle(Settings),
}

/// Settings shared by every command. Each flag maps to the config key of the
/// same name and overrides `--config`.
#[derive(Args)]
struct Settings {
    /// `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// synth1, synth2 or synth3.
    #[arg(long)]
    workload: Option<String>,
    #[arg(long)]
    phases: Option<String>,
    #[arg(long)]
    quanta: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    cores_per_node: Option<String>,
    /// Policy such as `none`, `c2c1`, `c2c2+dram2`; `sweep` takes a
    /// comma-separated list.
    #[arg(long)]
    policy: Option<String>,
    /// Charge the cache-affinity penalty for migrated threads.
    #[arg(long)]
    affinity: bool,
    #[arg(long)]
    lat_c2c_local: Option<String>,
    /// Remote c2c latency; `sweep` takes a comma-separated list.
    #[arg(long)]
    lat_c2c_remote: Option<String>,
    #[arg(long)]
    lat_dram_local: Option<String>,
    /// Remote DRAM latency; `sweep` takes a comma-separated list.
    #[arg(long)]
    lat_dram_remote: Option<String>,
    #[arg(long)]
    affinity_lines: Option<String>,
    #[arg(long)]
    affinity_line_latency: Option<String>,
    #[arg(long)]
    c2c_intra: Option<String>,
    #[arg(long)]
    c2c_inter: Option<String>,
    #[arg(long)]
    dram_home: Option<String>,
    #[arg(long)]
    dram_other: Option<String>,
    #[arg(long)]
    pattern_offset: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    jitter_pct: Option<String>,
    /// Trace file to read; without it the workload settings generate one.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Input(String),
    Bounds(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Bounds(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Bounds(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Format { .. } => Failure::Input(e.to_string()),
            Error::Bounds(_) => Failure::Bounds(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

impl Settings {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut rc = RunConfig::default();
        if let Some(path) = &self.config {
            let text = read(path)?;
            rc.apply_file(&text).map_err(|e| match e {
                Error::Format { .. } => Failure::Input(format!("{}: {e}", path.display())),
                e => Failure::from(e),
            })?;
        }
        let pairs: [(&str, &Option<String>); 21] = [
            ("workload", &self.workload),
            ("phases", &self.phases),
            ("quanta", &self.quanta),
            ("threads", &self.threads),
            ("nodes", &self.nodes),
            ("cores-per-node", &self.cores_per_node),
            ("policy", &self.policy),
            ("lat-c2c-local", &self.lat_c2c_local),
            ("lat-c2c-remote", &self.lat_c2c_remote),
            ("lat-dram-local", &self.lat_dram_local),
            ("lat-dram-remote", &self.lat_dram_remote),
            ("affinity-lines", &self.affinity_lines),
            ("affinity-line-latency", &self.affinity_line_latency),
            ("c2c-intra", &self.c2c_intra),
            ("c2c-inter", &self.c2c_inter),
            ("dram-home", &self.dram_home),
            ("dram-other", &self.dram_other),
            ("pattern-offset", &self.pattern_offset),
            ("seed", &self.seed),
            ("jitter-pct", &self.jitter_pct),
            ("out", &self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                rc.set(key, v)?;
            }
        }
        if let Some(t) = &self.trace {
            rc.trace = Some(t.clone());
        }
        if self.affinity {
            rc.affinity = true;
        }
        Ok(rc)
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_trace(rc: &RunConfig) -> CliResult<Trace> {
    match &rc.trace {
        Some(path) => parse_trace(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => Ok(gen_trace(&rc.workload_spec()?)?),
    }
}

/// Workload name for report rows.
fn label(rc: &RunConfig) -> String {
    if let Some(w) = rc.workload {
        return w.name().to_owned();
    }
    rc.trace
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".to_owned())
}

fn cmd_gen(rc: &RunConfig) -> CliResult<()> {
    let trace = gen_trace(&rc.workload_spec()?)?;
    emit(rc.out.as_deref(), &write_trace(&trace))
}

fn cmd_run(rc: &RunConfig) -> CliResult<()> {
    let policy = match rc.policies.as_slice() {
        [] => Policy::BASELINE,
        [p] => *p,
        _ => return Err(Failure::Usage("run takes a single policy".into())),
    }
    .with_affinity(rc.affinity);
    let trace = load_trace(rc)?;
    let result = simulate(&trace, &policy, &rc.latency()?)?;
    emit(rc.out.as_deref(), &per_quantum_csv(&result))?;
    println!("{}", summary_line(&label(rc), &policy.name(), policy.affinity, &result));
    Ok(())
}

/// The six policies the experiments report.
fn report_policies() -> Vec<Policy> {
    let mut out = Vec::new();
    for c in [C2cAlg::MaxPartner, C2cAlg::SortedPairs] {
        out.push(Policy::new(Some(c), None, false));
        for d in [DramAlg::GlobalGreedy, DramAlg::PerNodeGreedy] {
            out.push(Policy::new(Some(c), Some(d), false));
        }
    }
    out
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn cmd_sweep(rc: &RunConfig, cross: bool, both_affinity: bool) -> CliResult<()> {
    let base = if rc.policies.is_empty() {
        report_policies()
    } else {
        rc.policies.clone()
    };
    let settings: &[bool] = if both_affinity { &[false, true] } else { &[rc.affinity] };
    let policies: Vec<Policy> = base
        .iter()
        .flat_map(|p| settings.iter().map(move |&a| p.with_affinity(a)))
        .collect();
    let points = rc.latency_points(cross)?;
    let trace = load_trace(rc)?;
    let cells = match thread_cap()? {
        Some(n) => sweep_with_threads(&trace, &policies, &points, n)?,
        None => sweep(&trace, &policies, &points)?,
    };
    let name = label(rc);
    emit(rc.out.as_deref(), &sweep_csv(cells.iter().map(|c| (name.as_str(), c))))
}

const ORACLE_CSV_HEADER: &str = "quantum,algorithm,heuristic_cost,oracle_cost,gap_pct,miss";

fn gap_pct(heuristic: Cycles, oracle: Cycles) -> f64 {
    if oracle == 0 {
        0.0
    } else {
        (heuristic as f64 - oracle as f64) / oracle as f64 * 100.0
    }
}

/// Grouping heuristics are scored on the cache-to-cache component, placement
/// heuristics on the DRAM component of the oracle's grouping.
fn cmd_oracle(rc: &RunConfig) -> CliResult<()> {
    let trace = load_trace(rc)?;
    let lat = rc.latency()?;
    let config = trace.config();
    let mut csv = String::from(ORACLE_CSV_HEADER);
    csv.push('\n');
    let mut misses = 0usize;
    let mut rows = 0usize;
    let mut cached: Option<(&numa_sched::C2CMatrix, numa_sched::oracle::OracleGrouping)> = None;
    for (i, q) in trace.quanta().iter().enumerate() {
        let best = match &cached {
            Some((m, best)) if **m == q.c2c => best.clone(),
            _ => best_grouping_bruteforce(&q.c2c, config, &lat)?,
        };
        let gd = aggregate_group_dram(&best.grouping, &q.dram)?;
        let best_a = best_assignment_bruteforce(&gd, &lat)?;
        let entries = [
            (
                "c2c1",
                grouping_c2c_cost(&group_by_max_partner(&q.c2c, config)?, &q.c2c, &lat),
                best.cost,
            ),
            (
                "c2c2",
                grouping_c2c_cost(&group_by_sorted_pairs(&q.c2c, config)?, &q.c2c, &lat),
                best.cost,
            ),
            (
                "dram1",
                assignment_cost(&gd, assign_global_greedy(&gd).node_of_group(), &lat),
                best_a.cost,
            ),
            (
                "dram2",
                assignment_cost(&gd, assign_per_node_greedy(&gd).node_of_group(), &lat),
                best_a.cost,
            ),
        ];
        for (alg, h, o) in entries {
            let miss = h != o;
            misses += usize::from(miss);
            rows += 1;
            csv.push_str(&format!(
                "{},{alg},{h},{o},{},{}\n",
                i + 1,
                fmt_pct(gap_pct(h, o)),
                u8::from(miss)
            ));
        }
        cached = Some((&q.c2c, best));
    }
    emit(rc.out.as_deref(), &csv)?;
    println!("oracle: comparisons={rows} misses={misses}");
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(s) => cmd_gen(&s.resolve()?),
        Command::Run(s) => cmd_run(&s.resolve()?),
        Command::Sweep {
            settings,
            cross,
            both_affinity,
        } => cmd_sweep(&settings.resolve()?, cross, both_affinity),
        Command::Oracle(s) => cmd_oracle(&s.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
