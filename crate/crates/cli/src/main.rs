//! Command-line front end: spec validation, exact progeny tables, tree
//! sampling and the experiment suites, all emitting machine-readable
//! output with a reproducibility header.
//!
//! Exit codes: 0 ok, 1 usage error, 2 invalid spec, 3 infeasible
//! experiment.

mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gwlab::convergence::{
    census_sequence, convergence_experiment, probe_family, ExperimentPlan,
};
use gwlab::laplace::LatticeDistribution;
use gwlab::offspring::{classify, perron, OffspringSpec, SpectralData};
use gwlab::progeny::{censuses_up_to, enumerate_progeny, progeny_via_walks};
use gwlab::ratio;
use gwlab::sampler::{sample_conditioned, sample_gw, sample_kesten};
use gwlab::walk::{gnedenko_discrepancy, mean_directed_census, sum_pmf_range};

use output::{OutputSink, RunMeta};

#[derive(Parser)]
#[command(name = "gwlab", version, about = "Multi-type Galton-Watson tree laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an offspring spec and print its spectral checklist.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Exact census table by both engines (enumeration and walks).
    Progeny {
        #[arg(long)]
        spec: PathBuf,
        /// Root type, 1-based.
        #[arg(long, short = 'r')]
        root: usize,
        #[arg(long, default_value_t = 6)]
        cap: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sample trees, one JSON tree per line.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum)]
        kind: SampleKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Node budget for unconditioned sampling.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Truncation height for Kesten sampling.
        #[arg(long, default_value_t = 4)]
        height: usize,
        /// Root type, 1-based (uniform root law when absent).
        #[arg(long)]
        root: Option<usize>,
        /// Census for conditioned sampling, comma-separated.
        #[arg(long, value_delimiter = ',')]
        census: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1_000_000)]
        max_attempts: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a built-in offspring spec as JSON.
    Preset {
        #[arg(long, value_enum)]
        name: PresetName,
    },
    /// Dump log-Laplace data over a tilt grid: theta, phi, the tilted mean
    /// and the covariance determinant.
    Tiltgrid {
        #[arg(long, value_enum, default_value_t = Dist::Uniform012)]
        dist: Dist,
        /// Grid points per axis in [-1, 1].
        #[arg(long, default_value_t = 9)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run an experiment suite.
    Experiment {
        #[arg(long, value_enum)]
        kind: ExperimentKind,
        /// Offspring spec (convergence and keyratio kinds).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Built-in lattice distribution (gnedenko and strongratio kinds).
        #[arg(long, value_enum, default_value_t = Dist::Uniform012)]
        dist: Dist,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probe base-size cap for the convergence experiment.
        #[arg(long, default_value_t = 2)]
        cap: usize,
        #[arg(long, default_value_t = 4)]
        n_min: u64,
        #[arg(long, default_value_t = 12)]
        n_max: u64,
        /// Tilt-grid points per axis in [-1, 1].
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum SampleKind {
    Gw,
    Kesten,
    Conditioned,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum ExperimentKind {
    Convergence,
    Keyratio,
    Gnedenko,
    Strongratio,
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum PresetName {
    /// Two types, both laws uniform on {0,1}^2.
    TwoTypeUniform,
    /// Two types, critical with asymmetric eigenvectors.
    AsymmetricCritical,
    /// Mono-type critical binary law.
    MonotypeBinary,
    /// Mono-type law uniform on {0,1,2}.
    MonotypeUniform012,
}

impl PresetName {
    fn build(self) -> OffspringSpec {
        match self {
            PresetName::TwoTypeUniform => gwlab::presets::two_type_uniform(),
            PresetName::AsymmetricCritical => gwlab::presets::asymmetric_critical(),
            PresetName::MonotypeBinary => gwlab::presets::monotype_binary(),
            PresetName::MonotypeUniform012 => gwlab::presets::monotype_uniform012(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Debug)]
enum Dist {
    /// Uniform on {0, 1}.
    Uniform01,
    /// Uniform on {0, 1}^2.
    Uniform01Sq,
    /// Uniform on {0, 1, 2}.
    Uniform012,
}

impl Dist {
    fn build(self) -> LatticeDistribution {
        match self {
            Dist::Uniform01 => LatticeDistribution::uniform(1, &[vec![0], vec![1]]),
            Dist::Uniform01Sq => LatticeDistribution::uniform(
                2,
                &[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
            ),
            Dist::Uniform012 => {
                LatticeDistribution::uniform(1, &[vec![0], vec![1], vec![2]])
            }
        }
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID_SPEC: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version are not errors
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8, error: anyhow::Error) -> CliError {
    CliError { code, error }
}

fn load_spec(path: &PathBuf) -> Result<OffspringSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INVALID_SPEC, anyhow::anyhow!("reading {path:?}: {e}")))?;
    OffspringSpec::from_json(&text)
        .map_err(|e| fail(EXIT_INVALID_SPEC, anyhow::anyhow!("invalid spec {path:?}: {e}")))
}

fn spectral_of(spec: &OffspringSpec) -> Result<SpectralData, CliError> {
    perron(spec).map_err(|e| fail(EXIT_INVALID_SPEC, anyhow::anyhow!("spectral analysis: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { spec } => cmd_validate(&spec),
        Command::Progeny { spec, root, cap, out } => cmd_progeny(&spec, root, cap, out),
        Command::Sample {
            spec,
            kind,
            seed,
            count,
            budget,
            height,
            root,
            census,
            max_attempts,
            out,
        } => cmd_sample(&spec, kind, seed, count, budget, height, root, census, max_attempts, out),
        Command::Preset { name } => {
            println!("{}", name.build().to_json());
            Ok(())
        }
        Command::Tiltgrid { dist, grid, out } => cmd_tiltgrid(dist, grid, out),
        Command::Experiment { kind, spec, dist, seed, cap, n_min, n_max, grid, out } => {
            cmd_experiment(kind, spec, dist, seed, cap, n_min, n_max, grid, out)
        }
    }
}

fn cmd_tiltgrid(dist: Dist, grid: usize, out: OutputArgs) -> Result<(), CliError> {
    let f = dist.build();
    let meta = RunMeta::new("tiltgrid", &format!("dist={dist:?} grid={grid}"), 0);
    let mut sink = OutputSink::create(out.out.as_deref(), matches!(out.format, Format::Json), meta)
        .map_err(|e| fail(EXIT_INFEASIBLE, e))?;
    sink.columns(&["theta", "phi", "mean", "cov_det"]);
    for theta in tilt_grid(f.dim(), grid) {
        let view = f.tilt(&theta);
        sink.row(&[
            theta.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" "),
            format!("{:.12}", view.log_normalizer),
            view.mean.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" "),
            format!("{:.12e}", view.covariance_det()),
        ]);
    }
    sink.finish().map_err(|e| fail(EXIT_INFEASIBLE, e))
}

fn cmd_validate(path: &PathBuf) -> Result<(), CliError> {
    let spec = load_spec(path)?;
    let spectral = spectral_of(&spec)?;
    let class = classify(&spec)
        .map_err(|e| fail(EXIT_INVALID_SPEC, anyhow::anyhow!("classification: {e}")))?;
    let mut report = String::new();
    let _ = writeln!(report, "d: {}", spec.d());
    for (i, row) in spec.mean_matrix().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(ratio::render).collect();
        let _ = writeln!(report, "M[{}]: {}", i + 1, cells.join(" "));
    }
    let _ = writeln!(report, "rho: {:.12}", spectral.rho);
    let _ = writeln!(
        report,
        "a: {}",
        spectral.a.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(
        report,
        "a*: {}",
        spectral.a_star.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ")
    );
    let _ = writeln!(
        report,
        "criticality: {}{}",
        class.criticality,
        if class.certified { " (certified)" } else { " (float)" }
    );
    let _ = writeln!(report, "primitive: {}", spectral.primitive);
    let _ = writeln!(report, "aperiodic: {}", spec.is_aperiodic());
    let _ = writeln!(report, "non-singular: {}", class.non_singular);
    let h1 = class.criticality == gwlab::offspring::Criticality::Critical
        && spectral.primitive
        && class.non_singular;
    let _ = writeln!(report, "(H1) primitive critical non-singular: {h1}");
    let _ = writeln!(report, "(H2) aperiodic offspring: {}", spec.is_aperiodic());
    print!("{report}");
    Ok(())
}

fn cmd_progeny(path: &PathBuf, root: usize, cap: usize, out: OutputArgs) -> Result<(), CliError> {
    let spec = load_spec(path)?;
    if root == 0 || root > spec.d() {
        return Err(fail(EXIT_USAGE, anyhow::anyhow!("root must be in 1..={}", spec.d())));
    }
    let r = root - 1;
    let meta = RunMeta::new("progeny", &format!("spec={path:?} root={root} cap={cap}"), 0);
    let mut sink = OutputSink::create(out.out.as_deref(), matches!(out.format, Format::Json), meta)
        .map_err(|e| fail(EXIT_INFEASIBLE, e))?;
    sink.columns(&["k", "enumeration", "walks", "equal"]);
    for k in censuses_up_to(spec.d(), cap) {
        if k.iter().sum::<u64>() == 0 {
            continue;
        }
        let by_enum = enumerate_progeny(&spec, r, &k, cap)
            .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")))?;
        let by_walks = progeny_via_walks(&spec, r, &k, cap)
            .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")))?;
        if by_enum.is_zero() && by_walks.is_zero() {
            continue;
        }
        let kstr = k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        sink.row(&[
            kstr,
            ratio::render(&by_enum),
            ratio::render(&by_walks),
            (by_enum == by_walks).to_string(),
        ]);
    }
    sink.finish().map_err(|e| fail(EXIT_INFEASIBLE, e))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    path: &PathBuf,
    kind: SampleKind,
    seed: u64,
    count: usize,
    budget: usize,
    height: usize,
    root: Option<usize>,
    census: Option<Vec<u64>>,
    max_attempts: u64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let spec = load_spec(path)?;
    let d = spec.d();
    let root_law: Vec<f64> = match root {
        Some(r) if r >= 1 && r <= d => {
            let mut law = vec![0.0; d];
            law[r - 1] = 1.0;
            law
        }
        Some(r) => {
            return Err(fail(EXIT_USAGE, anyhow::anyhow!("root {r} out of range 1..={d}")));
        }
        None => vec![1.0 / d as f64; d],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(count);
    match kind {
        SampleKind::Gw => {
            for _ in 0..count {
                match sample_gw(&spec, &root_law, budget, &mut rng) {
                    Ok(t) => lines.push(t.to_json()),
                    Err(e) => {
                        return Err(fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")));
                    }
                }
            }
        }
        SampleKind::Kesten => {
            let spectral = spectral_of(&spec)?;
            for _ in 0..count {
                let s = sample_kesten(&spec, &spectral, &root_law, height, &mut rng)
                    .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")))?;
                lines.push(s.tree.to_json());
            }
        }
        SampleKind::Conditioned => {
            let k = census.ok_or_else(|| {
                fail(EXIT_USAGE, anyhow::anyhow!("--census is required for conditioned sampling"))
            })?;
            if k.len() != d {
                return Err(fail(EXIT_USAGE, anyhow::anyhow!("census must have {d} entries")));
            }
            let r = root.ok_or_else(|| {
                fail(EXIT_USAGE, anyhow::anyhow!("--root is required for conditioned sampling"))
            })? - 1;
            for _ in 0..count {
                let t = sample_conditioned(&spec, r, &k, max_attempts, &mut rng)
                    .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")))?;
                lines.push(t.to_json());
            }
        }
    }
    let body = lines.join("\n") + "\n";
    match out {
        Some(p) => std::fs::write(&p, body)
            .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("writing {p:?}: {e}")))?,
        None => print!("{body}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    kind: ExperimentKind,
    spec_path: Option<PathBuf>,
    dist: Dist,
    seed: u64,
    cap: usize,
    n_min: u64,
    n_max: u64,
    grid: usize,
    out: OutputArgs,
) -> Result<(), CliError> {
    let json = matches!(out.format, Format::Json);
    match kind {
        ExperimentKind::Convergence | ExperimentKind::Keyratio => {
            let path = spec_path.ok_or_else(|| {
                fail(EXIT_USAGE, anyhow::anyhow!("--spec is required for this experiment"))
            })?;
            let spec = load_spec(&path)?;
            let spectral = spectral_of(&spec)?;
            if spectral.exact.is_none() {
                return Err(fail(
                    EXIT_INFEASIBLE,
                    anyhow::anyhow!("experiment requires a certified critical spec"),
                ));
            }
            let config = format!(
                "kind={kind:?} spec={path:?} cap={cap} n_min={n_min} n_max={n_max}"
            );
            let meta = RunMeta::new("experiment", &config, seed);
            let mut sink = OutputSink::create(out.out.as_deref(), json, meta)
                .map_err(|e| fail(EXIT_INFEASIBLE, e))?;

            let roots: Vec<usize> = (0..spec.d()).collect();
            let censuses = census_sequence(&spec, &spectral, &roots, n_min..=n_max);
            if censuses.is_empty() {
                return Err(fail(
                    EXIT_INFEASIBLE,
                    anyhow::anyhow!("no feasible census in the requested range"),
                ));
            }
            let probes: Vec<(String, gwlab::marked_tree::GraftClass)> = (0..spec.d())
                .flat_map(|r| {
                    probe_family(&spec, r, cap)
                        .into_iter()
                        .enumerate()
                        .map(move |(i, c)| (format!("r{}p{}", r + 1, i), c))
                })
                .collect();
            let mut offset = vec![0u64; spec.d()];
            offset[0] = 1;
            let plan = ExperimentPlan { probes, censuses, ratio_offset: offset };
            let report = convergence_experiment(&spec, &spectral, &plan)
                .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")))?;

            match kind {
                ExperimentKind::Convergence => {
                    sink.columns(&["probe", "n", "conditioned", "kesten", "delta", "keyratio"]);
                    for row in &report.rows {
                        sink.row(&[
                            row.probe.clone(),
                            row.n.to_string(),
                            format!("{:.12}", ratio::to_f64(&row.conditioned)),
                            format!("{:.12}", ratio::to_f64(&row.kesten)),
                            format!("{:.12}", ratio::to_f64(&row.delta)),
                            row.key_ratio
                                .as_ref()
                                .map(|x| format!("{:.12}", ratio::to_f64(x)))
                                .unwrap_or_default(),
                        ]);
                    }
                }
                ExperimentKind::Keyratio => {
                    sink.columns(&["n", "keyratio"]);
                    let mut seen = std::collections::BTreeSet::new();
                    for row in &report.rows {
                        if let Some(kr) = &row.key_ratio {
                            if seen.insert(row.n) {
                                sink.row(&[
                                    row.n.to_string(),
                                    format!("{:.12}", ratio::to_f64(kr)),
                                ]);
                            }
                        }
                    }
                }
                _ => unreachable!("handled in the outer match"),
            }
            sink.summary(&format!(
                "tails_decreasing={} skipped={:?} final_keyratio={}",
                report.all_tails_decreasing(),
                report.skipped,
                report
                    .final_key_ratio
                    .as_ref()
                    .map(|x| format!("{:.9}", ratio::to_f64(x)))
                    .unwrap_or_default()
            ));
            sink.finish().map_err(|e| fail(EXIT_INFEASIBLE, e))?;
            if !report.all_tails_decreasing() {
                return Err(fail(
                    EXIT_INFEASIBLE,
                    anyhow::anyhow!("delta trend assertion failed"),
                ));
            }
            Ok(())
        }
        ExperimentKind::Gnedenko => {
            let f = dist.build();
            let config = format!("kind={kind:?} dist={dist:?} grid={grid}");
            let meta = RunMeta::new("experiment", &config, seed);
            let mut sink = OutputSink::create(out.out.as_deref(), json, meta)
                .map_err(|e| fail(EXIT_INFEASIBLE, e))?;
            sink.columns(&["n", "theta_index", "discrepancy"]);
            let theta_grid = tilt_grid(f.dim(), grid);
            let mut sups = Vec::new();
            for n in [16u64, 32, 64, 128] {
                let report = gnedenko_discrepancy(&f, &theta_grid, n)
                    .map_err(|e| fail(EXIT_INFEASIBLE, anyhow::anyhow!("{e}")))?;
                for (idx, v) in report.per_theta.iter().enumerate() {
                    sink.row(&[n.to_string(), idx.to_string(), format!("{v:.9e}")]);
                }
                sups.push(report.sup_discrepancy);
            }
            let decays = sups.windows(2).all(|w| w[1] * 1.2 <= w[0]);
            sink.summary(&format!(
                "decay_factor_1.2_per_doubling={decays} sups={sups:?}"
            ));
            sink.finish().map_err(|e| fail(EXIT_INFEASIBLE, e))?;
            if !decays {
                return Err(fail(EXIT_INFEASIBLE, anyhow::anyhow!("decay assertion failed")));
            }
            Ok(())
        }
        ExperimentKind::Strongratio => {
            let f = dist.build();
            let config = format!("kind={kind:?} dist={dist:?} n_max={n_max}");
            let meta = RunMeta::new("experiment", &config, seed);
            let mut sink = OutputSink::create(out.out.as_deref(), json, meta)
                .map_err(|e| fail(EXIT_INFEASIBLE, e))?;
            sink.columns(&["n", "b", "ratio"]);
            let tables = sum_pmf_range(&f, n_max);
            let mut final_ok = true;
            let mut n = n_min.max(2);
            let mut rows = Vec::new();
            while n <= n_max {
                let s_n = mean_directed_census(&f, n);
                for b in 0..=1i64 {
                    let bvec = vec![b; f.dim()];
                    let shifted: Vec<i64> = s_n.iter().zip(&bvec).map(|(s, o)| s - o).collect();
                    let den = tables[n as usize].prob(&s_n);
                    if den.is_zero() {
                        continue;
                    }
                    let num = tables[n as usize - 1].prob(&shifted);
                    let ratio_v = ratio::to_f64(&(num / den));
                    rows.push((n, b, ratio_v));
                    if n == n_max {
                        final_ok &= (ratio_v - 1.0).abs() < 0.05;
                    }
                }
                n *= 2;
            }
            for (n, b, v) in rows {
                sink.row(&[n.to_string(), b.to_string(), format!("{v:.12}")]);
            }
            sink.summary(&format!("final_within_0.05={final_ok}"));
            sink.finish().map_err(|e| fail(EXIT_INFEASIBLE, e))?;
            if !final_ok {
                return Err(fail(EXIT_INFEASIBLE, anyhow::anyhow!("ratio assertion failed")));
            }
            Ok(())
        }
    }
}

fn tilt_grid(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if per_axis <= 1 {
        vec![0.0]
    } else {
        (0..per_axis)
            .map(|i| -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    grid
}
