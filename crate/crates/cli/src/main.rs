use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entrywise_psd::classes::Grid;
use entrywise_psd::suites::{self, ConstructKind, Report, TreeTrials};
use entrywise_psd::{build_graph, EntrywiseFunction, Error, Execution, Graph, GraphKind, SymMatrix};

#[derive(Parser, Debug)]
#[command(name = "epsd", version, about = "Entrywise positivity preservers on sparse patterns")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Base seed; trial i uses seed + i.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// PSD tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Number of randomized trials (star-suite defaults to 10000).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Grid step, as a decimal or a fraction like 1/64.
    #[arg(long, global = true, default_value = "1/64", value_parser = parse_step)]
    grid: f64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run trials on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grid checks plus randomized tree trials for an entrywise function.
    PreserverTest {
        /// Function literal, e.g. "1*x^1, 1*x^2, -0.1*x^3".
        #[arg(long = "function", short = 'f')]
        function: String,
        /// Upper end of the grid and of sampled matrix entries.
        #[arg(long, default_value_t = 8.0)]
        range: f64,
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        #[arg(long, default_value_t = 10)]
        matrices_per_tree: usize,
    },
    /// Forward-difference test of absolute monotonicity.
    AbsmonTest {
        #[arg(long = "function", short = 'f')]
        function: String,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        #[arg(long, default_value_t = 8.0)]
        range: f64,
    },
    /// Certified lower bound on k_G with witness sets.
    Witness {
        /// "path 5", "star 6", "complete 4", "random_tree 12" or a graph file.
        graph: String,
    },
    /// Preservation of x^alpha on a tree.
    CriticalExponent {
        tree: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,1,1.5")]
        alphas: Vec<f64>,
        #[arg(long = "range", default_value_t = 8.0)]
        range: f64,
    },
    /// Build preserver functions or coefficient thresholds.
    Construct {
        #[command(subcommand)]
        kind: ConstructCmd,
    },
    /// Star criterion, determinant formula and kernel stability on random stars.
    StarSuite,
    /// Restriction of a rank-one all-positive matrix to a graph.
    Thresholding {
        graph: String,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// PSD test of a matrix file, with structured tests when a graph is given.
    PsdCheck {
        matrix: PathBuf,
        #[arg(long)]
        graph: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ConstructCmd {
    Poly {
        #[arg(long, default_value_t = 1)]
        n_neg: usize,
    },
    Entire {
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    Superadditive {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        c_r: f64,
        #[arg(long, default_value_t = 1.0)]
        c_s: f64,
    },
    MultConvex {
        /// r', r, s, s'
        #[arg(long, value_delimiter = ',', num_args = 4, required = true)]
        exps: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 4, default_value = "1,1,1,1")]
        coefs: Vec<f64>,
    },
}

fn parse_step(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("grid step must be positive, got {s}"))
    }
}

/// `"kind n"` or a path to a graph file.
fn graph_arg(spec: &str, seed: u64) -> Result<Graph, Error> {
    if Path::new(spec).is_file() {
        let text = fs::read_to_string(spec).map_err(|e| Error::Usage(format!("{spec}: {e}")))?;
        return Graph::parse(&text);
    }
    let mut parts = spec.split_whitespace();
    let (Some(kind), Some(n), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Usage(format!("graph spec must be \"<kind> <n>\" or a file, got {spec:?}")));
    };
    let kind: GraphKind = kind.parse()?;
    let n: usize = n.parse().map_err(|_| Error::Usage(format!("bad vertex count {n:?}")))?;
    build_graph(kind, n, Some(seed))
}

fn function_arg(lit: &str) -> Result<EntrywiseFunction, Error> {
    lit.parse()
}

fn four(v: &[f64]) -> Result<[f64; 4], Error> {
    v.try_into().map_err(|_| Error::Usage(format!("expected 4 values, got {}", v.len())))
}

fn report_csv(r: &Report) -> String {
    format!(
        "command,seed,tolerance,trials,verdict,elapsed_ms\n{},{},{},{},{},{}\n",
        r.command,
        r.seed,
        r.tolerance,
        r.trials,
        if r.passed() { "pass" } else { "fail" },
        r.elapsed_ms
    )
}

fn run(cli: Cli) -> Result<(Report, Option<String>), Error> {
    let c = &cli.common;
    let exec = if c.sequential { Execution::Sequential } else { Execution::Parallel };
    let trials = c.trials.unwrap_or(1000);
    if trials == 0 {
        return Err(Error::Usage("trials must be >= 1".into()));
    }
    let tree_cfg = |range_max: f64| TreeTrials {
        trials,
        seed: c.seed,
        tol: c.tol,
        range_max,
        exec,
        ..TreeTrials::default()
    };
    let out = match cli.command {
        Command::PreserverTest {
            function,
            range,
            max_n,
            matrices_per_tree,
        } => {
            let f = function_arg(&function)?;
            let grid = Grid::new(c.grid, range)?.with_exec(exec);
            let cfg = TreeTrials {
                max_n,
                matrices_per_tree,
                ..tree_cfg(range)
            };
            (suites::cmd_preserver_test(&f, &grid, &cfg)?, None)
        }
        Command::AbsmonTest { function, n_max, range } => {
            let grid = Grid::new(c.grid, range)?.with_exec(exec);
            (suites::cmd_absmon_test(&function_arg(&function)?, n_max, &grid)?, None)
        }
        Command::Witness { graph } => (suites::cmd_witness(&graph_arg(&graph, c.seed)?)?, None),
        Command::CriticalExponent { tree, alphas, range } => {
            let t = graph_arg(&tree, c.seed)?;
            let (r, rows) = suites::cmd_critical_exponent(&t, &alphas, &tree_cfg(range))?;
            (r, Some(suites::exponent_rows_csv(&rows)))
        }
        Command::Construct { kind } => {
            let kind = match kind {
                ConstructCmd::Poly { n_neg } => ConstructKind::Poly { n_neg },
                ConstructCmd::Entire { n } => ConstructKind::Entire { n_blocks: n },
                ConstructCmd::Superadditive { r, s, c_r, c_s } => ConstructKind::Superadditive { r, s, c_r, c_s },
                ConstructCmd::MultConvex { exps, coefs } => ConstructKind::MultConvex {
                    exps: four(&exps)?,
                    coefs: four(&coefs)?,
                },
            };
            (suites::cmd_construct(&kind)?, None)
        }
        Command::StarSuite => (suites::cmd_star_suite(c.trials.unwrap_or(10_000), c.seed, c.tol, exec)?, None),
        Command::Thresholding { graph, a } => (suites::cmd_thresholding(&graph_arg(&graph, c.seed)?, a, c.tol)?, None),
        Command::PsdCheck { matrix, graph } => {
            let text = fs::read_to_string(&matrix).map_err(|e| Error::Usage(format!("{}: {e}", matrix.display())))?;
            let a = SymMatrix::parse(&text)?;
            let g = graph.map(|g| graph_arg(&g, c.seed)).transpose()?;
            (suites::cmd_psd_check(&a, g.as_ref(), c.tol)?, None)
        }
    };
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.common.format;
    let out_path = cli.common.out.clone();
    let (report, table) = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => table.unwrap_or_else(|| report_csv(&report)),
    };
    match out_path {
        Some(p) => {
            if let Err(e) = fs::write(&p, text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(if report.passed() { 0 } else { 1 })
}
