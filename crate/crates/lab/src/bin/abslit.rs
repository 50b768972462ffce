use std::path::PathBuf;
use std::process::ExitCode;

use abslit_lab::config::{
    parse_cluster, parse_grid, parse_point, ClusterConfig, CommandConfig, DomainConfig, PolicyConfig, RunConfig,
    SCHEMA_VERSION,
};
use abslit_lab::{run, LabError};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "abslit", version, about = "Neumann eigenvalues with an Aharonov-Bohm pole near the boundary")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[command(next_help_heading = "Global options")]
struct Global {
    #[arg(long, value_enum, default_value = "disk", global = true)]
    domain: DomainArg,
    #[arg(long, default_value_t = 1.0, global = true)]
    width: f64,
    #[arg(long, default_value_t = 1.0, global = true)]
    height: f64,
    /// Half-ellipse semi-axis along the slit.
    #[arg(long = "ellipse-length", default_value_t = 1.0, global = true)]
    ellipse_length: f64,
    #[arg(long = "ellipse-eps", default_value_t = 0.01, global = true)]
    ellipse_eps: f64,
    #[arg(long, default_value_t = 1, global = true)]
    threads: usize,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    /// Print the equivalent config JSON instead of running.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Disk,
    Rectangle,
    HalfEllipse,
}

#[derive(Subcommand)]
enum Command {
    /// Plain Neumann eigenvalues.
    Spectrum {
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long)]
        richardson: bool,
    },
    /// Eigenvalues of the slit problem next to the plain ones.
    CrackSpectrum {
        #[arg(long, value_parser = point)]
        pole: [f64; 2],
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long, default_value_t = 2.0)]
        grading: f64,
        #[arg(long)]
        h_far: Option<f64>,
        #[arg(long)]
        export_mesh: bool,
        #[arg(long)]
        export_matrices: bool,
    },
    /// Energies, reduced matrix and expansion check at one pole.
    Energy {
        #[arg(long, value_parser = point)]
        pole: [f64; 2],
        #[arg(long, value_parser = cluster, default_value = "1:1")]
        cluster: ClusterConfig,
        #[arg(long, default_value_t = 0.02)]
        h: f64,
        #[arg(long, default_value_t = 2.0)]
        grading: f64,
        #[arg(long)]
        h_far: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        threshold: f64,
    },
    /// Eigenvalue shifts along a ray of poles approaching the boundary.
    Sweep {
        /// Boundary point the poles approach, `x,y`.
        #[arg(long, value_parser = point)]
        a0: [f64; 2],
        /// Direction into the domain; the inner normal by default.
        #[arg(long, value_parser = point)]
        direction: Option<[f64; 2]>,
        /// Comma list or `start:stop:geometric[:count]`.
        #[arg(long, value_parser = grid, default_value = "0.2:0.025:geometric:4")]
        d: Grid,
        /// Eigenvalues per step; max(n + m, 6) by default.
        #[arg(long)]
        k: Option<usize>,
        /// 1-based first index and size of the tracked cluster, `n:m`.
        #[arg(long, value_parser = cluster)]
        cluster: Option<ClusterConfig>,
        /// Coarsest slit spacing.
        #[arg(long)]
        h0: Option<f64>,
        /// Slit spacing is at most d / ratio.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        grading: Option<f64>,
        #[arg(long)]
        h_far: Option<f64>,
        #[arg(long)]
        h_predict: Option<f64>,
    },
    /// Closed-form energies on the half-ellipse.
    Oracle {
        #[arg(long = "L", default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long = "eps-grid", value_parser = grid, default_value = "1e-2:1e-8:geometric")]
        eps: Grid,
    },
    /// Least-squares fit of y = c1/|log d| + c2/|log d|^2.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        column: Option<String>,
        /// Pairs `d:y` separated by commas.
        #[arg(long, value_parser = samples)]
        samples: Option<Samples>,
    },
    /// Execute a JSON config file.
    Run { config: PathBuf },
}

#[derive(Clone)]
struct Grid(Vec<f64>);

#[derive(Clone)]
struct Samples(Vec<[f64; 2]>);

fn point(s: &str) -> Result<[f64; 2], String> {
    parse_point(s).map_err(|e| e.to_string())
}

fn cluster(s: &str) -> Result<ClusterConfig, String> {
    parse_cluster(s).map_err(|e| e.to_string())
}

fn grid(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid).map_err(|e| e.to_string())
}

fn samples(s: &str) -> Result<Samples, String> {
    s.split(',')
        .map(|pair| {
            let (d, y) = pair.split_once(':').ok_or_else(|| format!("expected d:y, got {pair:?}"))?;
            let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
            Ok([num(d)?, num(y)?])
        })
        .collect::<Result<_, String>>()
        .map(Samples)
}

fn build_config(cli: Cli) -> Result<RunConfig, LabError> {
    let g = cli.global;
    let domain = match g.domain {
        DomainArg::Disk => DomainConfig::Disk,
        DomainArg::Rectangle => DomainConfig::Rectangle { width: g.width, height: g.height },
        DomainArg::HalfEllipse => DomainConfig::HalfEllipse { length: g.ellipse_length, eps: g.ellipse_eps },
    };
    let command = match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| LabError::io(&config, e))?;
            return RunConfig::from_json(&text);
        }
        Command::Spectrum { k, h, richardson } => CommandConfig::Spectrum { h, k, richardson },
        Command::CrackSpectrum { pole, k, h, grading, h_far, export_mesh, export_matrices } => {
            CommandConfig::CrackSpectrum { pole, h, k, grading, h_far, export_mesh, export_matrices }
        }
        Command::Energy { pole, cluster, h, grading, h_far, threshold } => {
            CommandConfig::Energy { pole, cluster, h, grading, h_far, threshold }
        }
        Command::Sweep { a0, direction, d, k, cluster, h0, ratio, grading, h_far, h_predict } => {
            let base = PolicyConfig::default();
            let policy = if [h0, ratio, grading, h_far].iter().any(Option::is_some) {
                Some(PolicyConfig {
                    h0: h0.unwrap_or(base.h0),
                    ratio: ratio.unwrap_or(base.ratio),
                    grading: grading.unwrap_or(base.grading),
                    h_far: h_far.unwrap_or(base.h_far),
                })
            } else {
                None
            };
            CommandConfig::Sweep { a0, direction, d: d.0, k, cluster, policy, h_predict }
        }
        Command::Oracle { length, alpha, beta, eps } => CommandConfig::Oracle { length, alpha, beta, eps: eps.0 },
        Command::Fit { input, column, samples } => CommandConfig::Fit { samples: samples.map(|s| s.0), input, column },
    };
    Ok(RunConfig {
        schema_version: SCHEMA_VERSION,
        domain,
        weight: Default::default(),
        command,
        seed: g.seed,
        threads: g.threads,
        output: g.out,
    })
}

fn fail(e: LabError) -> ExitCode {
    eprintln!("error: {e}");
    eprintln!("{}", e.trailer());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let print_only = cli.global.print_config;
    let config = match build_config(cli) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if print_only {
        println!("{}", config.to_json());
        return ExitCode::SUCCESS;
    }
    let out_dir = config.output.clone();
    match run(config) {
        Ok(artifacts) => {
            println!("{}", serde_json::to_string_pretty(&artifacts.summary).expect("summary serializes"));
            eprintln!("{}", serde_json::json!({"status": "ok", "exit_code": 0, "output": out_dir}));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
