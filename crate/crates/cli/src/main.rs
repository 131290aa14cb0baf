use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use frameshift::frames::{self, FilterBank};
use frameshift::network::{extract_with, ExtractOptions, FrameConfig, FrameKind, LayerConfig, NetConfig, Normalize};
use frameshift::verify::{self, BoundReport, DeformationField};
use frameshift::{io, parallel, random_bandlimited, BandlimitSpec, Error, Grid, ModuleSequence, SampledSignal};

/// Deep convolutional feature extraction over semi-discrete frames.
#[derive(Parser, Debug)]
#[command(name = "frameshift", version, about)]
struct Cli {
    /// Worker threads (defaults to FRAMESHIFT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or inspect filter banks.
    #[command(subcommand)]
    Frame(FrameCmd),
    /// Inspect a network configuration.
    #[command(subcommand)]
    Net(NetCmd),
    /// Compute the feature vector of a signal.
    Extract(ExtractArgs),
    /// Check one of the stability bounds on random inputs.
    Verify(VerifyArgs),
    /// Write ready-made network configurations.
    #[command(subcommand)]
    Preset(PresetCmd),
    /// Write test signals.
    #[command(subcommand)]
    Signal(SignalCmd),
}

#[derive(Subcommand, Debug)]
enum FrameCmd {
    Build(BuildArgs),
    /// Print frame bounds and Littlewood-Paley extrema of a bank file.
    Check {
        bank: PathBuf,
        /// Tolerance for the Parseval verdict.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BankKind {
    Wh1d,
    Wav1d,
    Tensor2d,
    Dir2d,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, value_enum)]
    kind: BankKind,
    /// Samples per axis.
    #[arg(long)]
    grid: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Number of scales (tensor2d, dir2d).
    #[arg(long = "J", default_value_t = 3)]
    j: u32,
    /// Number of directions (dir2d).
    #[arg(long = "K", default_value_t = 8)]
    k: u32,
    #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
    k_min: i64,
    #[arg(long, default_value_t = 8, allow_hyphen_values = true)]
    k_max: i64,
    #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
    j_min: i32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    j_max: i32,
    /// `parseval`, `none`, or a positive constant C to divide the atoms by √C.
    #[arg(long, default_value = "parseval")]
    normalize: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum NetCmd {
    /// Print the per-layer admissibility report.
    Check {
        #[arg(long)]
        net: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Extract even if the sequence is not admissible.
    #[arg(long)]
    force: bool,
    /// Stop at this layer instead of the configured depth.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Check {
    Energy,
    Lipschitz,
    Invariance,
    Covariance,
    Deformation,
    BandlimitError,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    check: Check,
    #[arg(long)]
    net: PathBuf,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Band limit of the random inputs (default: half the Nyquist frequency).
    #[arg(long)]
    radius: Option<f64>,
    /// Translation vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Vec<f64>,
    /// Layers to check for invariance and covariance (default: all).
    #[arg(long, value_delimiter = ',')]
    layers: Vec<usize>,
    /// Deformation field JSON; random fields are drawn when omitted.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Also write `layer,measured,bound` rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum PresetCmd {
    /// Directional wavelets, modulus and no pooling on a 2-D grid.
    Scattering {
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long = "J", default_value_t = 3)]
        j: u32,
        #[arg(long = "K", default_value_t = 8)]
        k: u32,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    grid: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
}

#[derive(Subcommand, Debug)]
enum SignalCmd {
    /// Unit-norm random band-limited signal.
    Random {
        #[command(flatten)]
        grid: GridArgs,
        /// Band limit (default: half the Nyquist frequency).
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Zero {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure modes, each with its own exit status.
enum Failure {
    Usage(String),
    Rejected(String),
    Precondition(String),
    Violated,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotAdmissible(ref report) => Failure::Rejected(format!("{e}\n{report}")),
            Error::Precondition(_) | Error::NotBandlimited(_) => Failure::Precondition(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let threads = cli.threads.or_else(parallel::threads_from_env);
    match parallel::with_threads(threads, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rejected(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Violated) => ExitCode::from(4),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Frame(FrameCmd::Build(args)) => frame_build(&args),
        Command::Frame(FrameCmd::Check { bank, tol }) => frame_check(&bank, tol),
        Command::Net(NetCmd::Check { net }) => {
            let seq = ModuleSequence::from_config_file(&net)?;
            println!("{}", seq.admissibility());
            if seq.admissibility().admissible || seq.is_forced() {
                Ok(())
            } else {
                Err(Failure::Rejected("module-sequence is not admissible".into()))
            }
        }
        Command::Extract(args) => cmd_extract(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Preset(PresetCmd::Scattering { grid, spacing, j, k, depth, out }) => {
            let cfg = NetConfig {
                grid: Grid::new(2, grid, spacing)?,
                depth,
                force: false,
                layers: vec![LayerConfig {
                    frame: FrameConfig {
                        kind: FrameKind::Directional2d { j, k },
                        normalize: Normalize::Parseval,
                    },
                    nonlinearity: "modulus".into(),
                    pooling: "subsample:1".into(),
                    propagate: None,
                    output: None,
                }],
            };
            // build once so a bad grid or scale count fails here, not at use
            ModuleSequence::from_config(&cfg, Path::new("."))?;
            fs::write(out, serde_json::to_string_pretty(&cfg)? + "\n")?;
            Ok(())
        }
        Command::Signal(SignalCmd::Random { grid, radius, seed, out }) => {
            let g = grid_of(&grid)?;
            let spec = BandlimitSpec {
                radius: radius.unwrap_or(0.5 * g.nyquist()),
                seed,
            };
            io::write_signal(&out, &random_bandlimited(g, &spec)?)?;
            Ok(())
        }
        Command::Signal(SignalCmd::Zero { grid, out }) => {
            io::write_signal(&out, &SampledSignal::zeros(grid_of(&grid)?))?;
            Ok(())
        }
    }
}

fn grid_of(g: &GridArgs) -> Result<Grid, Error> {
    Grid::new(g.dim, g.grid, g.spacing)
}

fn frame_build(args: &BuildArgs) -> Outcome {
    let dim = match args.kind {
        BankKind::Wh1d | BankKind::Wav1d => 1,
        BankKind::Tensor2d | BankKind::Dir2d => 2,
    };
    let grid = Grid::new(dim, args.grid, args.spacing)?;
    let bank = match args.kind {
        BankKind::Wh1d => frames::build_weyl_heisenberg_1d(grid, args.k_min, args.k_max)?,
        BankKind::Wav1d => frames::build_wavelet_1d(grid, args.j_min, args.j_max)?,
        BankKind::Tensor2d => frames::build_tensor_wavelet_2d(grid, args.j)?,
        BankKind::Dir2d => frames::build_directional_wavelet_2d(grid, args.j, args.k)?,
    };
    let bank = match args.normalize.as_str() {
        "parseval" => bank.normalize_parseval()?,
        "none" => bank,
        c => match c.parse::<f64>() {
            Ok(c) => bank.normalize_scale(c)?,
            Err(_) => {
                return Err(Failure::Usage(format!(
                    "--normalize expects parseval, none or a number, got {c:?}"
                )))
            }
        },
    };
    io::write_bank(&args.out, &bank)?;
    Ok(())
}

fn frame_check(path: &Path, tol: f64) -> Outcome {
    let bank: FilterBank = io::read_bank(path)?;
    let b = bank.frame_bounds();
    println!("A={:.6} B={:.6}", b.a, b.b);
    println!("atoms={} output={}", bank.len(), bank.output_label());
    println!("LP min at {:?}, LP max at {:?}", &b.argmin[..bank.grid().dim], &b.argmax[..bank.grid().dim]);
    println!("admissibility B={:.6} (must not exceed 1)", b.b);
    println!("parseval: {}", if b.is_parseval(tol) { "yes" } else { "no" });
    Ok(())
}

fn cmd_extract(args: &ExtractArgs) -> Outcome {
    let seq = ModuleSequence::from_config_file(&args.net)?;
    let f = io::read_signal(&args.input)?;
    let opts = ExtractOptions {
        force: args.force,
        depth: args.depth,
    };
    let phi = extract_with(&seq, &f, &opts)?;
    io::write_pack(&args.out, &phi)?;
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let seq = ModuleSequence::from_config_file(&args.net)?;
    let grid = *seq.input_grid();
    let radius = args.radius.unwrap_or(0.5 * grid.nyquist());
    let field: Option<DeformationField> = match &args.field {
        Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => None,
    };
    let t = if args.t.is_empty() { vec![1.0; grid.dim] } else { args.t.clone() };
    let layers: Vec<usize> = if args.layers.is_empty() {
        (1..=seq.depth()).collect()
    } else {
        args.layers.clone()
    };
    let (n, s) = (args.trials, args.seed);
    let reports = match args.check {
        Check::Energy => verify::sweep_energy(&seq, n, s, radius)?,
        Check::Lipschitz => verify::sweep_lipschitz(&seq, n, s, radius)?,
        Check::Invariance => verify::sweep_invariance(&seq, n, s, radius, &t, &layers)?,
        Check::Covariance => verify::sweep_covariance(&seq, n, s, radius, &t, &layers)?,
        Check::Deformation => verify::sweep_deformation(&seq, n, s, radius, field.as_ref())?,
        Check::BandlimitError => verify::sweep_bandlimited_error(grid, n, s, radius, field.as_ref())?,
    };

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &reports {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    let summary = verify::summarize(&reports[0].name, &reports);
    writeln!(
        out,
        "{}",
        json!({
            "aggregate": summary.name,
            "trials": summary.trials,
            "passed": summary.passed,
            "pass": format!("{}/{}", summary.passed, summary.trials),
            "min_slack": summary.min_slack,
            "max_measured": summary.max_measured,
        })
    )?;
    if let Some(path) = &args.csv {
        write_csv(path, &reports)?;
    }
    if summary.all_pass {
        Ok(())
    } else {
        Err(Failure::Violated)
    }
}

fn write_csv(path: &Path, reports: &[BoundReport]) -> std::io::Result<()> {
    let mut text = String::from("layer,measured,bound\n");
    for r in reports {
        let layer = r.metadata.get("layer").and_then(|v| v.as_u64()).map_or(String::new(), |l| l.to_string());
        text.push_str(&format!("{layer},{:e},{:e}\n", r.measured, r.bound));
    }
    fs::write(path, text)
}
