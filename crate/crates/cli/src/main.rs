mod config;
mod error;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{parse_num, FieldSpec, GridSpec, Num, Params, PotentialSpec, RunConfig, WeightSpec};
use error::CliError;
use report::{config_hash, emit_plotdata, pretty, write_report, Report};
use run::{execute, resolve, Sub};

/// Magnetic Hardy inequalities and eigenvalue counting for radial fields.
#[derive(Parser, Debug)]
#[command(name = "magnetic-hardy", version)]
struct Cli {
    /// TOML (or JSON report) config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a human-readable summary instead of the JSON report.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct FieldArgs {
    /// zero, example1, example2, bump or custom.
    #[arg(long = "field")]
    field_kind: Option<String>,
    #[arg(long, value_parser = parse_num)]
    b0: Option<Num>,
    #[arg(long, value_parser = parse_num)]
    gamma: Option<Num>,
    #[arg(long, value_parser = parse_num)]
    total_flux: Option<Num>,
    #[arg(long, value_parser = parse_num)]
    r1: Option<Num>,
    /// Two-column (t, B) table for a custom field.
    #[arg(long)]
    field_file: Option<String>,
    /// regular, singular or not_locally_integrable.
    #[arg(long)]
    field_class: Option<String>,
}

impl FieldArgs {
    fn spec(&self) -> Option<FieldSpec> {
        let s = FieldSpec {
            kind: self.field_kind.clone(),
            b0: self.b0,
            gamma: self.gamma,
            total_flux: self.total_flux,
            r1: self.r1,
            file: self.field_file.clone(),
            class: self.field_class.clone(),
        };
        (s != FieldSpec::default()).then_some(s)
    }
}

#[derive(Args, Debug, Default)]
struct PotentialArgs {
    /// zero, vsigma, gaussian_well, step_well or custom.
    #[arg(long = "potential")]
    potential_kind: Option<String>,
    #[arg(long, value_parser = parse_num)]
    sigma: Option<Num>,
    #[arg(long, value_parser = parse_num)]
    depth: Option<Num>,
    #[arg(long, value_parser = parse_num)]
    width: Option<Num>,
    #[arg(long, value_parser = parse_num)]
    radius: Option<Num>,
    /// Two-column (t, V) table for a custom potential.
    #[arg(long)]
    potential_file: Option<String>,
    /// Overall factor on the potential.
    #[arg(long, value_parser = parse_num)]
    scale: Option<Num>,
}

impl PotentialArgs {
    fn spec(&self) -> Option<PotentialSpec> {
        let s = PotentialSpec {
            kind: self.potential_kind.clone(),
            sigma: self.sigma,
            depth: self.depth,
            width: self.width,
            radius: self.radius,
            file: self.potential_file.clone(),
            scale: self.scale,
        };
        (s != PotentialSpec::default()).then_some(s)
    }
}

#[derive(Args, Debug, Default)]
struct WeightArgs {
    /// rho0, log_power, singular_rho, cfkp, aharonov_bohm or custom.
    #[arg(long = "weight")]
    weight_kind: Option<String>,
    /// Exponent of the log_power weight.
    #[arg(long, value_parser = parse_num)]
    weight_b: Option<Num>,
    /// Scale radius of the cfkp weight.
    #[arg(long, value_parser = parse_num)]
    cfkp_r0: Option<Num>,
    /// Flux of the aharonov_bohm weight.
    #[arg(long, value_parser = parse_num)]
    mu: Option<Num>,
    /// Two-column (t, w) table for a custom weight.
    #[arg(long)]
    weight_file: Option<String>,
}

impl WeightArgs {
    fn spec(&self) -> Option<WeightSpec> {
        let s = WeightSpec {
            kind: self.weight_kind.clone(),
            b: self.weight_b,
            r0: self.cfkp_r0,
            mu: self.mu,
            file: self.weight_file.clone(),
        };
        (s != WeightSpec::default()).then_some(s)
    }
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    #[arg(long, value_parser = parse_num, allow_hyphen_values = true)]
    t_min: Option<Num>,
    #[arg(long, value_parser = parse_num, allow_hyphen_values = true)]
    t_max: Option<Num>,
    /// Number of grid nodes.
    #[arg(long = "grid")]
    n: Option<usize>,
    /// Nodes uniform in `t` or in the stretched coordinate `s`.
    #[arg(long)]
    spacing: Option<String>,
}

impl GridArgs {
    fn spec(&self) -> Option<GridSpec> {
        let s = GridSpec { t_min: self.t_min, t_max: self.t_max, n: self.n, spacing: self.spacing.clone() };
        (s != GridSpec::default()).then_some(s)
    }
}

#[derive(Args, Debug, Default)]
struct PointArgs {
    /// Radius.
    #[arg(long, value_parser = parse_num)]
    r: Option<Num>,
    /// Log radius `ln r`.
    #[arg(long, value_parser = parse_num, allow_hyphen_values = true)]
    t: Option<Num>,
}

#[derive(Args, Debug, Default)]
struct LadderArgs {
    /// Comma-separated couplings.
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    lambdas: Option<Vec<Num>>,
    /// inertia, prufer or phase_integral.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Flux function, its radial gauge and the singularity class.
    Flux {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Hardy weight value, optionally with its log moment.
    Weight {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_parser = parse_num)]
        moment_alpha: Option<Num>,
        /// `ln R` of the moment's outer radius.
        #[arg(long, value_parser = parse_num)]
        log_r: Option<Num>,
    },
    /// The level-set functional [V]_a with its saturation check.
    Vnorm {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long, value_parser = parse_num)]
        a: Option<Num>,
        #[arg(long, value_parser = parse_num)]
        cap_depth: Option<Num>,
    },
    /// Residual of the one-dimensional Hardy identity.
    IdentityCheck {
        #[arg(long, value_parser = parse_num)]
        r0: Option<Num>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Weighted-norm to form ratios of u_alpha near the origin.
    ProbeZero {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_parser = parse_num)]
        b: Option<Num>,
        #[arg(long, value_parser = parse_num)]
        alpha: Option<Num>,
        /// Comma-separated cutoffs k.
        #[arg(long, value_parser = parse_num, value_delimiter = ',')]
        cuts: Option<Vec<Num>>,
    },
    /// Form and weighted norm of u_n along a ladder of n.
    ProbeInfinity {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long, value_parser = parse_num)]
        alpha_exp: Option<Num>,
        /// Comma-separated values of n.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u64>>,
    },
    /// Discrete Hardy constant over a range of angular modes.
    Hardy {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, allow_hyphen_values = true)]
        m_min: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        m_max: Option<i64>,
    },
    /// Negative eigenvalues of (i grad + A)^2 - lambda V.
    Count {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_num)]
        lambda: Option<Num>,
        /// inertia, prufer or phase_integral.
        #[arg(long)]
        method: Option<String>,
    },
    /// Eigenvalue counts along a coupling ladder with a power-law fit.
    Sweep {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Prior bound integral and the [V]_a counting-bound ratios.
    Bound {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        ladder: LadderArgs,
        #[arg(long, value_parser = parse_num)]
        a: Option<Num>,
        #[arg(long, value_parser = parse_num)]
        cap_depth: Option<Num>,
    },
}

fn overrides(cmd: &Command) -> (Sub, RunConfig) {
    let mut c = RunConfig::default();
    let mut p = Params::default();
    let sub = match cmd {
        Command::Flux { field, point } => {
            c.field = field.spec();
            (p.r, p.t) = (point.r, point.t);
            Sub::Flux
        }
        Command::Weight { field, weight, point, moment_alpha, log_r } => {
            c.field = field.spec();
            c.weight = weight.spec();
            (p.r, p.t) = (point.r, point.t);
            (p.moment_alpha, p.log_r) = (*moment_alpha, *log_r);
            Sub::Weight
        }
        Command::Vnorm { potential, a, cap_depth } => {
            c.potential = potential.spec();
            (p.a, p.cap_depth) = (*a, *cap_depth);
            Sub::Vnorm
        }
        Command::IdentityCheck { r0, grid } => {
            c.grid = grid.spec();
            p.r0 = *r0;
            Sub::IdentityCheck
        }
        Command::ProbeZero { field, b, alpha, cuts } => {
            c.field = field.spec();
            (p.b, p.alpha, p.cuts) = (*b, *alpha, cuts.clone());
            Sub::ProbeZero
        }
        Command::ProbeInfinity { field, weight, alpha_exp, n_list } => {
            c.field = field.spec();
            c.weight = weight.spec();
            (p.alpha_exp, p.n_list) = (*alpha_exp, n_list.clone());
            Sub::ProbeInfinity
        }
        Command::Hardy { field, weight, grid, m_min, m_max } => {
            c.field = field.spec();
            c.weight = weight.spec();
            c.grid = grid.spec();
            (p.m_min, p.m_max) = (*m_min, *m_max);
            Sub::Hardy
        }
        Command::Count { field, potential, grid, lambda, method } => {
            c.field = field.spec();
            c.potential = potential.spec();
            c.grid = grid.spec();
            (p.lambda, p.method) = (*lambda, method.clone());
            Sub::Count
        }
        Command::Sweep { field, potential, grid, ladder } => {
            c.field = field.spec();
            c.potential = potential.spec();
            c.grid = grid.spec();
            (p.lambdas, p.method) = (ladder.lambdas.clone(), ladder.method.clone());
            Sub::Sweep
        }
        Command::Bound { field, potential, grid, ladder, a, cap_depth } => {
            c.field = field.spec();
            c.potential = potential.spec();
            c.grid = grid.spec();
            (p.lambdas, p.method) = (ladder.lambdas.clone(), ladder.method.clone());
            (p.a, p.cap_depth) = (*a, *cap_depth);
            Sub::Bound
        }
    };
    c.params = (p != Params::default()).then_some(p);
    (sub, c)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("MAGNETIC_HARDY_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::value("MAGNETIC_HARDY_THREADS", format!("expected a positive integer, got `{v}`")))?;
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    configure_threads()?;
    let (sub, flags) = overrides(&cli.command);
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.overlay(&flags);
    if let Some(out) = &cli.out {
        cfg.output = Some(out.display().to_string());
    }
    resolve(&mut cfg, sub);
    let outcome = execute(&cfg, sub)?;
    let hash = config_hash(&cfg);
    let stem = format!("{}-{hash}", sub.name());
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| ".".into()));
    let mut files = emit_plotdata(&dir, &stem, &outcome.tables)?;
    files.insert(0, format!("{stem}.json"));
    let report = Report {
        tool: "magnetic-hardy",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        config_hash: hash,
        payload: outcome.payload,
        warnings: outcome.warnings,
        files,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_report(&dir, &stem, &report)?;
    if cli.pretty {
        print!("{}", pretty(&report, &outcome.tables));
    } else {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    }
    Ok(!report.warnings.is_empty())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match main_inner(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
