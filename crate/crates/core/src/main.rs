use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use geofind::metrics::MetricConfig;
use geofind::numeric::{ModelSet, NumericConfig, Verdict, DEFAULT_MODELS, DEFAULT_TOL};
use geofind::pipeline::{run_pipeline, Mode, PipelineConfig, PipelineError};
use geofind::report::{emit_ranking, emit_report, emit_saturation, fixed, Format, SCHEMA};
use geofind::rules::{parse_rules, saturate_with, Budget, Rule, SaturationOptions, DEFAULT_RULES};
use geofind::{initial_facts, parse_construction, Construction, Fact};

#[derive(Parser)]
#[command(
    name = "geofind",
    version,
    about = "Find and rank geometric theorems implied by a construction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive, filter and rank facts; print the full report.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Saturate under the rules without numeric filtering or ranking.
    Saturate {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Like `run`, but print only the ranking.
    Rank {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check facts numerically against random models of a construction.
    Check {
        file: PathBuf,
        /// Facts such as `coll(G,H,I)`.
        #[arg(required = true)]
        facts: Vec<String>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Validate a rule file, or print the bundled rules.
    Rules {
        #[arg(long, value_name = "FILE")]
        validate: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Opts {
    /// Rule file; the bundled default rules when omitted.
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    #[arg(long, default_value = "fixpoint", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    max_rounds: u32,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_facts: u64,
    /// Number of random models used for numeric checks.
    #[arg(long, default_value_t = DEFAULT_MODELS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Relative numeric tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Interestingness threshold in [0, 1]; overrides the weights file.
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep at most K ranked facts; overrides the weights file.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    top: Option<u64>,
    /// Metric configuration (TOML).
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
    /// Do not derive facts whose side conditions need numeric checking.
    #[arg(long)]
    strict_sides: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Input(String),
    Degenerate(String),
    Soundness(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Usage(m) => (1, m),
            Failure::Input(m) => (2, m),
            Failure::Degenerate(m) => (3, m),
            Failure::Soundness(m) => (4, m),
        };
        eprintln!("geofind: {msg}");
        ExitCode::from(code)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Degenerate(_) => Failure::Degenerate(e.to_string()),
            PipelineError::Soundness { .. } => Failure::Soundness(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_construction(path: &Path) -> Result<Construction, Failure> {
    parse_construction(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_rules(path: Option<&Path>) -> Result<Vec<Rule>, Failure> {
    match path {
        Some(p) => {
            parse_rules(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
        }
        None => Ok(parse_rules(DEFAULT_RULES).expect("bundled rules parse")),
    }
}

impl Opts {
    fn numeric(&self) -> Result<NumericConfig, Failure> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Failure::Usage(format!(
                "--tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(NumericConfig {
            models: self.seeds as usize,
            tol: self.tol,
            master_seed: self.master_seed,
        })
    }

    fn budget(&self) -> Budget {
        Budget {
            max_rounds: self.max_rounds,
            max_facts: self.max_facts as usize,
        }
    }

    fn pipeline(&self) -> Result<PipelineConfig, Failure> {
        let mut metrics = match &self.weights {
            Some(p) => MetricConfig::from_toml(&read(p)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
            None => MetricConfig::default(),
        };
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Failure::Usage(format!(
                    "--threshold must lie in [0, 1], got {t}"
                )));
            }
            metrics = metrics.with_threshold(t);
        }
        if let Some(k) = self.top {
            metrics = metrics.with_top_k(Some(k as usize));
        }
        Ok(PipelineConfig {
            mode: self.mode,
            budget: self.budget(),
            numeric: self.numeric()?,
            metrics,
            strict_sides: self.strict_sides,
        })
    }
}

fn check(file: &Path, facts: &[String], opts: &Opts) -> Result<String, Failure> {
    let c = load_construction(file)?;
    let known: Vec<_> = c.points().cloned().collect();
    let mut parsed = Vec::new();
    for s in facts {
        let f: Fact = s.parse().map_err(|e| Failure::Input(format!("{s}: {e}")))?;
        if let Some(p) = f.args().iter().find(|p| !known.contains(p)) {
            return Err(Failure::Input(format!(
                "{s}: point {p} is not defined by the construction"
            )));
        }
        parsed.push(f);
    }
    let cfg = opts.numeric()?;
    let models = ModelSet::sample(&c, &cfg).map_err(|e| Failure::Degenerate(e.to_string()))?;
    let verdicts: Vec<(Fact, Verdict)> = parsed
        .into_iter()
        .map(|f| {
            let v = models.verify(&f);
            (f, v)
        })
        .collect();
    Ok(match opts.format {
        Format::Json => {
            let results: Vec<_> = verdicts
                .iter()
                .map(|(f, v)| match v {
                    Verdict::Fails { seed } => {
                        serde_json::json!({"fact": f.to_string(), "status": "fails", "seed": seed})
                    }
                    Verdict::Holds => serde_json::json!({"fact": f.to_string(), "status": "holds"}),
                    Verdict::Degenerate => {
                        serde_json::json!({"fact": f.to_string(), "status": "degenerate"})
                    }
                })
                .collect();
            let v = serde_json::json!({
                "schema": SCHEMA,
                "models": cfg.models,
                "tol": fixed(cfg.tol),
                "master_seed": cfg.master_seed,
                "results": results,
            });
            serde_json::to_string_pretty(&v).expect("json values serialize") + "\n"
        }
        Format::Text => verdicts
            .iter()
            .map(|(f, v)| match v {
                Verdict::Holds => format!("holds  {f}\n"),
                Verdict::Fails { seed } => format!("fails  {f}  (seed {seed})\n"),
                Verdict::Degenerate => format!("degenerate  {f}\n"),
            })
            .collect(),
    })
}

fn execute(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Run { file, opts } => {
            let cfg = opts.pipeline()?;
            let (c, rules) = (
                load_construction(&file)?,
                load_rules(opts.rules.as_deref())?,
            );
            Ok(emit_report(&run_pipeline(&c, &rules, &cfg)?, opts.format))
        }
        Command::Rank { file, opts } => {
            let cfg = opts.pipeline()?;
            let (c, rules) = (
                load_construction(&file)?,
                load_rules(opts.rules.as_deref())?,
            );
            Ok(emit_ranking(&run_pipeline(&c, &rules, &cfg)?, opts.format))
        }
        Command::Saturate { file, opts } => {
            let (c, rules) = (
                load_construction(&file)?,
                load_rules(opts.rules.as_deref())?,
            );
            let d0 = initial_facts(&c);
            let sat = saturate_with(
                &d0,
                &rules,
                SaturationOptions {
                    budget: opts.budget(),
                    strict_sides: opts.strict_sides,
                    ..Default::default()
                },
            );
            Ok(emit_saturation(&d0, &sat, opts.format))
        }
        Command::Check { file, facts, opts } => check(&file, &facts, &opts),
        Command::Rules {
            validate: Some(path),
        } => {
            let rules = load_rules(Some(&path))?;
            Ok(format!("{}: {} rules ok\n", path.display(), rules.len()))
        }
        Command::Rules { validate: None } => Ok(DEFAULT_RULES.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => f.exit(),
    }
}
