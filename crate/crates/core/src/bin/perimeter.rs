use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use perimeter_core::oracle::{sweep_csv, DEFAULT_MAX_N};
use perimeter_core::run::{
    self, lambda_tag, load_scenario, parse_lambda_list, with_suffix, write_file, ConfigFile, RunConfig, RunError,
};
use perimeter_core::scenario::{self, ScenarioSpec};
use perimeter_core::GameState;

#[derive(Parser, Debug)]
#[command(name = "perimeter", version, about = "Perimeter search over congestion heat maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an agent and write the perimeter document, overlay and log.
    Run(CommonArgs),
    /// Exhaustively certify the optimal state.
    Oracle(OracleArgs),
    /// Oracle optima for a list of λ values, as CSV.
    Sweep(SweepArgs),
    /// Write a synthetic scenario as PGM plus vertex file.
    Synth(SynthArgs),
    /// Exact value of one selection of vertex ids.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Flat key-value TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long)]
    vertices: Option<PathBuf>,
    /// Bundled scenario name (core, fork, uniform) or a scenario TOML path.
    #[arg(long)]
    scenario: Option<String>,
    /// Regularization λ as a rational, e.g. 1/10. `run` accepts a
    /// comma-separated list and plays one game per value.
    #[arg(long)]
    lambda: Option<String>,
    /// Normalization β; defaults to the frame area.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated ids, or `random` to pin one subset drawn from the seed.
    #[arg(long)]
    init_state: Option<String>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse vertex sets larger than this.
    #[arg(long)]
    max_vertices: Option<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated λ values.
    #[arg(long, default_value = "10,1,1/10")]
    lambdas: String,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Bundled scenario name or scenario TOML path.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated vertex ids; empty for the empty selection.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    ids: String,
}

impl CommonArgs {
    fn to_file(&self) -> ConfigFile {
        ConfigFile {
            heatmap: self.heatmap.clone(),
            vertices: self.vertices.clone(),
            scenario: self.scenario.clone(),
            lambda: self.lambda.clone(),
            beta: self.beta.clone(),
            alpha: self.alpha,
            epsilon: self.epsilon,
            episodes: self.episodes,
            horizon: self.horizon,
            seed: self.seed,
            init_state: self.init_state.clone(),
            out: self.out.clone(),
            lambdas: None,
            max_vertices: self.max_vertices,
            palette: None,
        }
    }

    /// Merged config file and flags, with `lambda` left unparsed so that
    /// `run` can accept a list.
    fn merged(&self) -> Result<ConfigFile, RunError> {
        let base = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(base.overlay(self.to_file()))
    }

    fn resolve(&self) -> Result<RunConfig, RunError> {
        RunConfig::from_file(self.merged()?)
    }
}

fn cmd_run(args: &CommonArgs) -> Result<(), RunError> {
    let mut file = args.merged()?;
    let lambdas = match file.lambda.take() {
        Some(l) => parse_lambda_list(&l)?,
        None => parse_lambda_list("1")?,
    };
    let config = RunConfig::from_file(file)?;
    let scenario = load_scenario(&config.source, &config.palette)?;
    let outputs = run::play_games(&config, &scenario, &lambdas)?;
    for (lambda, out) in lambdas.iter().zip(&outputs) {
        let prefix = if lambdas.len() == 1 {
            config.out.clone()
        } else {
            with_suffix(&config.out, &format!(".{}", lambda_tag(lambda)))
        };
        let paths = run::write_game(&prefix, out)?;
        let doc = &out.document;
        println!(
            "lambda={} selected={:?} value={}/{} ({}) zero_pixels={}",
            doc.lambda, doc.selected, doc.value.num, doc.value.den, doc.value.float, doc.zero_pixels_enclosed
        );
        for p in paths {
            println!("  wrote {}", p.display());
        }
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), RunError> {
    let config = args.common.resolve()?;
    let scenario = load_scenario(&config.source, &config.palette)?;
    let report = run::oracle_report(&config, &scenario, args.max_n)?;
    let path = with_suffix(&config.out, ".oracle.json");
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| RunError::Internal(e.to_string()))?;
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    println!(
        "best={:?} value={}/{} ({}) evaluated={} zero_pixels={}",
        report.best_state,
        report.best_value.num,
        report.best_value.den,
        report.best_value.float,
        report.evaluated,
        report.zero_pixels_enclosed
    );
    println!("  wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), RunError> {
    let mut file = args.common.merged()?;
    let list = file.lambdas.take().unwrap_or_else(|| args.lambdas.clone());
    let lambdas = parse_lambda_list(&list)?;
    let config = RunConfig::from_file(file)?;
    let scenario = load_scenario(&config.source, &config.palette)?;
    let rows = run::sweep(&config, &scenario, &lambdas, args.max_n)?;
    let csv = sweep_csv(&rows);
    let path = with_suffix(&config.out, ".sweep.csv");
    write_file(&path, csv.as_bytes())?;
    print!("{csv}");
    println!("  wrote {}", path.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), RunError> {
    let spec = match scenario::bundled(&args.scenario) {
        Ok(spec) => spec,
        Err(_) => {
            let text = std::fs::read_to_string(&args.scenario)
                .map_err(|e| RunError::Input(format!("cannot read {}: {e}", args.scenario)))?;
            ScenarioSpec::from_toml(&text)?
        }
    };
    let (map, verts) = scenario::synth(&spec)?;
    let pgm = with_suffix(&args.out, ".pgm");
    let vfile = with_suffix(&args.out, ".vertices.csv");
    write_file(&pgm, &map.to_pgm())?;
    write_file(&vfile, verts.to_text().as_bytes())?;
    println!("{}x{} map, {} vertices", map.width(), map.height(), verts.len());
    println!("  wrote {}\n  wrote {}", pgm.display(), vfile.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), RunError> {
    let config = args.common.resolve()?;
    let scenario = load_scenario(&config.source, &config.palette)?;
    let state = GameState::parse(&args.ids).map_err(RunError::Input)?;
    let report = run::eval_state(&config, &scenario, &state)?;
    println!(
        "selected={:?} value={}/{} ({}) enclosed_pixels={} zero_pixels={}",
        report.selected,
        report.value.num,
        report.value.den,
        report.value.float,
        report.enclosed_pixels,
        report.zero_pixels_enclosed
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
