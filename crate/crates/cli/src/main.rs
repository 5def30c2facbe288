//! `hubchoice`: design, synthesize, estimate, simulate and value-of-time
//! commands over TOML run configurations.

mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hubchoice_core::designer::{
    assign_tasks, build_commuting_tasks, build_noncommuting_tasks, commuting_plan,
    noncommuting_plan, write_design_csv, DesignPlan,
};
use hubchoice_core::estimator::{estimate, vot, EstimationSettings};
use hubchoice_core::io::{read_dataset_csv, report_text, write_dataset_csv, write_report_csv, RunManifest};
use hubchoice_core::model::ParameterVector;
use hubchoice_core::simulator::{bundled_scenario, ScenarioFile, BUNDLED_SCENARIOS};
use hubchoice_core::synthesizer::{synthesize_dataset, PopulationMarginals};
use hubchoice_core::{Error, Result};

use config::{
    default_vot_pairs, load, load_parameters, resolve, DesignConfig, EstimateConfig,
    MarginalsChoice, SimulateConfig, SynthesizeConfig, VotConfig,
};

/// Exit status when estimation stops without meeting the convergence test
/// (2 is taken by argument errors).
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "hubchoice", version, about = "Shared mobility hub choice modelling")]
struct Cli {
    /// Worker threads for likelihood and simulation loops.
    #[arg(long, global = true, env = "HUBCHOICE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write an orthogonal design, its codebook and the task attributes.
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Generate a synthetic choice dataset and its truth parameters.
    Synthesize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Estimate a model by maximum simulated likelihood.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Simulation draws per respondent.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Simulate scenario shares and policy deltas.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Simulation draws per scenario.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Report values of time for coefficient pairs.
    Vot {
        #[command(flatten)]
        common: Common,
    },
}

enum Outcome {
    Done,
    NotConverged,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Design { common, seed } => design(&common, seed),
        Command::Synthesize { common, seed } => synthesize(&common, seed),
        Command::Estimate { common, seed, draws } => run_estimate(&common, seed, draws),
        Command::Simulate { common, seed, draws } => simulate(&common, seed, draws),
        Command::Vot { common } => value_of_time(&common),
    }
}

fn config_dir(common: &Common) -> PathBuf {
    common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

struct Output {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Output {
    fn new<C: Serialize>(common: &Common, command: &str, seed: u64, config: &C) -> Result<Self> {
        std::fs::create_dir_all(&common.out)?;
        let mut manifest = RunManifest::new(command, seed, config)?;
        manifest.add_input(&common.config)?;
        Ok(Self {
            dir: common.out.clone(),
            manifest,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn writer(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.path(name), text)?;
        self.record(name)
    }

    fn record(&mut self, name: &str) -> Result<()> {
        let path = self.path(name);
        self.manifest.add_output(&path)
    }

    fn finish(self) -> Result<()> {
        self.manifest.write(&self.dir.join("manifest.json"))
    }
}

fn design(common: &Common, seed: u64) -> Result<Outcome> {
    let cfg: DesignConfig = load(&common.config)?;
    let given = [cfg.commute.is_some(), cfg.non_commute.is_some(), cfg.factors.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(Error::Design(
            "the design configuration needs exactly one of [commute], [non_commute] or factors".into(),
        ));
    }
    let mut out = Output::new(common, "design", seed, &cfg)?;
    let (plan, tasks, kind): (DesignPlan, _, _) = if let Some(reference) = &cfg.commute {
        for w in reference.warnings() {
            eprintln!("warning: {w}");
        }
        (
            commuting_plan(reference)?,
            Some(build_commuting_tasks(reference)?),
            Some(hubchoice_core::model::DatasetKind::Commute),
        )
    } else if let Some(nc) = &cfg.non_commute {
        (
            noncommuting_plan(nc.distance_km, nc.mode)?,
            Some(build_noncommuting_tasks(nc.distance_km, nc.purpose, nc.mode)?),
            Some(hubchoice_core::model::DatasetKind::NonCommute),
        )
    } else {
        let factors = cfg.factors.clone().unwrap_or_default();
        (DesignPlan::new(factors)?, None, None)
    };

    plan.write_csv(out.writer("plan.csv")?)?;
    out.record("plan.csv")?;
    out.text("codebook.txt", &plan.codebook())?;
    if let Some(tasks) = &tasks {
        write_design_csv(tasks, out.writer("tasks.csv")?)?;
        out.record("tasks.csv")?;
    }
    if let (Some(kind), true) = (kind, cfg.respondents > 0) {
        let mut w = csv::Writer::from_writer(out.writer("assignment.csv")?);
        w.write_record(["respondent", "position", "cell", "run"])?;
        for respondent in 1..=cfg.respondents {
            for (position, slot) in assign_tasks(kind, seed, respondent).iter().enumerate() {
                w.write_record([
                    respondent.to_string(),
                    position.to_string(),
                    slot.cell.map(|c| c.to_string()).unwrap_or_default(),
                    slot.run.to_string(),
                ])?;
            }
        }
        w.flush()?;
        drop(w);
        out.record("assignment.csv")?;
    }
    println!(
        "design with {} factors over {} runs written to {}",
        plan.factors().len(),
        plan.matrix().len(),
        common.out.display()
    );
    out.finish()?;
    Ok(Outcome::Done)
}

fn synthesize(common: &Common, seed: u64) -> Result<Outcome> {
    let mut cfg: SynthesizeConfig = load(&common.config)?;
    let base = config_dir(common);
    cfg.model.resolve_paths(&base);
    cfg.parameters = cfg.parameters.map(|p| resolve(&base, &p));
    if cfg.individuals == 0 {
        return Err(Error::ZeroCount("individuals"));
    }
    let spec = cfg.model.load_spec()?;
    let params = load_parameters(cfg.parameters.as_deref(), spec.kind)?.aligned_to(&spec)?;
    let marginals = match cfg.marginals {
        MarginalsChoice::Modeled => PopulationMarginals::survey_sample().restricted_to_modeled(),
        MarginalsChoice::Survey => PopulationMarginals::survey_sample(),
    };

    let mut out = Output::new(common, "synthesize", seed, &cfg)?;
    for p in [&cfg.model.spec, &cfg.parameters].into_iter().flatten() {
        out.manifest.add_input(p)?;
    }
    let data = synthesize_dataset(&spec, &params, cfg.individuals, &marginals, seed)?;
    write_dataset_csv(&data, out.writer("dataset.csv")?)?;
    out.record("dataset.csv")?;
    params.write_csv(out.writer("truth.csv")?)?;
    out.record("truth.csv")?;
    println!(
        "{} individuals, {} tasks written to {}",
        data.n_individuals(),
        data.n_observations(),
        common.out.display()
    );
    out.finish()?;
    Ok(Outcome::Done)
}

fn run_estimate(common: &Common, seed: u64, draws: Option<usize>) -> Result<Outcome> {
    let mut cfg: EstimateConfig = load(&common.config)?;
    let base = config_dir(common);
    cfg.model.resolve_paths(&base);
    cfg.dataset = resolve(&base, &cfg.dataset);
    cfg.start = cfg.start.map(|p| resolve(&base, &p));
    cfg.draws = draws.or(cfg.draws);

    let spec = cfg.model.load_spec()?;
    let data = read_dataset_csv(File::open(&cfg.dataset).map_err(|e| {
        Error::Parse(format!("cannot read {}: {e}", cfg.dataset.display()))
    })?)?;
    let start = match &cfg.start {
        Some(p) => ParameterVector::read_csv(File::open(p)?)?.aligned_to(&spec)?,
        None => ParameterVector::start_for(&spec),
    };
    let mut settings = EstimationSettings::new(seed);
    if let Some(n) = cfg.draws {
        settings.n_draws = n;
    }
    if let Some(n) = cfg.max_iterations {
        settings.max_iterations = n;
    }
    if let Some(t) = cfg.gradient_tolerance {
        settings.gradient_tolerance = t;
    }
    settings.compute_std_errors = cfg.std_errors;
    cfg.draws = Some(settings.n_draws);

    let mut out = Output::new(common, "estimate", seed, &(&cfg, &settings))?;
    out.manifest.add_input(&cfg.dataset)?;
    for p in [&cfg.model.spec, &cfg.start].into_iter().flatten() {
        out.manifest.add_input(p)?;
    }
    let result = estimate(&data, &spec, &start, &settings)?;
    let text = report_text(&result, &spec)?;
    out.text("report.txt", &text)?;
    write_report_csv(&result, &spec, out.writer("report.csv")?)?;
    out.record("report.csv")?;
    result.estimates.write_csv(out.writer("estimates.csv")?)?;
    out.record("estimates.csv")?;
    out.finish()?;
    print!("{text}");
    if result.convergence.converged {
        Ok(Outcome::Done)
    } else {
        eprintln!(
            "error: estimation did not converge ({:?} after {} iterations, gradient norm {:.3e})",
            result.convergence.reason, result.convergence.iterations, result.convergence.gradient_norm
        );
        Ok(Outcome::NotConverged)
    }
}

fn simulate(common: &Common, seed: u64, draws: Option<usize>) -> Result<Outcome> {
    let mut cfg: SimulateConfig = load(&common.config)?;
    let base = config_dir(common);
    cfg.model.resolve_paths(&base);
    cfg.parameters = cfg.parameters.map(|p| resolve(&base, &p));
    cfg.draws = draws.or(cfg.draws);

    let scenario_path = if BUNDLED_SCENARIOS.contains(&cfg.scenario.as_str()) {
        None
    } else {
        Some(resolve(&base, Path::new(&cfg.scenario)))
    };
    let scenario = match &scenario_path {
        None => bundled_scenario(&cfg.scenario)?,
        Some(p) => ScenarioFile::from_toml(&std::fs::read_to_string(p).map_err(|e| {
            Error::Scenario(format!("cannot read {}: {e}", p.display()))
        })?)?,
    };
    let spec = cfg.model.load_spec()?;
    let params = load_parameters(cfg.parameters.as_deref(), spec.kind)?;

    let mut out = Output::new(common, "simulate", seed, &(&cfg, &scenario))?;
    for p in [&cfg.model.spec, &cfg.parameters, &scenario_path].into_iter().flatten() {
        out.manifest.add_input(p)?;
    }
    let result = scenario.run(&params, &spec, seed, cfg.draws)?;
    if let Some(grid) = &result.grid {
        let text = grid.to_text();
        out.text("shares.txt", &text)?;
        grid.write_csv(out.writer("shares.csv")?)?;
        out.record("shares.csv")?;
        print!("{text}");
    }
    if let Some(policy) = &result.policy {
        let text = policy.to_text();
        out.text("policy.txt", &text)?;
        policy.write_csv(out.writer("policy.csv")?)?;
        out.record("policy.csv")?;
        print!("{text}");
    }
    out.finish()?;
    Ok(Outcome::Done)
}

fn value_of_time(common: &Common) -> Result<Outcome> {
    let mut cfg: VotConfig = load(&common.config)?;
    let base = config_dir(common);
    cfg.model.resolve_paths(&base);
    cfg.parameters = cfg.parameters.map(|p| resolve(&base, &p));
    if cfg.pairs.is_empty() {
        cfg.pairs = default_vot_pairs(cfg.model.model);
    }
    let params = load_parameters(cfg.parameters.as_deref(), cfg.model.model)?;

    let mut out = Output::new(common, "vot", 0, &cfg)?;
    if let Some(p) = &cfg.parameters {
        out.manifest.add_input(p)?;
    }
    let mut w = csv::Writer::from_writer(out.writer("vot.csv")?);
    w.write_record(["label", "time_coefficient", "cost_coefficient", "eur_per_hour"])?;
    let width = cfg.pairs.iter().map(|p| p.label.len()).max().unwrap_or(0) + 2;
    for pair in &cfg.pairs {
        let v = vot(params.get(&pair.time)?, params.get(&pair.cost)?)?;
        println!("{:<width$}{v:>8.1} EUR/h", pair.label);
        w.write_record([pair.label.clone(), pair.time.clone(), pair.cost.clone(), format!("{v:.2}")])?;
    }
    w.flush()?;
    drop(w);
    out.record("vot.csv")?;
    out.finish()?;
    Ok(Outcome::Done)
}
