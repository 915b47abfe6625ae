use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bm3::diagnostics::{
    dataset_for_cell, posterior_predictive_cramers_v, sample_cramers_v, select_model, waic, GridCell, Matrix,
    ModelGrid, Selection, Waic, PARSIMONY_MARGIN,
};
use bm3::io::{build_summary, ingest_long_csv, read_draws, write_draws, write_long_csv, write_summary, RunConfig};
use bm3::replicate::{render_replicate_tables, replicate_harness};
use bm3::sampler::{check_dims, pool_chains, run_chains, DrawStore, GroupUpdate, SamplerConfig};
use bm3::simulate::{builtin_setting, draw_dataset, registry_design, selection_design, GroundTruth, Setting};
use bm3::{Dataset, Error, Result};

const DATA_FILE: &str = "data.csv";
const DEFAULT_TOP_SUBTYPES: usize = 20;
const DEFAULT_PREDICTIVE_DRAWS: usize = 200;

/// Blockwise mixed membership models for longitudinal categorical data.
#[derive(Parser)]
#[command(name = "bm3", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from a built-in design.
    Simulate(SimulateArgs),
    /// Fit one model and store its posterior draws.
    Fit(FitArgs),
    /// Fit every cell of a grid and pick one by WAIC.
    Select(SelectArgs),
    /// Posterior modes, means and subtype tables of stored draws.
    Summarize(SummarizeArgs),
    /// WAIC and sample versus posterior-predictive Cramér's V.
    Diagnose(DiagnoseArgs),
    /// Repeated simulate-and-fit recovery study.
    Replicate(ReplicateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// I, II, III, selection or registry.
    #[arg(long)]
    setting: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct SamplerArgs {
    /// Flat TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    sigma_alpha: Option<f64>,
    /// Tune the concentration proposal during burn-in.
    #[arg(long)]
    adapt_sigma: bool,
    /// collapsed or conditional.
    #[arg(long)]
    group_update: Option<String>,
    /// Disable the profile relabeling move.
    #[arg(long)]
    no_label_moves: bool,
}

impl SamplerArgs {
    fn resolve(&self) -> Result<(RunConfig, SamplerConfig)> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut c = file.sampler(&SamplerConfig::default());
        macro_rules! set {
            ($($arg:ident => $f:ident),*) => { $( if let Some(v) = self.$arg { c.$f = v; } )* };
        }
        set!(iters => iterations, burn => burn_in, thin => thin, chains => chains, seed => seed,
             threads => threads, sigma_alpha => sigma_alpha);
        if self.adapt_sigma {
            c.adapt_sigma = true;
        }
        if self.no_label_moves {
            c.label_moves = false;
        }
        if let Some(g) = &self.group_update {
            c.group_update = match g.as_str() {
                "collapsed" => GroupUpdate::Collapsed,
                "conditional" => GroupUpdate::Conditional,
                other => return Err(Error::Config(format!("unknown group update `{other}`"))),
            };
        }
        c.validate()?;
        Ok((file, c))
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "G")]
    groups: Option<usize>,
    #[arg(long = "R")]
    periods: Option<usize>,
    #[arg(long = "K")]
    profiles: Option<usize>,
    /// 1 pools subpopulations; defaults to the number in the data.
    #[arg(long = "C")]
    subpops: Option<usize>,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    /// For example `G=2,3,4;K=3,4;C=1;R=2`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    margin: Option<f64>,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    draws: PathBuf,
    /// Number of subtype keys listed per period.
    #[arg(long)]
    top: Option<usize>,
    /// CSV `subject,value` with one external value per subject.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    draws: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Draws used for the posterior-predictive association matrix.
    #[arg(long)]
    predictive_draws: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplicateArgs {
    #[arg(long)]
    setting: String,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    reps: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[arg(long)]
    out: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn load_data(path: &Path, file: &RunConfig) -> Result<Dataset> {
    ingest_long_csv(path, file.categories.as_deref())
}

#[derive(Serialize)]
struct TruthFile<'a> {
    groups: Vec<usize>,
    cutpoints: &'a [Vec<usize>],
    alpha: &'a [f64],
    lambda: Vec<Vec<Vec<f64>>>,
}

fn truth_file(truth: &GroundTruth) -> TruthFile<'_> {
    let l = &truth.params.lambda;
    TruthFile {
        groups: truth.blocks.groups.iter().map(|g| g + 1).collect(),
        cutpoints: &truth.blocks.cutpoints,
        alpha: &truth.params.alpha,
        lambda: (0..l.n_items())
            .map(|j| (0..l.categories()[j]).map(|c| l.row(j, c).to_vec()).collect())
            .collect(),
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let (sim, blocks, params) = match args.setting.to_ascii_lowercase().as_str() {
        "selection" => selection_design(),
        "registry" => registry_design(args.seed),
        other => builtin_setting(other.parse::<Setting>()?),
    };
    let mut sim = sim.with_seed(args.seed);
    if let Some(n) = args.n {
        if args.setting.eq_ignore_ascii_case("registry") && n != sim.n {
            return Err(Error::Config("the registry design has a fixed sample size".into()));
        }
        sim = sim.with_n(n);
    }
    let (data, truth) = draw_dataset(&sim, &blocks, &params.lambda, &params.alpha)?;
    create_dir(&args.out)?;
    write_long_csv(&data, &args.out.join(DATA_FILE))?;
    write_json(&args.out.join("truth.json"), &truth_file(&truth))
}

fn fit(args: &FitArgs) -> Result<()> {
    let (file, config) = args.sampler.resolve()?;
    let raw = load_data(&args.data, &file)?;
    let need = |flag: Option<usize>, key: Option<usize>, name: &str| {
        flag.or(key)
            .ok_or_else(|| Error::Config(format!("model dimension {name} is not set")))
    };
    let cell = GridCell {
        groups: need(args.groups, file.groups, "G")?,
        periods: need(args.periods, file.periods, "R")?,
        profiles: need(args.profiles, file.profiles, "K")?,
        subpops: args.subpops.or(file.subpops).unwrap_or(raw.n_subpops),
    };
    let data = dataset_for_cell(&raw, &cell)?;
    check_dims(&data, cell.dims())?;
    let store = pool_chains(run_chains(&data, cell.dims(), &config)?)
        .ok_or(Error::InsufficientDraws { required: 1, found: 0 })?;
    write_draws(&store, &args.out)?;
    write_long_csv(&data, &args.out.join(DATA_FILE))
}

fn select(args: &SelectArgs) -> Result<()> {
    let (file, config) = args.sampler.resolve()?;
    let grid: ModelGrid = match (&args.grid, file.model_grid()?) {
        (Some(spec), _) => spec.parse()?,
        (None, Some(grid)) => grid,
        (None, None) => return Err(Error::Config("no model grid given".into())),
    };
    let margin = args.margin.or(file.parsimony_margin).unwrap_or(PARSIMONY_MARGIN);
    let data = load_data(&args.data, &file)?;
    let selection = select_model(&data, &grid, &config, margin)?;
    create_dir(&args.out)?;
    write_json(&args.out.join("selection.json"), &selection)?;
    write_file(&args.out.join("selection.txt"), &render_selection(&selection))?;
    if selection.chosen.is_none() {
        return Err(Error::InfeasibleDims("every grid cell failed to fit".into()));
    }
    Ok(())
}

fn render_selection(s: &Selection) -> String {
    let mut out = format!(
        "{:>3} {:>3} {:>3} {:>3} {:>8} {:>14} {:>7}  note\n",
        "G", "R", "K", "C", "params", "WAIC", "draws"
    );
    for (idx, r) in s.table.iter().enumerate() {
        let c = r.cell;
        let waic = r.waic.map_or("-".to_string(), |w| format!("{:.2}", w.waic));
        let note = match (&r.error, s.chosen == Some(idx)) {
            (Some(e), _) => format!("failed: {e}"),
            (None, true) => "selected".to_string(),
            _ => String::new(),
        };
        out += &format!(
            "{:>3} {:>3} {:>3} {:>3} {:>8} {:>14} {:>7}  {}\n",
            c.groups, c.periods, c.profiles, c.subpops, r.free_params, waic, r.draws, note
        );
    }
    out
}

/// The data a draws directory was fitted to, if `fit` stored it there.
fn stored_data(draws_dir: &Path, store: &DrawStore) -> Result<Option<Dataset>> {
    let path = draws_dir.join(DATA_FILE);
    if !path.exists() {
        return Ok(None);
    }
    ingest_long_csv(&path, Some(&store.dims.categories)).map(Some)
}

fn read_external(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: e.to_string(),
        })?;
    let mut values = vec![None; n];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let subject: usize = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .filter(|&s| (1..=n).contains(&s))
            .ok_or_else(|| bad(format!("subject must be an integer in 1..={n}")))?;
        let value: f64 = record
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("value is not a number".into()))?;
        values[subject - 1] = Some(value);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                reason: format!("no value for subject {}", i + 1),
            })
        })
        .collect()
}

fn summarize(args: &SummarizeArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let store = read_draws(&args.draws)?;
    let data = stored_data(&args.draws, &store)?;
    let external = args
        .external
        .as_deref()
        .map(|p| read_external(p, store.dims.n))
        .transpose()?;
    let top = args.top.or(file.top_subtypes).unwrap_or(DEFAULT_TOP_SUBTYPES);
    let (summary, _) = build_summary(&store, data.as_ref(), external.as_deref(), top)?;
    write_summary(&summary, &args.out)
}

#[derive(Serialize)]
struct Diagnostics {
    draws: usize,
    acceptance_rate: f64,
    waic: Waic,
    sample_cramers_v: Matrix,
    predictive_cramers_v: Matrix,
}

fn matrix_csv(m: &Matrix) -> String {
    m.iter()
        .map(|row| row.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let store = read_draws(&args.draws)?;
    let mut data = ingest_long_csv(&args.data, Some(&store.dims.categories))?;
    if store.dims.n_subpops == 1 && data.n_subpops > 1 {
        data = data.pooled();
    }
    store.validate_against(&data)?;
    let max_draws = args
        .predictive_draws
        .or(file.predictive_draws)
        .unwrap_or(DEFAULT_PREDICTIVE_DRAWS);
    let report = Diagnostics {
        draws: store.len(),
        acceptance_rate: store.acceptance_rate(),
        waic: waic(&store, &data)?,
        sample_cramers_v: sample_cramers_v(&data)?,
        predictive_cramers_v: posterior_predictive_cramers_v(&store, &data, max_draws, args.seed)?,
    };
    create_dir(&args.out)?;
    write_json(&args.out.join("diagnostics.json"), &report)?;
    write_file(
        &args.out.join("cramers_v_sample.csv"),
        &matrix_csv(&report.sample_cramers_v),
    )?;
    write_file(
        &args.out.join("cramers_v_predictive.csv"),
        &matrix_csv(&report.predictive_cramers_v),
    )
}

fn replicate(args: &ReplicateArgs) -> Result<()> {
    let (_, config) = args.sampler.resolve()?;
    let setting: Setting = args.setting.parse()?;
    let tables = args
        .n
        .iter()
        .map(|&n| replicate_harness(setting, n, args.reps, config.seed, &config))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&args.out)?;
    write_json(&args.out.join("replicates.json"), &tables)?;
    write_file(&args.out.join("table.txt"), &render_replicate_tables(&tables))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Select(a) => select(a),
        Command::Summarize(a) => summarize(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Replicate(a) => replicate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
