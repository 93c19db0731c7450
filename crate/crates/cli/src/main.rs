//! `harmonagg`: train transition models, aggregate chord-sequence profiles
//! and run perturbation experiments.
//!
//! Exit codes: 0 success, 1 usage or environment error, 2 malformed input
//! data.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use harmonagg::aggregation::{
    format_sequence, satisfaction, score_kemeny, score_pav, score_plurality, similarity,
    ClusterMode, ClusterOptions, ObjectiveWeights, Profile, Rule, SearchSpace,
};
use harmonagg::corpus::{filter_simulation_set, load_corpus, Corpus, LoadOptions, SuffixReductions, UnknownChordPolicy};
use harmonagg::simulation::{run_experiment, synthetic_corpus, ErrorRange, ExperimentConfig};
use harmonagg::transition::{load_model, save_model, DEFAULT_SMOOTHING};
use harmonagg::{aggregate, jaccard, neg_log_likelihood, parse_chord, AggregateOptions, AnnealingConfig, ChordId, TransitionModel};
use serde::Serialize;

use config::{pick, pick_list, pick_opt, pick_switch, FileConfig};

const THREADS_ENV: &str = "HARMONAGG_THREADS";

#[derive(Parser)]
#[command(name = "harmonagg", version, about = "Aggregate agents' chord sequences with voting rules")]
struct Cli {
    /// JSON file supplying defaults for any flag (keys use `_` for `-`).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a 2-gram transition model from a corpus file.
    Train(TrainArgs),
    /// Aggregate a profile file with one rule and print the result.
    Aggregate(AggregateArgs),
    /// Run the perturbation experiment and write a results CSV.
    Simulate(SimulateArgs),
    /// Print the Jaccard distance between two chords.
    Distance(DistanceArgs),
    /// List the most probable successors of chords under a model.
    InspectModel(InspectArgs),
    /// Write a synthetic 32-bar corpus.
    SynthCorpus(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: one song per line, `title | bar | bar | ...`.
    corpus: Option<PathBuf>,
    /// Additive smoothing constant.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output model path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Train only on songs of exactly 32 bars.
    #[arg(long)]
    simulation_set: bool,
    /// Fail on unknown chord symbols instead of skipping the song.
    #[arg(long)]
    strict: bool,
    /// Disable mapping of extended chord suffixes onto the alphabet.
    #[arg(long)]
    no_reductions: bool,
}

#[derive(Args)]
struct AnnealArgs {
    /// Seed for annealing.
    #[arg(long)]
    seed: Option<u64>,
    /// Annealing iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Initial annealing temperature.
    #[arg(long)]
    t_initial: Option<f64>,
    /// Geometric cooling factor.
    #[arg(long)]
    cooling: Option<f64>,
}

#[derive(Args)]
struct WeightArgs {
    /// Plurality weight against the 2-gram term.
    #[arg(long)]
    x_plurality: Option<f64>,
    /// Kemeny weight against the 2-gram term.
    #[arg(long)]
    x_kemeny: Option<f64>,
    /// PAV weight against the 2-gram term.
    #[arg(long)]
    x_pav: Option<f64>,
    /// Clustered-Kemeny weight against the 2-gram term.
    #[arg(long)]
    x_clustered: Option<f64>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Maximum number of sections for clustered rules.
    #[arg(long)]
    x_max: Option<usize>,
    /// Weight of an agent's distances outside its section, in [0, 1].
    #[arg(long)]
    off_weight: Option<f64>,
    /// Clustered solver: exact, anneal or auto.
    #[arg(long)]
    cluster_mode: Option<String>,
    /// Maximum (partition, assignment) pairs for the exact clustered solver.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Profile file: `k=<int> n=<int>` header, then one agent per line.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// plurality, kemeny, pav, clustered, or any of these with a `2` suffix.
    #[arg(long)]
    rule: Option<String>,
    /// Transition model (required by the 2-gram rules).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write the annealing trace as CSV when the rule anneals.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    cluster: ClusterArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Corpus file; only 32-bar songs are used.
    #[arg(long, conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Use this many synthetic songs instead of a corpus file.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Transition model; trained from the song set when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Agent counts, comma-separated or repeated.
    #[arg(long)]
    agents: Vec<String>,
    /// Error ranges as `lo,hi`, separated by `;` or repeated.
    #[arg(long)]
    ranges: Vec<String>,
    /// Rules, comma-separated or repeated.
    #[arg(long)]
    rules: Vec<String>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use at most this many songs.
    #[arg(long)]
    songs: Option<usize>,
    /// Multiplier applied to the metric columns.
    #[arg(long)]
    scale: Option<f64>,
    /// Record wall-clock milliseconds per row (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    cluster: ClusterArgs,
}

#[derive(Args)]
struct DistanceArgs {
    a: String,
    b: String,
}

#[derive(Args)]
struct InspectArgs {
    /// Model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Successors listed per chord.
    #[arg(long)]
    top: Option<usize>,
    /// Chords to inspect, comma-separated or repeated (all when absent).
    #[arg(long = "chord")]
    chords: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of songs.
    #[arg(long)]
    songs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        Failure {
            code: default_code(&error),
            error,
        }
    }
}

/// Malformed input data exits 2; everything else exits 1.
fn default_code(error: &anyhow::Error) -> u8 {
    use harmonagg::Error as E;
    match error.downcast_ref::<E>() {
        Some(
            E::UnknownChord(_)
            | E::CorpusFormat { .. }
            | E::ProfileFormat { .. }
            | E::InvalidProfile(_)
            | E::LengthMismatch { .. }
            | E::ModelFormat(_)
            | E::Checksum(_)
            | E::VersionMismatch(_),
        ) => 2,
        _ => 1,
    }
}

trait WithCode<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        error: anyhow!(message.into()),
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).code(1)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Train(args) => cmd_train(args, &file),
        Command::Aggregate(args) => cmd_aggregate(args, &file),
        Command::Simulate(args) => cmd_simulate(args, &file),
        Command::Distance(args) => cmd_distance(args),
        Command::InspectModel(args) => cmd_inspect_model(args, &file),
        Command::SynthCorpus(args) => cmd_synth_corpus(args, &file),
    }
}

fn log_resolved<T: Serialize>(command: &str, resolved: &T) {
    log::info!(
        "{command} config: {}",
        serde_json::to_string(resolved).unwrap_or_else(|e| format!("<unserializable: {e}>"))
    );
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("missing required --{flag} (flag or config key)")))
}

fn load_options(strict: bool, no_reductions: bool) -> LoadOptions {
    LoadOptions {
        policy: if strict {
            UnknownChordPolicy::Strict
        } else {
            UnknownChordPolicy::Skip
        },
        reductions: (!no_reductions).then(SuffixReductions::jazz),
    }
}

fn report_corpus(corpus: &Corpus) {
    let s = &corpus.stats;
    println!(
        "corpus: {} lines, {} parsed, {} skipped (unknown chord {}, bar shape {}), {} filtered out",
        s.lines,
        s.parsed,
        s.skipped(),
        s.skipped_unknown_chord,
        s.skipped_bar_shape,
        s.filtered_out
    );
}

#[derive(Serialize)]
struct TrainConfig {
    corpus: PathBuf,
    alpha: f64,
    out: PathBuf,
    simulation_set: bool,
    strict: bool,
    no_reductions: bool,
}

fn cmd_train(args: TrainArgs, file: &FileConfig) -> CliResult {
    let resolved = TrainConfig {
        corpus: require(pick_opt(args.corpus, &file.corpus), "corpus")?,
        alpha: pick(args.alpha, &file.alpha, DEFAULT_SMOOTHING),
        out: require(pick_opt(args.out, &file.out), "out")?,
        simulation_set: pick_switch(args.simulation_set, &file.simulation_set),
        strict: pick_switch(args.strict, &file.strict),
        no_reductions: pick_switch(args.no_reductions, &file.no_reductions),
    };
    log_resolved("train", &resolved);

    // Corpus problems exit 1 here, with the line diagnostics in the message.
    let mut corpus = load_corpus(&resolved.corpus, &load_options(resolved.strict, resolved.no_reductions))
        .with_context(|| format!("cannot load corpus {}", resolved.corpus.display()))
        .code(1)?;
    if resolved.simulation_set {
        corpus = filter_simulation_set(&corpus);
    }
    report_corpus(&corpus);

    let model = if resolved.alpha == 0.0 {
        let counts = harmonagg::transition::TransitionCounts::from_corpus(&corpus);
        if corpus.is_empty() {
            return Err(usage("corpus contains no usable songs"));
        }
        let model = TransitionModel::from_counts(&counts, 0.0, true).code(1)?;
        let zero = model.zero_rows();
        if !zero.is_empty() {
            log::warn!(
                "{} chords never start a transition; their rows are all zero and any sequence using them as a predecessor has zero probability",
                zero.len()
            );
        }
        model
    } else {
        harmonagg::train(&corpus, resolved.alpha).code(1)?
    };
    save_model(&model, &resolved.out).code(1)?;
    println!(
        "model: {} (alpha {}, {} zero rows)",
        resolved.out.display(),
        model.alpha(),
        model.zero_rows().len()
    );
    Ok(())
}

#[derive(Serialize)]
struct ResolvedAnneal {
    seed: u64,
    iterations: usize,
    t_initial: f64,
    cooling: f64,
}

fn resolve_anneal(args: AnnealArgs, file: &FileConfig) -> AnnealingConfig {
    let d = AnnealingConfig::default();
    AnnealingConfig {
        seed: pick(args.seed, &file.seed, d.seed),
        iterations: pick(args.iterations, &file.iterations, d.iterations),
        t_initial: pick(args.t_initial, &file.t_initial, d.t_initial),
        cooling: pick(args.cooling, &file.cooling, d.cooling),
    }
}

fn resolve_weights(args: WeightArgs, file: &FileConfig) -> Result<ObjectiveWeights, Failure> {
    let d = ObjectiveWeights::default();
    let weights = ObjectiveWeights {
        plurality: pick(args.x_plurality, &file.x_plurality, d.plurality),
        kemeny: pick(args.x_kemeny, &file.x_kemeny, d.kemeny),
        pav: pick(args.x_pav, &file.x_pav, d.pav),
        clustered: pick(args.x_clustered, &file.x_clustered, d.clustered),
    };
    weights.validate().code(1)?;
    Ok(weights)
}

fn resolve_cluster(args: ClusterArgs, file: &FileConfig, defaults: ClusterOptions) -> Result<ClusterOptions, Failure> {
    let mode = match pick_opt(args.cluster_mode, &file.cluster_mode) {
        Some(m) => m.parse::<ClusterMode>().code(1)?,
        None => defaults.mode,
    };
    let options = ClusterOptions {
        x_max: pick(args.x_max, &file.x_max, defaults.x_max),
        off_section_weight: pick(args.off_weight, &file.off_weight, defaults.off_section_weight),
        mode,
        budget: pick(args.budget, &file.budget, defaults.budget),
    };
    if !(0.0..=1.0).contains(&options.off_section_weight) {
        return Err(usage(format!(
            "--off-weight {} must lie in [0, 1]",
            options.off_section_weight
        )));
    }
    Ok(options)
}

fn mode_name(mode: ClusterMode) -> &'static str {
    match mode {
        ClusterMode::Exact => "exact",
        ClusterMode::Anneal => "anneal",
        ClusterMode::Auto => "auto",
    }
}

#[derive(Serialize)]
struct ResolvedCluster {
    x_max: usize,
    off_weight: f64,
    cluster_mode: &'static str,
    budget: u64,
}

impl From<&ClusterOptions> for ResolvedCluster {
    fn from(c: &ClusterOptions) -> Self {
        ResolvedCluster {
            x_max: c.x_max,
            off_weight: c.off_section_weight,
            cluster_mode: mode_name(c.mode),
            budget: c.budget,
        }
    }
}

impl From<&AnnealingConfig> for ResolvedAnneal {
    fn from(a: &AnnealingConfig) -> Self {
        ResolvedAnneal {
            seed: a.seed,
            iterations: a.iterations,
            t_initial: a.t_initial,
            cooling: a.cooling,
        }
    }
}

#[derive(Serialize)]
struct AggregateConfig {
    profile: PathBuf,
    rule: String,
    model: Option<PathBuf>,
    trace: Option<PathBuf>,
    anneal: ResolvedAnneal,
    weights: ObjectiveWeights,
    cluster: ResolvedCluster,
}

fn cmd_aggregate(args: AggregateArgs, file: &FileConfig) -> CliResult {
    let profile_path = require(pick_opt(args.profile, &file.profile), "profile")?;
    let rule_name = require(pick_opt(args.rule, &file.rule), "rule")?;
    let model_path = pick_opt(args.model, &file.model);
    let trace_path = pick_opt(args.trace, &file.trace);
    let anneal = resolve_anneal(args.anneal, file);
    anneal.validate().code(1)?;
    let weights = resolve_weights(args.weights, file)?;
    let cluster = resolve_cluster(args.cluster, file, ClusterOptions::default())?;
    log_resolved(
        "aggregate",
        &AggregateConfig {
            profile: profile_path.clone(),
            rule: rule_name.clone(),
            model: model_path.clone(),
            trace: trace_path.clone(),
            anneal: (&anneal).into(),
            weights,
            cluster: (&cluster).into(),
        },
    );

    let rule: Rule = rule_name.parse().code(1)?;
    if rule.two_gram && model_path.is_none() {
        return Err(usage(format!("rule {rule} needs --model")));
    }
    let profile = match Profile::load(&profile_path) {
        Ok(p) => p,
        Err(e @ harmonagg::Error::Io { .. }) => return Err(e).code(1),
        Err(e) => {
            return Err(e)
                .with_context(|| format!("cannot parse profile {}", profile_path.display()))
                .code(2)
        }
    };
    let model = match &model_path {
        Some(path) => Some(
            load_model(path).with_context(|| format!("cannot load model {}", path.display()))?,
        ),
        None => None,
    };

    let options = AggregateOptions {
        weights,
        anneal,
        cluster,
        space: SearchSpace::full(),
    };
    let out = aggregate(rule, &profile, model.as_ref(), &options)?;
    let w = &out.solution.chords;

    let mut stdout = io::stdout().lock();
    let mut print = || -> io::Result<()> {
        writeln!(stdout, "{}", format_sequence(w))?;
        writeln!(stdout, "rule: {rule}")?;
        writeln!(stdout, "score: {:.6}", out.score)?;
        writeln!(stdout, "plurality: {}", score_plurality(&profile, w).unwrap_or(0))?;
        writeln!(stdout, "kemeny: {:.6}", score_kemeny(&profile, w).unwrap_or(f64::NAN))?;
        writeln!(stdout, "pav: {:.6}", score_pav(&profile, w).unwrap_or(f64::NAN))?;
        if let Some(c) = &out.clustering {
            let starts: Vec<String> = c.partition.starts().iter().map(usize::to_string).collect();
            let sections: Vec<String> = c.assignment.sections_by_agent().iter().map(usize::to_string).collect();
            writeln!(stdout, "clustered: {:.6}", c.score)?;
            writeln!(stdout, "section starts: {}", starts.join(" "))?;
            writeln!(stdout, "agent sections: {}", sections.join(" "))?;
        }
        if let Some(m) = &model {
            match neg_log_likelihood(m, w) {
                Ok(g) => writeln!(stdout, "neg log-likelihood: {g:.6}")?,
                Err(e) => writeln!(stdout, "neg log-likelihood: undefined ({e})")?,
            }
        }
        let sat: Vec<String> = (0..profile.agents())
            .map(|i| format!("{:.6}", satisfaction(&profile, i, w).unwrap_or(f64::NAN)))
            .collect();
        let sim: Vec<String> = (0..profile.agents())
            .map(|i| format!("{:.6}", similarity(&profile, i, w).unwrap_or(f64::NAN)))
            .collect();
        writeln!(stdout, "satisfaction (distance sum per agent): {}", sat.join(" "))?;
        writeln!(stdout, "similarity (k - satisfaction, not a rule objective): {}", sim.join(" "))?;
        Ok(())
    };
    print().code(1)?;

    if let (Some(path), Some(trace)) = (&trace_path, &out.trace) {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display())).code(1)?;
        trace.write_csv(BufWriter::new(file)).code(1)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateConfig {
    corpus: Option<PathBuf>,
    synthetic: Option<usize>,
    model: Option<PathBuf>,
    agents: Vec<usize>,
    ranges: Vec<String>,
    rules: Vec<String>,
    out: Option<PathBuf>,
    songs: Option<usize>,
    scale: f64,
    timing: bool,
    threads: usize,
    anneal: ResolvedAnneal,
    weights: ObjectiveWeights,
    cluster: ResolvedCluster,
}

fn parse_agents(flag: &[String], file: &Option<Vec<usize>>) -> Result<Vec<usize>, Failure> {
    let items: Vec<&str> = flag.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Ok(file.clone().unwrap_or_else(|| vec![8, 16, 32]));
    }
    items
        .into_iter()
        .map(|s| s.parse::<usize>().map_err(|_| usage(format!("bad agent count `{s}`"))))
        .collect()
}

fn configure_threads() -> Result<usize, Failure> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().code(1)?;
    }
    Ok(rayon::current_num_threads())
}

fn cmd_simulate(args: SimulateArgs, file: &FileConfig) -> CliResult {
    let threads = configure_threads()?;
    let corpus_path = pick_opt(args.corpus, &file.corpus);
    let synthetic = pick_opt(args.synthetic, &file.synthetic);
    let model_path = pick_opt(args.model, &file.model);
    let agents = parse_agents(&args.agents, &file.agents)?;
    let ranges = pick_list(&args.ranges, ';', &file.ranges, &["0,1", "1,2", "2,3", "3,4"]);
    let all_rules: Vec<&str> = Rule::ALL.iter().map(|r| r.name()).collect();
    let rules = pick_list(&args.rules, ',', &file.rules, &all_rules);
    let out_path = pick_opt(args.out, &file.out);
    let songs_limit = pick_opt(args.songs, &file.songs);
    let scale = pick(args.scale, &file.scale, 1.0);
    let timing = pick_switch(args.timing, &file.timing);
    let anneal = resolve_anneal(args.anneal, file);
    let weights = resolve_weights(args.weights, file)?;
    let cluster = resolve_cluster(args.cluster, file, ExperimentConfig::default().cluster)?;
    log_resolved(
        "simulate",
        &SimulateConfig {
            corpus: corpus_path.clone(),
            synthetic,
            model: model_path.clone(),
            agents: agents.clone(),
            ranges: ranges.clone(),
            rules: rules.clone(),
            out: out_path.clone(),
            songs: songs_limit,
            scale,
            timing,
            threads,
            anneal: (&anneal).into(),
            weights,
            cluster: (&cluster).into(),
        },
    );

    let error_ranges = ranges
        .iter()
        .map(|r| r.parse::<ErrorRange>())
        .collect::<Result<Vec<_>, _>>()
        .code(1)?;
    let rules = rules.iter().map(|r| r.parse::<Rule>()).collect::<Result<Vec<_>, _>>().code(1)?;

    let corpus = match (&corpus_path, synthetic) {
        (Some(path), _) => load_corpus(path, &load_options(false, false))
            .with_context(|| format!("cannot load corpus {}", path.display()))?,
        (None, Some(n)) => synthetic_corpus(n, anneal.seed),
        (None, None) => return Err(usage("give --corpus or --synthetic")),
    };
    let mut songs = filter_simulation_set(&corpus);
    report_corpus(&songs);
    if songs.is_empty() {
        return Err(usage("no 32-bar songs left after filtering; see the corpus statistics above"));
    }
    if let Some(limit) = songs_limit {
        songs.songs.truncate(limit);
    }

    let model = match &model_path {
        Some(path) => load_model(path).with_context(|| format!("cannot load model {}", path.display()))?,
        None => {
            log::info!("no --model given; training on the song set with alpha {DEFAULT_SMOOTHING}");
            harmonagg::train(&corpus, DEFAULT_SMOOTHING).code(1)?
        }
    };

    let config = ExperimentConfig {
        agent_counts: agents,
        error_ranges,
        rules,
        weights,
        anneal,
        cluster,
        seed: anneal.seed,
        record_timing: timing,
    };
    let progress = |line: &str| log::info!("{line}");
    let report = run_experiment(&config, &songs.songs, &model, Some(&progress)).code(1)?;
    for f in &report.failures {
        log::warn!(
            "failed cell: song {} rule {} range {} agents {}: {}",
            f.song_id,
            f.rule,
            f.range,
            f.n_agents,
            f.reason
        );
    }

    match &out_path {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display())).code(1)?;
            report.write_csv(BufWriter::new(file), scale).code(1)?;
            println!("wrote {} rows to {}", report.rows.len(), path.display());
            print_averages(&report.cell_averages(&config)).code(1)?;
        }
        None => report.write_csv(io::stdout().lock(), scale).code(1)?,
    }
    Ok(())
}

fn print_averages(cells: &[harmonagg::simulation::CellAverage]) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "rule,error_lo,error_hi,n_agents,songs,song_similarity_mean,cluster_coherence,musical_coherence")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            c.rule,
            c.range.lo(),
            c.range.hi(),
            c.n_agents,
            c.songs,
            c.song_similarity_mean,
            c.cluster_coherence,
            c.musical_coherence
        )?;
    }
    Ok(())
}

fn cmd_distance(args: DistanceArgs) -> CliResult {
    let a = parse_chord(&args.a).code(1)?;
    let b = parse_chord(&args.b).code(1)?;
    println!("{:.6}", jaccard(a, b));
    Ok(())
}

#[derive(Serialize)]
struct InspectConfig {
    model: PathBuf,
    top: usize,
    chords: Vec<String>,
}

fn cmd_inspect_model(args: InspectArgs, file: &FileConfig) -> CliResult {
    let model_path = require(pick_opt(args.model, &file.model), "model")?;
    let top = pick(args.top, &file.top, 5);
    let chords = pick_list(&args.chords, ',', &file.chords, &[]);
    log_resolved(
        "inspect-model",
        &InspectConfig {
            model: model_path.clone(),
            top,
            chords: chords.clone(),
        },
    );
    let queried: Vec<ChordId> = if chords.is_empty() {
        ChordId::all().collect()
    } else {
        chords.iter().map(|c| c.parse::<ChordId>()).collect::<Result<_, _>>().code(1)?
    };
    let model = load_model(&model_path).with_context(|| format!("cannot load model {}", model_path.display()))?;

    let mut out = io::stdout().lock();
    let mut print = || -> io::Result<()> {
        writeln!(
            out,
            "model: alpha {}, trained on {}, {} zero rows",
            model.alpha(),
            model.trained_on(),
            model.zero_rows().len()
        )?;
        for &from in &queried {
            for (to, p) in model.top_successors(from, top) {
                writeln!(out, "{from} -> {to} {p:.6}")?;
            }
        }
        Ok(())
    };
    print().code(1)?;
    Ok(())
}

#[derive(Serialize)]
struct SynthConfig {
    songs: usize,
    seed: u64,
    out: Option<PathBuf>,
}

fn cmd_synth_corpus(args: SynthArgs, file: &FileConfig) -> CliResult {
    let resolved = SynthConfig {
        songs: pick(args.songs, &file.songs, 100),
        seed: pick(args.seed, &file.seed, 0),
        out: pick_opt(args.out, &file.out),
    };
    log_resolved("synth-corpus", &resolved);
    let text = synthetic_corpus(resolved.songs, resolved.seed).to_text();
    match &resolved.out {
        Some(path) => write_file(path, &text)?,
        None => io::stdout().lock().write_all(text.as_bytes()).code(1)?,
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .code(1)
}
