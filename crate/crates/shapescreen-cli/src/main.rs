//! `shapescreen` command-line interface: overlay scoring, feature export,
//! benchmark orchestration, synthetic dataset generation, and report
//! summarization.
//!
//! Exit codes: 0 success, 1 usage error, 2 input-data error, 3 internal
//! error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shapescreen::bench::{
    self, run_collection_from_manifests, write_report, BenchError, BenchmarkReport,
    ExperimentConfig,
};
use shapescreen::colorff::{color_atoms, ColorAtom, ColorType};
use shapescreen::eval::{fpr_key, ENRICHMENT_FPRS};
use shapescreen::features::{
    feature_matrix_csv, FeatureError, FeatureRow, FeatureSidecar, Layout, Metric, ScoreSet,
    SimilarityConfig,
};
use shapescreen::model::ScalerKind;
use shapescreen::mol::{parse_sdf, Molecule};
use shapescreen::overlay::{best_overlay, OverlayConfig};

#[derive(Parser)]
#[command(
    name = "shapescreen",
    version,
    about = "Gaussian shape/color overlay alignment, similarity features, and screening benchmarks"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align every library molecule against a query and print CSV scores.
    Overlay(OverlayArgs),
    /// Export one layout's feature vectors for a library as CSV.
    Featurize(FeaturizeArgs),
    /// Run the screening benchmark over dataset manifests.
    Benchmark(BenchmarkArgs),
    /// Generate synthetic screening datasets on disk.
    Synth(SynthArgs),
    /// Summarize an existing benchmark report JSON.
    Report(ReportArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum MetricArg {
    Tanimoto,
    Tversky,
}

impl From<MetricArg> for Metric {
    fn from(arg: MetricArg) -> Metric {
        match arg {
            MetricArg::Tanimoto => Metric::Tanimoto,
            MetricArg::Tversky => Metric::Tversky,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ScalerArg {
    None,
    Maxabs,
    Standard,
}

impl From<ScalerArg> for ScalerKind {
    fn from(arg: ScalerArg) -> ScalerKind {
        match arg {
            ScalerArg::None => ScalerKind::None,
            ScalerArg::Maxabs => ScalerKind::MaxAbs,
            ScalerArg::Standard => ScalerKind::Standard,
        }
    }
}

fn parse_layout(token: &str) -> Result<Layout, String> {
    Layout::parse(token).ok_or_else(|| {
        let known: Vec<&str> = Layout::ALL.iter().map(|l| l.name()).collect();
        format!("unknown layout '{token}' (known: {})", known.join(", "))
    })
}

fn parse_color_type(token: &str) -> Result<ColorType, String> {
    ColorType::parse(token).ok_or_else(|| {
        let known: Vec<&str> = ColorType::ALL.iter().map(|t| t.name()).collect();
        format!("unknown color type '{token}' (known: {})", known.join(", "))
    })
}

#[derive(Args)]
struct OverlayArgs {
    /// SDF file whose first molecule is the reference query.
    #[arg(long)]
    query: PathBuf,
    /// SDF file of molecules to align against the query.
    #[arg(long)]
    library: PathBuf,
    /// Reference-bias alpha of the Tversky columns.
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Weight of the color term in the alignment objective.
    #[arg(long, default_value_t = 1.0)]
    w_color: f64,
    /// Seed for the extra randomized alignment starts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail on malformed SDF records instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// SDF file whose first molecule is the reference query.
    #[arg(long)]
    query: PathBuf,
    /// SDF file of molecules to featurize (label column is 0 throughout).
    #[arg(long)]
    library: PathBuf,
    /// Exactly one feature layout.
    #[arg(long, value_parser = parse_layout, value_delimiter = ',', default_value = "ST-CCT-CAO")]
    layouts: Vec<Layout>,
    /// Reference-bias alpha of Tversky-variant layouts.
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Weight of the color term in the alignment objective.
    #[arg(long, default_value_t = 1.0)]
    w_color: f64,
    /// Seed for the extra randomized alignment starts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail on malformed SDF records instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Write the CSV here (a `<name>.meta.json` sidecar with the query
    /// color atoms is written next to it) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Dataset manifest JSON path(s); repeat the flag for several.
    #[arg(long = "manifest", required = true)]
    manifests: Vec<PathBuf>,
    /// Comma-separated feature layouts to train.
    #[arg(long, value_parser = parse_layout, value_delimiter = ',',
          default_value = "ST-CT,ST-CCT,ST-CAO,ST-CCT-CAO")]
    layouts: Vec<Layout>,
    /// Baseline combo metric.
    #[arg(long, value_enum, default_value_t = MetricArg::Tanimoto)]
    metric: MetricArg,
    /// Reference-bias alpha for Tversky scoring.
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Feature scaling fitted on training folds.
    #[arg(long, value_enum, default_value_t = ScalerArg::Maxabs)]
    scaler: ScalerArg,
    /// Outer cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Base seed; folds and model tuning derive their streams from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight of the color term in the alignment objective.
    #[arg(long, default_value_t = 1.0)]
    w_color: f64,
    /// Fail on malformed SDF records instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Report JSON output path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (one subdirectory per dataset when --datasets > 1).
    #[arg(long)]
    out: PathBuf,
    /// Number of independently seeded datasets to generate.
    #[arg(long, default_value_t = 1)]
    datasets: usize,
    /// Dataset name (suffixed with an index when --datasets > 1).
    #[arg(long, default_value = "synthetic")]
    name: String,
    /// Active molecules per dataset.
    #[arg(long, default_value_t = 40)]
    actives: usize,
    /// Decoy molecules per dataset.
    #[arg(long, default_value_t = 800)]
    decoys: usize,
    /// Heavy atoms per generated molecule.
    #[arg(long, default_value_t = 8)]
    atoms: usize,
    /// Uniform jitter (Å) on library atom positions.
    #[arg(long, default_value_t = 0.25)]
    geometry_jitter: f64,
    /// Uniform jitter (Å) on library color-atom positions.
    #[arg(long, default_value_t = 0.4)]
    color_jitter: f64,
    /// Color type actives share with the query.
    #[arg(long, value_parser = parse_color_type, default_value = "donor")]
    relevant: ColorType,
    /// Confounder color type carried by decoys.
    #[arg(long, value_parser = parse_color_type, default_value = "acceptor")]
    confounder: ColorType,
    /// Generate decoys exactly like actives (labels carry no signal).
    #[arg(long)]
    decouple_labels: bool,
    /// Omit the query from the manifest so each active serves as query.
    #[arg(long)]
    active_as_query: bool,
    /// Base seed; dataset i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Benchmark report JSON to summarize.
    report: PathBuf,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl ToString) -> CliError {
        CliError {
            code: 1,
            message: message.to_string(),
        }
    }

    fn data(message: impl ToString) -> CliError {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> CliError {
        CliError {
            code: 3,
            message: message.to_string(),
        }
    }
}

fn classify_bench_error(error: BenchError) -> CliError {
    use shapescreen::model::ModelError;
    match &error {
        BenchError::NoLayouts
        | BenchError::DuplicateLayout(_)
        | BenchError::BadFoldCount(_)
        | BenchError::DegenerateSyntheticSpec { .. }
        | BenchError::EmptySyntheticBlob
        | BenchError::Feature(FeatureError::AlphaOutOfRange { .. })
        | BenchError::Model(ModelError::EmptyGrid)
        | BenchError::Model(ModelError::NonPositiveC(_)) => CliError::usage(error),
        BenchError::NoDatasets
        | BenchError::ZeroSuccessfulExperiments
        | BenchError::TooFewMolecules { .. }
        | BenchError::Manifest(_)
        | BenchError::Sdf(_)
        | BenchError::Mol(_)
        | BenchError::Color(_)
        | BenchError::Io(_) => CliError::data(error),
        _ => CliError::internal(error),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version print to stdout and succeed; real usage
            // errors go to stderr with exit code 1.
            let code = if err.use_stderr() { 1u8 } else { 0u8 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {err}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Overlay(args) => cmd_overlay(&args),
        Command::Featurize(args) => cmd_featurize(&args),
        Command::Benchmark(args) => cmd_benchmark(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

/// Reads an SDF file leniently (bad records warn on stderr) or strictly.
/// An empty file is an empty library; a file where nothing parses is a
/// data error.
fn read_molecules(path: &Path, strict: bool) -> Result<Vec<Molecule>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let outcome = parse_sdf(&text, strict)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for skipped in &outcome.skipped {
        eprintln!(
            "warning: {}: skipped record {}: {}",
            path.display(),
            skipped.record,
            skipped.reason
        );
    }
    if outcome.molecules.is_empty() && !outcome.skipped.is_empty() {
        return Err(CliError::data(format!(
            "{}: no parsable records",
            path.display()
        )));
    }
    Ok(outcome.molecules)
}

fn read_query(path: &Path, strict: bool) -> Result<Molecule, CliError> {
    read_molecules(path, strict)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::data(format!("{}: query file has no molecules", path.display())))
}

fn write_text(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Aligns the library and scores every pair; one CSV row per molecule.
fn cmd_overlay(args: &OverlayArgs) -> Result<(), CliError> {
    let sim = SimilarityConfig::new(args.alpha).map_err(CliError::usage)?;
    let query = read_query(&args.query, args.strict)?;
    let library = read_molecules(&args.library, args.strict)?;
    let query_colors = color_atoms(&query).map_err(CliError::data)?;
    let overlay_config = OverlayConfig {
        w_color: args.w_color,
        seed: args.seed,
        ..OverlayConfig::default()
    };

    let mut csv = String::from("name,ST,CT,TanimotoCombo,STv,CTv,TverskyCombo");
    for color_type in ColorType::ALL {
        write!(csv, ",CCT_{}", color_type.name()).unwrap();
    }
    for (i, atom) in query_colors.iter().enumerate() {
        write!(csv, ",CAO_{i}_{}", atom.color_type.name()).unwrap();
    }
    csv.push('\n');

    let scored = score_library(&query, &query_colors, &library, &overlay_config, &sim)?;
    for (molecule, scores) in library.iter().zip(&scored) {
        write!(
            csv,
            "{},{},{},{},{},{},{}",
            molecule.name,
            scores.shape_tanimoto,
            scores.color_tanimoto,
            scores.combo(Metric::Tanimoto),
            scores.shape_tversky,
            scores.color_tversky,
            scores.combo(Metric::Tversky)
        )
        .unwrap();
        for component in scores.color_components_tanimoto {
            write!(csv, ",{component}").unwrap();
        }
        for overlap in &scores.color_atom_overlaps {
            write!(csv, ",{overlap}").unwrap();
        }
        csv.push('\n');
    }
    write_text(args.out.as_deref(), &csv)
}

fn score_library(
    query: &Molecule,
    query_colors: &[ColorAtom],
    library: &[Molecule],
    overlay_config: &OverlayConfig,
    sim: &SimilarityConfig,
) -> Result<Vec<ScoreSet>, CliError> {
    use rayon::prelude::*;
    library
        .par_iter()
        .map(|molecule| {
            let colors = color_atoms(molecule)
                .map_err(|e| CliError::data(format!("{}: {e}", molecule.name)))?;
            let result = best_overlay(query, query_colors, molecule, &colors, overlay_config)
                .map_err(|e| CliError::internal(format!("{}: {e}", molecule.name)))?;
            Ok(ScoreSet::from_overlay(&result, sim))
        })
        .collect()
}

/// Exports one layout's feature matrix, plus a sidecar documenting the
/// query color atoms that define the CAO column order.
fn cmd_featurize(args: &FeaturizeArgs) -> Result<(), CliError> {
    if args.layouts.len() != 1 {
        return Err(CliError::usage("featurize needs exactly one layout"));
    }
    let layout = args.layouts[0];
    let sim = SimilarityConfig::new(args.alpha).map_err(CliError::usage)?;
    let query = read_query(&args.query, args.strict)?;
    let library = read_molecules(&args.library, args.strict)?;
    let query_colors = color_atoms(&query).map_err(CliError::data)?;
    let overlay_config = OverlayConfig {
        w_color: args.w_color,
        seed: args.seed,
        ..OverlayConfig::default()
    };

    let scored = score_library(&query, &query_colors, &library, &overlay_config, &sim)?;
    let rows: Vec<FeatureRow> = library
        .iter()
        .zip(&scored)
        .map(|(molecule, scores)| FeatureRow {
            name: molecule.name.clone(),
            label: 0,
            vector: scores.feature_vector(layout),
        })
        .collect();
    let csv = feature_matrix_csv(&rows).map_err(CliError::internal)?;
    write_text(args.out.as_deref(), &csv)?;

    if let Some(out) = &args.out {
        let sidecar = FeatureSidecar::new(layout, &query.name, &query_colors);
        let sidecar_path = out.with_extension("meta.json");
        let mut json = serde_json::to_string_pretty(&sidecar).map_err(CliError::internal)?;
        json.push('\n');
        std::fs::write(&sidecar_path, json)
            .map_err(|e| CliError::data(format!("{}: {e}", sidecar_path.display())))?;
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let config = ExperimentConfig {
        layouts: args.layouts.clone(),
        metric: args.metric.into(),
        alpha: args.alpha,
        k_folds: args.folds,
        seed: args.seed,
        scaler: args.scaler.into(),
        overlay: OverlayConfig {
            w_color: args.w_color,
            seed: args.seed,
            ..OverlayConfig::default()
        },
        strict_parsing: args.strict,
        ..ExperimentConfig::default()
    };
    let report =
        run_collection_from_manifests(&args.manifests, &config).map_err(classify_bench_error)?;
    write_report(&args.out, &report).map_err(classify_bench_error)?;
    print_summary(&report);
    println!("report: {}", args.out.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.datasets == 0 {
        return Err(CliError::usage("--datasets must be at least 1"));
    }
    for i in 0..args.datasets {
        let (name, dir) = if args.datasets == 1 {
            (args.name.clone(), args.out.clone())
        } else {
            let name = format!("{}_{i:03}", args.name);
            (name.clone(), args.out.join(&name))
        };
        let spec = bench::synth::SyntheticSpec {
            dataset: name,
            n_actives: args.actives,
            n_decoys: args.decoys,
            n_heavy_atoms: args.atoms,
            geometry_jitter: args.geometry_jitter,
            color_jitter: args.color_jitter,
            relevant_type: args.relevant,
            confounder_type: args.confounder,
            decouple_labels: args.decouple_labels,
        };
        let benchmark =
            bench::synth::make_synthetic_benchmark(&spec, args.seed.wrapping_add(i as u64))
                .map_err(classify_bench_error)?;
        let manifest =
            bench::synth::write_benchmark(&dir, &benchmark, !args.active_as_query)
                .map_err(classify_bench_error)?;
        println!("{}", manifest.display());
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let report = bench::read_report(&args.report)
        .map_err(|e| CliError::data(format!("{}: {e}", args.report.display())))?;
    print_summary(&report);
    Ok(())
}

/// Human-readable collection summary: medians per method and deltas
/// against the baseline.
fn print_summary(report: &BenchmarkReport) {
    println!(
        "baseline: {} | experiments: {} | models: {} | overlays: {} ({} failed) | clamps: {}",
        report.baseline,
        report.counters.experiments,
        report.counters.models_trained,
        report.counters.overlays,
        report.counters.overlay_failures,
        report.counters.clamp_events,
    );
    print!("{:<14} {:>8}", "method", "AUC");
    for fpr in ENRICHMENT_FPRS {
        print!(" {:>8}", format!("E_{fpr}"));
    }
    println!(" {:>8}  sign_CI", "dAUC");

    let methods = std::iter::once(&report.baseline).chain(
        report
            .summary
            .collection_medians
            .keys()
            .filter(|m| **m != report.baseline),
    );
    for method in methods {
        let median = &report.summary.collection_medians[method];
        print!("{method:<14} {:>8.4}", median.auc);
        for fpr in ENRICHMENT_FPRS {
            print!(" {:>8.2}", median.enrichment[&fpr_key(fpr)]);
        }
        match report.summary.deltas_vs_baseline.get(method) {
            Some(deltas) => {
                print!(" {:>+8.4}", deltas.auc.median_delta);
                match deltas.auc.sign_ci {
                    Some((lo, hi)) => println!("  ({lo:.3}, {hi:.3})"),
                    None => println!("  (all deltas zero)"),
                }
            }
            None => println!(" {:>8}  -", "-"),
        }
    }
    for note in &report.failed_manifests {
        eprintln!("failed manifest {}: {}", note.context, note.error);
    }
    for note in &report.failed_experiments {
        eprintln!("failed experiment {}: {}", note.context, note.error);
    }
}
