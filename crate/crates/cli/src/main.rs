//! Command-line surface for the stable-noise augmentation pipeline.
//!
//! Exit codes: 0 success, 1 usage/parameter error, 2 data/format error,
//! 3 numeric/training error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stable_augment::augment::{self, NoiseKind, NoiseSpec};
use stable_augment::dataio::{self, Dataset, Domain};
use stable_augment::harness;
use stable_augment::nn::{self, ModelConfig, Optimizer, TrainConfig, SPARSITY_THRESHOLD};
use stable_augment::stable_dist::{self, RngStream, StableMixture, StableParams};
use stable_augment::Error;

#[derive(Parser)]
#[command(name = "stable-augment", version, about = "Alpha-stable noise augmentation toolkit")]
struct Cli {
    /// Emit machine-readable JSON summaries instead of human text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw i.i.d. samples from one stable law.
    Sample(SampleArgs),
    /// Evaluate the density of a stable law by characteristic-function inversion.
    Pdf(PdfArgs),
    /// Build a noise-augmented dataset from an input file.
    Augment(AugmentArgs),
    /// Train a fully connected classifier on a saved dataset.
    Train(TrainArgs),
    /// Evaluate a saved model on a saved dataset.
    Eval(EvalArgs),
    /// Run a full experiment plan and write the results directory.
    Experiment(ExperimentArgs),
    /// Summarize a results directory: row averages and improvement over a baseline.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleFormat {
    Txt,
    F64le,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "txt")]
    format: SampleFormat,
}

#[derive(Args)]
struct PdfArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Evaluation point; repeatable.
    #[arg(long = "x", required = true)]
    xs: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Idx,
    Csv,
    Npy,
    Sidecar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Clean,
    Single,
    Multiple,
    Mixture,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    input_format: InputFormat,
    /// Label file (required for idx and npy inputs).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Domain for npy inputs: image data is clipped to [0,1], series is not.
    #[arg(long, value_enum, default_value = "image")]
    domain: DomainArg,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Characteristic exponent; repeatable for multiple/mixture modes.
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    /// Dispersion; one shared value, or one per alpha.
    #[arg(long = "gamma")]
    gammas: Vec<f64>,
    #[arg(long, default_value_t = augment::DEFAULT_REPLICATION)]
    replication: usize,
    #[arg(long, default_value_t = augment::DEFAULT_COPIES_PER_LAW)]
    copies_per_law: usize,
    /// Do not prepend the clean copy of the base set.
    #[arg(long)]
    no_clean: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Image,
    Series,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset sidecar (.json) to train on.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset sidecar (.json) to evaluate on.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Parallel trials; never affects results.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Results directory containing matrix.json.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "clean")]
    baseline: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                print!("{err}");
            } else {
                eprint!("{err}");
            }
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    let result = match cli.cmd {
        Cmd::Sample(args) => cmd_sample(args, json),
        Cmd::Pdf(args) => cmd_pdf(args, json),
        Cmd::Augment(args) => cmd_augment(args, json),
        Cmd::Train(args) => cmd_train(args, json),
        Cmd::Eval(args) => cmd_eval(args, json),
        Cmd::Experiment(args) => cmd_experiment(args, json),
        Cmd::Report(args) => cmd_report(args, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Parameter(_) => 1,
                Error::Format(_) | Error::Io(_) | Error::Json(_) => 2,
                Error::Numeric(_) | Error::Training { .. } => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn cmd_sample(args: SampleArgs, json: bool) -> stable_augment::Result<()> {
    let params = StableParams::new(args.alpha, args.gamma, args.delta)?;
    let samples = stable_dist::sample(&params, args.n, RngStream::new(args.seed));
    let file = fs::File::create(&args.out)?;
    match args.format {
        SampleFormat::Txt => stable_dist::write_text(file, &samples)?,
        SampleFormat::F64le => stable_dist::write_f64le(file, &samples)?,
    }
    let (median, scale_proxy) = if samples.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        // mean |x|^(1/4): finite for every alpha in (0,2], unlike the variance
        let proxy = samples.iter().map(|x| x.abs().powf(0.25)).sum::<f64>() / samples.len() as f64;
        (median, proxy)
    };
    if json {
        println!(
            "{}",
            serde_json::json!({"n": args.n, "median": median, "scale_proxy": scale_proxy})
        );
    } else {
        println!("n={} median={median} scale_proxy={scale_proxy}", args.n);
    }
    Ok(())
}

fn cmd_pdf(args: PdfArgs, json: bool) -> stable_augment::Result<()> {
    let params = StableParams::new(args.alpha, args.gamma, args.delta)?;
    let mut lines = String::new();
    let mut pairs = Vec::new();
    for &x in &args.xs {
        let f = stable_dist::pdf(&params, x)?;
        lines.push_str(&format!("{x} {f:.12e}\n"));
        pairs.push((x, f));
    }
    match &args.out {
        Some(path) => fs::write(path, &lines)?,
        None => {
            if json {
                let rows: Vec<_> = pairs
                    .iter()
                    .map(|(x, f)| serde_json::json!({"x": x, "pdf": f}))
                    .collect();
                println!("{}", serde_json::Value::Array(rows));
            } else {
                print!("{lines}");
            }
        }
    }
    Ok(())
}

fn load_input(args: &AugmentArgs) -> stable_augment::Result<Dataset> {
    match args.input_format {
        InputFormat::Idx => {
            let labels = args.labels.as_ref().ok_or_else(|| {
                Error::Parameter("--input-format idx requires --labels".into())
            })?;
            dataio::load_idx(&args.input, labels)
        }
        InputFormat::Csv => dataio::load_series_csv(&args.input, ','),
        InputFormat::Npy => {
            let labels_path = args.labels.as_ref().ok_or_else(|| {
                Error::Parameter("--input-format npy requires --labels".into())
            })?;
            let (features, shape) = dataio::load_npy(&args.input)?;
            let (label_vals, label_shape) = dataio::load_npy(labels_path)?;
            if label_shape.len() != 1 {
                return Err(Error::Format("label npy must be one-dimensional".into()));
            }
            if shape.is_empty() {
                return Err(Error::Format("feature npy must have at least one axis".into()));
            }
            let labels: Vec<usize> = label_vals
                .iter()
                .map(|&v| {
                    if v < 0.0 || v.fract() != 0.0 {
                        Err(Error::Format(format!("non-integer label {v}")))
                    } else {
                        Ok(v as usize)
                    }
                })
                .collect::<stable_augment::Result<_>>()?;
            let n_classes = labels.iter().copied().max().map_or(1, |m| m + 1);
            let domain = match args.domain {
                DomainArg::Image => Domain::Image,
                DomainArg::Series => Domain::Series,
            };
            Dataset::new(
                args.input.display().to_string(),
                features,
                shape[1..].to_vec(),
                labels,
                n_classes,
                domain,
                None,
            )
        }
        InputFormat::Sidecar => dataio::load_dataset(&args.input),
    }
}

fn build_spec(args: &AugmentArgs) -> stable_augment::Result<NoiseSpec> {
    let laws = |gammas: &[f64]| -> stable_augment::Result<Vec<StableParams>> {
        let pick = |i: usize| -> stable_augment::Result<f64> {
            match gammas.len() {
                1 => Ok(gammas[0]),
                n if n == args.alphas.len() => Ok(gammas[i]),
                _ => Err(Error::Parameter(
                    "give one --gamma, or one per --alpha".into(),
                )),
            }
        };
        args.alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| StableParams::new(a, pick(i)?, 0.0))
            .collect()
    };
    let spec = match args.mode {
        Mode::Clean => {
            if !args.alphas.is_empty() || !args.gammas.is_empty() {
                return Err(Error::Parameter(
                    "clean mode takes no --alpha or --gamma".into(),
                ));
            }
            if args.no_clean {
                return Err(Error::Parameter("clean mode cannot use --no-clean".into()));
            }
            NoiseSpec::clean()
        }
        Mode::Single => {
            if args.alphas.len() != 1 {
                return Err(Error::Parameter(
                    "single mode takes exactly one alpha".into(),
                ));
            }
            if args.gammas.len() != 1 {
                return Err(Error::Parameter(
                    "single mode takes exactly one gamma".into(),
                ));
            }
            NoiseSpec {
                kind: NoiseKind::Single {
                    params: StableParams::new(args.alphas[0], args.gammas[0], 0.0)?,
                    replication: args.replication,
                },
                include_clean: !args.no_clean,
            }
        }
        Mode::Multiple => {
            if args.alphas.is_empty() || args.gammas.is_empty() {
                return Err(Error::Parameter(
                    "multiple mode needs --alpha and --gamma".into(),
                ));
            }
            NoiseSpec {
                kind: NoiseKind::Multiple {
                    laws: laws(&args.gammas)?,
                    copies_per_law: args.copies_per_law,
                },
                include_clean: !args.no_clean,
            }
        }
        Mode::Mixture => {
            if args.alphas.is_empty() || args.gammas.len() != 1 {
                return Err(Error::Parameter(
                    "mixture mode needs --alpha (repeatable) and exactly one --gamma".into(),
                ));
            }
            NoiseSpec {
                kind: NoiseKind::Mixture {
                    mix: StableMixture::equal_weight(&args.alphas, args.gammas[0])?,
                    replication: args.replication,
                },
                include_clean: !args.no_clean,
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn cmd_augment(args: AugmentArgs, json: bool) -> stable_augment::Result<()> {
    let spec = build_spec(&args)?;
    let base = load_input(&args)?;
    let out = augment::augment(&base, &spec, RngStream::new(args.seed))?;
    let spec_json = serde_json::to_value(&spec)?;
    let sidecar = dataio::save_dataset(&out.data, &args.out_dir, "augmented", Some(spec_json))?;
    if json {
        println!(
            "{}",
            serde_json::json!({"samples": out.data.n_samples(), "sidecar": sidecar})
        );
    } else {
        println!("{}", out.data.n_samples());
    }
    Ok(())
}

fn cmd_train(args: TrainArgs, json: bool) -> stable_augment::Result<()> {
    let dataset = dataio::load_dataset(&args.data)?;
    let stream = RngStream::new(args.seed);
    let config = ModelConfig {
        width: args.width,
        depth: args.depth,
        n_inputs: dataset.n_features(),
        n_classes: dataset.n_classes(),
        init_seed: stream.derive("init", 0).stream_id,
    };
    let model = nn::init(&config)?;
    let tc = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        optimizer: if args.momentum > 0.0 {
            Optimizer::SgdMomentum { mu: args.momentum }
        } else {
            Optimizer::Sgd
        },
        shuffle_seed: stream.derive("shuffle", 0).stream_id,
    };
    let (trained, losses) = nn::train(model, &dataset, &tc)?;
    nn::save_model(&trained, &args.out)?;
    let train_acc = nn::accuracy(&trained, &dataset)?;
    let final_loss = losses.last().copied().unwrap_or(f64::NAN);
    if json {
        println!(
            "{}",
            serde_json::json!({"final_loss": final_loss, "train_accuracy": train_acc, "params": trained.param_count()})
        );
    } else {
        println!(
            "final_loss={final_loss} train_accuracy={train_acc} params={}",
            trained.param_count()
        );
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs, json: bool) -> stable_augment::Result<()> {
    let model = nn::load_model(&args.model)?;
    let dataset = dataio::load_dataset(&args.data)?;
    let acc = nn::accuracy(&model, &dataset)?;
    let sparsity = model.sparsity(SPARSITY_THRESHOLD)?;
    if json {
        println!(
            "{}",
            serde_json::json!({"accuracy": acc, "sparsity": sparsity})
        );
    } else {
        println!("accuracy={acc} sparsity={sparsity}");
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs, json: bool) -> stable_augment::Result<()> {
    if args.jobs < 1 {
        return Err(Error::Parameter("--jobs must be >= 1".into()));
    }
    let text = fs::read_to_string(&args.plan)?;
    let plan = harness::ExperimentPlan::from_json(&text)?;
    let out = harness::run(&plan, Some(&args.out_dir), args.jobs)?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "out_dir": args.out_dir,
                "trials": out.trials.len(),
                "selected_gammas": out.selected_gammas,
            })
        );
    } else {
        println!(
            "wrote {} ({} trials)",
            args.out_dir.display(),
            out.trials.len()
        );
        for (label, gamma) in &out.selected_gammas {
            match gamma {
                Some(g) => println!("{label}: gamma={g}"),
                None => println!("{label}: no gamma grid"),
            }
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs, json: bool) -> stable_augment::Result<()> {
    let (_, summary) = harness::load_matrix_json(&args.results.join("matrix.json"))?;
    let matrix = &summary.matrix;
    let mut rows = Vec::new();
    for label in &matrix.rows {
        let avg = matrix.row_average(label)?;
        let improvement = if label == &args.baseline {
            0.0
        } else {
            harness::improvement_table(matrix, label, &args.baseline)?
        };
        rows.push((label.clone(), avg, improvement));
    }
    if json {
        let out: Vec<_> = rows
            .iter()
            .map(|(l, a, i)| serde_json::json!({"spec": l, "average_accuracy": a, "improvement_pct": i}))
            .collect();
        println!("{}", serde_json::Value::Array(out));
    } else {
        println!(
            "{:<16} {:>10} {:>14}",
            "train_spec", "avg_acc", "improvement_%"
        );
        for (label, avg, improvement) in rows {
            println!("{label:<16} {avg:>10.4} {improvement:>14.2}");
        }
    }
    Ok(())
}
