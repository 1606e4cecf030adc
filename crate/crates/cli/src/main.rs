mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use signpose::analysis::{
    ablation_run, benchmark_runtime, confidence_histogram, gen_synthetic, missing_stats, write_plot_data,
    AbsentPolicy, PlotSeries, SyntheticCorpusConfig, SystemClock,
};
use signpose::corpus::Corpus;
use signpose::io::{read_sequence, write_sequence};
use signpose::layout::{layout_for, reference_table, EstimatorFamily};
use signpose::model::{ModelConfig, Ptn};
use signpose::nn::Checkpoint;
use signpose::postproc::{postprocess, OutputDims, PipelineConfig};
use signpose::training::{
    build_examples, drop_absent_classes, evaluate, filter_min_occurrences, run_transfer,
    stratified_group_split, train_with, SplitPart, SplitRatios, TrainData, TransferSchedule,
};

use config::{corpus_layout, ExperimentConfig};

#[derive(Parser)]
#[command(name = "signpose", version, about = "Keypoint post-processing and pose-transformer sign recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Impute, normalize and optionally drop depth from one keypoint file.
    Postprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Signer-grouped, label-stratified train/validation/test split.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Train, validation and test shares.
        #[arg(long, default_value = "0.7,0.15,0.15")]
        ratios: String,
        #[arg(long)]
        seed: u64,
        /// Drop labels with fewer clips than this before splitting.
        #[arg(long, default_value_t = 1)]
        min_count: usize,
    },
    /// Train a model from an experiment file.
    Train {
        config: PathBuf,
    },
    /// Fine-tune from a source checkpoint with a staged schedule.
    Transfer {
        config: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value = "classifier_then_all")]
        schedule: String,
    },
    /// Accuracy and per-class table on one split part.
    Eval {
        config: PathBuf,
        /// Defaults to the experiment's checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        part: String,
    },
    /// Fraction of frames missing each keypoint group.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Confidence histogram, body vs hands.
    Hist {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Leave absent keypoints out instead of counting them at zero.
        #[arg(long)]
        skip_absent: bool,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Per-clip post-processing throughput.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Only time the first N clips.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Train one model per post-processing config and compare.
    Ablate {
        config: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Write a synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// TOML generator settings; defaults apply to anything left out.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        layout: Option<EstimatorFamily>,
    },
    /// Print the keypoint index table of a layout.
    Layout {
        family: EstimatorFamily,
    },
}

#[derive(Args, Clone, Copy)]
struct PipelineArgs {
    #[arg(long)]
    no_impute: bool,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    drop_depth: bool,
}

impl PipelineArgs {
    fn config(self) -> PipelineConfig {
        PipelineConfig {
            impute: !self.no_impute,
            normalize: !self.no_normalize,
            output_dims: if self.drop_depth { OutputDims::DropDepth } else { OutputDims::Keep },
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Postprocess { input, out, pipeline } => {
            let seq = read_sequence(&input)?;
            let processed = postprocess(&seq, layout_for(seq.layout), &pipeline.config())?;
            write_sequence(&processed, &out)?;
            eprintln!("{} frames -> {}", processed.frames(), out.display());
        }
        Command::Split {
            corpus,
            out,
            ratios,
            seed,
            min_count,
        } => split(&corpus, &out, &ratios, seed, min_count)?,
        Command::Train { config } => train_cmd(&config)?,
        Command::Transfer {
            config,
            source,
            schedule,
        } => transfer_cmd(&config, &source, schedule.parse()?)?,
        Command::Eval {
            config,
            checkpoint,
            part,
        } => eval_cmd(&config, checkpoint.as_deref(), part.parse()?)?,
        Command::Stats { corpus, plot } => {
            let corpus = Corpus::read_dir(&corpus)?;
            let layout = layout_for(corpus_layout(&corpus)?);
            let stats = missing_stats(&corpus.ordered_sequences(), layout);
            print!("{}", stats.render());
            maybe_plot(plot.as_deref(), &stats.plot(layout))?;
        }
        Command::Hist {
            corpus,
            bins,
            skip_absent,
            plot,
        } => {
            let corpus = Corpus::read_dir(&corpus)?;
            let layout = layout_for(corpus_layout(&corpus)?);
            let policy = if skip_absent { AbsentPolicy::Skip } else { AbsentPolicy::CountAsZero };
            let hist = confidence_histogram(&corpus.ordered_sequences(), layout, bins, policy)?;
            print!("{}", hist.render());
            maybe_plot(plot.as_deref(), &hist.plot())?;
        }
        Command::Bench {
            corpus,
            pipeline,
            limit,
            plot,
        } => {
            let corpus = Corpus::read_dir(&corpus)?;
            let layout = layout_for(corpus_layout(&corpus)?);
            let mut clips: Vec<_> = corpus.ordered_sequences().into_iter().cloned().collect();
            clips.truncate(limit.unwrap_or(usize::MAX));
            let config = pipeline.config();
            let report = benchmark_runtime(
                &clips,
                |c| postprocess(c, layout, &config).map(|_| ()),
                &SystemClock::default(),
            )?;
            print!("{}", report.render());
            maybe_plot(plot.as_deref(), &report.plot())?;
        }
        Command::Ablate { config, plot } => ablate_cmd(&config, plot.as_deref())?,
        Command::Synth {
            out,
            config,
            seed,
            layout,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str::<SyntheticCorpusConfig>(&text)?
                }
                None => SyntheticCorpusConfig::default(),
            };
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.layout = layout.unwrap_or(cfg.layout);
            let corpus = gen_synthetic(&cfg)?;
            corpus.write_dir(&out)?;
            let stats = missing_stats(&corpus.ordered_sequences(), layout_for(cfg.layout));
            eprintln!("{} clips -> {}", corpus.len(), out.display());
            print!("{}", stats.render());
        }
        Command::Layout { family } => print!("{}", reference_table(layout_for(family))),
    }
    Ok(())
}

fn maybe_plot(path: Option<&Path>, series: &[PlotSeries]) -> Result<()> {
    if let Some(p) = path {
        write_plot_data(p, series)?;
        eprintln!("plot data -> {}", p.display());
    }
    Ok(())
}

fn parse_ratios(text: &str) -> Result<SplitRatios> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad ratios {text:?}"))?;
    let [train, validation, test] = parts[..] else {
        bail!("expected three comma-separated ratios, got {text:?}");
    };
    Ok(SplitRatios {
        train,
        validation,
        test,
    })
}

fn split(corpus: &Path, out: &Path, ratios: &str, seed: u64, min_count: usize) -> Result<()> {
    let corpus = Corpus::read_dir(corpus)?;
    let records = filter_min_occurrences(&corpus.records, min_count);
    let split = drop_absent_classes(&stratified_group_split(&records, &parse_ratios(ratios)?, seed)?);
    fs::write(out, split.to_json()?).with_context(|| format!("writing {}", out.display()))?;
    for part in SplitPart::ALL {
        eprintln!(
            "{:<10} {:>6} clips {:>4} signers",
            part.as_str(),
            split.part(part).len(),
            split.signers(part).len()
        );
    }
    eprintln!("{} classes -> {}", split.num_classes(), out.display());
    Ok(())
}

struct TraceSink {
    file: Option<fs::File>,
}

impl TraceSink {
    fn open(path: Option<&Path>) -> Result<Self> {
        let file = path
            .map(|p| fs::File::create(p).with_context(|| format!("creating {}", p.display())))
            .transpose()?;
        Ok(Self { file })
    }

    fn emit(&mut self, line: &str) {
        println!("{line}");
        if let Some(f) = self.file.as_mut() {
            // A failed trace write should not abort a long run.
            if let Err(e) = writeln!(f, "{line}") {
                eprintln!("trace write failed: {e}");
                self.file = None;
            }
        }
    }
}

fn train_cmd(path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(path)?;
    let prep = cfg.prepare()?;
    let data = TrainData::from_split(&prep.split, &prep.corpus.sequences, &cfg.pipeline, &prep.model)?;
    let mut model = Ptn::new(prep.model, cfg.run.seed)?;
    eprint!("{}", model.param_table().render());
    let mut sink = TraceSink::open(cfg.trace.as_deref())?;
    let outcome = train_with(&mut model, &data, &cfg.run, |r| sink.emit(&r.to_line()))?;
    outcome.checkpoint.save(&cfg.checkpoint)?;
    eprintln!(
        "best validation accuracy {:.2}% at epoch {} -> {}",
        100.0 * outcome.best_validation_accuracy,
        outcome.best_epoch,
        cfg.checkpoint.display()
    );
    Ok(())
}

fn transfer_cmd(path: &Path, source: &Path, schedule: TransferSchedule) -> Result<()> {
    let cfg = ExperimentConfig::load(path)?;
    let prep = cfg.prepare()?;
    let source = Checkpoint::load(source)?;
    let data = TrainData::from_split(&prep.split, &prep.corpus.sequences, &cfg.pipeline, &prep.model)?;
    let mut model = Ptn::new(prep.model, cfg.run.seed)?;
    let mut sink = TraceSink::open(cfg.trace.as_deref())?;
    let stages = run_transfer(&mut model, &source, schedule, &data, &cfg.run, |stage, r| {
        let mut line: serde_json::Value = serde_json::from_str(&r.to_line()).expect("trace lines are JSON");
        line["stage"] = stage.as_str().into();
        sink.emit(&line.to_string());
    })?;
    let last = stages.last().ok_or_else(|| anyhow!("empty schedule"))?;
    last.outcome.checkpoint.save(&cfg.checkpoint)?;
    for s in &stages {
        eprintln!(
            "{:<24} best {:.2}% at epoch {}",
            s.stage.as_str(),
            100.0 * s.outcome.best_validation_accuracy,
            s.outcome.best_epoch
        );
    }
    eprintln!("-> {}", cfg.checkpoint.display());
    Ok(())
}

fn model_from_checkpoint(ck: &Checkpoint) -> Result<Ptn> {
    let meta: serde_json::Value = serde_json::from_str(&ck.metadata).context("checkpoint metadata is not JSON")?;
    let config: ModelConfig =
        serde_json::from_value(meta["model"].clone()).context("checkpoint metadata has no model config")?;
    let mut model = Ptn::new(config, 0)?;
    model.load_checkpoint(ck)?;
    Ok(model)
}

fn eval_cmd(path: &Path, checkpoint: Option<&Path>, part: SplitPart) -> Result<()> {
    let cfg = ExperimentConfig::load(path)?;
    let prep = cfg.prepare()?;
    let ck = Checkpoint::load(checkpoint.unwrap_or(&cfg.checkpoint))?;
    let model = model_from_checkpoint(&ck)?;
    let examples = build_examples(
        prep.split.part(part),
        &prep.corpus.sequences,
        &prep.split.vocabulary,
        &cfg.pipeline,
        &model.config,
    )?;
    let eval = evaluate(&model, &examples)?;
    println!("{} accuracy {:.2}% ({}/{})", part.as_str(), 100.0 * eval.accuracy, eval.correct, eval.total);
    print!("{}", eval.render(Some(&prep.split.vocabulary)));
    Ok(())
}

fn ablate_cmd(path: &Path, plot: Option<&Path>) -> Result<()> {
    let cfg = ExperimentConfig::load(path)?;
    let prep = cfg.prepare()?;
    let rows = cfg.ablation_rows(prep.model.layout);
    let table = ablation_run(&prep.split, &prep.corpus.sequences, &rows, &prep.model, &cfg.run)?;
    print!("{}", table.render());
    let series = PlotSeries::new(
        "validation_accuracy",
        (0..table.rows.len()).map(|i| i as f64).collect(),
        table.rows.iter().map(|r| r.validation_accuracy).collect(),
    );
    maybe_plot(plot, &[series])
}
