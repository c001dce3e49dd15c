use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ussim::harness::{
    fmt_value, run_correlation_study, run_noise_sweep, run_trace, run_tracking_experiment, Benchmark, HarnessError,
    TrackerSetup,
};
use ussim::metrics::{parse_metric_list, Metric, MetricConfig};
use ussim::sequence::{load_sequence, Sequence};
use ussim::synth::{apply_speckle, make_phantom, Disc, MotionSpec, PhantomSpec, SpeckleSpec};
use ussim::tracking::{track, track_with_reset, Drift, ResetConfig, TrackerKind};
use ussim::{load_pgm, save_pgm, Image, Landmark, Roi};

#[derive(Parser)]
#[command(name = "ussim", version, about = "Ultrasound image similarity, synthesis and tracking studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a test image against a reference image.
    Compare {
        reference: PathBuf,
        test: PathBuf,
        /// Comma-separated metric list.
        #[arg(long, default_value = "ssim")]
        metric: String,
        /// JSON file with metric parameters; missing fields take defaults.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Per-frame similarity of a sequence to its reference frame.
    Trace {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "mse,psnr,ssim,msssim,cwssim,vif")]
        metrics: String,
        /// `x,y,hw,hh`: centre and half-sizes.
        #[arg(long)]
        roi: Option<String>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Track the manifest's frame-0 landmarks through the sequence.
    Track {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "ncc")]
        tracker: TrackerKind,
        /// Wrap the tracker in the similarity-triggered reset.
        #[arg(long)]
        reset: bool,
        #[arg(long, requires = "reset", conflicts_with = "calibrate")]
        tau: Option<f64>,
        /// Derive tau from this many leading frames.
        #[arg(long, requires = "reset")]
        calibrate: Option<usize>,
        /// Similarity ROI `x,y,hw,hh`; defaults to a 65×65 square at the first landmark.
        #[arg(long)]
        roi: Option<String>,
        /// Landmarks `x,y;x,y;…` overriding the manifest's frame-0 row.
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Render one phantom to PGM.
    Phantom {
        #[command(flatten)]
        phantom: PhantomArgs,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the periodic benchmark sequence as PGM frames plus manifest.json.
    Sequence {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write one phantom and a speckled copy per alpha.
    Sweep {
        #[command(flatten)]
        phantom: PhantomArgs,
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        alphas: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum StudyCommand {
    /// |Pearson| between lateral landmark position and each metric's trace (JSON).
    Correlation {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "mse,psnr,ssim,msssim,cwssim,vif")]
        metrics: String,
        #[arg(long)]
        roi: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean metric values against speckle severity (CSV).
    NoiseSweep {
        #[command(flatten)]
        phantom: PhantomArgs,
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        alphas: String,
        #[arg(long, default_value = "mse,ssim,msssim,cwssim")]
        metrics: String,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tracking error with and without reset, per tracker (CSV).
    Tracking {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "ncc,meanshift")]
        trackers: String,
        #[arg(long, conflicts_with = "calibrate")]
        tau: Option<f64>,
        #[arg(long, default_value_t = 30)]
        calibrate: usize,
        #[arg(long)]
        roi: Option<String>,
        /// Frame from which a lateral bias is added to the estimates.
        #[arg(long)]
        drift_frame: Option<usize>,
        #[arg(long, default_value_t = 6.0)]
        drift_px: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-frame error series here.
        #[arg(long)]
        series: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Landmark disc radius in pixels.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
}

impl PhantomArgs {
    fn spec(&self) -> PhantomSpec {
        let c = Landmark::new(self.size as f64 / 2.0, self.size as f64 / 2.0);
        PhantomSpec::new(self.size, self.size).with_disc(Disc::new(c, self.radius))
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 8.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 30.0)]
    period: f64,
    #[arg(long, default_value_t = 90)]
    frames: usize,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long)]
    no_speckle: bool,
}

impl BenchArgs {
    fn benchmark(&self) -> Benchmark {
        let mut b = Benchmark::standard();
        b.motion = MotionSpec {
            amplitude: self.amplitude,
            period: self.period,
            n_frames: self.frames,
            ..b.motion
        };
        b.speckle_alpha = (!self.no_speckle).then_some(self.alpha);
        b
    }
}

/// A manifest on disk, or the synthetic benchmark at `--seed`.
#[derive(Args)]
struct SourceArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    bench: BenchArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SourceArgs {
    /// The sequence and its default similarity ROI.
    fn load(&self) -> Result<(Sequence<f64>, Option<Roi>), HarnessError> {
        match &self.manifest {
            Some(path) => Ok((load_sequence(path)?, None)),
            None => {
                let b = self.bench.benchmark();
                Ok((b.sequence(self.seed)?, Some(b.similarity_roi())))
            }
        }
    }
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::BadArgs(msg.into())
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad(format!("{what}: cannot parse {p:?}"))))
        .collect()
}

fn parse_roi(s: &str) -> Result<Roi, HarnessError> {
    match parse_floats(s, "roi")?.as_slice() {
        &[x, y, hw, hh] if hw >= 0.0 && hh >= 0.0 && hw.fract() == 0.0 && hh.fract() == 0.0 => {
            Ok(Roi::new(Landmark::new(x, y), hw as usize, hh as usize))
        }
        _ => Err(bad("roi must be x,y,hw,hh with integer half-sizes")),
    }
}

fn parse_landmarks(s: &str) -> Result<Vec<Landmark>, HarnessError> {
    s.split(';')
        .map(|p| match parse_floats(p, "init")?.as_slice() {
            &[x, y] => Ok(Landmark::new(x, y)),
            _ => Err(bad(format!("landmark {p:?} is not x,y"))),
        })
        .collect()
}

fn parse_trackers(s: &str) -> Result<Vec<TrackerSetup>, HarnessError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<TrackerKind>()
                .map(TrackerSetup::default_for)
                .map_err(|e| bad(e.to_string()))
        })
        .collect()
}

fn metric_config(path: Option<&Path>) -> Result<MetricConfig, HarnessError> {
    match path {
        None => Ok(MetricConfig::default()),
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).map_err(|e| bad(format!("params: {e}"))),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), HarnessError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn compare(reference: &Path, test: &Path, metrics: &[Metric], config: &MetricConfig) -> Result<String, HarnessError> {
    let r: Image = load_pgm(reference)?;
    let t: Image = load_pgm(test)?;
    let mut out = String::from("metric,value\n");
    for &m in metrics {
        let v = config.evaluate(m, &r, &t)?.value;
        out += &format!("{m},{}\n", fmt_value(v));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Compare {
            reference,
            test,
            metric,
            params,
        } => {
            let metrics = parse_metric_list(&metric)?;
            let config = metric_config(params.as_deref())?;
            emit(&compare(&reference, &test, &metrics, &config)?, None)
        }
        Command::Trace {
            manifest,
            metrics,
            roi,
            params,
            out,
        } => {
            let seq = load_sequence(&manifest)?;
            let roi = roi.as_deref().map(parse_roi).transpose()?;
            let report = run_trace(&seq, &parse_metric_list(&metrics)?, roi.as_ref(), &metric_config(params.as_deref())?)?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            emit(&report.to_csv(), out.as_deref())
        }
        Command::Synth(cmd) => synth(cmd),
        Command::Track {
            manifest,
            tracker,
            reset,
            tau,
            calibrate,
            roi,
            init,
            out,
        } => {
            let seq = load_sequence(&manifest)?;
            let init = match init {
                Some(s) => parse_landmarks(&s)?,
                None => seq.landmarks().ok_or(HarnessError::MissingTruth)?[0].clone(),
            };
            let first = *init.first().ok_or_else(|| bad("no landmarks to track"))?;
            let mut tr = TrackerSetup::default_for(tracker).build()?;
            let result = if reset {
                let roi = match roi {
                    Some(s) => parse_roi(&s)?,
                    None => Roi::square(first, 32),
                };
                let cfg = match (tau, calibrate) {
                    (Some(t), _) => ResetConfig::with_tau(roi, t),
                    (None, Some(c)) => ResetConfig::calibrated(roi, c),
                    (None, None) => return Err(bad("--reset needs --tau or --calibrate")),
                };
                track_with_reset(tr.as_mut(), &seq, &init, &cfg)?
            } else {
                track(tr.as_mut(), &seq, &init)?
            };
            if !result.clamped_frames.is_empty() {
                eprintln!("note: search clamped at the border in {} frames", result.clamped_frames.len());
            }
            emit(&result.to_csv(), out.as_deref())
        }
        Command::Study(cmd) => study(cmd),
    }
}

fn synth(cmd: SynthCommand) -> Result<(), HarnessError> {
    match cmd {
        SynthCommand::Phantom {
            phantom,
            alpha,
            seed,
            out,
        } => {
            let mut img = make_phantom(&phantom.spec(), seed)?;
            if alpha > 0.0 {
                img = apply_speckle(&img, &SpeckleSpec::new(alpha, Benchmark::speckle_seed(seed)))?;
            }
            save_pgm(&img, &out)?;
        }
        SynthCommand::Sequence { bench, seed, out_dir } => {
            let seq = bench.benchmark().sequence(seed)?;
            seq.write(&out_dir)?;
        }
        SynthCommand::Sweep {
            phantom,
            alphas,
            seed,
            out_dir,
        } => {
            fs::create_dir_all(&out_dir)?;
            let clean = make_phantom(&phantom.spec(), seed)?;
            save_pgm(&clean, out_dir.join("clean.pgm"))?;
            for alpha in parse_floats(&alphas, "alphas")? {
                let noisy = apply_speckle(&clean, &SpeckleSpec::new(alpha, Benchmark::speckle_seed(seed)))?;
                save_pgm(&noisy, out_dir.join(format!("alpha_{alpha:.2}.pgm")))?;
            }
        }
    }
    Ok(())
}

fn study(cmd: StudyCommand) -> Result<(), HarnessError> {
    match cmd {
        StudyCommand::Correlation {
            source,
            metrics,
            roi,
            out,
        } => {
            let (seq, default_roi) = source.load()?;
            let roi = roi.as_deref().map(parse_roi).transpose()?.or(default_roi);
            let report = run_correlation_study(&seq, &parse_metric_list(&metrics)?, roi.as_ref(), &MetricConfig::default())?;
            for (m, kind) in &report.failures {
                eprintln!("note: {m}: {kind}");
            }
            emit(&(report.to_json() + "\n"), out.as_deref())
        }
        StudyCommand::NoiseSweep {
            phantom,
            alphas,
            metrics,
            seeds,
            seed,
            out,
        } => {
            let report = run_noise_sweep(
                &phantom.spec(),
                &parse_floats(&alphas, "alphas")?,
                &parse_metric_list(&metrics)?,
                seeds,
                seed,
                &MetricConfig::default(),
            )?;
            emit(&report.to_csv(), out.as_deref())
        }
        StudyCommand::Tracking {
            source,
            trackers,
            tau,
            calibrate,
            roi,
            drift_frame,
            drift_px,
            out,
            series,
        } => {
            let (seq, default_roi) = source.load()?;
            let roi = match roi.as_deref().map(parse_roi).transpose()?.or(default_roi) {
                Some(r) => r,
                None => {
                    let first = seq.landmarks().and_then(|l| l[0].first().copied()).ok_or(HarnessError::MissingTruth)?;
                    Roi::square(first, 32)
                }
            };
            let reset = match tau {
                Some(t) => ResetConfig::with_tau(roi, t),
                None => ResetConfig::calibrated(roi, calibrate),
            };
            let drift = drift_frame.map(|frame| Drift {
                frame,
                dx: drift_px,
                dy: 0.0,
            });
            let report = run_tracking_experiment(&seq, &parse_trackers(&trackers)?, &reset, drift)?;
            if let Some(p) = series {
                fs::write(p, report.series_csv())?;
            }
            emit(&report.summary_csv(), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(2)
        }
    }
}
