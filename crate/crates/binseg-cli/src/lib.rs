//! Command-line front end: segment images, synthesize phantoms, evaluate
//! masks.
//!
//! All numeric work happens in `f64`. Every run is deterministic: the same
//! flags and inputs produce byte-identical output files.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use binseg::io::{load_image, load_mask, save_field, save_image, save_mask};
use binseg::metrics::{confusion, dice, jaccard, js};
use binseg::model::ModelParams;
use binseg::phantom::{generate, BiasKind, NoiseKind, PhantomSpec, ShapeKind};
use binseg::solver::{solve, Initializer};
use binseg::ImageGrid;

/// Two-phase segmentation with multiplicative bias correction.
#[derive(Debug, Parser)]
#[command(name = "binseg", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a grayscale image and write all run artifacts.
    Segment(SegmentArgs),
    /// Generate a synthetic phantom with known ground truth.
    Synth(SynthArgs),
    /// Compare two binary masks and print dice/js/jaccard.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitChoice {
    Disk,
    Rectangle,
    Threshold,
}

impl From<InitChoice> for Initializer {
    fn from(choice: InitChoice) -> Self {
        match choice {
            InitChoice::Disk => Initializer::Disk,
            InitChoice::Rectangle => Initializer::Rectangle,
            InitChoice::Threshold => Initializer::Threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeChoice {
    Disk,
    Rectangle,
    TwoDisks,
}

impl From<ShapeChoice> for ShapeKind {
    fn from(choice: ShapeChoice) -> Self {
        match choice {
            ShapeChoice::Disk => ShapeKind::Disk,
            ShapeChoice::Rectangle => ShapeKind::Rectangle,
            ShapeChoice::TwoDisks => ShapeKind::TwoDisks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BiasChoice {
    None,
    LinearRamp,
    CosineBump,
}

impl From<BiasChoice> for BiasKind {
    fn from(choice: BiasChoice) -> Self {
        match choice {
            BiasChoice::None => BiasKind::None,
            BiasChoice::LinearRamp => BiasKind::LinearRamp,
            BiasChoice::CosineBump => BiasKind::CosineBump,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseChoice {
    None,
    Gaussian,
    SaltPepper,
}

impl From<NoiseChoice> for NoiseKind {
    fn from(choice: NoiseChoice) -> Self {
        match choice {
            NoiseChoice::None => NoiseKind::None,
            NoiseChoice::Gaussian => NoiseKind::Gaussian,
            NoiseChoice::SaltPepper => NoiseKind::SaltPepper,
        }
    }
}

fn defaults() -> ModelParams<f64> {
    ModelParams::default()
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Input image (8-bit PGM or PNG).
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for mask.pgm, bias.txt, corrected.txt, energy.csv,
    /// report.txt (created if missing).
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Ground-truth mask (0/255 PGM); adds dice/js/jaccard to report.txt.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Inside data term weight.
    #[arg(long, default_value_t = defaults().lambda1)]
    pub lambda1: f64,
    /// Outside data term weight.
    #[arg(long, default_value_t = defaults().lambda2)]
    pub lambda2: f64,
    /// Diffusion weight.
    #[arg(long, default_value_t = defaults().mu)]
    pub mu: f64,
    /// Double-well weight (reporting only; the projection keeps phi binary).
    #[arg(long, default_value_t = defaults().nu)]
    pub nu: f64,
    /// Implicit data step size.
    #[arg(long, default_value_t = defaults().tau1)]
    pub tau1: f64,
    /// Diffusion step size.
    #[arg(long, default_value_t = defaults().tau2)]
    pub tau2: f64,
    /// Maximum number of sweeps.
    #[arg(long, default_value_t = defaults().max_iters)]
    pub max_iters: usize,
    /// Stop when the flipped-pixel fraction drops to this value. The
    /// default demands an exact fixed point; 1e-4 is a good pick for noisy
    /// images.
    #[arg(long, default_value_t = defaults().tol)]
    pub tol: f64,
    /// Gaussian std (pixels) smoothing the bias update; 0 disables.
    #[arg(long, default_value_t = defaults().bias_smooth_sigma)]
    pub bias_smooth_sigma: f64,
    /// Pin the bias to 1 (piecewise-constant baseline).
    #[arg(long)]
    pub bias_fixed: bool,
    /// Denominator guard.
    #[arg(long, default_value_t = defaults().epsilon_div)]
    pub epsilon_div: f64,
    /// Initial mask.
    #[arg(long, value_enum, default_value_t = InitChoice::Threshold)]
    pub init: InitChoice,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for image.pgm, truth.pgm, bias_true.txt (created if
    /// missing).
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, value_enum, default_value_t = ShapeChoice::Disk)]
    pub shape: ShapeChoice,
    /// Intensity inside the shape, in (0, 1].
    #[arg(long, default_value_t = 0.8)]
    pub c_in: f64,
    /// Intensity outside the shape, in [0, 1).
    #[arg(long, default_value_t = 0.3)]
    pub c_out: f64,
    #[arg(long, value_enum, default_value_t = BiasChoice::None)]
    pub bias_kind: BiasChoice,
    /// Bias amplitude (must stay below 1).
    #[arg(long, default_value_t = 0.2)]
    pub bias_amplitude: f64,
    #[arg(long, value_enum, default_value_t = NoiseChoice::None)]
    pub noise_kind: NoiseChoice,
    /// Gaussian std, or flip fraction for salt-pepper.
    #[arg(long, default_value_t = 0.05)]
    pub noise_level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted mask (0/255 PGM).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth mask (0/255 PGM).
    #[arg(long)]
    pub truth: PathBuf,
}

impl SegmentArgs {
    fn params(&self) -> ModelParams<f64> {
        ModelParams {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            mu: self.mu,
            nu: self.nu,
            tau1: self.tau1,
            tau2: self.tau2,
            max_iters: self.max_iters,
            tol: self.tol,
            bias_smooth_sigma: self.bias_smooth_sigma,
            bias_fixed: self.bias_fixed,
            epsilon_div: self.epsilon_div,
        }
    }
}

/// Runs the segmentation pipeline and writes all artifacts.
pub fn run_segment(args: &SegmentArgs) -> anyhow::Result<()> {
    let image: ImageGrid<f64> = load_image(&args.input)
        .with_context(|| format!("loading input image {}", args.input.display()))?;
    let params = args.params();
    let state = solve(&image, &params, args.init.into()).context("segmentation failed")?;

    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating output directory {}", args.output_dir.display()))?;

    save_mask(&state.phi, args.output_dir.join("mask.pgm")).context("writing mask.pgm")?;
    save_field(&state.bias, args.output_dir.join("bias.txt")).context("writing bias.txt")?;

    let corrected_values: Vec<f64> = image
        .values()
        .iter()
        .zip(state.bias.values())
        .map(|(&i, &b)| (i / b).clamp(0.0, 1.0))
        .collect();
    let corrected = ImageGrid::from_values(image.width(), image.height(), corrected_values)
        .context("building corrected image")?;
    save_field(&corrected, args.output_dir.join("corrected.txt"))
        .context("writing corrected.txt")?;

    let mut csv = String::from("iter,data1,data2,reg,penalty,total\n");
    for (iter, e) in state.energy_trace.iter().enumerate() {
        writeln!(
            csv,
            "{iter},{},{},{},{},{}",
            e.data1, e.data2, e.reg, e.penalty, e.total
        )?;
    }
    fs::write(args.output_dir.join("energy.csv"), csv).context("writing energy.csv")?;

    let mut report = String::new();
    writeln!(report, "c1={}", state.c1)?;
    writeln!(report, "c2={}", state.c2)?;
    writeln!(report, "iterations={}", state.iter)?;
    writeln!(report, "converged={}", state.converged)?;
    if let Some(truth_path) = &args.ground_truth {
        let truth = load_mask(truth_path)
            .with_context(|| format!("loading ground truth {}", truth_path.display()))?;
        let counts = confusion(&state.phi, &truth).context("comparing against ground truth")?;
        writeln!(report, "dice={:.6}", dice(&counts)?)?;
        writeln!(report, "js={:.6}", js(&counts)?)?;
        writeln!(report, "jaccard={:.6}", jaccard(&counts)?)?;
    }
    fs::write(args.output_dir.join("report.txt"), report).context("writing report.txt")?;
    Ok(())
}

/// Generates a phantom and writes image, truth mask, and true bias.
pub fn run_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let spec = PhantomSpec {
        width: args.width,
        height: args.height,
        shape: args.shape.into(),
        c_in: args.c_in,
        c_out: args.c_out,
        bias_kind: args.bias_kind.into(),
        bias_amplitude: args.bias_amplitude,
        noise_kind: args.noise_kind.into(),
        noise_level: args.noise_level,
        seed: args.seed,
    };
    let phantom = generate(&spec).context("generating phantom")?;
    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating output directory {}", args.output_dir.display()))?;
    save_image(&phantom.image, args.output_dir.join("image.pgm"))
        .context("writing image.pgm")?;
    save_mask(&phantom.truth, args.output_dir.join("truth.pgm"))
        .context("writing truth.pgm")?;
    save_field(&phantom.bias, args.output_dir.join("bias_true.txt"))
        .context("writing bias_true.txt")?;
    Ok(())
}

/// Compares two masks; returns the `dice=... js=... jaccard=...` line.
pub fn run_eval(args: &EvalArgs) -> anyhow::Result<String> {
    let pred = load_mask::<f64>(&args.pred)
        .with_context(|| format!("loading predicted mask {}", args.pred.display()))?;
    let truth = load_mask::<f64>(&args.truth)
        .with_context(|| format!("loading truth mask {}", args.truth.display()))?;
    let counts = confusion(&pred, &truth).context("comparing masks")?;
    Ok(format!(
        "dice={:.6} js={:.6} jaccard={:.6}",
        dice(&counts)?,
        js(&counts)?,
        jaccard(&counts)?
    ))
}
