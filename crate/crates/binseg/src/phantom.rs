//! Synthetic two-phase test images with known ground truth.
//!
//! A phantom is built as `image = clip(bias * c, 0, 1)` plus optional noise,
//! where `c` equals `c_in` inside the shape and `c_out` outside, and the
//! bias is a smooth multiplicative field of unit mean. Having the exact
//! mask and bias on hand makes quantitative evaluation possible.
//!
//! Reproducibility: all randomness comes from a fixed, fully specified
//! generator implemented in this file (SplitMix64 plus Box-Muller), so the
//! same seed produces bit-identical phantoms on every platform and in every
//! build of this crate.

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, LevelSetField};
use crate::scalar::{cast, Scalar};

/// Foreground geometry of a phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    /// Centered disk of radius `0.42 * min(width, height)`.
    Disk,
    /// Centered rectangle of half the image extent per axis.
    Rectangle,
    /// Two disks of radius `min(width, height) / 6` centered at one third
    /// and two thirds of the width.
    TwoDisks,
}

/// Multiplicative bias field shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasKind {
    /// Constant bias of exactly 1.
    None,
    /// `1 + amplitude * (2x/(width-1) - 1)`: brightens one side, darkens
    /// the other.
    LinearRamp,
    /// `1 + amplitude * cos(pi x / width) * cos(pi y / height)`,
    /// renormalized to unit mean: bright and dark blobs in opposite
    /// corners.
    CosineBump,
}

/// Noise applied after the bias multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    /// Additive zero-mean Gaussian noise with standard deviation
    /// `noise_level`.
    Gaussian,
    /// Each pixel is replaced by 0 or 1 (equal odds) with probability
    /// `noise_level`.
    SaltPepper,
}

/// Full description of a synthetic test image.
#[derive(Debug, Clone)]
pub struct PhantomSpec<T> {
    pub width: usize,
    pub height: usize,
    pub shape: ShapeKind,
    /// Intensity inside the shape, in `(0, 1]`.
    pub c_in: T,
    /// Intensity outside the shape, in `[0, 1)`.
    pub c_out: T,
    pub bias_kind: BiasKind,
    /// Bias amplitude; must stay below 1 so the bias is strictly positive.
    pub bias_amplitude: T,
    pub noise_kind: NoiseKind,
    /// Gaussian standard deviation, or flip fraction for salt-pepper.
    pub noise_level: T,
    pub seed: u64,
}

/// A generated phantom: observed image, ground-truth mask, true bias.
#[derive(Debug, Clone)]
pub struct Phantom<T> {
    pub image: ImageGrid<T>,
    pub truth: LevelSetField<T>,
    pub bias: ImageGrid<T>,
}

impl<T: Scalar> PhantomSpec<T> {
    /// Spec with library defaults: 0.8/0.3 disk, no bias, no noise, seed 0.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            shape: ShapeKind::Disk,
            c_in: cast(0.8),
            c_out: cast(0.3),
            bias_kind: BiasKind::None,
            bias_amplitude: cast(0.2),
            noise_kind: NoiseKind::None,
            noise_level: cast(0.05),
            seed: 0,
        }
    }

    /// Checks ranges and the `c_in != c_out` separability requirement.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::EmptyGrid);
        }
        if self.c_in == self.c_out {
            return Err(Error::UnsegmentablePhantom);
        }
        let invalid = |name, detail: String| Error::InvalidParameter { name, detail };
        if self.c_in <= T::zero() || self.c_in > T::one() {
            return Err(invalid("c_in", format!("{} not in (0, 1]", self.c_in)));
        }
        if self.c_out < T::zero() || self.c_out >= T::one() {
            return Err(invalid("c_out", format!("{} not in [0, 1)", self.c_out)));
        }
        if self.bias_amplitude < T::zero() {
            return Err(invalid(
                "bias_amplitude",
                format!("{} is negative", self.bias_amplitude),
            ));
        }
        if self.bias_kind != BiasKind::None && self.bias_amplitude >= T::one() {
            return Err(invalid(
                "bias_amplitude",
                format!("{} must be below 1 for a strictly positive bias", self.bias_amplitude),
            ));
        }
        if self.noise_level < T::zero() {
            return Err(invalid(
                "noise_level",
                format!("{} is negative", self.noise_level),
            ));
        }
        if self.noise_kind == NoiseKind::SaltPepper && self.noise_level > T::one() {
            return Err(invalid(
                "noise_level",
                format!("flip fraction {} exceeds 1", self.noise_level),
            ));
        }
        Ok(())
    }
}

/// SplitMix64 stream (Steele, Lea, Flood 2014).
///
/// `state` advances by the 64-bit golden ratio; each output mixes the new
/// state through two xor-multiply rounds. Uniform doubles take the top 53
/// bits, giving values on a `2^-53` lattice in `[0, 1)`.
struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`, safe as a logarithm argument.
    fn next_uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (cosine branch). Always consumes
    /// exactly two draws so pixel alignment never depends on values.
    fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_uniform_open();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Snaps a bias sample to a `2^-40` lattice.
///
/// Coarsening the mantissa means products with short-mantissa intensities
/// (0.75, 0.5, 0.25, ...) are exact in f64, so `image / bias` recovers the
/// region intensity without rounding. The snap moves values by at most
/// `2^-41`, far below anything the solver can resolve.
fn snap_bias(v: f64) -> f64 {
    const SCALE: f64 = (1u64 << 40) as f64;
    (v * SCALE).round() / SCALE
}

/// Disk radius as a fraction of `min(width, height)`. Chosen so the inside
/// region covers roughly half the pixels of a square image, which keeps a
/// mean-threshold initialization close to the true boundary.
const DISK_RADIUS_FACTOR: f64 = 0.42;

fn shape_mask(spec_width: usize, spec_height: usize, shape: ShapeKind) -> Vec<bool> {
    let (w, h) = (spec_width, spec_height);
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut mask = vec![false; w * h];
    match shape {
        ShapeKind::Disk => {
            let r = DISK_RADIUS_FACTOR * w.min(h) as f64;
            let r2 = r * r;
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    mask[y * w + x] = dx * dx + dy * dy <= r2;
                }
            }
        }
        ShapeKind::Rectangle => {
            let (x0, y0) = (w / 4, h / 4);
            let (rw, rh) = (w / 2, h / 2);
            for y in y0..(y0 + rh).min(h) {
                for x in x0..(x0 + rw).min(w) {
                    mask[y * w + x] = true;
                }
            }
        }
        ShapeKind::TwoDisks => {
            let r = w.min(h) as f64 / 6.0;
            let r2 = r * r;
            let centers = [((w as f64 - 1.0) / 3.0, cy), (2.0 * (w as f64 - 1.0) / 3.0, cy)];
            for y in 0..h {
                for x in 0..w {
                    let hit = centers.iter().any(|&(ox, oy)| {
                        let (dx, dy) = (x as f64 - ox, y as f64 - oy);
                        dx * dx + dy * dy <= r2
                    });
                    mask[y * w + x] = hit;
                }
            }
        }
    }
    mask
}

fn bias_values(spec_width: usize, spec_height: usize, kind: BiasKind, amplitude: f64) -> Vec<f64> {
    let (w, h) = (spec_width, spec_height);
    let mut bias = vec![1.0; w * h];
    match kind {
        BiasKind::None => {}
        BiasKind::LinearRamp => {
            for y in 0..h {
                for x in 0..w {
                    let ramp = if w > 1 {
                        2.0 * x as f64 / (w as f64 - 1.0) - 1.0
                    } else {
                        0.0
                    };
                    bias[y * w + x] = 1.0 + amplitude * ramp;
                }
            }
        }
        BiasKind::CosineBump => {
            for y in 0..h {
                for x in 0..w {
                    let bx = (std::f64::consts::PI * x as f64 / w as f64).cos();
                    let by = (std::f64::consts::PI * y as f64 / h as f64).cos();
                    bias[y * w + x] = 1.0 + amplitude * bx * by;
                }
            }
            // The discrete mean of the bump is not exactly 1; renormalize.
            let mean = bias.iter().sum::<f64>() / bias.len() as f64;
            for v in &mut bias {
                *v /= mean;
            }
        }
    }
    for v in &mut bias {
        *v = snap_bias(*v);
    }
    bias
}

/// Generates the phantom described by `spec`.
///
/// The returned mask is exactly `{-1, +1}`, the bias is strictly positive
/// with mean 1, and the clean image is `bias * c` pixel by pixel before
/// noise and clipping. Identical specs produce bit-identical phantoms.
pub fn generate<T: Scalar>(spec: &PhantomSpec<T>) -> Result<Phantom<T>> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);

    let inside = shape_mask(w, h, spec.shape);
    let inside_count = inside.iter().filter(|&&m| m).count();
    if inside_count == 0 {
        return Err(Error::DegenerateShape { region: "inside" });
    }
    if inside_count == inside.len() {
        return Err(Error::DegenerateShape { region: "outside" });
    }

    let bias = bias_values(w, h, spec.bias_kind, spec.bias_amplitude.to_f64().unwrap());
    let bias_t: Vec<T> = bias.iter().map(|&v| cast(v)).collect();

    let mut image: Vec<T> = inside
        .iter()
        .zip(&bias_t)
        .map(|(&m, &b)| if m { b * spec.c_in } else { b * spec.c_out })
        .collect();

    let mut rng = SplitMix64::new(spec.seed);
    match spec.noise_kind {
        NoiseKind::None => {}
        NoiseKind::Gaussian => {
            for v in &mut image {
                *v = *v + spec.noise_level * cast(rng.next_gaussian());
            }
        }
        NoiseKind::SaltPepper => {
            let p = spec.noise_level.to_f64().unwrap();
            for v in &mut image {
                let flip = rng.next_uniform();
                let polarity = rng.next_uniform();
                if flip < p {
                    *v = if polarity < 0.5 { T::zero() } else { T::one() };
                }
            }
        }
    }
    for v in &mut image {
        *v = (*v).max(T::zero()).min(T::one());
    }

    let truth: Vec<T> = inside
        .iter()
        .map(|&m| if m { T::one() } else { -T::one() })
        .collect();

    Ok(Phantom {
        image: ImageGrid::from_values(w, h, image)?,
        truth: LevelSetField::from_values(w, h, truth)?,
        bias: ImageGrid::from_values(w, h, bias_t)?,
    })
}
