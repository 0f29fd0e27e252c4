//! Three-step splitting update for `phi` and the outer coordinate-descent
//! loop.
//!
//! Each sweep integrates the three forces of the gradient flow one after
//! another instead of all at once:
//!
//! 1. [`step1_data`] takes one implicit (proximal) step on the data term,
//!    which is unconditionally stable in the step size;
//! 2. [`step2_diffuse`] solves `(Id - mu tau2 Laplacian) phi' = phi`
//!    exactly in Fourier space under periodic boundaries;
//! 3. [`step3_project`] resolves the double-well relaxation by projecting
//!    onto `{-1, +1}`.
//!
//! Convergence is measured on the projected mask: the sweep loop stops when
//! the fraction of sign flips drops to `tol`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ensure_same_shape, ImageGrid, LevelSetField};
use crate::model::{
    energy, update_bias, update_c1, update_c2, EnergyBreakdown, ModelParams, SolverState,
};
use crate::scalar::{cast, Scalar};

/// Pointwise data-term weights of the split gradient flow.
///
/// `inside_misfit = lambda1 (I - b c1)^2` pushes a pixel toward the outside
/// label; `outside_misfit = lambda2 (I - b c2)^2` pushes it inside.
#[derive(Debug, Clone)]
pub struct DataCoefficients<T> {
    pub inside_misfit: ImageGrid<T>,
    pub outside_misfit: ImageGrid<T>,
}

/// Precomputed spectral data for [`step2_diffuse`] on a fixed grid size.
pub struct SpectralPlan<T: Scalar> {
    width: usize,
    height: usize,
    /// Eigenvalues of the periodic five-point Laplacian, row-major over
    /// frequencies: `2 cos(2 pi k / W) + 2 cos(2 pi l / H) - 4`.
    laplacian_symbol: Vec<T>,
    fwd_row: Arc<dyn Fft<T>>,
    inv_row: Arc<dyn Fft<T>>,
    fwd_col: Arc<dyn Fft<T>>,
    inv_col: Arc<dyn Fft<T>>,
}

impl<T: Scalar> SpectralPlan<T> {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyGrid);
        }
        let two = cast::<T>(2.0);
        let tau = T::TAU();
        let mut laplacian_symbol = Vec::with_capacity(width * height);
        for l in 0..height {
            let row = two
                * (tau * T::from_usize(l).unwrap() / T::from_usize(height).unwrap()).cos();
            for k in 0..width {
                let col = two
                    * (tau * T::from_usize(k).unwrap() / T::from_usize(width).unwrap()).cos();
                laplacian_symbol.push(row + col - two - two);
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            width,
            height,
            laplacian_symbol,
            fwd_row: planner.plan_fft_forward(width),
            inv_row: planner.plan_fft_inverse(width),
            fwd_col: planner.plan_fft_forward(height),
            inv_col: planner.plan_fft_inverse(height),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Per-frequency Laplacian eigenvalues; all lie in `[-8, 0]` with the
    /// zero frequency at exactly 0.
    pub fn laplacian_symbol(&self) -> &[T] {
        &self.laplacian_symbol
    }

    fn transpose(&self, buf: &[Complex<T>]) -> Vec<Complex<T>> {
        let (w, h) = (self.width, self.height);
        let mut out = vec![Complex::new(T::zero(), T::zero()); w * h];
        for y in 0..h {
            for x in 0..w {
                out[x * h + y] = buf[y * w + x];
            }
        }
        out
    }
}

/// Evaluates the data-term weights for the current estimates.
pub fn compute_coefficients<T: Scalar>(
    image: &ImageGrid<T>,
    bias: &ImageGrid<T>,
    c1: T,
    c2: T,
    params: &ModelParams<T>,
) -> Result<DataCoefficients<T>> {
    let (w, h) = (image.width(), image.height());
    ensure_same_shape(w, h, bias.width(), bias.height())?;
    let mut inside = Vec::with_capacity(w * h);
    let mut outside = Vec::with_capacity(w * h);
    for (&img, &b) in image.values().iter().zip(bias.values()) {
        let r1 = img - b * c1;
        let r2 = img - b * c2;
        inside.push(params.lambda1 * r1 * r1);
        outside.push(params.lambda2 * r2 * r2);
    }
    Ok(DataCoefficients {
        inside_misfit: ImageGrid::from_values_unchecked(w, h, inside),
        outside_misfit: ImageGrid::from_values_unchecked(w, h, outside),
    })
}

/// Implicit step on the data term.
///
/// Solves `(phi' - phi) / tau1 = -A (1 + phi') + B (1 - phi')` pointwise,
/// giving the closed form `phi' = (phi - tau1 (A - B)) / (1 + tau1 (A + B))`.
/// This is a proximal step on a convex pointwise quadratic, so the data
/// sub-energy never increases, and `|phi'| <= max(|phi|, 1)` because the
/// update pulls toward `(B - A)/(A + B)` which lies in `[-1, 1]`.
pub fn step1_data<T: Scalar>(
    phi: &LevelSetField<T>,
    coeffs: &DataCoefficients<T>,
    tau1: T,
) -> Result<LevelSetField<T>> {
    if tau1 <= T::zero() || !tau1.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau1",
            detail: format!("{tau1} must be positive"),
        });
    }
    let (w, h) = (phi.width(), phi.height());
    ensure_same_shape(
        w,
        h,
        coeffs.inside_misfit.width(),
        coeffs.inside_misfit.height(),
    )?;
    ensure_same_shape(
        w,
        h,
        coeffs.outside_misfit.width(),
        coeffs.outside_misfit.height(),
    )?;
    let values: Vec<T> = phi
        .values()
        .iter()
        .zip(coeffs.inside_misfit.values())
        .zip(coeffs.outside_misfit.values())
        .map(|((&p, &a), &b)| (p - tau1 * (a - b)) / (T::one() + tau1 * (a + b)))
        .collect();
    Ok(LevelSetField::from_values_unchecked(w, h, values))
}

/// Exact solve of the diffusion step `(Id - mu tau2 Laplacian) phi' = phi`.
///
/// Forward 2-D FFT, division of every coefficient by
/// `1 - mu tau2 sigma(k, l)` (always >= 1 since the symbol is nonpositive),
/// inverse FFT. The imaginary residue of the inverse transform is rounding
/// noise and is discarded. The zero frequency passes through untouched, so
/// the mean of `phi` is preserved.
pub fn step2_diffuse<T: Scalar>(
    phi: &LevelSetField<T>,
    plan: &SpectralPlan<T>,
    mu: T,
    tau2: T,
) -> Result<LevelSetField<T>> {
    if tau2 <= T::zero() || !tau2.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau2",
            detail: format!("{tau2} must be positive"),
        });
    }
    if mu < T::zero() {
        return Err(Error::InvalidParameter {
            name: "mu",
            detail: format!("{mu} must be nonnegative"),
        });
    }
    let (w, h) = (phi.width(), phi.height());
    ensure_same_shape(w, h, plan.width, plan.height)?;

    let mut buf: Vec<Complex<T>> = phi
        .values()
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();

    let mut scratch = vec![
        Complex::new(T::zero(), T::zero());
        plan.fwd_row
            .get_inplace_scratch_len()
            .max(plan.inv_row.get_inplace_scratch_len())
            .max(plan.fwd_col.get_inplace_scratch_len())
            .max(plan.inv_col.get_inplace_scratch_len())
    ];

    // Forward transform: rows, then columns of the transposed buffer.
    plan.fwd_row.process_with_scratch(&mut buf, &mut scratch);
    let mut tbuf = plan.transpose(&buf);
    plan.fwd_col.process_with_scratch(&mut tbuf, &mut scratch);

    // tbuf[k * h + l] is the (k, l) coefficient; fold the inverse-transform
    // normalization into the per-frequency factor.
    let norm = T::one() / T::from_usize(w * h).unwrap();
    let coupling = mu * tau2;
    for k in 0..w {
        for l in 0..h {
            let denom = T::one() - coupling * plan.laplacian_symbol[l * w + k];
            let factor = norm / denom;
            let c = tbuf[k * h + l];
            tbuf[k * h + l] = Complex::new(c.re * factor, c.im * factor);
        }
    }

    // Inverse transform: columns, transpose back, rows.
    plan.inv_col.process_with_scratch(&mut tbuf, &mut scratch);
    let mut buf = {
        let (w0, h0) = (plan.width, plan.height);
        let mut out = vec![Complex::new(T::zero(), T::zero()); w0 * h0];
        for k in 0..w0 {
            for l in 0..h0 {
                out[l * w0 + k] = tbuf[k * h0 + l];
            }
        }
        out
    };
    plan.inv_row.process_with_scratch(&mut buf, &mut scratch);

    // The input is real and the operator symmetric, so the imaginary part
    // is pure rounding noise; it is discarded.
    #[cfg(debug_assertions)]
    {
        let bound = T::epsilon() * T::from_usize(64 * w * h).unwrap();
        for c in &buf {
            debug_assert!(
                c.im.abs() <= bound * c.re.abs().max(T::one()),
                "imaginary residue above rounding level"
            );
        }
    }
    let values: Vec<T> = buf.into_iter().map(|c| c.re).collect();
    Ok(LevelSetField::from_values_unchecked(w, h, values))
}

/// Projects onto the binary range: +1 where `phi >= 0`, else -1.
pub fn step3_project<T: Scalar>(phi: &LevelSetField<T>) -> LevelSetField<T> {
    let values: Vec<T> = phi
        .values()
        .iter()
        .map(|&v| if v >= T::zero() { T::one() } else { -T::one() })
        .collect();
    LevelSetField::from_values_unchecked(phi.width(), phi.height(), values)
}

/// Choice of initial mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initializer {
    /// +1 inside a centered disk of radius `min(width, height) / 4`.
    Disk,
    /// +1 inside the centered rectangle of half the extent per axis.
    Rectangle,
    /// +1 where the image is at least its mean intensity.
    Threshold,
}

/// Builds the initial binary mask.
pub fn initialize_phi<T: Scalar>(
    width: usize,
    height: usize,
    init: Initializer,
    image: &ImageGrid<T>,
) -> Result<LevelSetField<T>> {
    ensure_same_shape(width, height, image.width(), image.height())?;
    let mut values = vec![-T::one(); width * height];
    match init {
        Initializer::Disk => {
            let r = cast::<T>(width.min(height) as f64 / 4.0);
            let r2 = r * r;
            let cx = cast::<T>((width as f64 - 1.0) / 2.0);
            let cy = cast::<T>((height as f64 - 1.0) / 2.0);
            for y in 0..height {
                for x in 0..width {
                    let dx = T::from_usize(x).unwrap() - cx;
                    let dy = T::from_usize(y).unwrap() - cy;
                    if dx * dx + dy * dy <= r2 {
                        values[y * width + x] = T::one();
                    }
                }
            }
        }
        Initializer::Rectangle => {
            let (x0, y0) = (width / 4, height / 4);
            let (rw, rh) = (width / 2, height / 2);
            for y in y0..(y0 + rh).min(height) {
                for x in x0..(x0 + rw).min(width) {
                    values[y * width + x] = T::one();
                }
            }
        }
        Initializer::Threshold => {
            let mean = image.mean();
            for (v, &img) in values.iter_mut().zip(image.values()) {
                if img >= mean {
                    *v = T::one();
                }
            }
        }
    }
    Ok(LevelSetField::from_values_unchecked(width, height, values))
}

/// Runs the full coordinate-descent loop from `phi0 = initialize_phi` and
/// `b0 = 1`.
///
/// Each sweep updates `c1`, `c2`, the bias (unless `bias_fixed`), and then
/// applies the three-step splitting to `phi`, recording the energy after
/// the sweep. A sweep whose fraction of sign flips is at most `tol` ends
/// the loop with `converged = true`; running out of `max_iters` is not an
/// error and leaves `converged = false`.
///
/// Degenerate coordinate updates (an empty region, or a bias denominator
/// that vanishes because both intensities are zero) keep the previous
/// value; that keeps constant images well defined. The recorded initial
/// energy uses region intensities fitted to the initial mask.
pub fn solve<T: Scalar>(
    image: &ImageGrid<T>,
    params: &ModelParams<T>,
    init: Initializer,
) -> Result<SolverState<T>> {
    params.validate()?;
    if let Some(&bad) = image
        .values()
        .iter()
        .find(|v| **v < T::zero() || **v > T::one())
    {
        return Err(Error::InvalidParameter {
            name: "image",
            detail: format!("value {bad} outside [0, 1]; normalize the image first"),
        });
    }
    let (w, h) = (image.width(), image.height());
    let plan = SpectralPlan::new(w, h)?;
    let pixel_count = T::from_usize(w * h).unwrap();

    let phi = initialize_phi(w, h, init, image)?;
    let bias = ImageGrid::constant(w, h, T::one())?;
    let mut state = SolverState {
        phi,
        c1: T::one(),
        c2: T::zero(),
        bias,
        iter: 0,
        converged: false,
        energy_trace: Vec::new(),
    };
    update_intensities(image, &mut state, params)?;
    let initial = energy(image, &state, params)?;
    state.energy_trace.push(initial);

    for sweep in 1..=params.max_iters {
        update_intensities(image, &mut state, params)?;
        if !params.bias_fixed {
            match update_bias(image, &state.phi, state.c1, state.c2, params) {
                Ok(updated) => state.bias = updated,
                Err(Error::DegenerateBias) => {}
                Err(e) => return Err(e),
            }
        }
        let coeffs = compute_coefficients(image, &state.bias, state.c1, state.c2, params)?;
        let drifted = step1_data(&state.phi, &coeffs, params.tau1)?;
        let diffused = step2_diffuse(&drifted, &plan, params.mu, params.tau2)?;
        let projected = step3_project(&diffused);

        let flips = state
            .phi
            .values()
            .iter()
            .zip(projected.values())
            .filter(|(a, b)| a != b)
            .count();
        state.phi = projected;
        state.iter = sweep;
        let breakdown: EnergyBreakdown<T> = energy(image, &state, params)?;
        state.energy_trace.push(breakdown);

        let flip_fraction = T::from_usize(flips).unwrap() / pixel_count;
        if flip_fraction <= params.tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Refits `c1`/`c2`, keeping the previous value when a region is empty.
fn update_intensities<T: Scalar>(
    image: &ImageGrid<T>,
    state: &mut SolverState<T>,
    params: &ModelParams<T>,
) -> Result<()> {
    match update_c1(image, &state.phi, &state.bias, params) {
        Ok(c1) => state.c1 = c1,
        Err(Error::EmptyInsideRegion) => {}
        Err(e) => return Err(e),
    }
    match update_c2(image, &state.phi, &state.bias, params) {
        Ok(c2) => state.c2 = c2,
        Err(Error::EmptyOutsideRegion) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}
