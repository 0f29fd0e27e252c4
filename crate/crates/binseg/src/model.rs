//! The segmentation energy and its exact coordinate minimizers.
//!
//! With image `I`, bias `b`, region intensities `c1`/`c2` and level set
//! `phi`, the objective is
//!
//! ```text
//! E = lambda1 * sum (I - b c1)^2 (1 + phi)^2
//!   + lambda2 * sum (I - b c2)^2 (1 - phi)^2
//!   + mu      * sum |grad phi|^2
//!   + nu      * sum (phi^2 - 1)^2
//! ```
//!
//! discretized with unit pixel spacing, forward differences, and periodic
//! wrap (matching the spectral solver). Each update below is the exact
//! minimizer of `E` in its own variable with everything else held fixed,
//! so every update can only lower the energy.

use crate::error::{Error, Result};
use crate::grid::{ensure_same_shape, ImageGrid, LevelSetField};
use crate::scalar::{cast, Scalar};

/// Weights and solver controls.
#[derive(Debug, Clone)]
pub struct ModelParams<T> {
    /// Inside data term weight (> 0).
    pub lambda1: T,
    /// Outside data term weight (> 0).
    pub lambda2: T,
    /// Diffusion (regularization) weight (>= 0).
    pub mu: T,
    /// Double-well weight (>= 0). The sign projection keeps `phi` binary at
    /// sweep boundaries, so this only shows up in energy reporting.
    pub nu: T,
    /// Time step of the implicit data step (> 0).
    pub tau1: T,
    /// Time step of the diffusion step (> 0).
    pub tau2: T,
    /// Maximum number of outer sweeps.
    pub max_iters: usize,
    /// Stop once the fraction of sign flips per sweep drops to this value.
    pub tol: T,
    /// Gaussian std (pixels) for smoothing the bias update; 0 disables.
    pub bias_smooth_sigma: T,
    /// When set, the bias stays identically 1 (piecewise-constant baseline).
    pub bias_fixed: bool,
    /// Lower guard for denominators and the bias itself (> 0).
    pub epsilon_div: T,
}

impl<T: Scalar> Default for ModelParams<T> {
    /// Calibrated defaults.
    ///
    /// `tau1` has to be large enough that the data term can pull a pixel
    /// across zero within a single sweep (the projection discards smaller
    /// drifts), and `bias_smooth_sigma` large enough that the bias cannot
    /// impersonate region structure at the scale of an initialization
    /// error. The values below segment every bundled phantom exactly from
    /// all three initializers.
    fn default() -> Self {
        Self {
            lambda1: T::one(),
            lambda2: T::one(),
            mu: T::one(),
            nu: T::one(),
            tau1: cast(100.0),
            tau2: cast(0.2),
            max_iters: 200,
            tol: T::zero(),
            bias_smooth_sigma: cast(16.0),
            bias_fixed: false,
            epsilon_div: cast(1e-8),
        }
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let invalid = |name, detail: String| Error::InvalidParameter { name, detail };
        let positive: [(&'static str, T); 5] = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("epsilon_div", self.epsilon_div),
        ];
        for (name, v) in positive {
            if v <= T::zero() || !v.is_finite() {
                return Err(invalid(name, format!("{v} must be positive and finite")));
            }
        }
        let nonnegative: [(&'static str, T); 4] = [
            ("mu", self.mu),
            ("nu", self.nu),
            ("tol", self.tol),
            ("bias_smooth_sigma", self.bias_smooth_sigma),
        ];
        for (name, v) in nonnegative {
            if v < T::zero() || !v.is_finite() {
                return Err(invalid(name, format!("{v} must be nonnegative and finite")));
            }
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// The four energy terms and their sum, evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<T> {
    /// lambda1-weighted inside misfit.
    pub data1: T,
    /// lambda2-weighted outside misfit.
    pub data2: T,
    /// mu-weighted Dirichlet term.
    pub reg: T,
    /// nu-weighted double-well term.
    pub penalty: T,
    /// Sum of the four components, in that order.
    pub total: T,
}

/// Everything the solver evolves, plus the energy history.
#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub phi: LevelSetField<T>,
    pub c1: T,
    pub c2: T,
    pub bias: ImageGrid<T>,
    /// Completed sweeps. `energy_trace` always holds `iter + 1` entries,
    /// the first being the energy of the initial state.
    pub iter: usize,
    /// True when the sweep-flip fraction reached `tol` before `max_iters`.
    pub converged: bool,
    pub energy_trace: Vec<EnergyBreakdown<T>>,
}

/// Evaluates the full energy at the given state.
pub fn energy<T: Scalar>(
    image: &ImageGrid<T>,
    state: &SolverState<T>,
    params: &ModelParams<T>,
) -> Result<EnergyBreakdown<T>> {
    let (w, h) = (image.width(), image.height());
    ensure_same_shape(w, h, state.phi.width(), state.phi.height())?;
    ensure_same_shape(w, h, state.bias.width(), state.bias.height())?;

    let img = image.values();
    let phi = state.phi.values();
    let bias = state.bias.values();

    let mut data1 = T::zero();
    let mut data2 = T::zero();
    let mut reg = T::zero();
    let mut penalty = T::zero();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let p = phi[i];
            let r1 = img[i] - bias[i] * state.c1;
            let r2 = img[i] - bias[i] * state.c2;
            let win = (T::one() + p) * (T::one() + p);
            let wout = (T::one() - p) * (T::one() - p);
            data1 = data1 + r1 * r1 * win;
            data2 = data2 + r2 * r2 * wout;

            let east = phi[y * w + (x + 1) % w] - p;
            let south = phi[((y + 1) % h) * w + x] - p;
            reg = reg + east * east + south * south;

            let well = p * p - T::one();
            penalty = penalty + well * well;
        }
    }
    let data1 = params.lambda1 * data1;
    let data2 = params.lambda2 * data2;
    let reg = params.mu * reg;
    let penalty = params.nu * penalty;
    Ok(EnergyBreakdown {
        data1,
        data2,
        reg,
        penalty,
        total: data1 + data2 + reg + penalty,
    })
}

fn weighted_mean<T: Scalar>(
    image: &ImageGrid<T>,
    phi: &LevelSetField<T>,
    bias: &ImageGrid<T>,
    epsilon_div: T,
    inside: bool,
) -> Result<T> {
    let (w, h) = (image.width(), image.height());
    ensure_same_shape(w, h, phi.width(), phi.height())?;
    ensure_same_shape(w, h, bias.width(), bias.height())?;
    let mut num = T::zero();
    let mut den = T::zero();
    for ((&img, &p), &b) in image
        .values()
        .iter()
        .zip(phi.values())
        .zip(bias.values())
    {
        let weight = if inside { T::one() + p } else { T::one() - p };
        let w2 = weight * weight;
        num = num + img * b * w2;
        den = den + b * b * w2;
    }
    if den < epsilon_div {
        return Err(if inside {
            Error::EmptyInsideRegion
        } else {
            Error::EmptyOutsideRegion
        });
    }
    Ok(num / den)
}

/// Exact minimizer of the energy in `c1`:
/// `sum(I b (1+phi)^2) / sum(b^2 (1+phi)^2)`.
///
/// Fails with [`Error::EmptyInsideRegion`] when the weights vanish; the
/// caller keeps its previous `c1` in that case.
pub fn update_c1<T: Scalar>(
    image: &ImageGrid<T>,
    phi: &LevelSetField<T>,
    bias: &ImageGrid<T>,
    params: &ModelParams<T>,
) -> Result<T> {
    weighted_mean(image, phi, bias, params.epsilon_div, true)
}

/// Exact minimizer of the energy in `c2`, the `(1-phi)^2` mirror of
/// [`update_c1`].
pub fn update_c2<T: Scalar>(
    image: &ImageGrid<T>,
    phi: &LevelSetField<T>,
    bias: &ImageGrid<T>,
    params: &ModelParams<T>,
) -> Result<T> {
    weighted_mean(image, phi, bias, params.epsilon_div, false)
}

/// Exact pointwise minimizer of the energy in the bias field:
///
/// ```text
/// b = (lambda1 I c1 (1+phi)^2 + lambda2 I c2 (1-phi)^2)
///   / (lambda1 c1^2 (1+phi)^2 + lambda2 c2^2 (1-phi)^2)
/// ```
///
/// with the denominator floored at `epsilon_div`. When
/// `bias_smooth_sigma > 0` the ratio field is then convolved with a
/// normalized periodic Gaussian of that std, and finally clamped below at
/// `epsilon_div`. The energy itself carries no smoothness term for `b`, so
/// without smoothing the bias absorbs noise and initialization errors;
/// sigma = 0 keeps the raw pointwise minimizer.
pub fn update_bias<T: Scalar>(
    image: &ImageGrid<T>,
    phi: &LevelSetField<T>,
    c1: T,
    c2: T,
    params: &ModelParams<T>,
) -> Result<ImageGrid<T>> {
    if params.bias_fixed {
        return Err(Error::InvalidParameter {
            name: "bias_fixed",
            detail: "bias update requested while the bias is pinned to 1".to_string(),
        });
    }
    if c1 == T::zero() && c2 == T::zero() {
        return Err(Error::DegenerateBias);
    }
    let (w, h) = (image.width(), image.height());
    ensure_same_shape(w, h, phi.width(), phi.height())?;

    let values: Vec<T> = image
        .values()
        .iter()
        .zip(phi.values())
        .map(|(&img, &p)| {
            let win = (T::one() + p) * (T::one() + p);
            let wout = (T::one() - p) * (T::one() - p);
            let num = params.lambda1 * img * c1 * win + params.lambda2 * img * c2 * wout;
            let den = params.lambda1 * c1 * c1 * win + params.lambda2 * c2 * c2 * wout;
            num / den.max(params.epsilon_div)
        })
        .collect();
    let raw = ImageGrid::from_values_unchecked(w, h, values);
    let smoothed = if params.bias_smooth_sigma > T::zero() {
        gaussian_smooth_periodic(&raw, params.bias_smooth_sigma)
    } else {
        raw
    };
    let clamped: Vec<T> = smoothed
        .values()
        .iter()
        .map(|&v| v.max(params.epsilon_div))
        .collect();
    Ok(ImageGrid::from_values_unchecked(w, h, clamped))
}

/// Separable Gaussian convolution with periodic boundaries.
///
/// The 1-D kernel is truncated at `ceil(3 sigma)` and renormalized, so a
/// constant field passes through unchanged up to rounding.
pub(crate) fn gaussian_smooth_periodic<T: Scalar>(grid: &ImageGrid<T>, sigma: T) -> ImageGrid<T> {
    if sigma <= T::zero() {
        return grid.clone();
    }
    let sigma_f = sigma.to_f64().unwrap();
    let radius = (3.0 * sigma_f).ceil().max(1.0) as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    let mut sum = 0.0;
    for offset in -radius..=radius {
        let w = (-(offset * offset) as f64 / (2.0 * sigma_f * sigma_f)).exp();
        kernel.push(w);
        sum += w;
    }
    let kernel: Vec<T> = kernel.into_iter().map(|w| cast(w / sum)).collect();

    let (w, h) = (grid.width(), grid.height());
    let src = grid.values();

    // Horizontal pass.
    let mut mid = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (ki, &kw) in kernel.iter().enumerate() {
                let dx = ki as isize - radius;
                let sx = (x as isize + dx).rem_euclid(w as isize) as usize;
                acc = acc + kw * src[y * w + sx];
            }
            mid[y * w + x] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (ki, &kw) in kernel.iter().enumerate() {
                let dy = ki as isize - radius;
                let sy = (y as isize + dy).rem_euclid(h as isize) as usize;
                acc = acc + kw * mid[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    ImageGrid::from_values_unchecked(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Deterministic pseudo-random stream for test instances.
    pub(crate) struct TestRng(u64);

    impl TestRng {
        pub(crate) fn new(seed: u64) -> Self {
            Self(seed)
        }

        pub(crate) fn next_f64(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64
        }

        pub(crate) fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * self.next_f64()
        }
    }

    fn state_of(
        phi: LevelSetField<f64>,
        c1: f64,
        c2: f64,
        bias: ImageGrid<f64>,
    ) -> SolverState<f64> {
        SolverState {
            phi,
            c1,
            c2,
            bias,
            iter: 0,
            converged: false,
            energy_trace: Vec::new(),
        }
    }

    /// Random instance with both regions populated.
    fn random_instance(
        rng: &mut TestRng,
        w: usize,
        h: usize,
    ) -> (ImageGrid<f64>, LevelSetField<f64>, ImageGrid<f64>) {
        let n = w * h;
        let image =
            ImageGrid::from_values(w, h, (0..n).map(|_| rng.in_range(0.2, 1.0)).collect())
                .unwrap();
        let mut phi_vals: Vec<f64> = (0..n)
            .map(|_| if rng.next_f64() < 0.5 { 1.0 } else { -1.0 })
            .collect();
        phi_vals[0] = 1.0;
        phi_vals[n - 1] = -1.0;
        let phi = LevelSetField::from_values(w, h, phi_vals).unwrap();
        let bias =
            ImageGrid::from_values(w, h, (0..n).map(|_| rng.in_range(0.8, 1.25)).collect())
                .unwrap();
        (image, phi, bias)
    }

    /// Literal term-by-term energy oracle, independent of `energy`.
    fn energy_oracle(
        image: &ImageGrid<f64>,
        phi: &LevelSetField<f64>,
        bias: &ImageGrid<f64>,
        c1: f64,
        c2: f64,
        p: &ModelParams<f64>,
    ) -> f64 {
        let (w, h) = (image.width(), image.height());
        let mut total = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = image.get(x, y);
                let b = bias.get(x, y);
                let f = phi.get(x, y);
                total += p.lambda1 * (i - b * c1).powi(2) * (1.0 + f).powi(2);
                total += p.lambda2 * (i - b * c2).powi(2) * (1.0 - f).powi(2);
                let east = phi.get((x + 1) % w, y) - f;
                let south = phi.get(x, (y + 1) % h) - f;
                total += p.mu * (east * east + south * south);
                total += p.nu * (f * f - 1.0).powi(2);
            }
        }
        total
    }

    #[test]
    fn energy_is_zero_at_exact_constant_fit() {
        let params = ModelParams::default();
        let image = ImageGrid::constant(3, 3, 0.5).unwrap();
        let state = state_of(
            LevelSetField::constant(3, 3, 1.0).unwrap(),
            0.5,
            0.5,
            ImageGrid::constant(3, 3, 1.0).unwrap(),
        );
        let e = energy(&image, &state, &params).unwrap();
        assert_eq!(e.data1, 0.0);
        assert_eq!(e.data2, 0.0);
        assert_eq!(e.reg, 0.0);
        assert_eq!(e.penalty, 0.0);
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn zero_phi_pays_the_full_well() {
        let params = ModelParams::<f64>::default();
        let image = ImageGrid::constant(4, 4, 0.5).unwrap();
        let state = state_of(
            LevelSetField::constant(4, 4, 0.0).unwrap(),
            0.5,
            0.5,
            ImageGrid::constant(4, 4, 1.0).unwrap(),
        );
        let e = energy(&image, &state, &params).unwrap();
        // (phi^2 - 1)^2 = 1 at every one of the 16 pixels; data terms are
        // 0.25 * (1 -/+ 0)^2... no: I - b*c = 0 exactly, so only the well
        // contributes.
        assert_eq!(e.total, params.nu * 16.0);
    }

    #[test]
    fn energy_matches_literal_oracle() {
        let mut rng = TestRng::new(11);
        let params = ModelParams {
            lambda1: 1.3,
            lambda2: 0.7,
            mu: 0.9,
            nu: 1.7,
            ..ModelParams::default()
        };
        for _ in 0..5 {
            let (image, phi, bias) = random_instance(&mut rng, 4, 4);
            let c1 = rng.in_range(0.3, 1.0);
            let c2 = rng.in_range(0.3, 1.0);
            let state = state_of(phi.clone(), c1, c2, bias.clone());
            let e = energy(&image, &state, &params).unwrap();
            let oracle = energy_oracle(&image, &phi, &bias, c1, c2, &params);
            assert!((e.total - oracle).abs() < 1e-12, "{} vs {}", e.total, oracle);
            assert_eq!(e.total, e.data1 + e.data2 + e.reg + e.penalty);
        }
    }

    #[test]
    fn c1_of_constant_image_is_that_constant() {
        let params = ModelParams::default();
        let image = ImageGrid::constant(3, 3, 0.5).unwrap();
        let phi = LevelSetField::constant(3, 3, 1.0).unwrap();
        let bias = ImageGrid::constant(3, 3, 1.0).unwrap();
        assert_eq!(update_c1(&image, &phi, &bias, &params).unwrap(), 0.5);
    }

    #[test]
    fn empty_regions_error() {
        let params = ModelParams::default();
        let image = ImageGrid::constant(3, 3, 0.5).unwrap();
        let bias = ImageGrid::constant(3, 3, 1.0).unwrap();
        let all_out = LevelSetField::constant(3, 3, -1.0).unwrap();
        assert!(matches!(
            update_c1(&image, &all_out, &bias, &params),
            Err(Error::EmptyInsideRegion)
        ));
        let all_in = LevelSetField::constant(3, 3, 1.0).unwrap();
        assert!(matches!(
            update_c2(&image, &all_in, &bias, &params),
            Err(Error::EmptyOutsideRegion)
        ));
        assert_eq!(update_c2(&image, &all_out, &bias, &params).unwrap(), 0.5);
    }

    /// 1-D scan oracle: minimizes the literal energy over a c grid.
    fn scan_c(
        image: &ImageGrid<f64>,
        phi: &LevelSetField<f64>,
        bias: &ImageGrid<f64>,
        params: &ModelParams<f64>,
        inside: bool,
    ) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let steps = 20_000;
        for k in 0..=steps {
            let c = 2.0 * k as f64 / steps as f64;
            let (c1, c2) = if inside { (c, 0.4) } else { (0.4, c) };
            let e = energy_oracle(image, phi, bias, c1, c2, params);
            if e < best.0 {
                best = (e, c);
            }
        }
        best.1
    }

    #[test]
    fn c_updates_match_scan_oracle() {
        let mut rng = TestRng::new(23);
        let params = ModelParams::default();
        let (image, phi, bias) = random_instance(&mut rng, 3, 3);
        let c1 = update_c1(&image, &phi, &bias, &params).unwrap();
        let c2 = update_c2(&image, &phi, &bias, &params).unwrap();
        assert!((c1 - scan_c(&image, &phi, &bias, &params, true)).abs() < 1e-3);
        assert!((c2 - scan_c(&image, &phi, &bias, &params, false)).abs() < 1e-3);
    }

    #[test]
    fn bias_update_recovers_exact_decomposition() {
        // Image built as b * c with a dyadic c: the pointwise ratio must
        // return b exactly.
        let params = ModelParams {
            bias_smooth_sigma: 0.0,
            ..ModelParams::default()
        };
        let w = 4;
        let b_vals: Vec<f64> = (0..16)
            .map(|i| {
                let raw = 1.0 + 0.2 * (i as f64 / 15.0 - 0.5);
                (raw * (1u64 << 40) as f64).round() / (1u64 << 40) as f64
            })
            .collect();
        let phi_vals: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (c1, c2) = (0.75, 0.25);
        let img_vals: Vec<f64> = b_vals
            .iter()
            .zip(&phi_vals)
            .map(|(&b, &p)| if p > 0.0 { b * c1 } else { b * c2 })
            .collect();
        let image = ImageGrid::from_values(w, 4, img_vals).unwrap();
        let phi = LevelSetField::from_values(w, 4, phi_vals).unwrap();
        let updated = update_bias(&image, &phi, c1, c2, &params).unwrap();
        assert_eq!(updated.values(), &b_vals[..]);
    }

    #[test]
    fn single_region_bias_is_image_over_c1() {
        let params = ModelParams {
            bias_smooth_sigma: 0.0,
            ..ModelParams::default()
        };
        let image = ImageGrid::from_values(2, 1, vec![0.5, 0.75]).unwrap();
        let phi = LevelSetField::constant(2, 1, 1.0).unwrap();
        let updated = update_bias(&image, &phi, 0.5, 0.0, &params).unwrap();
        assert_eq!(updated.values(), &[1.0, 1.5]);
    }

    #[test]
    fn bias_update_matches_pointwise_scan() {
        let mut rng = TestRng::new(37);
        let params = ModelParams {
            bias_smooth_sigma: 0.0,
            ..ModelParams::default()
        };
        let (image, phi, _) = random_instance(&mut rng, 2, 2);
        let (c1, c2) = (0.8, 0.45);
        let updated = update_bias(&image, &phi, c1, c2, &params).unwrap();
        for (i, &b) in updated.values().iter().enumerate() {
            let img = image.values()[i];
            let p = phi.values()[i];
            let integrand = |bb: f64| {
                params.lambda1 * (img - bb * c1).powi(2) * (1.0 + p).powi(2)
                    + params.lambda2 * (img - bb * c2).powi(2) * (1.0 - p).powi(2)
            };
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..=30_000 {
                let bb = 3.0 * k as f64 / 30_000.0;
                let e = integrand(bb);
                if e < best.0 {
                    best = (e, bb);
                }
            }
            assert!((b - best.1).abs() < 1e-3, "pixel {i}: {b} vs {}", best.1);
        }
    }

    #[test]
    fn degenerate_bias_is_rejected() {
        let mut params = ModelParams::<f64> {
            bias_smooth_sigma: 0.0,
            ..ModelParams::default()
        };
        let image = ImageGrid::constant(2, 2, 0.5).unwrap();
        let phi = LevelSetField::constant(2, 2, 1.0).unwrap();
        assert!(matches!(
            update_bias(&image, &phi, 0.0, 0.0, &params),
            Err(Error::DegenerateBias)
        ));
        params.bias_fixed = true;
        assert!(matches!(
            update_bias(&image, &phi, 0.5, 0.3, &params),
            Err(Error::InvalidParameter { name: "bias_fixed", .. })
        ));
    }

    #[test]
    fn bias_stays_above_the_floor() {
        let params = ModelParams::<f64> {
            bias_smooth_sigma: 0.0,
            ..ModelParams::default()
        };
        let image = ImageGrid::constant(2, 2, 0.0).unwrap();
        let phi = LevelSetField::constant(2, 2, 1.0).unwrap();
        let updated = update_bias(&image, &phi, 0.5, 0.0, &params).unwrap();
        assert!(updated.values().iter().all(|&b| b >= params.epsilon_div));
    }

    #[test]
    fn updates_never_increase_energy() {
        let mut rng = TestRng::new(101);
        let params = ModelParams {
            bias_smooth_sigma: 0.0,
            ..ModelParams::default()
        };
        for _ in 0..10 {
            let (image, phi, bias) = random_instance(&mut rng, 6, 6);
            let c1 = rng.in_range(0.2, 1.2);
            let c2 = rng.in_range(0.2, 1.2);
            let mut state = state_of(phi, c1, c2, bias);
            let before = energy(&image, &state, &params).unwrap().total;

            state.c1 = update_c1(&image, &state.phi, &state.bias, &params).unwrap();
            let after_c1 = energy(&image, &state, &params).unwrap().total;
            assert!(after_c1 <= before + 1e-12);

            state.c2 = update_c2(&image, &state.phi, &state.bias, &params).unwrap();
            let after_c2 = energy(&image, &state, &params).unwrap().total;
            assert!(after_c2 <= after_c1 + 1e-12);

            state.bias =
                update_bias(&image, &state.phi, state.c1, state.c2, &params).unwrap();
            let after_b = energy(&image, &state, &params).unwrap().total;
            assert!(after_b <= after_c2 + 1e-12);
        }
    }

    #[test]
    fn c1_is_permutation_invariant() {
        let mut rng = TestRng::new(7);
        let params = ModelParams::default();
        let (image, phi, bias) = random_instance(&mut rng, 4, 4);
        let c1 = update_c1(&image, &phi, &bias, &params).unwrap();

        // Reverse pixel order consistently across all three grids.
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        let image_r = ImageGrid::from_values(4, 4, rev(image.values())).unwrap();
        let phi_r = LevelSetField::from_values(4, 4, rev(phi.values())).unwrap();
        let bias_r = ImageGrid::from_values(4, 4, rev(bias.values())).unwrap();
        let c1_r = update_c1(&image_r, &phi_r, &bias_r, &params).unwrap();
        assert!((c1 - c1_r).abs() <= 1e-12 * c1.abs().max(1.0));
    }

    #[test]
    fn smoothing_preserves_constants() {
        let grid = ImageGrid::constant(5, 4, 0.7f64).unwrap();
        let smoothed = gaussian_smooth_periodic(&grid, 2.0);
        for &v in smoothed.values() {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_wraps_periodically() {
        // A delta at a corner spreads symmetrically across the wrap.
        let mut vals = vec![0.0f64; 16];
        vals[0] = 1.0;
        let grid = ImageGrid::from_values(4, 4, vals).unwrap();
        let s = gaussian_smooth_periodic(&grid, 1.0);
        assert!((s.get(1, 0) - s.get(3, 0)).abs() < 1e-12);
        assert!((s.get(0, 1) - s.get(0, 3)).abs() < 1e-12);
        let total: f64 = s.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gauge_change_keeps_data_terms(scale in 0.1f64..10.0, seed in 0u64..1000) {
            let mut rng = TestRng::new(seed);
            let params = ModelParams::default();
            let (image, phi, bias) = random_instance(&mut rng, 3, 3);
            let c1 = rng.in_range(0.3, 1.0);
            let c2 = rng.in_range(0.3, 1.0);
            let state = state_of(phi.clone(), c1, c2, bias.clone());
            let e = energy(&image, &state, &params).unwrap();

            let scaled_bias = ImageGrid::from_values(
                3, 3, bias.values().iter().map(|&b| b * scale).collect()).unwrap();
            let scaled = state_of(phi, c1 / scale, c2 / scale, scaled_bias);
            let e2 = energy(&image, &scaled, &params).unwrap();
            prop_assert!((e.data1 - e2.data1).abs() <= 1e-12 * (1.0 + e.data1));
            prop_assert!((e.data2 - e2.data2).abs() <= 1e-12 * (1.0 + e.data2));
        }
    }
}
