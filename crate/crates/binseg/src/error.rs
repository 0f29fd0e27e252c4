//! Error type shared by all modules.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// File could not be opened, parsed, or was truncated.
    #[error("unreadable file {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },

    /// Pixel data is not 8-bit grayscale or RGB.
    #[error("unsupported bit depth in {path}: {detail}")]
    UnsupportedBitDepth { path: PathBuf, detail: String },

    /// Header declares a zero width or height.
    #[error("zero image dimensions in {path}")]
    ZeroDimensions { path: PathBuf },

    /// Output file could not be created or written.
    #[error("cannot write {path}: {reason}")]
    UnwritablePath { path: PathBuf, reason: String },

    /// A mask value is neither -1 nor +1 (or neither 0 nor 255 on disk).
    #[error("non-binary mask value {value}")]
    NonBinaryMask { value: f64 },

    /// A grid value is NaN or infinite.
    #[error("non-finite value at pixel index {index}")]
    NonFinite { index: usize },

    /// Two grids that must share a shape do not.
    #[error("dimension mismatch: {expected_width}x{expected_height} vs {found_width}x{found_height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        found_width: usize,
        found_height: usize,
    },

    /// Grid constructors require at least one pixel.
    #[error("zero grid dimensions: width and height must be at least 1")]
    EmptyGrid,

    /// Value buffer does not match the declared shape.
    #[error("value count {found} does not match {width}x{height}")]
    LengthMismatch {
        width: usize,
        height: usize,
        found: usize,
    },

    /// The (1+phi)^2 weights vanish: no pixel is labelled inside.
    #[error("empty inside region")]
    EmptyInsideRegion,

    /// The (1-phi)^2 weights vanish: no pixel is labelled outside.
    #[error("empty outside region")]
    EmptyOutsideRegion,

    /// Bias update is undefined because both region intensities are zero.
    #[error("degenerate bias denominator: c1 and c2 are both zero")]
    DegenerateBias,

    /// A parameter violates its documented range.
    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    /// Inside and outside intensities coincide.
    #[error("unsegmentable phantom: c_in equals c_out")]
    UnsegmentablePhantom,

    /// The requested shape leaves one region without pixels.
    #[error("degenerate phantom shape: {region} region has zero area")]
    DegenerateShape { region: &'static str },

    /// A metric's denominator is zero.
    #[error("metric undefined: {reason}")]
    UndefinedMetric { reason: &'static str },
}
