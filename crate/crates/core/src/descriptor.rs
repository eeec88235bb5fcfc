//! Arc descriptors: smoothed intensity profiles along arcs and their
//! normalized low-frequency Fourier coefficients.

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

use crate::format::sig;
use crate::geometry::Point;
use crate::image::Image;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DescriptorError {
    #[error("arc endpoints coincide at {0}")]
    DegenerateArc(Point),
    #[error("arc endpoint {0} lies outside the image")]
    OutOfBounds(Point),
    #[error("cannot compare an invalid (constant-profile) descriptor")]
    InvalidDescriptor,
    #[error("invalid descriptor parameters: {0}")]
    InvalidParams(String),
}

/// Pre-normalization norms below this mark a descriptor invalid.
pub const DEGENERATE_NORM: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptorParams {
    pub blur_sigma: f64,
    /// Samples per resampled profile.
    pub profile_len: usize,
    /// Number of Fourier coefficients kept (descriptor has twice as many
    /// dimensions).
    pub coeffs: usize,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        Self { blur_sigma: 1.0, profile_len: 30, coeffs: 3 }
    }
}

impl DescriptorParams {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if !(self.blur_sigma > 0.0) {
            return Err(DescriptorError::InvalidParams(format!("blur sigma {} must be positive", self.blur_sigma)));
        }
        if self.profile_len < 3 {
            return Err(DescriptorError::InvalidParams(format!("profile length {} < 3", self.profile_len)));
        }
        if self.coeffs < 1 || 2 * self.coeffs >= self.profile_len {
            return Err(DescriptorError::InvalidParams(format!(
                "need 1 <= coeffs < profile_len / 2, got {} and {}",
                self.coeffs, self.profile_len
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        2 * self.coeffs
    }
}

/// Separable Gaussian blur with radius `ceil(2 sigma)` and edge replication.
pub fn gaussian_blur<T: Scalar>(img: &Image<T>, sigma: f64) -> Image<T> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (2.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let kernel: Vec<T> = raw.iter().map(|v| T::lit(v / total)).collect();
    let (w, h) = (img.width(), img.height());
    let mut tmp = Image::filled(w, h, T::zero()).expect("non-empty");
    for y in 0..h {
        for x in 0..w {
            let mut s = T::zero();
            for (k, wgt) in kernel.iter().enumerate() {
                s += *wgt * img.get_clamped(x as i64 + k as i64 - radius, y as i64);
            }
            tmp.set(x, y, s);
        }
    }
    let mut out = Image::filled(w, h, T::zero()).expect("non-empty");
    for y in 0..h {
        for x in 0..w {
            let mut s = T::zero();
            for (k, wgt) in kernel.iter().enumerate() {
                s += *wgt * tmp.get_clamped(x as i64, y as i64 + k as i64 - radius);
            }
            out.set(x, y, s);
        }
    }
    out
}

/// Intensities sampled along an arc, resampled to a fixed length.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityProfile<T> {
    pub samples: Vec<T>,
}

/// Mean of three parallel Bresenham profiles from `p` to `q`, resampled to
/// `l` samples by linear interpolation.
///
/// The side chains are the center chain shifted one pixel across the arc's
/// dominant axis (vertically for mostly horizontal arcs), clamped to the
/// image. Exact diagonals use both shifts with half weight. Where the ideal
/// line passes exactly halfway between two pixels, both are averaged, so
/// the profile does not depend on the direction of tracing and turns with
/// the image under quarter rotations.
pub fn intensity_profile<T: Scalar>(
    img: &Image<T>,
    p: Point,
    q: Point,
    l: usize,
) -> Result<IntensityProfile<T>, DescriptorError> {
    assert!(l >= 2, "profile length must be at least 2");
    if p == q {
        return Err(DescriptorError::DegenerateArc(p));
    }
    for e in [p, q] {
        if !img.contains(e) {
            return Err(DescriptorError::OutOfBounds(e));
        }
    }
    let (dx, dy) = (i64::from(q.x) - i64::from(p.x), i64::from(q.y) - i64::from(p.y));
    let n = dx.abs().max(dy.abs());
    let half = T::lit(0.5);
    let across = |x: i64, y: i64| -> T {
        let c = img.get_clamped(x, y);
        let v = img.get_clamped(x, y - 1) + img.get_clamped(x, y + 1);
        let h = img.get_clamped(x - 1, y) + img.get_clamped(x + 1, y);
        match dx.abs().cmp(&dy.abs()) {
            Ordering::Greater => c + v,
            Ordering::Less => c + h,
            Ordering::Equal => c + (v + h) * half,
        }
    };
    let third = T::lit(1.0 / 3.0);
    let (px, py) = (i64::from(p.x), i64::from(p.y));
    let mean: Vec<T> = (0..=n)
        .map(|i| {
            // Nearest pixels to p + (i / n) (q - p), with ties kept.
            let (fx, tx) = nearest(dx * i, n);
            let (fy, ty) = nearest(dy * i, n);
            let v = match (tx, ty) {
                (false, false) => across(px + fx, py + fy),
                (true, _) => (across(px + fx, py + fy) + across(px + fx + 1, py + fy)) * half,
                (false, true) => (across(px + fx, py + fy) + across(px + fx, py + fy + 1)) * half,
            };
            v * third
        })
        .collect();
    Ok(IntensityProfile { samples: resample_linear(&mean, l) })
}

/// Rounds `num / den` (`den > 0`) to the nearest integer; on an exact half
/// returns the lower neighbour and `true`.
fn nearest(num: i64, den: i64) -> (i64, bool) {
    let lo = num.div_euclid(den);
    let twice_rem = 2 * num.rem_euclid(den);
    match twice_rem.cmp(&den) {
        Ordering::Less => (lo, false),
        Ordering::Equal => (lo, true),
        Ordering::Greater => (lo + 1, false),
    }
}

/// Linear resampling at positions `j (L - 1) / (l - 1)`.
pub fn resample_linear<T: Scalar>(src: &[T], l: usize) -> Vec<T> {
    let n = src.len();
    if n == 1 {
        return vec![src[0]; l];
    }
    let span = (n - 1) as f64;
    (0..l)
        .map(|j| {
            let t = j as f64 * span / (l - 1) as f64;
            let i = (t.floor() as usize).min(n - 2);
            let frac = T::lit(t - i as f64);
            src[i] + (src[i + 1] - src[i]) * frac
        })
        .collect()
}

/// `(a1, b1, ..., am, bm)` of the profile's DFT `F(x) = a_x + i b_x`,
/// scaled to unit length. Not valid when all of them vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcDescriptor<T> {
    pub coeffs: Vec<T>,
    pub valid: bool,
}

impl<T: Scalar> ArcDescriptor<T> {
    pub fn invalid(dims: usize) -> Self {
        Self { coeffs: vec![T::zero(); dims], valid: false }
    }
}

/// Normalized DFT coefficients `1..=m` of `f`, computed directly from
/// `F(x) = sum_y exp(-2 pi i x y / l) f(y)`.
///
/// Dropping `F(0)` removes brightness, dividing by the joint norm removes
/// contrast.
pub fn fourier_descriptor<T: Scalar>(f: &IntensityProfile<T>, m: usize) -> ArcDescriptor<T> {
    let l = f.samples.len();
    assert!(m >= 1 && 2 * m < l, "need 1 <= m < l / 2 (m = {m}, l = {l})");
    let mut coeffs = Vec::with_capacity(2 * m);
    for x in 1..=m {
        let (mut a, mut b) = (T::zero(), T::zero());
        for (y, &v) in f.samples.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * ((x * y) % l) as f64 / l as f64;
            a += v * T::lit(angle.cos());
            b += v * T::lit(angle.sin());
        }
        coeffs.push(a);
        coeffs.push(b);
    }
    let norm = coeffs.iter().map(|c| *c * *c).sum::<T>().sqrt();
    if norm < T::lit(DEGENERATE_NORM) {
        return ArcDescriptor::invalid(2 * m);
    }
    for c in &mut coeffs {
        *c /= norm;
    }
    ArcDescriptor { coeffs, valid: true }
}

/// Euclidean distance between two valid descriptors.
pub fn arc_dissimilarity<T: Scalar>(d1: &ArcDescriptor<T>, d2: &ArcDescriptor<T>) -> Result<T, DescriptorError> {
    if !d1.valid || !d2.valid {
        return Err(DescriptorError::InvalidDescriptor);
    }
    Ok(squared_distance(&d1.coeffs, &d2.coeffs).sqrt())
}

#[inline]
pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Descriptor of the arc `p -> q` on an already blurred image.
pub fn describe_arc<T: Scalar>(
    blurred: &Image<T>,
    p: Point,
    q: Point,
    params: &DescriptorParams,
) -> Result<ArcDescriptor<T>, DescriptorError> {
    let profile = intensity_profile(blurred, p, q, params.profile_len)?;
    Ok(fourier_descriptor(&profile, params.coeffs))
}

/// Text dump: one arc per line, `x1 y1 x2 y2 a1 b1 ...` with reals at 9
/// significant digits.
pub fn format_descriptor_dump<T: Scalar>(arcs: &[((Point, Point), ArcDescriptor<T>)]) -> String {
    let mut out = String::new();
    for ((p, q), d) in arcs {
        write!(out, "{} {} {} {}", p.x, p.y, q.x, q.y).unwrap();
        for c in &d.coeffs {
            write!(out, " {}", sig(c.as_f64(), 9)).unwrap();
        }
        out.push('\n');
    }
    out
}
