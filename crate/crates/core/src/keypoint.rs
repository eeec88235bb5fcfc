//! Keypoint detection, minimum-distance sampling and keypoint files.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{chebyshev, Point};
use crate::image::Image;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum KeypointError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("keypoint {0} lies outside the {1}x{2} image")]
    OutOfBoundsPoint(Point, usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeypointSource {
    Detected,
    LoadedFromFile,
}

/// Pairwise-distinct keypoints. Detected sets are ordered strongest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeypointSet {
    pub points: Vec<Point>,
    pub source: KeypointSource,
}

impl KeypointSet {
    /// Builds a set, dropping repeated points but keeping first occurrences
    /// in order.
    pub fn new(points: impl IntoIterator<Item = Point>, source: KeypointSource) -> Self {
        let mut seen = HashSet::new();
        let points = points.into_iter().filter(|p| seen.insert(*p)).collect();
        Self { points, source }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks every point against the image bounds.
    pub fn bind<T: Scalar>(&self, img: &Image<T>) -> Result<(), KeypointError> {
        match self.points.iter().find(|p| !img.contains(**p)) {
            Some(p) => Err(KeypointError::OutOfBoundsPoint(*p, img.width(), img.height())),
            None => Ok(()),
        }
    }

    pub fn truncated(mut self, max: usize) -> Self {
        self.points.truncate(max);
        self
    }
}

/// Minimum-eigenvalue corner detector settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerParams {
    pub max_count: usize,
    /// Fraction of the strongest response a corner must reach, in `(0, 1]`.
    pub quality: f64,
}

impl Default for CornerParams {
    fn default() -> Self {
        Self { max_count: 1000, quality: 0.01 }
    }
}

/// Minimum structure-tensor eigenvalue at every pixel.
///
/// Gradients come from 3x3 Sobel kernels, the tensor is summed over a 5x5
/// window, and borders replicate the edge pixels.
pub fn corner_response<T: Scalar>(img: &Image<T>) -> Vec<T> {
    let (w, h) = (img.width(), img.height());
    let two = T::lit(2.0);
    let mut ixx = vec![T::zero(); w * h];
    let mut ixy = vec![T::zero(); w * h];
    let mut iyy = vec![T::zero(); w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| img.get_clamped(x + dx, y + dy);
            let gx = (p(1, -1) + two * p(1, 0) + p(1, 1)) - (p(-1, -1) + two * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + two * p(0, 1) + p(1, 1)) - (p(-1, -1) + two * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            ixx[i] = gx * gx;
            ixy[i] = gx * gy;
            iyy[i] = gy * gy;
        }
    }
    let sxx = box_sum(&ixx, w, h, 2);
    let sxy = box_sum(&ixy, w, h, 2);
    let syy = box_sum(&iyy, w, h, 2);
    let half = T::lit(0.5);
    (0..w * h)
        .map(|i| {
            let (a, b, c) = (sxx[i], sxy[i], syy[i]);
            let mean = (a + c) * half;
            let diff = (a - c) * half;
            (mean - (diff * diff + b * b).sqrt()).max(T::zero())
        })
        .collect()
}

// Separable (2r+1)^2 window sum with edge replication.
fn box_sum<T: Scalar>(src: &[T], w: usize, h: usize, r: i64) -> Vec<T> {
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w as i64 {
            let mut s = T::zero();
            for d in -r..=r {
                s += row[(x + d).clamp(0, w as i64 - 1) as usize];
            }
            tmp[y * w + x as usize] = s;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h as i64 {
        for x in 0..w {
            let mut s = T::zero();
            for d in -r..=r {
                s += tmp[(y + d).clamp(0, h as i64 - 1) as usize * w + x];
            }
            out[y as usize * w + x] = s;
        }
    }
    out
}

/// Good-features-to-track style detector: local maxima (3x3) of the
/// minimum eigenvalue above `quality` times the global maximum, strongest
/// first, at most `max_count`.
pub fn detect_corners<T: Scalar>(img: &Image<T>, params: &CornerParams) -> KeypointSet {
    let (w, h) = (img.width(), img.height());
    let resp = corner_response(img);
    let max = resp.iter().copied().fold(T::zero(), T::max);
    if max <= T::zero() || params.max_count == 0 {
        return KeypointSet::new([], KeypointSource::Detected);
    }
    let floor = max * T::lit(params.quality);
    let mut found: Vec<(T, Point)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let r = resp[y * w + x];
            if r < floor || r <= T::zero() {
                continue;
            }
            let mut is_max = true;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nr = resp[ny as usize * w + nx as usize];
                    // Plateaus keep their first pixel in raster order.
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if nr > r || (earlier && nr == r) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                found.push((r, Point::new(x as i32, y as i32)));
            }
        }
    }
    found.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.y.cmp(&b.1.y)).then(a.1.x.cmp(&b.1.x)));
    found.truncate(params.max_count);
    KeypointSet::new(found.into_iter().map(|(_, p)| p), KeypointSource::Detected)
}

/// Random maximal subset with pairwise Chebyshev distance at least
/// `min_dist`.
///
/// Candidates are visited in a seeded random order and accepted greedily.
/// The result keeps the input order of the surviving points.
pub fn sample_min_distance(points: &KeypointSet, min_dist: i64, seed: u64) -> KeypointSet {
    assert!(min_dist >= 1, "min_dist must be at least 1");
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cell = |p: Point| (i64::from(p.x).div_euclid(min_dist), i64::from(p.y).div_euclid(min_dist));
    let mut grid: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
    let mut keep = vec![false; points.len()];
    for i in order {
        let p = points.points[i];
        let (cx, cy) = cell(p);
        let blocked = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(cx + dx, cy + dy))
                    .is_some_and(|v| v.iter().any(|&q| chebyshev(p, q) < min_dist))
            })
        });
        if !blocked {
            grid.entry((cx, cy)).or_default().push(p);
            keep[i] = true;
        }
    }
    KeypointSet {
        points: points.points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect(),
        source: points.source,
    }
}

/// Parses the keypoint text format: one `x y` per line, base-10 integers
/// separated by a single space, LF line endings, no header.
pub fn parse_keypoints(text: &str) -> Result<KeypointSet, KeypointError> {
    let mut pts = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(KeypointSet::new([], KeypointSource::LoadedFromFile));
    }
    for (i, line) in body.split('\n').enumerate() {
        let err = |message: String| KeypointError::Parse { line: i + 1, message };
        let mut fields = line.split(' ');
        let (Some(xs), Some(ys), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(format!("expected \"x y\", got {line:?}")));
        };
        let parse = |s: &str| -> Result<i32, KeypointError> {
            if s.is_empty() || !s.trim_start_matches('-').bytes().all(|b| b.is_ascii_digit()) {
                return Err(err(format!("invalid integer {s:?}")));
            }
            s.parse().map_err(|_| err(format!("invalid integer {s:?}")))
        };
        pts.push(Point::new(parse(xs)?, parse(ys)?));
    }
    Ok(KeypointSet::new(pts, KeypointSource::LoadedFromFile))
}

pub fn load_keypoints(path: impl AsRef<Path>) -> Result<KeypointSet, KeypointError> {
    parse_keypoints(&fs::read_to_string(path)?)
}

pub fn format_keypoints(set: &KeypointSet) -> String {
    set.points.iter().map(|p| format!("{} {}\n", p.x, p.y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    type Img = Image<f64>;

    fn square_image() -> Img {
        Img::from_fn(100, 100, |x, y| if (30..70).contains(&x) && (30..70).contains(&y) { 255.0 } else { 0.0 })
            .unwrap()
    }

    #[test]
    fn uniform_image_has_no_corners() {
        let img = Img::filled(40, 30, 128.0).unwrap();
        assert!(detect_corners(&img, &CornerParams::default()).is_empty());
    }

    #[test]
    fn square_corners_found() {
        let set = detect_corners(&square_image(), &CornerParams::default());
        for c in [(30, 30), (69, 30), (30, 69), (69, 69)] {
            let c = Point::new(c.0, c.1);
            assert!(set.points.iter().any(|&p| chebyshev(p, c) <= 2), "missing corner near {c}: {:?}", set.points);
        }
    }

    /// Brute-force response: the tensor summed pixel by pixel over the
    /// window, eigenvalue from the characteristic polynomial.
    #[test]
    fn response_matches_brute_force() {
        let img = square_image();
        let resp = corner_response(&img);
        let g = |x: i64, y: i64| {
            let p = |dx: i64, dy: i64| img.get_clamped(x + dx, y + dy);
            let gx = p(1, -1) + 2.0 * p(1, 0) + p(1, 1) - p(-1, -1) - 2.0 * p(-1, 0) - p(-1, 1);
            let gy = p(-1, 1) + 2.0 * p(0, 1) + p(1, 1) - p(-1, -1) - 2.0 * p(0, -1) - p(1, -1);
            (gx, gy)
        };
        for &(x, y) in &[(30i64, 30i64), (50, 30), (0, 0), (99, 45), (68, 71)] {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for dy in -2..=2 {
                for dx in -2..=2 {
                    let (gx, gy) = g((x + dx).clamp(0, 99), (y + dy).clamp(0, 99));
                    a += gx * gx;
                    b += gx * gy;
                    c += gy * gy;
                }
            }
            let tr = a + c;
            let det = a * c - b * b;
            let lmin = (tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0;
            let got = resp[(y * 100 + x) as usize];
            assert!((got - lmin.max(0.0)).abs() <= 1e-6 * (1.0 + lmin.abs()), "({x},{y}) {got} vs {lmin}");
        }
        let max = resp.iter().copied().fold(0.0, f64::max);
        let at_corner = resp[30 * 100 + 30].max(resp[31 * 100 + 31]).max(resp[29 * 100 + 29]);
        assert!(at_corner > 0.5 * max);
    }

    #[test]
    fn checkerboard_crossings() {
        let cell = 10usize;
        let img = Img::from_fn(8 * cell, 8 * cell, |x, y| if (x / cell + y / cell) % 2 == 0 { 255.0 } else { 0.0 })
            .unwrap();
        let set = detect_corners(&img, &CornerParams { max_count: 500, quality: 0.01 });
        for i in 1..8 {
            for j in 1..8 {
                let c = Point::new((i * cell) as i32, (j * cell) as i32);
                assert!(set.points.iter().any(|&p| chebyshev(p, c) <= 2), "crossing {c} missed");
            }
        }
    }

    #[test]
    fn detection_is_translation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = crate::synth::textured_image::<f64>(160, 160, 25, &mut rng);
        let (dx, dy) = (7usize, 4usize);
        let a = base.crop(20, 20, 120, 120).unwrap();
        let b = base.crop(20 - dx, 20 - dy, 120, 120).unwrap();
        let params = CornerParams { max_count: 2000, quality: 0.01 };
        let pa = detect_corners(&a, &params);
        let pb = detect_corners(&b, &params);
        let interior = |p: &Point| p.x >= 12 && p.y >= 12 && p.x < 100 && p.y < 100;
        for p in pa.points.iter().filter(|p| interior(p)) {
            let shifted = p.offset(dx as i32, dy as i32);
            assert!(pb.points.iter().any(|&q| chebyshev(q, shifted) <= 1), "{p} not found shifted");
        }
    }

    #[test]
    fn sampling_examples() {
        let cluster = KeypointSet::new((0..5).map(|i| Point::new(100 + i, 100 - i)), KeypointSource::Detected);
        assert_eq!(sample_min_distance(&cluster, 10, 1).len(), 1);
        let grid = KeypointSet::new(
            (0..6).flat_map(|i| (0..6).map(move |j| Point::new(i * 10, j * 10))),
            KeypointSource::Detected,
        );
        assert_eq!(sample_min_distance(&grid, 10, 5).len(), 36);
    }

    #[test]
    fn sampling_is_separated_maximal_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let set = KeypointSet::new(
            (0..500).map(|_| Point::new(rng.gen_range(0..200), rng.gen_range(0..200))),
            KeypointSource::Detected,
        );
        let out = sample_min_distance(&set, 10, 42);
        for (i, &p) in out.points.iter().enumerate() {
            for &q in &out.points[i + 1..] {
                assert!(chebyshev(p, q) >= 10);
            }
        }
        for p in &set.points {
            if !out.points.contains(p) {
                assert!(out.points.iter().any(|&q| chebyshev(*p, q) < 10));
            }
        }
        assert_eq!(out, sample_min_distance(&set, 10, 42));
        assert_ne!(out, sample_min_distance(&set, 10, 43));
    }

    #[test]
    fn keypoint_file_format() {
        let set = parse_keypoints("3 4\n10 20\n").unwrap();
        assert_eq!(set.points, vec![Point::new(3, 4), Point::new(10, 20)]);
        assert_eq!(set.source, KeypointSource::LoadedFromFile);
        assert!(parse_keypoints("").unwrap().is_empty());
        assert!(matches!(parse_keypoints("x y\n1 2\n"), Err(KeypointError::Parse { line: 1, .. })));
        assert!(matches!(parse_keypoints("1 2\n3  4\n"), Err(KeypointError::Parse { line: 2, .. })));
        assert!(matches!(parse_keypoints("1 2\r\n"), Err(KeypointError::Parse { line: 1, .. })));
        assert_eq!(parse_keypoints("1 2\n1 2\n5 6").unwrap().len(), 2);
        let img = Img::filled(10, 10, 0.0).unwrap();
        assert!(matches!(parse_keypoints("9 9\n10 3\n").unwrap().bind(&img), Err(KeypointError::OutOfBoundsPoint(..))));
        assert_eq!(parse_keypoints(&format_keypoints(&set)).unwrap(), set);
    }
}
