//! Ground truth, correctness judging, recall-precision curves and the
//! on-disk dataset layout.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::format::sig;
use crate::geometry::Point;
use crate::image::{Image, ImageError};
use crate::keygraph::KeygraphCorrespondence;
use crate::pose::{Homography, PoseError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("singular ground-truth homography")]
    SingularMatrix,
    #[error("no candidate correspondences to evaluate")]
    EmptyCandidateSet,
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
    #[error("dataset layout: {0}")]
    DatasetLayout(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<PoseError> for EvalError {
    fn from(_: PoseError) -> Self {
        EvalError::SingularMatrix
    }
}

/// Default pixel tolerance for a correct keypoint correspondence.
pub const CORRECT_TOL: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruth<T> {
    /// Maps model coordinates to scene coordinates.
    pub h: Homography<T>,
    pub tol: T,
}

impl<T: Scalar> GroundTruth<T> {
    pub fn new(h: Homography<T>) -> Self {
        Self { h, tol: T::lit(CORRECT_TOL) }
    }
}

/// Parses nine whitespace-separated reals, row-major.
pub fn parse_homography<T: Scalar>(text: &str) -> Result<Homography<T>, EvalError> {
    let vals: Vec<&str> = text.split_whitespace().collect();
    if vals.len() != 9 {
        return Err(EvalError::Parse(format!("expected 9 numbers, found {}", vals.len())));
    }
    let mut m = [T::zero(); 9];
    for (slot, v) in m.iter_mut().zip(&vals) {
        *slot = v.parse().map_err(|_| EvalError::Parse(format!("invalid number {v:?}")))?;
        if !slot.is_finite() {
            return Err(EvalError::Parse(format!("non-finite number {v:?}")));
        }
    }
    Ok(Homography::from_matrix(m)?)
}

pub fn load_homography<T: Scalar>(path: impl AsRef<Path>) -> Result<Homography<T>, EvalError> {
    parse_homography(&fs::read_to_string(path)?)
}

/// Axis-aligned pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// A seed-determined rectangle inside a `width` x `height` image, with
/// sides between a third and a half of the image's.
pub fn random_crop(width: usize, height: usize, seed: u64) -> Rect {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = |full: usize, rng: &mut ChaCha8Rng| {
        let lo = (full / 3).max(1);
        rng.gen_range(lo..=(full / 2).max(lo))
    };
    let (w, h) = (side(width, &mut rng), side(height, &mut rng));
    Rect { x: rng.gen_range(0..=width - w), y: rng.gen_range(0..=height - h), width: w, height: h }
}

/// Crops a model out of `img` and adjusts the ground truth so it maps
/// crop-local coordinates: `H * T` with `T` translating by the offset.
pub fn crop_model<T: Scalar>(img: &Image<T>, rect: Rect, h: &Homography<T>) -> Result<(Image<T>, Homography<T>), EvalError> {
    let crop = img.crop(rect.x, rect.y, rect.width, rect.height)?;
    let t = Homography::translation(T::from_int(rect.x as i64), T::from_int(rect.y as i64));
    Ok((crop, h.compose(&t)?))
}

pub fn keypoint_pair_correct<T: Scalar>(pair: (Point, Point), gt: &GroundTruth<T>) -> bool {
    gt.h.transfer_error(pair.0, pair.1) < gt.tol
}

/// Correct iff every implied keypoint pair is.
pub fn keygraph_correct<T: Scalar>(c: &KeygraphCorrespondence<T>, gt: &GroundTruth<T>) -> bool {
    c.keypoint_pairs().into_iter().all(|p| keypoint_pair_correct(p, gt))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint<T> {
    pub threshold: T,
    pub recall: T,
    pub precision: T,
}

/// Recall and precision of thresholded selection from `candidates`.
///
/// At each threshold the selection holds the candidates whose largest arc
/// dissimilarity does not exceed it. Precision counts correct selected
/// graph correspondences (1 for an empty selection). Recall counts the
/// distinct correct keypoint pairs implied by the selection, relative to
/// the distinct correct pairs implied by all candidates (0 when there are
/// none).
pub fn recall_precision_curve<T: Scalar>(
    candidates: &[KeygraphCorrespondence<T>],
    gt: &GroundTruth<T>,
    thresholds: &[T],
) -> Result<Vec<CurvePoint<T>>, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::EmptyCandidateSet);
    }
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(EvalError::UnsortedThresholds);
    }
    let mut scored: Vec<(T, bool, Vec<(Point, Point)>)> = candidates
        .iter()
        .map(|c| {
            let pairs = c.keypoint_pairs();
            let correct_pairs: Vec<_> = pairs.iter().copied().filter(|p| keypoint_pair_correct(*p, gt)).collect();
            (c.max_arc_dissimilarity(), correct_pairs.len() == pairs.len(), correct_pairs)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: HashSet<(Point, Point)> = scored.iter().flat_map(|s| s.2.iter().copied()).collect();
    let mut seen: HashSet<(Point, Point)> = HashSet::new();
    let (mut selected, mut correct, mut next) = (0usize, 0usize, 0usize);
    let mut out = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        while next < scored.len() && scored[next].0 <= t {
            selected += 1;
            correct += usize::from(scored[next].1);
            seen.extend(scored[next].2.iter().copied());
            next += 1;
        }
        let precision = if selected == 0 { T::one() } else { T::from_int(correct as i64) / T::from_int(selected as i64) };
        let recall = if total.is_empty() { T::zero() } else { T::from_int(seen.len() as i64) / T::from_int(total.len() as i64) };
        out.push(CurvePoint { threshold: t, recall, precision });
    }
    Ok(out)
}

/// `n` evenly spaced thresholds from `max / n` to `max`.
pub fn threshold_grid<T: Scalar>(max: T, n: usize) -> Vec<T> {
    (1..=n).map(|i| max * T::from_int(i as i64) / T::from_int(n as i64)).collect()
}

/// Best precision among curve points with recall at least `min_recall`.
pub fn precision_at_recall<T: Scalar>(curve: &[CurvePoint<T>], min_recall: T) -> Option<T> {
    curve.iter().filter(|c| c.recall >= min_recall).map(|c| c.precision).reduce(T::max)
}

pub const CURVE_HEADER: &str = "threshold,recall,precision";

pub fn format_curve_csv<T: Scalar>(curve: &[CurvePoint<T>]) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for c in curve {
        writeln!(s, "{},{},{}", sig(c.threshold.as_f64(), 9), sig(c.recall.as_f64(), 9), sig(c.precision.as_f64(), 9)).unwrap();
    }
    s
}

pub fn parse_curve_csv<T: Scalar>(text: &str) -> Result<Vec<CurvePoint<T>>, EvalError> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(EvalError::Parse(format!("missing header {CURVE_HEADER:?}")));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |s: &str| s.parse::<T>().map_err(|_| EvalError::Parse(format!("invalid number {s:?}")));
            if f.len() != 3 {
                return Err(EvalError::Parse(format!("expected 3 columns in {l:?}")));
            }
            Ok(CurvePoint { threshold: num(f[0])?, recall: num(f[1])?, precision: num(f[2])? })
        })
        .collect()
}

/// Pointwise mean of curves over the thresholds they all share.
pub fn mean_curve<T: Scalar>(curves: &[Vec<CurvePoint<T>>]) -> Vec<CurvePoint<T>> {
    let Some(first) = curves.first() else { return Vec::new() };
    let n = T::from_int(curves.len() as i64);
    first
        .iter()
        .filter_map(|p| {
            let at: Vec<&CurvePoint<T>> = curves.iter().filter_map(|c| c.iter().find(|q| q.threshold == p.threshold)).collect();
            (at.len() == curves.len()).then(|| CurvePoint {
                threshold: p.threshold,
                recall: at.iter().map(|q| q.recall).sum::<T>() / n,
                precision: at.iter().map(|q| q.precision).sum::<T>() / n,
            })
        })
        .collect()
}

/// A dataset subset: `img1` is the reference, `img2..imgN` are views with
/// ground truth `H1to{k}p` mapping `img1` coordinates into `img{k}`.
#[derive(Clone, Debug)]
pub struct Subset<T> {
    pub dir: PathBuf,
    /// `images[i]` is `img{i+1}`.
    pub images: Vec<PathBuf>,
    /// `homographies[i]` maps `img1` into `images[i + 1]`.
    pub homographies: Vec<Homography<T>>,
}

fn image_path(dir: &Path, k: usize) -> Option<PathBuf> {
    ["pgm", "ppm"].iter().map(|ext| dir.join(format!("img{k}.{ext}"))).find(|p| p.is_file())
}

impl<T: Scalar> Subset<T> {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, EvalError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(EvalError::DatasetLayout(format!("{} is not a directory", dir.display())));
        }
        let first = image_path(&dir, 1).ok_or_else(|| EvalError::DatasetLayout(format!("{} has no img1.pgm or img1.ppm", dir.display())))?;
        let mut images = vec![first];
        let mut homographies = Vec::new();
        let mut k = 2;
        while let Some(p) = image_path(&dir, k) {
            let hp = dir.join(format!("H1to{k}p"));
            if !hp.is_file() {
                return Err(EvalError::DatasetLayout(format!("missing {}", hp.display())));
            }
            homographies.push(load_homography(&hp)?);
            images.push(p);
            k += 1;
        }
        if images.len() < 2 {
            return Err(EvalError::DatasetLayout(format!("{} has no img2", dir.display())));
        }
        Ok(Self { dir, images, homographies })
    }
}

/// Subsets of a dataset root: the root itself when it holds `img1`,
/// otherwise every child directory that does, sorted by name.
pub fn open_dataset<T: Scalar>(root: impl AsRef<Path>) -> Result<Vec<Subset<T>>, EvalError> {
    let root = root.as_ref();
    if image_path(root, 1).is_some() {
        return Ok(vec![Subset::open(root)?]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| EvalError::DatasetLayout(format!("{}: {e}", root.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && image_path(p, 1).is_some())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(EvalError::DatasetLayout(format!("no subsets under {}", root.display())));
    }
    dirs.into_iter().map(Subset::open).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keygraph::{Isomorphism, Keygraph, Structure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type H = Homography<f64>;

    #[test]
    fn homography_parsing() {
        assert_eq!(parse_homography::<f64>("1 0 0 0 1 0 0 0 1").unwrap(), H::identity());
        let t = parse_homography::<f64>("1 0 5\n0 1 -7\n0 0 1\n").unwrap();
        let (x, y) = t.apply(1.0, 1.0);
        assert!((x - 6.0).abs() < 1e-12 && (y + 6.0).abs() < 1e-12);
        assert!(matches!(parse_homography::<f64>("1 0 0 0 1 0 0 0"), Err(EvalError::Parse(_))));
        assert!(matches!(parse_homography::<f64>("1 0 0 0 1 0 0 0 x"), Err(EvalError::Parse(_))));
        assert!(matches!(parse_homography::<f64>("1 2 3 2 4 6 0 0 1"), Err(EvalError::SingularMatrix)));
    }

    #[test]
    fn crop_adjusts_ground_truth() {
        let img = Image::from_fn(100, 80, |x, y| (x + y) as f64).unwrap();
        let h = H::from_matrix([1.1, 0.1, 3.0, -0.05, 0.95, 4.0, 1e-4, 2e-4, 1.0]).unwrap();
        let (c, same) = crop_model(&img, Rect { x: 0, y: 0, width: 100, height: 80 }, &h).unwrap();
        assert_eq!(c, img);
        assert!(same.matrix().iter().zip(h.matrix()).all(|(a, b)| (a - b).abs() < 1e-15));
        let (c, adj) = crop_model(&img, Rect { x: 10, y: 20, width: 30, height: 30 }, &h).unwrap();
        assert_eq!(c.get(0, 0), 30.0);
        let (a, b) = adj.apply(0.0, 0.0);
        let (x, y) = h.apply(10.0, 20.0);
        assert!((a - x).abs() < 1e-9 && (b - y).abs() < 1e-9);
        assert!(crop_model(&img, Rect { x: 90, y: 0, width: 20, height: 5 }, &h).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let (w, hh) = (rng.gen_range(1..50), rng.gen_range(1..50));
            let r = Rect { x: rng.gen_range(0..=100 - w), y: rng.gen_range(0..=80 - hh), width: w, height: hh };
            let (_, adj) = crop_model(&img, r, &h).unwrap();
            let (px, py) = (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..hh as f64));
            let (a, b) = adj.apply(px, py);
            let (x, y) = h.apply(px + r.x as f64, py + r.y as f64);
            assert!((a - x).abs() < 1e-9 && (b - y).abs() < 1e-9);
        }
    }

    #[test]
    fn pair_correctness() {
        let gt = GroundTruth::new(H::identity());
        let p = Point::new(10, 10);
        assert!(keypoint_pair_correct((p, p), &gt));
        assert!(!keypoint_pair_correct((p, p.offset(5, 0)), &gt));
        assert!(keypoint_pair_correct((p, p.offset(2, 2)), &gt));
        assert!(!keypoint_pair_correct((p, p.offset(3, 0)), &gt));

        let h = H::from_matrix([0.9, 0.1, 12.0, -0.1, 1.1, 3.0, 1e-4, 0.0, 1.0]).unwrap();
        let gt = GroundTruth::new(h);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let m = Point::new(rng.gen_range(0..200), rng.gen_range(0..200));
            let s = Point::new(rng.gen_range(0..260), rng.gen_range(0..260));
            let v = h.matrix();
            let (x, y) = (f64::from(m.x), f64::from(m.y));
            let w = v[6] * x + v[7] * y + v[8];
            let (u, vv) = ((v[0] * x + v[1] * y + v[2]) / w, (v[3] * x + v[4] * y + v[5]) / w);
            let oracle = ((u - f64::from(s.x)).powi(2) + (vv - f64::from(s.y)).powi(2)).sqrt() < 3.0;
            assert_eq!(keypoint_pair_correct((m, s), &gt), oracle);
        }
    }

    fn corr(model: [(i32, i32); 3], scene: [(i32, i32); 3], d: f64) -> KeygraphCorrespondence<f64> {
        let mk = |v: [(i32, i32); 3]| Keygraph { structure: Structure::Circuit3, vertices: v.iter().map(|&(x, y)| Point::new(x, y)).collect() };
        KeygraphCorrespondence {
            model_id: 0,
            scene_id: 0,
            rotation: 0,
            model: mk(model),
            scene: mk(scene),
            iso: Isomorphism::from_rotation(3, 0),
            arc_dissimilarities: vec![d, d / 2.0, 0.0],
            vertex_dissimilarities: vec![],
        }
    }

    #[test]
    fn graph_correctness() {
        let gt = GroundTruth::new(H::identity());
        let t = [(0, 0), (20, 0), (0, 20)];
        assert!(keygraph_correct(&corr(t, t, 0.1), &gt));
        assert!(!keygraph_correct(&corr(t, [(0, 0), (20, 0), (0, 25)], 0.1), &gt));
    }

    #[test]
    fn curve_examples() {
        let gt = GroundTruth::new(H::identity());
        let t = |i: i32| [(i * 100, 0), (i * 100 + 20, 0), (i * 100, 20)];
        let all_ok: Vec<_> = (0..5).map(|i| corr(t(i), t(i), 0.1 * f64::from(i + 1))).collect();
        let c = recall_precision_curve(&all_ok, &gt, &threshold_grid(1.0, 10)).unwrap();
        assert!(c.iter().all(|p| p.precision == 1.0));
        assert_eq!(c.last().unwrap().recall, 1.0);
        let c = recall_precision_curve(&all_ok, &gt, &[0.01]).unwrap();
        assert_eq!((c[0].recall, c[0].precision), (0.0, 1.0));
        assert!(matches!(recall_precision_curve::<f64>(&[], &gt, &[0.5]), Err(EvalError::EmptyCandidateSet)));
        assert!(matches!(recall_precision_curve(&all_ok, &gt, &[0.5, 0.2]), Err(EvalError::UnsortedThresholds)));
    }

    #[test]
    fn curve_matches_hand_count() {
        // Ten candidates with known labels and dissimilarities. Correct ones
        // are the even indices; candidate 8 duplicates candidate 0's pairs.
        let gt = GroundTruth::new(H::identity());
        let t = |i: i32| [(i * 100, 0), (i * 100 + 20, 0), (i * 100, 20)];
        let off = |i: i32| [(i * 100 + 50, 50), (i * 100 + 70, 50), (i * 100 + 50, 70)];
        let mut cands = Vec::new();
        for i in 0..10 {
            let d = 0.1 * f64::from(i) + 0.05;
            if i == 8 {
                cands.push(corr(t(0), t(0), d));
            } else if i % 2 == 0 {
                cands.push(corr(t(i), t(i), d));
            } else {
                cands.push(corr(t(i), off(i), d));
            }
        }
        let curve = recall_precision_curve(&cands, &gt, &[0.0, 0.2, 0.5, 1.0]).unwrap();
        // Distinct correct pairs: candidates 0, 2, 4, 6 -> 12 pairs.
        let expect = [(0.0, 1.0), (3.0 / 12.0, 1.0 / 2.0), (9.0 / 12.0, 3.0 / 5.0), (1.0, 5.0 / 10.0)];
        for (p, (r, pr)) in curve.iter().zip(expect) {
            assert!((p.recall - r).abs() < 1e-12 && (p.precision - pr).abs() < 1e-12, "{p:?}");
        }
        for w in curve.windows(2) {
            assert!(w[0].recall <= w[1].recall);
        }
    }

    #[test]
    fn deduplicated_pairs_count_once() {
        let gt = GroundTruth::new(H::identity());
        let t = [(0, 0), (20, 0), (0, 20)];
        let cands = vec![corr(t, t, 0.1), corr(t, t, 0.2)];
        let c = recall_precision_curve(&cands, &gt, &[0.15, 0.3]).unwrap();
        assert_eq!(c[0].recall, 1.0);
        assert_eq!(c[1].recall, 1.0);
    }

    #[test]
    fn csv_round_trip_and_mean() {
        let a = vec![CurvePoint { threshold: 0.5, recall: 0.25, precision: 1.0 }, CurvePoint { threshold: 1.0, recall: 0.5, precision: 0.5 }];
        let b = vec![CurvePoint { threshold: 0.5, recall: 0.75, precision: 0.5 }, CurvePoint { threshold: 1.0, recall: 1.0, precision: 0.25 }];
        let text = format_curve_csv(&a);
        assert!(text.starts_with("threshold,recall,precision\n0.5,0.25,1\n"));
        assert_eq!(parse_curve_csv::<f64>(&text).unwrap(), a);
        let m = mean_curve(&[a, b]);
        assert_eq!(m[0], CurvePoint { threshold: 0.5, recall: 0.5, precision: 0.75 });
        assert_eq!(m[1], CurvePoint { threshold: 1.0, recall: 0.75, precision: 0.375 });
        assert!(parse_curve_csv::<f64>("x\n").is_err());
    }

    #[test]
    fn dataset_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hs = crate::synth::write_subset::<f64>(&dir.path().join("a"), (64, 48), 2, &mut rng).unwrap();
        let subsets = open_dataset::<f64>(dir.path()).unwrap();
        assert_eq!(subsets.len(), 1);
        assert_eq!(subsets[0].images.len(), 3);
        for (got, want) in subsets[0].homographies.iter().zip(&hs) {
            assert!(got.matrix().iter().zip(want.matrix()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        std::fs::remove_file(dir.path().join("a/H1to3p")).unwrap();
        assert!(matches!(open_dataset::<f64>(dir.path()), Err(EvalError::DatasetLayout(_))));
        assert!(matches!(open_dataset::<f64>(dir.path().join("nothing")), Err(EvalError::DatasetLayout(_))));
    }
}
