//! Homography estimation: DLT, Levenberg-Marquardt refinement and RANSAC
//! over keygraph correspondences.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::format::sig;
use crate::geometry::{cross, Point};
use crate::keygraph::KeygraphCorrespondence;
use crate::linalg::{jacobi_svd, solve, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoseError {
    #[error("degenerate point configuration")]
    DegenerateConfiguration,
    #[error("singular homography")]
    SingularMatrix,
    #[error("invalid RANSAC configuration: {0}")]
    InvalidConfig(String),
}

pub type PointPair = (Point, Point);

/// Determinants at or below this (after Frobenius normalization) count as
/// singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Planar projective map from model to scene coordinates, row-major,
/// scaled to unit Frobenius norm with a non-negative bottom-right entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography<T> {
    m: [T; 9],
}

fn mul3<T: Scalar>(a: &[T; 9], b: &[T; 9]) -> [T; 9] {
    let mut out = [T::zero(); 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
        }
    }
    out
}

fn det3<T: Scalar>(m: &[T; 9]) -> T {
    m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6])
}

fn adjugate3<T: Scalar>(m: &[T; 9]) -> [T; 9] {
    [
        m[4] * m[8] - m[5] * m[7],
        m[2] * m[7] - m[1] * m[8],
        m[1] * m[5] - m[2] * m[4],
        m[5] * m[6] - m[3] * m[8],
        m[0] * m[8] - m[2] * m[6],
        m[2] * m[3] - m[0] * m[5],
        m[3] * m[7] - m[4] * m[6],
        m[1] * m[6] - m[0] * m[7],
        m[0] * m[4] - m[1] * m[3],
    ]
}

impl<T: Scalar> Homography<T> {
    pub fn from_matrix(m: [T; 9]) -> Result<Self, PoseError> {
        let norm = m.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(PoseError::SingularMatrix);
        }
        let sign = if m[8] < T::zero() { -T::one() } else { T::one() };
        let n = m.map(|v| v * sign / norm);
        if det3(&n).abs() <= T::lit(SINGULAR_DET) {
            return Err(PoseError::SingularMatrix);
        }
        Ok(Self { m: n })
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::from_matrix([o, z, z, z, o, z, z, z, o]).unwrap()
    }

    pub fn translation(dx: T, dy: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::from_matrix([o, z, dx, z, o, dy, z, z, o]).expect("translation is invertible")
    }

    pub fn matrix(&self) -> &[T; 9] {
        &self.m
    }

    /// Projects `(x, y)`; the result is non-finite on the line at infinity.
    pub fn apply(&self, x: T, y: T) -> (T, T) {
        let m = &self.m;
        let w = m[6] * x + m[7] * y + m[8];
        ((m[0] * x + m[1] * y + m[2]) / w, (m[3] * x + m[4] * y + m[5]) / w)
    }

    pub fn apply_point(&self, p: Point) -> (T, T) {
        self.apply(T::from_int(p.x.into()), T::from_int(p.y.into()))
    }

    /// Euclidean distance between `H p` and `q`; infinite when undefined.
    pub fn transfer_error(&self, p: Point, q: Point) -> T {
        let (x, y) = self.apply_point(p);
        let d = ((x - T::from_int(q.x.into())).powi(2) + (y - T::from_int(q.y.into())).powi(2)).sqrt();
        if d.is_finite() {
            d
        } else {
            T::infinity()
        }
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self, PoseError> {
        Self::from_matrix(mul3(&self.m, &other.m))
    }

    pub fn inverse(&self) -> Result<Self, PoseError> {
        Self::from_matrix(adjugate3(&self.m))
    }

    /// The nine entries at 9 significant digits, space separated.
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.m.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&sig(v.as_f64(), 9));
        }
        s
    }

    /// Largest distance between the images of the four corners of a
    /// `width` x `height` rectangle under `self` and `other`.
    pub fn max_corner_error(&self, other: &Self, width: usize, height: usize) -> T {
        let (w, h) = (T::from_int(width as i64 - 1), T::from_int(height as i64 - 1));
        [(T::zero(), T::zero()), (w, T::zero()), (w, h), (T::zero(), h)]
            .iter()
            .map(|&(x, y)| {
                let (a, b) = self.apply(x, y);
                let (c, d) = other.apply(x, y);
                let e = ((a - c).powi(2) + (b - d).powi(2)).sqrt();
                if e.is_finite() {
                    e
                } else {
                    T::infinity()
                }
            })
            .fold(T::zero(), T::max)
    }
}

/// Similarity moving the centroid to the origin and the mean distance to
/// `sqrt(2)`.
fn normalizer<T: Scalar>(pts: &[[T; 2]]) -> Option<[T; 9]> {
    let n = T::from_int(pts.len() as i64);
    let cx = pts.iter().map(|p| p[0]).sum::<T>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<T>() / n;
    let mean = pts.iter().map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()).sum::<T>() / n;
    if !(mean > T::zero()) {
        return None;
    }
    let s = T::lit(std::f64::consts::SQRT_2) / mean;
    let (o, z) = (T::one(), T::zero());
    Some([s, z, -s * cx, z, s, -s * cy, z, z, o])
}

fn transform<T: Scalar>(t: &[T; 9], p: [T; 2]) -> [T; 2] {
    let w = t[6] * p[0] + t[7] * p[1] + t[8];
    [(t[0] * p[0] + t[1] * p[1] + t[2]) / w, (t[3] * p[0] + t[4] * p[1] + t[5]) / w]
}

fn to_real<T: Scalar>(p: Point) -> [T; 2] {
    [T::from_int(p.x.into()), T::from_int(p.y.into())]
}

/// Normalized direct linear transform on real coordinates.
pub fn homography_dlt_real<T: Scalar>(model: &[[T; 2]], scene: &[[T; 2]]) -> Result<Homography<T>, PoseError> {
    assert_eq!(model.len(), scene.len());
    let n = model.len();
    if n < 4 {
        return Err(PoseError::DegenerateConfiguration);
    }
    let tm = normalizer(model).ok_or(PoseError::DegenerateConfiguration)?;
    let ts = normalizer(scene).ok_or(PoseError::DegenerateConfiguration)?;
    let rows = (2 * n).max(9);
    let mut a = Matrix::zeros(rows, 9);
    for (i, (pm, ps)) in model.iter().zip(scene).enumerate() {
        let [x, y] = transform(&tm, *pm);
        let [u, v] = transform(&ts, *ps);
        let o = T::one();
        let r0 = [-x, -y, -o, T::zero(), T::zero(), T::zero(), u * x, u * y, u];
        let r1 = [T::zero(), T::zero(), T::zero(), -x, -y, -o, v * x, v * y, v];
        a.data[2 * i * 9..2 * i * 9 + 9].copy_from_slice(&r0);
        a.data[(2 * i + 1) * 9..(2 * i + 1) * 9 + 9].copy_from_slice(&r1);
    }
    let (sigma, v) = jacobi_svd(&a);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).unwrap());
    let largest = sigma[order[8]];
    // A second (near-)zero singular value means the solution is not unique.
    if !(sigma[order[1]] > largest * T::epsilon().sqrt() * T::lit(1e-3)) {
        return Err(PoseError::DegenerateConfiguration);
    }
    let hn: [T; 9] = std::array::from_fn(|i| v[order[0]][i]);
    let ts_inv = adjugate3(&ts);
    let h = mul3(&mul3(&ts_inv, &hn), &tm);
    Homography::from_matrix(h).map_err(|_| PoseError::DegenerateConfiguration)
}

/// DLT over integer keypoint pairs. Needs at least four pairs and no three
/// collinear points on either side when exactly four are given.
pub fn homography_dlt<T: Scalar>(pairs: &[PointPair]) -> Result<Homography<T>, PoseError> {
    if pairs.len() < 4 {
        return Err(PoseError::DegenerateConfiguration);
    }
    if pairs.len() == 4 && sample_degenerate(pairs) {
        return Err(PoseError::DegenerateConfiguration);
    }
    let model: Vec<[T; 2]> = pairs.iter().map(|p| to_real(p.0)).collect();
    let scene: Vec<[T; 2]> = pairs.iter().map(|p| to_real(p.1)).collect();
    homography_dlt_real(&model, &scene)
}

/// Repeated points on either side, or three collinear points on either
/// side.
pub fn sample_degenerate(pairs: &[PointPair]) -> bool {
    for side in 0..2 {
        let pts: Vec<Point> = pairs.iter().map(|p| if side == 0 { p.0 } else { p.1 }).collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i] == pts[j] {
                    return true;
                }
                for k in j + 1..pts.len() {
                    if cross(pts[i], pts[j], pts[k]) == 0 {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Sum of squared transfer errors `|H p_m - p_s|^2`.
pub fn transfer_cost<T: Scalar>(h: &Homography<T>, pairs: &[PointPair]) -> T {
    raw_cost(h.matrix(), &reals(pairs))
}

fn reals<T: Scalar>(pairs: &[PointPair]) -> Vec<([T; 2], [T; 2])> {
    pairs.iter().map(|(a, b)| (to_real(*a), to_real(*b))).collect()
}

fn raw_cost<T: Scalar>(h: &[T; 9], pairs: &[([T; 2], [T; 2])]) -> T {
    pairs
        .iter()
        .map(|(p, q)| {
            let [x, y] = transform(h, *p);
            (x - q[0]).powi(2) + (y - q[1]).powi(2)
        })
        .sum()
}

/// Residuals and their Jacobian with respect to all nine entries.
fn residuals<T: Scalar>(h: &[T; 9], pairs: &[([T; 2], [T; 2])]) -> (Vec<T>, Vec<[T; 9]>) {
    let mut r = Vec::with_capacity(2 * pairs.len());
    let mut jac = Vec::with_capacity(2 * pairs.len());
    let z = T::zero();
    for (p, q) in pairs {
        let (x, y) = (p[0], p[1]);
        let w = h[6] * x + h[7] * y + h[8];
        let u = (h[0] * x + h[1] * y + h[2]) / w;
        let v = (h[3] * x + h[4] * y + h[5]) / w;
        r.push(u - q[0]);
        r.push(v - q[1]);
        jac.push([x / w, y / w, T::one() / w, z, z, z, -x * u / w, -y * u / w, -u / w]);
        jac.push([z, z, z, x / w, y / w, T::one() / w, -x * v / w, -y * v / w, -v / w]);
    }
    (r, jac)
}

/// Analytic gradient of [`transfer_cost`] with respect to the nine raw
/// matrix entries.
pub fn cost_gradient<T: Scalar>(h: &Homography<T>, pairs: &[PointPair]) -> [T; 9] {
    let (r, jac) = residuals(h.matrix(), &reals(pairs));
    let mut g = [T::zero(); 9];
    for (ri, row) in r.iter().zip(&jac) {
        for k in 0..9 {
            g[k] += T::lit(2.0) * *ri * row[k];
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LmStatus {
    /// Gradient or relative step fell below tolerance.
    Converged,
    MaxIterations,
    /// The normal equations could not be solved; the input was returned.
    SingularNormalEquations,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmReport<T> {
    pub status: LmStatus,
    pub iterations: usize,
    pub initial_cost: T,
    pub final_cost: T,
    /// Infinity norm of the gradient over the free parameters, in
    /// normalized coordinates, at termination.
    pub gradient_norm: T,
}

pub const LM_MAX_ITERATIONS: usize = 100;
pub const LM_GRADIENT_TOL: f64 = 1e-10;
pub const LM_STEP_TOL: f64 = 1e-12;

/// Levenberg-Marquardt minimization of the summed squared transfer error,
/// starting from `h0`.
///
/// Works in normalized coordinates with the largest-magnitude entry held
/// fixed, so eight parameters remain. The returned cost never exceeds the
/// initial one.
pub fn lm_refine<T: Scalar>(h0: &Homography<T>, pairs: &[PointPair]) -> (Homography<T>, LmReport<T>) {
    let real = reals::<T>(pairs);
    let initial_cost = raw_cost(h0.matrix(), &real);
    let mut report = LmReport {
        status: LmStatus::SingularNormalEquations,
        iterations: 0,
        initial_cost,
        final_cost: initial_cost,
        gradient_norm: T::zero(),
    };
    let model: Vec<[T; 2]> = real.iter().map(|p| p.0).collect();
    let scene: Vec<[T; 2]> = real.iter().map(|p| p.1).collect();
    let (Some(tm), Some(ts)) = (normalizer(&model), normalizer(&scene)) else {
        return (*h0, report);
    };
    if pairs.len() < 4 {
        return (*h0, report);
    }
    let norm_pairs: Vec<([T; 2], [T; 2])> = real.iter().map(|(p, q)| (transform(&tm, *p), transform(&ts, *q))).collect();
    let tm_inv = adjugate3(&tm);
    let mut h = mul3(&mul3(&ts, h0.matrix()), &tm_inv);
    let scale = h.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    h = h.map(|v| v / scale);
    let fixed = (0..9).max_by(|&a, &b| h[a].abs().partial_cmp(&h[b].abs()).unwrap()).unwrap();
    let free: Vec<usize> = (0..9).filter(|&i| i != fixed).collect();

    let mut cost = raw_cost(&h, &norm_pairs);
    let mut lambda = T::lit(1e-3);
    let (ten, two) = (T::lit(10.0), T::lit(2.0));
    let mut status = LmStatus::MaxIterations;
    let mut accepted_any = false;
    let mut grad_norm = T::zero();
    let mut iterations = 0;
    while iterations < LM_MAX_ITERATIONS {
        let (r, jac) = residuals(&h, &norm_pairs);
        let mut jtj = Matrix::zeros(8, 8);
        let mut g = vec![T::zero(); 8];
        for (ri, row) in r.iter().zip(&jac) {
            for (a, &ia) in free.iter().enumerate() {
                g[a] += row[ia] * *ri;
                for (b, &ib) in free.iter().enumerate() {
                    *jtj.at_mut(a, b) += row[ia] * row[ib];
                }
            }
        }
        grad_norm = g.iter().map(|v| (two * *v).abs()).fold(T::zero(), T::max);
        if grad_norm < T::lit(LM_GRADIENT_TOL) {
            status = LmStatus::Converged;
            break;
        }
        iterations += 1;
        let mut damped = jtj.clone();
        for a in 0..8 {
            let d = jtj.at(a, a);
            *damped.at_mut(a, a) += lambda * if d > T::zero() { d } else { T::epsilon() };
        }
        let Some(step) = solve(&damped, &g.iter().map(|v| -*v).collect::<Vec<_>>()) else {
            if accepted_any {
                status = LmStatus::Converged;
                break;
            }
            report.iterations = iterations;
            report.gradient_norm = grad_norm;
            return (*h0, report);
        };
        let mut trial = h;
        for (a, &ia) in free.iter().enumerate() {
            trial[ia] += step[a];
        }
        let trial_cost = raw_cost(&trial, &norm_pairs);
        let step_norm = step.iter().map(|v| *v * *v).sum::<T>().sqrt();
        let param_norm = free.iter().map(|&i| h[i] * h[i]).sum::<T>().sqrt();
        if trial_cost.is_finite() && trial_cost <= cost {
            h = trial;
            cost = trial_cost;
            lambda /= ten;
            accepted_any = true;
        } else {
            lambda *= ten;
        }
        if step_norm <= T::lit(LM_STEP_TOL) * (param_norm + T::lit(LM_STEP_TOL)) {
            status = LmStatus::Converged;
            break;
        }
    }
    let back = mul3(&mul3(&adjugate3(&ts), &h), &tm);
    let refined = match Homography::from_matrix(back) {
        Ok(r) => r,
        Err(_) => {
            report.iterations = iterations;
            return (*h0, report);
        }
    };
    let final_cost = raw_cost(refined.matrix(), &real);
    if !(final_cost <= initial_cost) {
        // Round-off in the change of coordinates; keep the input.
        report.status = status;
        report.iterations = iterations;
        report.gradient_norm = grad_norm;
        return (*h0, report);
    }
    report.status = status;
    report.iterations = iterations;
    report.final_cost = final_cost;
    report.gradient_norm = grad_norm;
    (refined, report)
}

/// Expected RANSAC iterations `log(1 - P) / log(1 - p^h)` needed to draw
/// one all-inlier sample with confidence `P`.
pub fn expected_iterations(confidence: f64, inlier_ratio: f64, h: usize) -> f64 {
    assert!(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
    assert!((0.0..=1.0).contains(&inlier_ratio), "inlier ratio must lie in [0, 1]");
    assert!(h >= 1, "sample size must be positive");
    if inlier_ratio <= 0.0 {
        return f64::INFINITY;
    }
    if inlier_ratio >= 1.0 {
        return 1.0;
    }
    let ph = inlier_ratio.powi(h as i32);
    ((1.0 - confidence).ln() / (-ph).ln_1p()).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacConfig<T> {
    pub confidence: f64,
    /// Pixel tolerance for inlier keypoint pairs.
    pub inlier_tol: T,
    /// Upper bound on counted (non-degenerate) iterations.
    pub max_iterations: usize,
    /// Fewest distinct scene units (keygraphs) that must support a pose.
    /// Model units matched to the same scene unit count once.
    pub min_inlier_graphs: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for RansacConfig<T> {
    fn default() -> Self {
        Self { confidence: 0.99, inlier_tol: T::lit(3.0), max_iterations: 2000, min_inlier_graphs: 4, seed: 0 }
    }
}

impl<T: Scalar> RansacConfig<T> {
    pub fn validate(&self) -> Result<(), PoseError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(PoseError::InvalidConfig(format!("confidence {} not in (0, 1)", self.confidence)));
        }
        if !(self.inlier_tol > T::zero()) {
            return Err(PoseError::InvalidConfig(format!("inlier tolerance {} must be positive", self.inlier_tol)));
        }
        if self.max_iterations == 0 {
            return Err(PoseError::InvalidConfig("max iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RansacResult<T> {
    /// Best hypothesis after refinement.
    pub homography: Homography<T>,
    /// The best hypothesis before refinement.
    pub unrefined: Homography<T>,
    /// Indices of inlier units under the final refined hypothesis.
    pub inliers: Vec<usize>,
    /// Non-degenerate iterations performed.
    pub iterations: usize,
    /// All draws, degenerate ones included.
    pub attempts: usize,
    pub refinement: LmReport<T>,
}

const REFIT_ROUNDS: usize = 5;

/// Units whose every pair transfers within `tol`, with their summed error.
fn inlier_units<T: Scalar>(h: &Homography<T>, units: &[Vec<PointPair>], tol: T) -> (Vec<usize>, T) {
    let mut inliers = Vec::new();
    let mut err = T::zero();
    for (i, u) in units.iter().enumerate() {
        let mut e = T::zero();
        if u.iter().all(|(p, q)| {
            let d = h.transfer_error(*p, *q);
            e += d;
            d <= tol
        }) {
            inliers.push(i);
            err += e;
        }
    }
    (inliers, err)
}

/// Distinct inlier pairs, keeping each model and scene keypoint in at most
/// one pair: the one with the smallest transfer error under `h`.
fn one_to_one<T: Scalar>(h: &Homography<T>, pairs: impl Iterator<Item = PointPair>) -> Vec<PointPair> {
    let mut pairs: Vec<PointPair> = pairs.collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut scored: Vec<(T, PointPair)> = pairs.into_iter().map(|pq| (h.transfer_error(pq.0, pq.1), pq)).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut used_model = std::collections::HashSet::new();
    let mut used_scene = std::collections::HashSet::new();
    let mut out: Vec<PointPair> = Vec::new();
    for (_, (p, q)) in scored {
        if !used_model.contains(&p) && !used_scene.contains(&q) {
            used_model.insert(p);
            used_scene.insert(q);
            out.push((p, q));
        }
    }
    out.sort_unstable();
    out
}

/// Number of different scene point sets among the chosen units.
fn distinct_scene_units(units: &[Vec<PointPair>], chosen: &[usize]) -> usize {
    let mut seen: Vec<Vec<Point>> = chosen
        .iter()
        .map(|&i| {
            let mut s: Vec<Point> = units[i].iter().map(|(_, q)| *q).collect();
            s.sort_unstable();
            s
        })
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn model_bbox<T: Scalar>(units: &[Vec<PointPair>]) -> [T; 4] {
    let mut pts = units.iter().flatten().map(|(p, _)| *p);
    let first = pts.next().unwrap_or(Point::new(0, 0));
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in pts {
        (x0, y0, x1, y1) = (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y));
    }
    [x0, y0, x1, y1].map(|v| T::from_int(i64::from(v)))
}

/// Rejects hypotheses that mirror the model or send part of its bounding
/// box through the line at infinity: `w` must keep one sign over the box
/// and the Jacobian determinant, `det(H) / w^3`, must be positive.
fn plausible<T: Scalar>(h: &Homography<T>, [x0, y0, x1, y1]: [T; 4]) -> bool {
    let m = &h.m;
    let w = |x: T, y: T| m[6] * x + m[7] * y + m[8];
    let ws = [w(x0, y0), w(x1, y0), w(x0, y1), w(x1, y1)];
    let sign = if ws[0] > T::zero() { T::one() } else { -T::one() };
    ws.iter().all(|&v| v * sign > T::zero()) && det3(m) * sign > T::zero()
}

/// RANSAC over sampling units, each a set of keypoint pairs that are
/// inliers only together. Draws `h` distinct units per iteration.
pub fn ransac_units<T: Scalar>(units: &[Vec<PointPair>], h: usize, cfg: &RansacConfig<T>) -> Option<RansacResult<T>> {
    assert!(h >= 1);
    cfg.validate().expect("valid RANSAC configuration");
    let n = units.len();
    if n < h || n == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(usize, T, Homography<T>, Vec<usize>)> = None;
    let mut required = cfg.max_iterations as f64;
    let (mut iterations, mut attempts) = (0usize, 0usize);
    let bbox = model_bbox::<T>(units);
    let mut sample: Vec<PointPair> = Vec::new();
    while iterations < cfg.max_iterations && (iterations as f64) < required && attempts < 10 * cfg.max_iterations {
        attempts += 1;
        let picks = rand::seq::index::sample(&mut rng, n, h);
        sample.clear();
        for i in picks.iter() {
            sample.extend_from_slice(&units[i]);
        }
        if sample_degenerate(&sample) {
            continue;
        }
        let Ok(model) = homography_dlt::<T>(&sample) else { continue };
        iterations += 1;
        if !plausible(&model, bbox) {
            continue;
        }
        let (inliers, err) = inlier_units(&model, units, cfg.inlier_tol);
        let better = match &best {
            None => true,
            Some((s, be, _, _)) => inliers.len() > *s || (inliers.len() == *s && err < *be),
        };
        if better {
            let ratio = inliers.len() as f64 / n as f64;
            required = expected_iterations(cfg.confidence, ratio, h);
            best = Some((inliers.len(), err, model, inliers));
        }
    }
    let (_, _, unrefined, inliers) = best?;
    if distinct_scene_units(units, &inliers) < cfg.min_inlier_graphs.max(1) {
        return None;
    }
    let pairs = one_to_one(&unrefined, inliers.iter().flat_map(|&i| units[i].iter().copied()));
    let (mut homography, mut refinement) = lm_refine(&unrefined, &pairs);
    let mut inliers = inliers;
    // Re-collect inliers under the refined pose and refit until stable.
    for _ in 0..REFIT_ROUNDS {
        let again = inlier_units(&homography, units, cfg.inlier_tol).0;
        if again == inliers || again.len() < inliers.len() {
            break;
        }
        inliers = again;
        let pairs = one_to_one(&homography, inliers.iter().flat_map(|&i| units[i].iter().copied()));
        (homography, refinement) = lm_refine(&homography, &pairs);
    }
    Some(RansacResult { homography, unrefined, inliers, iterations, attempts, refinement })
}

/// Pose from keygraph correspondences, sampling `ceil(4 / k)` of them per
/// iteration and counting a correspondence as inlier only when all its
/// keypoint pairs are.
pub fn ransac_pose<T: Scalar>(corrs: &[KeygraphCorrespondence<T>], cfg: &RansacConfig<T>) -> Option<RansacResult<T>> {
    let first = corrs.first()?;
    let h = first.model.structure.sample_size();
    let units: Vec<Vec<PointPair>> = corrs.iter().map(|c| c.keypoint_pairs()).collect();
    ransac_units(&units, h, cfg)
}

/// Point-level baseline: four keypoint pairs per iteration.
pub fn ransac_points<T: Scalar>(pairs: &[PointPair], cfg: &RansacConfig<T>) -> Option<RansacResult<T>> {
    let units: Vec<Vec<PointPair>> = pairs.iter().map(|p| vec![*p]).collect();
    ransac_units(&units, 4, cfg)
}

/// A pose line per homography, `NONE` for a missing one.
pub fn format_pose<T: Scalar>(h: Option<&Homography<T>>) -> String {
    let mut s = String::new();
    match h {
        Some(h) => writeln!(s, "{}", h.to_line()).unwrap(),
        None => writeln!(s, "NONE").unwrap(),
    }
    s
}
