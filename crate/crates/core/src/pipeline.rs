//! The scene pipeline: corners, sampling, triangulation, keygraph
//! extraction, description, selection and pose estimation.

use std::time::Instant;

use thiserror::Error;

use crate::descriptor::{gaussian_blur, DescriptorError};
use crate::evaluation::{recall_precision_curve, CurvePoint, EvalError, GroundTruth};
use crate::geometry::delaunay;
use crate::image::Image;
use crate::keygraph::{extract_scene_keygraphs, Keygraph, KeygraphCorrespondence, Structure};
use crate::keypoint::{detect_corners, sample_min_distance, CornerParams, KeypointSet};
use crate::matching::{
    build_model_store, build_model_store_from_keypoints, describe_graph_arcs, select_correspondences, MatchingError,
    ModelParams, ModelStore, SelectionParams,
};
use crate::pose::{ransac_pose, PoseError, RansacConfig, RansacResult};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Every tunable of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig<T> {
    pub structure: Structure,
    /// Model-side detection, enumeration and description settings; the
    /// minimum distance and descriptor settings also apply to the scene.
    pub model: ModelParams,
    pub scene_corners: CornerParams,
    /// Scene keypoints kept after sampling, strongest first.
    pub scene_max_keypoints: usize,
    pub selection: SelectionParams<T>,
    pub ransac: RansacConfig<T>,
    /// Seeds scene sampling and RANSAC.
    pub seed: u64,
}

impl<T: Scalar> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            structure: Structure::Circuit3,
            model: ModelParams::default(),
            scene_corners: CornerParams { max_count: 3000, quality: 0.01 },
            scene_max_keypoints: 500,
            selection: SelectionParams::default(),
            ransac: RansacConfig::default(),
            seed: 0,
        }
    }
}

impl<T: Scalar> RunConfig<T> {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let e = &self.model.enumeration;
        if e.min_dist < 1 || e.min_dist > e.max_dist {
            return Err(PipelineError::Config(format!("need 1 <= min_dist <= max_dist, got {} and {}", e.min_dist, e.max_dist)));
        }
        for (name, q) in [("model", self.model.corners.quality), ("scene", self.scene_corners.quality)] {
            if !(q > 0.0 && q <= 1.0) {
                return Err(PipelineError::Config(format!("{name} corner quality {q} not in (0, 1]")));
            }
        }
        if self.scene_max_keypoints < 3 {
            return Err(PipelineError::Config("scene_max_keypoints must be at least 3".into()));
        }
        self.model.descriptor.validate()?;
        self.selection.validate()?;
        self.ransac.validate()?;
        Ok(())
    }

    /// Human-readable `key value` lines echoing the configuration.
    pub fn echo(&self) -> String {
        let m = &self.model;
        let r = &self.ransac;
        let cap = m.enumeration.cap.map_or("none".to_string(), |c| c.to_string());
        [
            format!("structure {}", self.structure),
            format!("min_dist {}", m.enumeration.min_dist),
            format!("max_dist {}", m.enumeration.max_dist),
            format!("model_cap {cap}"),
            format!("model_corner_max_count {}", m.corners.max_count),
            format!("model_corner_quality {}", m.corners.quality),
            format!("scene_corner_max_count {}", self.scene_corners.max_count),
            format!("scene_corner_quality {}", self.scene_corners.quality),
            format!("scene_max_keypoints {}", self.scene_max_keypoints),
            format!("blur_sigma {}", m.descriptor.blur_sigma),
            format!("profile_len {}", m.descriptor.profile_len),
            format!("coeffs {}", m.descriptor.coeffs),
            format!("threshold {}", self.selection.threshold),
            format!("ransac_conf {}", r.confidence),
            format!("inlier_tol {}", r.inlier_tol),
            format!("max_iter {}", r.max_iterations),
            format!("min_inlier_graphs {}", r.min_inlier_graphs),
            format!("seed {}", self.seed),
        ]
        .iter()
        .map(|l| format!("{l}\n"))
        .collect()
    }

    pub fn build_model(&self, img: &Image<T>) -> Result<ModelStore<T>, PipelineError> {
        self.validate()?;
        Ok(build_model_store(img, self.structure, &self.model)?)
    }

    pub fn build_model_from_keypoints(&self, img: &Image<T>, keypoints: KeypointSet) -> Result<ModelStore<T>, PipelineError> {
        self.validate()?;
        Ok(build_model_store_from_keypoints(img, keypoints, self.structure, &self.model)?)
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub blur: f64,
    pub corners: f64,
    pub sampling: f64,
    pub triangulation: f64,
    pub extraction: f64,
    pub description: f64,
    pub selection: f64,
    pub ransac: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.blur + self.corners + self.sampling + self.triangulation + self.extraction + self.description + self.selection + self.ransac
    }

    pub fn report(&self) -> String {
        [
            ("blur", self.blur),
            ("corners", self.corners),
            ("sampling", self.sampling),
            ("triangulation", self.triangulation),
            ("extraction", self.extraction),
            ("description", self.description),
            ("selection", self.selection),
            ("ransac", self.ransac),
            ("total", self.total()),
        ]
        .iter()
        .map(|(k, v)| format!("{k} {v:.3} ms\n"))
        .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Detection<T> {
    pub pose: Option<RansacResult<T>>,
    pub correspondences: Vec<KeygraphCorrespondence<T>>,
    pub scene_keypoints: KeypointSet,
    pub scene_graphs: Vec<Keygraph>,
    pub timings: StageTimings,
}

/// A model store with the configuration used to search scenes for it.
#[derive(Clone, Debug)]
pub struct Detector<T> {
    pub store: ModelStore<T>,
    pub config: RunConfig<T>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl<T: Scalar> Detector<T> {
    pub fn new(store: ModelStore<T>, config: RunConfig<T>) -> Result<Self, PipelineError> {
        config.validate()?;
        if store.structure() != config.structure {
            return Err(PipelineError::Config(format!(
                "model store holds {} keygraphs but the run asks for {}",
                store.structure(),
                config.structure
            )));
        }
        if store.params().descriptor != config.model.descriptor {
            return Err(PipelineError::Config("model store was built with different descriptor settings".into()));
        }
        Ok(Self { store, config })
    }

    /// Scene keygraphs and their arc descriptors, stopping before
    /// selection. Returns no graphs when the scene has too few usable
    /// keypoints.
    fn scene_graphs(&self, scene: &Image<T>, t: &mut StageTimings) -> Result<(KeypointSet, Vec<Keygraph>, crate::matching::SceneDescriptors<T>), PipelineError> {
        let cfg = &self.config;
        let min_dist = cfg.model.enumeration.min_dist;
        let start = Instant::now();
        let blurred = gaussian_blur(scene, cfg.model.descriptor.blur_sigma);
        t.blur = ms(start);
        let start = Instant::now();
        let corners = detect_corners(scene, &cfg.scene_corners);
        t.corners = ms(start);
        let start = Instant::now();
        let keypoints = sample_min_distance(&corners, min_dist, cfg.seed).truncated(cfg.scene_max_keypoints);
        t.sampling = ms(start);
        let start = Instant::now();
        let tri = delaunay(&keypoints.points);
        t.triangulation = ms(start);
        let Ok(tri) = tri else {
            return Ok((keypoints, Vec::new(), Default::default()));
        };
        let start = Instant::now();
        let graphs = extract_scene_keygraphs(&tri, cfg.structure, min_dist);
        t.extraction = ms(start);
        let start = Instant::now();
        let described = describe_graph_arcs(&blurred, &graphs, &cfg.model.descriptor)?;
        t.description = ms(start);
        Ok((keypoints, graphs, described))
    }

    /// Runs the whole scene pipeline. A missing pose is not an error.
    pub fn detect(&self, scene: &Image<T>) -> Result<Detection<T>, PipelineError> {
        let mut timings = StageTimings::default();
        let (scene_keypoints, scene_graphs, described) = self.scene_graphs(scene, &mut timings)?;
        let start = Instant::now();
        let correspondences = select_correspondences(&self.store, &scene_graphs, &described, &self.config.selection, None)?;
        timings.selection = ms(start);
        let start = Instant::now();
        let ransac = RansacConfig { seed: self.config.seed, ..self.config.ransac };
        let pose = ransac_pose(&correspondences, &ransac);
        timings.ransac = ms(start);
        Ok(Detection { pose, correspondences, scene_keypoints, scene_graphs, timings })
    }

    /// Candidate correspondences at the largest threshold, for curve
    /// computation.
    pub fn candidates(&self, scene: &Image<T>, max_threshold: T) -> Result<Vec<KeygraphCorrespondence<T>>, PipelineError> {
        let mut timings = StageTimings::default();
        let (_, graphs, described) = self.scene_graphs(scene, &mut timings)?;
        let params = SelectionParams { threshold: max_threshold, ..self.config.selection };
        Ok(select_correspondences(&self.store, &graphs, &described, &params, None)?)
    }
}

/// Outcome of one model/scene pair with known ground truth.
#[derive(Clone, Debug)]
pub struct PairEvaluation<T> {
    /// `None` when no candidate correspondence exists.
    pub curve: Option<Vec<CurvePoint<T>>>,
    pub candidates: usize,
    pub ransac_iterations: Option<usize>,
    /// Largest corner transfer error of the recovered pose against the
    /// ground truth over the model frame.
    pub corner_error: Option<T>,
}

pub fn evaluate_pair<T: Scalar>(
    detector: &Detector<T>,
    model_size: (usize, usize),
    scene: &Image<T>,
    gt: &GroundTruth<T>,
    thresholds: &[T],
) -> Result<PairEvaluation<T>, PipelineError> {
    let max = thresholds.iter().copied().fold(T::zero(), T::max);
    let candidates = detector.candidates(scene, max)?;
    let curve = match recall_precision_curve(&candidates, gt, thresholds) {
        Ok(c) => Some(c),
        Err(EvalError::EmptyCandidateSet) => None,
        Err(e) => return Err(e.into()),
    };
    let detection = detector.detect(scene)?;
    let (ransac_iterations, corner_error) = match &detection.pose {
        Some(p) => (Some(p.iterations), Some(p.homography.max_corner_error(&gt.h, model_size.0, model_size.1))),
        None => (None, None),
    };
    Ok(PairEvaluation { curve, candidates: candidates.len(), ransac_iterations, corner_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Homography;
    use crate::synth::{noise_image, textured_image};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_match_gives_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let img: Image<f64> = textured_image(200, 160, 30, &mut rng);
        // The default 0.5 admits too many look-alike triangles on synthetic
        // texture for the default iteration budget.
        let cfg = RunConfig { selection: SelectionParams::with_threshold(0.3), ..RunConfig::default() };
        let store = cfg.build_model(&img).unwrap();
        let det = Detector::new(store, cfg).unwrap();
        let d = det.detect(&img).unwrap();
        let pose = d.pose.expect("pose");
        let err = pose.homography.max_corner_error(&Homography::identity(), 200, 160);
        assert!(err < 1e-6, "corner error {err}");
        assert!(d.timings.total() >= 0.0);
    }

    #[test]
    fn noise_scene_has_no_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let img: Image<f64> = textured_image(200, 160, 30, &mut rng);
        let cfg = RunConfig::default();
        let det = Detector::new(cfg.build_model(&img).unwrap(), cfg).unwrap();
        let noise: Image<f64> = noise_image(320, 240, &mut rng);
        assert!(det.detect(&noise).unwrap().pose.is_none());
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::<f64>::default();
        assert!(cfg.validate().is_ok());
        cfg.model.enumeration.min_dist = 200;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::<f64> { scene_max_keypoints: 2, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::<f64>::default().echo().contains("structure tri\n"));
    }

    #[test]
    fn structure_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let img: Image<f64> = textured_image(120, 100, 15, &mut rng);
        let cfg = RunConfig::default();
        let store = cfg.build_model(&img).unwrap();
        let other = RunConfig { structure: Structure::Pair2, ..cfg };
        assert!(Detector::new(store, other).is_err());
    }
}
