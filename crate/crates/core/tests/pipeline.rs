use keygraph::descriptor::gaussian_blur;
use keygraph::evaluation::{recall_precision_curve, threshold_grid, GroundTruth};
use keygraph::geometry::delaunay;
use keygraph::image::Image;
use keygraph::keygraph::{extract_scene_keygraphs, Structure};
use keygraph::keypoint::{detect_corners, CornerParams};
use keygraph::matching::{describe_graph_arcs, select_correspondences, SelectionParams};
use keygraph::pipeline::{Detector, RunConfig};
use keygraph::pose::Homography;
use keygraph::synth::{add_distractors, noise_image, random_homography, textured_image, warp_onto, write_sequence};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tuned() -> RunConfig<f64> {
    RunConfig { selection: SelectionParams::with_threshold(0.3), ..RunConfig::default() }
}

#[test]
fn warped_model_is_found_within_a_pixel() {
    let mut good = 0;
    let mut misses = Vec::new();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model: Image<f64> = textured_image(280, 210, 150, &mut rng);
        let h = random_homography::<f64>(280, 210, 640, 480, 0.3, &mut rng);
        let mut scene = warp_onto(&model, &h, &Image::filled(640, 480, 110.0).unwrap());
        add_distractors(&mut scene, 20, &mut rng);
        let cfg = RunConfig { seed, ..tuned() };
        let det = Detector::new(cfg.build_model(&model).unwrap(), cfg).unwrap();
        let err = det.detect(&scene).unwrap().pose.map(|p| p.homography.max_corner_error(&h, 280, 210));
        match err {
            Some(e) if e < 1.0 => good += 1,
            e => misses.push((seed, e)),
        }
    }
    assert!(good >= 90, "{good}/100 within 1 px; misses {misses:?}");
}

#[test]
fn noise_scenes_have_no_pose() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let model: Image<f64> = textured_image(200, 160, 40, &mut rng);
    let cfg = RunConfig::default();
    let det = Detector::new(cfg.build_model(&model).unwrap(), cfg).unwrap();
    for _ in 0..5 {
        let noise: Image<f64> = noise_image(320, 240, &mut rng);
        assert!(det.detect(&noise).unwrap().pose.is_none());
    }
}

#[test]
fn moving_model_is_tracked_over_a_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth: Vec<Homography<f64>> = write_sequence(dir.path(), 10, &mut rng).unwrap();
    let model = Image::<f64>::read_pnm(dir.path().join("model.pgm")).unwrap();
    let cfg = tuned();
    let det = Detector::new(cfg.build_model(&model).unwrap(), cfg).unwrap();
    for (t, h) in truth.iter().enumerate() {
        let frame = Image::<f64>::read_pnm(dir.path().join(format!("frames/frame{t:03}.pgm"))).unwrap();
        let pose = det.detect(&frame).unwrap().pose.unwrap_or_else(|| panic!("no pose in frame {t}"));
        let err = pose.homography.max_corner_error(h, model.width(), model.height());
        assert!(err < 2.0, "frame {t}: corner error {err}");
    }
}

fn scene_setup(seed: u64) -> (Detector<f64>, Image<f64>, Homography<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model: Image<f64> = textured_image(120, 100, 25, &mut rng);
    let h = random_homography::<f64>(120, 100, 240, 200, 0.3, &mut rng);
    let bg: Image<f64> = textured_image(240, 200, 15, &mut rng);
    let scene = warp_onto(&model, &h, &bg);
    let cfg = RunConfig { model: keygraph::matching::ModelParams { enumeration: keygraph::keygraph::EnumerationParams { max_dist: 50, ..Default::default() }, ..Default::default() }, ..RunConfig::default() };
    let det = Detector::new(cfg.build_model(&model).unwrap(), cfg).unwrap();
    (det, scene, h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Raising the threshold only adds correspondences, and recall never
    /// drops along a curve.
    #[test]
    fn selection_grows_with_threshold(seed in any::<u64>(), lo in 0.05f64..0.5, extra in 0.0f64..0.4) {
        let (det, scene, h) = scene_setup(seed);
        let kp = detect_corners(&scene, &CornerParams::default());
        let Ok(tri) = delaunay(&kp.points) else { return Ok(()) };
        let graphs = extract_scene_keygraphs(&tri, Structure::Circuit3, 10);
        let described = describe_graph_arcs(&gaussian_blur(&scene, 1.0), &graphs, &det.config.model.descriptor).unwrap();
        let at = |t: f64| select_correspondences(&det.store, &graphs, &described, &SelectionParams::with_threshold(t), None).unwrap();
        let (small, large) = (at(lo), at(lo + extra));
        for c in &small {
            prop_assert!(large.contains(c));
        }
        let cands = det.candidates(&scene, 1.0).unwrap();
        if let Ok(curve) = recall_precision_curve(&cands, &GroundTruth::new(h), &threshold_grid(1.0, 20)) {
            prop_assert!(curve.windows(2).all(|w| w[0].recall <= w[1].recall));
            prop_assert!(curve.iter().all(|c| (0.0..=1.0).contains(&c.precision)));
        }
    }
}
