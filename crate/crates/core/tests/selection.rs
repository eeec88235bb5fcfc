use keygraph::descriptor::gaussian_blur;
use keygraph::geometry::delaunay;
use keygraph::image::Image;
use keygraph::keygraph::{extract_scene_keygraphs, EnumerationParams, Structure};
use keygraph::keypoint::{detect_corners, CornerParams};
use keygraph::matching::{
    build_model_store, describe_graph_arcs, select_correspondences, select_correspondences_naive, ModelParams,
    SelectionParams,
};
use keygraph::synth::{noise_image, textured_image};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ids(c: &[keygraph::keygraph::KeygraphCorrespondence<f64>]) -> Vec<(usize, usize, usize)> {
    c.iter().map(|c| (c.scene_id, c.model_id, c.rotation)).collect()
}

fn check(seed: u64, structure: Structure, threshold: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model: Image<f64> = textured_image(90, 70, 6, &mut rng);
    let params = ModelParams {
        corners: CornerParams { max_count: 18, quality: 0.01 },
        enumeration: EnumerationParams { min_dist: 8, max_dist: 60, cap: None },
        ..ModelParams::default()
    };
    let Ok(store) = build_model_store(&model, structure, &params) else { return };
    let mut scene: Image<f64> = textured_image(120, 90, 8, &mut rng);
    let noise: Image<f64> = noise_image(120, 90, &mut rng);
    for (p, n) in scene.data_mut().iter_mut().zip(noise.data()) {
        *p += 0.1 * (n - 128.0);
    }
    let kp = detect_corners(&scene, &CornerParams { max_count: 30, quality: 0.01 });
    let Ok(tri) = delaunay(&kp.points) else { return };
    let graphs = extract_scene_keygraphs(&tri, structure, 8);
    let described = describe_graph_arcs(&gaussian_blur(&scene, 1.0), &graphs, &params.descriptor).unwrap();
    let sel = SelectionParams::with_threshold(threshold);
    let fast = select_correspondences(&store, &graphs, &described, &sel, None).unwrap();
    let slow = select_correspondences_naive(&store, &graphs, &described, &sel, None).unwrap();
    assert_eq!(ids(&fast), ids(&slow));
    for (a, b) in fast.iter().zip(&slow) {
        assert_eq!(a.arc_dissimilarities, b.arc_dissimilarities);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn join_matches_naive_triangles(seed in any::<u64>(), threshold in 0.1f64..0.9) {
        check(seed, Structure::Circuit3, threshold);
    }

    #[test]
    fn join_matches_naive_quadrilaterals(seed in any::<u64>(), threshold in 0.1f64..0.9) {
        check(seed, Structure::Circuit4, threshold);
    }

    #[test]
    fn join_matches_naive_pairs(seed in any::<u64>(), threshold in 0.1f64..0.9) {
        check(seed, Structure::Pair2, threshold);
    }
}
