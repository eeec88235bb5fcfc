use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use keygraph::descriptor::format_descriptor_dump;
use keygraph::evaluation::{
    crop_model, format_curve_csv, mean_curve, open_dataset, parse_curve_csv, random_crop, threshold_grid, CurvePoint,
    GroundTruth,
};
use keygraph::image::Image;
use keygraph::keygraph::Structure;
use keygraph::keypoint::load_keypoints;
use keygraph::matching::{format_correspondences, ModelStore};
use keygraph::pipeline::{evaluate_pair, Detector, RunConfig};
use keygraph::pose::format_pose;
use keygraph::synth::{write_sequence, write_subset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::failure::Failure;
use crate::Tuning;

type Cfg = RunConfig<f64>;

impl Tuning {
    /// `base` with every flag that was given applied on top.
    fn apply(&self, base: Cfg) -> Result<Cfg, Failure> {
        let mut cfg = base;
        if let Some(s) = self.structure {
            cfg.structure = s;
        }
        if let Some(v) = self.min_dist {
            cfg.model.enumeration.min_dist = v;
        }
        if let Some(v) = self.max_dist {
            cfg.model.enumeration.max_dist = v;
        }
        if let Some(v) = self.profile_len {
            cfg.model.descriptor.profile_len = v;
        }
        if let Some(v) = self.coeffs {
            cfg.model.descriptor.coeffs = v;
        }
        if let Some(v) = self.threshold {
            cfg.selection.threshold = v;
        }
        if let Some(v) = self.ransac_conf {
            cfg.ransac.confidence = v;
        }
        if let Some(v) = self.inlier_tol {
            cfg.ransac.inlier_tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.ransac.max_iterations = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
            cfg.ransac.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_image(path: &Path) -> Result<Image<f64>, Failure> {
    Image::read_pnm(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".config");
    PathBuf::from(name)
}

fn build_store(image: &Path, cfg: &Cfg, tuning: &Tuning) -> Result<ModelStore<f64>, Failure> {
    let img = read_image(image)?;
    Ok(match &tuning.keypoints_file {
        Some(kp) => cfg.build_model_from_keypoints(&img, load_keypoints(kp).map_err(|e| Failure::io(kp, e))?)?,
        None => cfg.build_model(&img)?,
    })
}

pub fn build_model(image: &Path, output: &Path, tuning: &Tuning) -> Result<(), Failure> {
    let cfg = tuning.apply(Cfg::default())?;
    let store = build_store(image, &cfg, tuning)?;
    write(output, &store.to_text())?;
    write(&sidecar(output), &cfg.echo())?;
    println!(
        "{} keypoints, {} keygraphs, {} arcs",
        store.keypoints().len(),
        store.keygraphs().len(),
        store.arcs().len()
    );
    Ok(())
}

/// Loads a store and a detector configured from it plus the flags.
fn detector(store: &Path, tuning: &Tuning) -> Result<Detector<f64>, Failure> {
    let store = ModelStore::<f64>::load(store).map_err(|e| Failure::from(e).with_path(store))?;
    let base = Cfg { structure: store.structure(), model: *store.params(), ..Cfg::default() };
    let cfg = tuning.apply(base)?;
    Ok(Detector::new(store, cfg)?)
}

pub fn detect(store: &Path, scene: &Path, out: Option<&Path>, tuning: &Tuning) -> Result<(), Failure> {
    let det = detector(store, tuning)?;
    let img = read_image(scene)?;
    let d = det.detect(&img)?;
    let pose = format_pose(d.pose.as_ref().map(|p| &p.homography));
    print!("{pose}");
    let timings = d.timings.report();
    match out {
        Some(dir) => {
            write(&dir.join("pose.txt"), &pose)?;
            write(&dir.join("correspondences.txt"), &format_correspondences(&d.correspondences))?;
            write(&dir.join("timings.txt"), &timings)?;
            write(&dir.join("config.txt"), &det.config.echo())?;
        }
        None => eprint!("{timings}"),
    }
    if d.pose.is_none() {
        return Err(Failure::NoPose);
    }
    Ok(())
}

pub struct BenchmarkPlan {
    pub structures: Vec<Structure>,
    pub crops: usize,
    pub steps: usize,
    pub max_threshold: f64,
}

/// Name of the keypoint source in output file names.
fn detector_name(tuning: &Tuning) -> &'static str {
    if tuning.keypoints_file.is_some() {
        "external"
    } else {
        "corners"
    }
}

pub fn benchmark(dataset: &Path, output: &Path, plan: &BenchmarkPlan, tuning: &Tuning) -> Result<(), Failure> {
    if plan.crops == 0 || plan.steps == 0 || !(plan.max_threshold > 0.0) {
        return Err(Failure::Validation("crops, steps and max threshold must be positive".into()));
    }
    let base = tuning.apply(Cfg::default())?;
    let subsets = open_dataset::<f64>(dataset)?;
    let thresholds = threshold_grid(plan.max_threshold, plan.steps);
    write(&output.join("config.txt"), &base.echo())?;
    for &structure in &plan.structures {
        let cfg = Cfg { structure, ..base };
        let mut curves: Vec<Vec<CurvePoint<f64>>> = Vec::new();
        let mut rows = String::from("subset,crop,scene,candidates,iterations,corner_error\n");
        for (si, subset) in subsets.iter().enumerate() {
            let name = subset.dir.file_name().map_or_else(|| format!("subset{si}"), |n| n.to_string_lossy().into_owned());
            let reference = read_image(&subset.images[0])?;
            for crop in 0..plan.crops {
                let rect = random_crop(reference.width(), reference.height(), cfg.seed ^ ((si as u64) << 32 | crop as u64));
                let (model, _) = crop_model(&reference, rect, &keygraph::pose::Homography::identity())?;
                let store = match cfg.build_model(&model) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("{name} crop {crop}: skipped ({e})");
                        continue;
                    }
                };
                let det = Detector::new(store, cfg)?;
                for (k, h) in subset.homographies.iter().enumerate() {
                    let scene_no = k + 2;
                    let scene = read_image(&subset.images[k + 1])?;
                    let (_, adjusted) = crop_model(&reference, rect, h)?;
                    let eval = evaluate_pair(&det, (rect.width, rect.height), &scene, &GroundTruth::new(adjusted), &thresholds)?;
                    if let Some(curve) = eval.curve {
                        let path = output.join(&name).join(structure.name()).join(format!("crop{crop}_img{scene_no}.csv"));
                        write(&path, &format_curve_csv(&curve))?;
                        curves.push(curve);
                    }
                    let opt = |v: Option<String>| v.unwrap_or_default();
                    rows.push_str(&format!(
                        "{name},{crop},{scene_no},{},{},{}\n",
                        eval.candidates,
                        opt(eval.ransac_iterations.map(|i| i.to_string())),
                        opt(eval.corner_error.map(|e| format!("{e:.4}"))),
                    ));
                }
            }
        }
        write(&output.join(format!("iterations_{}.csv", structure.name())), &rows)?;
        let mean = mean_curve(&curves);
        write(&output.join(format!("{}_{}.csv", detector_name(tuning), structure.name())), &format_curve_csv(&mean))?;
        println!("{}: {} curves", structure.name(), curves.len());
    }
    Ok(())
}

pub fn aggregate(inputs: &[PathBuf], output: &Path) -> Result<(), Failure> {
    let mut curves = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        curves.push(parse_curve_csv::<f64>(&text).map_err(|e| Failure::io(path, e))?);
    }
    write(output, &format_curve_csv(&mean_curve(&curves)))
}

fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::io(dir, e))?;
    let mut frames: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "pgm" || x == "ppm"))
        .collect();
    frames.sort();
    if frames.is_empty() {
        return Err(Failure::Io(format!("{}: no .pgm or .ppm frames", dir.display())));
    }
    Ok(frames)
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn track(store: &Path, frames: &Path, out: Option<&Path>, tuning: &Tuning) -> Result<(), Failure> {
    let det = detector(store, tuning)?;
    let paths = frame_paths(frames)?;
    let mut poses = String::new();
    let mut times = Vec::with_capacity(paths.len());
    let mut found = 0;
    for path in &paths {
        let img = read_image(path)?;
        let start = Instant::now();
        let d = det.detect(&img)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        found += usize::from(d.pose.is_some());
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        poses.push_str(&format!("{name} {}", format_pose(d.pose.as_ref().map(|p| &p.homography))));
    }
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    times.sort_by(f64::total_cmp);
    let summary = format!(
        "frames {}\nposes {found}\nmean_ms {mean:.3}\np95_ms {:.3}\nmax_ms {:.3}\n",
        times.len(),
        percentile(&times, 95.0),
        times[times.len() - 1]
    );
    print!("{poses}");
    eprint!("{summary}");
    if let Some(dir) = out {
        write(&dir.join("poses.txt"), &poses)?;
        write(&dir.join("summary.txt"), &summary)?;
        write(&dir.join("config.txt"), &det.config.echo())?;
    }
    Ok(())
}

pub fn synth_dataset(dir: &Path, subsets: usize, views: usize, size: (usize, usize), seed: u64) -> Result<(), Failure> {
    if subsets == 0 || views == 0 || size.0 < 32 || size.1 < 32 {
        return Err(Failure::Validation("need at least one subset and view and a size of 32x32 or more".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 1..=subsets {
        let sub = dir.join(format!("subset{s}"));
        write_subset::<f64>(&sub, size, views, &mut rng).map_err(|e| Failure::io(&sub, e))?;
    }
    Ok(())
}

pub fn synth_sequence(dir: &Path, frames: usize, seed: u64) -> Result<(), Failure> {
    if frames == 0 {
        return Err(Failure::Validation("need at least one frame".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    write_sequence::<f64>(dir, frames, &mut rng).map_err(|e| Failure::io(dir, e))?;
    Ok(())
}

pub fn describe(image: &Path, tuning: &Tuning) -> Result<(), Failure> {
    let cfg = tuning.apply(Cfg::default())?;
    let store = build_store(image, &cfg, tuning)?;
    let arcs: Vec<_> = store.arcs().iter().copied().zip(store.descriptors().iter().cloned()).collect();
    print!("{}", format_descriptor_dump(&arcs));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentile() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 19.0);
        assert_eq!(percentile(&v, 100.0), 20.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }

    #[test]
    fn flags_override_defaults() {
        let t = Tuning { threshold: Some(0.3), seed: Some(9), structure: Some(Structure::Circuit4), ..Tuning::default() };
        let cfg = t.apply(Cfg::default()).unwrap();
        assert_eq!(cfg.selection.threshold, 0.3);
        assert_eq!((cfg.seed, cfg.ransac.seed), (9, 9));
        assert_eq!(cfg.structure, Structure::Circuit4);
        assert!(Tuning { min_dist: Some(0), ..Tuning::default() }.apply(Cfg::default()).is_err());
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("out/model.kgm")), PathBuf::from("out/model.kgm.config"));
    }
}
