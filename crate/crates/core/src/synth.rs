//! Synthetic fixtures: textured images with corner-rich shapes, planar
//! warps, distractors and small datasets on disk.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::image::{Image, ImageError};
use crate::pose::Homography;
use crate::scalar::Scalar;

/// Wavy background covered with `n_shapes` random rectangles, triangles
/// and disks, each shaded by its own linear ramp.
pub fn textured_image<T: Scalar>(width: usize, height: usize, n_shapes: usize, rng: &mut (impl Rng + ?Sized)) -> Image<T> {
    let (w, h) = (width as f64, height as f64);
    let waves: Vec<[f64; 4]> = (0..3)
        .map(|_| [rng.gen_range(8.0..40.0), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(10.0..25.0)])
        .collect();
    let mut buf: Vec<f64> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            110.0 + waves.iter().map(|[period, dir, phase, amp]| amp * ((x * dir.cos() + y * dir.sin()) / period + phase).sin()).sum::<f64>()
        })
        .collect();
    let max_size = (w.max(h) / 4.0).max(10.0);
    for _ in 0..n_shapes {
        let base = rng.gen_range(30.0..225.0);
        let (gx, gy) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let cx = rng.gen_range(0.0..w);
        let cy = rng.gen_range(0.0..h);
        let size = rng.gen_range(8.0..max_size);
        let shade = |x: f64, y: f64| base + gx * (x - cx) + gy * (y - cy);
        let canvas = Canvas { buf: &mut buf, width, height };
        match rng.gen_range(0..3) {
            0 => {
                let (hw, hh) = (size / 2.0, rng.gen_range(0.4..1.0) * size / 2.0);
                canvas.fill([cx - hw, cy - hh, cx + hw, cy + hh], shade, |x, y| (x - cx).abs() <= hw && (y - cy).abs() <= hh);
            }
            1 => {
                let pts: Vec<(f64, f64)> = (0..3)
                    .map(|_| (cx + rng.gen_range(-size..size), cy + rng.gen_range(-size..size)))
                    .collect();
                canvas.fill([cx - size, cy - size, cx + size, cy + size], shade, |x, y| in_triangle(&pts, x, y));
            }
            _ => {
                let r = size / 2.0;
                canvas.fill([cx - r, cy - r, cx + r, cy + r], shade, |x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r);
            }
        }
    }
    Image::new(width, height, buf.into_iter().map(T::lit).collect()).expect("non-empty")
}

struct Canvas<'a> {
    buf: &'a mut [f64],
    width: usize,
    height: usize,
}

/// Subsamples per pixel side when rendering shape coverage.
const SUPERSAMPLE: usize = 4;

impl Canvas<'_> {
    /// Blends a shape over the pixels of `bbox` by its area coverage, so
    /// edges and corners sit at sub-pixel positions.
    fn fill(self, bbox: [f64; 4], shade: impl Fn(f64, f64) -> f64, inside: impl Fn(f64, f64) -> bool) {
        let lo = |v: f64| (v - 1.0).floor().max(0.0) as usize;
        let (x0, y0) = (lo(bbox[0]), lo(bbox[1]));
        let x1 = ((bbox[2] + 1.0).ceil().max(0.0) as usize).min(self.width.saturating_sub(1));
        let y1 = ((bbox[3] + 1.0).ceil().max(0.0) as usize).min(self.height.saturating_sub(1));
        let n = SUPERSAMPLE as f64;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (fx, fy) = (x as f64, y as f64);
                let mut hits = 0usize;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let ox = (sx as f64 + 0.5) / n - 0.5;
                        let oy = (sy as f64 + 0.5) / n - 0.5;
                        hits += usize::from(inside(fx + ox, fy + oy));
                    }
                }
                if hits > 0 {
                    let cover = hits as f64 / (n * n);
                    let px = &mut self.buf[y * self.width + x];
                    *px = *px * (1.0 - cover) + shade(fx, fy).clamp(0.0, 255.0) * cover;
                }
            }
        }
    }
}

fn in_triangle(t: &[(f64, f64)], x: f64, y: f64) -> bool {
    let s = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
    let (d0, d1, d2) = (s(t[0], t[1]), s(t[1], t[2]), s(t[2], t[0]));
    (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
}

/// Renders `src` seen through `h` (source to output coordinates) into a
/// `width` x `height` canvas by inverse mapping with bilinear sampling.
/// Pixels with no preimage in `src` take the matching `background` pixel.
pub fn warp_onto<T: Scalar>(src: &Image<T>, h: &Homography<T>, background: &Image<T>) -> Image<T> {
    let inv = h.inverse().expect("invertible homography");
    Image::from_fn(background.width(), background.height(), |x, y| {
        let (sx, sy) = inv.apply(T::from_int(x as i64), T::from_int(y as i64));
        src.sample_bilinear(sx, sy).unwrap_or_else(|| background.get(x, y))
    })
    .expect("non-empty")
}

/// Like [`warp_onto`] over a constant background.
pub fn warp_image<T: Scalar>(src: &Image<T>, h: &Homography<T>, width: usize, height: usize, fill: T) -> Image<T> {
    let bg = Image::filled(width, height, fill).expect("non-empty");
    warp_onto(src, h, &bg)
}

/// Paints `count` small random squares, each contributing corners that do
/// not belong to any model.
pub fn add_distractors<T: Scalar>(img: &mut Image<T>, count: usize, rng: &mut (impl Rng + ?Sized)) {
    let (w, h) = (img.width(), img.height());
    for _ in 0..count {
        let side = rng.gen_range(4..9usize).min(w).min(h);
        let x0 = rng.gen_range(0..=w - side);
        let y0 = rng.gen_range(0..=h - side);
        let v = T::lit(rng.gen_range(0.0..255.0));
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                img.set(x, y, v);
            }
        }
    }
}

/// Uniform i.i.d. noise in `[0, 255]`.
pub fn noise_image<T: Scalar>(width: usize, height: usize, rng: &mut (impl Rng + ?Sized)) -> Image<T> {
    Image::from_fn(width, height, |_, _| T::lit(rng.gen_range(0.0..255.0))).expect("non-empty")
}

/// A mild random perspective map taking a `mw` x `mh` model into the
/// middle of a `sw` x `sh` scene: rotation up to `max_angle` radians,
/// scale in `[0.8, 1.2]` and a small projective tilt.
pub fn random_homography<T: Scalar>(
    mw: usize,
    mh: usize,
    sw: usize,
    sh: usize,
    max_angle: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Homography<T> {
    let angle = rng.gen_range(-max_angle..=max_angle);
    let scale = rng.gen_range(0.8..1.2);
    let (c, s) = (scale * angle.cos(), scale * angle.sin());
    let (mcx, mcy) = (mw as f64 / 2.0, mh as f64 / 2.0);
    let (scx, scy) = (
        sw as f64 / 2.0 + rng.gen_range(-0.1..0.1) * sw as f64,
        sh as f64 / 2.0 + rng.gen_range(-0.1..0.1) * sh as f64,
    );
    let (g, k) = (rng.gen_range(-4e-4..4e-4), rng.gen_range(-4e-4..4e-4));
    // Similarity about the model center, then a tilt about the scene
    // center that leaves the center fixed.
    let sim = [c, -s, scx - c * mcx + s * mcy, s, c, scy - s * mcx - c * mcy, 0.0, 0.0, 1.0];
    let to_origin = [1.0, 0.0, -scx, 0.0, 1.0, -scy, 0.0, 0.0, 1.0];
    let back = [1.0, 0.0, scx, 0.0, 1.0, scy, 0.0, 0.0, 1.0];
    let tilt = mul(&back, &mul(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, g, k, 1.0], &to_origin));
    let m = mul(&tilt, &sim);
    Homography::from_matrix(m.map(T::lit)).expect("invertible")
}

fn mul(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    std::array::from_fn(|i| {
        let (r, c) = (i / 3, i % 3);
        (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum()
    })
}

/// One synthetic dataset subset: `img1` is the reference and `img2..` are
/// warped views on fresh textured backgrounds with distractors. Writes
/// `img{k}.pgm` and `H1to{k}p` (the map from `img1` to `img{k}`).
pub fn write_subset<T: Scalar>(
    dir: &Path,
    size: (usize, usize),
    views: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<Homography<T>>, ImageError> {
    fs::create_dir_all(dir)?;
    let (w, h) = size;
    let reference: Image<T> = textured_image(w, h, 40, rng);
    reference.write_pgm(dir.join("img1.pgm"))?;
    let mut out = Vec::new();
    for k in 2..=views + 1 {
        let hk: Homography<T> = random_homography(w, h, w, h, 0.3, rng);
        let bg: Image<T> = textured_image(w, h, 25, rng);
        let mut view = warp_onto(&reference, &hk, &bg);
        add_distractors(&mut view, 20, rng);
        view.write_pgm(dir.join(format!("img{k}.pgm")))?;
        fs::write(dir.join(format!("H1to{k}p")), homography_text(&hk))?;
        out.push(hk);
    }
    Ok(out)
}

/// A tracking fixture: `model.pgm`, frames `frames/frame{t:03}.pgm` showing
/// the model drifting, turning and scaling over a fixed textured
/// background, and `truth.txt` with one row-major pose per frame.
pub fn write_sequence<T: Scalar>(dir: &Path, frames: usize, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<Homography<T>>, ImageError> {
    let frame_dir = dir.join("frames");
    fs::create_dir_all(&frame_dir)?;
    let (mw, mh) = (240usize, 180usize);
    let model: Image<T> = textured_image(mw, mh, 100, rng);
    model.write_pgm(dir.join("model.pgm"))?;
    let background: Image<T> = textured_image(640, 480, 40, rng);
    let mut truth = String::new();
    let mut out = Vec::new();
    for t in 0..frames {
        let phase = t as f64 / frames.max(1) as f64;
        let turn = std::f64::consts::TAU * phase;
        let angle = 0.2 * turn.sin();
        let scale = 1.0 + 0.1 * turn.cos();
        let (cx, cy) = (220.0 + 200.0 * phase, 220.0 + 40.0 * turn.sin());
        let (c, s) = (scale * angle.cos(), scale * angle.sin());
        let (mcx, mcy) = (mw as f64 / 2.0, mh as f64 / 2.0);
        let m = [c, -s, cx - c * mcx + s * mcy, s, c, cy - s * mcx - c * mcy, 0.0, 0.0, 1.0];
        let h = Homography::from_matrix(m.map(T::lit)).expect("similarity");
        warp_onto(&model, &h, &background).write_pgm(frame_dir.join(format!("frame{t:03}.pgm")))?;
        truth.push_str(&homography_text(&h).replace('\n', " ").trim_end());
        truth.push('\n');
        out.push(h);
    }
    fs::write(dir.join("truth.txt"), truth)?;
    Ok(out)
}

/// Three rows of three reals, full precision.
pub fn homography_text<T: Scalar>(h: &Homography<T>) -> String {
    let m = h.matrix();
    (0..3).map(|r| format!("{} {} {}\n", m[3 * r], m[3 * r + 1], m[3 * r + 2])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn textured_image_is_deterministic_and_in_range() {
        let a: Image<f64> = textured_image(80, 60, 10, &mut ChaCha8Rng::seed_from_u64(1));
        let b: Image<f64> = textured_image(80, 60, 10, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| (0.0..=255.0).contains(v)));
    }

    #[test]
    fn identity_warp_is_lossless() {
        let a: Image<f64> = textured_image(50, 40, 8, &mut ChaCha8Rng::seed_from_u64(2));
        let w = warp_image(&a, &Homography::identity(), 50, 40, 0.0);
        for (x, y) in a.data().iter().zip(w.data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn random_homography_keeps_model_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let h: Homography<f64> = random_homography(160, 120, 640, 480, 0.5, &mut rng);
            for (x, y) in [(0.0, 0.0), (159.0, 0.0), (159.0, 119.0), (0.0, 119.0)] {
                let (u, v) = h.apply(x, y);
                assert!((0.0..640.0).contains(&u) && (0.0..480.0).contains(&v));
            }
        }
    }
}
