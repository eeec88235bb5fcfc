//! Grayscale raster and binary PGM/PPM reading and writing.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::geometry::Point;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image must have at least one pixel (got {width}x{height})")]
    Empty { width: usize, height: usize },
    #[error("expected {expected} pixel values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("malformed PNM header: {0}")]
    Header(String),
    #[error("unsupported PNM format {0:?}; expected P5 or P6")]
    UnsupportedFormat(String),
    #[error("PNM pixel data truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("rectangle {x},{y} {w}x{h} is outside the {width}x{height} image")]
    RectOutOfBounds { x: usize, y: usize, w: usize, h: usize, width: usize, height: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Row-major grayscale image with intensities nominally in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::SizeMismatch { expected: width * height, got: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self, ImageError> {
        Self::new(width, height, bytes.iter().map(|&b| T::from_int(i64::from(b))).collect())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel with coordinates clamped into the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> T {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.get(cx, cy)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Bilinear sample at a real position; `None` outside the pixel grid.
    pub fn sample_bilinear(&self, x: T, y: T) -> Option<T> {
        let max_x = T::from_int(self.width as i64 - 1);
        let max_y = T::from_int(self.height as i64 - 1);
        if !(x >= T::zero() && y >= T::zero() && x <= max_x && y <= max_y) {
            return None;
        }
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0.to_usize()?, y0.to_usize()?);
        let xj = (xi + 1).min(self.width - 1);
        let yj = (yi + 1).min(self.height - 1);
        let one = T::one();
        let top = self.get(xi, yi) * (one - fx) + self.get(xj, yi) * fx;
        let bottom = self.get(xi, yj) * (one - fx) + self.get(xj, yj) * fx;
        Some(top * (one - fy) + bottom * fy)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self, ImageError> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(ImageError::RectOutOfBounds { x, y, w, h, width: self.width, height: self.height });
        }
        Self::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }

    /// Rotates by 90 degrees clockwise on screen: pixel `(x, y)` moves to
    /// `(height - 1 - y, x)`.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |nx, ny| self.get(ny, h - 1 - nx)).expect("non-empty")
    }

    /// Intensities rounded and clamped to bytes.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| v.as_f64().round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn convert<U: Scalar>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn read_pnm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let bytes = fs::read(path)?;
        Self::decode_pnm(&bytes)
    }

    /// Decodes binary PGM (P5) or PPM (P6). Color is converted to luma with
    /// integer BT.601 weights `(299 R + 587 G + 114 B + 500) / 1000`.
    pub fn decode_pnm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut cursor = 0usize;
        let magic = next_token(bytes, &mut cursor)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            _ => return Err(ImageError::UnsupportedFormat(magic)),
        };
        let width = parse_header_number(bytes, &mut cursor, "width")?;
        let height = parse_header_number(bytes, &mut cursor, "height")?;
        let maxval = parse_header_number(bytes, &mut cursor, "maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(ImageError::Header(format!("maxval {maxval} not in 1..=255")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        cursor += 1;
        let expected = width * height * channels;
        let raster = bytes.get(cursor..).unwrap_or(&[]);
        if raster.len() < expected {
            return Err(ImageError::Truncated { expected, got: raster.len() });
        }
        let raster = &raster[..expected];
        let scale = |v: u32| -> u32 {
            if maxval == 255 {
                v
            } else {
                (v * 255 + maxval as u32 / 2) / maxval as u32
            }
        };
        let gray: Vec<u8> = if channels == 1 {
            raster.iter().map(|&v| scale(u32::from(v)) as u8).collect()
        } else {
            raster
                .chunks_exact(3)
                .map(|px| {
                    let (r, g, b) = (u32::from(px[0]), u32::from(px[1]), u32::from(px[2]));
                    scale((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
                })
                .collect()
        };
        Self::from_u8(width, height, &gray)
    }

    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_u8());
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        f.write_all(&self.encode_pgm())?;
        f.flush()?;
        Ok(())
    }
}

fn next_token(bytes: &[u8], cursor: &mut usize) -> Result<String, ImageError> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    if start == *cursor {
        return Err(ImageError::Header("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*cursor]).into_owned())
}

fn parse_header_number(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<usize, ImageError> {
    let tok = next_token(bytes, cursor)?;
    tok.parse()
        .map_err(|_| ImageError::Header(format!("invalid {what} {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    type Img = Image<f64>;

    #[test]
    fn pgm_round_trip_with_comment() {
        let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        bytes.extend([0u8, 10, 20, 30, 40, 255]);
        let img = Img::decode_pnm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.get(2, 1), 255.0);
        let again = Img::decode_pnm(&img.encode_pgm()).unwrap();
        assert_eq!(img, again);
    }

    #[test]
    fn ppm_uses_integer_luma() {
        let mut bytes = b"P6 2 1 255\n".to_vec();
        bytes.extend([255u8, 0, 0, 10, 200, 30]);
        let img = Img::decode_pnm(&bytes).unwrap();
        assert_eq!(img.get(0, 0), ((299 * 255 + 500) / 1000) as f64);
        assert_eq!(img.get(1, 0), ((299 * 10 + 587 * 200 + 114 * 30 + 500) / 1000) as f64);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Img::decode_pnm(b"P2 1 1 255\n0"), Err(ImageError::UnsupportedFormat(_))));
        assert!(matches!(Img::decode_pnm(b"P5 2 2 255\n\x00"), Err(ImageError::Truncated { .. })));
        assert!(matches!(Img::decode_pnm(b"P5 0 2 255\n"), Err(ImageError::Empty { .. })));
        assert!(matches!(Img::new(2, 2, vec![0.0; 3]), Err(ImageError::SizeMismatch { .. })));
    }

    #[test]
    fn crop_and_rotate() {
        let img = Img::from_fn(4, 3, |x, y| (10 * y + x) as f64).unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.data(), &[11.0, 12.0, 21.0, 22.0]);
        assert!(img.crop(3, 0, 2, 1).is_err());
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (3, 4));
        // (x, y) -> (h - 1 - y, x)
        assert_eq!(r.get(3 - 1 - 1, 2), img.get(2, 1));
    }

    #[test]
    fn bilinear_sampling() {
        let img = Img::from_fn(2, 2, |x, y| (x * 10 + y * 20) as f64).unwrap();
        assert_eq!(img.sample_bilinear(0.5, 0.5), Some(15.0));
        assert_eq!(img.sample_bilinear(1.0, 1.0), Some(30.0));
        assert_eq!(img.sample_bilinear(1.5, 0.0), None);
    }
}
