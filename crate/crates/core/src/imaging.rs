//! Grayscale frame helpers: RoI resampling and PGM I/O.

use std::io::Write;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
pub use image::GrayImage;
use image::{ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Floating-point grayscale patch, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayPatch {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayPatch {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: format!("{width}x{height}"),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Bilinear sample with replicated borders; `(x, y)` in pixel-center coordinates.
#[inline]
fn sample_bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let ax = fx - x0;
    let ay = fy - y0;
    let px = |xi: i64, yi: i64| -> f64 {
        let xc = xi.clamp(0, w - 1) as u32;
        let yc = yi.clamp(0, h - 1) as u32;
        img.get_pixel(xc, yc)[0] as f64
    };
    let (x0, y0) = (x0 as i64, y0 as i64);
    let top = px(x0, y0) * (1.0 - ax) + px(x0 + 1, y0) * ax;
    let bottom = px(x0, y0 + 1) * (1.0 - ax) + px(x0 + 1, y0 + 1) * ax;
    top * (1.0 - ay) + bottom * ay
}

/// Resamples the `roi_w`×`roi_h` pixel region centered on `center` into an
/// `out_w`×`out_h` patch.
pub fn crop_resample(
    img: &GrayImage,
    center: Point2,
    roi_w: f64,
    roi_h: f64,
    out_w: usize,
    out_h: usize,
) -> GrayPatch {
    let sx = roi_w / out_w as f64;
    let sy = roi_h / out_h as f64;
    let x0 = center.u - roi_w / 2.0;
    let y0 = center.v - roi_h / 2.0;
    GrayPatch::from_fn(out_w, out_h, |i, j| {
        sample_bilinear(img, x0 + (i as f64 + 0.5) * sx, y0 + (j as f64 + 0.5) * sy)
    })
}

/// Writes a binary (`P5`) graymap.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?;
    Ok(img.into_luma8())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_resample_reproduces_pixels() {
        let img = GrayImage::from_fn(8, 6, |x, y| image::Luma([(x * 10 + y) as u8]));
        let p = crop_resample(&img, Point2::new(4.0, 3.0), 8.0, 6.0, 8, 6);
        for y in 0..6 {
            for x in 0..8 {
                assert!((p.get(x, y) - (x * 10 + y) as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn borders_are_replicated() {
        let img = GrayImage::from_pixel(4, 4, image::Luma([77]));
        let p = crop_resample(&img, Point2::new(-20.0, -20.0), 10.0, 10.0, 5, 5);
        assert!(p.data.iter().all(|&v| (v - 77.0).abs() < 1e-12));
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let img = GrayImage::from_fn(7, 5, |x, y| image::Luma([(x * 31 + y * 7) as u8]));
        save_pgm(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], b"P5");
        assert_eq!(load_pgm(&path).unwrap(), img);
    }
}
