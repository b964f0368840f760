//! PNG import/export.
//!
//! 8-bit samples are divided by 255, 16-bit by 65535; grayscale maps to one
//! channel, RGB to three. Images with an alpha channel are rejected rather
//! than silently dropped. Export quantizes to 8 bits.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::io::atomic_write;

pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            let data = buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Image::new(h as usize, w as usize, 1, data)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            let data = buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            Image::new(h as usize, w as usize, 1, data)
        }
        DynamicImage::ImageRgb8(buf) => {
            let (w, h) = buf.dimensions();
            let data = buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Image::new(h as usize, w as usize, 3, data)
        }
        DynamicImage::ImageRgb16(buf) => {
            let (w, h) = buf.dimensions();
            let data = buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            Image::new(h as usize, w as usize, 3, data)
        }
        DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgba8(_)
        | DynamicImage::ImageRgba16(_) => Err(Error::format(
            path,
            "PNG with alpha channel is not supported",
        )),
        other => Err(Error::format(
            path,
            format!("unsupported PNG color type {:?}", other.color()),
        )),
    }
}

/// Writes an 8-bit PNG (grayscale or RGB to match the image), atomically.
pub fn save_png(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let quantize = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let w = img.width() as u32;
    let h = img.height() as u32;
    let raw: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let dynamic = if img.channels() == 1 {
        DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, raw).expect("buffer sized from image"),
        )
    } else {
        DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, raw).expect("buffer sized from image"),
        )
    };
    let mut bytes = Vec::new();
    dynamic
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}
