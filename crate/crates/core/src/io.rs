//! Image and mask files.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{to_grayscale, BinaryMask, ColorRaster, Raster, ScoreMap};

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Converts any decoded image to a luma raster in `[0, 1]`. Alpha is
/// ignored.
pub fn image_to_raster(img: &DynamicImage) -> Result<Raster> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            Raster::from_u8(w, h, img.to_luma8().as_raw())
        }
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => Raster::new(
            w,
            h,
            img.to_luma16()
                .as_raw()
                .iter()
                .map(|&v| v as f32 / 65535.0)
                .collect(),
        ),
        _ => {
            let rgb = img.to_rgb32f();
            to_grayscale(&ColorRaster {
                width: w,
                height: h,
                channels: 3,
                data: rgb.into_raw(),
            })
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Raster> {
    image_to_raster(&open(path.as_ref())?)
}

/// Loads a ground-truth mask: any nonzero luma is crack.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = open(path.as_ref())?.to_luma8();
    BinaryMask::from_nonzero(img.width() as usize, img.height() as usize, img.as_raw())
}

/// 8-bit intensities `round(v * 255)`.
pub fn raster_to_u8(r: &Raster) -> Vec<u8> {
    r.data().iter().map(|&v| (v * 255.0).round() as u8).collect()
}

fn gray_image(r: &Raster) -> GrayImage {
    ImageBuffer::<Luma<u8>, _>::from_raw(r.width() as u32, r.height() as u32, raster_to_u8(r))
        .expect("buffer matches dimensions")
}

fn write_image(img: &DynamicImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Encodes an 8-bit grayscale PNG of the raster in memory.
pub fn encode_png(r: &Raster) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    DynamicImage::ImageLuma8(gray_image(r))
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: "<memory>".into(),
            message: e.to_string(),
        })?;
    Ok(out.into_inner())
}

pub fn save_png(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    write_image(&DynamicImage::ImageLuma8(gray_image(r)), path.as_ref())
}

pub fn save_mask_png(m: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    save_png(&m.to_raster(), path)
}

/// Image in gray with the confidence map blended in red.
pub fn overlay(image: &Raster, confidence: &ScoreMap) -> Result<RgbImage> {
    crate::raster::ensure_same_dims(image.dims(), confidence.dims())?;
    let px: Vec<u8> = image
        .data()
        .iter()
        .zip(confidence.data())
        .flat_map(|(&g, &a)| {
            let r = (1.0 - a) * g + a;
            let gb = (1.0 - a) * g;
            [r, gb, gb].map(|v| (v * 255.0).round() as u8)
        })
        .collect();
    Ok(ImageBuffer::<Rgb<u8>, _>::from_raw(image.width() as u32, image.height() as u32, px)
        .expect("buffer matches dimensions"))
}

pub fn encode_overlay_png(image: &Raster, confidence: &ScoreMap) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    DynamicImage::ImageRgb8(overlay(image, confidence)?)
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: "<memory>".into(),
            message: e.to_string(),
        })?;
    Ok(out.into_inner())
}

pub fn save_overlay(image: &Raster, confidence: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    write_image(&DynamicImage::ImageRgb8(overlay(image, confidence)?), path.as_ref())
}
