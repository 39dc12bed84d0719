use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::feature::FeatureMap;

/// An RGB image with interleaved channel values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    /// Build from interleaved RGB values. Values must be finite and in `[0, 1]`.
    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Degenerate(format!("image {height}x{width}")));
        }
        if data.len() != height * width * 3 {
            return Err(Error::shape(format!(
                "expected {} values for a {height}x{width} RGB image, got {}",
                height * width * 3,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invariant(format!("pixel value {v} outside [0,1]")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::from_vec(height, width, rgb.repeat(height * width))
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        Self::from_vec(height, width, data)
    }

    pub fn from_rgb8(img: &RgbImage) -> Result<Self> {
        let data = img.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Self::from_vec(img.height() as usize, img.width() as usize, data)
    }

    /// Build from a feature map with exactly three channels, clamping into `[0, 1]`.
    pub fn from_feature_clamped(f: &FeatureMap) -> Result<Self> {
        if f.channels() != 3 {
            return Err(Error::shape(format!(
                "image decode needs 3 channels, got {}",
                f.channels()
            )));
        }
        let (h, w) = (f.height(), f.width());
        let mut data = Vec::with_capacity(h * w * 3);
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    data.push(f.get(c, y, x).clamp(0.0, 1.0));
                }
            }
        }
        Self::from_vec(h, w, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    /// Planar `3 x H x W` copy of the pixels.
    pub fn to_feature(&self) -> FeatureMap {
        FeatureMap::from_fn(3, self.height, self.width, |c, y, x| self.get(y, x, c))
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let raw = self
            .data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::shape(format!(
                "crop {height}x{width}@({top},{left}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Self::from_fn(height, width, |y, x| {
            let o = ((top + y) * self.width + left + x) * 3;
            [self.data[o], self.data[o + 1], self.data[o + 2]]
        })
    }

    /// Read a PNG or binary PPM file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = ImageReader::new(BufReader::new(file))
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?;
        if reader.format().is_none() {
            if let Ok(fmt) = ImageFormat::from_path(path) {
                reader.set_format(fmt);
            }
        }
        match reader.format() {
            Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
            other => {
                return Err(Error::format(
                    "image",
                    format!("{}: unsupported format {other:?}", path.display()),
                ))
            }
        }
        let img = reader.decode()?.to_rgb8();
        Self::from_rgb8(&img)
    }

    /// Write as PNG, or as binary PPM (P6) when the extension is `ppm`/`pnm`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ppm") | Some("pnm") => self.write_ppm(path),
            _ => self.write_png(path),
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let rgb = self.to_rgb8();
        PngEncoder::new(&mut out).write_image(
            rgb.as_raw(),
            rgb.width(),
            rgb.height(),
            ExtendedColorType::Rgb8,
        )?;
        Ok(out)
    }

    fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    fn write_ppm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let rgb = self.to_rgb8();
        PnmEncoder::new(BufWriter::new(file))
            .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
            .write_image(
                rgb.as_raw(),
                rgb.width(),
                rgb.height(),
                ExtendedColorType::Rgb8,
            )?;
        Ok(())
    }
}

/// Place images side by side. Heights must agree.
pub fn stitch_horizontal(images: &[Image]) -> Result<Image> {
    let first = images
        .first()
        .ok_or_else(|| Error::config("no images to stitch"))?;
    let height = first.height();
    if images.iter().any(|i| i.height() != height) {
        return Err(Error::shape("stitched references must share a height"));
    }
    let width: usize = images.iter().map(Image::width).sum();
    let mut data = Vec::with_capacity(height * width * 3);
    for y in 0..height {
        for img in images {
            let row = y * img.width() * 3;
            data.extend_from_slice(&img.data()[row..row + img.width() * 3]);
        }
    }
    Image::from_vec(height, width, data)
}
