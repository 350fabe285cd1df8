use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("png encoding failed: {0}")]
    Encode(#[from] png::EncodingError),
}

/// 8-bit RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height * 3] }
    }

    pub fn set(&mut self, col: usize, row: usize, rgb: [f64; 3]) {
        let i = (row * self.width + col) * 3;
        for (k, v) in rgb.into_iter().enumerate() {
            self.data[i + k] = quantize(v);
        }
    }

    pub fn pixel(&self, col: usize, row: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header()?;
            w.write_image_data(&self.data)?;
        }
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let io = |source| ImageError::Io { path: path.to_path_buf(), source };
        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        let bytes = self.to_png()?;
        std::io::Write::write_all(&mut w, &bytes).map_err(io)?;
        Ok(())
    }

    /// Places frames side by side.
    pub fn hstack(frames: &[Image]) -> Image {
        let h = frames.iter().map(|f| f.height).max().unwrap_or(0);
        let w: usize = frames.iter().map(|f| f.width).sum();
        let mut out = Image::new(w, h);
        let mut x0 = 0;
        for f in frames {
            for row in 0..f.height {
                let src = &f.data[row * f.width * 3..(row + 1) * f.width * 3];
                let dst = (row * w + x0) * 3;
                out.data[dst..dst + src.len()].copy_from_slice(src);
            }
            x0 += f.width;
        }
        out
    }
}
