//! Cover images: PNG in and out, random crop + bilinear resize, grayscale.

use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Channel-major `C×H×W` pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl RasterImage {
    pub fn new(channels: usize, height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive".into()));
        }
        if pixels.len() != channels * height * width {
            return Err(Error::LengthMismatch {
                op: "RasterImage::new",
                expected: channels * height * width,
                actual: pixels.len(),
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            channels,
            height,
            width,
            pixels,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(channels, height, width, vec![value; channels * height * width])
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.pixels[(c * self.height + y) * self.width + x]
    }

    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::new(
            &[self.channels, self.height, self.width],
            self.pixels.iter().map(|&v| T::lit(v)).collect(),
        )
        .expect("image dimensions are positive and consistent")
    }

    /// Values are clamped into `[0, 1]`.
    pub fn from_tensor<T: Scalar>(t: &Tensor<T>) -> Result<Self> {
        let (c, h, w) = t.chw()?;
        Self::new(c, h, w, t.data().iter().map(|v| v.as_f64().clamp(0.0, 1.0)).collect())
    }

    /// `round(v·255)` per sample, channel-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_bytes(channels: usize, height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(channels, height, width, bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Loads an 8-bit (or lower) grayscale or RGB PNG; alpha is dropped and
/// palettes are expanded. 16-bit files are rejected.
pub fn load_png(path: &Path) -> Result<RasterImage> {
    let unsupported = |reason: String| Error::UnsupportedImage {
        path: path.to_path_buf(),
        reason,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::Png(format!("{}: {e}", path.display())))?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(unsupported("16-bit samples are not supported".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| unsupported("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(format!("{}: {e}", path.display())))?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(format!("unexpected bit depth {:?}", frame.bit_depth)));
    }
    let (stride, keep) = match frame.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        other => return Err(unsupported(format!("colour type {other:?}"))),
    };
    let (h, w) = (frame.height as usize, frame.width as usize);
    let mut pixels = vec![0.0; keep * h * w];
    for y in 0..h {
        let row = &buf[y * frame.line_size..];
        for x in 0..w {
            for c in 0..keep {
                pixels[(c * h + y) * w + x] = row[x * stride + c] as f64 / 255.0;
            }
        }
    }
    RasterImage::new(keep, h, w, pixels)
}

/// Writes 8-bit grayscale or RGB, quantizing with `round(v·255)`.
pub fn save_png(image: &RasterImage, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), image.width as u32, image.height as u32);
    enc.set_color(if image.channels == 1 {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    });
    enc.set_depth(png::BitDepth::Eight);
    let (c, h, w) = (image.channels, image.height, image.width);
    let mut data = vec![0u8; c * h * w];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                data[(y * w + x) * c + ch] = quantize(image.at(ch, y, x));
            }
        }
    }
    let png_err = |e: png::EncodingError| Error::Png(format!("{}: {e}", path.display()));
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

/// Bilinear resize with half-pixel centres and edge clamping.
pub fn resize_bilinear(image: &RasterImage, out_h: usize, out_w: usize) -> Result<RasterImage> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument("resize target must be positive".into()));
    }
    let (c, h, w) = (image.channels, image.height, image.width);
    let axis = |o: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        let src = ((o as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, src - i0 as f64)
    };
    let mut pixels = Vec::with_capacity(c * out_h * out_w);
    for ch in 0..c {
        for oy in 0..out_h {
            let (y0, y1, fy) = axis(oy, h, out_h);
            for ox in 0..out_w {
                let (x0, x1, fx) = axis(ox, w, out_w);
                let top = image.at(ch, y0, x0) * (1.0 - fx) + image.at(ch, y0, x1) * fx;
                let bottom = image.at(ch, y1, x0) * (1.0 - fx) + image.at(ch, y1, x1) * fx;
                pixels.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
            }
        }
    }
    RasterImage::new(c, out_h, out_w, pixels)
}

pub fn crop(image: &RasterImage, top: usize, left: usize, size: usize) -> Result<RasterImage> {
    if top + size > image.height || left + size > image.width || size == 0 {
        return Err(Error::InvalidArgument(format!(
            "crop {size}x{size} at ({top}, {left}) exceeds {}x{} image",
            image.height, image.width
        )));
    }
    let mut pixels = Vec::with_capacity(image.channels * size * size);
    for c in 0..image.channels {
        for y in top..top + size {
            let start = (c * image.height + y) * image.width + left;
            pixels.extend_from_slice(&image.pixels[start..start + size]);
        }
    }
    RasterImage::new(image.channels, size, size, pixels)
}

/// Uniform random `crop×crop` window, resized to `out×out`.
pub fn random_crop_resize<R: Rng + ?Sized>(
    image: &RasterImage,
    crop_size: usize,
    out: usize,
    rng: &mut R,
) -> Result<RasterImage> {
    if image.height < crop_size || image.width < crop_size {
        return Err(Error::InvalidArgument(format!(
            "{}x{} image is smaller than the {crop_size}x{crop_size} crop",
            image.height, image.width
        )));
    }
    let top = rng.random_range(0..=image.height - crop_size);
    let left = rng.random_range(0..=image.width - crop_size);
    let patch = crop(image, top, left, crop_size)?;
    if crop_size == out {
        Ok(patch)
    } else {
        resize_bilinear(&patch, out, out)
    }
}

/// BT.601 luma; single-channel input is returned unchanged.
pub fn to_grayscale(image: &RasterImage) -> RasterImage {
    if image.channels == 1 {
        return image.clone();
    }
    let n = image.height * image.width;
    let (r, rest) = image.pixels.split_at(n);
    let (g, b) = rest.split_at(n);
    let pixels = (0..n)
        .map(|i| (0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]).clamp(0.0, 1.0))
        .collect();
    RasterImage {
        channels: 1,
        height: image.height,
        width: image.width,
        pixels,
    }
}

/// `*.png` files directly inside `dir`, sorted by file name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every PNG in `dir` (sorted by name), crops and resizes each to
/// `out×out`, optionally converting to grayscale. Crop offsets come from one
/// seeded stream consumed in file order.
pub fn load_cover_dir(
    dir: &Path,
    crop_size: usize,
    out: usize,
    grayscale: bool,
    seed: u64,
) -> Result<Vec<RasterImage>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = list_pngs(dir)?;
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no PNG files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let img = load_png(p)?;
            let img = if grayscale { to_grayscale(&img) } else { img };
            let side = crop_size.min(img.height).min(img.width);
            random_crop_resize(&img, side, out, &mut rng)
        })
        .collect()
}

/// Smooth procedural covers: per-channel base level and gradient plus a few
/// Gaussian blobs and mild texture. Stand-ins for natural photographs.
pub fn synthetic_cover<R: Rng + ?Sized>(channels: usize, height: usize, width: usize, rng: &mut R) -> RasterImage {
    let mut pixels = vec![0.0; channels * height * width];
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.08..0.25) * width.max(height) as f64,
                [
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                ],
            )
        })
        .collect();
    for c in 0..channels {
        let base: f64 = rng.random_range(0.2..0.8);
        let gx: f64 = rng.random_range(-0.3..0.3);
        let gy: f64 = rng.random_range(-0.3..0.3);
        let freq: f64 = rng.random_range(0.2..0.6);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        for y in 0..height {
            for x in 0..width {
                let (fx, fy) = (x as f64, y as f64);
                let mut v = base + gx * (fx / width as f64 - 0.5) + gy * (fy / height as f64 - 0.5);
                for &(bx, by, r, amp) in &blobs {
                    let d2 = (fx - bx).powi(2) + (fy - by).powi(2);
                    v += amp[c % 3] * (-d2 / (2.0 * r * r)).exp();
                }
                v += 0.03 * (freq * fx + phase).sin() * (freq * fy).cos();
                pixels[(c * height + y) * width + x] = v.clamp(0.0, 1.0);
            }
        }
    }
    RasterImage {
        channels,
        height,
        width,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_within_half_step() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in [1, 3] {
            let img = RasterImage::new(c, 5, 7, (0..c * 35).map(|_| rng.random()).collect()).unwrap();
            let path = dir.path().join(format!("x{c}.png"));
            save_png(&img, &path).unwrap();
            let back = load_png(&path).unwrap();
            assert_eq!((back.channels, back.height, back.width), (c, 5, 7));
            for (a, b) in img.pixels.iter().zip(&back.pixels) {
                assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
            }
        }
    }

    #[test]
    fn black_png_loads_as_zeros_and_sixteen_bit_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("black.png");
        save_png(&RasterImage::filled(3, 4, 4, 0.0).unwrap(), &p).unwrap();
        assert!(load_png(&p).unwrap().pixels.iter().all(|&v| v == 0.0));

        let p16 = dir.path().join("deep.png");
        let file = std::fs::File::create(&p16).unwrap();
        let mut enc = png::Encoder::new(file, 2, 2);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[0u8; 8]).unwrap();
        w.finish().unwrap();
        assert!(matches!(load_png(&p16), Err(Error::UnsupportedImage { .. })));
    }

    #[test]
    fn rgba_alpha_is_stripped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let file = std::fs::File::create(&p).unwrap();
        let mut enc = png::Encoder::new(file, 1, 1);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[255, 0, 51, 7]).unwrap();
        w.finish().unwrap();
        let img = load_png(&p).unwrap();
        assert_eq!(img.channels, 3);
        assert_eq!(img.pixels, vec![1.0, 0.0, 0.2]);
    }

    #[test]
    fn checkerboard_centre_is_half() {
        let img = RasterImage::new(1, 2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = resize_bilinear(&img, 3, 3).unwrap();
        assert!((out.at(0, 1, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resize_keeps_constants_and_identity() {
        let img = RasterImage::filled(3, 6, 9, 0.37).unwrap();
        let out = resize_bilinear(&img, 4, 13).unwrap();
        assert!(out.pixels.iter().all(|&v| (v - 0.37).abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = RasterImage::new(1, 5, 5, (0..25).map(|_| rng.random()).collect()).unwrap();
        assert_eq!(resize_bilinear(&r, 5, 5).unwrap(), r);
    }

    #[test]
    fn crop_resize_is_seeded_and_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = synthetic_cover(3, 40, 30, &mut rng);
        let a = random_crop_resize(&img, 24, 32, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_crop_resize(&img, 24, 32, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.height, a.width), (32, 32));
        assert!(random_crop_resize(&img, 31, 32, &mut rng).is_err());
        let exact = RasterImage::filled(1, 8, 8, 0.5).unwrap();
        assert_eq!(random_crop_resize(&exact, 8, 8, &mut rng).unwrap(), exact);
    }

    #[test]
    fn grayscale_weights() {
        let white = RasterImage::filled(3, 1, 1, 1.0).unwrap();
        assert!((to_grayscale(&white).pixels[0] - 1.0).abs() < 1e-12);
        let red = RasterImage::new(3, 1, 1, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((to_grayscale(&red).pixels[0] - 0.299).abs() < 1e-12);
        let g = RasterImage::filled(1, 2, 2, 0.3).unwrap();
        assert_eq!(to_grayscale(&g), g);
    }

    #[test]
    fn cover_dir_is_sorted_by_name() {
        let dir = tempfile::tempdir().unwrap();
        for (name, v) in [("b.png", 0.2), ("a.png", 0.6), ("c.txt", 0.0)] {
            let p = dir.path().join(name);
            if name.ends_with(".png") {
                save_png(&RasterImage::filled(3, 8, 8, v).unwrap(), &p).unwrap();
            } else {
                std::fs::write(&p, "x").unwrap();
            }
        }
        let covers = load_cover_dir(dir.path(), 8, 4, false, 0).unwrap();
        assert_eq!(covers.len(), 2);
        assert!((covers[0].pixels[0] - 0.6).abs() < 1e-2);
        assert!((covers[1].pixels[0] - 0.2).abs() < 1e-2);
    }
}
