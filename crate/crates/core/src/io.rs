//! PNG and `.npy` helpers. Intensities are `[0,1]` floats in memory and
//! 8-bit (or 16-bit on read) on disk.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, Luma, Rgb, RgbImage};
use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::mask::Mask;

/// Decoded image before any channel reduction, laid out `(height, width, channels)`.
pub fn read_png(path: &Path) -> Result<Array3<f32>> {
    let img = ImageReader::open(path)?.with_guessed_format()?.decode()?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let arr = match img {
        DynamicImage::ImageLuma8(buf) => {
            Array3::from_shape_fn((h, w, 1), |(r, c, _)| buf.get_pixel(c as u32, r as u32)[0] as f32 / 255.0)
        }
        DynamicImage::ImageLuma16(buf) => {
            Array3::from_shape_fn((h, w, 1), |(r, c, _)| buf.get_pixel(c as u32, r as u32)[0] as f32 / 65535.0)
        }
        DynamicImage::ImageRgb8(buf) => {
            Array3::from_shape_fn((h, w, 3), |(r, c, k)| buf.get_pixel(c as u32, r as u32)[k] as f32 / 255.0)
        }
        DynamicImage::ImageRgb16(buf) => {
            Array3::from_shape_fn((h, w, 3), |(r, c, k)| buf.get_pixel(c as u32, r as u32)[k] as f32 / 65535.0)
        }
        other => return Err(Error::ChannelCount(other.color().channel_count() as usize)),
    };
    Ok(arr)
}

/// Channel count from the PNG header without decoding pixel data.
pub fn probe_channels(path: &Path) -> Result<usize> {
    use image::ImageDecoder;
    let decoder = ImageReader::open(path)?.with_guessed_format()?.into_decoder()?;
    Ok(decoder.color_type().channel_count() as usize)
}

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_gray_png(path: &Path, pixels: &Array2<f32>) -> Result<()> {
    let (h, w) = pixels.dim();
    let img = GrayImage::from_fn(w as u32, h as u32, |x, y| Luma([to_u8(pixels[[y as usize, x as usize]])]));
    img.save(path)?;
    Ok(())
}

pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<()> {
    let (h, w) = mask.shape();
    let img = GrayImage::from_fn(w as u32, h as u32, |x, y| Luma([if mask.get(y as usize, x as usize) { 255 } else { 0 }]));
    img.save(path)?;
    Ok(())
}

pub fn read_mask_png(path: &Path) -> Result<Mask> {
    let img = ImageReader::open(path)?.with_guessed_format()?.decode()?.into_luma8();
    let (w, h) = img.dimensions();
    Ok(Mask::from_fn((h as usize, w as usize), |(r, c)| img.get_pixel(c as u32, r as u32)[0] >= 128))
}

/// Writes an RGB image given as `(height, width)` rows of `[r, g, b]`.
pub fn write_rgb_png(path: &Path, pixels: &Array2<[u8; 3]>) -> Result<()> {
    let (h, w) = pixels.dim();
    let img = RgbImage::from_fn(w as u32, h as u32, |x, y| Rgb(pixels[[y as usize, x as usize]]));
    img.save(path)?;
    Ok(())
}

/// Writes a little-endian `f32` array in NumPy `.npy` (format 1.0).
pub fn write_npy(path: &Path, values: &Array2<f32>) -> Result<()> {
    let (h, w) = values.dim();
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({h}, {w}), }}");
    // magic(6) + version(2) + len(2) + header + '\n' must be a multiple of 64
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"\x93NUMPY\x01\x00")?;
    out.write_all(&(header.len() as u16).to_le_bytes())?;
    out.write_all(header.as_bytes())?;
    for v in values.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back what [`write_npy`] writes.
pub fn read_npy(path: &Path) -> Result<Array2<f32>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 10 || &bytes[..6] != b"\x93NUMPY" {
        return Err(Error::Parse(format!("{}: not an npy file", path.display())));
    }
    let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let header = std::str::from_utf8(&bytes[10..10 + hlen]).map_err(|e| Error::Parse(e.to_string()))?;
    if !header.contains("'<f4'") {
        return Err(Error::Parse("only <f4 arrays are supported".into()));
    }
    let shape_start = header.find("'shape': (").ok_or_else(|| Error::Parse("missing shape".into()))? + 10;
    let shape_end = shape_start + header[shape_start..].find(')').ok_or_else(|| Error::Parse("bad shape".into()))?;
    let dims: Vec<usize> = header[shape_start..shape_end]
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Parse(format!("expected 2-d array, got {dims:?}")));
    }
    let data: Vec<f32> = bytes[10 + hlen..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Array2::from_shape_vec((dims[0], dims[1]), data).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip_quantizes_to_8_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Array2::from_shape_fn((3, 5), |(r, c)| (r * 5 + c) as f32 / 14.0);
        write_gray_png(&p, &img).unwrap();
        let back = read_png(&p).unwrap();
        assert_eq!(back.dim(), (3, 5, 1));
        for ((r, c), v) in img.indexed_iter() {
            assert!((back[[r, c, 0]] - v).abs() <= 0.5 / 255.0 + 1e-6);
        }
        assert_eq!(probe_channels(&p).unwrap(), 1);
    }

    #[test]
    fn npy_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.npy");
        let arr = Array2::from_shape_fn((4, 7), |(r, c)| r as f32 * 0.25 - c as f32);
        write_npy(&p, &arr).unwrap();
        let len = std::fs::metadata(&p).unwrap().len() as usize;
        assert_eq!((len - 4 * 28) % 64, 0);
        assert_eq!(read_npy(&p).unwrap(), arr);
    }
}
