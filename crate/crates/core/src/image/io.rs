//! Loaders and writers for binary PGM (P5) images and IDX ubyte tensors.
//!
//! IDX files are big-endian: a magic word `0x0000 08 NN` (unsigned bytes,
//! `NN` dimensions), one `u32` per dimension, then the raw bytes. Image sets
//! use three dimensions `(count, rows, cols)`, or four `(count, channels,
//! rows, cols)` for multi-channel data; label files use one. Bytes are
//! scaled to `[0, 1]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use super::Image;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_IMAGES_4D_MAGIC: u32 = 0x0000_0804;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn byte_to_real<T: Real>(b: u8, max: f64) -> T {
    T::lit(f64::from(b) / max)
}

fn real_to_byte<T: Real>(v: T) -> u8 {
    (v.to_f64_lossy().clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Parses a binary PGM image.
pub fn read_pgm<T: Real, R: Read>(mut reader: R) -> Result<Image<T>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("PGM", "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::format("PGM", "missing P5 magic"));
    }
    let parse = |s: String, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::format("PGM", format!("bad {what} '{s}'")))
    };
    let width = parse(token()?, "width")?;
    let height = parse(token()?, "height")?;
    let maxval = parse(token()?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format("PGM", format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data_start = pos + 1;
    let n = width * height;
    if bytes.len() < data_start + n {
        return Err(Error::format("PGM", format!("expected {n} raster bytes")));
    }
    let samples = bytes[data_start..data_start + n]
        .iter()
        .map(|&b| byte_to_real(b, maxval as f64))
        .collect();
    Image::new(width, height, 1, samples)
}

pub fn write_pgm<T: Real, W: Write>(img: &Image<T>, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let n = img.width() * img.height();
    let bytes: Vec<u8> = img.samples()[..n].iter().map(|&v| real_to_byte(v)).collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// Reads an IDX image set.
pub fn read_idx_images<T: Real, R: Read>(mut reader: R) -> Result<Vec<Image<T>>> {
    let magic = reader.read_u32::<BigEndian>()?;
    let (count, channels, rows, cols) = match magic {
        IDX_IMAGES_MAGIC => {
            let n = reader.read_u32::<BigEndian>()? as usize;
            let r = reader.read_u32::<BigEndian>()? as usize;
            let c = reader.read_u32::<BigEndian>()? as usize;
            (n, 1, r, c)
        }
        IDX_IMAGES_4D_MAGIC => {
            let n = reader.read_u32::<BigEndian>()? as usize;
            let ch = reader.read_u32::<BigEndian>()? as usize;
            let r = reader.read_u32::<BigEndian>()? as usize;
            let c = reader.read_u32::<BigEndian>()? as usize;
            (n, ch, r, c)
        }
        other => return Err(Error::format("IDX", format!("unexpected image magic {other:#010x}"))),
    };
    let per = channels * rows * cols;
    let mut buf = vec![0u8; per];
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        reader
            .read_exact(&mut buf)
            .map_err(|_| Error::format("IDX", format!("truncated at image {i} of {count}")))?;
        let samples = buf.iter().map(|&b| byte_to_real(b, 255.0)).collect();
        images.push(Image::new(cols, rows, channels, samples)?);
    }
    Ok(images)
}

pub fn read_idx_labels<R: Read>(mut reader: R) -> Result<Vec<u32>> {
    let magic = reader.read_u32::<BigEndian>()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format("IDX", format!("unexpected label magic {magic:#010x}")));
    }
    let count = reader.read_u32::<BigEndian>()? as usize;
    let mut buf = vec![0u8; count];
    reader
        .read_exact(&mut buf)
        .map_err(|_| Error::format("IDX", format!("expected {count} labels")))?;
    Ok(buf.into_iter().map(u32::from).collect())
}

pub fn write_idx_images<T: Real, W: Write>(images: &[Image<T>], mut out: W) -> Result<()> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidConfig("cannot write an empty image set".into()))?;
    if images.iter().any(|img| !img.same_shape(first)) {
        return Err(Error::DimensionMismatch {
            expected: first.shape_string(),
            found: "mixed shapes".into(),
        });
    }
    if first.channels() == 1 {
        out.write_u32::<BigEndian>(IDX_IMAGES_MAGIC)?;
        out.write_u32::<BigEndian>(images.len() as u32)?;
    } else {
        out.write_u32::<BigEndian>(IDX_IMAGES_4D_MAGIC)?;
        out.write_u32::<BigEndian>(images.len() as u32)?;
        out.write_u32::<BigEndian>(first.channels() as u32)?;
    }
    out.write_u32::<BigEndian>(first.height() as u32)?;
    out.write_u32::<BigEndian>(first.width() as u32)?;
    for img in images {
        let bytes: Vec<u8> = img.samples().iter().map(|&v| real_to_byte(v)).collect();
        out.write_all(&bytes)?;
    }
    Ok(())
}

pub fn write_idx_labels<W: Write>(labels: &[u32], mut out: W) -> Result<()> {
    out.write_u32::<BigEndian>(IDX_LABELS_MAGIC)?;
    out.write_u32::<BigEndian>(labels.len() as u32)?;
    for &l in labels {
        let b = u8::try_from(l).map_err(|_| Error::InvalidConfig(format!("label {l} does not fit in a byte")))?;
        out.write_u8(b)?;
    }
    Ok(())
}

/// Loads one PGM image or an IDX image set, chosen by the file's magic bytes.
pub fn load_images<T: Real>(path: &Path) -> Result<Vec<Image<T>>> {
    let mut reader = open(path)?;
    let mut head = Vec::new();
    reader.read_to_end(&mut head)?;
    if head.starts_with(b"P5") {
        return Ok(vec![read_pgm(head.as_slice())?]);
    }
    if head.len() >= 4 {
        let magic = u32::from_be_bytes([head[0], head[1], head[2], head[3]]);
        if magic == IDX_IMAGES_MAGIC || magic == IDX_IMAGES_4D_MAGIC {
            return read_idx_images(head.as_slice());
        }
    }
    Err(Error::format("image", format!("{}: neither PGM (P5) nor IDX images", path.display())))
}

pub fn load_labels(path: &Path) -> Result<Vec<u32>> {
    read_idx_labels(open(path)?)
}

pub fn save_pgm<T: Real>(img: &Image<T>, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_pgm(img, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_idx_images<T: Real>(images: &[Image<T>], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_idx_images(images, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_idx_labels(labels: &[u32], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_idx_labels(labels, &mut w)?;
    w.flush()?;
    Ok(())
}
