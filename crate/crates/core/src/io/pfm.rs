//! Portable float map (PFM) reader/writer.
//!
//! Header: magic (`Pf` grayscale, `PF` color), `width height`, `scale`; a
//! negative scale marks little-endian payload, positive big-endian. The
//! scale magnitude is ignored on load. The raster is stored bottom-to-top,
//! rows left-to-right, color channels interleaved. Values round-trip
//! bit-exactly; NaN or infinite payloads are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{FloatMap, Image};
use crate::io::atomic_write;

/// Decoded PFM payload: `Pf` yields a map, `PF` a 3-channel image.
pub enum PfmData {
    Gray(FloatMap),
    Color(Image),
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    little_endian: bool,
    data_offset: usize,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, format!("missing {what} in header")));
        }
        std::str::from_utf8(&bytes[start..pos])
            .map(|s| s.to_string())
            .map_err(|_| Error::format(path, format!("non-ascii {what} in header")))
    };

    let magic = token("magic")?;
    let channels = match magic.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => {
            return Err(Error::format(
                path,
                format!("bad magic {other:?}, expected \"Pf\" or \"PF\""),
            ))
        }
    };
    let width: usize = token("width")?
        .parse()
        .map_err(|_| Error::format(path, "width is not an integer"))?;
    let height: usize = token("height")?
        .parse()
        .map_err(|_| Error::format(path, "height is not an integer"))?;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "dimensions must be positive"));
    }
    let scale: f32 = token("scale")?
        .parse()
        .map_err(|_| Error::format(path, "scale is not a number"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(path, "scale must be finite and non-zero"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format(path, "missing separator after scale"));
    }
    Ok(Header {
        channels,
        width,
        height,
        little_endian: scale < 0.0,
        data_offset: pos + 1,
    })
}

fn decode(path: &Path, bytes: &[u8]) -> Result<(Header, Vec<f32>)> {
    let header = parse_header(path, bytes)?;
    let count = header.width * header.height * header.channels;
    let payload = &bytes[header.data_offset..];
    if payload.len() != count * 4 {
        return Err(Error::format(
            path,
            format!(
                "payload is {} bytes, expected {} for {}x{}x{}",
                payload.len(),
                count * 4,
                header.width,
                header.height,
                header.channels
            ),
        ));
    }
    // File rows run bottom-to-top; flip into top-to-bottom order.
    let row_len = header.width * header.channels;
    let mut data = vec![0.0f32; count];
    for file_row in 0..header.height {
        let img_row = header.height - 1 - file_row;
        for i in 0..row_len {
            let off = (file_row * row_len + i) * 4;
            let raw: [u8; 4] = payload[off..off + 4].try_into().unwrap();
            let v = if header.little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            if !v.is_finite() {
                return Err(Error::format(path, "payload contains NaN or infinity"));
            }
            data[img_row * row_len + i] = v;
        }
    }
    Ok((header, data))
}

fn encode(magic: &str, height: usize, width: usize, channels: usize, data: &[f32]) -> Vec<u8> {
    let header = format!("{magic}\n{width} {height}\n-1.0\n");
    let row_len = width * channels;
    let mut bytes = Vec::with_capacity(header.len() + data.len() * 4);
    bytes.extend_from_slice(header.as_bytes());
    for img_row in (0..height).rev() {
        for i in 0..row_len {
            bytes.extend_from_slice(&data[img_row * row_len + i].to_le_bytes());
        }
    }
    bytes
}

/// Loads either flavor of PFM.
pub fn load_pfm(path: impl AsRef<Path>) -> Result<PfmData> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, data) = decode(path, &bytes)?;
    if header.channels == 1 {
        Ok(PfmData::Gray(FloatMap::new(header.height, header.width, data)?))
    } else {
        Ok(PfmData::Color(Image::new(
            header.height,
            header.width,
            3,
            data,
        )?))
    }
}

/// Loads a grayscale (`Pf`) PFM as a map; color files are rejected.
pub fn load_map(path: impl AsRef<Path>) -> Result<FloatMap> {
    let path = path.as_ref();
    match load_pfm(path)? {
        PfmData::Gray(map) => Ok(map),
        PfmData::Color(_) => Err(Error::format(
            path,
            "expected grayscale \"Pf\", found color \"PF\"",
        )),
    }
}

/// Stores a map as little-endian grayscale PFM (atomic).
pub fn store_map(path: impl AsRef<Path>, map: &FloatMap) -> Result<()> {
    let bytes = encode("Pf", map.height(), map.width(), 1, map.data());
    atomic_write(path.as_ref(), &bytes)
}

/// Stores an image as PFM: `Pf` when single channel, `PF` when RGB (atomic).
pub fn store_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let magic = if img.channels() == 1 { "Pf" } else { "PF" };
    let bytes = encode(magic, img.height(), img.width(), img.channels(), img.data());
    atomic_write(path.as_ref(), &bytes)
}
