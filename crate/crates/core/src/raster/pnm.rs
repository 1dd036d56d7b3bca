//! Binary portable pixmap (P6) and graymap (P5) codec, maxval 255 only.

use super::{GrayRaster, RasterError, RgbRaster};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pixmap {
    Rgb(RgbRaster),
    Gray(GrayRaster),
}

impl Pixmap {
    /// RGB view; graymaps are expanded to neutral color.
    pub fn into_rgb(self) -> RgbRaster {
        match self {
            Pixmap::Rgb(img) => img,
            Pixmap::Gray(img) => img.to_rgb(),
        }
    }
}

fn codec(msg: impl Into<String>) -> RasterError {
    RasterError::Codec(msg.into())
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, RasterError> {
    if bytes.len() < 2 {
        return Err(codec("missing magic number"));
    }
    let magic = [bytes[0], bytes[1]];
    if magic != *b"P6" && magic != *b"P5" {
        return Err(codec(format!("bad magic {:?}", String::from_utf8_lossy(&magic))));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(codec("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(codec("expected a decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| codec("header field out of range"))?;
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(codec("missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(codec(format!("unsupported maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(codec("zero image dimension"));
    }
    Ok(Header { magic, width, height, data_start: pos })
}

pub fn read_pixmap(bytes: &[u8]) -> Result<Pixmap, RasterError> {
    let header = parse_header(bytes)?;
    let channels = if header.magic == *b"P6" { 3 } else { 1 };
    let needed = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| codec("image too large"))?;
    let payload = &bytes[header.data_start..];
    if payload.len() < needed {
        return Err(codec(format!(
            "truncated payload: need {needed} bytes, got {}",
            payload.len()
        )));
    }
    let payload = &payload[..needed];
    if channels == 3 {
        let px = payload.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Pixmap::Rgb(RgbRaster::new(header.width, header.height, px)?))
    } else {
        Ok(Pixmap::Gray(GrayRaster::new(header.width, header.height, payload.to_vec())?))
    }
}

pub fn write_ppm(img: &RgbRaster) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len() * 3);
    for px in img.pixels() {
        out.extend_from_slice(px);
    }
    out
}

pub fn write_pgm(img: &GrayRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}
