//! 8-bit PNG and PPM/PGM (P2, P3, P5, P6) codecs.
//!
//! Decoding maps each byte `b` to `b / 255`. Encoding quantizes with
//! round-half-up: `floor(clamp(v, 0, 1) * 255 + 0.5)`. Grayscale inputs are
//! promoted to RGB by channel replication; PNG alpha is discarded.

use std::io::Cursor;

use super::{ImageF32, Mask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    /// Binary P6 on encode; P2/P3/P5/P6 on decode.
    Ppm,
}

impl ImageFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(ImageFormat::Png),
            "ppm" | "pgm" | "pnm" => Some(ImageFormat::Ppm),
            _ => None,
        }
    }
}

#[inline]
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn decode_image(bytes: &[u8], format: ImageFormat) -> Result<ImageF32> {
    let (width, height, rgb) = match format {
        ImageFormat::Png => decode_png(bytes)?,
        ImageFormat::Ppm => decode_pnm(bytes)?,
    };
    let data = rgb.iter().map(|&b| b as f32 / 255.0).collect();
    ImageF32::new(width, height, data)
}

pub fn encode_image(image: &ImageF32, format: ImageFormat) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize(v)).collect();
    match format {
        ImageFormat::Png => encode_png(image.width(), image.height(), &bytes, png::ColorType::Rgb),
        ImageFormat::Ppm => {
            let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
            out.extend_from_slice(&bytes);
            Ok(out)
        }
    }
}

/// Decodes a mask from its first channel (gray files are replicated so this
/// is the gray value).
pub fn decode_mask(bytes: &[u8], format: ImageFormat) -> Result<Mask> {
    let img = decode_image(bytes, format)?;
    let data = img.pixels().map(|p| p[0]).collect();
    Mask::new(img.width(), img.height(), data)
}

pub fn encode_mask(mask: &Mask, format: ImageFormat) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = mask.data().iter().map(|&v| quantize(v)).collect();
    match format {
        ImageFormat::Png => encode_png(mask.width(), mask.height(), &bytes, png::ColorType::Grayscale),
        ImageFormat::Ppm => {
            let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
            out.extend_from_slice(&bytes);
            Ok(out)
        }
    }
}

fn encode_png(width: usize, height: usize, bytes: &[u8], color: png::ColorType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let png_err = |e: png::EncodingError| Error::InvalidArgument(format!("png encode: {e}"));
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(bytes).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

fn decode_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::decode("png header", e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::decode(
            "png bit depth",
            format!("unsupported bit depth {depth:?}, only 8-bit is accepted"),
        ));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::decode("png header", "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::decode("png data", e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::decode("png color type", "palette was not expanded")),
    };
    let mut rgb = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        let row = &buf[y * info.line_size..y * info.line_size + w * channels];
        for px in row.chunks_exact(channels) {
            if channels < 3 {
                rgb.extend_from_slice(&[px[0], px[0], px[0]]);
            } else {
                rgb.extend_from_slice(&px[..3]);
            }
        }
    }
    Ok((w, h, rgb))
}

struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn unsigned(&mut self, field: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::decode(
                format!("{field} (offset {start})"),
                if start >= self.bytes.len() {
                    "unexpected end of data".to_string()
                } else {
                    format!("expected decimal integer, found byte 0x{:02x}", self.bytes[start])
                },
            ));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::decode(format!("{field} (offset {start})"), "integer overflow"))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::decode("magic (offset 0)", "missing 'P' magic number"));
    }
    let (ascii, gray) = match bytes[1] {
        b'2' => (true, true),
        b'3' => (true, false),
        b'5' => (false, true),
        b'6' => (false, false),
        other => {
            return Err(Error::decode(
                "magic (offset 1)",
                format!("unsupported PNM variant 'P{}'", other as char),
            ))
        }
    };
    let mut cur = PnmCursor { bytes, pos: 2 };
    let width = cur.unsigned("width")?;
    let height = cur.unsigned("height")?;
    let maxval = cur.unsigned("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::decode("dimensions", format!("{width}x{height} is empty")));
    }
    if maxval != 255 {
        return Err(Error::decode(
            "maxval",
            format!("unsupported bit depth: maxval {maxval}, only 255 is accepted"),
        ));
    }
    let channels = if gray { 1 } else { 3 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::decode("dimensions", "image too large"))?;
    let mut samples = Vec::with_capacity(count);
    if ascii {
        for i in 0..count {
            let v = cur.unsigned(&format!("sample {i}"))?;
            if v > 255 {
                return Err(Error::decode(
                    format!("sample {i} (offset {})", cur.pos),
                    format!("value {v} exceeds maxval 255"),
                ));
            }
            samples.push(v as u8);
        }
    } else {
        // exactly one whitespace byte separates the header from raster data
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::decode(
                format!("raster (offset {})", cur.pos),
                "missing whitespace after maxval",
            ));
        }
        let start = cur.pos + 1;
        let available = bytes.len().saturating_sub(start);
        if available < count {
            return Err(Error::decode(
                format!("raster (offset {})", start + available),
                format!("truncated: expected {count} bytes, found {available}"),
            ));
        }
        samples.extend_from_slice(&bytes[start..start + count]);
    }
    let rgb = if gray {
        samples.iter().flat_map(|&g| [g, g, g]).collect()
    } else {
        samples
    };
    Ok((width, height, rgb))
}
