//! Binary PPM (P6, maxval 255) images.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Largest pixel count accepted by the decoder.
pub const MAX_PIXELS: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let pixels = width
            .checked_mul(height)
            .filter(|&p| p > 0 && p <= MAX_PIXELS)
            .ok_or_else(|| Error::Validation(format!("unsupported image size {width}x{height}")))?;
        if data.len() != pixels * 3 {
            return Err(Error::argument(format!(
                "expected {} bytes of RGB data, got {}",
                pixels * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = width.saturating_mul(height);
        Self::new(width, height, rgb.iter().copied().cycle().take(pixels * 3).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                if b == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(self.line, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(self.line, format!("{what} out of range")))
    }
}

/// Decodes a binary P6 image with maxval 255.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.is_empty() {
        return Err(Error::EmptyInput("empty image file".into()));
    }
    if !bytes.starts_with(b"P6") {
        return Err(Error::format(1, "missing P6 magic number"));
    }
    let mut h = Header {
        bytes,
        pos: 2,
        line: 1,
    };
    if !h.bytes.get(h.pos).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::format(1, "missing P6 magic number"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(h.line, format!("only maxval 255 is supported, got {maxval}")));
    }
    if !h.bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(h.line, "expected whitespace after maxval"));
    }
    h.pos += 1;
    let pixels = width
        .checked_mul(height)
        .filter(|&p| p > 0 && p <= MAX_PIXELS)
        .ok_or_else(|| Error::format(h.line, format!("unsupported image size {width}x{height}")))?;
    let body = &bytes[h.pos..];
    if body.len() < pixels * 3 {
        return Err(Error::format(
            h.line,
            format!("truncated pixel data: {} of {} bytes", body.len(), pixels * 3),
        ));
    }
    RgbImage::new(width, height, body[..pixels * 3].to_vec())
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_ppm(&fs::read(path)?)
}

pub fn save_ppm(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, image.encode_ppm())?;
    Ok(())
}
