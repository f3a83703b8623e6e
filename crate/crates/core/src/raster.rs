//! Congestion heat maps: integer weight rasters and their image loaders.
//!
//! Grayscale images are the canonical interchange format, one 8-bit weight
//! per pixel. RGB map captures are classified against a small color palette.
//! Supported containers are binary PGM/PPM (`P5`/`P6`, maxval <= 255) and
//! 8-bit PNG.

use std::io::Cursor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed image at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("png decode failed: {0}")]
    Png(String),
    #[error("expected {expected} channel(s) per pixel, image has {found}")]
    ChannelCount { expected: usize, found: usize },
    #[error("unsupported bit depth {0}, only 8-bit images are accepted")]
    BitDepth(u8),
    #[error("pixel ({x}, {y}) is outside the {width}x{height} frame")]
    OutOfBounds {
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
    #[error("invalid dimensions {width}x{height} for {len} weights")]
    Dimensions { width: u32, height: u32, len: usize },
    #[error("palette configuration: {0}")]
    Palette(String),
}

/// Per-pixel congestion weights, row-major. Weight 0 is free flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatMap {
    width: u32,
    height: u32,
    weights: Vec<u8>,
}

impl HeatMap {
    pub fn new(width: u32, height: u32, weights: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || weights.len() != width as usize * height as usize {
            return Err(RasterError::Dimensions {
                width,
                height,
                len: weights.len(),
            });
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    /// A map where every pixel carries `weight`.
    pub fn filled(width: u32, height: u32, weight: u8) -> Result<Self, RasterError> {
        Self::new(width, height, vec![weight; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    /// Frame area in pixels.
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn weight_at(&self, x: u32, y: u32) -> Result<u8, RasterError> {
        if x >= self.width || y >= self.height {
            return Err(RasterError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.weights[y as usize * self.width as usize + x as usize])
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.weights[start..start + w]
    }

    /// Binary PGM (`P5`, maxval 255) encoding of the weights.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.weights);
        out
    }
}

/// One color class of an RGB heat-map capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub color: [u8; 3],
    pub weight: u8,
}

/// green / orange / red / dark-red traffic layer colors.
pub fn default_palette() -> Vec<PaletteEntry> {
    vec![
        PaletteEntry {
            color: [99, 214, 104],
            weight: 0,
        },
        PaletteEntry {
            color: [255, 151, 77],
            weight: 96,
        },
        PaletteEntry {
            color: [242, 60, 50],
            weight: 176,
        },
        PaletteEntry {
            color: [129, 31, 31],
            weight: 255,
        },
    ]
}

/// Checks the invariants a user-supplied palette must hold: nonempty,
/// pairwise distinct colors, and a zero-weight background class.
pub fn validate_palette(palette: &[PaletteEntry]) -> Result<(), RasterError> {
    if palette.is_empty() {
        return Err(RasterError::Palette("palette is empty".into()));
    }
    for (i, a) in palette.iter().enumerate() {
        if palette[i + 1..].iter().any(|b| b.color == a.color) {
            return Err(RasterError::Palette(format!(
                "color {:?} appears more than once",
                a.color
            )));
        }
    }
    if !palette.iter().any(|e| e.weight == 0) {
        return Err(RasterError::Palette(
            "no entry with weight 0 (free-flow class)".into(),
        ));
    }
    Ok(())
}

/// Nearest palette entry by squared RGB distance, lowest index on ties.
/// `palette` must be nonempty.
pub fn classify(rgb: [u8; 3], palette: &[PaletteEntry]) -> u8 {
    let dist = |c: [u8; 3]| -> u32 {
        (0..3)
            .map(|k| {
                let d = rgb[k] as i32 - c[k] as i32;
                (d * d) as u32
            })
            .sum()
    };
    let mut best = &palette[0];
    let mut best_d = dist(best.color);
    for e in &palette[1..] {
        let d = dist(e.color);
        if d < best_d {
            best = e;
            best_d = d;
        }
    }
    best.weight
}

/// A decoded 8-bit image, before interpretation as weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    pub data: Vec<u8>,
}

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Decodes PGM, PPM or PNG bytes into interleaved 8-bit samples.
pub fn decode_image(bytes: &[u8]) -> Result<RawImage, RasterError> {
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(RasterError::Malformed {
            offset: 0,
            reason: "unrecognized magic, expected P5, P6 or PNG".into(),
        })
    }
}

/// Loads a single-channel image as weights, pixel values taken verbatim.
pub fn load_grayscale(bytes: &[u8]) -> Result<HeatMap, RasterError> {
    let img = decode_image(bytes)?;
    if img.channels != 1 {
        return Err(RasterError::ChannelCount {
            expected: 1,
            found: img.channels,
        });
    }
    HeatMap::new(img.width, img.height, img.data)
}

/// Loads a 3-channel image and classifies each pixel against `palette`.
pub fn load_rgb(bytes: &[u8], palette: &[PaletteEntry]) -> Result<HeatMap, RasterError> {
    if palette.is_empty() {
        return Err(RasterError::Palette("palette is empty".into()));
    }
    let img = decode_image(bytes)?;
    if img.channels != 3 {
        return Err(RasterError::ChannelCount {
            expected: 3,
            found: img.channels,
        });
    }
    let weights = img
        .data
        .chunks_exact(3)
        .map(|px| classify([px[0], px[1], px[2]], palette))
        .collect();
    HeatMap::new(img.width, img.height, weights)
}

/// Grayscale images load verbatim, RGB images go through `palette`.
pub fn load_any(bytes: &[u8], palette: &[PaletteEntry]) -> Result<HeatMap, RasterError> {
    let img = decode_image(bytes)?;
    match img.channels {
        1 => HeatMap::new(img.width, img.height, img.data),
        3 => load_rgb(bytes, palette),
        found => Err(RasterError::ChannelCount { expected: 1, found }),
    }
}

/// Binary PPM (`P6`, maxval 255) from interleaved RGB samples.
pub fn encode_ppm(width: u32, height: u32, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width as usize * height as usize * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Grayscale PNG encoding of the weights.
pub fn encode_png_gray(map: &HeatMap) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, map.width, map.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| RasterError::Png(e.to_string()))?;
        writer
            .write_image_data(&map.weights)
            .map_err(|e| RasterError::Png(e.to_string()))?;
    }
    Ok(out)
}

fn decode_png(bytes: &[u8]) -> Result<RawImage, RasterError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| RasterError::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RasterError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| RasterError::Png(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(RasterError::BitDepth(info.bit_depth as u8));
    }
    let channels = info.color_type.samples();
    let row = info.width as usize * channels;
    // drop any per-line padding
    let data = if info.line_size == row {
        buf.truncate(row * info.height as usize);
        buf
    } else {
        buf.chunks(info.line_size)
            .take(info.height as usize)
            .flat_map(|line| line[..row].iter().copied())
            .collect()
    };
    Ok(RawImage {
        width: info.width,
        height: info.height,
        channels,
        data,
    })
}

struct PnmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmHeader<'_> {
    fn malformed(&self, reason: impl Into<String>) -> RasterError {
        RasterError::Malformed {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
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

    fn number(&mut self, what: &str) -> Result<u32, RasterError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.malformed(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RasterError::Malformed {
                offset: start,
                reason: format!("{what} does not fit in 32 bits"),
            })
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<RawImage, RasterError> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut h = PnmHeader { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(RasterError::BitDepth(16));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(h.malformed("missing whitespace after maxval")),
    }
    let need = width as usize * height as usize * channels;
    let data = &bytes[h.pos..];
    if data.len() < need {
        return Err(RasterError::Malformed {
            offset: bytes.len(),
            reason: format!("raster truncated, expected {need} bytes, found {}", data.len()),
        });
    }
    if width == 0 || height == 0 {
        return Err(h.malformed("zero image dimension"));
    }
    Ok(RawImage {
        width,
        height,
        channels,
        data: data[..need].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pgm(width: u32, height: u32, px: &[u8]) -> Vec<u8> {
        HeatMap::new(width, height, px.to_vec()).unwrap().to_pgm()
    }

    #[test]
    fn grayscale_identity() {
        let m = load_grayscale(&pgm(2, 2, &[0, 0, 0, 0])).unwrap();
        assert_eq!(m.weights(), &[0, 0, 0, 0]);
        let m = load_grayscale(&pgm(1, 1, &[255])).unwrap();
        assert_eq!(m.weights(), &[255]);
        let m = load_grayscale(&pgm(3, 1, &[0, 128, 255])).unwrap();
        assert_eq!((m.width(), m.height()), (3, 1));
        assert_eq!(m.weights(), &[0, 128, 255]);
    }

    #[test]
    fn weight_lookup_and_bounds() {
        let m = HeatMap::new(3, 1, vec![0, 128, 255]).unwrap();
        assert_eq!(m.weight_at(0, 0).unwrap(), 0);
        assert_eq!(m.weight_at(2, 0).unwrap(), 255);
        match m.weight_at(3, 0) {
            Err(RasterError::OutOfBounds {
                x: 3,
                y: 0,
                width: 3,
                height: 1,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pgm_comments_and_errors() {
        let bytes = b"P5 # a comment\n3 1\n255\n\x00\x80\xff";
        assert_eq!(load_grayscale(bytes).unwrap().weights(), &[0, 128, 255]);

        let err = load_grayscale(b"P5\n3 1\n255\n\x00").unwrap_err();
        assert!(matches!(err, RasterError::Malformed { .. }), "{err}");
        let err = load_grayscale(b"P5\nx 1\n255\n").unwrap_err();
        assert!(matches!(err, RasterError::Malformed { offset: 3, .. }), "{err}");
        let err = load_grayscale(b"GIF89a").unwrap_err();
        assert!(matches!(err, RasterError::Malformed { offset: 0, .. }));
    }

    #[test]
    fn rgb_rejected_as_grayscale() {
        let ppm = encode_ppm(1, 1, &[1, 2, 3]);
        assert!(matches!(
            load_grayscale(&ppm),
            Err(RasterError::ChannelCount {
                expected: 1,
                found: 3
            })
        ));
        assert!(matches!(
            load_rgb(&pgm(1, 1, &[0]), &default_palette()),
            Err(RasterError::ChannelCount {
                expected: 3,
                found: 1
            })
        ));
    }

    #[test]
    fn default_palette_classification() {
        let p = default_palette();
        assert_eq!(classify([99, 214, 104], &p), 0);
        assert_eq!(classify([129, 31, 31], &p), 255);
        // squared distances: green 39561, orange 31995, red 13728, dark-red 3
        assert_eq!(classify([130, 32, 30], &p), 255);
        let ppm = encode_ppm(3, 1, &[99, 214, 104, 255, 151, 77, 130, 32, 30]);
        assert_eq!(load_rgb(&ppm, &p).unwrap().weights(), &[0, 96, 255]);
    }

    #[test]
    fn palette_validation() {
        assert!(matches!(load_rgb(&encode_ppm(1, 1, &[0, 0, 0]), &[]), Err(RasterError::Palette(_))));
        assert!(validate_palette(&default_palette()).is_ok());
        let dup = [
            PaletteEntry { color: [1, 1, 1], weight: 0 },
            PaletteEntry { color: [1, 1, 1], weight: 3 },
        ];
        assert!(validate_palette(&dup).is_err());
        let no_zero = [PaletteEntry { color: [1, 1, 1], weight: 3 }];
        assert!(validate_palette(&no_zero).is_err());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = [
            PaletteEntry { color: [0, 0, 0], weight: 7 },
            PaletteEntry { color: [2, 0, 0], weight: 9 },
        ];
        assert_eq!(classify([1, 0, 0], &p), 7);
        let swapped = [p[1], p[0]];
        assert_eq!(classify([1, 0, 0], &swapped), 9);
    }

    #[test]
    fn png_grayscale_roundtrip() {
        let m = HeatMap::new(3, 2, vec![0, 1, 2, 250, 251, 255]).unwrap();
        let bytes = encode_png_gray(&m).unwrap();
        assert_eq!(load_grayscale(&bytes).unwrap(), m);
        assert_eq!(load_any(&bytes, &default_palette()).unwrap(), m);
    }

    #[test]
    fn png_rgb_classified() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[99, 214, 104, 242, 60, 50]).unwrap();
        }
        let m = load_rgb(&out, &default_palette()).unwrap();
        assert_eq!(m.weights(), &[0, 176]);
        assert!(matches!(load_grayscale(&out), Err(RasterError::ChannelCount { .. })));
    }
}
