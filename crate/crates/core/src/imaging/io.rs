//! Binary PGM (P5, maxval 255) and 8-bit grayscale PNG reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::{GrayImage, Plane};
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Largest pixel count accepted from a file header.
const MAX_PIXELS: u64 = 1 << 31;

/// Reads a PGM or PNG file. Intensities are returned exactly as stored.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|e| e.at(path))
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(&bytes).map_err(|e| e.at(path))
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::Unsupported {
            path: path.to_path_buf(),
            reason: format!("netpbm variant P{} (only binary P5 is supported)", bytes[1] as char),
        })
    } else {
        Err(Error::Unsupported { path: path.to_path_buf(), reason: "not a PGM or PNG file".into() })
    }
}

/// Writes `img` as PNG when the extension is `.png`, otherwise as binary PGM.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(img)?;
    let encoded = if has_png_extension(path) {
        encode_png(img.width(), img.height(), &bytes).map_err(|e| e.at(path))?
    } else {
        encode_pgm(img.width(), img.height(), &bytes)
    };
    fs::write(path, encoded).map_err(|source| Error::Write { path: path.to_path_buf(), source })
}

/// Rounds each pixel to the nearest byte, failing on anything outside `[0, 255]`.
pub fn to_bytes(img: &GrayImage) -> Result<Vec<u8>> {
    img.pixels()
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            let r = v.round();
            if (0.0..=255.0).contains(&r) {
                Ok(r as u8)
            } else {
                Err(Error::PixelRange { index, value: v })
            }
        })
        .collect()
}

/// Rescales a plane affinely onto `[0, 255]` and writes it as an 8-bit image.
/// Constant planes map to 0.
pub fn save_rescaled(plane: &Plane, path: impl AsRef<Path>) -> Result<()> {
    let (lo, hi) = plane.min_max().unwrap_or((0.0, 0.0));
    let span = hi - lo;
    let scaled = plane.map(|v| if span > 0.0 { (v - lo) / span * 255.0 } else { 0.0 });
    save_image(&GrayImage::from_plane(scaled)?, path)
}

fn has_png_extension(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Decoding failure not yet tied to a path.
enum DecodeError {
    Format(String),
    Unsupported(String),
    Overflow(u64, u64),
}

impl DecodeError {
    fn at(self, path: &Path) -> Error {
        match self {
            DecodeError::Format(reason) => Error::Format { path: path.to_path_buf(), reason },
            DecodeError::Unsupported(reason) => Error::Unsupported { path: path.to_path_buf(), reason },
            DecodeError::Overflow(width, height) => Error::DimensionOverflow { width, height },
        }
    }
}

fn checked_area(width: u64, height: u64) -> Result<usize, DecodeError> {
    match width.checked_mul(height) {
        Some(n) if n <= MAX_PIXELS => Ok(n as usize),
        _ => Err(DecodeError::Overflow(width, height)),
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, DecodeError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(DecodeError::Format(format!("missing {what} in PGM header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DecodeError::Format(format!("{what} out of range in PGM header")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, DecodeError> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(DecodeError::Unsupported(format!("PGM maxval {maxval} (only 255 is supported)")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(DecodeError::Format("truncated PGM header".into())),
    }
    let area = checked_area(width, height)?;
    let raster = &bytes[cur.pos..];
    if raster.len() < area {
        return Err(DecodeError::Format(format!("PGM raster has {} bytes, expected {area}", raster.len())));
    }
    GrayImage::from_bytes(width as usize, height as usize, &raster[..area])
        .map_err(|e| DecodeError::Format(e.to_string()))
}

fn encode_pgm(width: usize, height: usize, bytes: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    out
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, DecodeError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| DecodeError::Format(e.to_string()))?;
    let info = reader.info();
    let (color, depth) = (info.color_type, info.bit_depth);
    if color != png::ColorType::Grayscale {
        return Err(DecodeError::Unsupported(format!("PNG color type {color:?} (only grayscale)")));
    }
    if depth != png::BitDepth::Eight {
        return Err(DecodeError::Unsupported(format!("PNG bit depth {depth:?} (only 8-bit)")));
    }
    let (width, height) = (u64::from(info.width), u64::from(info.height));
    checked_area(width, height)?;
    let size = reader.output_buffer_size().ok_or(DecodeError::Overflow(width, height))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| DecodeError::Format(e.to_string()))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(frame.line_size).take(h) {
        pixels.extend(row[..w].iter().map(|&b| f64::from(b)));
    }
    GrayImage::new(w, h, pixels).map_err(|e| DecodeError::Format(e.to_string()))
}

fn encode_png(width: usize, height: usize, bytes: &[u8]) -> Result<Vec<u8>, DecodeError> {
    let (w, h) = match (u32::try_from(width), u32::try_from(height)) {
        (Ok(w), Ok(h)) => (w, h),
        _ => return Err(DecodeError::Overflow(width as u64, height as u64)),
    };
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, w, h);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(|e| DecodeError::Format(e.to_string()))?;
        writer.write_image_data(bytes).map_err(|e| DecodeError::Format(e.to_string()))?;
        writer.finish().map_err(|e| DecodeError::Format(e.to_string()))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn reads_two_by_two_pgm_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        fs::write(&path, b"P5\n2 2\n255\n\x00\x80\xff\x40").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn tolerates_header_comments() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        fs::write(&path, b"P5\n# made by hand\n1 1\n# another\n255\n\x07").unwrap();
        assert_eq!(load_image(&path).unwrap().pixels(), &[7.0]);
    }

    #[test]
    fn truncated_header_is_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        fs::write(&path, b"P5\n2 ").unwrap();
        assert!(matches!(load_image(&path), Err(Error::Format { .. })));
        fs::write(&path, b"P5\n2 2\n255\n\x00").unwrap();
        assert!(matches!(load_image(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn missing_file_is_read_error() {
        let dir = tempdir().unwrap();
        assert!(matches!(load_image(dir.path().join("nope.pgm")), Err(Error::Read { .. })));
    }

    #[test]
    fn sixteen_bit_inputs_are_unsupported() {
        let dir = tempdir().unwrap();
        let pgm = dir.path().join("deep.pgm");
        fs::write(&pgm, b"P5\n1 1\n65535\n\x00\x01").unwrap();
        assert!(matches!(load_image(&pgm), Err(Error::Unsupported { .. })));

        let png_path = dir.path().join("deep.png");
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0, 1]).unwrap();
        }
        fs::write(&png_path, out).unwrap();
        assert!(matches!(load_image(&png_path), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn huge_header_is_overflow() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("big.pgm");
        fs::write(&path, b"P5\n4294967295 4294967295\n255\n\x00").unwrap();
        assert!(matches!(load_image(&path), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn out_of_range_pixel_is_rejected_on_save() {
        let dir = tempdir().unwrap();
        let img = GrayImage::new(1, 1, vec![300.0]).unwrap();
        assert!(matches!(save_image(&img, dir.path().join("x.pgm")), Err(Error::PixelRange { .. })));
    }

    #[test]
    fn single_pixel_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("one.pgm");
        let img = GrayImage::new(1, 1, vec![42.0]).unwrap();
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn unwritable_path() {
        let dir = tempdir().unwrap();
        let img = GrayImage::new(1, 1, vec![1.0]).unwrap();
        let bad = dir.path().join("missing").join("x.pgm");
        assert!(matches!(save_image(&img, bad), Err(Error::Write { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn save_load_round_trip(
            (w, h, bytes) in (1usize..12, 1usize..12)
                .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<u8>(), w * h))),
            png in any::<bool>(),
        ) {
            let img = GrayImage::from_bytes(w, h, &bytes).unwrap();
            let dir = tempdir().unwrap();
            let path = dir.path().join(if png { "r.png" } else { "r.pgm" });
            save_image(&img, &path).unwrap();
            prop_assert_eq!(load_image(&path).unwrap(), img);
        }
    }
}
