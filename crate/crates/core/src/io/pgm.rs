use std::fs;
use std::path::Path;

use super::{io_err, parse_err};
use crate::error::Result;
use crate::linalg::DenseMatrix;

/// Reads a P2 or P5 image; entries are raw pixel values in `[0, maxval]`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_pgm(&bytes, path)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl Cursor<'_> {
    /// Skips whitespace and `#` comments.
    fn skip_blank(&mut self) {
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

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_blank();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str, path: &Path) -> Result<usize> {
        let line = self.line;
        let tok = self
            .token()
            .ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| parse_err(path, self.line, format!("invalid {what}")))
    }
}

/// Parses PGM bytes; `path` only labels errors.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    let mut cur = Cursor { bytes, pos: 0, line: 1 };
    let binary = match cur.token() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(parse_err(path, 1, "expected magic P2 or P5")),
    };
    let width = cur.number("width", path)?;
    let height = cur.number("height", path)?;
    let maxval = cur.number("maxval", path)?;
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(path, cur.line, format!("maxval {maxval} outside 1..=65535")));
    }
    let total = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(path, cur.line, "dimensions overflow"))?;
    let mut pixels = Vec::with_capacity(total);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(parse_err(path, cur.line, "missing separator after maxval"));
        }
        let raster = &bytes[cur.pos + 1..];
        let depth = if maxval < 256 { 1 } else { 2 };
        if raster.len() < total * depth {
            return Err(parse_err(
                path,
                cur.line,
                format!("raster holds {} bytes, expected {}", raster.len(), total * depth),
            ));
        }
        for k in 0..total {
            let v = if depth == 1 {
                raster[k] as usize
            } else {
                u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as usize
            };
            if v > maxval {
                return Err(parse_err(path, cur.line, format!("pixel {k} exceeds maxval")));
            }
            pixels.push(v as f64);
        }
    } else {
        for k in 0..total {
            let v = cur.number("pixel", path)?;
            if v > maxval {
                return Err(parse_err(path, cur.line, format!("pixel {k} exceeds maxval")));
            }
            pixels.push(v as f64);
        }
        if cur.token().is_some() {
            return Err(parse_err(path, cur.line, "trailing data after raster"));
        }
    }
    DenseMatrix::from_vec(height, width, pixels)
}

/// Writes a P5 image with maxval 255, clamping to `[0, 255]` and rounding.
pub fn write_pgm(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    out.extend(m.data().iter().map(|&v| {
        if v.is_nan() {
            0
        } else {
            v.clamp(0.0, 255.0).round() as u8
        }
    }));
    fs::write(path, out).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(b: &[u8]) -> Result<DenseMatrix> {
        parse_pgm(b, Path::new("t.pgm"))
    }

    #[test]
    fn binary_and_ascii_agree() {
        let want = DenseMatrix::from_rows(&[vec![0.0, 255.0], vec![128.0, 64.0]]).unwrap();
        let mut p5 = b"P5\n2 2\n255\n".to_vec();
        p5.extend([0u8, 255, 128, 64]);
        assert_eq!(parse(&p5).unwrap(), want);
        assert_eq!(parse(b"P2\n# comment\n2 2\n255\n0 255\n128 64\n").unwrap(), want);
    }

    #[test]
    fn sixteen_bit() {
        let mut p5 = b"P5 1 2 1000\n".to_vec();
        p5.extend([0x03u8, 0xE8, 0x00, 0x01]);
        assert_eq!(parse(&p5).unwrap().data(), &[1000.0, 1.0]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse(b"P6\n1 1\n255\n\0").is_err());
        assert!(parse(b"P5\n2 2\n255\n\0\0").is_err());
        assert!(parse(b"P2\n2 1\n10\n3 11\n").is_err());
        assert!(parse(b"P2\n1 1\n70000\n3\n").is_err());
        assert!(parse(b"P2\n1 1\n9\n3 4\n").is_err());
        assert!(parse(b"").is_err());
    }

    #[test]
    fn write_clamps_and_rounds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        let m = DenseMatrix::from_rows(&[vec![300.0, -4.0, 12.6]]).unwrap();
        write_pgm(&m, &p).unwrap();
        assert_eq!(read_pgm(&p).unwrap().data(), &[255.0, 0.0, 13.0]);
        write_pgm(&DenseMatrix::zeros(2, 3), &p).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), DenseMatrix::zeros(2, 3));
    }
}
