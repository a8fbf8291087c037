//! Netpbm PGM (P5 binary / P2 ASCII, maxval ≤ 255) reading and writing, plus
//! numbered frame sequences.
//!
//! Sequence patterns pack a printf-style template, start index and count into
//! one string: `dir/frame_%04d.pgm:0:9`. The template holds exactly one
//! `%0Nd` (or `%d`) field.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{param, Error, Result};
use crate::image::Image;
use crate::superres::FrameSequence;

/// Round half up, then clamp to `[0, 255]`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Image with every value passed through [`quantize`].
pub fn quantize_image(img: &Image) -> Image {
    img.map(|v| quantize(v) as f64)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.pos, message: message.into() })
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&b) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.bytes.get(self.pos) {
                None => self.err(format!("unexpected end of file, expected {what}")),
                Some(_) => self.err(format!("expected {what}")),
            };
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse().or_else(|_| {
            self.pos = start;
            self.err(format!("{what} out of range"))
        })
    }
}

/// Decodes a PGM held in memory.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return cur.err("missing P5/P2 magic number"),
    };
    cur.pos = 2;
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse { offset: maxval_at, message: format!("empty image {width}x{height}") });
    }
    if maxval == 0 {
        return Err(Error::Parse { offset: maxval_at, message: "maxval must be positive".into() });
    }
    if maxval > 255 {
        return Err(Error::Unsupported(format!("maxval {maxval} (only 8-bit PGM is supported)")));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if binary {
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return cur.err("expected a single whitespace byte after maxval"),
        }
        let payload = &bytes[cur.pos..];
        if payload.len() < n {
            cur.pos = bytes.len();
            return cur.err(format!("truncated payload: {} of {n} bytes", payload.len()));
        }
        for (i, &b) in payload[..n].iter().enumerate() {
            if b as u32 > maxval {
                cur.pos += i;
                return cur.err(format!("sample {b} exceeds maxval {maxval}"));
            }
            data.push(b as f64);
        }
    } else {
        for _ in 0..n {
            let at = cur.pos;
            let v = cur.number("sample")?;
            if v > maxval {
                cur.pos = at;
                return cur.err(format!("sample {v} exceeds maxval {maxval}"));
            }
            data.push(v as f64);
        }
    }
    Image::new(width, height, data)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_pgm(&bytes)
}

/// Encodes as P5 with header `P5\n<w> <h>\n255\n`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePattern {
    /// Path template containing one `%0Nd` / `%d` field.
    pub template: String,
    pub start: usize,
    pub count: usize,
}

impl SequencePattern {
    pub fn new(template: impl Into<String>, start: usize, count: usize) -> Result<Self> {
        let template = template.into();
        if count < 1 {
            return param("sequence count must be at least 1");
        }
        field(&template)?;
        Ok(Self { template, start, count })
    }

    pub fn path(&self, index: usize) -> PathBuf {
        let (prefix, width, suffix) = field(&self.template).expect("validated at construction");
        PathBuf::from(format!("{prefix}{index:0width$}{suffix}"))
    }

    pub fn paths(&self) -> impl Iterator<Item = PathBuf> + '_ {
        (self.start..self.start + self.count).map(|i| self.path(i))
    }
}

/// Splits a template into `(prefix, zero-pad width, suffix)`.
fn field(template: &str) -> Result<(&str, usize, &str)> {
    let Some(at) = template.find('%') else {
        return param(format!("template {template:?} has no %0Nd field"));
    };
    let rest = &template[at + 1..];
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    if rest.as_bytes().get(digits) != Some(&b'd') {
        return param(format!("template {template:?}: expected %0Nd"));
    }
    let spec = &rest[..digits];
    if !spec.is_empty() && !spec.starts_with('0') {
        return param(format!("template {template:?}: field width must be zero-padded (%0Nd)"));
    }
    let width = if spec.is_empty() { 0 } else { spec.parse().unwrap_or(0) };
    let suffix = &rest[digits + 1..];
    if suffix.contains('%') {
        return param(format!("template {template:?} has more than one field"));
    }
    Ok((&template[..at], width, suffix))
}

impl FromStr for SequencePattern {
    type Err = Error;

    /// Parses `template:start:count`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.rsplitn(3, ':');
        let (Some(count), Some(start), Some(template)) = (parts.next(), parts.next(), parts.next()) else {
            return param(format!("sequence pattern {s:?} must look like path_%04d.pgm:start:count"));
        };
        let start = start
            .parse()
            .map_err(|_| Error::Parameter(format!("bad start index {start:?}")))?;
        let count = count
            .parse()
            .map_err(|_| Error::Parameter(format!("bad frame count {count:?}")))?;
        Self::new(template, start, count)
    }
}

pub fn load_sequence(pat: &SequencePattern) -> Result<FrameSequence> {
    let mut frames: Vec<Image> = Vec::with_capacity(pat.count);
    for (n, path) in pat.paths().enumerate() {
        let index = pat.start + n;
        let img = match read_pgm(&path) {
            Ok(img) => img,
            Err(Error::Io { source, .. }) => {
                return Err(Error::Sequence {
                    index,
                    message: format!("{}: {source}", path.display()),
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(first) = frames.first() {
            if !img.same_size(first) {
                return Err(Error::Sequence {
                    index,
                    message: format!(
                        "{} is {}x{}, expected {}x{}",
                        path.display(),
                        img.width(),
                        img.height(),
                        first.width(),
                        first.height()
                    ),
                });
            }
        }
        frames.push(img);
    }
    FrameSequence::new(frames)
}

/// Writes frame `n` of `seq` to `pat.path(pat.start + n)`.
pub fn write_sequence(seq: &FrameSequence, pat: &SequencePattern) -> Result<()> {
    for (n, frame) in seq.frames().iter().enumerate() {
        write_pgm(frame, pat.path(pat.start + n))?;
    }
    Ok(())
}
