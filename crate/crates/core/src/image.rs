//! Single-channel raster substrate: the image container, patch extraction,
//! mirror boundary handling, convolution and lattice decimation.
//!
//! Out-of-range coordinates are always resolved by whole-sample symmetric
//! reflection (`-1 -> 1`, `n -> n - 2`), the same convention in every module.

use rayon::prelude::*;

use crate::error::{contract, param, Result};

/// Row-major image of real intensities, nominally in `[0, 255]`.
///
/// Values are never clamped; quantization only happens when writing files.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return param(format!("image dimensions must be positive, got {width}x{height}"));
        }
        if data.len() != width * height {
            return param(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return param(format!("non-finite intensity at index {pos}"));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let data = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, data)
    }

    /// Internal constructor for results of operations that preserve finiteness.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Intensity at a possibly out-of-range coordinate, mirror-reflected.
    #[inline]
    pub fn get_mirrored(&self, row: isize, col: isize) -> f64 {
        self.get(mirror_index(row, self.height), mirror_index(col, self.width))
    }

    pub fn contains(&self, (row, col): (usize, usize)) -> bool {
        row < self.height && col < self.width
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image::from_parts(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Horizontal flip (column `c` goes to `width - 1 - c`).
    pub fn flip_horizontal(&self) -> Image {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.width) {
            row.reverse();
        }
        out
    }

    /// Copies the `width x height` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 || row + height > self.height || col + width > self.width {
            return param(format!(
                "crop {width}x{height} at ({row}, {col}) exceeds {}x{} image",
                self.width, self.height
            ));
        }
        let mut data = Vec::with_capacity(width * height);
        for r in row..row + height {
            let start = r * self.width + col;
            data.extend_from_slice(&self.data[start..start + width]);
        }
        Ok(Image::from_parts(width, height, data))
    }

    fn check_point(&self, (row, col): (usize, usize)) -> Result<()> {
        if self.contains((row, col)) {
            Ok(())
        } else {
            contract(format!(
                "coordinate ({row}, {col}) outside {}x{} image",
                self.width, self.height
            ))
        }
    }
}

/// Maps any integer index onto `0..len` by whole-sample symmetric reflection.
#[inline]
pub fn mirror_index(index: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = index.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

pub(crate) fn check_odd(name: &str, size: usize) -> Result<()> {
    if size % 2 == 1 {
        Ok(())
    } else {
        param(format!("{name} must be odd, got {size}"))
    }
}

/// A `q x q` window of intensities centered on a source pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    size: usize,
    values: Vec<f64>,
    center: (usize, usize),
}

impl Patch {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }
}

pub fn extract_patch(img: &Image, center: (usize, usize), q: usize) -> Result<Patch> {
    check_odd("patch size", q)?;
    img.check_point(center)?;
    let half = (q / 2) as isize;
    let (cr, cc) = (center.0 as isize, center.1 as isize);
    let mut values = Vec::with_capacity(q * q);
    for dr in -half..=half {
        for dc in -half..=half {
            values.push(img.get_mirrored(cr + dr, cc + dc));
        }
    }
    Ok(Patch { size: q, values, center })
}

/// Squared Euclidean distance between two equally sized patches.
pub fn patch_ssd(a: &Patch, b: &Patch) -> Result<f64> {
    if a.size != b.size {
        return param(format!("patch sizes differ: {} vs {}", a.size, b.size));
    }
    Ok(a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Square convolution kernel with an odd number of taps per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel2D {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        check_odd("kernel size", size)?;
        if taps.len() != size * size {
            return param(format!("kernel of size {size} needs {} taps, got {}", size * size, taps.len()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return param("kernel taps must be finite");
        }
        Ok(Self { size, taps })
    }

    pub fn identity() -> Self {
        Self { size: 1, taps: vec![1.0] }
    }

    /// Box filter of `size x size` equal taps summing to one.
    pub fn uniform(size: usize) -> Result<Self> {
        check_odd("kernel size", size)?;
        let n = (size * size) as f64;
        Self::new(size, vec![1.0 / n; size * size])
    }

    /// Sampled isotropic Gaussian, normalized to unit DC gain.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        check_odd("kernel size", size)?;
        if !(sigma > 0.0) {
            return param(format!("gaussian sigma must be positive, got {sigma}"));
        }
        let half = (size / 2) as f64;
        let mut taps: Vec<f64> = (0..size * size)
            .map(|i| {
                let dy = (i / size) as f64 - half;
                let dx = (i % size) as f64 - half;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        Self::new(size, taps)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn dc_gain(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn is_identity(&self) -> bool {
        self.size == 1 && self.taps[0] == 1.0
    }
}

/// Same-size convolution with mirror boundary handling:
/// `out[r][c] = sum_{a,b} k[a][b] * img[r - (a - h)][c - (b - h)]`.
pub fn convolve(img: &Image, k: &Kernel2D) -> Result<Image> {
    check_odd("kernel size", k.size)?;
    if k.is_identity() {
        return Ok(img.clone());
    }
    let (w, h) = (img.width, img.height);
    let half = (k.size / 2) as isize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, px) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..k.size {
                let sr = r as isize - (a as isize - half);
                for b in 0..k.size {
                    let sc = c as isize - (b as isize - half);
                    acc += k.taps[a * k.size + b] * img.get_mirrored(sr, sc);
                }
            }
            *px = acc;
        }
    });
    Ok(Image::from_parts(w, h, out))
}

/// Exact transpose of [`convolve`], including the mirror boundary folding.
///
/// In the interior this is correlation with the kernel (convolution with the
/// flipped kernel); near the border the reflected taps are scattered back onto
/// the pixels they were read from.
pub fn convolve_adjoint(img: &Image, k: &Kernel2D) -> Result<Image> {
    check_odd("kernel size", k.size)?;
    if k.is_identity() {
        return Ok(img.clone());
    }
    let (w, h) = (img.width, img.height);
    let half = (k.size / 2) as isize;
    // Gather form of the scatter: for each source pixel, visit the output
    // pixels that read it. Precompute, per axis, which (output, tap) pairs
    // reach each source index.
    let reach = |len: usize| -> Vec<Vec<(usize, usize)>> {
        let mut lists = vec![Vec::new(); len];
        for out in 0..len {
            for tap in 0..k.size {
                let src = mirror_index(out as isize - (tap as isize - half), len);
                lists[src].push((out, tap));
            }
        }
        lists
    };
    let rows = reach(h);
    let cols = reach(w);
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, px) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(orow, a) in &rows[r] {
                for &(ocol, b) in &cols[c] {
                    acc += k.taps[a * k.size + b] * img.get(orow, ocol);
                }
            }
            *px = acc;
        }
    });
    Ok(Image::from_parts(w, h, out))
}

/// Keeps the samples on the top-left lattice `rows, cols ≡ 0 (mod p)`.
pub fn decimate(img: &Image, p: usize) -> Result<Image> {
    if p < 1 {
        return param("decimation factor must be at least 1");
    }
    let w = img.width.div_ceil(p);
    let h = img.height.div_ceil(p);
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            data.push(img.get(r * p, c * p));
        }
    }
    Ok(Image::from_parts(w, h, data))
}

/// Adjoint of [`decimate`]: samples go to the top-left lattice, zeros elsewhere.
pub fn upsample_zero_fill(img: &Image, p: usize) -> Result<Image> {
    if p < 1 {
        return param("upsampling factor must be at least 1");
    }
    let (w, h) = (img.width * p, img.height * p);
    let mut data = vec![0.0; w * h];
    for r in 0..img.height {
        for c in 0..img.width {
            data[(r * p) * w + c * p] = img.get(r, c);
        }
    }
    Ok(Image::from_parts(w, h, data))
}

/// Mirror-padded copy used for fast patch access in the inner loops.
#[derive(Debug, Clone)]
pub(crate) struct Padded {
    margin: usize,
    stride: usize,
    data: Vec<f64>,
}

impl Padded {
    pub(crate) fn new(img: &Image, margin: usize) -> Self {
        let stride = img.width + 2 * margin;
        let rows = img.height + 2 * margin;
        let m = margin as isize;
        let mut data = Vec::with_capacity(stride * rows);
        for r in 0..rows as isize {
            for c in 0..stride as isize {
                data.push(img.get_mirrored(r - m, c - m));
            }
        }
        Self { margin, stride, data }
    }

    /// Value at image coordinate `(row, col)`, which may lie up to `margin` outside.
    #[inline]
    pub(crate) fn at(&self, row: isize, col: isize) -> f64 {
        let r = (row + self.margin as isize) as usize;
        let c = (col + self.margin as isize) as usize;
        self.data[r * self.stride + c]
    }

    /// SSD between the `q x q` patches at `a` and `b`, both sampled with lattice step `step_a` / `step_b`.
    #[inline]
    pub(crate) fn patch_ssd_with(
        &self,
        a: (isize, isize),
        step_a: isize,
        other: &Padded,
        b: (isize, isize),
        half: isize,
    ) -> f64 {
        let mut acc = 0.0;
        for dr in -half..=half {
            for dc in -half..=half {
                let d = self.at(a.0 + step_a * dr, a.1 + step_a * dc) - other.at(b.0 + dr, b.1 + dc);
                acc += d * d;
            }
        }
        acc
    }
}
