//! Floating-point RGB rasters, soft masks, and the geometric operations the
//! rest of the crate builds on (crop, bilinear resize, alpha compositing).
//!
//! Pixels are stored row-major as interleaved `R, G, B` triples of `f32` with
//! nominal range `[0, 1]`. Images and masks are immutable once built; every
//! operation returns a new value.

mod codec;

pub use codec::{decode_image, decode_mask, encode_image, encode_mask, ImageFormat};

use std::fmt;

use crate::error::{Error, Result};

pub type Rgb = [f32; 3];

/// Rec.601 luma weights.
pub const LUMA_601: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, PartialEq)]
pub struct ImageF32 {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl fmt::Debug for ImageF32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageF32")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageF32 {
    /// Wraps interleaved RGB data. Fails on zero dimensions, a length that is
    /// not `width * height * 3`, or non-finite samples.
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: Rgb) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Applies `f` to every pixel.
    pub fn map_pixels(&self, mut f: impl FnMut(Rgb) -> Rgb) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.pixels() {
            data.extend_from_slice(&f(p));
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn clamped(&self) -> Self {
        self.map_pixels(|p| p.map(|v| v.clamp(0.0, 1.0)))
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn same_size(&self, other: &ImageF32) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rec.601 luminance plane in 64-bit.
    pub fn luma(&self) -> Vec<f64> {
        self.pixels()
            .map(|p| LUMA_601[0] * p[0] as f64 + LUMA_601[1] * p[1] as f64 + LUMA_601[2] * p[2] as f64)
            .collect()
    }
}

/// Single-channel soft alpha in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} mask samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidArgument(format!("mask value at index {i} outside [0,1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, alpha: f32) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        assert!((0.0..=1.0).contains(&alpha), "alpha outside [0,1]");
        Self {
            width,
            height,
            data: vec![alpha; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}x{})", self.x, self.y, self.w, self.h)
    }
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.x + self.w <= width && self.y + self.h <= height
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.fits(width, height) {
            Ok(())
        } else {
            Err(Error::Bounds {
                rect: self.to_string(),
                width,
                height,
            })
        }
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        x1.saturating_sub(x0) * y1.saturating_sub(y0)
    }

    /// Offsets `inner` (expressed relative to `self`) back into the parent frame.
    pub fn nest(&self, inner: Rect) -> Rect {
        Rect::new(self.x + inner.x, self.y + inner.y, inner.w, inner.h)
    }
}

pub fn crop(image: &ImageF32, rect: Rect) -> Result<ImageF32> {
    rect.validate(image.width, image.height)?;
    let mut data = Vec::with_capacity(rect.area() * 3);
    for y in rect.y..rect.y + rect.h {
        let start = (y * image.width + rect.x) * 3;
        data.extend_from_slice(&image.data[start..start + rect.w * 3]);
    }
    Ok(ImageF32 {
        width: rect.w,
        height: rect.h,
        data,
    })
}

pub fn crop_mask(mask: &Mask, rect: Rect) -> Result<Mask> {
    rect.validate(mask.width, mask.height)?;
    let mut data = Vec::with_capacity(rect.area());
    for y in rect.y..rect.y + rect.h {
        let start = y * mask.width + rect.x;
        data.extend_from_slice(&mask.data[start..start + rect.w]);
    }
    Ok(Mask {
        width: rect.w,
        height: rect.h,
        data,
    })
}

struct AxisTap {
    lo: usize,
    hi: usize,
    frac: f64,
}

// Half-pixel-centered source coordinate, clamped to the valid range.
fn axis_taps(src: usize, dst: usize) -> Vec<AxisTap> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            AxisTap {
                lo,
                hi,
                frac: s - lo as f64,
            }
        })
        .collect()
}

/// Bilinear resize with half-pixel-centered sampling. Same-size resizes
/// return an exact copy.
pub fn resize_bilinear(image: &ImageF32, new_w: usize, new_h: usize) -> Result<ImageF32> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be positive, got {new_w}x{new_h}"
        )));
    }
    if new_w == image.width && new_h == image.height {
        return Ok(image.clone());
    }
    let xs = axis_taps(image.width, new_w);
    let ys = axis_taps(image.height, new_h);
    let mut data = Vec::with_capacity(new_w * new_h * 3);
    for ty in &ys {
        let row0 = ty.lo * image.width;
        let row1 = ty.hi * image.width;
        for tx in &xs {
            for c in 0..3 {
                let p00 = image.data[(row0 + tx.lo) * 3 + c] as f64;
                let p01 = image.data[(row0 + tx.hi) * 3 + c] as f64;
                let p10 = image.data[(row1 + tx.lo) * 3 + c] as f64;
                let p11 = image.data[(row1 + tx.hi) * 3 + c] as f64;
                let top = p00 + (p01 - p00) * tx.frac;
                let bottom = p10 + (p11 - p10) * tx.frac;
                data.push((top + (bottom - top) * ty.frac) as f32);
            }
        }
    }
    Ok(ImageF32 {
        width: new_w,
        height: new_h,
        data,
    })
}

/// Resizes so the shorter side equals `short_side`, preserving aspect ratio.
pub fn resize_short_side(image: &ImageF32, short_side: usize) -> Result<ImageF32> {
    let (w, h) = (image.width as f64, image.height as f64);
    let (new_w, new_h) = if image.width <= image.height {
        (
            short_side,
            ((h * short_side as f64 / w).round() as usize).max(short_side),
        )
    } else {
        (
            ((w * short_side as f64 / h).round() as usize).max(short_side),
            short_side,
        )
    };
    resize_bilinear(image, new_w, new_h)
}

/// Blends `fg` over `bg` inside `placement`: `m * fg + (1 - m) * bg`.
pub fn composite(fg: &ImageF32, bg: &ImageF32, mask: &Mask, placement: Rect) -> Result<ImageF32> {
    placement.validate(bg.width, bg.height)?;
    if fg.width != placement.w || fg.height != placement.h {
        return Err(Error::DimensionMismatch(format!(
            "foreground {}x{} does not match placement {placement}",
            fg.width, fg.height
        )));
    }
    if mask.width != placement.w || mask.height != placement.h {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} does not match placement {placement}",
            mask.width, mask.height
        )));
    }
    let mut data = bg.data.clone();
    for j in 0..placement.h {
        for i in 0..placement.w {
            let m = mask.at(i, j);
            if m == 0.0 {
                continue;
            }
            let src = (j * fg.width + i) * 3;
            let dst = ((placement.y + j) * bg.width + placement.x + i) * 3;
            for c in 0..3 {
                let f = fg.data[src + c];
                let b = data[dst + c];
                data[dst + c] = if m == 1.0 { f } else { m * f + (1.0 - m) * b };
            }
        }
    }
    Ok(ImageF32 {
        width: bg.width,
        height: bg.height,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> ImageF32 {
        ImageF32::from_fn(w, h, |x, y| {
            [x as f32 / w as f32, y as f32 / h as f32, ((x + y) % 7) as f32 / 7.0]
        })
    }

    #[test]
    fn new_rejects_bad_lengths_and_nan() {
        assert!(ImageF32::new(2, 2, vec![0.0; 11]).is_err());
        assert!(ImageF32::new(0, 2, vec![]).is_err());
        let mut d = vec![0.0; 12];
        d[5] = f32::NAN;
        assert!(ImageF32::new(2, 2, d).is_err());
    }

    #[test]
    fn crop_full_rect_is_identity() {
        let img = ramp(7, 5);
        assert_eq!(crop(&img, img.full_rect()).unwrap(), img);
    }

    #[test]
    fn crop_single_pixel_is_top_left() {
        let img = ramp(7, 5);
        let c = crop(&img, Rect::new(0, 0, 1, 1)).unwrap();
        assert_eq!(c.pixel(0, 0), img.pixel(0, 0));
    }

    #[test]
    fn crop_past_edge_is_bounds_error() {
        let img = ramp(7, 5);
        let err = crop(&img, Rect::new(5, 0, 3, 2)).unwrap_err();
        assert!(matches!(err, Error::Bounds { .. }));
    }

    #[test]
    fn crop_maps_coordinates() {
        let img = ramp(9, 6);
        let r = Rect::new(2, 3, 4, 2);
        let c = crop(&img, r).unwrap();
        for j in 0..r.h {
            for i in 0..r.w {
                assert_eq!(c.pixel(i, j), img.pixel(r.x + i, r.y + j));
            }
        }
    }

    #[test]
    fn resize_same_size_is_bit_identical() {
        let img = ramp(6, 4);
        assert_eq!(resize_bilinear(&img, 6, 4).unwrap(), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = ImageF32::filled(5, 3, [0.25, 0.5, 0.75]);
        for (w, h) in [(1, 1), (13, 2), (4, 9)] {
            let r = resize_bilinear(&img, w, h).unwrap();
            for p in r.pixels() {
                assert_eq!(p, [0.25, 0.5, 0.75]);
            }
        }
    }

    #[test]
    fn resize_two_to_four_matches_half_pixel_formula() {
        // scale 0.5: source x = (d + 0.5) * 0.5 - 0.5 -> -0.25, 0.25, 0.75, 1.25
        // clamped to [0, 1] -> 0, 0.25, 0.75, 1.
        let img = ImageF32::new(2, 1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let r = resize_bilinear(&img, 4, 1).unwrap();
        let got: Vec<f32> = r.pixels().map(|p| p[0]).collect();
        assert_eq!(got, vec![0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn short_side_resize_preserves_aspect() {
        let img = ramp(200, 100);
        let r = resize_short_side(&img, 50).unwrap();
        assert_eq!((r.width(), r.height()), (100, 50));
        let img = ramp(90, 120);
        let r = resize_short_side(&img, 60).unwrap();
        assert_eq!((r.width(), r.height()), (60, 80));
    }

    #[test]
    fn composite_mask_extremes() {
        let bg = ImageF32::filled(6, 6, [0.0, 0.0, 0.0]);
        let fg = ImageF32::filled(3, 2, [1.0, 1.0, 1.0]);
        let place = Rect::new(2, 1, 3, 2);

        let ones = composite(&fg, &bg, &Mask::filled(3, 2, 1.0), place).unwrap();
        assert_eq!(crop(&ones, place).unwrap(), fg);

        let zeros = composite(&fg, &bg, &Mask::filled(3, 2, 0.0), place).unwrap();
        assert_eq!(zeros, bg);

        let half = composite(&fg, &bg, &Mask::filled(3, 2, 0.5), place).unwrap();
        for p in crop(&half, place).unwrap().pixels() {
            assert_eq!(p, [0.5, 0.5, 0.5]);
        }
        assert_eq!(half.pixel(0, 0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn composite_rejects_mismatched_mask() {
        let bg = ImageF32::filled(6, 6, [0.0; 3]);
        let fg = ImageF32::filled(3, 2, [1.0; 3]);
        let err = composite(&fg, &bg, &Mask::filled(2, 2, 1.0), Rect::new(0, 0, 3, 2));
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    fn arb_image() -> impl Strategy<Value = ImageF32> {
        (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f32..=1.0, w * h * 3).prop_map(move |d| ImageF32::new(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn composite_is_pointwise_convex(
            fg in proptest::collection::vec(0.0f32..=1.0, 4 * 3 * 3),
            bg in proptest::collection::vec(0.0f32..=1.0, 6 * 5 * 3),
            m in proptest::collection::vec(0.0f32..=1.0, 4 * 3),
        ) {
            let fg = ImageF32::new(4, 3, fg).unwrap();
            let bg = ImageF32::new(6, 5, bg).unwrap();
            let mask = Mask::new(4, 3, m).unwrap();
            let place = Rect::new(1, 2, 4, 3);
            let out = composite(&fg, &bg, &mask, place).unwrap();
            for j in 0..3 {
                for i in 0..4 {
                    let o = out.pixel(1 + i, 2 + j);
                    let f = fg.pixel(i, j);
                    let b = bg.pixel(1 + i, 2 + j);
                    for c in 0..3 {
                        let lo = f[c].min(b[c]) - 1e-6;
                        let hi = f[c].max(b[c]) + 1e-6;
                        prop_assert!(o[c] >= lo && o[c] <= hi);
                    }
                }
            }
        }

        #[test]
        fn nested_crops_compose(img in arb_image(), a in 0usize..100, b in 0usize..100) {
            let outer = Rect::new(a % img.width(), b % img.height(),
                                  img.width() - a % img.width(), img.height() - b % img.height());
            let inner = Rect::new((a / 7) % outer.w, (b / 7) % outer.h,
                                  outer.w - (a / 7) % outer.w, outer.h - (b / 7) % outer.h);
            let twice = crop(&crop(&img, outer).unwrap(), inner).unwrap();
            let once = crop(&img, outer.nest(inner)).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
