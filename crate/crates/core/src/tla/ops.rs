//! Stencil compositing primitives. Each writes only inside its stencil; every
//! other pixel of the input is carried over unchanged.

use rand::Rng;

use super::{check_pair, AugmentedPair, Result, TlaError};
use crate::geometry::BoundingBox;
use crate::imagery::{GrayMask, RasterImage, Resample, BACKGROUND};
use crate::labeling::Segment;

/// A `width`×`height` window of `sample`, taken at a uniformly random
/// position. A sample smaller than the window on either axis is first
/// upscaled (bilinear, aspect preserved) just enough to cover it.
pub fn cover_crop<R: Rng + ?Sized>(sample: &RasterImage, width: u32, height: u32, rng: &mut R) -> RasterImage {
    let (sw, sh) = sample.dimensions();
    let (nw, nh) = if sw < width || sh < height {
        let scale = (width as f64 / sw as f64).max(height as f64 / sh as f64);
        (((sw as f64 * scale).ceil() as u32).max(width), ((sh as f64 * scale).ceil() as u32).max(height))
    } else {
        (sw, sh)
    };
    let x = rng.random_range(0..=nw - width);
    let y = rng.random_range(0..=nh - height);
    if (x, y, width, height) == (0, 0, sw, sh) {
        return sample.clone();
    }
    if (nw, nh) == (sw, sh) {
        return sample.crop(x, y, width, height);
    }
    // Only the window of the upscaled sample is computed.
    sample.resample_window(nw, nh, BoundingBox::new(x, y, width, height))
}

fn check_segment(mask: &GrayMask, segment: &Segment) -> Result<()> {
    if !segment.bbox.fits_within(mask.width(), mask.height())
        || segment.runs().iter().any(|r| mask.row(r.y)[r.x0 as usize..r.x1 as usize].iter().any(|&v| v != segment.class_value))
    {
        return Err(TlaError::SegmentMismatch);
    }
    Ok(())
}

/// Copies `patch` (sized to `bbox`) into `out` at the segment's pixels.
fn paste_through(out: &mut RasterImage, segment: &Segment, bbox: BoundingBox, patch: &RasterImage) {
    let width = out.width() as usize;
    let pw = patch.width() as usize;
    let dst = out.data_mut();
    let src = patch.data();
    for r in segment.runs() {
        let d0 = (r.y as usize * width + r.x0 as usize) * 3;
        let s0 = ((r.y - bbox.y) as usize * pw + (r.x0 - bbox.x) as usize) * 3;
        let n = r.len() as usize * 3;
        dst[d0..d0 + n].copy_from_slice(&src[s0..s0 + n]);
    }
}

/// Replaces the segment's pixels with a random bbox-sized crop of `sample`.
/// The mask is not modified.
pub fn swap_foreground<R: Rng + ?Sized>(
    image: &RasterImage,
    mask: &GrayMask,
    segment: &Segment,
    sample: &RasterImage,
    rng: &mut R,
) -> Result<RasterImage> {
    check_pair(image, mask)?;
    check_segment(mask, segment)?;
    let patch = cover_crop(sample, segment.bbox.w, segment.bbox.h, rng);
    let mut out = image.clone();
    paste_through(&mut out, segment, segment.bbox, &patch);
    Ok(out)
}

/// Lays an image-sized crop of `sample` over every background (0) pixel.
pub fn apply_background_top<R: Rng + ?Sized>(
    image: &RasterImage,
    mask: &GrayMask,
    sample: &RasterImage,
    rng: &mut R,
) -> Result<RasterImage> {
    check_pair(image, mask)?;
    let bg = cover_crop(sample, image.width(), image.height(), rng);
    let mut out = image.clone();
    for ((px, bgp), &m) in out.data_mut().chunks_exact_mut(3).zip(bg.data().chunks_exact(3)).zip(mask.data()) {
        if m == BACKGROUND {
            px.copy_from_slice(bgp);
        }
    }
    Ok(out)
}

/// Where the pair lands on a background canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BottomPlacement {
    pub scale: f64,
    pub canvas: (u32, u32),
    pub offset: (u32, u32),
}

impl BottomPlacement {
    /// Canvas `scale` times the image, with the image placed at `offset`.
    pub fn new(image: (u32, u32), scale: f64, offset: (u32, u32)) -> Self {
        let canvas = (
            ((image.0 as f64 * scale).round() as u32).max(image.0),
            ((image.1 as f64 * scale).round() as u32).max(image.1),
        );
        Self { scale, canvas, offset }
    }

    /// Canvas `scale` times the image with the image centred.
    pub fn centered(image: (u32, u32), scale: f64) -> Self {
        let mut p = Self::new(image, scale, (0, 0));
        p.offset = ((p.canvas.0 - image.0) / 2, (p.canvas.1 - image.1) / 2);
        p
    }
}

/// Scale uniform in [1.0, 1.5], offset uniform over the free margin.
pub fn sample_bottom_placement<R: Rng + ?Sized>(image: (u32, u32), rng: &mut R) -> BottomPlacement {
    let scale = rng.random_range(1.0..=1.5);
    let mut p = BottomPlacement::new(image, scale, (0, 0));
    p.offset = (rng.random_range(0..=p.canvas.0 - image.0), rng.random_range(0..=p.canvas.1 - image.1));
    p
}

/// Pastes the whole pair onto a canvas cut from `sample` at an explicit placement.
/// The returned mask is 0 outside the pasted region.
pub fn apply_background_bottom_at<R: Rng + ?Sized>(
    image: &RasterImage,
    mask: &GrayMask,
    sample: &RasterImage,
    placement: BottomPlacement,
    rng: &mut R,
) -> Result<AugmentedPair> {
    check_pair(image, mask)?;
    let (cw, ch) = placement.canvas;
    let (ox, oy) = placement.offset;
    if ox + image.width() > cw || oy + image.height() > ch {
        return Err(TlaError::InvalidConfig(format!(
            "placement at ({ox}, {oy}) does not fit a {}x{} image on a {cw}x{ch} canvas",
            image.width(),
            image.height()
        )));
    }
    let mut canvas = cover_crop(sample, cw, ch, rng);
    let mut canvas_mask = GrayMask::background(cw, ch);
    let w = image.width() as usize;
    for y in 0..image.height() {
        let src = &image.data()[y as usize * w * 3..(y as usize + 1) * w * 3];
        let d0 = ((oy + y) as usize * cw as usize + ox as usize) * 3;
        canvas.data_mut()[d0..d0 + w * 3].copy_from_slice(src);
        let m0 = (oy + y) as usize * cw as usize + ox as usize;
        canvas_mask.data_mut()[m0..m0 + w].copy_from_slice(mask.row(y));
    }
    Ok(AugmentedPair { image: canvas, mask: canvas_mask, transforms: Vec::new() })
}

/// Places the pair on a larger background canvas at a random scale and offset.
/// Returns the composite and the placement used.
pub fn apply_background_bottom<R: Rng + ?Sized>(
    image: &RasterImage,
    mask: &GrayMask,
    sample: &RasterImage,
    rng: &mut R,
) -> Result<(AugmentedPair, BottomPlacement)> {
    let placement = sample_bottom_placement(image.dimensions(), rng);
    Ok((apply_background_bottom_at(image, mask, sample, placement, rng)?, placement))
}

/// Removes a segment: its pixels take the texture of `sample` (resized to the
/// image) and its mask pixels become background.
pub fn cutout_segment(
    image: &RasterImage,
    mask: &GrayMask,
    segment: &Segment,
    sample: &RasterImage,
) -> Result<AugmentedPair> {
    check_pair(image, mask)?;
    check_segment(mask, segment)?;
    let b = segment.bbox;
    let texture = sample.resample_window(image.width(), image.height(), b);
    let mut out = image.clone();
    paste_through(&mut out, segment, b, &texture);
    let mut out_mask = mask.clone();
    let mw = mask.width() as usize;
    for r in segment.runs() {
        let m0 = r.y as usize * mw;
        out_mask.data_mut()[m0 + r.x0 as usize..m0 + r.x1 as usize].fill(BACKGROUND);
    }
    Ok(AugmentedPair { image: out, mask: out_mask, transforms: Vec::new() })
}

/// Largest window of `src` with the aspect ratio of `target`, at a random position.
fn aspect_window<R: Rng + ?Sized>(src: BoundingBox, target: BoundingBox, rng: &mut R) -> BoundingBox {
    let (tw, th) = (target.w as f64, target.h as f64);
    let (mut cw, mut ch) = (src.w, src.h);
    if src.w as f64 * th > src.h as f64 * tw {
        cw = ((src.h as f64 * tw / th).round() as u32).clamp(1, src.w);
    } else {
        ch = ((src.w as f64 * th / tw).round() as u32).clamp(1, src.h);
    }
    let x = src.x + rng.random_range(0..=src.w - cw);
    let y = src.y + rng.random_range(0..=src.h - ch);
    BoundingBox::new(x, y, cw, ch)
}

/// Exchanges the contents of two same-class segments: each stencil is filled
/// with a crop of the other segment's bbox, resized to fit. The mask is not
/// modified.
pub fn mixup_segments<R: Rng + ?Sized>(
    image: &RasterImage,
    mask: &GrayMask,
    seg_a: &Segment,
    seg_b: &Segment,
    rng: &mut R,
) -> Result<RasterImage> {
    check_pair(image, mask)?;
    if seg_a == seg_b {
        return Err(TlaError::SameSegment);
    }
    if seg_a.class_value != seg_b.class_value {
        return Err(TlaError::ClassMismatch(seg_a.class_value, seg_b.class_value));
    }
    check_segment(mask, seg_a)?;
    check_segment(mask, seg_b)?;
    let mut out = image.clone();
    for (dst, src) in [(seg_a, seg_b), (seg_b, seg_a)] {
        let w = aspect_window(src.bbox, dst.bbox, rng);
        let patch = image.crop(w.x, w.y, w.w, w.h).resample(dst.bbox.w, dst.bbox.h);
        paste_through(&mut out, dst, dst.bbox, &patch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::connected_components;
    use crate::tla::rng_from_seed;

    fn bars_mask(w: u32, h: u32, rows: &[(u32, u32)]) -> GrayMask {
        GrayMask::from_fn(w, h, |x, y| {
            if x >= 2 && x < w - 2 && rows.iter().any(|&(y0, y1)| y >= y0 && y < y1) {
                255
            } else {
                0
            }
        })
    }

    fn textured(w: u32, h: u32, seed: u8) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| [(x * 7 + seed as u32) as u8, (y * 13) as u8, (x ^ y) as u8])
    }

    #[test]
    fn cover_crop_sizes() {
        let mut rng = rng_from_seed(1);
        let big = textured(2000, 1000, 0);
        let c = cover_crop(&big, 430, 90, &mut rng);
        assert_eq!(c.dimensions(), (430, 90));
        let small = textured(10, 40, 0);
        assert_eq!(cover_crop(&small, 100, 20, &mut rng).dimensions(), (100, 20));
        assert_eq!(cover_crop(&big, 2000, 1000, &mut rng), big);
    }

    #[test]
    fn swap_pastes_chosen_crop_through_stencil() {
        let mask = GrayMask::from_fn(500, 120, |x, y| if (20..450).contains(&x) && (10..100).contains(&y) && (x + y) % 5 != 0 { 255 } else { 0 });
        let image = textured(500, 120, 3);
        let sample = textured(2000, 1000, 99);
        let segs = connected_components(&mask, 255);
        assert_eq!(segs.len(), 1);
        let seg = &segs[0];
        assert_eq!((seg.bbox.w, seg.bbox.h), (430, 90));
        let out = swap_foreground(&image, &mask, seg, &sample, &mut rng_from_seed(42)).unwrap();
        let crop = cover_crop(&sample, 430, 90, &mut rng_from_seed(42));
        for y in 0..120 {
            for x in 0..500 {
                if seg.contains(x, y) {
                    assert_eq!(out.pixel(x, y), crop.pixel(x - seg.bbox.x, y - seg.bbox.y));
                } else {
                    assert_eq!(out.pixel(x, y), image.pixel(x, y));
                }
            }
        }
    }

    #[test]
    fn swap_with_identical_sample_is_identity() {
        let mask = bars_mask(40, 30, &[(5, 12)]);
        let image = textured(40, 30, 0);
        let seg = &connected_components(&mask, 255)[0];
        let b = seg.bbox;
        let sample = image.crop(b.x, b.y, b.w, b.h);
        assert_eq!(swap_foreground(&image, &mask, seg, &sample, &mut rng_from_seed(0)).unwrap(), image);
    }

    #[test]
    fn swap_rejects_foreign_segment() {
        let mask = bars_mask(40, 30, &[(5, 12)]);
        let other = bars_mask(40, 30, &[(15, 22)]);
        let seg = &connected_components(&other, 255)[0];
        assert!(matches!(
            swap_foreground(&textured(40, 30, 0), &mask, seg, &textured(5, 5, 0), &mut rng_from_seed(0)),
            Err(TlaError::SegmentMismatch)
        ));
    }

    #[test]
    fn background_top_stencil() {
        let image = textured(32, 32, 1);
        let full = GrayMask::filled(32, 32, 255);
        let sample = RasterImage::filled(64, 64, [1, 2, 3]);
        assert_eq!(apply_background_top(&image, &full, &sample, &mut rng_from_seed(3)).unwrap(), image);

        let checker = GrayMask::from_fn(32, 32, |x, y| if (x + y) % 2 == 0 { 255 } else { 0 });
        let out = apply_background_top(&image, &checker, &sample, &mut rng_from_seed(3)).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let expect = if checker.get(x, y) == 0 { [1, 2, 3] } else { image.pixel(x, y) };
                assert_eq!(out.pixel(x, y), expect);
            }
        }
    }

    #[test]
    fn background_bottom_identity_placement() {
        let image = textured(30, 20, 0);
        let mask = bars_mask(30, 20, &[(3, 8)]);
        let sample = textured(50, 50, 9);
        let p = BottomPlacement::new((30, 20), 1.0, (0, 0));
        let out = apply_background_bottom_at(&image, &mask, &sample, p, &mut rng_from_seed(0)).unwrap();
        assert_eq!((out.image, out.mask), (image, mask));
    }

    #[test]
    fn background_bottom_centered_border() {
        let image = textured(40, 20, 0);
        let mask = GrayMask::filled(40, 20, 255);
        let sample = textured(10, 10, 9);
        let p = BottomPlacement::centered((40, 20), 1.5);
        assert_eq!(p.canvas, (60, 30));
        assert_eq!(p.offset, (10, 5));
        let out = apply_background_bottom_at(&image, &mask, &sample, p, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out.mask.dimensions(), (60, 30));
        // 10-pixel border left/right, 5-pixel border top/bottom.
        for y in 0..30 {
            for x in 0..60 {
                let inside = (10..50).contains(&x) && (5..25).contains(&y);
                assert_eq!(out.mask.get(x, y) == 255, inside, "({x},{y})");
            }
        }
        assert_eq!(out.image.pixel(10, 5), image.pixel(0, 0));
    }

    #[test]
    fn cutout_only_segment_clears_mask() {
        let image = textured(40, 30, 0);
        let mask = bars_mask(40, 30, &[(5, 12)]);
        let seg = &connected_components(&mask, 255)[0];
        let out = cutout_segment(&image, &mask, seg, &RasterImage::filled(8, 8, [9, 9, 9])).unwrap();
        assert!(out.mask.data().iter().all(|&v| v == 0));
        assert_eq!(out.image.pixel(5, 6), [9, 9, 9]);
        assert_eq!(out.image.pixel(0, 0), image.pixel(0, 0));
    }

    #[test]
    fn mixup_exchanges_solid_colours() {
        let mask = bars_mask(60, 40, &[(4, 10), (20, 34)]);
        let segs = connected_components(&mask, 255);
        let image = RasterImage::from_fn(60, 40, |x, y| {
            if mask.get(x, y) == 255 {
                if y < 15 { [200, 10, 10] } else { [10, 10, 200] }
            } else {
                [0, 90, 0]
            }
        });
        let out = mixup_segments(&image, &mask, &segs[0], &segs[1], &mut rng_from_seed(5)).unwrap();
        for y in 0..40 {
            for x in 0..60 {
                let expect = if segs[0].contains(x, y) {
                    [10, 10, 200]
                } else if segs[1].contains(x, y) {
                    [200, 10, 10]
                } else {
                    [0, 90, 0]
                };
                assert_eq!(out.pixel(x, y), expect);
            }
        }
        assert!(matches!(mixup_segments(&image, &mask, &segs[0], &segs[0], &mut rng_from_seed(5)), Err(TlaError::SameSegment)));

        let same = RasterImage::from_fn(60, 40, |x, y| if mask.get(x, y) == 255 { [50, 50, 50] } else { [0, 0, 0] });
        assert_eq!(mixup_segments(&same, &mask, &segs[0], &segs[1], &mut rng_from_seed(5)).unwrap(), same);
    }
}
