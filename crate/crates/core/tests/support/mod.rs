//! Brute-force oracles and randomized case generators shared by the
//! integration tests. Nothing here calls into the code under test except to
//! build inputs or run the operation being checked.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use corebox::depthref::{assign_depths, reference_columns, DepthMode, DepthSpec, Layout, RowOrder, WithinRow};
use corebox::imagery::{GrayMask, LabelMap, RasterImage};
use corebox::labeling::connected_components;
use corebox::metrics::{self, ConfusionCounts};
use corebox::tla::{
    self, apply_background_bottom_at, apply_background_top, cutout_segment, mixup_segments, swap_foreground,
    AugmentationConfig, AugmentedPair, BottomPlacement, ClassicSettings, Sample, SamplePool,
};
use corebox::BoundingBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type CaseRng = ChaCha20Rng;

pub fn case_rng(seed: u64) -> CaseRng {
    CaseRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- inputs

/// Mask of random rectangles and speckle drawn from `values`.
pub fn random_mask(rng: &mut CaseRng, w: u32, h: u32, values: &[u8]) -> GrayMask {
    let mut mask = GrayMask::background(w, h);
    let style = rng.random_range(0..3);
    if style == 0 {
        let p = rng.random_range(0.05..0.7);
        for y in 0..h {
            for x in 0..w {
                if rng.random_bool(p) {
                    mask.set(x, y, values[rng.random_range(0..values.len())]);
                }
            }
        }
    } else {
        for _ in 0..rng.random_range(0..8) {
            let x = rng.random_range(0..w);
            let y = rng.random_range(0..h);
            let rw = rng.random_range(1..=w - x);
            let rh = rng.random_range(1..=h - y);
            let v = if style == 2 && rng.random_bool(0.3) { 0 } else { values[rng.random_range(0..values.len())] };
            for yy in y..y + rh {
                for xx in x..x + rw {
                    mask.set(xx, yy, v);
                }
            }
        }
    }
    mask
}

pub fn random_image(rng: &mut CaseRng, w: u32, h: u32) -> RasterImage {
    let mut data = vec![0u8; (w * h * 3) as usize];
    rng.fill(&mut data[..]);
    RasterImage::new(w, h, data).unwrap()
}

// ---------------------------------------------------------------- oracles

/// 8-connected components by breadth-first flood fill. Returns pixel sets
/// and boxes sorted by (top, left, first pixel in raster order).
pub fn oracle_components(mask: &GrayMask, value: u8) -> Vec<(BTreeSet<(u32, u32)>, BoundingBox)> {
    let (w, h) = mask.dimensions();
    let mut seen = vec![false; (w * h) as usize];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if seen[(y * w + x) as usize] || mask.get(x, y) != value {
                continue;
            }
            let mut pixels = BTreeSet::new();
            let mut queue = VecDeque::from([(x, y)]);
            seen[(y * w + x) as usize] = true;
            while let Some((cx, cy)) = queue.pop_front() {
                pixels.insert((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as u32, ny as u32);
                        if !seen[(ny * w + nx) as usize] && mask.get(nx, ny) == value {
                            seen[(ny * w + nx) as usize] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
            let x0 = pixels.iter().map(|p| p.0).min().unwrap();
            let x1 = pixels.iter().map(|p| p.0).max().unwrap();
            let y0 = pixels.iter().map(|p| p.1).min().unwrap();
            let y1 = pixels.iter().map(|p| p.1).max().unwrap();
            out.push((pixels, BoundingBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1), (y, x)));
        }
    }
    out.sort_by_key(|(_, b, first)| (b.y, b.x, *first));
    out.into_iter().map(|(p, b, _)| (p, b)).collect()
}

pub fn oracle_confusion(pred: &GrayMask, truth: &GrayMask, positive: u8) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for y in 0..truth.height() {
        for x in 0..truth.width() {
            match (pred.get(x, y) == positive, truth.get(x, y) == positive) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    c
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// (precision, recall, iou, f1, f2) straight from the definitions.
pub fn oracle_metrics(c: &ConfusionCounts) -> (f64, f64, f64, f64, f64) {
    let p = ratio(c.tp, c.tp + c.fp);
    let r = ratio(c.tp, c.tp + c.fn_);
    let iou = ratio(c.tp, c.tp + c.fp + c.fn_);
    let f = |b2: f64| if b2 * p + r == 0.0 { 0.0 } else { (1.0 + b2) * p * r / (b2 * p + r) };
    (p, r, iou, f(1.0), f(4.0))
}

/// (mean, median, max, min) with the median of an even list taken as the
/// mean of the two middle values.
pub fn oracle_aggregate(values: &[f64]) -> (f64, f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    (mean, median, v[n - 1], v[0])
}

/// Compares everything the metrics and labeling code reports for one random
/// mask pair against the oracles. Returns a description of each mismatch.
pub fn check_oracle_case(seed: u64) -> Vec<String> {
    let mut rng = case_rng(seed);
    let w = rng.random_range(1..=64);
    let h = rng.random_range(1..=64);
    let values: &[u8] = if rng.random_bool(0.5) { &[255] } else { &[1, 2, 255] };
    let truth = random_mask(&mut rng, w, h, values);
    let pred = if rng.random_bool(0.1) { truth.clone() } else { random_mask(&mut rng, w, h, values) };
    let mut bad = Vec::new();

    for &v in values {
        let oracle = oracle_components(&truth, v);
        let found = connected_components(&truth, v);
        if oracle.len() != found.len() {
            bad.push(format!("seed {seed}: value {v}: {} components vs oracle {}", found.len(), oracle.len()));
            continue;
        }
        for (s, (pixels, bbox)) in found.iter().zip(&oracle) {
            let got: BTreeSet<(u32, u32)> = s.pixels().collect();
            if &got != pixels || s.bbox != *bbox || s.pixel_count() != pixels.len() as u64 {
                bad.push(format!("seed {seed}: value {v}: component {} differs from oracle {}", s.bbox, bbox));
            }
        }
        let boxes = corebox::labeling::boxes_from_mask(&truth, v);
        if boxes != oracle.iter().map(|o| o.1).collect::<Vec<_>>() {
            bad.push(format!("seed {seed}: value {v}: boxes differ"));
        }

        let c = metrics::confusion(&pred, &truth, v).unwrap();
        let oc = oracle_confusion(&pred, &truth, v);
        if c != oc {
            bad.push(format!("seed {seed}: value {v}: counts {c:?} vs oracle {oc:?}"));
        }
        let report = metrics::evaluate_pair(&pred, &truth, v).unwrap();
        let (p, r, iou, f1, f2) = oracle_metrics(&oc);
        let got = (report.precision, report.recall, report.iou, report.f(1.0).unwrap(), report.f(2.0).unwrap());
        if got != (p, r, iou, f1, f2) {
            bad.push(format!("seed {seed}: value {v}: metrics {got:?} vs oracle {:?}", (p, r, iou, f1, f2)));
        }
    }
    bad
}

/// Summary statistics over `n` random pairs against the aggregate oracle.
pub fn check_summary_case(seed: u64, n: usize) -> Vec<String> {
    let mut rng = case_rng(seed);
    let mut reports = Vec::new();
    let mut cols: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for _ in 0..n {
        let w = rng.random_range(1..=32);
        let h = rng.random_range(1..=32);
        let truth = random_mask(&mut rng, w, h, &[255]);
        let pred = random_mask(&mut rng, w, h, &[255]);
        let (p, r, iou, f1, f2) = oracle_metrics(&oracle_confusion(&pred, &truth, 255));
        for (k, v) in [("precision", p), ("recall", r), ("iou", iou), ("f1", f1), ("f2", f2)] {
            cols.entry(k).or_default().push(v);
        }
        reports.push(metrics::evaluate_pair(&pred, &truth, 255).unwrap());
    }
    let s = metrics::summarize(&reports).unwrap();
    let f = |beta: f64| s.f_scores.iter().find(|f| f.beta == beta).unwrap().stats;
    let mut bad = Vec::new();
    for (name, agg) in [("precision", s.precision), ("recall", s.recall), ("iou", s.iou), ("f1", f(1.0)), ("f2", f(2.0))] {
        let (mean, median, max, min) = oracle_aggregate(&cols[name]);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if !(close(agg.mean, mean) && agg.median == median && agg.max == max && agg.min == min) {
            bad.push(format!("seed {seed}: {name} {agg:?} vs oracle {:?}", (mean, median, max, min)));
        }
    }
    if s.count != n {
        bad.push(format!("seed {seed}: count {} vs {n}", s.count));
    }
    bad
}

// ---------------------------------------------------------------- TLA

fn pool(rng: &mut CaseRng, classes: &[&str]) -> SamplePool {
    let mut foregrounds = BTreeMap::new();
    for &c in classes {
        let samples = (0..rng.random_range(1..=3))
            .map(|i| {
                let (w, h) = (rng.random_range(1..=40), rng.random_range(1..=40));
                Sample { id: format!("{c}/{i}"), image: random_image(rng, w, h) }
            })
            .collect();
        foregrounds.insert(c.to_string(), samples);
    }
    let backgrounds = (0..rng.random_range(1..=3))
        .map(|i| {
            let (w, h) = (rng.random_range(1..=80), rng.random_range(1..=80));
            Sample { id: format!("bg/{i}"), image: random_image(rng, w, h) }
        })
        .collect();
    SamplePool { foregrounds, backgrounds, warnings: Vec::new() }
}

fn unchanged_outside(before: &RasterImage, after: &RasterImage, inside: impl Fn(u32, u32) -> bool) -> bool {
    (0..before.height()).all(|y| (0..before.width()).all(|x| inside(x, y) || before.pixel(x, y) == after.pixel(x, y)))
}

/// One randomized case exercising every stencil primitive and the full
/// pipeline. Returns a description of each violated law.
pub fn check_tla_case(seed: u64) -> Vec<String> {
    let mut rng = case_rng(seed);
    let labels = if rng.random_bool(0.5) {
        LabelMap::core_column()
    } else {
        LabelMap::new([("core_column", 255), ("tray", 128)]).unwrap()
    };
    let values: Vec<u8> = labels.iter().map(|(_, v)| v).collect();
    let classes: Vec<&str> = labels.iter().map(|(n, _)| n).collect();
    let (w, h) = (rng.random_range(2..=48), rng.random_range(2..=48));
    let image = random_image(&mut rng, w, h);
    let mask = random_mask(&mut rng, w, h, &values);
    let pool = pool(&mut rng, &classes);
    let mut bad = Vec::new();
    let mut fail = |what: &str| bad.push(format!("seed {seed}: {what}"));

    let segments: Vec<_> = values.iter().flat_map(|&v| connected_components(&mask, v)).collect();
    let sub = rng.random::<u64>();

    for s in &segments {
        let fg = &pool.foregrounds[labels.name_of(s.class_value).unwrap()][0].image;
        let out = swap_foreground(&image, &mask, s, fg, &mut tla::rng_from_seed(sub)).unwrap();
        if out.dimensions() != image.dimensions() || !unchanged_outside(&image, &out, |x, y| s.contains(x, y)) {
            fail("swap touched pixels outside its segment");
        }
        let again = swap_foreground(&image, &mask, s, fg, &mut tla::rng_from_seed(sub)).unwrap();
        if again != out {
            fail("swap not deterministic");
        }

        let cut = cutout_segment(&image, &mask, s, &pool.backgrounds[0].image).unwrap();
        if !unchanged_outside(&image, &cut.image, |x, y| s.contains(x, y)) {
            fail("cutout touched pixels outside its segment");
        }
        for y in 0..h {
            for x in 0..w {
                let expect = if s.contains(x, y) { 0 } else { mask.get(x, y) };
                if cut.mask.get(x, y) != expect {
                    fail("cutout mask law");
                    return bad;
                }
            }
        }
    }

    for pair in segments.windows(2) {
        if pair[0].class_value != pair[1].class_value {
            continue;
        }
        let out = mixup_segments(&image, &mask, &pair[0], &pair[1], &mut tla::rng_from_seed(sub)).unwrap();
        if !unchanged_outside(&image, &out, |x, y| pair[0].contains(x, y) || pair[1].contains(x, y)) {
            fail("mixup touched pixels outside its two segments");
        }
    }

    let bg = &pool.backgrounds[rng.random_range(0..pool.backgrounds.len())].image;
    let top = apply_background_top(&image, &mask, bg, &mut tla::rng_from_seed(sub)).unwrap();
    if !unchanged_outside(&image, &top, |x, y| mask.get(x, y) == 0) {
        fail("background top touched foreground pixels");
    }

    let scale = rng.random_range(1.0..=1.5);
    let mut placement = BottomPlacement::new((w, h), scale, (0, 0));
    placement.offset = (rng.random_range(0..=placement.canvas.0 - w), rng.random_range(0..=placement.canvas.1 - h));
    let under = apply_background_bottom_at(&image, &mask, bg, placement, &mut tla::rng_from_seed(sub)).unwrap();
    let (ox, oy) = placement.offset;
    if under.image.dimensions() != placement.canvas || under.mask.dimensions() != placement.canvas {
        fail("background bottom canvas size");
    }
    for y in 0..placement.canvas.1 {
        for x in 0..placement.canvas.0 {
            let inside = x >= ox && y >= oy && x < ox + w && y < oy + h;
            let ok = if inside {
                under.mask.get(x, y) == mask.get(x - ox, y - oy) && under.image.pixel(x, y) == image.pixel(x - ox, y - oy)
            } else {
                under.mask.get(x, y) == 0
            };
            if !ok {
                fail("background bottom placement law");
                return bad;
            }
        }
    }

    // Full pipeline: closure, dimensions, determinism.
    let mut foreground = BTreeMap::new();
    for c in &classes {
        foreground.insert(c.to_string(), rng.random_range(0.0..=1.0));
    }
    let resize = rng.random_bool(0.2).then(|| [rng.random_range(1..=64), rng.random_range(1..=64)]);
    let config = AugmentationConfig {
        foreground,
        background_top: rng.random_range(0.0..=1.0),
        background_bottom: if rng.random_bool(0.5) { rng.random_range(0.0..=1.0) } else { 0.0 },
        cutout: rng.random_range(0.0..=0.5),
        mixup: rng.random_range(0.0..=1.0),
        classic: ClassicSettings {
            hflip_p: 0.5,
            vflip_p: 0.5,
            rotate_p: rng.random_range(0.0..=1.0),
            rotations: vec![90.0, 180.0, 270.0, -10.0, 7.5],
            noise_p: 0.5,
            noise_sigma: 4.0,
            jitter_p: 0.5,
            jitter: 0.2,
            resize,
        },
        seed: rng.random(),
    };
    let input = AugmentedPair::new(image.clone(), mask.clone()).unwrap();
    let a = tla::augment(input.clone(), &pool, &config, &labels).unwrap();
    let b = tla::augment(input, &pool, &config, &labels).unwrap();
    if a != b {
        fail("augment not deterministic for a fixed seed");
    }
    if a.image.dimensions() != a.mask.dimensions() {
        fail("augment output image and mask sizes differ");
    }
    if let Some([rw, rh]) = resize {
        if a.image.dimensions() != (rw, rh) {
            fail("resize target not honoured");
        }
    } else if config.background_bottom == 0.0 && config.classic.rotate_p == 0.0 && a.image.dimensions() != (w, h) {
        fail("dimensions changed without a geometric transform");
    }
    let allowed: BTreeSet<u8> = mask.values().into_iter().chain([0]).collect();
    if !a.mask.values().is_subset(&allowed) {
        fail("augment introduced new mask values");
    }
    bad
}

// ---------------------------------------------------------------- depth

/// Random non-overlapping column layout checked for sum, contiguity,
/// monotonicity and ordering.
pub fn check_depth_case(seed: u64) -> Vec<String> {
    let mut rng = case_rng(seed);
    let n = rng.random_range(1..=12);
    let boxes: Vec<BoundingBox> = (0..n)
        .map(|i| BoundingBox::new(rng.random_range(0..500), i * 120 + rng.random_range(0..20), rng.random_range(1..4000), rng.random_range(1..100)))
        .collect();
    let top = rng.random_range(-100.0..5000.0);
    let bottom = top + rng.random_range(0.001..50.0);
    let mut spec = DepthSpec::new(top, bottom);
    spec.layout = Layout {
        rows: if rng.random_bool(0.5) { RowOrder::TopToBottom } else { RowOrder::BottomToTop },
        within: if rng.random_bool(0.5) { WithinRow::LeftToRight } else { WithinRow::RightToLeft },
    };
    let mut bad = Vec::new();
    let a = reference_columns(&boxes, &spec).unwrap();
    let total: f64 = a.intervals.iter().map(|iv| iv.to - iv.from).sum();
    if (total - (bottom - top)).abs() > 1e-9 {
        bad.push(format!("seed {seed}: lengths sum to {total}, span {}", bottom - top));
    }
    if a.intervals.first().unwrap().from != top || a.intervals.last().unwrap().to != bottom {
        bad.push(format!("seed {seed}: ends not pinned to top/bottom"));
    }
    for w in a.intervals.windows(2) {
        if w[0].to != w[1].from {
            bad.push(format!("seed {seed}: gap between {} and {}", w[0], w[1]));
        }
    }
    if a.intervals.iter().any(|iv| iv.to < iv.from) {
        bad.push(format!("seed {seed}: negative interval"));
    }
    let mut columns: Vec<usize> = a.intervals.iter().map(|iv| iv.column).collect();
    columns.sort();
    if columns != (0..boxes.len()).collect::<Vec<_>>() {
        bad.push(format!("seed {seed}: columns are not a permutation"));
    }
    // Row order: depth order follows y ascending (or descending).
    let ys: Vec<u32> = a.intervals.iter().map(|iv| boxes[iv.column].y).collect();
    let sorted = ys.windows(2).all(|p| match spec.layout.rows {
        RowOrder::TopToBottom => p[0] <= p[1],
        RowOrder::BottomToTop => p[0] >= p[1],
    });
    if !sorted {
        bad.push(format!("seed {seed}: depth order ignores row layout"));
    }
    // Proportionality against an oracle computed from widths directly.
    let total_w: f64 = a.intervals.iter().map(|iv| boxes[iv.column].w as f64).sum();
    for iv in &a.intervals {
        let expect = (bottom - top) * boxes[iv.column].w as f64 / total_w;
        if ((iv.to - iv.from) - expect).abs() > 1e-9 {
            bad.push(format!("seed {seed}: {iv} not proportional to width"));
        }
    }
    // Fixed-length mode: exact steps, never beyond the bottom.
    let meters = rng.random_range(0.1..5.0);
    let fixed = assign_depths(&boxes, &DepthSpec { mode: DepthMode::FixedLength { meters }, ..spec }).unwrap();
    for (i, iv) in fixed.intervals.iter().enumerate() {
        let from = top + meters * i as f64;
        if iv.from != from || (from < bottom && iv.to != (from + meters).min(bottom)) {
            bad.push(format!("seed {seed}: fixed interval {iv} unexpected"));
        }
    }
    bad
}
