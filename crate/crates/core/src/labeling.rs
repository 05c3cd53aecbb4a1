//! 8-connected component labelling of a single mask value.
//!
//! The mask is scanned into horizontal runs; runs on consecutive rows whose
//! extents touch (including diagonally) are merged with a union-find. Work
//! and memory scale with the number of runs rather than the number of pixels,
//! which keeps full-resolution core box masks cheap.

use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;
use crate::imagery::GrayMask;

/// Horizontal run of pixels `[x0, x1)` on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Run {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

impl Run {
    pub fn len(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn is_empty(&self) -> bool {
        self.x1 == self.x0
    }
}

/// One maximal 8-connected component of a class value.
///
/// The pixel set is stored as row runs sorted by `(y, x0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub class_value: u8,
    pub bbox: BoundingBox,
    runs: Vec<Run>,
}

impl Segment {
    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn pixel_count(&self) -> u64 {
        self.runs.iter().map(|r| r.len() as u64).sum()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.runs.iter().flat_map(|r| (r.x0..r.x1).map(move |x| (x, r.y)))
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        if !self.bbox.contains(x, y) {
            return false;
        }
        let start = self.runs.partition_point(|r| r.y < y);
        self.runs[start..]
            .iter()
            .take_while(|r| r.y == y)
            .any(|r| x >= r.x0 && x < r.x1)
    }
}

struct DisjointRuns {
    parent: Vec<u32>,
}

impl DisjointRuns {
    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let p = self.parent[i as usize];
            self.parent[i as usize] = self.parent[p as usize];
            i = p;
        }
        i
    }

    /// Keeps the smaller index as root so roots are the raster-first run.
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

fn scan_runs(mask: &GrayMask, value: u8) -> (Vec<Run>, Vec<usize>) {
    let mut runs = Vec::new();
    let mut row_start = Vec::with_capacity(mask.height() as usize + 1);
    for y in 0..mask.height() {
        row_start.push(runs.len());
        let row = mask.row(y);
        let mut x = 0usize;
        while x < row.len() {
            if row[x] != value {
                x += 1;
                continue;
            }
            let x0 = x;
            while x < row.len() && row[x] == value {
                x += 1;
            }
            runs.push(Run { y, x0: x0 as u32, x1: x as u32 });
        }
    }
    row_start.push(runs.len());
    (runs, row_start)
}

/// Labels runs; returns the runs and, for each, the index of its component
/// (components numbered in raster order of their first pixel).
fn label(mask: &GrayMask, value: u8) -> (Vec<Run>, Vec<u32>, usize) {
    let (runs, row_start) = scan_runs(mask, value);
    let mut sets = DisjointRuns { parent: (0..runs.len() as u32).collect() };
    for y in 1..mask.height() as usize {
        let (mut i, prev_end) = (row_start[y - 1], row_start[y]);
        let (mut j, cur_end) = (row_start[y], row_start[y + 1]);
        while i < prev_end && j < cur_end {
            let (p, c) = (runs[i], runs[j]);
            // 8-adjacency: [p0, p1) and [c0, c1) touch when p0 <= c1 and c0 <= p1.
            if p.x0 <= c.x1 && c.x0 <= p.x1 {
                sets.union(i as u32, j as u32);
            }
            if p.x1 <= c.x1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    let mut comp_of_root = vec![u32::MAX; runs.len()];
    let mut comp = Vec::with_capacity(runs.len());
    let mut count = 0usize;
    for i in 0..runs.len() as u32 {
        let root = sets.find(i) as usize;
        if comp_of_root[root] == u32::MAX {
            comp_of_root[root] = count as u32;
            count += 1;
        }
        comp.push(comp_of_root[root]);
    }
    (runs, comp, count)
}

fn bboxes(runs: &[Run], comp: &[u32], count: usize) -> Vec<(u32, u32, u32, u32)> {
    let mut b = vec![(u32::MAX, u32::MAX, 0u32, 0u32); count];
    for (r, &c) in runs.iter().zip(comp) {
        let e = &mut b[c as usize];
        e.0 = e.0.min(r.x0);
        e.1 = e.1.min(r.y);
        e.2 = e.2.max(r.x1);
        e.3 = e.3.max(r.y + 1);
    }
    b
}

/// Component order: bbox top, then bbox left, then raster order of the first pixel.
fn ordering(b: &[(u32, u32, u32, u32)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..b.len()).collect();
    idx.sort_by_key(|&i| (b[i].1, b[i].0, i));
    idx
}

/// All maximal 8-connected components of `class_value`, ordered top-to-bottom
/// by bbox y, then by bbox x.
pub fn connected_components(mask: &GrayMask, class_value: u8) -> Vec<Segment> {
    let (runs, comp, count) = label(mask, class_value);
    let b = bboxes(&runs, &comp, count);
    let mut grouped: Vec<Vec<Run>> = vec![Vec::new(); count];
    for (r, &c) in runs.into_iter().zip(&comp) {
        grouped[c as usize].push(r);
    }
    let mut grouped: Vec<Option<Vec<Run>>> = grouped.into_iter().map(Some).collect();
    ordering(&b)
        .into_iter()
        .map(|i| {
            let (x0, y0, x1, y1) = b[i];
            Segment {
                class_value,
                bbox: BoundingBox::new(x0, y0, x1 - x0, y1 - y0),
                runs: grouped[i].take().expect("each component visited once"),
            }
        })
        .collect()
}

/// Tight bounding boxes of the 8-connected components of `class_value`, in
/// the same order as [`connected_components`].
pub fn boxes_from_mask(mask: &GrayMask, class_value: u8) -> Vec<BoundingBox> {
    let (runs, comp, count) = label(mask, class_value);
    let b = bboxes(&runs, &comp, count);
    ordering(&b)
        .into_iter()
        .map(|i| {
            let (x0, y0, x1, y1) = b[i];
            BoundingBox::new(x0, y0, x1 - x0, y1 - y0)
        })
        .collect()
}
