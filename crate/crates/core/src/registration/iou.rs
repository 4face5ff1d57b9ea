//! Intersection-over-union of planar polygons on a shared raster grid.

use super::RegistrationError;
use crate::geom::{GeomError, Polygon2D};
use crate::num::Real;

fn degenerate(msg: impl Into<String>) -> RegistrationError {
    RegistrationError::Degenerate(GeomError::Degenerate(msg.into()))
}

/// Column-index spans `[start, end)` covered by a polygon on one scanline.
///
/// Even-odd rule with cell-center sampling: a cell belongs to the polygon
/// when its center lies inside. Crossings use the half-open rule
/// (`p.y > y != q.y > y`), so vertices and horizontal edges on the scanline
/// cannot double-count.
fn scanline_spans<T: Real>(
    p: &Polygon2D<T>,
    y: T,
    x0: T,
    inv_h: T,
    nx: usize,
    spans: &mut Vec<(u32, u32)>,
) {
    spans.clear();
    let pts = p.points();
    let n = pts.len();
    let mut xs: Vec<T> = Vec::with_capacity(8);
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if (a.y > y) != (b.y > y) {
            let t = (y - a.y) / (b.y - a.y);
            xs.push(a.x + (b.x - a.x) * t);
        }
    }
    xs.sort_by(|u, v| u.partial_cmp(v).expect("finite crossings"));
    let half = T::of(0.5);
    for pair in xs.chunks(2) {
        let [lo, hi] = pair else { break };
        // Cells whose center x0 + (i + 0.5) h lies in [lo, hi).
        let start = ((*lo - x0) * inv_h - half).ceil().to_f64_lossy();
        let end = ((*hi - x0) * inv_h - half).ceil().to_f64_lossy();
        let start = start.max(0.0) as i64;
        let end = end.min(nx as f64) as i64;
        if end > start {
            spans.push((start as u32, end as u32));
        }
    }
}

fn overlap(a: &[(u32, u32)], b: &[(u32, u32)]) -> u64 {
    let mut total = 0u64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += (hi - lo) as u64;
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

fn cells(spans: &[(u32, u32)]) -> u64 {
    spans.iter().map(|&(s, e)| (e - s) as u64).sum()
}

/// Rasterized intersection-over-union of two polygons.
///
/// Both polygons are sampled on the same square grid spanning their joint
/// bounding box, with `resolution` cells along the longer side, so the
/// measure is symmetric and `iou(p, p) == 1`. `resolution` must be at
/// least 64.
pub fn iou<T: Real>(
    a: &Polygon2D<T>,
    b: &Polygon2D<T>,
    resolution: usize,
) -> Result<T, RegistrationError> {
    if resolution < 64 {
        return Err(degenerate(format!(
            "raster resolution must be at least 64, got {resolution}"
        )));
    }
    let bb = a.bounding_box().union(b.bounding_box());
    let ext = bb.extent();
    let long = ext.x.max(ext.y);
    if !(long > T::zero()) || !long.is_finite() {
        return Err(degenerate("degenerate joint bounding box"));
    }
    let h = long / T::of(resolution as f64);
    let inv_h = T::one() / h;
    let dims = |e: T| -> usize {
        let c = (e * inv_h).ceil().to_f64_lossy();
        (c.max(1.0) as usize).min(2 * resolution)
    };
    let (nx, ny) = (dims(ext.x), dims(ext.y));

    let mut count_a = 0u64;
    let mut count_b = 0u64;
    let mut inter = 0u64;
    let mut spans_a: Vec<(u32, u32)> = Vec::new();
    let mut spans_b: Vec<(u32, u32)> = Vec::new();
    let half = T::of(0.5);
    for j in 0..ny {
        let y = bb.min.y + h * (T::of(j as f64) + half);
        scanline_spans(a, y, bb.min.x, inv_h, nx, &mut spans_a);
        scanline_spans(b, y, bb.min.x, inv_h, nx, &mut spans_b);
        count_a += cells(&spans_a);
        count_b += cells(&spans_b);
        inter += overlap(&spans_a, &spans_b);
    }
    let union = count_a + count_b - inter;
    if union == 0 {
        return Err(degenerate("polygons cover no raster cells"));
    }
    Ok(T::of(inter as f64 / union as f64))
}
