//! Convex hulls of candidate intersections and the pixels they enclose.
//!
//! Everything here is exact integer arithmetic. Pixel `(x, y)` belongs to a
//! hull when its center `(x + 0.5, y + 0.5)` lies inside or on the boundary;
//! centers are tested on the doubled grid `(2x + 1, 2y + 1)` against doubled
//! hull coordinates so that no fractions appear.

use std::cmp::Ordering;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

/// A candidate intersection. Ids of a vertex set are dense from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Orientation of `o -> a -> b`: positive for a left (counter-clockwise) turn.
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> i128 {
    (a.x - o.x) as i128 * (b.y - o.y) as i128 - (a.y - o.y) as i128 * (b.x - o.x) as i128
}

/// Strictly convex polygon, counter-clockwise from its lexicographically
/// smallest point. Fewer than three points means the input was degenerate
/// (empty, a single point or collinear).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Hull {
    points: Vec<Point>,
}

impl Hull {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_degenerate(&self) -> bool {
        self.points.len() < 3
    }

    /// Twice the signed shoelace area; nonnegative for hulls built here.
    pub fn twice_area(&self) -> i128 {
        if self.is_degenerate() {
            return 0;
        }
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                a.x as i128 * b.y as i128 - b.x as i128 * a.y as i128
            })
            .sum()
    }

    /// Closed-hull membership of an arbitrary lattice point.
    pub fn contains_point(&self, p: Point) -> bool {
        if self.is_degenerate() {
            return false;
        }
        let n = self.points.len();
        (0..n).all(|i| cross(self.points[i], self.points[(i + 1) % n], p) >= 0)
    }

    /// Whether the center of pixel `(x, y)` is inside or on the hull.
    pub fn contains_pixel(&self, x: i64, y: i64) -> bool {
        if self.is_degenerate() {
            return false;
        }
        let c = Point::new(2 * x + 1, 2 * y + 1);
        let n = self.points.len();
        (0..n).all(|i| {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            cross(Point::new(2 * a.x, 2 * a.y), Point::new(2 * b.x, 2 * b.y), c) >= 0
        })
    }
}

/// Andrew's monotone chain. Duplicates and collinear boundary points are
/// dropped.
pub fn convex_hull<I>(points: I) -> Hull
where
    I: IntoIterator<Item = Point>,
{
    let mut pts: Vec<Point> = points.into_iter().collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return Hull { points: pts };
    }

    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    // last point repeats the first
    hull.pop();
    Hull { points: hull }
}

/// Hull of a vertex list.
pub fn vertex_hull<'a, I>(vertices: I) -> Hull
where
    I: IntoIterator<Item = &'a Vertex>,
{
    convex_hull(vertices.into_iter().map(Vertex::point))
}

/// Shoelace area in square pixels, an integer or half-integer.
pub fn hull_area(hull: &Hull) -> Ratio<i128> {
    Ratio::new(hull.twice_area(), 2)
}

/// Inclusive run of enclosed pixels `x0..=x1` on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

impl Span {
    pub fn count(&self) -> u32 {
        self.x1 - self.x0 + 1
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b) - if b < 0 && a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// Row-by-row runs of the pixels whose centers lie in the closed hull,
/// clipped to a `width` x `height` frame. Degenerate hulls enclose nothing.
pub fn row_spans(hull: &Hull, width: u32, height: u32) -> Vec<Span> {
    let mut spans = Vec::new();
    if hull.is_degenerate() || width == 0 || height == 0 {
        return spans;
    }
    let pts = hull.points();
    let n = pts.len();
    let ymin = pts.iter().map(|p| p.y).min().unwrap_or(0);
    let ymax = pts.iter().map(|p| p.y).max().unwrap_or(0);
    // rows whose doubled center 2y+1 falls within [2*ymin, 2*ymax]
    let row_lo = ceil_div(2 * ymin as i128 - 1, 2).max(0);
    let row_hi = floor_div(2 * ymax as i128 - 1, 2).min(height as i128 - 1);
    for y in row_lo..=row_hi {
        let cy = 2 * y + 1;
        let mut lo = i128::MIN;
        let mut hi = i128::MAX;
        let mut empty = false;
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            let (ax, ay) = (2 * a.x as i128, 2 * a.y as i128);
            let (dx, dy) = (2 * (b.x - a.x) as i128, 2 * (b.y - a.y) as i128);
            // left of a->b:  dx*(cy-ay) - dy*(cx-ax) >= 0
            let k = dx * (cy - ay);
            match dy.cmp(&0) {
                Ordering::Equal => {
                    if k < 0 {
                        empty = true;
                        break;
                    }
                }
                Ordering::Greater => hi = hi.min(ax + floor_div(k, dy)),
                Ordering::Less => lo = lo.max(ax + ceil_div(k, dy)),
            }
        }
        if empty || lo > hi {
            continue;
        }
        // cx = 2x + 1 within [lo, hi]
        let x0 = if lo == i128::MIN { 0 } else { ceil_div(lo - 1, 2).max(0) };
        let x1 = if hi == i128::MAX {
            width as i128 - 1
        } else {
            floor_div(hi - 1, 2).min(width as i128 - 1)
        };
        if x0 <= x1 {
            spans.push(Span {
                y: y as u32,
                x0: x0 as u32,
                x1: x1 as u32,
            });
        }
    }
    spans
}

/// All pixels `(x, y)` enclosed by the hull, row-major.
pub fn enclosed_pixels(hull: &Hull, width: u32, height: u32) -> Vec<(u32, u32)> {
    row_spans(hull, width, height)
        .into_iter()
        .flat_map(|s| (s.x0..=s.x1).map(move |x| (x, s.y)))
        .collect()
}
