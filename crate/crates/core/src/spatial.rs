//! Two-dimensional data through the one-dimensional pipeline: points are
//! binned on a `2^g x 2^g` grid, the grid is ordered along a Hilbert curve,
//! and rectangle queries become sets of index ranges.

use serde::{Deserialize, Serialize};

use crate::domain::{DataVector, EstimateVector, Interval, RangeSum, Workload};
use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 16;

/// Grid of `2^g` bins per axis over a bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub g: u32,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridSpec {
    pub fn new(g: u32, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let spec = Self { g, x_min, x_max, y_min, y_max };
        spec.validate()?;
        Ok(spec)
    }

    /// Smallest box containing all points, with `g` bins per axis.
    pub fn bounding(points: &[(f64, f64)], g: u32) -> Result<Self> {
        let fold = |f: fn(&(f64, f64)) -> f64| {
            points
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (x_min, x_max) = fold(|p| p.0);
        let (y_min, y_max) = fold(|p| p.1);
        Self::new(g, x_min, x_max, y_min, y_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 || self.g > MAX_ORDER {
            return Err(Error::Parameter(format!("grid exponent must lie in 1..={MAX_ORDER}, got {}", self.g)));
        }
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.x_min, self.x_max) || !ok(self.y_min, self.y_max) {
            return Err(Error::Parameter("bounding box is empty or not finite".into()));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        1 << self.g
    }

    /// Real coordinate mapped to cell units, `[0, side]`.
    fn scaled(&self, v: f64, lo: f64, hi: f64) -> f64 {
        ((v - lo) / (hi - lo) * self.side() as f64).clamp(0.0, self.side() as f64)
    }

    pub fn to_cell_units(&self, x: f64, y: f64) -> (f64, f64) {
        (self.scaled(x, self.x_min, self.x_max), self.scaled(y, self.y_min, self.y_max))
    }

    /// Cell of a point. A point on a boundary between two cells goes to the
    /// one with the smaller index; points outside the box are clamped.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let (fx, fy) = self.to_cell_units(x, y);
        let idx = |f: f64| (f.ceil() as usize).saturating_sub(1).min(self.side() - 1);
        (idx(fx), idx(fy))
    }
}

/// Hilbert curve over the `2^g x 2^g` grid, starting at cell (0, 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertMap {
    pub g: u32,
}

fn rotate(n: usize, x: &mut usize, y: &mut usize, rx: usize, ry: usize) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

impl HilbertMap {
    pub fn new(g: u32) -> Result<Self> {
        if g == 0 || g > MAX_ORDER {
            return Err(Error::Parameter(format!("curve order must lie in 1..={MAX_ORDER}, got {g}")));
        }
        Ok(Self { g })
    }

    pub fn side(&self) -> usize {
        1 << self.g
    }

    /// Number of cells, the length of the linearized domain.
    pub fn cells(&self) -> usize {
        self.side() * self.side()
    }

    /// 0-based curve position of cell `(cx, cy)`.
    pub fn index(&self, cx: usize, cy: usize) -> Result<usize> {
        let n = self.side();
        if cx >= n || cy >= n {
            return Err(Error::Parameter(format!("cell ({cx}, {cy}) outside {n}x{n} grid")));
        }
        let (mut x, mut y) = (cx, cy);
        let mut d = 0;
        let mut s = n / 2;
        while s > 0 {
            let rx = usize::from(x & s > 0);
            let ry = usize::from(y & s > 0);
            d += s * s * ((3 * rx) ^ ry);
            rotate(n, &mut x, &mut y, rx, ry);
            s /= 2;
        }
        Ok(d)
    }

    /// Cell at 0-based curve position `d`.
    pub fn cell(&self, d: usize) -> Result<(usize, usize)> {
        let n = self.side();
        if d >= self.cells() {
            return Err(Error::Parameter(format!("curve position {d} outside 0..{}", self.cells())));
        }
        let (mut x, mut y) = (0, 0);
        let mut t = d;
        let mut s = 1;
        while s < n {
            let rx = 1 & (t / 2);
            let ry = 1 & (t ^ rx);
            rotate(s, &mut x, &mut y, rx, ry);
            x += s * rx;
            y += s * ry;
            t /= 4;
            s *= 2;
        }
        Ok((x, y))
    }
}

pub fn hilbert_index(map: &HilbertMap, cx: usize, cy: usize) -> Result<usize> {
    map.index(cx, cy)
}

pub fn hilbert_cell(map: &HilbertMap, d: usize) -> Result<(usize, usize)> {
    map.cell(d)
}

/// Counts on a square grid, stored row by row (`y` major).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountGrid {
    side: usize,
    cells: Vec<u64>,
}

impl CountGrid {
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            cells: vec![0; side * side],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, cx: usize, cy: usize) -> u64 {
        self.cells[cy * self.side + cx]
    }

    pub fn add(&mut self, cx: usize, cy: usize, v: u64) {
        self.cells[cy * self.side + cx] += v;
    }

    pub fn total(&self) -> u128 {
        self.cells.iter().map(|&c| c as u128).sum()
    }

    /// Sum over the inclusive cell rectangle.
    pub fn rect_sum(&self, r: &RectangleQuery) -> u128 {
        (r.y_lo..=r.y_hi)
            .flat_map(|cy| (r.x_lo..=r.x_hi).map(move |cx| (cx, cy)))
            .map(|(cx, cy)| self.get(cx, cy) as u128)
            .sum()
    }
}

pub fn grid_discretize(points: &[(f64, f64)], spec: &GridSpec) -> Result<CountGrid> {
    spec.validate()?;
    let mut grid = CountGrid::zeros(spec.side());
    for &(x, y) in points {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Parameter(format!("point ({x}, {y}) is not finite")));
        }
        let (cx, cy) = spec.cell_of(x, y);
        grid.add(cx, cy, 1);
    }
    Ok(grid)
}

/// Entry `d + 1` of the result is the count of the cell at curve position `d`.
pub fn linearize(grid: &CountGrid, map: &HilbertMap) -> Result<DataVector> {
    if grid.side() != map.side() {
        return Err(Error::Dimension {
            expected: map.side(),
            got: grid.side(),
        });
    }
    let counts = (0..map.cells())
        .map(|d| map.cell(d).map(|(cx, cy)| grid.get(cx, cy)))
        .collect::<Result<Vec<_>>>()?;
    DataVector::new(counts)
}

/// Inclusive cell ranges, optionally with the real-valued box (in cell
/// units) it was derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectangleQuery {
    pub x_lo: usize,
    pub x_hi: usize,
    pub y_lo: usize,
    pub y_hi: usize,
    pub fractional: Option<[f64; 4]>,
}

impl RectangleQuery {
    pub fn cells(x_lo: usize, x_hi: usize, y_lo: usize, y_hi: usize) -> Result<Self> {
        if x_lo > x_hi || y_lo > y_hi {
            return Err(Error::Parameter(format!("empty rectangle [{x_lo},{x_hi}]x[{y_lo},{y_hi}]")));
        }
        Ok(Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            fractional: None,
        })
    }

    /// Rectangle `[xlo, xhi] x [ylo, yhi]` in real units, clipped to the box.
    pub fn from_real(spec: &GridSpec, xlo: f64, xhi: f64, ylo: f64, yhi: f64) -> Result<Self> {
        spec.validate()?;
        if !(xlo <= xhi && ylo <= yhi) {
            return Err(Error::Parameter(format!("bad rectangle [{xlo},{xhi}]x[{ylo},{yhi}]")));
        }
        let (fx0, fy0) = spec.to_cell_units(xlo, ylo);
        let (fx1, fy1) = spec.to_cell_units(xhi, yhi);
        let side = spec.side();
        let span = |a: f64, b: f64| {
            let lo = (a.floor() as usize).min(side - 1);
            let hi = ((b.ceil() as usize).saturating_sub(1)).clamp(lo, side - 1);
            (lo, hi)
        };
        let (x_lo, x_hi) = span(fx0, fx1);
        let (y_lo, y_hi) = span(fy0, fy1);
        Ok(Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            fractional: Some([fx0, fx1, fy0, fy1]),
        })
    }

    fn check(&self, side: usize) -> Result<()> {
        if self.x_lo > self.x_hi || self.y_lo > self.y_hi || self.x_hi >= side || self.y_hi >= side {
            return Err(Error::Parameter(format!(
                "rectangle [{},{}]x[{},{}] outside {side}x{side} grid",
                self.x_lo, self.x_hi, self.y_lo, self.y_hi
            )));
        }
        Ok(())
    }
}

/// Maximal runs of consecutive curve positions covering the rectangle's
/// cells, as sorted 1-based intervals.
pub fn rectangle_to_ranges(rect: &RectangleQuery, map: &HilbertMap) -> Result<Vec<Interval>> {
    rect.check(map.side())?;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    // every aligned 2^j block occupies one contiguous run of 4^j positions
    let mut stack = vec![(0usize, 0usize, map.side())];
    while let Some((bx, by, s)) = stack.pop() {
        let (bx1, by1) = (bx + s - 1, by + s - 1);
        if bx1 < rect.x_lo || bx > rect.x_hi || by1 < rect.y_lo || by > rect.y_hi {
            continue;
        }
        if bx >= rect.x_lo && bx1 <= rect.x_hi && by >= rect.y_lo && by1 <= rect.y_hi {
            let area = s * s;
            let start = map.index(bx, by)? / area * area;
            runs.push((start, start + area - 1));
            continue;
        }
        let h = s / 2;
        stack.extend([(bx, by, h), (bx + h, by, h), (bx, by + h, h), (bx + h, by + h, h)]);
    }
    runs.sort_unstable();
    let mut merged: Vec<Interval> = Vec::new();
    for (a, b) in runs {
        match merged.last_mut() {
            Some(last) if last.hi == a => last.hi = b + 1,
            _ => merged.push(Interval { lo: a + 1, hi: b + 1 }),
        }
    }
    Ok(merged)
}

/// One-dimensional workload made of the runs of every rectangle.
pub fn rectangles_workload(rects: &[RectangleQuery], map: &HilbertMap) -> Result<Workload> {
    let mut queries = Vec::new();
    for r in rects {
        queries.extend(rectangle_to_ranges(r, map)?);
    }
    Workload::new(queries, map.cells())
}

fn axis_weights(lo: usize, hi: usize, frac: Option<(f64, f64)>) -> Vec<f64> {
    (lo..=hi)
        .map(|c| match frac {
            None => 1.0,
            Some((a, b)) => (b.min(c as f64 + 1.0) - a.max(c as f64)).max(0.0),
        })
        .collect()
}

/// Answer of a rectangle from a linearized estimate, treating each cell as
/// uniform: boundary cells contribute in proportion to the covered area.
pub fn answer_rectangle(xhat: &EstimateVector, rect: &RectangleQuery, map: &HilbertMap) -> Result<f64> {
    rect.check(map.side())?;
    crate::domain::check_len(map.cells(), xhat.len())?;
    let (fx, fy) = match rect.fractional {
        Some([x0, x1, y0, y1]) => (Some((x0, x1)), Some((y0, y1))),
        None => (None, None),
    };
    let wx = axis_weights(rect.x_lo, rect.x_hi, fx);
    let wy = axis_weights(rect.y_lo, rect.y_hi, fy);
    let full = |w: &[f64]| {
        let first = w.iter().position(|&v| v == 1.0);
        let last = w.iter().rposition(|&v| v == 1.0);
        first.zip(last).filter(|(a, b)| w[*a..=*b].iter().all(|&v| v == 1.0))
    };
    let values = xhat.values();
    let mut total = 0.0;
    let inner = full(&wx).zip(full(&wy));
    if let Some(((ax, bx), (ay, by))) = inner {
        let block = RectangleQuery::cells(rect.x_lo + ax, rect.x_lo + bx, rect.y_lo + ay, rect.y_lo + by)?;
        for iv in rectangle_to_ranges(&block, map)? {
            total += values.slice_sum(iv.lo - 1, iv.hi);
        }
    }
    for (j, &w_y) in wy.iter().enumerate() {
        for (i, &w_x) in wx.iter().enumerate() {
            let inside = inner.is_some_and(|((ax, bx), (ay, by))| (ax..=bx).contains(&i) && (ay..=by).contains(&j));
            if inside || w_x * w_y == 0.0 {
                continue;
            }
            let d = map.index(rect.x_lo + i, rect.y_lo + j)?;
            total += w_x * w_y * values[d];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_visits_all_cells_adjacently() {
        let m = HilbertMap::new(1).unwrap();
        let cells: Vec<_> = (0..4).map(|d| m.cell(d).unwrap()).collect();
        assert_eq!(cells[0], (0, 0));
        for w in cells.windows(2) {
            assert_eq!(w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1), 1);
        }
        let mut sorted = cells.clone();
        sorted.sort();
        assert_eq!(sorted, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn full_grid_is_one_run() {
        let m = HilbertMap::new(3).unwrap();
        let r = RectangleQuery::cells(0, 7, 0, 7).unwrap();
        assert_eq!(rectangle_to_ranges(&r, &m).unwrap(), vec![Interval::new(1, 64).unwrap()]);
    }

    #[test]
    fn single_cell_is_unit_run() {
        let m = HilbertMap::new(3).unwrap();
        let r = RectangleQuery::cells(5, 5, 2, 2).unwrap();
        let d = m.index(5, 2).unwrap();
        assert_eq!(rectangle_to_ranges(&r, &m).unwrap(), vec![Interval::unit(d + 1)]);
    }

    #[test]
    fn boundary_points_go_to_lower_cell() {
        let spec = GridSpec::new(2, 0.0, 4.0, 0.0, 4.0).unwrap();
        assert_eq!(spec.cell_of(1.0, 2.0), (0, 1));
        assert_eq!(spec.cell_of(0.0, 0.0), (0, 0));
        assert_eq!(spec.cell_of(4.0, 3.5), (3, 3));
        assert_eq!(spec.cell_of(-3.0, 9.0), (0, 3));
    }

    #[test]
    fn single_point() {
        let spec = GridSpec::new(2, 0.0, 1.0, 0.0, 1.0).unwrap();
        let g = grid_discretize(&[(0.6, 0.1)], &spec).unwrap();
        assert_eq!(g.total(), 1);
        assert_eq!(g.get(2, 0), 1);
    }

    #[test]
    fn delta_and_uniform_grids() {
        let m = HilbertMap::new(2).unwrap();
        let mut g = CountGrid::zeros(4);
        g.add(3, 1, 7);
        let x = linearize(&g, &m).unwrap();
        let d = m.index(3, 1).unwrap();
        assert_eq!(x.get(d + 1), Some(7));
        assert_eq!(x.total(), 7);
        let mut u = CountGrid::zeros(4);
        for cy in 0..4 {
            for cx in 0..4 {
                u.add(cx, cy, 2);
            }
        }
        assert!(linearize(&u, &m).unwrap().counts().iter().all(|&c| c == 2));
        assert!(linearize(&CountGrid::zeros(8), &m).is_err());
    }

    #[test]
    fn half_cell() {
        let spec = GridSpec::new(1, 0.0, 2.0, 0.0, 2.0).unwrap();
        let m = HilbertMap::new(1).unwrap();
        let xhat = EstimateVector::new(vec![4.0, 8.0, 16.0, 32.0]).unwrap();
        let r = RectangleQuery::from_real(&spec, 0.0, 0.5, 0.0, 1.0).unwrap();
        let d = m.index(0, 0).unwrap();
        assert_eq!(answer_rectangle(&xhat, &r, &m).unwrap(), 0.5 * xhat.values()[d]);
    }

    #[test]
    fn bad_inputs() {
        assert!(HilbertMap::new(0).is_err());
        assert!(GridSpec::new(3, 1.0, 1.0, 0.0, 1.0).is_err());
        let m = HilbertMap::new(2).unwrap();
        assert!(m.index(4, 0).is_err());
        assert!(m.cell(16).is_err());
        assert!(rectangle_to_ranges(&RectangleQuery::cells(0, 4, 0, 0).unwrap(), &m).is_err());
    }
}
