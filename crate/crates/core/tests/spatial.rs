use dawa::spatial::*;
use dawa::{EstimateVector, Interval};
use proptest::prelude::*;

const SUB: usize = 16;

/// Integral of the piecewise-constant surface over a box whose corners lie on
/// the `1/SUB` subgrid, summed subcell by subcell.
fn subgrid_integral(values: &[f64], map: &HilbertMap, box_: [f64; 4]) -> f64 {
    let side = map.side();
    let to_sub = |v: f64| (v * SUB as f64).round() as usize;
    let (x0, x1, y0, y1) = (to_sub(box_[0]), to_sub(box_[1]), to_sub(box_[2]), to_sub(box_[3]));
    let mut total = 0.0;
    for sy in y0..y1 {
        for sx in x0..x1 {
            let (cx, cy) = (sx / SUB, sy / SUB);
            if cx < side && cy < side {
                total += values[map.index(cx, cy).unwrap()] / (SUB * SUB) as f64;
            }
        }
    }
    total
}

fn order_and_values() -> impl Strategy<Value = (u32, Vec<f64>)> {
    (1u32..=4).prop_flat_map(|g| (Just(g), prop::collection::vec(0.0f64..50.0, 1 << (2 * g))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fractional_rectangles_match_subgrid_integration(
        (g, values) in order_and_values(),
        corners in prop::array::uniform4(0usize..=1024),
    ) {
        let map = HilbertMap::new(g).unwrap();
        let side = map.side();
        let spec = GridSpec::new(g, 0.0, side as f64, 0.0, side as f64).unwrap();
        let to_units = |c: usize| (c % (side * SUB + 1)) as f64 / SUB as f64;
        let (a, b, c, d) = (to_units(corners[0]), to_units(corners[1]), to_units(corners[2]), to_units(corners[3]));
        let (x0, x1, y0, y1) = (a.min(b), a.max(b), c.min(d), c.max(d));
        let rect = RectangleQuery::from_real(&spec, x0, x1, y0, y1).unwrap();
        let xhat = EstimateVector::new(values.clone()).unwrap();
        let got = answer_rectangle(&xhat, &rect, &map).unwrap();
        let want = subgrid_integral(&values, &map, [x0, x1, y0, y1]);
        prop_assert!((got - want).abs() <= 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn ranges_cover_exactly_the_rectangle(g in 1u32..=5, r in prop::array::uniform4(0usize..32)) {
        let map = HilbertMap::new(g).unwrap();
        let side = map.side();
        let (a, b, c, d) = (r[0] % side, r[1] % side, r[2] % side, r[3] % side);
        let rect = RectangleQuery::cells(a.min(b), a.max(b), c.min(d), c.max(d)).unwrap();
        let ranges = rectangle_to_ranges(&rect, &map).unwrap();
        let mut covered = vec![false; map.cells()];
        for w in ranges.windows(2) {
            prop_assert!(w[0].hi + 1 < w[1].lo, "runs must be disjoint and non-adjacent");
        }
        for iv in &ranges {
            for pos in iv.lo..=iv.hi {
                covered[pos - 1] = true;
            }
        }
        for (d, &inside) in covered.iter().enumerate() {
            let (cx, cy) = map.cell(d).unwrap();
            let want = (rect.x_lo..=rect.x_hi).contains(&cx) && (rect.y_lo..=rect.y_hi).contains(&cy);
            prop_assert_eq!(inside, want);
        }
    }

    #[test]
    fn discretization_keeps_every_point(
        points in prop::collection::vec((-50.0f64..50.0, 0.0f64..1.0), 2..200),
        g in 1u32..=6,
    ) {
        let spec = GridSpec::bounding(&points, g);
        prop_assume!(spec.is_ok());
        let spec = spec.unwrap();
        let grid = grid_discretize(&points, &spec).unwrap();
        prop_assert_eq!(grid.total(), points.len() as u128);
        let x = linearize(&grid, &HilbertMap::new(g).unwrap()).unwrap();
        prop_assert_eq!(x.total(), points.len() as u128);
    }

    #[test]
    fn translation_does_not_change_bins(
        points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..100),
        shift in (-1e3f64..1e3, -1e3f64..1e3),
    ) {
        // dyadic coordinates keep the translation exact
        let dyadic = |v: f64| (v * 64.0).floor() / 64.0;
        let (sx, sy) = (dyadic(shift.0), dyadic(shift.1));
        let base = GridSpec::new(3, 0.0, 1.0, 0.0, 1.0).unwrap();
        let moved = GridSpec::new(3, sx, sx + 1.0, sy, sy + 1.0).unwrap();
        for &(x, y) in &points {
            let (x, y) = (dyadic(x), dyadic(y));
            prop_assert_eq!(base.cell_of(x, y), moved.cell_of(x + sx, y + sy));
        }
    }
}

#[test]
fn boundary_points_go_to_the_lower_cell() {
    let spec = GridSpec::new(2, 0.0, 4.0, 0.0, 4.0).unwrap();
    assert_eq!(spec.cell_of(0.0, 0.0), (0, 0));
    assert_eq!(spec.cell_of(1.0, 2.0), (0, 1));
    assert_eq!(spec.cell_of(1.5, 3.99), (1, 3));
    assert_eq!(spec.cell_of(4.0, 4.0), (3, 3));
    assert_eq!(spec.cell_of(-3.0, 9.0), (0, 3));
}

#[test]
fn whole_grid_is_one_range() {
    for g in 1..=6 {
        let map = HilbertMap::new(g).unwrap();
        let side = map.side();
        let rect = RectangleQuery::cells(0, side - 1, 0, side - 1).unwrap();
        assert_eq!(rectangle_to_ranges(&rect, &map).unwrap(), vec![Interval::new(1, side * side).unwrap()]);
    }
}

#[test]
fn aligned_quadrants_are_contiguous() {
    let map = HilbertMap::new(3).unwrap();
    for (x0, y0) in [(0, 0), (4, 0), (0, 4), (4, 4)] {
        let rect = RectangleQuery::cells(x0, x0 + 3, y0, y0 + 3).unwrap();
        let ranges = rectangle_to_ranges(&rect, &map).unwrap();
        assert_eq!(ranges.len(), 1);
        assert_eq!(ranges[0].len(), 16);
        assert_eq!((ranges[0].lo - 1) % 16, 0);
    }
}

#[test]
fn free_functions_agree_with_the_map() {
    let map = HilbertMap::new(4).unwrap();
    for d in 0..map.cells() {
        let (cx, cy) = hilbert_cell(&map, d).unwrap();
        assert_eq!(hilbert_index(&map, cx, cy).unwrap(), d);
    }
    assert_eq!(hilbert_cell(&map, 0).unwrap(), (0, 0));
    assert!(hilbert_index(&map, 16, 0).is_err());
    assert!(hilbert_cell(&map, 256).is_err());
}

#[test]
fn rectangles_outside_the_grid_are_rejected() {
    let map = HilbertMap::new(2).unwrap();
    let rect = RectangleQuery::cells(0, 4, 0, 0).unwrap();
    assert!(rectangle_to_ranges(&rect, &map).is_err());
    assert!(RectangleQuery::cells(3, 2, 0, 0).is_err());
    assert!(HilbertMap::new(0).is_err());
    assert!(GridSpec::new(3, 1.0, 1.0, 0.0, 1.0).is_err());
}

#[test]
fn workload_concatenates_ranges() {
    let map = HilbertMap::new(2).unwrap();
    let rects = [
        RectangleQuery::cells(0, 1, 0, 1).unwrap(),
        RectangleQuery::cells(1, 2, 0, 0).unwrap(),
    ];
    let w = rectangles_workload(&rects, &map).unwrap();
    let expected: usize = rects.iter().map(|r| rectangle_to_ranges(r, &map).unwrap().len()).sum();
    assert_eq!(w.len(), expected);
    assert_eq!(w.n(), 16);
}
