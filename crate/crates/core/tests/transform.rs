use dawa::transform::{transform_query, transform_workload};
use dawa::{uniform_expand, Histogram, Interval, Partition, Workload};
use proptest::prelude::*;

fn partition_and_queries() -> impl Strategy<Value = (Partition, Vec<Interval>)> {
    prop::collection::vec(1usize..6, 1..16).prop_flat_map(|lengths| {
        let p = Partition::from_lengths(&lengths).unwrap();
        let n = p.n();
        let queries = prop::collection::vec((1..=n, 1..=n), 1..12)
            .prop_map(|pairs| pairs.into_iter().map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap()).collect());
        (Just(p), queries)
    })
}

/// Row entry computed cell by cell: the share of bucket `b` covered by `q`.
fn naive_entry(q: Interval, b: Interval) -> f64 {
    (b.lo..=b.hi).filter(|j| q.contains(*j)).count() as f64 / b.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expanded_answers_equal_transformed_answers(
        (p, queries) in partition_and_queries(),
        seed_stats in prop::collection::vec(-100.0f64..500.0, 16),
    ) {
        let n = p.n();
        let s = &seed_stats[..p.len()];
        let w = Workload::new(queries, n).unwrap();
        let xhat = uniform_expand(&Histogram::new(p.clone(), s.to_vec()).unwrap(), n).unwrap();
        let direct = w.answers(&xhat).unwrap();
        let what = transform_workload(&w, &p).unwrap();
        let via = what.apply(s).unwrap();
        for (a, b) in direct.iter().zip(&via) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn entries_are_coverage_fractions((p, queries) in partition_and_queries()) {
        let w = Workload::new(queries.clone(), p.n()).unwrap();
        let what = transform_workload(&w, &p).unwrap();
        let dense = what.to_dense();
        prop_assert_eq!((dense.nrows(), dense.ncols()), (queries.len(), p.len()));
        for (i, &q) in queries.iter().enumerate() {
            let row = transform_query(q, &p).unwrap();
            for (j, &b) in p.buckets().iter().enumerate() {
                let want = naive_entry(q, b);
                prop_assert!((what.get(i, j) - want).abs() <= 1e-12);
                prop_assert!((dense[(i, j)] - want).abs() <= 1e-12);
                prop_assert!((row[j] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn column_norms_and_block_products_match_dense(
        (p, queries) in partition_and_queries(),
        v in prop::collection::vec(-3.0f64..3.0, 16),
        start in 0usize..16,
    ) {
        let w = Workload::new(queries, p.n()).unwrap();
        let what = transform_workload(&w, &p).unwrap();
        let dense = what.to_dense();
        for (j, norm) in what.column_sq_norms().iter().enumerate() {
            prop_assert!((norm - dense.column(j).norm_squared()).abs() <= 1e-9);
        }
        let k = p.len();
        let start = start % k;
        let len = (k - start).min(v.len());
        let block = &v[..len];
        let got = what.project_block(start, block);
        for (i, g) in got.iter().enumerate() {
            let want: f64 = block.iter().enumerate().map(|(o, b)| dense[(i, start + o)] * b).sum();
            prop_assert!((g - want).abs() <= 1e-9);
        }
    }
}

#[test]
fn unit_partition_gives_indicator_rows() {
    let p = Partition::unit(6);
    let row = transform_query(Interval::new(2, 4).unwrap(), &p).unwrap();
    assert_eq!(row, vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
}

#[test]
fn single_bucket_gives_coverage_share() {
    let row = transform_query(Interval::new(3, 5).unwrap(), &Partition::single(12)).unwrap();
    assert_eq!(row, vec![0.25]);
}

#[test]
fn queries_outside_the_domain_are_rejected() {
    let p = Partition::from_lengths(&[2, 2]).unwrap();
    assert!(transform_query(Interval::new(3, 5).unwrap(), &p).is_err());
}

#[test]
fn csv_dump_has_one_row_per_query() {
    let p = Partition::from_lengths(&[2, 1, 4, 3]).unwrap();
    let w = Workload::new(vec![Interval::new(2, 6).unwrap(), Interval::new(1, 10).unwrap()], 10).unwrap();
    let mut out = Vec::new();
    transform_workload(&w, &p).unwrap().write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), vec!["0.5,1,0.75,0", "1,1,1,1"]);
}
