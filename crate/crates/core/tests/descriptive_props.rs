use likert_miner::dataset::{filter_rows, read_csv, write_csv, RowFilter, VariationClass};
use likert_miner::reliability::ReliabilityError;
use likert_miner::summaries::{column_medians, column_modes};
use likert_miner::synthetic::SurveyGenerator;
use likert_miner::{
    cronbach_alpha, grand_mean, grand_median, grand_mode, partition_by_variation, respondent_reliability, LikertMatrix,
    Schema,
};
use proptest::prelude::*;

fn matrix(max_n: usize, max_p: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1..=max_p).prop_flat_map(move |p| prop::collection::vec(prop::collection::vec(1u8..=5, p), 2..=max_n))
}

fn constant_rows(max_n: usize, max_p: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    (2..=max_p).prop_flat_map(move |p| prop::collection::vec((1u8..=5).prop_map(move |v| vec![v; p]), 2..=max_n))
}

fn lm(rows: &[Vec<u8>]) -> LikertMatrix {
    LikertMatrix::from_codes_default_names(rows).unwrap()
}

fn permute_columns(rows: &[Vec<u8>], perm: &[usize]) -> Vec<Vec<u8>> {
    rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect()
}

proptest! {
    #[test]
    fn csv_round_trip(n in 1usize..60, seed in 0u64..1000) {
        let ds = SurveyGenerator::new(n, seed).generate();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf, &Schema::default()).unwrap();
        let back = read_csv(buf.as_slice(), &Schema::default()).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn filters_compose(seed in 0u64..1000, instr in 1u32..=3, att in 0u8..=4) {
        let ds = SurveyGenerator::new(120, seed).generate();
        let a = RowFilter::Instructor(instr);
        let b = RowFilter::Attendance(att).not();
        let twice = filter_rows(&filter_rows(&ds, &a), &b);
        prop_assert_eq!(twice, filter_rows(&ds, &a.and(b)));
    }

    #[test]
    fn alpha_ignores_column_order(rows in matrix(30, 8), seed in any::<u64>()) {
        let p = rows[0].len();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut s = seed;
        for i in (1..p).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = cronbach_alpha::<f64>(&lm(&rows));
        let b = cronbach_alpha::<f64>(&lm(&permute_columns(&rows, &perm)));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a.alpha - b.alpha).abs() <= 1e-12 * a.alpha.abs().max(1.0)),
            (a, b) => prop_assert_eq!(a.map(|r| r.alpha).err(), b.map(|r| r.alpha).err()),
        }
    }

    #[test]
    fn constant_rows_are_perfectly_reliable(rows in constant_rows(40, 30)) {
        let m = lm(&rows);
        let part = partition_by_variation::<f64>(&m);
        prop_assert_eq!(part.zero_fraction, 1.0);
        let all_same = rows.iter().all(|r| r[0] == rows[0][0]);
        match cronbach_alpha::<f64>(&m) {
            Ok(r) => { prop_assert!(!all_same); prop_assert_eq!(r.alpha, 1.0); }
            Err(e) => { prop_assert!(all_same); prop_assert_eq!(e, ReliabilityError::DegenerateVariance); }
        }
    }

    #[test]
    fn identical_columns_give_alpha_one(col in prop::collection::vec(1u8..=5, 2..40), p in 2usize..10) {
        let rows: Vec<Vec<u8>> = col.iter().map(|&v| vec![v; p]).collect();
        if let Ok(r) = cronbach_alpha::<f64>(&lm(&rows)) {
            prop_assert_eq!(r.alpha, 1.0);
        }
    }

    #[test]
    fn respondent_reliability_is_alpha_of_transpose(rows in matrix(12, 10)) {
        let m = lm(&rows);
        let a = respondent_reliability::<f64>(&m).map(|r| r.alpha);
        let b = cronbach_alpha::<f64>(&m.transpose()).map(|r| r.alpha);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn duplicating_a_flat_row(rows in matrix(20, 6), level in 1u8..=5) {
        let p = rows[0].len();
        let mut base = rows.clone();
        base.push(vec![level; p]);
        let before = partition_by_variation::<f64>(&lm(&base));
        let mut more = base.clone();
        more.push(vec![level; p]);
        let after = partition_by_variation::<f64>(&lm(&more));
        prop_assert_eq!(after.zero_count(), before.zero_count() + 1);
        prop_assert_eq!(&after.per_row_variance[..base.len()], &before.per_row_variance[..]);
        prop_assert!(after.zero_rows.contains(&base.len()));
    }

    #[test]
    fn grand_summaries_ignore_order(rows in matrix(25, 6)) {
        let m = lm(&rows);
        let mut reversed = rows.clone();
        reversed.reverse();
        let p = rows[0].len();
        let perm: Vec<usize> = (0..p).rev().collect();
        for other in [lm(&reversed), lm(&permute_columns(&rows, &perm))] {
            prop_assert_eq!(grand_mode(&m), grand_mode(&other));
            prop_assert_eq!(grand_median::<f64>(&m), grand_median::<f64>(&other));
            let (a, b) = (grand_mean::<f64>(&m).unwrap(), grand_mean::<f64>(&other).unwrap());
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((1..=5).contains(&grand_mode(&m).0));
    }

    #[test]
    fn single_column_summaries(col in prop::collection::vec(1u8..=5, 2..40)) {
        let rows: Vec<Vec<u8>> = col.iter().map(|&v| vec![v]).collect();
        let m = lm(&rows);
        prop_assert_eq!(grand_mode(&m).0, column_modes(&m).modes[0]);
        prop_assert_eq!(grand_median::<f64>(&m).map(|md| md.value), column_medians::<f64>(&m)[0]);
    }
}

#[test]
fn zero_variation_rows_match_partition() {
    let ds = SurveyGenerator::new(300, 5).generate();
    let zero = filter_rows(&ds, &RowFilter::Variation(VariationClass::Zero));
    let part = partition_by_variation::<f64>(ds.matrix());
    assert_eq!(zero.n(), part.zero_count());
}
