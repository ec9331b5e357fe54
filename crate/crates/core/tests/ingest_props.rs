use ndarray::Array2;
use paqreg::ingest::{curate, filter_features, make_folds, pearson, CurateConfig, FeatureMatrix, FilterConfig, MoleculeRecord};
use proptest::prelude::*;

const SMILES: [&str; 8] = ["CCO", "CCN", "C[C@H](N)O", "c1ccccc1O", "CC[Fe]C", "CCCl", "C(C", "OP(=O)(O)O"];

fn arb_records() -> impl Strategy<Value = Vec<MoleculeRecord>> {
    prop::collection::vec((0usize..SMILES.len(), 0usize..6, prop_oneof![Just(f64::NAN), 140.0f64..270.0]), 0..30)
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (s, g, pa))| MoleculeRecord {
                    id: format!("r{i}"),
                    smiles: SMILES[s].to_string(),
                    group_key: format!("g{g}"),
                    pa,
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn curate_is_idempotent(records in arb_records(), tol in 0.1f64..20.0) {
        let cfg = CurateConfig { stereo_tolerance: tol, ..CurateConfig::default() };
        let once = curate(&records, &cfg).records;
        let twice = curate(&once, &cfg).records;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn filtered_columns_are_never_highly_correlated(
        seed in 0u64..1000,
        n_cols in 2usize..12,
        threshold in 0.3f64..0.99,
    ) {
        // columns mix a few latent factors so some pairs correlate strongly
        let n = 40;
        let latent = |r: usize, k: usize| (((r * 7 + k * 13 + seed as usize) % 17) as f64 - 8.0) / 3.0;
        let v = Array2::from_shape_fn((n, n_cols), |(r, c)| {
            latent(r, c % 3) + 0.05 * (((r * 31 + c * 11 + seed as usize) % 7) as f64 - 3.0)
        });
        let names = (0..n_cols).map(|c| format!("c{c}")).collect();
        let m = FeatureMatrix::new(names, v).unwrap();
        let cfg = FilterConfig { corr_threshold: threshold, ..FilterConfig::default() };
        let (kept, removed) = filter_features(&m, &cfg).unwrap();
        prop_assert_eq!(kept.n_cols() + removed.len(), n_cols);
        let vals = kept.values();
        for a in 0..kept.n_cols() {
            for b in a + 1..kept.n_cols() {
                let r = pearson(&vals.column(a).to_vec(), &vals.column(b).to_vec());
                prop_assert!(r.abs() < threshold, "{} vs {}: {}", a, b, r);
            }
        }
    }

    #[test]
    fn normalizer_round_trips(values in prop::collection::vec(-1e4f64..1e4, 30), offset in -1e3f64..1e3) {
        let v = Array2::from_shape_fn((10, 3), |(r, c)| values[r * 3 + c] + offset * c as f64);
        let m = FeatureMatrix::new(vec!["a".into(), "b".into(), "c".into()], v.clone()).unwrap();
        let stats = m.fit_normalizer(&(0..10).collect::<Vec<_>>()).unwrap();
        let back = stats.inverse_transform(stats.transform(v.view()).unwrap().view()).unwrap();
        for (x, y) in v.iter().zip(back.iter()) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn every_iteration_partitions_rows(n in 2usize..150, k in 2usize..8, iters in 1usize..4, seed: u64) {
        prop_assume!(k <= n);
        let plan = make_folds(n, k, iters, seed).unwrap();
        for it in 0..iters {
            let mut all: Vec<usize> = (0..k).flat_map(|f| plan.test_rows(it, f)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for f in 0..k {
                let mut both = plan.test_rows(it, f);
                both.extend(plan.train_rows(it, f));
                both.sort_unstable();
                prop_assert_eq!(both, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
