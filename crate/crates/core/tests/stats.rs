use patrank_core::stats::{bootstrap_ci, paired_bootstrap, tiers_from_pvalues};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn independent_of_thread_count() {
    let mut rng = StdRng::seed_from_u64(9);
    let a: Vec<f64> = (0..300).map(|_| rng.gen()).collect();
    let b: Vec<f64> = a.iter().map(|x| x * 0.97 + rng.gen::<f64>() * 0.05).collect();
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (paired_bootstrap(&a, &b, 4000, 42).unwrap(), bootstrap_ci(&a, 4000, 0.95, 42).unwrap()))
    };
    let one = in_pool(1);
    assert_eq!(one, in_pool(4));
    assert_eq!(one, in_pool(7));
}

#[test]
fn interval_matches_independent_resampler() {
    let mut rng = StdRng::seed_from_u64(21);
    let scores: Vec<f64> = (0..150).map(|_| rng.gen::<f64>().powi(2)).collect();
    let (lo, hi) = bootstrap_ci(&scores, 10_000, 0.95, 42).unwrap();

    let mut other = StdRng::seed_from_u64(12345);
    let n = scores.len();
    let mut means: Vec<f64> =
        (0..10_000).map(|_| (0..n).map(|_| scores[other.gen_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (ref_lo, ref_hi) = (means[249], means[9749]);
    assert!((lo - ref_lo).abs() < 0.01, "{lo} vs {ref_lo}");
    assert!((hi - ref_hi).abs() < 0.01, "{hi} vs {ref_hi}");
    let mean = scores.iter().sum::<f64>() / n as f64;
    assert!(lo <= mean && mean <= hi);
}

#[test]
fn paper_adjacent_table_tiers() {
    let names = [
        "Llama-Nemotron-8B",
        "Qwen3-8B",
        "Qwen3-4B",
        "Nemotron-1B",
        "Octen-8B",
        "Qwen3-0.6B",
        "patembed-base",
        "mE5-large",
    ];
    let p = [0.0000, 0.2303, 0.0000, 0.3008, 0.0000, 0.4076, 0.0000];
    let tiers = tiers_from_pvalues(&names, &p, 0.05).unwrap();
    assert_eq!(
        tiers,
        vec![
            vec!["Llama-Nemotron-8B"],
            vec!["Qwen3-8B", "Qwen3-4B"],
            vec!["Nemotron-1B", "Octen-8B"],
            vec!["Qwen3-0.6B", "patembed-base"],
            vec!["mE5-large"],
        ]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn swapping_negates(pairs in prop::collection::vec((0u8..5, 0u8..5), 2..40), seed in 0u64..1000) {
        let a: Vec<f64> = pairs.iter().map(|p| f64::from(p.0) / 4.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 4.0).collect();
        let ab = paired_bootstrap(&a, &b, 300, seed).unwrap();
        let ba = paired_bootstrap(&b, &a, 300, seed).unwrap();
        prop_assert_eq!(ab.diff, -ba.diff);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        let raw = |r: &patrank_core::stats::BootstrapResult| if r.below_resolution { 0.0 } else { r.p_value };
        prop_assert!(raw(&ab) + raw(&ba) >= 1.0 - 1e-12);
    }
}
