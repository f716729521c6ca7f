use rayon::ThreadPoolBuilder;
use sigwald::intersection::sw_test;
use sigwald::{EstimateSet, HypothesisSpec, McConfig, SymMatrix};
use sigwald_simlab::{run_study3, Study3Config};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn sw_test_identical_across_thread_counts() {
    let cov = SymMatrix::from_rows(&[
        vec![1.0, 0.2, -0.3],
        vec![0.2, 2.0, 0.5],
        vec![-0.3, 0.5, 1.5],
    ])
    .unwrap();
    let est = EstimateSet::from_asymptotic(100, vec![0.1, 0.2, 0.05], cov).unwrap();
    let spec = HypothesisSpec::new(vec![0.0; 3], vec![0.2, 0.4, 0.4], 0.025).unwrap();
    let mc = McConfig::new(5000, 42);
    let one = in_pool(1, || sw_test(&est, &spec, &mc).unwrap());
    let four = in_pool(4, || sw_test(&est, &spec, &mc).unwrap());
    assert_eq!(one.p_value.to_bits(), four.p_value.to_bits());
    assert_eq!(one, four);
}

#[test]
fn study3_identical_across_thread_counts() {
    let cfg = Study3Config {
        ns: vec![300],
        reps: 40,
        seed: 8,
        ..Study3Config::desk()
    };
    let one = in_pool(1, || run_study3(&cfg).unwrap());
    let four = in_pool(4, || run_study3(&cfg).unwrap());
    assert_eq!(one, four);
}
