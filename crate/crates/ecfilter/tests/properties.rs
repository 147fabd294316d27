//! Cross-module invariants, mostly on randomly generated graphs.

use ecfilter::correction::{correct, corrected_operator, verify_strictly_increasing};
use ecfilter::filters::{basis_matrix, filter_response, BasisKind, FilterModel, TargetFilterKind};
use ecfilter::graph::Graph;
use ecfilter::learning::{fit_least_squares, make_filter_task, smooth_signals};
use ecfilter::spectral::{count_distinct, eigendecompose, fourier, inverse_fourier};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn er(n: usize, degree: f64, seed: u64) -> Graph {
    Graph::erdos_renyi(n, degree, seed).unwrap().0
}

#[test]
fn corrected_spectrum_gap_floor_on_random_graphs() {
    for trial in 0u64..100 {
        let n = 10 + (trial as usize * 7) % 50;
        let g = er(n, 4.0, trial);
        let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
        let beta = (trial as f64 * 0.01375) % 1.0;
        let spec = correct(&eig, beta).unwrap();
        let report = verify_strictly_increasing(spec.mu().as_slice().unwrap());
        assert!(report.strictly_increasing, "trial {trial}");
        let floor = (1.0 - beta) * 2.0 / (n as f64 - 1.0);
        assert!(
            report.min_gap >= floor - 1e-12,
            "trial {trial}: gap {} < floor {floor}",
            report.min_gap
        );
    }
}

#[test]
fn correction_preserves_order() {
    let g = er(40, 5.0, 3);
    let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
    for beta in [0.0, 0.3, 0.7, 0.99] {
        let spec = correct(&eig, beta).unwrap();
        let mut sorted = spec.mu().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, spec.mu().to_vec());
    }
}

#[test]
fn connected_graphs_have_one_zero_eigenvalue() {
    for seed in 0..10u64 {
        let g = er(50, 6.0, seed);
        if !g.is_connected() {
            continue;
        }
        let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
        let zeros = eig.eigenvalues().iter().filter(|v| **v <= 1e-8).count();
        assert_eq!(zeros, 1, "seed {seed}");
    }
}

#[test]
fn least_squares_mse_is_non_increasing_in_order() {
    let g = Graph::grid(5, 5).unwrap();
    let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
    let signals = smooth_signals(&eig, 4, 1.5, 11);
    let task = make_filter_task(&eig, TargetFilterKind::Comb, &signals).unwrap();
    let spec = correct(&eig, 0.5).unwrap();
    let mut previous = f64::INFINITY;
    for order in 0..=8 {
        let fit = fit_least_squares(&task, &eig, &spec, BasisKind::GprMonomial, order).unwrap();
        assert!(
            fit.train_mse <= previous + 1e-12,
            "K={order}: {} > {previous}",
            fit.train_mse
        );
        previous = fit.train_mse;
    }
}

#[test]
fn filter_span_rank_matches_distinct_eigenvalue_count() {
    // Star K_{1,3}: spectrum {0, 1, 1, 2}, so polynomials of the
    // Laplacian applied to a generic signal span a 3-dimensional space.
    let g = Graph::from_edge_list("0 1\n0 2\n0 3", None).unwrap();
    let lap = g.normalized_operators().lap_norm;
    let x: Array1<f64> = Array1::from_vec(vec![0.83, -0.41, 0.27, 0.64]);

    let mut columns = Vec::new();
    let mut current = x.clone();
    for _ in 0..=10 {
        let norm: f64 = current.dot(&current).sqrt();
        columns.push(&current / norm);
        current = lap.dot(&current);
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(4, columns.len());
    for (j, col) in columns.iter().enumerate() {
        for i in 0..4 {
            m[(i, j)] = col[i];
        }
    }
    let svd = m.svd(false, false);
    let above: usize = svd.singular_values.iter().filter(|s| **s > 1e-8).count();
    assert_eq!(above, 3);
}

#[test]
fn corrected_operator_restores_full_rank_span() {
    // With beta = 0.5 the corrected operator has 4 distinct eigenvalues,
    // so the same Krylov-style span becomes full-dimensional.
    let g = Graph::from_edge_list("0 1\n0 2\n0 3", None).unwrap();
    let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
    let spec = correct(&eig, 0.5).unwrap();
    let h = corrected_operator(&eig, &spec).unwrap();
    let x: Array1<f64> = Array1::from_vec(vec![0.83, -0.41, 0.27, 0.64]);

    let mut m = nalgebra::DMatrix::<f64>::zeros(4, 11);
    let mut current = x.clone();
    for j in 0..11 {
        let norm: f64 = current.dot(&current).sqrt();
        for i in 0..4 {
            m[(i, j)] = current[i] / norm;
        }
        current = h.dot(&current);
    }
    let svd = m.svd(false, false);
    let above: usize = svd.singular_values.iter().filter(|s| **s > 1e-8).count();
    assert_eq!(above, 4);
}

#[test]
fn restoration_holds_on_a_larger_graph() {
    // With beta < 1 and K >= n - 1, any target with all-nonzero input
    // Fourier coefficients is fit to roundoff by the oracle.
    let g = er(6, 3.0, 21);
    let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
    let spec = correct(&eig, 0.3).unwrap();
    let mut state = 0x2545f4914f6cdd1du64;
    let mut noise = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state as f64 / u64::MAX as f64) - 0.5
    };
    let inputs = Array2::from_shape_fn((6, 1), |_| noise());
    let x_hat = eig.eigenvectors().t().dot(&inputs);
    assert!(x_hat.iter().all(|v| v.abs() > 1e-3), "input not generic");
    let task = ecfilter::learning::FilterTask {
        targets: Array2::from_shape_fn((6, 1), |_| noise()),
        inputs,
    };
    let fit = fit_least_squares(&task, &eig, &spec, BasisKind::GprMonomial, 5).unwrap();
    assert!(fit.train_mse <= 1e-8, "residual {}", fit.train_mse);
}

#[test]
fn low_pass_target_fits_well_for_both_spectra() {
    // Simple targets are easy with or without correction: both the
    // baseline and the best corrected run reach small MSE, and the gap
    // between them stays small in absolute terms.
    let config = ecfilter::learning::FilterExperimentConfig {
        kinds: vec![TargetFilterKind::Low],
        ..Default::default()
    };
    let report = ecfilter::learning::run_filter_experiment(&config).unwrap();
    assert_eq!(report.summaries.len(), 3);
    for s in &report.summaries {
        assert!(
            s.baseline_mse <= 2e-5,
            "{}: baseline {}",
            s.basis,
            s.baseline_mse
        );
        assert!(s.best_mse <= 2e-5, "{}: best {}", s.basis, s.best_mse);
        assert!(
            (s.baseline_mse - s.best_mse).abs() <= 1e-5,
            "{}: gap {}",
            s.basis,
            (s.baseline_mse - s.best_mse).abs()
        );
    }
}

#[test]
fn dense_random_graph_spectrum_peaks_next_to_one() {
    let g = er(500, 80.0, 11);
    let values = ecfilter::spectral::eigenvalues_only(&g.normalized_operators().lap_norm).unwrap();
    let hist = ecfilter::spectral::spectrum_histogram(values.as_slice().unwrap(), 20).unwrap();
    let peak = hist
        .densities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    // bins 9 and 10 are [0.9, 1.0) and [1.0, 1.1)
    assert!(peak == 9 || peak == 10, "peak bin {peak}");
}

#[test]
fn count_distinct_matches_brute_force_on_exact_spectra() {
    let values = [0.0, 0.0, 0.25, 1.0, 1.0, 1.0, 1.5, 2.0];
    let stats = count_distinct(&values, 0.0);
    let brute: std::collections::BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();
    assert_eq!(stats.n_distinct, brute.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn edge_list_parse_is_idempotent_under_noise(
        edges in prop::collection::btree_set((0usize..12, 0usize..12), 1..30),
    ) {
        let edges: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .collect();
        prop_assume!(!edges.is_empty());

        let clean: String = edges
            .iter()
            .map(|(a, b)| format!("{a} {b}\n"))
            .collect();
        // duplicated and reversed lines must not change the graph
        let noisy: String = edges
            .iter()
            .flat_map(|(a, b)| [format!("{a} {b}\n"), format!("{b} {a}\n"), format!("{a} {b}\n")])
            .collect();

        let parsed_clean = Graph::from_edge_list(&clean, None);
        let parsed_noisy = Graph::from_edge_list(&noisy, None);
        match (parsed_clean, parsed_noisy) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {} // same validation failure (isolated node)
            (a, b) => prop_assert!(false, "one parse failed: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn parseval_holds_on_random_graphs(seed in 0u64..500, n in 8usize..40) {
        let g = er(n, 4.0, seed);
        let eig = eigendecompose(&g.normalized_operators().lap_norm).unwrap();
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let x = Array1::from_iter((0..n).map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        }));
        let xhat = fourier(eig.eigenvectors(), &x).unwrap();
        let back = inverse_fourier(eig.eigenvectors(), &xhat).unwrap();

        let norm_x = x.dot(&x).sqrt();
        let norm_hat = xhat.dot(&xhat).sqrt();
        prop_assert!((norm_x - norm_hat).abs() <= 1e-10 * norm_x.max(1e-30));
        let diff = (&back - &x).mapv(|v| v * v).sum().sqrt();
        prop_assert!(diff <= 1e-10 * norm_x.max(1e-30));
    }

    #[test]
    fn responses_collapse_on_tied_inputs(
        value in 0.0f64..2.0,
        order in 0usize..8,
        coeff_seed in 0u64..1000,
    ) {
        let mu = Array1::from_vec(vec![value, value, value.min(1.9) + 0.05]);
        let mut state = coeff_seed | 1;
        let coeffs = Array2::from_shape_fn((order + 1, 1), |_| {
            state ^= state << 13;
            state ^= state >> 7;
            (state as f64 / u64::MAX as f64) - 0.5
        });
        for basis in [BasisKind::GprMonomial, BasisKind::Bernstein, BasisKind::Jacobi { a: 0.5, b: 1.5 }] {
            let model = FilterModel::new_unchecked(basis, order, coeffs.clone()).unwrap();
            let resp = filter_response(&model, &mu).unwrap();
            prop_assert_eq!(resp[[0, 0]], resp[[1, 0]]);
        }
    }

    #[test]
    fn bernstein_rows_sum_to_one(order in 0usize..13, points in 2usize..30) {
        let mu = Array1::from_iter((0..points).map(|i| 2.0 * i as f64 / (points - 1) as f64));
        let b = basis_matrix(BasisKind::Bernstein, &mu, order).unwrap();
        for i in 0..points {
            let s: f64 = b.row(i).sum();
            prop_assert!((s - 1.0).abs() <= 1e-10);
        }
    }
}
