use proptest::prelude::*;

use regswitch::ctmc::{sample_regime_path, GeneratorMatrix};
use regswitch::drivers::make_stream;
use regswitch::grid::build_grid;

fn reference_generator() -> GeneratorMatrix {
    GeneratorMatrix::new(&[vec![-0.5, 0.5], vec![0.5, -0.5]]).unwrap()
}

fn generator_strategy() -> impl Strategy<Value = GeneratorMatrix> {
    (2usize..=4)
        .prop_flat_map(|n| proptest::collection::vec(0.0f64..3.0, n * n).prop_map(move |r| (n, r)))
        .prop_map(|(n, r)| {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    if i != j {
                        rows[i][j] = r[i * n + j];
                        sum += r[i * n + j];
                    }
                }
                rows[i][i] = -sum;
            }
            GeneratorMatrix::new(&rows).unwrap()
        })
}

fn irreducible_strategy() -> impl Strategy<Value = GeneratorMatrix> {
    (2usize..=4)
        .prop_flat_map(|n| proptest::collection::vec(0.05f64..3.0, n * n).prop_map(move |r| (n, r)))
        .prop_map(|(n, r)| {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    if i != j {
                        rows[i][j] = r[i * n + j];
                        sum += r[i * n + j];
                    }
                }
                rows[i][i] = -sum;
            }
            GeneratorMatrix::new(&rows).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transition_matrices_form_a_semigroup(q in generator_strategy(), s in 0.0f64..5.0, t in 0.0f64..5.0) {
        let ps = q.transition_matrix(s).unwrap();
        let pt = q.transition_matrix(t).unwrap();
        let pst = q.transition_matrix(s + t).unwrap();
        let n = q.n_regimes();
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let prod: f64 = (0..n).map(|m| ps.prob(i, m) * pt.prob(m, j)).sum();
                prop_assert!((prod - pst.prob(i, j)).abs() < 1e-9);
                prop_assert!(pst.prob(i, j) >= 0.0);
                row_sum += pst.prob(i, j);
            }
            prop_assert!((row_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_distribution_is_invariant(q in irreducible_strategy(), t in 0.0f64..10.0) {
        let pi = q.stationary_distribution().unwrap();
        let p = q.transition_matrix(t).unwrap();
        let n = q.n_regimes();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..n {
            let moved: f64 = (0..n).map(|i| pi[i] * p.prob(i, j)).sum();
            prop_assert!((moved - pi[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_partitions_the_unit_interval(q in generator_strategy(), t in 0.0f64..3.0, from in 0usize..4) {
        let p = q.transition_matrix(t).unwrap();
        let n = q.n_regimes();
        let from = from % n;
        let row = p.row(from);
        let mut cum = vec![0.0; n + 1];
        for j in 0..n {
            cum[j + 1] = cum[j] + row[j];
        }
        let mut probes: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        probes.extend(cum[1..n].iter().copied());
        for u in probes {
            let j = p.sample_next(from, u);
            let upper = if j == n - 1 { 1.0 } else { cum[j + 1] };
            prop_assert!(cum[j] <= u && u < upper, "u = {} -> {} with cum {:?}", u, j, cum);
        }
    }
}

#[test]
fn switch_frequency_matches_transition_probability() {
    let q = reference_generator();
    let grid = build_grid(10_000.0, 0.01, &[]).unwrap();
    let path = sample_regime_path(&q, &grid, 0, &mut make_stream(11, 0)).unwrap();
    let steps = (path.len() - 1) as f64;
    assert_eq!(steps, 1e6);
    let switches = path.windows(2).filter(|w| w[0] != w[1]).count() as f64;
    let p = (1.0 - (-0.01f64).exp()) / 2.0;
    let freq = switches / steps;
    let se = (p * (1.0 - p) / steps).sqrt();
    assert!((freq - p).abs() < 4.0 * se, "frequency {freq} vs {p}");
}

#[test]
fn occupancy_frequencies_match_stationary_distribution() {
    // Three regimes, uneven stationary masses.
    let q = GeneratorMatrix::new(&[
        vec![-1.0, 0.7, 0.3],
        vec![0.2, -0.5, 0.3],
        vec![0.5, 0.5, -1.0],
    ])
    .unwrap();
    let pi = q.stationary_distribution().unwrap();
    let h = 0.05;
    let grid = build_grid(1e6 * h, h, &[]).unwrap();
    let path = sample_regime_path(&q, &grid, 0, &mut make_stream(12, 0)).unwrap();
    let n = path.len() as f64;
    let mut counts = [0.0; 3];
    for &r in &path {
        counts[r] += 1.0;
    }
    let chi2: f64 = (0..3)
        .map(|i| (counts[i] - n * pi[i]).powi(2) / (n * pi[i]))
        .sum();
    // Correlated samples: deflate by the integrated autocorrelation time of
    // the slowest mode of P = exp(hQ).
    let p = q.transition_matrix(h).unwrap();
    let trace: f64 = (0..3).map(|i| p.prob(i, i)).sum();
    let det = {
        let m = p.to_rows();
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    // Non-unit eigenvalues solve x² − (trace − 1)x + det = 0.
    let s = trace - 1.0;
    let disc = s * s - 4.0 * det;
    let lam = if disc >= 0.0 {
        ((s + disc.sqrt()) / 2.0).abs().max(((s - disc.sqrt()) / 2.0).abs())
    } else {
        det.sqrt()
    };
    let tau = (1.0 + lam) / (1.0 - lam);
    let adjusted = chi2 / tau;
    // 99.9% quantile of chi-square with 2 degrees of freedom.
    assert!(adjusted < 13.82, "chi2 {chi2}, tau {tau}, pi {pi:?}, counts {counts:?}");
}
