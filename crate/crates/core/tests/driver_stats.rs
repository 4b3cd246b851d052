use regswitch::drivers::{
    make_stream, sample_brownian_increments, sample_jump_times, sample_marks, JumpSpec,
    MarkDistribution,
};
use regswitch::grid::build_grid;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn jump_counts_are_poisson() {
    let spec = JumpSpec::new(1.0, MarkDistribution::Degenerate(1.0)).unwrap();
    let counts: Vec<f64> = (0..100_000)
        .map(|i| sample_jump_times(&spec, 10.0, &mut make_stream(21, i)).len() as f64)
        .collect();
    let (mean, var) = mean_var(&counts);
    assert!((mean - 10.0).abs() < 0.1, "mean {mean}");
    let dispersion = var / mean;
    assert!((0.97..=1.03).contains(&dispersion), "variance/mean {dispersion}");
}

#[test]
fn jump_times_are_uniform_given_count() {
    let spec = JumpSpec::new(2.0, MarkDistribution::Degenerate(1.0)).unwrap();
    let mut rng = make_stream(22, 0);
    let mut times = Vec::new();
    for _ in 0..20_000 {
        times.extend(sample_jump_times(&spec, 5.0, &mut rng));
    }
    let (mean, var) = mean_var(&times);
    let n = times.len() as f64;
    assert!((mean - 2.5).abs() < 4.0 * (25.0 / 12.0 / n).sqrt(), "mean {mean}");
    assert!((var - 25.0 / 12.0).abs() < 0.02 * 25.0 / 12.0, "variance {var}");
}

#[test]
fn exponential_marks_have_requested_mean() {
    let spec = JumpSpec::new(1.0, MarkDistribution::Exponential { mean: 1.0 }).unwrap();
    let marks = sample_marks(&spec, 1_000_000, &mut make_stream(23, 0));
    let (mean, var) = mean_var(&marks);
    assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
    assert!((var - 1.0).abs() < 0.02, "variance {var}");
    assert!(marks.iter().all(|&m| m >= 0.0));
}

#[test]
fn empirical_marks_follow_weights() {
    let spec = JumpSpec::new(
        1.0,
        MarkDistribution::Empirical {
            values: vec![-0.5, 0.25, 2.0],
            weights: vec![0.25, 0.5, 0.25],
        },
    )
    .unwrap();
    let marks = sample_marks(&spec, 400_000, &mut make_stream(24, 0));
    let frac = marks.iter().filter(|&&m| m == 0.25).count() as f64 / marks.len() as f64;
    assert!((frac - 0.5).abs() < 4.0 * (0.25f64 / 400_000.0).sqrt(), "fraction {frac}");
}

#[test]
fn brownian_increments_have_gap_variance_and_no_correlation() {
    let grid = build_grid(10_000.0, 0.01, &[]).unwrap();
    let dw = sample_brownian_increments(&grid, 1, &mut make_stream(25, 0));
    assert_eq!(dw.len(), 1_000_000);
    let (mean, var) = mean_var(&dw);
    assert!(mean.abs() < 4.0 * (0.01f64 / 1e6).sqrt(), "mean {mean}");
    assert!((var - 0.01).abs() < 0.01 * 0.01, "variance {var}");
    let n = dw.len() - 1;
    let cov = (0..n).map(|i| (dw[i] - mean) * (dw[i + 1] - mean)).sum::<f64>() / n as f64;
    let rho = cov / var;
    assert!(rho.abs() < 0.01, "lag-1 correlation {rho}");
}

#[test]
fn brownian_components_are_uncorrelated() {
    let grid = build_grid(1_000.0, 0.01, &[]).unwrap();
    let dw = sample_brownian_increments(&grid, 2, &mut make_stream(26, 0));
    let a: Vec<f64> = dw.iter().step_by(2).copied().collect();
    let b: Vec<f64> = dw.iter().skip(1).step_by(2).copied().collect();
    let cross = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
    assert!((cross / 0.01).abs() < 0.02, "correlation {}", cross / 0.01);
}
