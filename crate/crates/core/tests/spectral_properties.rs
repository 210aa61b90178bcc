use jacobi_histo::operators::{build_delta, build_h, build_r, build_tj};
use jacobi_histo::spectral::{
    classify_decay, compare_rearrangements, sample_symbol, sample_symbol_delta, sample_symbol_tj, singular_values,
    threshold_fraction, zero_distribution_probe, Decay, DEFAULT_GRID_M, DEFAULT_TRIM,
};
use jacobi_histo::{DenseMatrix, GradingMap, HistoBasis, JacobiParams, Mesh, ScalingSpec};

#[test]
fn toeplitz_layer_matches_its_symbol() {
    // Lower band (σ, 2δ, σ) has symbol σ + 2δe^{iθ} + σe^{2iθ}, modulus 2|δ + σ cos θ|.
    let q = JacobiParams::new(1.5, 1.0).unwrap();
    let (s, d) = (q.sigma(), q.delta());
    let n = 2000;
    let a = DenseMatrix::from_fn(n, n, |i, j| match i as isize - j as isize {
        0 => s,
        1 => 2.0 * d,
        2 => s,
        _ => 0.0,
    });
    let sym = sample_symbol(|_, theta| 2.0 * (d + s * theta.cos()).abs(), DEFAULT_GRID_M, DEFAULT_TRIM).unwrap();
    let cmp = compare_rearrangements(&singular_values(&a).unwrap(), &sym).unwrap();
    assert!(cmp.mean_relative_deviation <= 0.02, "{}", cmp.mean_relative_deviation);
}

#[test]
fn scaled_tj_follows_the_rearranged_symbol() {
    let q = JacobiParams::new(2.0, 2.0).unwrap();
    let n = 1000;
    let a = build_tj(&q, n).unwrap().scaled(n as f64);
    let cmp = compare_rearrangements(&singular_values(&a).unwrap(), &sample_symbol_tj(&q, 1000, DEFAULT_TRIM).unwrap())
        .unwrap();
    assert!(cmp.mean_relative_deviation <= 0.05, "{}", cmp.mean_relative_deviation);
}

#[test]
fn scaled_difference_operator_follows_the_rearranged_symbol() {
    let n = 1000;
    for (map, tol) in [(GradingMap::Identity, 0.01), (GradingMap::Exp, 0.05), (GradingMap::Square, 0.05)] {
        let mesh = Mesh::graded(n, map.clone()).unwrap();
        let a = build_delta(&mesh).scaled(1.0 / n as f64);
        let sym = sample_symbol_delta(&map, 1000, DEFAULT_TRIM).unwrap();
        let cmp = compare_rearrangements(&singular_values(&a).unwrap(), &sym).unwrap();
        assert!(cmp.mean_relative_deviation <= tol, "{} {}", map.name(), cmp.mean_relative_deviation);
    }
}

#[test]
fn uniform_difference_operator_has_closed_form_singular_values() {
    // Δ is N×(N+1) with (1, -1) rows; σ_k = 2 sin(kπ/(2(N+1))) times N/2 for the uniform mesh.
    let n = 200usize;
    let s = singular_values(&build_delta(&Mesh::uniform(n).unwrap())).unwrap();
    let h = 2.0 / n as f64;
    for (i, v) in s.iter().enumerate() {
        let k = (n - i) as f64;
        let exact = 2.0 * (k * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin() / h;
        assert!((v - exact).abs() <= 1e-10 * exact.max(1.0), "{i} {v} {exact}");
    }
}

#[test]
fn remainder_is_zero_distributed() {
    let q = JacobiParams::new(2.0, 2.0).unwrap();
    let series: Vec<f64> = [500usize, 1000, 2000, 4000]
        .iter()
        .map(|&n| {
            let r = build_r(&q, &Mesh::uniform(n).unwrap()).unwrap();
            threshold_fraction(&singular_values(&r).unwrap(), 1e-3, n)
        })
        .collect();
    assert_eq!(classify_decay(&series), Decay::Strict, "{series:?}");
}

#[test]
fn scaled_histopolation_fractions_decay_at_small_scale() {
    let q = JacobiParams::new(1.5, 1.0).unwrap();
    let rep = zero_distribution_probe(
        Mesh::uniform,
        |m| build_h(&q, m, HistoBasis::Shifted),
        &[200, 400, 800],
        &ScalingSpec::STUDY,
        &[1e-2, 1e-3],
    )
    .unwrap();
    assert!(rep.all_decay(), "{rep:?}");
    let single = zero_distribution_probe(
        Mesh::uniform,
        |m| build_h(&q, m, HistoBasis::Shifted),
        &[200],
        &[ScalingSpec::DivideByNPow(1.0)],
        &[1e-2],
    )
    .unwrap();
    assert_eq!(single.series[0].decay, vec![Decay::NotApplicable]);
}

#[test]
fn premultiplied_scaling_drives_fractions_down() {
    let q = JacobiParams::new(2.0, 2.0).unwrap();
    let rep = zero_distribution_probe(
        Mesh::uniform,
        |m| build_h(&q, m, HistoBasis::Standard),
        &[100, 200, 400],
        &[ScalingSpec::PremultiplySqrtDhNPow(0.4)],
        &[1e-2],
    )
    .unwrap();
    let s = &rep.series[0].q;
    assert!(s[2][0] < s[0][0], "{s:?}");
}
