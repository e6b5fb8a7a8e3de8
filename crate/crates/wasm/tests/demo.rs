use edukl::levels::KLLevel;
use edukl_wasm::demo::*;

#[test]
fn identical_normals_sit_on_the_diagonal() {
    let c = compare_normal(0.0, 1.0, 20_000, 1).unwrap();
    assert_eq!(c.curve.len(), CURVE_POINTS);
    let worst = c
        .curve
        .iter()
        .enumerate()
        .map(|(k, g)| (g - k as f64 / 100.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02, "{worst}");
    assert!(c.signed_kl.abs() < 0.01 && c.rank_area.abs() < 0.01);
    assert_eq!(c.label, KLLevel::High);
}

#[test]
fn shift_down_is_negative() {
    let c = compare_normal(-1.0, 1.0, 20_000, 2).unwrap();
    // KL(N(-1,1) | N(0,1)) = 0.5
    assert!((c.signed_kl + 0.5).abs() < 0.05, "{}", c.signed_kl);
    assert!(c.rank_area > 0.0);
    assert_eq!(c.label, KLLevel::MediumHigh);
    assert!(c.curve[50] > 0.5);
}

#[test]
fn bad_scale_is_an_error() {
    assert!(compare_normal(0.0, -1.0, 100, 1).is_err());
}

#[test]
fn reference_reproduces_published_rows_at_fitted_scale() {
    let d = reference_demo(fitted_scale(), 50_000, 3).unwrap();
    for (got, row) in d.rows.iter().zip(edukl::reference::TRANSLATION_ROWS) {
        assert!((got - row.translated).abs() <= 1.0, "{got} vs {}", row.translated);
    }
    assert!(d.table.windows(2).all(|w| w[0] <= w[1]));
    for p in 1..100 {
        assert!((d.sample_table[p] - d.table[p]).abs() < 3.0, "p{p}");
    }
}

#[test]
fn larger_scale_moves_reference_up() {
    let a = reference_demo(30.0, 1_000, 4).unwrap();
    let b = reference_demo(50.0, 1_000, 4).unwrap();
    assert!(b.mean > a.mean);
}

#[test]
fn classify_follows_thresholds() {
    let t = [-1.7, -1.1, -0.7, -0.4];
    assert_eq!(classify(-2.0, t).unwrap(), KLLevel::Low);
    assert_eq!(classify(-0.4, t).unwrap(), KLLevel::MediumHigh);
    assert_eq!(classify(0.1, t).unwrap(), KLLevel::High);
    assert!(classify(0.0, [-1.0, -1.0, 0.0, 1.0]).is_err());
}
