mod common;

use common::bessel_oracle::Oracle;
use rbffd_core::specfun::{bessel_j0, bessel_j1, bessel_y0, bessel_y1, hankel1_0, hankel1_1, j0, j1, y0, y1};

#[test]
fn oracle_sanity() {
    let o = Oracle::new();
    // tabulated values
    assert!((o.j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-16);
    assert!((o.y0(1.0) - 0.088_256_964_215_676_96).abs() < 1e-16);
    assert!((o.j1(2.0) - 0.576_724_807_756_873_4).abs() < 1e-16);
    assert!((o.y1(2.0) + 0.107_032_431_540_937_5).abs() < 1e-16);
}

#[test]
fn matches_series_across_both_branches() {
    let o = Oracle::new();
    // dense near the internal branch point and out to the far field
    let xs: Vec<f64> = (1..400).map(|i| i as f64 * 0.0625).chain((0..50).map(|i| 4.9 + i as f64 * 0.004)).collect();
    for &x in &xs {
        for (name, got, want) in [
            ("J0", j0(x), o.j0(x)),
            ("J1", j1(x), o.j1(x)),
            ("Y0", y0(x), o.y0(x)),
            ("Y1", y1(x), o.y1(x)),
        ] {
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{name}({x}) = {got}, want {want}");
        }
    }
}

#[test]
fn hankel_is_j_plus_iy() {
    for &x in &[0.3, 2.0, 7.5, 40.0] {
        let h0 = hankel1_0(x).unwrap();
        let h1 = hankel1_1(x).unwrap();
        assert_eq!((h0.re, h0.im), (j0(x), y0(x)));
        assert_eq!((h1.re, h1.im), (j1(x), y1(x)));
    }
}

#[test]
fn checked_entry_points_reject_bad_input() {
    assert!(bessel_j0(f64::NAN).is_err());
    assert!(bessel_j1(f64::INFINITY).is_err());
    assert!(bessel_y0(0.0).is_err());
    assert!(bessel_y1(-1.0).is_err());
    assert!(hankel1_0(0.0).is_err());
    assert_eq!(bessel_j0(-2.0).unwrap(), j0(2.0));
    assert_eq!(bessel_j1(-2.0).unwrap(), -j1(2.0));
}
