//! Cylinder functions of integer order 0 and 1.
//!
//! The rational approximations are the Cephes ones: on `[0, 5]` a rational
//! function in `x^2` (with the first two zeros of `J0`/`J1` factored out), above
//! that the Hankel asymptotic form with `P(8/x)`/`Q(8/x)`-style rational
//! corrections. The phase `x - pi/4` (resp. `x - 3pi/4`) is expanded through
//! `sin x` and `cos x` so that no precision is lost in the argument reduction for
//! large `x`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A checked, finite cylinder-function argument.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RealArg(f64);

impl RealArg {
    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(Self(x))
        } else {
            Err(Error::Domain {
                function: "RealArg",
                arg: x,
            })
        }
    }

    /// Argument for the second-kind and Hankel functions, which need `x > 0`.
    pub fn positive(x: f64) -> Result<Self> {
        if x.is_finite() && x > 0.0 {
            Ok(Self(x))
        } else {
            Err(Error::Domain {
                function: "RealArg::positive",
                arg: x,
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn checked(function: &'static str, x: f64, positive: bool) -> Result<f64> {
    if !x.is_finite() || (positive && x <= 0.0) {
        return Err(Error::Domain { function, arg: x });
    }
    Ok(x)
}

/// `J0(x)`; even extension for negative arguments.
pub fn bessel_j0(x: f64) -> Result<f64> {
    checked("bessel_j0", x, false).map(j0)
}

/// `J1(x)`; odd extension for negative arguments.
pub fn bessel_j1(x: f64) -> Result<f64> {
    checked("bessel_j1", x, false).map(j1)
}

pub fn bessel_y0(x: f64) -> Result<f64> {
    checked("bessel_y0", x, true).map(y0)
}

pub fn bessel_y1(x: f64) -> Result<f64> {
    checked("bessel_y1", x, true).map(y1)
}

/// `H0^(1)(x) = J0(x) + i Y0(x)`.
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    checked("hankel1_0", x, true).map(|x| Complex64::new(j0(x), y0(x)))
}

/// `H1^(1)(x) = J1(x) + i Y1(x)`.
pub fn hankel1_1(x: f64) -> Result<Complex64> {
    checked("hankel1_1", x, true).map(|x| Complex64::new(j1(x), y1(x)))
}

#[inline]
fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Like [`polevl`] with an implicit leading coefficient of one.
#[inline]
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

/// Unchecked `J0`. Non-finite input propagates as NaN.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 5.0 {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        let p = (z - J0_DR1) * (z - J0_DR2);
        return p * polevl(z, &J0_RP) / p1evl(z, &J0_RQ);
    }
    let w = 5.0 / x;
    let q = 25.0 / (x * x);
    let p = polevl(q, &J0_PP) / polevl(q, &J0_PQ);
    let q = polevl(q, &J0_QP) / p1evl(q, &J0_QQ);
    let (s, c) = x.sin_cos();
    (p * (c + s) - w * q * (s - c)) / (PI * x).sqrt()
}

/// Unchecked `Y0`; NaN for `x < 0`, `-inf` at zero.
pub fn y0(x: f64) -> f64 {
    if x <= 5.0 {
        if x == 0.0 {
            return f64::NEG_INFINITY;
        } else if x < 0.0 || x.is_nan() {
            return f64::NAN;
        }
        let z = x * x;
        let w = polevl(z, &Y0_YP) / p1evl(z, &Y0_YQ);
        return w + 2.0 / PI * x.ln() * j0(x);
    }
    let w = 5.0 / x;
    let z = 25.0 / (x * x);
    let p = polevl(z, &J0_PP) / polevl(z, &J0_PQ);
    let q = polevl(z, &J0_QP) / p1evl(z, &J0_QQ);
    let (s, c) = x.sin_cos();
    (p * (s - c) + w * q * (c + s)) / (PI * x).sqrt()
}

/// Unchecked `J1`.
pub fn j1(x: f64) -> f64 {
    if x < 0.0 {
        return -j1(-x);
    }
    if x <= 5.0 {
        let z = x * x;
        let w = polevl(z, &J1_RP) / p1evl(z, &J1_RQ);
        return w * x * (z - J1_Z1) * (z - J1_Z2);
    }
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &J1_PP) / polevl(z, &J1_PQ);
    let q = polevl(z, &J1_QP) / p1evl(z, &J1_QQ);
    let (s, c) = x.sin_cos();
    (p * (s - c) + w * q * (s + c)) / (PI * x).sqrt()
}

/// Unchecked `Y1`; NaN for `x < 0`, `-inf` at zero.
pub fn y1(x: f64) -> f64 {
    if x <= 5.0 {
        if x == 0.0 {
            return f64::NEG_INFINITY;
        } else if x < 0.0 || x.is_nan() {
            return f64::NAN;
        }
        let z = x * x;
        let w = x * (polevl(z, &Y1_YP) / p1evl(z, &Y1_YQ));
        return w + 2.0 / PI * (j1(x) * x.ln() - 1.0 / x);
    }
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &J1_PP) / polevl(z, &J1_PQ);
    let q = polevl(z, &J1_QP) / p1evl(z, &J1_QQ);
    let (s, c) = x.sin_cos();
    (-p * (s + c) + w * q * (s - c)) / (PI * x).sqrt()
}

/// Below this argument the scaled functions are summed from their Maclaurin
/// series; above it the three-term recurrence is forward stable for orders <= 3.
const SCALED_SERIES_LIMIT: f64 = 4.0;

/// `J_nu(s) / s^nu` for `nu` in `0..=3`, an entire function of `s`.
///
/// These are the radial factors of the derivatives of the `J0(k r)` kernel;
/// the Maclaurin branch avoids the cancellation in e.g. `(2 J1/s - J0)/s^2`.
pub fn jn_scaled(nu: u32, s: f64) -> f64 {
    assert!(nu <= 3, "jn_scaled supports orders 0..=3");
    let s = s.abs();
    if s < SCALED_SERIES_LIMIT {
        // sum_m (-1)^m (s/2)^{2m} / (2^nu m! (m+nu)!)
        let q = -0.25 * s * s;
        let mut term = 1.0 / (f64::from(1u32 << nu) * factorial(nu));
        let mut sum = term;
        for m in 1..40u32 {
            term *= q / (f64::from(m) * f64::from(m + nu));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let b0 = j0(s);
    let b1 = j1(s);
    match nu {
        0 => b0,
        1 => b1 / s,
        _ => {
            let b2 = 2.0 * b1 / s - b0;
            if nu == 2 {
                b2 / (s * s)
            } else {
                let b3 = 4.0 * b2 / s - b1;
                b3 / (s * s * s)
            }
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

// Squares of the first two zeros of J0.
const J0_DR1: f64 = 5.783185962946784;
const J0_DR2: f64 = 30.471262343662087;

const J0_RP: [f64; 4] = [
    -4.794432209782018e9,
    1.9561749194655657e12,
    -2.4924834436096772e14,
    9.708622510473064e15,
];
const J0_RQ: [f64; 8] = [
    4.99563147152651e2,
    1.737854016763747e5,
    4.844096583399621e7,
    1.1185553704535683e10,
    2.112775201154892e12,
    3.1051822985742256e14,
    3.1812195594320496e16,
    1.7108629408104315e18,
];
const J0_PP: [f64; 7] = [
    7.969367292973471e-4,
    8.283523921074408e-2,
    1.239533716464143,
    5.447250030587687,
    8.74716500199817,
    5.303240382353949,
    1.0,
];
const J0_PQ: [f64; 7] = [
    9.244088105588637e-4,
    8.562884743544745e-2,
    1.2535274390105895,
    5.470977403304171,
    8.761908832370695,
    5.306052882353947,
    1.0,
];
const J0_QP: [f64; 8] = [
    -1.1366383889846916e-2,
    -1.2825271867050931,
    -1.9553954425773597e1,
    -9.320601521237683e1,
    -1.7768116798048806e2,
    -1.4707750515495118e2,
    -5.141053267665993e1,
    -6.050143506007285,
];
const J0_QQ: [f64; 7] = [
    6.43178256118178e1,
    8.564300259769806e2,
    3.8824018360540163e3,
    7.240467741956525e3,
    5.930727011873169e3,
    2.0620933166032783e3,
    2.420057402402914e2,
];
const Y0_YP: [f64; 8] = [
    1.5592436785523574e4,
    -1.466392959039716e7,
    5.435264770518765e9,
    -9.821360657179115e11,
    8.75906394395367e13,
    -3.466283033847297e15,
    4.4273326857256984e16,
    -1.8495080043698668e16,
];
const Y0_YQ: [f64; 7] = [
    1.0412835366425984e3,
    6.26107330137135e5,
    2.6891963339381415e8,
    8.64002487103935e10,
    2.0297961275010555e13,
    3.1715775284297505e15,
    2.5059625617265306e17,
];

// Squares of the first two zeros of J1.
const J1_Z1: f64 = 1.4681970642123893e1;
const J1_Z2: f64 = 4.92184563216946e1;

const J1_RP: [f64; 4] = [
    -8.999712257055594e8,
    4.5222829799819403e11,
    -7.274942452218183e13,
    3.682957328638529e15,
];
const J1_RQ: [f64; 8] = [
    6.208364781180543e2,
    2.5698725675774884e5,
    8.351467914319493e7,
    2.215115954797925e10,
    4.749141220799914e12,
    7.843696078762359e14,
    8.952223361846274e16,
    5.322786203326801e18,
];
const J1_PP: [f64; 7] = [
    7.621256162081731e-4,
    7.313970569409176e-2,
    1.1271960812968493,
    5.112079511468076,
    8.424045901417724,
    5.214515986823615,
    1.0,
];
const J1_PQ: [f64; 7] = [
    5.713231280725487e-4,
    6.884559087544954e-2,
    1.105142326340617,
    5.073863861286015,
    8.399855543276042,
    5.209828486823619,
    1.0,
];
const J1_QP: [f64; 8] = [
    5.108625947501766e-2,
    4.982138729512334,
    7.582382841325453e1,
    3.667796093601508e2,
    7.108563049989261e2,
    5.974896124006136e2,
    2.1168875710057213e2,
    2.5207020585802372e1,
];
const J1_QQ: [f64; 7] = [
    7.423732770356752e1,
    1.0564488603826283e3,
    4.986410583376536e3,
    9.562318924047562e3,
    7.997041604473507e3,
    2.8261927851763908e3,
    3.360936078106983e2,
];
const Y1_YP: [f64; 6] = [
    1.2632047479017804e9,
    -6.473558763791603e11,
    1.1450951154182373e14,
    -8.127702555013251e15,
    2.024394757135949e17,
    -7.788771962659501e17,
];
const Y1_YQ: [f64; 8] = [
    5.943015923461282e2,
    2.3556409294306856e5,
    7.348119444597217e7,
    1.8760131610870617e10,
    3.8823127749623857e12,
    6.205577271469538e14,
    6.871410873553005e16,
    3.9727060811656064e18,
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn values_at_origin() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
        assert_eq!(y0(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn tabulated_values_at_one() {
        assert_abs_diff_eq!(j0(1.0), 0.7651976865579666, epsilon = 1e-15);
        assert_abs_diff_eq!(j1(1.0), 0.4400505857449335, epsilon = 1e-15);
        assert_abs_diff_eq!(y0(1.0), 0.08825696421567696, epsilon = 1e-15);
        assert_abs_diff_eq!(y1(1.0), -0.7812128213002887, epsilon = 1e-15);
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(j0(2.404825557695773).abs() < 1e-12);
    }

    #[test]
    fn j1_is_minus_derivative_of_j0() {
        let (x, d) = (3.0, 1e-6);
        let fd = (j0(x + d) - j0(x - d)) / (2.0 * d);
        assert_abs_diff_eq!(fd, -j1(x), epsilon = 1e-8);
    }

    #[test]
    fn checked_entry_points_reject_bad_arguments() {
        assert!(bessel_j0(f64::NAN).is_err());
        assert!(bessel_j1(f64::INFINITY).is_err());
        assert!(bessel_y0(0.0).is_err());
        assert!(bessel_y1(-1.0).is_err());
        assert!(hankel1_0(0.0).is_err());
        assert!(RealArg::positive(-2.0).is_err());
        assert_eq!(bessel_j0(-1.0).unwrap(), j0(1.0));
    }

    #[test]
    fn hankel_is_j_plus_i_y() {
        for &x in &[0.3, 1.0, 7.5, 120.0] {
            let h = hankel1_0(x).unwrap();
            assert_eq!(h.re, j0(x));
            assert_eq!(h.im, y0(x));
        }
        let h = hankel1_0(1.0).unwrap();
        assert_abs_diff_eq!(h.re, 0.7651976865579666, epsilon = 1e-15);
        assert_abs_diff_eq!(h.im, 0.08825696421567696, epsilon = 1e-15);
    }

    #[test]
    fn hankel_modulus_approaches_asymptote() {
        let x: f64 = 200.0;
        let m = hankel1_0(x).unwrap().norm() * (PI * x / 2.0).sqrt();
        assert!((m - 1.0).abs() < 2e-3);
    }

    #[test]
    fn scaled_functions_are_continuous_across_the_switch() {
        for nu in 0..=3 {
            let below = jn_scaled(nu, SCALED_SERIES_LIMIT - 1e-12);
            let above = jn_scaled(nu, SCALED_SERIES_LIMIT + 1e-12);
            assert_abs_diff_eq!(below, above, epsilon = 1e-12);
        }
        assert_eq!(jn_scaled(1, 0.0), 0.5);
        assert_eq!(jn_scaled(2, 0.0), 0.125);
        assert_abs_diff_eq!(jn_scaled(3, 0.0), 1.0 / 48.0, epsilon = 1e-18);
    }

    #[test]
    fn wronskian_holds() {
        for &x in &[0.5, 2.0, 10.0] {
            let w = j1(x) * y0(x) - j0(x) * y1(x);
            assert_abs_diff_eq!(w, 2.0 / (PI * x), epsilon = 1e-12);
        }
    }
}
