//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod bigfloat {
    //! Fixed-point arithmetic on `BigInt` with `P` fractional bits, enough to
    //! evaluate the ascending Bessel series on `[0, 50]` without cancellation
    //! trouble.

    use num_bigint::BigInt;

    pub const P: u32 = 512;

    #[derive(Clone, Debug)]
    pub struct Fx(pub BigInt);

    pub fn one() -> Fx {
        Fx(BigInt::from(1) << P)
    }

    pub fn int(v: i64) -> Fx {
        Fx(BigInt::from(v) << P)
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Fx {
        assert!(x.is_finite());
        if x == 0.0 {
            return Fx(BigInt::from(0));
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(mant);
        let shift = P as i64 + e;
        let v = if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize };
        Fx(if x < 0.0 { -v } else { v })
    }

    pub fn to_f64(a: &Fx) -> f64 {
        let s: BigInt = &a.0 >> (P - 64);
        let v: i128 = (&s).try_into().expect("value out of range");
        v as f64 / 2f64.powi(64)
    }

    pub fn add(a: &Fx, b: &Fx) -> Fx {
        Fx(&a.0 + &b.0)
    }

    pub fn sub(a: &Fx, b: &Fx) -> Fx {
        Fx(&a.0 - &b.0)
    }

    pub fn mul(a: &Fx, b: &Fx) -> Fx {
        Fx((&a.0 * &b.0) >> P)
    }

    pub fn div(a: &Fx, b: &Fx) -> Fx {
        Fx((&a.0 << P) / &b.0)
    }

    pub fn div_int(a: &Fx, k: i64) -> Fx {
        Fx(&a.0 / BigInt::from(k))
    }

    pub fn is_zero(a: &Fx) -> bool {
        a.0 == BigInt::from(0)
    }

    /// `atanh(t)` for `|t| <= 1/2` by its Taylor series.
    fn atanh(t: &Fx) -> Fx {
        let t2 = mul(t, t);
        let mut pow = t.clone();
        let mut sum = t.clone();
        let mut k = 1;
        loop {
            pow = mul(&pow, &t2);
            let term = div_int(&pow, 2 * k + 1);
            if is_zero(&term) {
                return sum;
            }
            sum = add(&sum, &term);
            k += 1;
        }
    }

    /// `atan(1/n)` for integer `n >= 2`.
    fn atan_inv(n: i64) -> Fx {
        let mut pow = div_int(&one(), n);
        let mut sum = pow.clone();
        let mut k = 1;
        loop {
            pow = div_int(&pow, n * n);
            let term = div_int(&pow, 2 * k + 1);
            if is_zero(&term) {
                return sum;
            }
            sum = if k % 2 == 1 { sub(&sum, &term) } else { add(&sum, &term) };
            k += 1;
        }
    }

    pub fn pi() -> Fx {
        sub(&Fx(atan_inv(5).0 * 16), &Fx(atan_inv(239).0 * 4))
    }

    pub fn ln2() -> Fx {
        Fx(atanh(&div_int(&one(), 3)).0 * 2)
    }

    /// Natural logarithm of a positive value.
    pub fn ln(a: &Fx) -> Fx {
        assert!(a.0 > BigInt::from(0));
        // scale into [1/2, 1) by powers of two
        let mut m = a.clone();
        let mut j: i64 = 0;
        let half = div_int(&one(), 2);
        while m.0 >= one().0 {
            m = div_int(&m, 2);
            j += 1;
        }
        while m.0 < half.0 {
            m = Fx(m.0 * 2);
            j -= 1;
        }
        let t = div(&sub(&m, &one()), &add(&m, &one()));
        let lm = Fx(atanh(&t).0 * 2);
        add(&lm, &Fx(ln2().0 * j))
    }

    /// Euler's constant by the Brent-McMillan formula with `n = 40`; the
    /// truncation error is below `exp(-4n)`.
    pub fn euler_gamma() -> Fx {
        let n = 40i64;
        let mut a = sub(&Fx(BigInt::from(0)), &ln(&int(n)));
        let mut b = one();
        let (mut u, mut v) = (a.clone(), b.clone());
        for k in 1..400i64 {
            b = div_int(&Fx(b.0 * (n * n)), k * k);
            a = div_int(&add(&div_int(&Fx(a.0 * (n * n)), k), &b), k);
            if is_zero(&b) && is_zero(&a) {
                break;
            }
            u = add(&u, &a);
            v = add(&v, &b);
        }
        div(&u, &v)
    }
}

pub mod bessel_oracle {
    //! Ascending-series evaluation of `J0, J1, Y0, Y1` in fixed point.

    use super::bigfloat::*;

    pub struct Oracle {
        pi: Fx,
        gamma: Fx,
    }

    impl Oracle {
        pub fn new() -> Self {
            Self { pi: pi(), gamma: euler_gamma() }
        }

        /// `(sum_k (-q)^k / (k! (k+n)!), sum_k (-q)^k (psi(k+1) + psi(k+n+1)) / (k! (k+n)!))`
        /// with `q = x^2 / 4`, `n` in {0, 1}; the digamma values are expressed
        /// through harmonic numbers and returned without the `-2 gamma` part.
        fn series(&self, x: f64, n: i64) -> (Fx, Fx) {
            let xf = from_f64(x);
            let q = div_int(&mul(&xf, &xf), 4);
            let mut term = one();
            let mut s = term.clone();
            // harmonic sums H_k and H_{k+n}
            let mut hk = Fx(num_bigint::BigInt::from(0));
            let mut hkn = if n == 0 { hk.clone() } else { one() };
            let mut t = add(&hk, &hkn);
            let mut k = 0i64;
            let mut sh = mul(&term, &t);
            loop {
                k += 1;
                term = div_int(&mul(&term, &q), k * (k + n));
                term = Fx(-term.0);
                if is_zero(&term) && k as f64 > x * x / 4.0 {
                    return (s, sh);
                }
                hk = add(&hk, &div_int(&one(), k));
                hkn = add(&hkn, &div_int(&one(), k + n));
                t = add(&hk, &hkn);
                s = add(&s, &term);
                sh = add(&sh, &mul(&term, &t));
            }
        }

        pub fn j0(&self, x: f64) -> f64 {
            to_f64(&self.series(x, 0).0)
        }

        pub fn j1(&self, x: f64) -> f64 {
            let (s, _) = self.series(x, 1);
            to_f64(&div_int(&mul(&from_f64(x), &s), 2))
        }

        pub fn y0(&self, x: f64) -> f64 {
            assert!(x > 0.0);
            // Y0 = (2/pi) [ (ln(x/2) + gamma) J0 - sum (-q)^k H_k / (k!)^2 ]
            let (s, sh) = self.series(x, 0);
            let l = add(&ln(&div_int(&from_f64(x), 2)), &self.gamma);
            let inner = sub(&mul(&l, &s), &div_int(&sh, 2));
            to_f64(&div(&Fx(inner.0 * 2), &self.pi))
        }

        pub fn y1(&self, x: f64) -> f64 {
            assert!(x > 0.0);
            // Y1 = -2/(pi x) + (2/pi) ln(x/2) J1
            //      - (1/pi) (x/2) sum (-q)^k (psi(k+1) + psi(k+2)) / (k! (k+1)!)
            let xf = from_f64(x);
            let (s, sh) = self.series(x, 1);
            let half_x = div_int(&xf, 2);
            let j1 = mul(&half_x, &s);
            let psi_sum = sub(&sh, &Fx(mul(&s, &self.gamma).0 * 2));
            let l = ln(&half_x);
            let a = sub(&Fx(mul(&l, &j1).0 * 2), &mul(&half_x, &psi_sum));
            let v = sub(&div(&a, &self.pi), &div(&int(2), &mul(&self.pi, &xf)));
            to_f64(&v)
        }
    }
}
