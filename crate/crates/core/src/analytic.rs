//! Closed-form solutions of the constant-wavenumber Helmholtz equation used
//! as references: Hankel point sources, plane waves and the Green's function.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::specfun::{hankel1_0, hankel1_1};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// An exact solution of `Laplacian u + k^2 u = 0` away from its sources.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceField {
    /// `sum_j a_j sqrt(k) H0(k |x - s_j|)`.
    HankelSources { k: f64, sources: Vec<(Point, Complex64)> },
    /// `exp(i k (x cos theta + y sin theta))`.
    PlaneWave { k: f64, theta: f64 },
    /// `(i/4) H0(k |x - x0|)`.
    Green { k: f64, source: Point },
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::param("k", format!("must be positive, got {k}")))
    }
}

/// Single Hankel source `amplitude * sqrt(k) H0(k |x - source|)`.
pub fn hankel_source_field(k: f64, source: Point, amplitude: Complex64) -> Result<ReferenceField> {
    check_k(k)?;
    Ok(ReferenceField::HankelSources {
        k,
        sources: vec![(source, amplitude)],
    })
}

/// `u1`: one unit source at `(2, 2)`, outside the unit test square.
pub fn u1(k: f64) -> Result<ReferenceField> {
    hankel_source_field(k, Point::new(2.0, 2.0), Complex64::new(1.0, 0.0))
}

/// `u2`: four distant sources with amplitudes `1, 2, 0.5, -1` at
/// `(-20,-20)`, `(20,20)`, `(-20,20)`, `(20,-20)`.
pub fn u2(k: f64) -> Result<ReferenceField> {
    check_k(k)?;
    let src = |x: f64, y: f64, a: f64| (Point::new(x, y), Complex64::new(a, 0.0));
    Ok(ReferenceField::HankelSources {
        k,
        sources: vec![
            src(-20.0, -20.0, 1.0),
            src(20.0, 20.0, 2.0),
            src(-20.0, 20.0, 0.5),
            src(20.0, -20.0, -1.0),
        ],
    })
}

pub fn plane_wave(k: f64, theta: f64) -> Result<ReferenceField> {
    check_k(k)?;
    Ok(ReferenceField::PlaneWave { k, theta })
}

/// Free-space fundamental solution `(i/4) H0(k |x - source|)`.
pub fn green_function(k: f64, source: Point) -> Result<ReferenceField> {
    check_k(k)?;
    Ok(ReferenceField::Green { k, source })
}

impl ReferenceField {
    pub fn wavenumber(&self) -> f64 {
        match self {
            ReferenceField::HankelSources { k, .. } | ReferenceField::PlaneWave { k, .. } | ReferenceField::Green { k, .. } => *k,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ReferenceField::HankelSources { .. } => "hankel",
            ReferenceField::PlaneWave { .. } => "plane_wave",
            ReferenceField::Green { .. } => "green",
        }
    }

    pub fn value(&self, p: Point) -> Result<Complex64> {
        match self {
            ReferenceField::HankelSources { k, sources } => {
                let mut u = Complex64::new(0.0, 0.0);
                for &(s, a) in sources {
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    u += a * k.sqrt() * hankel1_0(k * p.dist(s))?;
                }
                Ok(u)
            }
            ReferenceField::PlaneWave { k, theta } => {
                let phase = k * (p.x * theta.cos() + p.y * theta.sin());
                Ok(Complex64::from_polar(1.0, phase))
            }
            ReferenceField::Green { k, source } => Ok(0.25 * I * hankel1_0(k * p.dist(*source))?),
        }
    }

    /// `(du/dx, du/dy)`, using `H0' = -H1`.
    pub fn gradient(&self, p: Point) -> Result<[Complex64; 2]> {
        let radial = |k: f64, s: Point, scale: Complex64| -> Result<[Complex64; 2]> {
            let d = p - s;
            let r = d.norm();
            let dh = -k * hankel1_1(k * r)? * scale;
            Ok([dh * (d.x / r), dh * (d.y / r)])
        };
        match self {
            ReferenceField::HankelSources { k, sources } => {
                let mut g = [Complex64::new(0.0, 0.0); 2];
                for &(s, a) in sources {
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let t = radial(*k, s, a * k.sqrt())?;
                    g[0] += t[0];
                    g[1] += t[1];
                }
                Ok(g)
            }
            ReferenceField::PlaneWave { k, theta } => {
                let u = self.value(p)?;
                Ok([I * k * theta.cos() * u, I * k * theta.sin() * u])
            }
            ReferenceField::Green { k, source } => radial(*k, *source, 0.25 * I),
        }
    }
}

/// Impedance data `g = grad u . n + i k u`.
pub fn impedance_data(field: &ReferenceField, p: Point, normal: Point, k_local: f64) -> Result<Complex64> {
    let g = field.gradient(p)?;
    Ok(g[0] * normal.x + g[1] * normal.y + I * k_local * field.value(p)?)
}

/// Outgoing response to the Gaussian source
/// `exp(-r^2 / (2 sigma^2)) / (2 pi sigma^2)` centered at `source`:
/// `u(r) = (i/4) [H0(kr) int_0^r J0(k p) w(p) 2 pi p dp + J0(kr) int_r^inf H0(k p) w(p) 2 pi p dp]`.
/// Both radial integrals are tabulated once on a fine grid.
#[derive(Debug, Clone)]
pub struct SmoothedGreen {
    pub k: f64,
    pub source: Point,
    pub sigma: f64,
    step: f64,
    inner: Vec<f64>,
    outer: Vec<Complex64>,
}

impl SmoothedGreen {
    pub fn new(k: f64, source: Point, sigma: f64) -> Result<Self> {
        check_k(k)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        let reach = 12.0 * sigma;
        let m = 24_000;
        let step = reach / m as f64;
        let weight = |p: f64| (-p * p / (2.0 * sigma * sigma)).exp() / (sigma * sigma) * p;
        let mut inner = vec![0.0; m + 1];
        for i in 1..=m {
            let (a, b) = ((i - 1) as f64 * step, i as f64 * step);
            let fa = crate::specfun::j0(k * a) * weight(a);
            let fb = crate::specfun::j0(k * b) * weight(b);
            inner[i] = inner[i - 1] + 0.5 * step * (fa + fb);
        }
        // the outer integrand has an integrable log singularity at 0 that
        // p * H0(k p) removes, so the origin value is zero
        let h = |p: f64| -> Complex64 {
            if p == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                hankel1_0(k * p).unwrap_or_default() * weight(p)
            }
        };
        let mut outer = vec![Complex64::new(0.0, 0.0); m + 1];
        for i in (0..m).rev() {
            let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
            outer[i] = outer[i + 1] + 0.5 * step * (h(a) + h(b));
        }
        Ok(Self {
            k,
            source,
            sigma,
            step,
            inner,
            outer,
        })
    }

    fn lookup<T>(&self, table: &[T], r: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let t = r / self.step;
        let last = table.len() - 1;
        if t >= last as f64 {
            return table[last];
        }
        let i = t.floor() as usize;
        let f = t - i as f64;
        table[i] * (1.0 - f) + table[i + 1] * f
    }

    /// Field value; the source point itself is excluded.
    pub fn value(&self, p: Point) -> Result<Complex64> {
        let r = p.dist(self.source);
        let s = self.k * r;
        let a = self.lookup(&self.inner, r);
        let b = self.lookup(&self.outer, r);
        Ok(0.25 * I * (hankel1_0(s)? * a + b * crate::specfun::bessel_j0(s)?))
    }

    /// `exp(-k^2 sigma^2 / 2)`, the far-field amplitude relative to `(i/4) H0`.
    pub fn far_field_factor(&self) -> f64 {
        (-0.5 * (self.k * self.sigma).powi(2)).exp()
    }
}
