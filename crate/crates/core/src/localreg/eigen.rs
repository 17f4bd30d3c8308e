use super::SymMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// in decreasing order. Sweeps stop once the off-diagonal Frobenius norm
/// falls below `1e-14 * ||A||_F`.
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    m.check_symmetric()?;
    let n = m.n;
    let mut a = m.data.clone();
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-14 * frob;
    for _ in 0..MAX_SWEEPS {
        let off = off_norm(&a, n);
        if off <= tol || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev)
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Largest and smallest eigenvalue of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub lambda_max: f64,
    /// Clamped at zero; see `clamped`.
    pub lambda_min: f64,
    /// The computed smallest eigenvalue was not positive.
    pub clamped: bool,
}

pub fn extreme_eigenvalues(m: &SymMatrix) -> Result<Spectrum> {
    if m.n == 0 {
        return Err(Error::param("matrix", "empty matrix"));
    }
    let ev = symmetric_eigenvalues(m)?;
    let raw = ev[m.n - 1];
    Ok(Spectrum {
        lambda_max: ev[0],
        lambda_min: raw.max(0.0),
        clamped: raw <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let a = 0.3;
        let m = SymMatrix::from_rows(2, vec![1.0, a, a, 1.0]);
        let ev = symmetric_eigenvalues(&m).unwrap();
        assert!((ev[0] - 1.3).abs() < 1e-15);
        assert!((ev[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_known_spectrum() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(j pi / (n+1))
        let n = 12;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 2.0;
            if i + 1 < n {
                d[i * n + i + 1] = -1.0;
                d[(i + 1) * n + i] = -1.0;
            }
        }
        let ev = symmetric_eigenvalues(&SymMatrix::from_rows(n, d)).unwrap();
        let mut exact: Vec<f64> = (1..=n)
            .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        exact.sort_by(|x, y| y.total_cmp(x));
        for (a, b) in ev.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = SymMatrix::from_rows(2, vec![1.0, 0.1, 0.2, 1.0]);
        assert!(matches!(symmetric_eigenvalues(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn singular_is_flagged() {
        let m = SymMatrix::from_rows(2, vec![1.0, 1.0, 1.0, 1.0]);
        let s = extreme_eigenvalues(&m).unwrap();
        assert!((s.lambda_max - 2.0).abs() < 1e-15);
        assert!(s.lambda_min < 1e-15);
    }
}
