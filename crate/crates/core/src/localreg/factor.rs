use std::ops::{Div, Mul, Sub};

use super::SymMatrix;
use crate::error::{Error, Result};

/// Scalars a real factorization can be applied to (real or complex vectors).
pub trait Field: Copy + Sub<Output = Self> + Mul<f64, Output = Self> + Div<f64, Output = Self> {}

impl<T> Field for T where T: Copy + Sub<Output = T> + Mul<f64, Output = T> + Div<f64, Output = T> {}

/// Which dense symmetric factorization to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorMethod {
    /// Cholesky, falling back to Bunch-Kaufman if a pivot is not positive.
    #[default]
    Auto,
    Cholesky,
    Ldlt,
}

/// A factorization of a symmetric matrix reusable across right-hand sides.
#[derive(Debug, Clone)]
pub enum Factor {
    Cholesky(Cholesky),
    Ldlt(Ldlt),
}

impl Factor {
    pub fn new(a: &SymMatrix, method: FactorMethod) -> Result<Self> {
        match method {
            FactorMethod::Cholesky => Cholesky::new(a).map(Factor::Cholesky),
            FactorMethod::Ldlt => Ldlt::new(a).map(Factor::Ldlt),
            FactorMethod::Auto => match Cholesky::new(a) {
                Ok(c) => Ok(Factor::Cholesky(c)),
                Err(_) => Ldlt::new(a).map(Factor::Ldlt),
            },
        }
    }

    pub fn solve_in_place<T: Field>(&self, b: &mut [T]) {
        match self {
            Factor::Cholesky(c) => c.solve_in_place(b),
            Factor::Ldlt(l) => l.solve_in_place(b),
        }
    }

    pub fn method(&self) -> &'static str {
        match self {
            Factor::Cholesky(_) => "cholesky",
            Factor::Ldlt(_) => "ldlt",
        }
    }
}

/// `A = L L^T` with `L` stored row-major in the lower triangle.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        a.check_symmetric()?;
        let n = a.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for p in 0..j {
                d -= l[j * n + p] * l[j * n + p];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization {
                    method: "cholesky",
                    pivot: j,
                });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve_in_place<T: Field>(&self, b: &mut [T]) {
        let n = self.n;
        let l = &self.l;
        for i in 0..n {
            let mut s = b[i];
            for p in 0..i {
                s = s - b[p] * l[i * n + p];
            }
            b[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for p in i + 1..n {
                s = s - b[p] * l[p * n + i];
            }
            b[i] = s / l[i * n + i];
        }
    }
}

/// Symmetric indefinite factorization `P A P^T = L D L^T` with Bunch-Kaufman
/// partial pivoting; `D` has 1x1 and 2x2 diagonal blocks.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    /// Unit lower factor below the diagonal, `D` on and next to it.
    a: Vec<f64>,
    /// Row `i` of the permuted system is row `perm[i]` of the original.
    perm: Vec<usize>,
    /// Size (1 or 2) of the block starting at each index; 0 inside a 2x2 block.
    block: Vec<u8>,
}

impl Ldlt {
    pub fn new(m: &SymMatrix) -> Result<Self> {
        m.check_symmetric()?;
        let n = m.n;
        let alpha = (1.0 + 17f64.sqrt()) / 8.0;
        let mut a = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut block = vec![0u8; n];
        let fail = |pivot| Error::Factorization {
            method: "ldlt",
            pivot,
        };

        let mut k = 0;
        while k < n {
            let absakk = a[k * n + k].abs();
            let (imax, colmax) = (k + 1..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, 0.0), |best, c| if c.1 > best.1 { c } else { best });
            if absakk.max(colmax) == 0.0 || !absakk.is_finite() {
                return Err(fail(k));
            }
            let (size, kp) = if absakk >= alpha * colmax {
                (1, k)
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| a[imax * n + j].abs())
                    .fold(0.0, f64::max);
                if absakk * rowmax >= alpha * colmax * colmax {
                    (1, k)
                } else if a[imax * n + imax].abs() >= alpha * rowmax {
                    (1, imax)
                } else {
                    (2, imax)
                }
            };
            let kk = k + size - 1;
            if kp != kk {
                swap_sym(&mut a, n, k, kk, kp);
                perm.swap(kk, kp);
            }

            if size == 1 {
                let d = a[k * n + k];
                for i in k + 1..n {
                    let lik = a[i * n + k] / d;
                    for j in k + 1..n {
                        a[i * n + j] -= lik * a[k * n + j];
                    }
                }
                for i in k + 1..n {
                    a[i * n + k] /= d;
                    a[k * n + i] = 0.0;
                }
                block[k] = 1;
            } else {
                let d11 = a[k * n + k];
                let d21 = a[(k + 1) * n + k];
                let d22 = a[(k + 1) * n + k + 1];
                let det = d11 * d22 - d21 * d21;
                if det == 0.0 || !det.is_finite() {
                    return Err(fail(k));
                }
                for i in k + 2..n {
                    let (x, y) = (a[i * n + k], a[i * n + k + 1]);
                    // [l_i0, l_i1] = [x, y] D^{-1}
                    let l0 = (x * d22 - y * d21) / det;
                    let l1 = (y * d11 - x * d21) / det;
                    for j in k + 2..n {
                        a[i * n + j] -= l0 * a[k * n + j] + l1 * a[(k + 1) * n + j];
                    }
                    a[i * n + k] = l0;
                    a[i * n + k + 1] = l1;
                }
                for j in k + 2..n {
                    a[k * n + j] = 0.0;
                    a[(k + 1) * n + j] = 0.0;
                }
                a[k * n + k + 1] = d21;
                block[k] = 2;
            }
            k += size;
        }
        Ok(Self { n, a, perm, block })
    }

    pub fn solve_in_place<T: Field>(&self, b: &mut [T]) {
        let n = self.n;
        let a = &self.a;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        // L z = y
        let mut k = 0;
        while k < n {
            let s = self.block[k] as usize;
            for j in k..k + s {
                for i in k + s..n {
                    y[i] = y[i] - y[j] * a[i * n + j];
                }
            }
            k += s;
        }
        // D w = z
        let mut k = 0;
        while k < n {
            if self.block[k] == 1 {
                y[k] = y[k] / a[k * n + k];
                k += 1;
            } else {
                let d11 = a[k * n + k];
                let d21 = a[(k + 1) * n + k];
                let d22 = a[(k + 1) * n + k + 1];
                let det = d11 * d22 - d21 * d21;
                let (u, v) = (y[k], y[k + 1]);
                y[k] = (u * d22 - v * d21) / det;
                y[k + 1] = (v * d11 - u * d21) / det;
                k += 2;
            }
        }
        // L^T x = w, walking blocks backwards
        let mut starts = Vec::new();
        let mut k = 0;
        while k < n {
            starts.push(k);
            k += self.block[k] as usize;
        }
        for &k in starts.iter().rev() {
            let s = self.block[k] as usize;
            for j in k..k + s {
                for i in k + s..n {
                    y[j] = y[j] - y[i] * a[i * n + j];
                }
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = y[i];
        }
    }

    /// Number of 2x2 pivot blocks chosen.
    pub fn two_by_two_blocks(&self) -> usize {
        self.block.iter().filter(|&&b| b == 2).count()
    }
}

/// Symmetric interchange of indices `p` and `q` (both `>= k`) in the active
/// block, carrying the already computed multiplier rows along.
fn swap_sym(a: &mut [f64], n: usize, k: usize, p: usize, q: usize) {
    for j in 0..k {
        a.swap(p * n + j, q * n + j);
    }
    for j in k..n {
        a.swap(p * n + j, q * n + j);
    }
    for i in k..n {
        a.swap(i * n + p, i * n + q);
    }
}
