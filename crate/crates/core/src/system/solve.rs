use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};
use num_complex::Complex64;
use serde::Serialize;

use super::SparseSystem;
use crate::error::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_REFINEMENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub residual: f64,
    pub refinement_steps: usize,
}

type Lu = faer::sparse::linalg::solvers::Lu<usize, Complex64>;

fn factor(sys: &SparseSystem) -> Result<Lu> {
    if sys.n == 0 {
        return Err(Error::SparseSolve {
            row: 0,
            reason: "empty system".into(),
        });
    }
    if let Some(p) = sys.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        let row = sys.row_ptr.partition_point(|&s| s <= p) - 1;
        return Err(Error::SparseSolve {
            row,
            reason: "non-finite matrix entry".into(),
        });
    }
    // keep the factorization bit-reproducible regardless of thread count
    faer::set_global_parallelism(Par::Seq);
    let trip: Vec<Triplet<usize, usize, Complex64>> = sys.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let a = SparseColMat::<usize, Complex64>::try_new_from_triplets(sys.n, sys.n, &trip).map_err(|e| Error::SparseSolve {
        row: 0,
        reason: format!("matrix construction failed: {e:?}"),
    })?;
    a.sp_lu().map_err(|e| match e {
        LuError::SymbolicSingular { index } => Error::SparseSolve {
            row: index,
            reason: "structurally singular".into(),
        },
        LuError::Generic(g) => Error::SparseSolve {
            row: 0,
            reason: format!("factorization failed: {g:?}"),
        },
    })
}

fn to_mat(v: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn from_mat(m: &Mat<Complex64>) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Sparse LU solve of `H U = F` with up to three steps of iterative
/// refinement. Stores `U` and the relative residual in `sys`; fails when the
/// factorization breaks down, the solution is not finite, or the residual
/// stays above `1e-10`.
pub fn solve_sparse(sys: &mut SparseSystem) -> Result<SolveReport> {
    let lu = factor(sys)?;
    let mut x = to_mat(&sys.rhs);
    lu.solve_in_place(x.as_mut());
    let mut u = from_mat(&x);
    let bad = |u: &[Complex64]| u.iter().position(|v| !(v.re.is_finite() && v.im.is_finite()));
    if let Some(row) = bad(&u) {
        return Err(Error::SparseSolve {
            row,
            reason: "numerically singular: non-finite solution".into(),
        });
    }
    let mut res = sys.relative_residual(&u);
    let mut steps = 0;
    while res > 1e-13 && steps < MAX_REFINEMENT {
        let hu = sys.mul_vec(&u);
        let r: Vec<Complex64> = sys.rhs.iter().zip(&hu).map(|(f, h)| f - h).collect();
        let mut d = to_mat(&r);
        lu.solve_in_place(d.as_mut());
        let cand: Vec<Complex64> = u.iter().enumerate().map(|(i, v)| v + d[(i, 0)]).collect();
        let cres = sys.relative_residual(&cand);
        steps += 1;
        if !(cres < res) {
            break;
        }
        u = cand;
        res = cres;
    }
    if !(res <= RESIDUAL_TOL) {
        let hu = sys.mul_vec(&u);
        let row = hu
            .iter()
            .zip(&sys.rhs)
            .map(|(a, b)| (a - b).norm())
            .enumerate()
            .fold((0, 0.0), |m, (i, v)| if v > m.1 { (i, v) } else { m })
            .0;
        return Err(Error::SparseSolve {
            row,
            reason: format!("relative residual {res:.3e} exceeds {RESIDUAL_TOL:e}"),
        });
    }
    sys.solution = Some(u);
    sys.residual = Some(res);
    Ok(SolveReport {
        residual: res,
        refinement_steps: steps,
    })
}

/// Hager-Higham estimate of the 1-norm condition number `||H||_1 ||H^-1||_1`.
/// It is a lower bound on the true value and usually within a small factor.
pub fn estimate_condition(sys: &SparseSystem) -> Result<f64> {
    let lu = factor(sys)?;
    let n = sys.n;
    let one = |v: &Mat<Complex64>| (0..n).map(|i| v[(i, 0)].norm()).sum::<f64>();
    let mut x = Mat::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let mut y = x.clone();
        lu.solve_in_place(y.as_mut());
        let ny = one(&y);
        if iter > 0 && ny <= est {
            break;
        }
        est = ny;
        let mut z = Mat::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            if v.norm() > 0.0 {
                v / v.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        lu.solve_adjoint_in_place(z.as_mut());
        let (j, zmax) = (0..n)
            .map(|i| (i, z[(i, 0)].norm()))
            .fold((0, -1.0), |m, c| if c.1 > m.1 { c } else { m });
        let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = Mat::from_fn(n, 1, |i, _| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    }
    // alternating test vector guards against the rare underestimates
    let mut alt = Mat::from_fn(n, 1, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
        Complex64::new(s * (1.0 + i as f64 / denom), 0.0)
    });
    lu.solve_in_place(alt.as_mut());
    let est = est.max(2.0 * one(&alt) / (3.0 * n as f64));
    Ok((sys.norm1() * est).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::WeightRow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(n: usize, entries: &[(usize, usize, Complex64)], rhs: Vec<Complex64>) -> SparseSystem {
        let rows = (0..n)
            .map(|i| {
                let mut neighbors = Vec::new();
                let mut weights = Vec::new();
                for &(r, c, v) in entries {
                    if r == i {
                        neighbors.push(c);
                        weights.push(v);
                    }
                }
                WeightRow { node: i, neighbors, weights }
            })
            .collect();
        SparseSystem::from_rows(rows, rhs, vec![0.0; n]).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_returns_rhs() {
        let n = 5;
        let e: Vec<_> = (0..n).map(|i| (i, i, c(1.0, 0.0))).collect();
        let f: Vec<_> = (0..n).map(|i| c(i as f64, -(i as f64) * 0.5)).collect();
        let mut s = system(n, &e, f.clone());
        solve_sparse(&mut s).unwrap();
        assert_eq!(s.solution.unwrap(), f);
    }

    fn dense_solve(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut m = a.to_vec();
        let mut x = b.to_vec();
        for col in 0..n {
            let p = (col..n).max_by(|&i, &j| m[i * n + col].norm().total_cmp(&m[j * n + col].norm())).unwrap();
            for j in 0..n {
                m.swap(col * n + j, p * n + j);
            }
            x.swap(col, p);
            for r in col + 1..n {
                let f = m[r * n + col] / m[col * n + col];
                for j in col..n {
                    let t = m[col * n + j];
                    m[r * n + j] -= f * t;
                }
                let t = x[col];
                x[r] -= f * t;
            }
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for j in r + 1..n {
                s -= m[r * n + j] * x[j];
            }
            x[r] = s / m[r * n + r];
        }
        x
    }

    #[test]
    fn random_sparse_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 50;
        let mut dense = vec![c(0.0, 0.0); n * n];
        let mut e = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || rng.gen::<f64>() < 0.08 {
                    let mut v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if i == j {
                        v += c(6.0, 0.0);
                    }
                    dense[i * n + j] = v;
                    e.push((i, j, v));
                }
            }
        }
        let f: Vec<_> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut s = system(n, &e, f.clone());
        let rep = solve_sparse(&mut s).unwrap();
        assert!(rep.residual <= 1e-10);
        let oracle = dense_solve(n, &dense, &f);
        for (a, b) in s.solution.unwrap().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn diagonal_condition_estimate() {
        let s = system(2, &[(0, 0, c(1.0, 0.0)), (1, 1, c(1e-6, 0.0))], vec![c(1.0, 0.0); 2]);
        let k = estimate_condition(&s).unwrap();
        assert!(k > 1e6 / 3.0 && k < 3e6, "{k}");
        let id = system(3, &[(0, 0, c(2.0, 0.0)), (1, 1, c(2.0, 0.0)), (2, 2, c(2.0, 0.0))], vec![c(1.0, 0.0); 3]);
        assert!(estimate_condition(&id).unwrap() >= 1.0);
    }

    #[test]
    fn singular_system_is_reported() {
        // column 1 is empty
        let mut s = system(2, &[(0, 0, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))], vec![c(1.0, 0.0); 2]);
        assert!(matches!(solve_sparse(&mut s), Err(Error::SparseSolve { .. })));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let mut s = system(1, &[(0, 0, c(f64::NAN, 0.0))], vec![c(1.0, 0.0)]);
        assert!(matches!(solve_sparse(&mut s), Err(Error::SparseSolve { row: 0, .. })));
    }
}
