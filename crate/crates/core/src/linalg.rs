//! Dense helpers for the tiny (p ≤ 4) matrices that show up in metric
//! repair and simplex updates. Matrices are row-major `n × n` slices.

use crate::scalar::Real;

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tol` relative to the largest entry.
#[cfg(test)]
pub(crate) fn solve<T: Real>(a: &[T], b: &[T], tol: T) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let mut none: [T; 0] = [];
    eliminate(&mut m, &mut x, &mut none, tol).then_some(x)
}

/// Solves `m · x = b₁` and `m · y = b₂` in place with one elimination;
/// `m` is destroyed. Returns false when singular.
pub(crate) fn solve_pair_in_place<T: Real>(m: &mut [T], x: &mut [T], y: &mut [T], tol: T) -> bool {
    eliminate(m, x, y, tol)
}

fn eliminate<T: Real>(m: &mut [T], x: &mut [T], y: &mut [T], tol: T) -> bool {
    let n = x.len();
    let pair = !y.is_empty();
    debug_assert_eq!(m.len(), n * n);
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return false;
    }
    for col in 0..n {
        let mut pivot = col;
        for i in col + 1..n {
            if m[i * n + col].abs() > m[pivot * n + col].abs() {
                pivot = i;
            }
        }
        if !(m[pivot * n + col].abs() > tol * scale) {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
            if pair {
                y.swap(col, pivot);
            }
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
            if pair {
                let v = y[col];
                y[row] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = m[col * n + col];
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / d;
        if pair {
            let mut acc = y[col];
            for k in col + 1..n {
                acc -= m[col * n + k] * y[k];
            }
            y[col] = acc / d;
        }
    }
    true
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the row-major matrix whose columns are eigenvectors.
pub(crate) fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let two = T::lit(2.0);
    for _sweep in 0..64 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: T = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

/// Determinant by elimination; exact enough for the small integer Gram
/// matrices used to test lattice offsets for independence.
#[cfg(test)]
pub(crate) fn determinant<T: Real>(a: &[T], n: usize) -> T {
    let mut m = a.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col]
                    .abs()
                    .partial_cmp(&m[j * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot * n + col] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        det *= m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
        }
    }
    det
}
