//! Local solvers: the value a node receives from one already-frozen
//! vertex (edge), from a segment (triangle) or from a k-simplex, under a
//! constant metric `G` taken at the node being updated.
//!
//! Offsets are vertex positions minus the updated node position, in
//! parameter units.

use super::MAX_DIM;
use crate::linalg;
use crate::metric::MetricTensor;
use crate::scalar::Real;

/// Optimum of a local update: its value and barycentric vertex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution<T> {
    pub value: T,
    pub weights: Vec<T>,
}

/// `U_a + ‖offset_a‖_G`.
pub fn edge_update<T: Real>(u_a: T, offset_a: &[T], g: &MetricTensor<T>) -> T {
    u_a + g.norm(offset_a)
}

/// Minimizes `t·U_a + (1−t)·U_b + ‖t·a + (1−t)·b‖_G` over `t ∈ [0, 1]`.
///
/// The stationarity condition squares to a quadratic in `t`; its roots
/// inside the interval compete with both endpoints. An interior optimum
/// that does not beat the best endpoint by more than rounding resolves to
/// the endpoint, so vertex-aligned answers stay exact.
/// Returns the optimal value and `t` (the weight on `a`).
pub fn triangle_update<T: Real>(u_a: T, u_b: T, offset_a: &[T], offset_b: &[T], g: &MetricTensor<T>) -> (T, T) {
    let at_a = edge_update(u_a, offset_a, g);
    let at_b = edge_update(u_b, offset_b, g);
    let (mut best, mut best_t) = if at_b < at_a { (at_b, T::zero()) } else { (at_a, T::one()) };
    if !u_a.is_finite() || !u_b.is_finite() {
        return (best, best_t);
    }

    let p = offset_a.len();
    assert!(p <= MAX_DIM, "offsets longer than {MAX_DIM}");
    let mut d = [T::zero(); MAX_DIM];
    for (slot, (&a, &b)) in d.iter_mut().zip(offset_a.iter().zip(offset_b)) {
        *slot = a - b;
    }
    let d = &d[..p];
    let qa = g.quadratic_form(d);
    let qb = g.bilinear(d, offset_b);
    let qc = g.quadratic_form(offset_b);
    let delta = u_b - u_a;
    let k = qa - delta * delta;
    if qa <= T::zero() || k == T::zero() {
        return (best, best_t);
    }
    // qa·t² + 2·qb·t + (qb² − δ²·qc)/k = 0
    let c0 = (qb * qb - delta * delta * qc) / k;
    let disc = qb * qb - qa * c0;
    if disc < T::zero() {
        return (best, best_t);
    }
    let sq = disc.sqrt();
    let slack = T::lit(8.0) * T::epsilon() * best.abs().max(T::one());
    for t in [(-qb + sq) / qa, (-qb - sq) / qa] {
        if !(t > T::zero() && t < T::one()) {
            continue;
        }
        let mut x = [T::zero(); MAX_DIM];
        for (slot, (&b, &dd)) in x.iter_mut().zip(offset_b.iter().zip(d)) {
            *slot = b + t * dd;
        }
        let value = t * u_a + (T::one() - t) * u_b + g.norm(&x[..p]);
        if value < best - slack {
            best = value;
            best_t = t;
        }
    }
    (best, best_t)
}

/// Stationary point of `Σλᵢ·Uᵢ + ‖Σλᵢ·oᵢ‖_G` on the affine hull of the
/// vertices, if it lies strictly inside the simplex.
///
/// With `M = OᵀGO`, the optimum value `μ` solves
/// `(μ·1 − U)ᵀ M⁻¹ (μ·1 − U) = 1` and `λ ∝ M⁻¹(μ·1 − U)`.
pub(crate) fn interior_simplex<T: Real>(us: &[T], offsets: &[&[T]], g: &MetricTensor<T>) -> Option<LocalSolution<T>> {
    interior_simplex_fixed(us, offsets, g).map(|(value, weights)| LocalSolution {
        value,
        weights: weights[..us.len()].to_vec(),
    })
}

/// Allocation-free core of [`interior_simplex`] for up to `MAX_DIM` vertices.
pub(crate) fn interior_simplex_fixed<T: Real, O: AsRef<[T]>>(
    us: &[T],
    offsets: &[O],
    g: &MetricTensor<T>,
) -> Option<(T, [T; MAX_DIM])> {
    let k = us.len();
    if !(2..=MAX_DIM).contains(&k) || us.iter().any(|u| !u.is_finite()) {
        return None;
    }
    let mut gram = [T::zero(); MAX_DIM * MAX_DIM];
    for i in 0..k {
        for j in i..k {
            let v = g.bilinear(offsets[i].as_ref(), offsets[j].as_ref());
            gram[i * k + j] = v;
            gram[j * k + i] = v;
        }
    }
    let tol = T::lit(1e-12);
    let mut y = [T::one(); MAX_DIM];
    let mut z = [T::zero(); MAX_DIM];
    z[..k].copy_from_slice(us);
    if !linalg::solve_pair_in_place(&mut gram[..k * k], &mut y[..k], &mut z[..k], tol) {
        return None;
    }
    let a: T = y[..k].iter().copied().sum();
    let b: T = us.iter().zip(&y).map(|(&u, &yy)| u * yy).sum();
    let c: T = us.iter().zip(&z).map(|(&u, &zz)| u * zz).sum();
    if !(a > T::zero()) {
        return None;
    }
    let disc = b * b - a * (c - T::one());
    if disc < T::zero() {
        return None;
    }
    let p = offsets[0].as_ref().len();
    let mut best: Option<(T, [T; MAX_DIM])> = None;
    for mu in [(b + disc.sqrt()) / a, (b - disc.sqrt()) / a] {
        let mut w = [T::zero(); MAX_DIM];
        let mut total = T::zero();
        for i in 0..k {
            w[i] = mu * y[i] - z[i];
            total += w[i];
        }
        if !(total > T::zero()) {
            continue;
        }
        let mut feasible = true;
        for wi in w[..k].iter_mut() {
            *wi /= total;
            feasible &= *wi > T::zero();
        }
        if !feasible {
            continue;
        }
        let mut x = [T::zero(); MAX_DIM];
        for (l, o) in w[..k].iter().zip(offsets) {
            for (slot, &v) in x[..p].iter_mut().zip(o.as_ref()) {
                *slot += *l * v;
            }
        }
        let value = w[..k].iter().zip(us).map(|(&l, &u)| l * u).sum::<T>() + g.norm(&x[..p]);
        if best.is_none_or(|(v, _)| value < v) {
            best = Some((value, w));
        }
    }
    best
}

/// Minimum of `Σλᵢ·Uᵢ + ‖Σλᵢ·oᵢ‖_G` over the closed simplex `λ ≥ 0, Σλ = 1`.
///
/// One vertex is an edge update, two a triangle update; larger simplices
/// use the interior stationary point when it is feasible and otherwise the
/// best of their facets.
pub fn simplex_update<T: Real>(us: &[T], offsets: &[&[T]], g: &MetricTensor<T>) -> LocalSolution<T> {
    assert_eq!(us.len(), offsets.len(), "one offset per vertex");
    assert!(!us.is_empty(), "simplex needs at least one vertex");
    match us.len() {
        1 => LocalSolution {
            value: edge_update(us[0], offsets[0], g),
            weights: vec![T::one()],
        },
        2 => {
            let (value, t) = triangle_update(us[0], us[1], offsets[0], offsets[1], g);
            LocalSolution {
                value,
                weights: vec![t, T::one() - t],
            }
        }
        k => {
            let mut best = interior_simplex(us, offsets, g);
            for drop in 0..k {
                let sub_us: Vec<T> = us.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &u)| u).collect();
                let sub_off: Vec<&[T]> = offsets.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &o)| o).collect();
                let facet = simplex_update(&sub_us, &sub_off, g);
                if best.as_ref().is_none_or(|b| facet.value < b.value) {
                    let mut weights = facet.weights;
                    weights.insert(drop, T::zero());
                    best = Some(LocalSolution {
                        value: facet.value,
                        weights,
                    });
                }
            }
            best.expect("facets always yield a solution")
        }
    }
}
