//! Pullback of the L² metric onto group parameters.
//!
//! At a group point `τ` the metric is the Gram matrix of the tangent images
//! `∂I_τ/∂θ_i`, which are estimated with central differences of half a
//! lattice step.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::fast_marching::Node;
use crate::groups::{Axis, GroupPoint, Params, TransformGroup};
use crate::image::Image;
use crate::linalg;
use crate::scalar::Real;

/// Symmetric positive-semidefinite `p × p` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Real> MetricTensor<T> {
    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![T::one(); dim])
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let dim = diag.len();
        let mut entries = vec![T::zero(); dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * dim + i] = d;
        }
        Self { dim, entries }
    }

    /// Builds a tensor from rows, mirroring the upper triangle so the result
    /// is exactly symmetric.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "metric rows must be square");
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                entries[i * dim + j] = rows[i][j];
                entries[j * dim + i] = rows[i][j];
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `vᵀ G v`, clamped at zero.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        debug_assert_eq!(v.len(), self.dim);
        let mut acc = T::zero();
        for i in 0..self.dim {
            let mut row = T::zero();
            for j in 0..self.dim {
                row += self.entries[i * self.dim + j] * v[j];
            }
            acc += v[i] * row;
        }
        acc.max(T::zero())
    }

    /// `uᵀ G v`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += u[i] * self.entries[i * self.dim + j] * v[j];
            }
        }
        acc
    }

    /// Mahalanobis length `√(vᵀ G v)`.
    pub fn norm(&self, v: &[T]) -> T {
        self.quadratic_form(v).sqrt()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        linalg::symmetric_eigen(&self.entries, self.dim).0
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Clamps negative eigenvalues to zero; PSD tensors are returned untouched.
    pub fn project_psd(self) -> Self {
        let (vals, vecs) = linalg::symmetric_eigen(&self.entries, self.dim);
        if vals.iter().all(|&l| l >= T::zero()) {
            return self;
        }
        let n = self.dim;
        let clamped: Vec<T> = vals.iter().map(|&l| l.max(T::zero())).collect();
        let mut rows = vec![vec![T::zero(); n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().skip(i) {
                *cell = (0..n).map(|k| vecs[i * n + k] * clamped[k] * vecs[j * n + k]).sum();
            }
        }
        Self::from_rows(&rows)
    }
}

/// Finite-difference estimates of `∂I_τ/∂θ_i` at `at`, one image per axis.
pub fn tangent_images<T: Real>(img: &Image<T>, group: &TransformGroup<T>, at: &Params<T>) -> Result<Vec<Image<T>>> {
    if !group.is_valid(at) {
        return Err(Error::InvalidParams(format!("{:?} is not a valid {} element", at.as_slice(), group.kind())));
    }
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(group.dim());
    for (axis, (&step, kind)) in group.steps().iter().zip(group.axes()).enumerate() {
        let h = step * half;
        let plus = at.shifted(axis, h);
        let minus = at.shifted(axis, -h);
        let forward = img.warp(group, &plus)?;
        let tangent = if *kind == Axis::Scale && !group.is_valid(&minus) {
            let center = img.warp(group, at)?;
            forward.scaled_difference(&center, h.recip())
        } else {
            let backward = img.warp(group, &minus)?;
            forward.scaled_difference(&backward, (h + h).recip())
        };
        out.push(tangent);
    }
    Ok(out)
}

/// Gram matrix of the tangent images at `at`, repaired to be PSD.
pub fn metric_tensor<T: Real>(img: &Image<T>, group: &TransformGroup<T>, at: &Params<T>) -> Result<MetricTensor<T>> {
    let tangents = tangent_images(img, group, at)?;
    let p = tangents.len();
    let mut rows = vec![vec![T::zero(); p]; p];
    for i in 0..p {
        for j in i..p {
            rows[i][j] = tangents[i].inner_product(&tangents[j])?;
        }
    }
    Ok(MetricTensor::from_rows(&rows).project_psd())
}

/// Lazily evaluated, memoized metric field of one image over a group lattice,
/// with the degeneracy guard applied to every tensor it hands out.
pub struct ImageMetricField<'a, T> {
    image: &'a Image<T>,
    group: &'a TransformGroup<T>,
    degenerate_below: T,
    cache: FxHashMap<Node, MetricTensor<T>>,
}

impl<'a, T: Real> ImageMetricField<'a, T> {
    pub fn new(image: &'a Image<T>, group: &'a TransformGroup<T>) -> Self {
        let norm = image.l2_norm();
        Self {
            image,
            group,
            degenerate_below: T::lit(1e-12) * norm * norm,
            cache: FxHashMap::default(),
        }
    }

    pub fn point(&self, node: &Node) -> GroupPoint<T> {
        self.group.point_from_lattice(node.coords())
    }

    /// Metric at a lattice node; `DegenerateMetric` when its trace is
    /// negligible relative to `‖I‖²`.
    pub fn metric(&mut self, node: &Node) -> Result<MetricTensor<T>> {
        if let Some(g) = self.cache.get(node) {
            return Ok(g.clone());
        }
        let params = self.group.params_from_lattice(node.coords());
        let g = metric_tensor(self.image, self.group, &params)?;
        if !(g.trace() >= self.degenerate_below) || g.trace() == T::zero() {
            return Err(Error::DegenerateMetric(*node));
        }
        self.cache.insert(*node, g.clone());
        Ok(g)
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}
