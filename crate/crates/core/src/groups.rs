//! Low-dimensional transformation groups acting on the image plane.
//!
//! Every group here is a subgroup of the similarity group, acting in the
//! centered frame (origin at the image center, x to the right, y down):
//! scale by `a`, rotate by `θ`, then translate by `(t_x, t_y)`. The rotation
//! matrix is the usual counter-clockwise one of the (x right, y up) frame;
//! because image rows grow downward a positive angle looks clockwise on screen.
//!
//! Parameters are stored as displacements from the identity, so the identity
//! is the all-zero vector on every axis: the scale axis stores `a - 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One parameter axis of a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Horizontal translation, pixels.
    TranslateX,
    /// Vertical translation, pixels (positive is down).
    TranslateY,
    /// Scale factor minus one.
    Scale,
    /// Rotation angle, radians.
    Angle,
}

impl Axis {
    /// Lattice step used when none is given.
    pub fn default_step(self) -> f64 {
        match self {
            Axis::TranslateX | Axis::TranslateY => 0.5,
            Axis::Scale => 0.1,
            Axis::Angle => std::f64::consts::PI / 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Rotation,
    Translation,
    DilationRotation,
    Similarity,
}

impl GroupKind {
    pub const ALL: [GroupKind; 4] = [
        GroupKind::Rotation,
        GroupKind::Translation,
        GroupKind::DilationRotation,
        GroupKind::Similarity,
    ];

    pub fn axes(self) -> &'static [Axis] {
        match self {
            GroupKind::Rotation => &[Axis::Angle],
            GroupKind::Translation => &[Axis::TranslateX, Axis::TranslateY],
            GroupKind::DilationRotation => &[Axis::Scale, Axis::Angle],
            GroupKind::Similarity => &[Axis::TranslateX, Axis::TranslateY, Axis::Scale, Axis::Angle],
        }
    }

    pub fn dim(self) -> usize {
        self.axes().len()
    }

    pub fn token(self) -> &'static str {
        match self {
            GroupKind::Rotation => "rot",
            GroupKind::Translation => "trans",
            GroupKind::DilationRotation => "dilrot",
            GroupKind::Similarity => "sim",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown group '{s}' (expected rot, trans, dilrot or sim)")))
    }
}

/// Parameter vector of a group element, one entry per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T>(Vec<T>);

impl<T: Real> Params<T> {
    pub fn from_slice(values: &[T]) -> Self {
        Self(values.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// Copy with axis `axis` shifted by `delta`.
    pub fn shifted(&self, axis: usize, delta: T) -> Self {
        let mut v = self.0.clone();
        v[axis] += delta;
        Self(v)
    }
}

impl<T> From<Vec<T>> for Params<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// `p ↦ scale · R(angle) · p + (tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity<T> {
    pub scale: T,
    pub angle: T,
    pub tx: T,
    pub ty: T,
}

impl<T: Real> Similarity<T> {
    pub fn identity() -> Self {
        Self {
            scale: T::one(),
            angle: T::zero(),
            tx: T::zero(),
            ty: T::zero(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == T::one() && self.angle == T::zero() && self.tx == T::zero() && self.ty == T::zero()
    }

    pub fn apply(&self, (x, y): (T, T)) -> (T, T) {
        let (s, c) = self.angle.sin_cos();
        (
            self.scale * (c * x - s * y) + self.tx,
            self.scale * (s * x + c * y) + self.ty,
        )
    }

    pub fn inverse(&self) -> Self {
        let inv_scale = self.scale.recip();
        let (s, c) = (-self.angle).sin_cos();
        Self {
            scale: inv_scale,
            angle: -self.angle,
            tx: -inv_scale * (c * self.tx - s * self.ty),
            ty: -inv_scale * (s * self.tx + c * self.ty),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let (tx, ty) = self.apply((other.tx, other.ty));
        Self {
            scale: self.scale * other.scale,
            angle: self.angle + other.angle,
            tx,
            ty,
        }
    }
}

/// A lattice sample of a group: integer node coordinates and their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint<T> {
    pub lattice: Vec<i32>,
    pub params: Params<T>,
    /// False when the node maps to a non-positive scale factor.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformGroup<T> {
    kind: GroupKind,
    steps: Vec<T>,
}

impl<T: Real> TransformGroup<T> {
    /// Group with the default lattice steps.
    pub fn new(kind: GroupKind) -> Self {
        Self {
            kind,
            steps: kind.axes().iter().map(|a| T::lit(a.default_step())).collect(),
        }
    }

    pub fn with_steps(kind: GroupKind, steps: &[T]) -> Result<Self> {
        if steps.len() != kind.dim() {
            return Err(Error::InvalidConfig(format!(
                "group {kind} needs {} steps, got {}",
                kind.dim(),
                steps.len()
            )));
        }
        if steps.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidConfig("lattice steps must be positive".into()));
        }
        Ok(Self {
            kind,
            steps: steps.to_vec(),
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn axes(&self) -> &'static [Axis] {
        self.kind.axes()
    }

    pub fn steps(&self) -> &[T] {
        &self.steps
    }

    pub fn identity(&self) -> Params<T> {
        Params::zeros(self.dim())
    }

    /// Whether `params` describe an element of the group (scale factor > 0).
    pub fn is_valid(&self, params: &Params<T>) -> bool {
        params.dim() == self.dim()
            && self
                .axes()
                .iter()
                .zip(params.as_slice())
                .all(|(axis, &v)| v.is_finite() && (*axis != Axis::Scale || T::one() + v > T::zero()))
    }

    /// The similarity transform represented by `params`.
    pub fn similarity(&self, params: &Params<T>) -> Result<Similarity<T>> {
        if params.dim() != self.dim() {
            return Err(Error::InvalidParams(format!(
                "group {} takes {} parameters, got {}",
                self.kind,
                self.dim(),
                params.dim()
            )));
        }
        let mut sim = Similarity::identity();
        for (axis, &v) in self.axes().iter().zip(params.as_slice()) {
            match axis {
                Axis::TranslateX => sim.tx = v,
                Axis::TranslateY => sim.ty = v,
                Axis::Scale => sim.scale = T::one() + v,
                Axis::Angle => sim.angle = v,
            }
        }
        if !(sim.scale > T::zero()) {
            return Err(Error::InvalidParams(format!("scale factor {} is not positive", sim.scale)));
        }
        Ok(sim)
    }

    fn params_of(&self, sim: &Similarity<T>) -> Params<T> {
        Params(
            self.axes()
                .iter()
                .map(|axis| match axis {
                    Axis::TranslateX => sim.tx,
                    Axis::TranslateY => sim.ty,
                    Axis::Scale => sim.scale - T::one(),
                    Axis::Angle => sim.angle,
                })
                .collect(),
        )
    }

    /// `τ(point)` in the centered frame.
    pub fn apply(&self, params: &Params<T>, point: (T, T)) -> Result<(T, T)> {
        Ok(self.similarity(params)?.apply(point))
    }

    /// Parameters of `τ⁻¹`. Every group here is closed under inversion.
    pub fn invert(&self, params: &Params<T>) -> Result<Params<T>> {
        let sim = self.similarity(params)?;
        Ok(self.params_of(&sim.inverse()))
    }

    /// Parameters of `a ∘ b` (apply `b` first).
    pub fn compose(&self, a: &Params<T>, b: &Params<T>) -> Result<Params<T>> {
        let sa = self.similarity(a)?;
        let sb = self.similarity(b)?;
        Ok(self.params_of(&sa.compose(&sb)))
    }

    pub fn params_from_lattice(&self, lattice: &[i32]) -> Params<T> {
        debug_assert_eq!(lattice.len(), self.dim());
        Params(
            lattice
                .iter()
                .zip(&self.steps)
                .map(|(&k, &s)| T::from_i32_lossy(k) * s)
                .collect(),
        )
    }

    pub fn point_from_lattice(&self, lattice: &[i32]) -> GroupPoint<T> {
        let params = self.params_from_lattice(lattice);
        let valid = self.is_valid(&params);
        GroupPoint {
            lattice: lattice.to_vec(),
            params,
            valid,
        }
    }
}
