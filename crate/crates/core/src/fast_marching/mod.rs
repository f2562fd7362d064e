//! Fast Marching on a group lattice.
//!
//! Nodes are frozen in increasing order of their tentative distance. When a
//! node is frozen, each not-yet-frozen neighbor in its `3^p − 1` hypercube
//! neighborhood is relaxed with the edge from the frozen node and with every
//! simplex face that contains the frozen node and is otherwise made of
//! frozen vertices. The faces come from a triangulation of the boundary of
//! the unit hypercube around the updated node: on each of its `2p` facets,
//! chains start at the facet center and step outward along distinct axes.
//! For `p = 2` these are the eight triangles of the usual 8-neighbor stencil.
//!
//! Nodes and metric tensors are produced on demand, so only the region the
//! front actually reaches is ever materialized.

mod heap;
mod path;
mod update;

pub mod export;

use std::collections::{HashMap, HashSet};
use std::fmt;

use rustc_hash::FxHashMap;

pub use heap::FrontierHeap;
pub use path::GeodesicPath;
pub use update::{edge_update, simplex_update, triangle_update, LocalSolution};

use crate::error::Result;
use crate::groups::{Axis, TransformGroup};
use crate::metric::MetricTensor;
use crate::scalar::Real;

/// Iteration budget used when none is configured.
pub const DEFAULT_MAX_ITERS: usize = 50_000;

pub const MAX_DIM: usize = 4;

const NEIGHBOR_SLOTS: usize = 80;

/// Integer lattice coordinates of up to [`MAX_DIM`] axes.
///
/// Ordering is lexicographic on the coordinates and is used to break ties
/// between equal distances.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Node {
    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "lattice dimension {dim} unsupported");
        Self {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        }
    }

    pub fn from_slice(coords: &[i32]) -> Self {
        let mut node = Self::origin(coords.len());
        node.coords[..coords.len()].copy_from_slice(coords);
        node
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim()]
    }

    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&c| c == 0)
    }

    pub fn offset(&self, delta: &[i32]) -> Self {
        let mut n = *self;
        for (c, d) in n.coords.iter_mut().zip(delta) {
            *c += d;
        }
        n
    }

    fn delta_to(&self, other: &Node) -> [i32; MAX_DIM] {
        let mut d = [0; MAX_DIM];
        for (i, slot) in d.iter_mut().enumerate().take(self.dim()) {
            *slot = other.coords[i] - self.coords[i];
        }
        d
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// Geometry of the sampled parameter space: step per axis, an optional
/// exclusive lower bound on each parameter, and an optional box window.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T> {
    steps: Vec<T>,
    floors: Vec<Option<T>>,
    radius: Option<Vec<i32>>,
}

impl<T: Real> Lattice<T> {
    pub fn new(steps: &[T]) -> Self {
        assert!((1..=MAX_DIM).contains(&steps.len()));
        Self {
            steps: steps.to_vec(),
            floors: vec![None; steps.len()],
            radius: None,
        }
    }

    /// Lattice of a transformation group; nodes with a non-positive scale
    /// factor are excluded.
    pub fn for_group(group: &TransformGroup<T>) -> Self {
        let mut lattice = Self::new(group.steps());
        for (i, axis) in group.axes().iter().enumerate() {
            if *axis == Axis::Scale {
                lattice.floors[i] = Some(-T::one());
            }
        }
        lattice
    }

    /// Restricts the lattice to `|coord_i| ≤ radius_i`.
    pub fn with_window(mut self, radius: &[i32]) -> Self {
        assert_eq!(radius.len(), self.dim());
        self.radius = Some(radius.to_vec());
        self
    }

    pub fn dim(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[T] {
        &self.steps
    }

    pub fn window(&self) -> Option<&[i32]> {
        self.radius.as_deref()
    }

    pub fn params(&self, node: &Node) -> Vec<T> {
        node.coords()
            .iter()
            .zip(&self.steps)
            .map(|(&k, &s)| T::from_i32_lossy(k) * s)
            .collect()
    }

    pub fn contains(&self, node: &Node) -> bool {
        if let Some(radius) = &self.radius {
            if node.coords().iter().zip(radius).any(|(c, r)| c.abs() > *r) {
                return false;
            }
        }
        node.coords()
            .iter()
            .zip(&self.steps)
            .zip(&self.floors)
            .all(|((&k, &s), floor)| floor.is_none_or(|f| T::from_i32_lossy(k) * s > f))
    }

    /// Parameter-space vector from `from` to `to`.
    fn offset(&self, from: &Node, to: &Node) -> [T; MAX_DIM] {
        let d = from.delta_to(to);
        let mut out = [T::zero(); MAX_DIM];
        for i in 0..self.dim() {
            out[i] = T::from_i32_lossy(d[i]) * self.steps[i];
        }
        out
    }
}

/// Neighborhood offsets and, for each neighbor offset `r`, the simplex faces
/// that contain `r` (listed as their other vertices).
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    dim: usize,
    neighbors: Vec<[i32; MAX_DIM]>,
    /// Neighbor index by base-3 code of the offset.
    index: Vec<Option<u8>>,
    /// Per neighbor: every other vertex sharing a face with it.
    adjacent: Vec<Vec<u8>>,
    faces: Vec<Vec<Face>>,
}

/// A stencil face, minus the vertex it is filed under.
#[derive(Debug, Clone, Copy)]
struct Face {
    others: [u8; MAX_DIM - 1],
    len: u8,
    /// Bit `i` set for each neighbor index `i` in `others`.
    mask: u128,
}

fn offset_code(off: &[i32; MAX_DIM]) -> usize {
    off.iter().rev().fold(0, |acc, &v| acc * 3 + (v + 1) as usize)
}

impl Stencil {
    pub(crate) fn new(dim: usize) -> Self {
        let mut neighbors = Vec::new();
        let total = 3usize.pow(dim as u32);
        for code in 0..total {
            let mut off = [0; MAX_DIM];
            let mut c = code;
            for slot in off.iter_mut().take(dim) {
                *slot = (c % 3) as i32 - 1;
                c /= 3;
            }
            if off.iter().any(|&v| v != 0) {
                neighbors.push(off);
            }
        }
        neighbors.sort();

        let mut face_sets: HashMap<[i32; MAX_DIM], HashSet<Vec<[i32; MAX_DIM]>>> = HashMap::new();
        for top in Self::top_simplices(dim) {
            for (i, &r) in top.iter().enumerate() {
                let others: Vec<[i32; MAX_DIM]> = top.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &v)| v).collect();
                for mask in 1u32..(1 << others.len()) {
                    let mut face: Vec<[i32; MAX_DIM]> =
                        (0..others.len()).filter(|b| mask & (1 << b) != 0).map(|b| others[b]).collect();
                    face.sort();
                    face_sets.entry(r).or_default().insert(face);
                }
            }
        }
        let mut index = vec![None; 3usize.pow(MAX_DIM as u32)];
        for (i, n) in neighbors.iter().enumerate() {
            index[offset_code(n)] = Some(i as u8);
        }
        let mut adjacent = Vec::with_capacity(neighbors.len());
        let mut faces = Vec::with_capacity(neighbors.len());
        for r in &neighbors {
            let mut list: Vec<Vec<[i32; MAX_DIM]>> = face_sets.remove(r).unwrap_or_default().into_iter().collect();
            list.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            let mut adj: Vec<u8> = Vec::new();
            let encoded: Vec<Face> = list
                .iter()
                .map(|face| {
                    let mut f = Face {
                        others: [0; MAX_DIM - 1],
                        len: face.len() as u8,
                        mask: 0,
                    };
                    for (slot, v) in f.others.iter_mut().zip(face) {
                        let i = index[offset_code(v)].expect("face vertices are neighbors");
                        *slot = i;
                        f.mask |= 1u128 << i;
                        if !adj.contains(&i) {
                            adj.push(i);
                        }
                    }
                    f
                })
                .collect();
            adj.sort_unstable();
            adjacent.push(adj);
            faces.push(encoded);
        }
        Self {
            dim,
            neighbors,
            index,
            adjacent,
            faces,
        }
    }

    /// Maximal simplices triangulating the boundary of `[-1, 1]^dim`.
    fn top_simplices(dim: usize) -> Vec<Vec<[i32; MAX_DIM]>> {
        let mut out = Vec::new();
        for facet_axis in 0..dim {
            for facet_sign in [-1, 1] {
                let others: Vec<usize> = (0..dim).filter(|&a| a != facet_axis).collect();
                let mut base = [0; MAX_DIM];
                base[facet_axis] = facet_sign;
                for signs in 0u32..(1 << others.len()) {
                    for perm in permutations(&others) {
                        let mut v = base;
                        let mut simplex = vec![v];
                        for &axis in &perm {
                            let bit = others.iter().position(|&a| a == axis).unwrap();
                            v[axis] = if signs & (1 << bit) != 0 { 1 } else { -1 };
                            simplex.push(v);
                        }
                        out.push(simplex);
                    }
                }
            }
        }
        out
    }

    pub(crate) fn neighbors(&self) -> &[[i32; MAX_DIM]] {
        &self.neighbors
    }

    fn index_of(&self, r: &[i32; MAX_DIM]) -> Option<usize> {
        self.index.get(offset_code(r)).copied().flatten().map(usize::from)
    }

    /// Faces containing the neighbor `r`, listed by their other vertices.
    #[cfg(test)]
    pub(crate) fn faces_with(&self, r: &[i32; MAX_DIM]) -> Vec<Vec<[i32; MAX_DIM]>> {
        self.index_of(r).map_or_else(Vec::new, |i| {
            self.faces[i]
                .iter()
                .map(|f| f.others[..f.len as usize].iter().map(|&j| self.neighbors[j as usize]).collect())
                .collect()
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Known,
    Unknown,
}

/// How a node's distance was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Predecessor<T> {
    /// Edge from a single frozen node.
    Single(Node),
    /// Barycentric point of a frozen simplex face; weights sum to one.
    /// A triangle update is the two-vertex case `[(a, t), (b, 1 − t)]`.
    Weighted(Vec<(Node, T)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord<T> {
    pub distance: T,
    pub state: NodeState,
    /// `None` only for the identity node.
    pub predecessor: Option<Predecessor<T>>,
    /// Metric length of the last segment, from the predecessor point to
    /// this node.
    pub step_cost: T,
    pub label: Option<u32>,
    /// Position in the freezing order, once Known.
    pub frozen_at: Option<usize>,
}

/// Sparse distance map produced by one run.
#[derive(Debug, Clone)]
pub struct DistanceMap<T> {
    lattice: Lattice<T>,
    records: FxHashMap<Node, NodeRecord<T>>,
    frozen: Vec<Node>,
}

impl<T: Real> DistanceMap<T> {
    fn new(lattice: Lattice<T>) -> Self {
        Self {
            lattice,
            records: FxHashMap::default(),
            frozen: Vec::new(),
        }
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn get(&self, node: &Node) -> Option<&NodeRecord<T>> {
        self.records.get(node)
    }

    /// Distance of a Known node.
    pub fn distance(&self, node: &Node) -> Option<T> {
        self.records
            .get(node)
            .filter(|r| r.state == NodeState::Known)
            .map(|r| r.distance)
    }

    pub fn is_known(&self, node: &Node) -> bool {
        self.records.get(node).is_some_and(|r| r.state == NodeState::Known)
    }

    /// Known nodes in freezing order.
    pub fn frozen(&self) -> &[Node] {
        &self.frozen
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All records sorted by lattice coordinates.
    pub fn sorted(&self) -> Vec<(&Node, &NodeRecord<T>)> {
        let mut v: Vec<_> = self.records.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn set_label(&mut self, node: &Node, label: u32) {
        if let Some(r) = self.records.get_mut(node) {
            r.label = Some(label);
        }
    }
}

/// What the classifier hook tells the solver after a node is frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StopSignal {
    pub halt: bool,
    pub label: Option<u32>,
}

impl StopSignal {
    pub const CONTINUE: StopSignal = StopSignal { halt: false, label: None };
    pub const HALT: StopSignal = StopSignal { halt: true, label: None };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<T> {
    /// The stop hook halted on this frozen node.
    Hit { node: Node, distance: T },
    /// The iteration budget ran out.
    Exhausted,
    /// Every reachable node of a bounded lattice was frozen.
    Completed,
}

#[derive(Debug, Clone)]
pub struct MarchResult<T> {
    pub map: DistanceMap<T>,
    pub outcome: Outcome<T>,
    /// Number of frozen nodes.
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct FastMarching<T> {
    lattice: Lattice<T>,
    max_iters: usize,
    stencil: Stencil,
    /// Parameter-space vector of each stencil neighbor.
    neighbor_offsets: Vec<[T; MAX_DIM]>,
}

impl<T: Real> FastMarching<T> {
    pub fn new(lattice: Lattice<T>, max_iters: usize) -> Self {
        assert!(max_iters >= 1, "max_iters must be at least 1");
        let stencil = Stencil::new(lattice.dim());
        let neighbor_offsets = stencil
            .neighbors()
            .iter()
            .map(|n| lattice.offset(&Node::origin(lattice.dim()), &Node::from_slice(&n[..lattice.dim()])))
            .collect();
        Self {
            lattice,
            max_iters,
            stencil,
            neighbor_offsets,
        }
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    /// Runs the front from the identity node.
    ///
    /// `metric` supplies the tensor at a node and is called for every node
    /// the front touches; `stop` is consulted once per frozen node, in
    /// freezing order.
    pub fn run<M, S>(&self, mut metric: M, mut stop: S) -> Result<MarchResult<T>>
    where
        M: FnMut(&Node) -> Result<MetricTensor<T>>,
        S: FnMut(&Node, T) -> Result<StopSignal>,
    {
        let dim = self.stencil.dim();
        let origin = Node::origin(dim);
        let mut map = DistanceMap::new(self.lattice.clone());
        let mut heap = FrontierHeap::new();
        map.records.insert(
            origin,
            NodeRecord {
                distance: T::zero(),
                state: NodeState::Unknown,
                predecessor: None,
                step_cost: T::zero(),
                label: None,
                frozen_at: None,
            },
        );
        heap.push(T::zero(), origin);

        let mut last = T::zero();
        loop {
            let records = &map.records;
            let Some((u, node)) = heap.pop_current(|key, n| {
                records
                    .get(n)
                    .is_some_and(|r| r.state == NodeState::Unknown && r.distance == key)
            }) else {
                let iterations = map.frozen.len();
                return Ok(MarchResult {
                    map,
                    outcome: Outcome::Completed,
                    iterations,
                });
            };
            debug_assert!(u >= last, "freezing order must be non-decreasing");
            last = u;

            let index = map.frozen.len();
            {
                let rec = map.records.get_mut(&node).expect("popped node has a record");
                rec.state = NodeState::Known;
                rec.frozen_at = Some(index);
            }
            map.frozen.push(node);

            let signal = stop(&node, u)?;
            if let Some(label) = signal.label {
                map.set_label(&node, label);
            }
            if signal.halt {
                return Ok(MarchResult {
                    map,
                    outcome: Outcome::Hit { node, distance: u },
                    iterations: index + 1,
                });
            }
            if index + 1 >= self.max_iters {
                return Ok(MarchResult {
                    map,
                    outcome: Outcome::Exhausted,
                    iterations: index + 1,
                });
            }

            for delta in self.stencil.neighbors() {
                let target = node.offset(&delta[..dim]);
                if !self.lattice.contains(&target) || map.is_known(&target) {
                    continue;
                }
                let g = metric(&target)?;
                if let Some((value, pred, step_cost)) = self.relax(&map, &node, u, &target, &g) {
                    let current = map.records.get(&target).map_or(T::infinity(), |r| r.distance);
                    if value < current {
                        map.records.insert(
                            target,
                            NodeRecord {
                                distance: value,
                                state: NodeState::Unknown,
                                predecessor: Some(pred),
                                step_cost,
                                label: None,
                                frozen_at: None,
                            },
                        );
                        heap.push(value, target);
                    }
                }
            }
        }
    }

    /// Best candidate for `target` involving the just-frozen `from`: the
    /// edge, or a face containing `from` whose optimum puts positive weight
    /// on `from` and does not undercut any vertex it uses.
    fn relax(
        &self,
        map: &DistanceMap<T>,
        from: &Node,
        u_from: T,
        target: &Node,
        g: &MetricTensor<T>,
    ) -> Option<(T, Predecessor<T>, T)> {
        let dim = self.lattice.dim();
        let off_from = self.lattice.offset(target, from);
        let step = g.norm(&off_from[..dim]);
        let mut best = (u_from + step, Predecessor::Single(*from), step);

        let Some(ri) = self.stencil.index_of(&target.delta_to(from)) else {
            return Some(best);
        };
        let mut known: u128 = 0;
        let mut u_at = [T::zero(); NEIGHBOR_SLOTS];
        for &a in &self.stencil.adjacent[ri] {
            let a = usize::from(a);
            if let Some(u) = map.distance(&target.offset(&self.stencil.neighbors[a][..dim])) {
                known |= 1u128 << a;
                u_at[a] = u;
            }
        }
        let mut us = [T::zero(); MAX_DIM];
        let mut offs = [[T::zero(); MAX_DIM]; MAX_DIM];
        for face in &self.stencil.faces[ri] {
            if face.mask & !known != 0 {
                continue;
            }
            let k = usize::from(face.len) + 1;
            us[0] = u_from;
            offs[0] = off_from;
            for (j, &a) in face.others[..k - 1].iter().enumerate() {
                us[j + 1] = u_at[usize::from(a)];
                offs[j + 1] = self.neighbor_offsets[usize::from(a)];
            }
            let (value, weights) = if k == 2 {
                let (value, t) = triangle_update(us[0], us[1], &offs[0][..dim], &offs[1][..dim], g);
                if !(t > T::zero() && t < T::one()) {
                    continue;
                }
                let mut w = [T::zero(); MAX_DIM];
                w[0] = t;
                w[1] = T::one() - t;
                (value, w)
            } else {
                let trimmed: [&[T]; MAX_DIM] = std::array::from_fn(|i| &offs[i][..dim]);
                match update::interior_simplex_fixed(&us[..k], &trimmed[..k], g) {
                    Some(s) => s,
                    None => continue,
                }
            };
            let used_max = us[..k]
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w > T::zero())
                .fold(T::neg_infinity(), |m, (&u, _)| m.max(u));
            if value < used_max || !(value < best.0) {
                continue;
            }
            let interpolated: T = us[..k].iter().zip(&weights).map(|(&u, &w)| u * w).sum();
            let mut vertices = Vec::with_capacity(k);
            vertices.push((*from, weights[0]));
            for (j, &a) in face.others[..k - 1].iter().enumerate() {
                vertices.push((target.offset(&self.stencil.neighbors[usize::from(a)][..dim]), weights[j + 1]));
            }
            best = (value, Predecessor::Weighted(vertices), value - interpolated);
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn never(_: &Node, _: f64) -> Result<StopSignal> {
        Ok(StopSignal::CONTINUE)
    }

    fn run_constant(g: MetricTensor<f64>, steps: &[f64], radius: &[i32]) -> MarchResult<f64> {
        let lattice = Lattice::new(steps).with_window(radius);
        FastMarching::new(lattice, usize::MAX)
            .run(|_| Ok(g.clone()), never)
            .unwrap()
    }

    #[test]
    fn stencil_has_the_8_neighbor_triangles_in_2d() {
        let s = Stencil::new(2);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.neighbors().len(), 8);
        let faces = s.faces_with(&[1, 0, 0, 0]);
        assert_eq!(faces, vec![vec![[1, -1, 0, 0]], vec![[1, 1, 0, 0]]]);
        let faces = s.faces_with(&[1, 1, 0, 0]);
        assert_eq!(faces, vec![vec![[0, 1, 0, 0]], vec![[1, 0, 0, 0]]]);
        assert_eq!(Stencil::top_simplices(2).len(), 8);
        assert_eq!(Stencil::top_simplices(4).len(), 384);
        assert!(Stencil::new(1).faces_with(&[1, 0, 0, 0]).is_empty());
    }

    #[test]
    fn stencil_faces_are_independent() {
        for dim in 1..=4 {
            for top in Stencil::top_simplices(dim) {
                let n = top.len();
                let mut gram = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        gram[i * n + j] = (0..dim).map(|a| (top[i][a] * top[j][a]) as f64).sum();
                    }
                }
                assert!(crate::linalg::determinant(&gram, n).abs() > 0.5);
            }
        }
    }

    #[test]
    fn halting_at_the_identity() {
        let lattice = Lattice::new(&[1.0, 1.0]);
        let res = FastMarching::new(lattice, 10)
            .run(|_| Ok(MetricTensor::identity(2)), |_, _| Ok(StopSignal::HALT))
            .unwrap();
        assert_eq!(
            res.outcome,
            Outcome::Hit {
                node: Node::origin(2),
                distance: 0.0
            }
        );
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn budget_is_exact() {
        let lattice = Lattice::new(&[1.0, 1.0]);
        let mut calls = 0;
        let res = FastMarching::new(lattice, 37)
            .run(
                |_| Ok(MetricTensor::identity(2)),
                |_, _| {
                    calls += 1;
                    Ok(StopSignal::CONTINUE)
                },
            )
            .unwrap();
        assert_eq!(res.outcome, Outcome::Exhausted);
        assert_eq!(res.iterations, 37);
        assert_eq!(calls, 37);
        assert_eq!(res.map.frozen().len(), 37);
    }

    #[test]
    fn euclidean_distance_at_3_4() {
        let res = run_constant(MetricTensor::identity(2), &[1.0, 1.0], &[6, 6]);
        let u = res.map.distance(&Node::from_slice(&[3, 4])).unwrap();
        assert!((5.0..=5.0 * 1.03).contains(&u), "U(3,4) = {u}");
        assert_eq!(res.outcome, Outcome::Completed);
        assert_eq!(res.iterations, 13 * 13);
    }

    #[test]
    fn anisotropic_axis_distances_are_exact() {
        let res = run_constant(MetricTensor::diagonal(&[4.0, 1.0]), &[0.5, 0.5], &[8, 8]);
        for k in 0..=8 {
            let u = res.map.distance(&Node::from_slice(&[k, 0])).unwrap();
            assert_eq!(u, 2.0 * k as f64 * 0.5);
            let u = res.map.distance(&Node::from_slice(&[0, -k])).unwrap();
            assert_eq!(u, k as f64 * 0.5);
        }
    }

    #[test]
    fn freezing_order_is_monotone_and_predecessors_are_earlier() {
        let g = MetricTensor::from_rows(&[vec![2.0, 0.9], vec![0.9, 1.0]]);
        let res = run_constant(g, &[1.0, 1.0], &[10, 10]);
        let map = &res.map;
        let mut last = 0.0;
        for node in map.frozen() {
            let r = map.get(node).unwrap();
            assert!(r.distance >= last);
            last = r.distance;
            let at = r.frozen_at.unwrap();
            match &r.predecessor {
                None => assert!(node.is_origin()),
                Some(Predecessor::Single(p)) => {
                    let pr = map.get(p).unwrap();
                    assert!(pr.frozen_at.unwrap() < at);
                    assert!(pr.distance < r.distance);
                }
                Some(Predecessor::Weighted(vs)) => {
                    let total: f64 = vs.iter().map(|(_, w)| w).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    for (p, w) in vs {
                        assert!(*w > 0.0);
                        let pr = map.get(p).unwrap();
                        assert!(pr.frozen_at.unwrap() < at);
                        assert!(pr.distance <= r.distance);
                    }
                }
            }
        }
    }

    #[test]
    fn metric_errors_propagate() {
        let lattice = Lattice::new(&[1.0]);
        let err = FastMarching::new(lattice, 100)
            .run(
                |n: &Node| {
                    if n.coords()[0].abs() > 2 {
                        Err(Error::DegenerateMetric(*n))
                    } else {
                        Ok(MetricTensor::identity(1))
                    }
                },
                never,
            )
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric(_)));
    }

    #[test]
    fn scale_floor_excludes_nonpositive_factors() {
        let group = TransformGroup::<f64>::new(crate::groups::GroupKind::DilationRotation);
        let lattice = Lattice::for_group(&group).with_window(&[12, 0]);
        let res = FastMarching::new(lattice, usize::MAX)
            .run(|_| Ok(MetricTensor::identity(2)), never)
            .unwrap();
        assert!(res.map.is_known(&Node::from_slice(&[-9, 0])));
        assert!(res.map.get(&Node::from_slice(&[-10, 0])).is_none());
        assert!(res.map.is_known(&Node::from_slice(&[12, 0])));
    }

    #[test]
    fn one_dimensional_run_is_exact() {
        let res = run_constant(MetricTensor::diagonal(&[9.0]), &[0.25], &[20]);
        for k in -20..=20 {
            let u = res.map.distance(&Node::from_slice(&[k])).unwrap();
            assert!((u - 0.75 * k.abs() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_runs() {
        let lattice = Lattice::<f32>::new(&[1.0, 1.0]).with_window(&[4, 4]);
        let res = FastMarching::new(lattice, usize::MAX)
            .run(|_| Ok(MetricTensor::identity(2)), |_, _| Ok(StopSignal::CONTINUE))
            .unwrap();
        let u = res.map.distance(&Node::from_slice(&[3, 4])).unwrap();
        assert!((5.0..5.2).contains(&u));
    }
}
