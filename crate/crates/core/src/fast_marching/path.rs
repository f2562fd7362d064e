//! Path extraction from recorded predecessors.
//!
//! A node reached through a simplex face points at a barycentric mix of
//! frozen vertices rather than a single node, so the walk carries a
//! weighted set of lattice nodes. Each step replaces every node of the set
//! by its predecessor vertices (with their weights) and emits the weighted
//! mean position. The emitted path length is the weighted sum of the
//! recorded local segment costs, which telescopes to the node's distance.

use std::collections::BTreeMap;

use super::{DistanceMap, NodeState, Node, Predecessor};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath<T> {
    /// Parameter points from the start node back to the identity.
    pub points: Vec<Vec<T>>,
    /// Interpolated distance at each point; strictly decreasing for
    /// positive-definite metrics.
    pub distances: Vec<T>,
    /// Metric cost of each segment (`points.len() − 1` entries).
    pub segment_costs: Vec<T>,
}

impl<T: Real> GeodesicPath<T> {
    pub fn length(&self) -> T {
        self.segment_costs.iter().copied().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl<T: Real> DistanceMap<T> {
    /// Walks predecessors from a Known node back to the identity.
    pub fn backtrace(&self, node: &Node) -> Result<GeodesicPath<T>> {
        let start = self
            .get(node)
            .filter(|r| r.state == NodeState::Known)
            .ok_or_else(|| Error::CorruptMap(format!("node {node:?} is not Known")))?;
        let mut mix: BTreeMap<Node, T> = BTreeMap::new();
        mix.insert(*node, T::one());

        let mut path = GeodesicPath {
            points: vec![self.lattice.params(node)],
            distances: vec![start.distance],
            segment_costs: Vec::new(),
        };
        let max_steps = self.frozen.len() + 1;
        for _ in 0..max_steps {
            if mix.keys().all(Node::is_origin) {
                return Ok(path);
            }
            let mut next: BTreeMap<Node, T> = BTreeMap::new();
            let mut cost = T::zero();
            for (n, &w) in &mix {
                if n.is_origin() {
                    *next.entry(*n).or_insert(T::zero()) += w;
                    continue;
                }
                let rec = self
                    .get(n)
                    .ok_or_else(|| Error::CorruptMap(format!("missing record for {n:?}")))?;
                let at = rec
                    .frozen_at
                    .ok_or_else(|| Error::CorruptMap(format!("{n:?} on the path is not Known")))?;
                let pred = rec
                    .predecessor
                    .as_ref()
                    .ok_or_else(|| Error::CorruptMap(format!("{n:?} has no predecessor")))?;
                let mut push = |p: &Node, weight: T| -> Result<()> {
                    let earlier = self.get(p).and_then(|r| r.frozen_at).is_some_and(|i| i < at);
                    if !earlier {
                        return Err(Error::CorruptMap(format!("predecessor {p:?} of {n:?} was not frozen before it")));
                    }
                    *next.entry(*p).or_insert(T::zero()) += weight;
                    Ok(())
                };
                match pred {
                    Predecessor::Single(p) => push(p, w)?,
                    Predecessor::Weighted(vs) => {
                        for (p, l) in vs {
                            push(p, w * *l)?;
                        }
                    }
                }
                cost += w * rec.step_cost;
            }
            let dim = self.dim();
            let mut point = vec![T::zero(); dim];
            let mut distance = T::zero();
            for (n, &w) in &next {
                for (slot, v) in point.iter_mut().zip(self.lattice.params(n)) {
                    *slot += w * v;
                }
                distance += w * self.get(n).map_or(T::zero(), |r| r.distance);
            }
            path.points.push(point);
            path.distances.push(distance);
            path.segment_costs.push(cost);
            mix = next;
        }
        Err(Error::CorruptMap(format!("predecessor chain from {node:?} does not reach the identity")))
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::error::Error;

    fn run(g: MetricTensor<f64>, radius: i32) -> MarchResult<f64> {
        FastMarching::new(Lattice::new(&[1.0, 1.0]).with_window(&[radius, radius]), usize::MAX)
            .run(|_| Ok(g.clone()), |_, _| Ok(StopSignal::CONTINUE))
            .unwrap()
    }

    #[test]
    fn identity_path_is_a_single_point() {
        let res = run(MetricTensor::identity(2), 2);
        let path = res.map.backtrace(&Node::origin(2)).unwrap();
        assert_eq!(path.points, vec![vec![0.0, 0.0]]);
        assert_eq!(path.length(), 0.0);
    }

    #[test]
    fn axis_path_follows_the_axis() {
        let res = run(MetricTensor::identity(2), 8);
        let path = res.map.backtrace(&Node::from_slice(&[7, 0])).unwrap();
        assert_eq!(path.len(), 8);
        for p in &path.points {
            assert_eq!(p[1], 0.0);
        }
        assert_eq!(path.points.last().unwrap(), &vec![0.0, 0.0]);
    }

    #[test]
    fn path_stays_near_the_straight_segment() {
        let res = run(MetricTensor::identity(2), 10);
        let target = [9.0, 4.0];
        let path = res.map.backtrace(&Node::from_slice(&[9, 4])).unwrap();
        let norm = target[0] * target[0] + target[1] * target[1];
        for p in &path.points {
            // Distance from p to the line through the origin and the target.
            let cross = (p[0] * target[1] - p[1] * target[0]).abs() / norm.sqrt();
            assert!(cross <= 1.0, "point {p:?} is {cross} away");
        }
    }

    #[test]
    fn path_length_reproduces_the_distance() {
        let g = MetricTensor::from_rows(&[vec![1.8, -0.6], vec![-0.6, 0.9]]);
        let res = run(g, 9);
        for node in res.map.frozen().iter().step_by(7) {
            let u = res.map.distance(node).unwrap();
            let path = res.map.backtrace(node).unwrap();
            assert!((path.length() - u).abs() <= 1e-6 * u.max(1e-300), "{node:?}");
            assert_eq!(path.points.last().unwrap(), &vec![0.0, 0.0]);
            for w in path.distances.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn unknown_nodes_cannot_be_traced() {
        let res = FastMarching::new(Lattice::new(&[1.0, 1.0]), 3)
            .run(|_| Ok(MetricTensor::identity(2)), |_, _| Ok(StopSignal::CONTINUE))
            .unwrap();
        let unknown = Node::from_slice(&[1, 1]);
        assert!(matches!(res.map.backtrace(&unknown), Err(Error::CorruptMap(_))));
    }

    #[test]
    fn broken_chains_are_reported() {
        let mut res = run(MetricTensor::identity(2), 3);
        let node = Node::from_slice(&[3, 0]);
        let later = *res.map.frozen().last().unwrap();
        res.map.records.get_mut(&node).unwrap().predecessor = Some(Predecessor::Single(later));
        assert!(matches!(res.map.backtrace(&node), Err(Error::CorruptMap(_))));
    }
}
