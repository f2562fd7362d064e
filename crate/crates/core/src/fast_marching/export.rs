//! CSV export of distance maps.
//!
//! Columns: `lattice_0..lattice_{p-1}, param_0..param_{p-1}, U, state, label`,
//! one row per materialized node, sorted by lattice coordinates.

use std::io::Write;

use super::{DistanceMap, NodeState};
use crate::error::Result;
use crate::scalar::Real;

pub fn write_distance_map_csv<T: Real, W: Write>(map: &DistanceMap<T>, mut out: W) -> Result<()> {
    let p = map.dim();
    let mut header: Vec<String> = (0..p).map(|i| format!("lattice_{i}")).collect();
    header.extend((0..p).map(|i| format!("param_{i}")));
    header.extend(["U".to_string(), "state".to_string(), "label".to_string()]);
    writeln!(out, "{}", header.join(","))?;
    for (node, rec) in map.sorted() {
        let mut fields: Vec<String> = node.coords().iter().map(|c| c.to_string()).collect();
        fields.extend(map.lattice().params(node).iter().map(|v| v.to_f64_lossy().to_string()));
        fields.push(rec.distance.to_f64_lossy().to_string());
        fields.push(
            match rec.state {
                NodeState::Known => "known",
                NodeState::Unknown => "unknown",
            }
            .to_string(),
        );
        fields.push(rec.label.map(|l| l.to_string()).unwrap_or_default());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
