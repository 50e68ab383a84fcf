use std::io::Write;

use super::{GrowthTrace, TreeStorage};
use crate::error::Result;

/// Checkpoint rows as CSV with header `n,depth,z,tau`; `tau` is empty when
/// the clock was off.
pub fn trace_checkpoints_csv<W: Write>(trace: &GrowthTrace, mut out: W) -> Result<()> {
    writeln!(out, "n,depth,z,tau")?;
    for c in &trace.checkpoints {
        match c.tau {
            Some(t) => writeln!(out, "{},{},{},{}", c.n, c.depth, c.z, t)?,
            None => writeln!(out, "{},{},{},", c.n, c.depth, c.z)?,
        }
    }
    Ok(())
}

/// Edge list with header `child,parent,depth`, one row per non-root vertex,
/// using 1-based insertion labels (the root is vertex 1).
pub fn tree_edges_csv<W: Write>(tree: &TreeStorage, mut out: W) -> Result<()> {
    writeln!(out, "child,parent,depth")?;
    for v in 1..tree.len() {
        let p = tree.parent(v).expect("non-root vertex has a parent");
        writeln!(out, "{},{},{}", v + 1, p + 1, tree.depth(v))?;
    }
    Ok(())
}
