//! Standard context families: bases, their coarsenings, frame contexts and
//! bundled Kochen–Specker sets.

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::linalg::{MatrixJson, Projection, Tolerances};
use crate::presheaf::SpectralSet;
use crate::reconstruct::default_frame;

/// Maximal context of the standard basis.
pub fn standard_basis_context(dim: usize) -> Result<Context> {
    Context::from_minimals((0..dim).map(|k| Projection::basis(dim, k)).collect(), &Tolerances::default())
}

/// Set partitions of `0..n` as block-label vectors (restricted growth strings).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, labels: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(labels.clone());
            return;
        }
        for b in 0..=max {
            labels.push(b);
            go(i + 1, n, labels, if b == max { max + 1 } else { max }, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        go(0, n, &mut Vec::with_capacity(n), 0, &mut out);
    }
    out
}

/// Every context obtained from `ctx` by merging minimals, excluding the
/// trivial one and `ctx` itself.
pub fn coarsenings(ctx: &Context, tols: &Tolerances) -> Result<Vec<Context>> {
    let n = ctx.len();
    let mut out = Vec::new();
    for labels in set_partitions(n) {
        let blocks = labels.iter().max().map_or(0, |m| m + 1);
        if blocks < 2 || blocks == n {
            continue;
        }
        let parts = (0..blocks)
            .map(|b| ctx.projection_of((0..n).filter(|&i| labels[i] == b).collect::<SpectralSet>()))
            .collect();
        out.push(Context::from_minimals(parts, tols)?);
    }
    Ok(out)
}

/// The two-element contexts `{P, 1 − P}` of the default reconstruction frame.
pub fn frame_contexts(dim: usize, tols: &Tolerances) -> Result<Vec<Context>> {
    default_frame(dim)
        .iter()
        .map(|p| Context::from_projection(p, tols))
        .collect()
}

/// On-disk form of a context family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextAsset {
    pub dim: usize,
    pub contexts: Vec<Vec<MatrixJson>>,
    #[serde(default)]
    pub notes: String,
}

impl ContextAsset {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("context asset: {e}")))
    }

    pub fn contexts(&self, tols: &Tolerances) -> Result<Vec<Context>> {
        self.contexts
            .iter()
            .map(|minimals| {
                let ps = minimals
                    .iter()
                    .map(|m| Projection::from_json(m, tols))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(p) = ps.iter().find(|p| p.dim() != self.dim) {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: p.dim(),
                    });
                }
                Context::from_minimals(ps, tols)
            })
            .collect()
    }
}

const CABELLO_18: &str = include_str!("../assets/ks_cabello18.json");

/// Bundled assets by name.
pub fn bundled_asset(name: &str) -> Option<&'static str> {
    match name {
        "ks_cabello18" => Some(CABELLO_18),
        _ => None,
    }
}

/// The 18-ray, 9-basis Kochen–Specker set in dimension 4.
pub fn cabello_18() -> ContextAsset {
    ContextAsset::parse(CABELLO_18).expect("bundled asset parses")
}
