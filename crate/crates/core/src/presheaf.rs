//! The spectral presheaf at desk scale.
//!
//! The Gel'fand spectrum of a finite-dimensional context has one point per
//! minimal projection, so spectra are handled combinatorially: a point is an
//! index into the context's minimal list and a (necessarily clopen) subset is
//! a bitmask. Evaluation of operators is computed on demand with the trace
//! formula `λ(A) = tr(p A) / rank p`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::{Context, ContextId};
use crate::error::{Error, Result};
use crate::linalg::{trace_product, HermitianMatrix, Projection, Tolerances};

/// A subset of a finite spectrum, as a bitmask over minimal indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpectralSet(u64);

impl SpectralSet {
    pub const fn empty() -> Self {
        SpectralSet(0)
    }

    pub fn full(len: usize) -> Self {
        if len >= 64 {
            SpectralSet(u64::MAX)
        } else {
            SpectralSet((1u64 << len) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        SpectralSet(1 << i)
    }

    pub fn from_bits(bits: u64) -> Self {
        SpectralSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: Self) -> Self {
        SpectralSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SpectralSet(self.0 & other.0)
    }

    /// Complement within a spectrum of `len` points.
    pub fn complement(self, len: usize) -> Self {
        SpectralSet(!self.0 & Self::full(len).0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// Image under an index map (a restriction map of the presheaf).
    pub fn image(self, map: &[usize]) -> Self {
        self.iter().fold(SpectralSet::empty(), |mut acc, i| {
            acc.insert(map[i]);
            acc
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(SpectralSet::empty(), |mut acc, i| {
            acc.insert(i);
            acc
        })
    }
}

impl FromIterator<usize> for SpectralSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_indices(iter)
    }
}

impl fmt::Display for SpectralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vec())
    }
}

/// A point of a context's Gel'fand spectrum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpectralElement {
    pub context_id: ContextId,
    pub minimal_index: usize,
}

impl SpectralElement {
    pub fn new(ctx: &Context, minimal_index: usize) -> Result<Self> {
        ctx.minimal(minimal_index)?;
        Ok(Self {
            context_id: ctx.id().clone(),
            minimal_index,
        })
    }

    /// The spectrum `Σ_V`, in canonical order.
    pub fn spectrum(ctx: &Context) -> Vec<SpectralElement> {
        (0..ctx.len())
            .map(|minimal_index| SpectralElement {
                context_id: ctx.id().clone(),
                minimal_index,
            })
            .collect()
    }
}

/// A clopen subset of one context's spectrum. Serializes as
/// `{context_id, members}` with sorted member indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClopenSubset {
    pub context_id: ContextId,
    pub members: SpectralSet,
}

#[derive(Serialize, Deserialize)]
struct ClopenSubsetJson {
    context_id: ContextId,
    members: Vec<usize>,
}

impl Serialize for ClopenSubset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ClopenSubsetJson {
            context_id: self.context_id.clone(),
            members: self.members.to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClopenSubset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ClopenSubsetJson::deserialize(deserializer)?;
        if let Some(&bad) = raw.members.iter().find(|&&i| i >= 64) {
            return Err(serde::de::Error::custom(format!("member index {bad} out of range")));
        }
        Ok(ClopenSubset {
            context_id: raw.context_id,
            members: raw.members.into_iter().collect(),
        })
    }
}

impl ClopenSubset {
    pub fn new(ctx: &Context, members: SpectralSet) -> Result<Self> {
        if let Some(bad) = members.iter().find(|&i| i >= ctx.len()) {
            return Err(Error::SpectralIndexOutOfRange {
                index: bad,
                len: ctx.len(),
            });
        }
        Ok(Self {
            context_id: ctx.id().clone(),
            members,
        })
    }
}

fn check_context(lambda: &SpectralElement, ctx: &Context) -> Result<()> {
    if &lambda.context_id != ctx.id() {
        return Err(Error::ContextMismatch {
            expected: ctx.id().0.clone(),
            found: lambda.context_id.0.clone(),
        });
    }
    ctx.minimal(lambda.minimal_index).map(|_| ())
}

/// Gel'fand transform `λ(A)` for `A` in the context.
pub fn evaluate(
    lambda: &SpectralElement,
    a: &HermitianMatrix,
    ctx: &Context,
    tols: &Tolerances,
) -> Result<f64> {
    check_context(lambda, ctx)?;
    if a.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: a.dim(),
        });
    }
    let defect = ctx.membership_defect(a.matrix());
    if defect > tols.tol_idem * ctx.dim() as f64 {
        return Err(Error::NotInContext {
            context: ctx.id().0.clone(),
            defect,
        });
    }
    let p = &ctx.minimals()[lambda.minimal_index];
    Ok(trace_product(p.matrix(), a.matrix()) / p.rank() as f64)
}

/// `α(P) = {λ | λ(P) = 1}` for `P` in the context.
pub fn alpha(p: &Projection, ctx: &Context, tols: &Tolerances) -> Result<ClopenSubset> {
    if p.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: p.dim(),
        });
    }
    match ctx.members_of(p, tols) {
        Some(members) => Ok(ClopenSubset {
            context_id: ctx.id().clone(),
            members,
        }),
        None => Err(Error::NotInContext {
            context: ctx.id().0.clone(),
            defect: ctx.membership_defect(p.matrix()),
        }),
    }
}

/// The projection of the context corresponding to a clopen subset.
pub fn alpha_inverse(s: &ClopenSubset, ctx: &Context) -> Result<Projection> {
    if &s.context_id != ctx.id() {
        return Err(Error::ContextMismatch {
            expected: ctx.id().0.clone(),
            found: s.context_id.0.clone(),
        });
    }
    if let Some(bad) = s.members.iter().find(|&i| i >= ctx.len()) {
        return Err(Error::SpectralIndexOutOfRange {
            index: bad,
            len: ctx.len(),
        });
    }
    Ok(ctx.projection_of(s.members))
}

/// Restriction `λ ↦ λ|_{V'}` along the inclusion `to_ctx ⊆ from_ctx`.
pub fn restrict(
    lambda: &SpectralElement,
    from_ctx: &Context,
    to_ctx: &Context,
    tols: &Tolerances,
) -> Result<SpectralElement> {
    check_context(lambda, from_ctx)?;
    if from_ctx.id() == to_ctx.id() {
        return Ok(lambda.clone());
    }
    if !to_ctx.is_subcontext_of(from_ctx, tols) {
        // Distinguish a genuine non-inclusion from a tolerance failure for
        // this particular point.
        let p = &from_ctx.minimals()[lambda.minimal_index];
        let candidates = to_ctx
            .minimals()
            .iter()
            .filter(|q| p.leq_unchecked(q, tols))
            .count();
        if candidates > 1 {
            return Err(Error::NoUniqueTarget {
                from: from_ctx.id().0.clone(),
                to: to_ctx.id().0.clone(),
                candidates,
            });
        }
        return Err(Error::NotSubcontext {
            from: from_ctx.id().0.clone(),
            to: to_ctx.id().0.clone(),
        });
    }
    let p = &from_ctx.minimals()[lambda.minimal_index];
    let targets: Vec<usize> = to_ctx
        .minimals()
        .iter()
        .enumerate()
        .filter(|(_, q)| p.leq_unchecked(q, tols))
        .map(|(j, _)| j)
        .collect();
    match targets.as_slice() {
        [j] => Ok(SpectralElement {
            context_id: to_ctx.id().clone(),
            minimal_index: *j,
        }),
        _ => Err(Error::NoUniqueTarget {
            from: from_ctx.id().0.clone(),
            to: to_ctx.id().0.clone(),
            candidates: targets.len(),
        }),
    }
}
