//! Contexts (commutative unital subalgebras) and the finite context poset.
//!
//! In finite dimension a commutative subalgebra is determined by its minimal
//! projections, so a [`Context`] is stored as that list in canonical order.
//! Inclusion of subalgebras becomes coarsening: `V' ≤ V` iff every minimal
//! projection of `V` sits under a (necessarily unique) minimal projection of
//! `V'`. The index map realising this is kept on the poset; it is the
//! restriction map of the spectral presheaf.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, trace_product, HermitianMatrix, MatrixJson, Projection, Tolerances, CMatrix};
use crate::presheaf::SpectralSet;
use crate::linalg::spectral_decompose;

/// Content hash of a context's canonically ordered minimal projections.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextId(pub String);

impl fmt::Display for ContextId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Size limits for poset construction and search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub max_contexts: usize,
    pub max_dim: usize,
    pub search_nodes: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_contexts: 512,
            max_dim: 16,
            search_nodes: 1_000_000,
        }
    }
}

/// Largest dimension representable with [`SpectralSet`] bitmasks.
pub const HARD_MAX_DIM: usize = 64;

/// A commutative unital subalgebra, given by its minimal projections.
#[derive(Debug, Clone)]
pub struct Context {
    id: ContextId,
    minimals: Vec<Projection>,
    dim: usize,
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Context {
    /// Builds a context from a complete family of pairwise orthogonal projections.
    pub fn from_minimals(mut minimals: Vec<Projection>, tols: &Tolerances) -> Result<Self> {
        let dim = minimals.first().map(Projection::dim).ok_or(Error::TrivialContext)?;
        if dim > HARD_MAX_DIM {
            return Err(Error::UnsupportedDimension {
                dim,
                max: HARD_MAX_DIM,
            });
        }
        for p in &minimals {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if p.is_zero() {
                return Err(Error::Scenario("context contains a zero minimal projection".into()));
            }
        }
        for i in 0..minimals.len() {
            for j in i + 1..minimals.len() {
                if !minimals[i].orthogonal_to(&minimals[j], tols) {
                    return Err(Error::Scenario(format!(
                        "minimal projections {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        let total = minimals.iter().fold(CMatrix::zeros(dim, dim), |acc, p| acc + p.matrix());
        let defect = frobenius(&(total - CMatrix::identity(dim, dim)));
        if defect > tols.tol_idem * dim as f64 {
            return Err(Error::Scenario(format!(
                "minimal projections do not sum to the identity (defect {defect:.3e})"
            )));
        }
        if minimals.len() < 2 {
            return Err(Error::TrivialContext);
        }
        minimals.sort_by(Projection::canonical_cmp);
        let id = content_id(&minimals);
        Ok(Self { id, minimals, dim })
    }

    /// The double commutant of a commuting family: the common refinement of
    /// all generators' eigenprojections.
    pub fn from_generators(ops: &[HermitianMatrix], tols: &Tolerances) -> Result<Self> {
        let dim = ops.first().map(HermitianMatrix::dim).ok_or(Error::TrivialContext)?;
        for op in ops {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
        }
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                let norm = ops[i].commutator_norm(&ops[j]);
                if norm > tols.tol_idem * dim as f64 {
                    return Err(Error::NonCommuting {
                        first: i,
                        second: j,
                        norm,
                    });
                }
            }
        }
        let mut blocks = vec![Projection::identity(dim)];
        for op in ops {
            let spaces = spectral_decompose(op, tols)?;
            if spaces.len() == 1 {
                continue;
            }
            let mut refined = Vec::with_capacity(blocks.len() * spaces.len());
            for block in &blocks {
                for space in &spaces {
                    let product = block.commuting_product(&space.projection);
                    if !product.is_zero() {
                        refined.push(product);
                    }
                }
            }
            blocks = refined;
        }
        Self::from_minimals(blocks, tols)
    }

    /// The context `{P, 1 − P}''` of a non-trivial projection.
    pub fn from_projection(p: &Projection, tols: &Tolerances) -> Result<Self> {
        if p.is_zero() || p.is_identity() {
            return Err(Error::TrivialContext);
        }
        Self::from_minimals(vec![p.clone(), p.complement()], tols)
    }

    pub fn id(&self) -> &ContextId {
        &self.id
    }

    pub fn minimals(&self) -> &[Projection] {
        &self.minimals
    }

    pub fn minimal(&self, index: usize) -> Result<&Projection> {
        self.minimals.get(index).ok_or(Error::SpectralIndexOutOfRange {
            index,
            len: self.minimals.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.minimals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minimals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn full_set(&self) -> SpectralSet {
        SpectralSet::full(self.len())
    }

    /// Sum of the minimal projections selected by `members`.
    pub fn projection_of(&self, members: SpectralSet) -> Projection {
        Projection::orthogonal_sum(self.dim, members.iter().map(|i| &self.minimals[i]))
    }

    /// The minimals under `p`, provided `p` is exactly their sum (i.e. `p ∈ V`).
    pub fn members_of(&self, p: &Projection, tols: &Tolerances) -> Option<SpectralSet> {
        if p.dim() != self.dim {
            return None;
        }
        let mut members = SpectralSet::empty();
        let mut rank = 0;
        for (i, m) in self.minimals.iter().enumerate() {
            if m.leq_unchecked(p, tols) {
                members.insert(i);
                rank += m.rank();
            } else if !m.orthogonal_to(p, tols) {
                return None;
            }
        }
        (rank == p.rank()).then_some(members)
    }

    pub fn contains_projection(&self, p: &Projection, tols: &Tolerances) -> bool {
        self.members_of(p, tols).is_some()
    }

    /// `‖A − Σ_i (tr(p_i A)/rank p_i) p_i‖`, zero iff `A` lies in the context.
    pub fn membership_defect(&self, a: &CMatrix) -> f64 {
        let mut rebuilt = CMatrix::zeros(self.dim, self.dim);
        for p in &self.minimals {
            let coefficient = trace_product(p.matrix(), a) / p.rank() as f64;
            rebuilt += p.matrix().scale(coefficient);
        }
        frobenius(&(a - rebuilt))
    }

    pub fn contains_operator(&self, a: &HermitianMatrix, tols: &Tolerances) -> bool {
        a.dim() == self.dim && self.membership_defect(a.matrix()) <= tols.tol_idem * self.dim as f64
    }

    /// For `coarser ≤ self`: the index of the coarser minimal above each
    /// minimal of `self`. `None` if some minimal has zero or several targets.
    pub fn refinement_map(&self, coarser: &Context, tols: &Tolerances) -> Option<Vec<usize>> {
        if coarser.dim != self.dim || coarser.len() > self.len() {
            return None;
        }
        let mut map = Vec::with_capacity(self.len());
        for p in &self.minimals {
            let mut target = None;
            for (j, q) in coarser.minimals.iter().enumerate() {
                if p.leq_unchecked(q, tols) {
                    if target.is_some() {
                        return None;
                    }
                    target = Some(j);
                }
            }
            map.push(target?);
        }
        Some(map)
    }

    /// Subalgebra inclusion `self ⊆ larger`.
    pub fn is_subcontext_of(&self, larger: &Context, tols: &Tolerances) -> bool {
        larger.refinement_map(self, tols).is_some()
    }

    pub fn same_algebra(&self, other: &Context, tols: &Tolerances) -> bool {
        self.id == other.id
            || (self.len() == other.len()
                && self.is_subcontext_of(other, tols)
                && other.is_subcontext_of(self, tols))
    }

    /// The subalgebra `self ∩ other`, or `None` when only `0` and `1` are shared.
    ///
    /// A shared projection is a union of connected components of the overlap
    /// graph between the two minimal families, so the components give the
    /// minimal projections of the intersection.
    pub fn intersection(&self, other: &Context, tols: &Tolerances) -> Result<Option<Context>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.id == other.id {
            return Ok(Some(self.clone()));
        }
        let n = self.len();
        let mut parent: Vec<usize> = (0..n + other.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, p) in self.minimals.iter().enumerate() {
            for (j, q) in other.minimals.iter().enumerate() {
                if !p.orthogonal_to(q, tols) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                    parent[a] = b;
                }
            }
        }
        let mut components: BTreeMap<usize, SpectralSet> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            components.entry(root).or_default().insert(i);
        }
        if components.len() < 2 {
            return Ok(None);
        }
        let blocks = components.into_values().map(|s| self.projection_of(s)).collect();
        Context::from_minimals(blocks, tols).map(Some)
    }

    pub fn minimals_json(&self) -> Vec<MatrixJson> {
        self.minimals.iter().map(Projection::to_json).collect()
    }
}

fn content_id(minimals: &[Projection]) -> ContextId {
    let mut hasher = Sha256::new();
    hasher.update((minimals[0].dim() as u64).to_le_bytes());
    for p in minimals {
        let (rank, entries) = p.canonical_key();
        hasher.update((rank as u64).to_le_bytes());
        for (re, im) in entries {
            hasher.update(re.to_le_bytes());
            hasher.update(im.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    ContextId(hex::encode(&digest[..8]))
}

/// A finite poset of contexts ordered by inclusion.
#[derive(Debug, Clone)]
pub struct ContextPoset {
    id: String,
    dim: usize,
    contexts: Vec<Context>,
    index: HashMap<ContextId, usize>,
    /// `leq[a][b]` iff `contexts[a] ⊆ contexts[b]`.
    leq: Vec<Vec<bool>>,
    /// For `a ≤ b`, keyed `(b, a)`: minimal index in `b` ↦ minimal index in `a`.
    restrictions: HashMap<(usize, usize), Vec<usize>>,
    /// `below[b]`: all `a` with `a ≤ b`, including `b`.
    below: Vec<Vec<usize>>,
}

impl ContextPoset {
    /// One context per generator set, deduplicated, optionally closed under
    /// non-trivial pairwise intersections.
    pub fn build(
        generator_sets: &[Vec<HermitianMatrix>],
        close_under_intersection: bool,
        tols: &Tolerances,
        caps: &Caps,
    ) -> Result<Self> {
        let contexts = generator_sets
            .iter()
            .map(|ops| Context::from_generators(ops, tols))
            .collect::<Result<Vec<_>>>()?;
        Self::from_contexts(contexts, close_under_intersection, tols, caps)
    }

    pub fn from_contexts(
        contexts: Vec<Context>,
        close_under_intersection: bool,
        tols: &Tolerances,
        caps: &Caps,
    ) -> Result<Self> {
        tols.validate()?;
        let dim = contexts.first().map(Context::dim).ok_or_else(|| {
            Error::Scenario("a context poset needs at least one context".into())
        })?;
        if dim > caps.max_dim.min(HARD_MAX_DIM) {
            return Err(Error::UnsupportedDimension {
                dim,
                max: caps.max_dim.min(HARD_MAX_DIM),
            });
        }
        let mut pool: Vec<Context> = Vec::new();
        for c in contexts {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            push_unique(&mut pool, c, tols, caps)?;
        }
        if close_under_intersection {
            let mut j = 1;
            while j < pool.len() {
                for i in 0..j {
                    if let Some(c) = pool[i].intersection(&pool[j], tols)? {
                        push_unique(&mut pool, c, tols, caps)?;
                    }
                }
                j += 1;
            }
        }
        pool.sort_by(|a, b| a.id.cmp(&b.id));
        Self::assemble(dim, pool, tols)
    }

    fn assemble(dim: usize, contexts: Vec<Context>, tols: &Tolerances) -> Result<Self> {
        let n = contexts.len();
        let index = contexts
            .iter()
            .enumerate()
            .map(|(k, c)| (c.id.clone(), k))
            .collect::<HashMap<_, _>>();
        if index.len() != n {
            return Err(Error::InconsistentOrder("duplicate context ids".into()));
        }
        let mut leq = vec![vec![false; n]; n];
        let mut restrictions = HashMap::new();
        for b in 0..n {
            for a in 0..n {
                if a == b {
                    leq[a][b] = true;
                    restrictions.insert((b, a), (0..contexts[b].len()).collect());
                } else if let Some(map) = contexts[b].refinement_map(&contexts[a], tols) {
                    leq[a][b] = true;
                    restrictions.insert((b, a), map);
                }
            }
        }
        let below = (0..n)
            .map(|b| (0..n).filter(|&a| leq[a][b]).collect())
            .collect();
        let mut hasher = Sha256::new();
        hasher.update((dim as u64).to_le_bytes());
        for c in &contexts {
            hasher.update(c.id.0.as_bytes());
        }
        let id = hex::encode(&hasher.finalize()[..8]);
        let poset = Self {
            id,
            dim,
            contexts,
            index,
            leq,
            restrictions,
            below,
        };
        poset.verify_order()?;
        Ok(poset)
    }

    /// Exhaustive check that `leq` is a partial order.
    pub fn verify_order(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n {
            if !self.leq[a][a] {
                return Err(Error::InconsistentOrder(format!("{} not reflexive", self.contexts[a].id)));
            }
            for b in 0..n {
                if a != b && self.leq[a][b] && self.leq[b][a] {
                    return Err(Error::InconsistentOrder(format!(
                        "{} and {} include each other",
                        self.contexts[a].id, self.contexts[b].id
                    )));
                }
                if !self.leq[a][b] {
                    continue;
                }
                for c in 0..n {
                    if self.leq[b][c] && !self.leq[a][c] {
                        return Err(Error::InconsistentOrder(format!(
                            "{} <= {} <= {} but not {} <= {}",
                            self.contexts[a].id,
                            self.contexts[b].id,
                            self.contexts[c].id,
                            self.contexts[a].id,
                            self.contexts[c].id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn context(&self, k: usize) -> &Context {
        &self.contexts[k]
    }

    pub fn index_of(&self, id: &ContextId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownContext(id.0.clone()))
    }

    pub fn context_by_id(&self, id: &ContextId) -> Result<&Context> {
        Ok(&self.contexts[self.index_of(id)?])
    }

    /// `contexts[a] ≤ contexts[b]`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    /// All `a ≤ b`, including `b` itself.
    pub fn below(&self, b: usize) -> &[usize] {
        &self.below[b]
    }

    /// Restriction map for the arrow `lower ≤ upper`.
    pub fn restriction(&self, upper: usize, lower: usize) -> Option<&[usize]> {
        self.restrictions.get(&(upper, lower)).map(Vec::as_slice)
    }

    /// Non-reflexive arrows `(lower, upper)`.
    pub fn arrows(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.leq[a][b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Covering relations of the order.
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        self.arrows()
            .into_iter()
            .filter(|&(a, b)| {
                !(0..self.len()).any(|c| c != a && c != b && self.leq[a][c] && self.leq[c][b])
            })
            .collect()
    }

    /// Indices of contexts containing `p`, with `p`'s spectral set in each.
    pub fn containing(&self, p: &Projection, tols: &Tolerances) -> Vec<(usize, SpectralSet)> {
        self.contexts
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.members_of(p, tols).map(|s| (k, s)))
            .collect()
    }

    /// Index of a context equal (as an algebra) to `c`, if present.
    pub fn find(&self, c: &Context, tols: &Tolerances) -> Option<usize> {
        if let Some(&k) = self.index.get(&c.id) {
            return Some(k);
        }
        self.contexts.iter().position(|d| d.same_algebra(c, tols))
    }

    pub fn to_json(&self) -> PosetJson {
        PosetJson {
            id: self.id.clone(),
            dim: self.dim,
            contexts: self
                .contexts
                .iter()
                .map(|c| (c.id.clone(), c.minimals_json()))
                .collect(),
            leq: self
                .arrows()
                .into_iter()
                .chain((0..self.len()).map(|k| (k, k)))
                .map(|(a, b)| (self.contexts[a].id.clone(), self.contexts[b].id.clone()))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }

    /// Rebuilds a poset from its JSON form, recomputing and cross-checking the order.
    pub fn from_json(json: &PosetJson, tols: &Tolerances, caps: &Caps) -> Result<Self> {
        let contexts = json
            .contexts
            .values()
            .map(|ms| {
                let minimals = ms
                    .iter()
                    .map(|m| Projection::from_json(m, tols))
                    .collect::<Result<Vec<_>>>()?;
                Context::from_minimals(minimals, tols)
            })
            .collect::<Result<Vec<_>>>()?;
        let poset = Self::from_contexts(contexts, false, tols, caps)?;
        let stored: std::collections::BTreeSet<_> = json.leq.iter().cloned().collect();
        let rebuilt: std::collections::BTreeSet<_> = poset.to_json().leq.into_iter().collect();
        if stored != rebuilt {
            return Err(Error::InconsistentOrder("stored order differs from recomputed order".into()));
        }
        Ok(poset)
    }
}

fn push_unique(pool: &mut Vec<Context>, c: Context, tols: &Tolerances, caps: &Caps) -> Result<bool> {
    if pool.iter().any(|d| d.same_algebra(&c, tols)) {
        return Ok(false);
    }
    if pool.len() >= caps.max_contexts {
        return Err(Error::PosetTooLarge(caps.max_contexts));
    }
    pool.push(c);
    Ok(true)
}

/// Serialized poset: minimal projections per context id plus the order relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosetJson {
    pub id: String,
    pub dim: usize,
    pub contexts: BTreeMap<ContextId, Vec<MatrixJson>>,
    pub leq: Vec<(ContextId, ContextId)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CVector, C64};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn diag3() -> Context {
        Context::from_generators(&[HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])], &tols()).unwrap()
    }

    fn block3() -> Context {
        Context::from_generators(&[HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 2.0])], &tols()).unwrap()
    }

    #[test]
    fn single_projection_generates_two_point_context() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = Projection::rank_one(&CVector::from_vec(vec![C64::new(s, 0.0), C64::new(0.0, s)])).unwrap();
        let c = Context::from_generators(&[p.as_hermitian()], &tols()).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.contains_projection(&p, &tols()));
        assert!(c.contains_projection(&p.complement(), &tols()));
    }

    #[test]
    fn identity_generates_trivial_context() {
        assert_eq!(
            Context::from_generators(&[HermitianMatrix::identity(3)], &tols()),
            Err(Error::TrivialContext)
        );
    }

    #[test]
    fn common_refinement_of_two_degenerate_generators() {
        let c = Context::from_generators(
            &[
                HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 2.0]),
                HermitianMatrix::from_real_diagonal(&[3.0, 4.0, 4.0]),
            ],
            &tols(),
        )
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.id(), diag3().id());
    }

    #[test]
    fn non_commuting_generators_are_rejected() {
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = C64::new(1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
        let x = HermitianMatrix::new(x, &tols()).unwrap();
        let z = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(matches!(
            Context::from_generators(&[z, x], &tols()),
            Err(Error::NonCommuting { first: 0, second: 1, .. })
        ));
    }

    #[test]
    fn canonical_order_is_rank_then_entries() {
        let c = block3();
        assert_eq!(c.minimals()[0].rank(), 1);
        assert_eq!(c.minimals()[1].rank(), 2);
        let d = diag3();
        for k in 0..3 {
            assert!(d.minimals()[k].approx_eq(&Projection::basis(3, k), &tols()));
        }
    }

    #[test]
    fn intersection_of_context_with_itself() {
        let d = diag3();
        assert_eq!(d.intersection(&d, &tols()).unwrap().unwrap().id(), d.id());
    }

    #[test]
    fn intersection_shares_block() {
        // diagonal basis vs a basis rotated inside span(e1, e2)
        let t = tols();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0), C64::new(0.0, 0.0)]);
        let v2 = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)]);
        let rotated = Context::from_minimals(
            vec![
                Projection::rank_one(&v1).unwrap(),
                Projection::rank_one(&v2).unwrap(),
                Projection::basis(3, 2),
            ],
            &t,
        )
        .unwrap();
        let shared = diag3().intersection(&rotated, &t).unwrap().unwrap();
        assert_eq!(shared.id(), block3().id());
    }

    #[test]
    fn poset_orders_block_below_diagonal() {
        let t = tols();
        let poset = ContextPoset::from_contexts(vec![diag3(), block3()], false, &t, &Caps::default()).unwrap();
        let d = poset.index_of(diag3().id()).unwrap();
        let b = poset.index_of(block3().id()).unwrap();
        assert!(poset.leq(b, d));
        assert!(!poset.leq(d, b));
        assert_eq!(poset.arrows(), vec![(b, d)]);
        let map = poset.restriction(d, b).unwrap();
        // e33 (rank-1 block) must restrict to the rank-1 minimal of the block context
        for (i, &j) in map.iter().enumerate() {
            assert!(poset.context(d).minimals()[i].leq(&poset.context(b).minimals()[j], &t).unwrap());
        }
    }

    #[test]
    fn poset_deduplicates_equal_algebras() {
        let t = tols();
        let sets = vec![
            vec![HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])],
            vec![HermitianMatrix::from_real_diagonal(&[7.0, -1.0, 0.5])],
        ];
        let poset = ContextPoset::build(&sets, false, &t, &Caps::default()).unwrap();
        assert_eq!(poset.len(), 1);
        assert_eq!(poset.arrows().len(), 0);
    }

    #[test]
    fn poset_cap_is_enforced() {
        let caps = Caps {
            max_contexts: 1,
            ..Caps::default()
        };
        let err = ContextPoset::from_contexts(vec![diag3(), block3()], false, &tols(), &caps).unwrap_err();
        assert_eq!(err, Error::PosetTooLarge(1));
    }

    #[test]
    fn json_round_trip_preserves_order() {
        let t = tols();
        let poset = ContextPoset::from_contexts(vec![diag3(), block3()], false, &t, &Caps::default()).unwrap();
        let json = serde_json::to_string(&poset.to_json()).unwrap();
        let back: PosetJson = serde_json::from_str(&json).unwrap();
        let rebuilt = ContextPoset::from_json(&back, &t, &Caps::default()).unwrap();
        assert_eq!(rebuilt.id(), poset.id());
    }
}
