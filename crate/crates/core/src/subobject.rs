//! Clopen subobjects of the spectral presheaf and daseinisation.
//!
//! A clopen subobject picks one clopen subset per context, subject to the
//! antitone condition: along every arrow `V' ≤ V`, the restriction of the
//! component at `V` lies inside the component at `V'` (equivalently
//! `P_V ≤ P_V'` on projections). Components are stored in the α encoding
//! (bitmasks over minimal indices), which makes every finite lattice
//! operation exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::context::{ContextId, ContextPoset};
use crate::error::{Error, Result};
use crate::linalg::{Projection, Tolerances};
use crate::presheaf::SpectralSet;

/// Content hash of a subobject's α-encoded component map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubobjectKey(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClopenSubobject {
    poset_id: String,
    /// One component per context, in the poset's canonical order.
    components: Vec<SpectralSet>,
}

impl ClopenSubobject {
    /// The empty subobject `0̲`.
    pub fn empty(poset: &ContextPoset) -> Self {
        Self {
            poset_id: poset.id().to_string(),
            components: vec![SpectralSet::empty(); poset.len()],
        }
    }

    /// The whole presheaf `Σ̲`.
    pub fn top(poset: &ContextPoset) -> Self {
        Self {
            poset_id: poset.id().to_string(),
            components: poset.contexts().iter().map(|c| c.full_set()).collect(),
        }
    }

    /// Validates ranges and the antitone condition.
    pub fn from_components(poset: &ContextPoset, components: Vec<SpectralSet>) -> Result<Self> {
        if components.len() != poset.len() {
            return Err(Error::Scenario(format!(
                "subobject has {} components, poset has {} contexts",
                components.len(),
                poset.len()
            )));
        }
        for (k, s) in components.iter().enumerate() {
            let len = poset.context(k).len();
            if let Some(bad) = s.iter().find(|&i| i >= len) {
                return Err(Error::SpectralIndexOutOfRange { index: bad, len });
            }
        }
        let s = Self {
            poset_id: poset.id().to_string(),
            components,
        };
        s.check_antitone(poset)?;
        Ok(s)
    }

    /// The smallest subobject whose component at each context contains the
    /// given seed set.
    pub fn generated_by(poset: &ContextPoset, seeds: &[SpectralSet]) -> Result<Self> {
        if seeds.len() != poset.len() {
            return Err(Error::Scenario("one seed set per context required".into()));
        }
        let mut components = seeds.to_vec();
        for (upper, seed) in seeds.iter().enumerate() {
            for &lower in poset.below(upper) {
                if lower != upper {
                    let map = poset.restriction(upper, lower).expect("arrow has a restriction");
                    components[lower] = components[lower].union(seed.image(map));
                }
            }
        }
        Self::from_components(poset, components)
    }

    pub fn poset_id(&self) -> &str {
        &self.poset_id
    }

    pub fn components(&self) -> &[SpectralSet] {
        &self.components
    }

    pub fn component(&self, k: usize) -> SpectralSet {
        self.components[k]
    }

    /// `α⁻¹(S_V)` for the context at index `k`.
    pub fn component_projection(&self, poset: &ContextPoset, k: usize) -> Projection {
        poset.context(k).projection_of(self.components[k])
    }

    pub fn check_poset(&self, poset: &ContextPoset) -> Result<()> {
        if self.poset_id != poset.id() {
            return Err(Error::PosetMismatch {
                expected: poset.id().to_string(),
                found: self.poset_id.clone(),
            });
        }
        Ok(())
    }

    fn check_same(&self, other: &ClopenSubobject) -> Result<()> {
        if self.poset_id != other.poset_id {
            return Err(Error::PosetMismatch {
                expected: self.poset_id.clone(),
                found: other.poset_id.clone(),
            });
        }
        Ok(())
    }

    /// Exhaustive scan of every arrow for the antitone condition.
    pub fn check_antitone(&self, poset: &ContextPoset) -> Result<()> {
        self.check_poset(poset)?;
        for (lower, upper) in poset.arrows() {
            let map = poset.restriction(upper, lower).expect("arrow has a restriction");
            if !self.components[upper].image(map).is_subset(self.components[lower]) {
                return Err(Error::NotAntitone {
                    lower: poset.context(lower).id().0.clone(),
                    upper: poset.context(upper).id().0.clone(),
                });
            }
        }
        Ok(())
    }

    /// Outer daseinisation: at each context the least projection of the
    /// context dominating `p`, i.e. the sum of minimals not orthogonal to `p`.
    pub fn daseinise(p: &Projection, poset: &ContextPoset, tols: &Tolerances) -> Result<Self> {
        if p.dim() != poset.dim() {
            return Err(Error::DimensionMismatch {
                expected: poset.dim(),
                found: p.dim(),
            });
        }
        let components = poset
            .contexts()
            .iter()
            .map(|ctx| {
                ctx.minimals()
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| !m.orthogonal_to(p, tols))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let s = Self {
            poset_id: poset.id().to_string(),
            components,
        };
        debug_assert!(s.check_antitone(poset).is_ok());
        Ok(s)
    }

    /// Stagewise intersection.
    pub fn meet(&self, other: &ClopenSubobject) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            poset_id: self.poset_id.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.intersection(*b))
                .collect(),
        })
    }

    /// Stagewise union.
    pub fn join(&self, other: &ClopenSubobject) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            poset_id: self.poset_id.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.union(*b))
                .collect(),
        })
    }

    /// Heyting negation: at `V`, the points none of whose restrictions to a
    /// subcontext `V'' ≤ V` (including `V`) land in `S_V''`. On projections
    /// this is `1 − ⋁_{V'' ≤ V} P_{S_V''}`.
    pub fn negation(&self, poset: &ContextPoset) -> Result<Self> {
        self.check_poset(poset)?;
        let components = (0..poset.len())
            .map(|upper| {
                let len = poset.context(upper).len();
                (0..len)
                    .filter(|&i| {
                        poset.below(upper).iter().all(|&lower| {
                            let map = poset.restriction(upper, lower).expect("arrow has a restriction");
                            !self.components[lower].contains(map[i])
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            poset_id: self.poset_id.clone(),
            components,
        })
    }

    /// Componentwise inclusion.
    pub fn leq(&self, other: &ClopenSubobject) -> Result<bool> {
        self.check_same(other)?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .all(|(a, b)| a.is_subset(*b)))
    }

    pub fn is_empty(&self) -> bool {
        self.components.iter().all(|s| s.is_empty())
    }

    pub fn key(&self, poset: &ContextPoset) -> SubobjectKey {
        subobject_key(&self.to_json(poset))
    }

    pub fn to_json(&self, poset: &ContextPoset) -> SubobjectJson {
        SubobjectJson {
            poset_id: self.poset_id.clone(),
            components: poset
                .contexts()
                .iter()
                .zip(&self.components)
                .map(|(c, s)| (c.id().clone(), s.to_vec()))
                .collect(),
        }
    }

    pub fn from_json(json: &SubobjectJson, poset: &ContextPoset) -> Result<Self> {
        if json.poset_id != poset.id() {
            return Err(Error::PosetMismatch {
                expected: poset.id().to_string(),
                found: json.poset_id.clone(),
            });
        }
        let mut components = vec![None; poset.len()];
        for (id, members) in &json.components {
            let k = poset.index_of(id)?;
            let len = poset.context(k).len();
            if let Some(&bad) = members.iter().find(|&&i| i >= len) {
                return Err(Error::SpectralIndexOutOfRange { index: bad, len });
            }
            components[k] = Some(members.iter().copied().collect::<SpectralSet>());
        }
        let components = components
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| Error::Scenario(format!("subobject lacks a component for context {}", poset.context(k).id()))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(poset, components)
    }
}

/// α encoding of a subobject: context id ↦ sorted member indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubobjectJson {
    pub poset_id: String,
    pub components: BTreeMap<ContextId, Vec<usize>>,
}

pub fn subobject_key(json: &SubobjectJson) -> SubobjectKey {
    let mut hasher = Sha256::new();
    hasher.update(json.poset_id.as_bytes());
    for (id, members) in &json.components {
        hasher.update(b"|");
        hasher.update(id.0.as_bytes());
        for m in members {
            hasher.update((*m as u32).to_le_bytes());
        }
    }
    SubobjectKey(hex::encode(&hasher.finalize()[..12]))
}

/// Every clopen subobject of the poset, by backtracking over contexts.
/// Fails once more than `cap` families have been produced.
pub fn enumerate_subobjects(poset: &ContextPoset, cap: usize) -> Result<Vec<ClopenSubobject>> {
    let n = poset.len();
    let arrows = poset.arrows();
    let mut out = Vec::new();
    let mut current = vec![SpectralSet::empty(); n];

    fn consistent(poset: &ContextPoset, arrows: &[(usize, usize)], current: &[SpectralSet], k: usize) -> bool {
        arrows.iter().all(|&(lower, upper)| {
            if (lower != k && upper != k) || lower > k || upper > k {
                return true;
            }
            let map = poset.restriction(upper, lower).expect("arrow has a restriction");
            current[upper].image(map).is_subset(current[lower])
        })
    }

    fn recurse(
        poset: &ContextPoset,
        arrows: &[(usize, usize)],
        current: &mut Vec<SpectralSet>,
        k: usize,
        cap: usize,
        out: &mut Vec<ClopenSubobject>,
    ) -> Result<()> {
        if k == current.len() {
            if out.len() >= cap {
                return Err(Error::EnumerationTooLarge(cap));
            }
            out.push(ClopenSubobject {
                poset_id: poset.id().to_string(),
                components: current.clone(),
            });
            return Ok(());
        }
        let len = poset.context(k).len();
        for bits in 0..(1u64 << len) {
            current[k] = SpectralSet::from_bits(bits);
            if consistent(poset, arrows, current, k) {
                recurse(poset, arrows, current, k + 1, cap, out)?;
            }
        }
        current[k] = SpectralSet::empty();
        Ok(())
    }

    recurse(poset, &arrows, &mut current, 0, cap, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{Caps, Context};
    use crate::linalg::{HermitianMatrix, CVector, C64};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn plus_minus() -> Context {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Projection::rank_one(&CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)])).unwrap();
        Context::from_projection(&plus, &tols()).unwrap()
    }

    fn diag_block_poset() -> ContextPoset {
        let t = tols();
        let diag = Context::from_generators(&[HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])], &t).unwrap();
        let block = Context::from_generators(&[HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 2.0])], &t).unwrap();
        ContextPoset::from_contexts(vec![diag, block], false, &t, &Caps::default()).unwrap()
    }

    #[test]
    fn daseinisation_of_zero_is_empty() {
        let poset = diag_block_poset();
        let s = ClopenSubobject::daseinise(&Projection::zero(3), &poset, &tols()).unwrap();
        assert_eq!(s, ClopenSubobject::empty(&poset));
        let top = ClopenSubobject::daseinise(&Projection::identity(3), &poset, &tols()).unwrap();
        assert_eq!(top, ClopenSubobject::top(&poset));
    }

    #[test]
    fn daseinisation_is_exact_inside_context() {
        let t = tols();
        let poset = diag_block_poset();
        let p = Projection::basis(3, 0);
        let s = ClopenSubobject::daseinise(&p, &poset, &t).unwrap();
        for (k, ctx) in poset.contexts().iter().enumerate() {
            let component = s.component_projection(&poset, k);
            if ctx.contains_projection(&p, &t) {
                assert!(component.approx_eq(&p, &t));
            } else {
                assert!(p.leq(&component, &t).unwrap());
            }
        }
    }

    #[test]
    fn daseinisation_into_rotated_context_is_identity() {
        let t = tols();
        let poset = ContextPoset::from_contexts(vec![plus_minus()], false, &t, &Caps::default()).unwrap();
        let s = ClopenSubobject::daseinise(&Projection::basis(2, 0), &poset, &t).unwrap();
        assert_eq!(s, ClopenSubobject::top(&poset));
    }

    #[test]
    fn unit_and_idempotence_laws() {
        let t = tols();
        let poset = diag_block_poset();
        let s = ClopenSubobject::daseinise(&Projection::basis(3, 1), &poset, &t).unwrap();
        assert_eq!(s.meet(&s).unwrap(), s);
        assert_eq!(s.meet(&ClopenSubobject::top(&poset)).unwrap(), s);
        assert_eq!(s.join(&ClopenSubobject::empty(&poset)).unwrap(), s);
        assert!(ClopenSubobject::empty(&poset).leq(&s).unwrap());
        assert!(s.leq(&ClopenSubobject::top(&poset)).unwrap());
    }

    #[test]
    fn negation_boundary_cases() {
        let poset = diag_block_poset();
        let top = ClopenSubobject::top(&poset);
        let bottom = ClopenSubobject::empty(&poset);
        assert_eq!(top.negation(&poset).unwrap(), bottom);
        assert_eq!(bottom.negation(&poset).unwrap(), top);
    }

    #[test]
    fn excluded_middle_fails_on_comparable_contexts() {
        let t = tols();
        let poset = diag_block_poset();
        let s = ClopenSubobject::daseinise(&Projection::basis(3, 0), &poset, &t).unwrap();
        let both = s.join(&s.negation(&poset).unwrap()).unwrap();
        assert!(both.leq(&ClopenSubobject::top(&poset)).unwrap());
        assert_ne!(both, ClopenSubobject::top(&poset));
    }

    #[test]
    fn non_antitone_family_is_rejected() {
        let poset = diag_block_poset();
        let diag = (0..poset.len()).find(|&k| poset.context(k).len() == 3).unwrap();
        let mut components = vec![SpectralSet::empty(); 2];
        components[diag] = SpectralSet::singleton(0);
        assert!(matches!(
            ClopenSubobject::from_components(&poset, components),
            Err(Error::NotAntitone { .. })
        ));
    }

    #[test]
    fn generated_subobject_is_smallest_containing_seeds() {
        let poset = diag_block_poset();
        let diag = (0..poset.len()).find(|&k| poset.context(k).len() == 3).unwrap();
        let mut seeds = vec![SpectralSet::empty(); 2];
        seeds[diag] = SpectralSet::singleton(0);
        let s = ClopenSubobject::generated_by(&poset, &seeds).unwrap();
        assert_eq!(s.component(diag), SpectralSet::singleton(0));
        assert_eq!(s.component(1 - diag).len(), 1);
    }

    #[test]
    fn enumeration_counts_antitone_families() {
        // 8 subsets at the diagonal context; the block context component
        // must contain the image, giving sum over subsets of 2^(free blocks).
        let poset = diag_block_poset();
        let all = enumerate_subobjects(&poset, 1000).unwrap();
        let mut brute = 0;
        for d in 0..8u64 {
            for b in 0..4u64 {
                let mut comps = vec![SpectralSet::empty(); 2];
                let diag = (0..2).find(|&k| poset.context(k).len() == 3).unwrap();
                comps[diag] = SpectralSet::from_bits(d);
                comps[1 - diag] = SpectralSet::from_bits(b);
                if ClopenSubobject::from_components(&poset, comps).is_ok() {
                    brute += 1;
                }
            }
        }
        assert_eq!(all.len(), brute);
        assert!(matches!(enumerate_subobjects(&poset, 3), Err(Error::EnumerationTooLarge(3))));
    }

    #[test]
    fn json_round_trip() {
        let t = tols();
        let poset = diag_block_poset();
        let s = ClopenSubobject::daseinise(&Projection::basis(3, 2), &poset, &t).unwrap();
        let json = s.to_json(&poset);
        assert_eq!(ClopenSubobject::from_json(&json, &poset).unwrap(), s);
        assert_eq!(subobject_key(&json), s.key(&poset));
    }
}
