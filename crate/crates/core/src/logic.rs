//! Pseudo-states, expectation values and the search for global sections.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{Context, ContextId, ContextPoset};
use crate::error::{Error, Result};
use crate::linalg::{spectral_decompose, CVector, DensityState, HermitianMatrix, Projection, Tolerances};
use crate::measure::Measure;
use crate::presheaf::SpectralSet;
use crate::subobject::{enumerate_subobjects, ClopenSubobject, SubobjectKey};

/// Above this many minimals per context, the meet over expectation-one
/// projections is computed in closed form instead of by enumeration.
const ENUMERATION_LIMIT: usize = 20;

/// `w̲ψ = δ(P^ψ)`, the smallest clopen subobject of measure one for `ψ`.
#[derive(Debug, Clone)]
pub struct PseudoState {
    vector: CVector,
    projection: Projection,
    subobject: ClopenSubobject,
}

impl PseudoState {
    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn subobject(&self) -> &ClopenSubobject {
        &self.subobject
    }

    pub fn state(&self, tols: &Tolerances) -> Result<DensityState> {
        DensityState::pure(&self.vector, tols)
    }
}

/// Meet of every projection of `ctx` with `⟨ψ, Qψ⟩ ≥ 1 − tol_state`.
fn meet_of_certain(weights: &[f64], tol: f64) -> SpectralSet {
    let n = weights.len();
    if n > ENUMERATION_LIMIT {
        // The qualifying sets are exactly those whose complement carries
        // weight at most `tol`; their intersection drops precisely the
        // points that can be left out on their own.
        return (0..n).filter(|&i| weights[i] > tol).collect();
    }
    let mut meet = SpectralSet::full(n);
    for bits in 0..(1u64 << n) {
        let q = SpectralSet::from_bits(bits);
        let w: f64 = q.iter().map(|i| weights[i]).sum();
        if w >= 1.0 - tol {
            meet = meet.intersection(q);
        }
    }
    meet
}

/// Builds `w̲ψ` twice, by daseinisation and as the contextwise meet of the
/// projections that `ψ` makes certain, and checks that both agree.
pub fn pseudo_state(psi: &CVector, poset: &ContextPoset, tols: &Tolerances) -> Result<PseudoState> {
    if psi.len() != poset.dim() {
        return Err(Error::DimensionMismatch {
            expected: poset.dim(),
            found: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > tols.tol_state {
        return Err(Error::NotUnitVector { norm });
    }
    let projection = Projection::rank_one(psi)?;
    let subobject = ClopenSubobject::daseinise(&projection, poset, tols)?;
    let rho = DensityState::pure(psi, tols)?;
    for (k, ctx) in poset.contexts().iter().enumerate() {
        let weights: Vec<f64> = ctx.minimals().iter().map(|p| rho.probability(p)).collect();
        if meet_of_certain(&weights, tols.tol_state) != subobject.component(k) {
            return Err(Error::PseudoStateMismatch {
                context: ctx.id().0.clone(),
            });
        }
    }
    Ok(PseudoState {
        vector: psi.clone(),
        projection,
        subobject,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub pool_size: usize,
    pub strictly_below: usize,
    pub violators: Vec<SubobjectKey>,
    pub passed: bool,
}

/// No pool member strictly below `w̲ψ` may have measure one everywhere.
pub fn check_minimality(
    ps: &PseudoState,
    candidate_pool: &[ClopenSubobject],
    poset: &ContextPoset,
    tols: &Tolerances,
) -> Result<MinimalityReport> {
    let mu = Measure::from_state(&ps.state(tols)?, poset)?;
    let mut strictly_below = 0;
    let mut violators = Vec::new();
    for s in candidate_pool {
        if s == &ps.subobject || !s.leq(&ps.subobject)? {
            continue;
        }
        strictly_below += 1;
        let f = mu.evaluate(s)?;
        if f.values().iter().all(|&v| v >= 1.0 - tols.tol_order) {
            violators.push(s.key(poset));
        }
    }
    Ok(MinimalityReport {
        pool_size: candidate_pool.len(),
        strictly_below,
        passed: violators.is_empty(),
        violators,
    })
}

/// [`check_minimality`] against every clopen subobject, when there are at
/// most `cap` of them.
pub fn check_minimality_exhaustive(
    ps: &PseudoState,
    poset: &ContextPoset,
    cap: usize,
    tols: &Tolerances,
) -> Result<MinimalityReport> {
    let all = enumerate_subobjects(poset, cap)?;
    check_minimality(ps, &all, poset, tols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationTerm {
    pub eigenvalue: f64,
    pub rank: usize,
    /// `min_V μ(δ(P_i))(V)`.
    pub minimum: f64,
    pub argmin: ContextId,
    pub value_at_va: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub value: f64,
    pub terms: Vec<ExpectationTerm>,
    pub va_in_poset: bool,
    /// Set when `V_A` is missing, so the minima may overestimate.
    pub degraded_accuracy: bool,
    pub minimum_attained_at_va: bool,
    pub abs_eigenvalue_sum: f64,
}

/// `Σ a_i · min_V μ(δ(P_i))(V)` over the distinct eigenvalues `a_i` of `A`.
pub fn expectation_via_measure(
    a: &HermitianMatrix,
    mu: &Measure,
    poset: &ContextPoset,
    tols: &Tolerances,
) -> Result<ExpectationReport> {
    if a.dim() != poset.dim() {
        return Err(Error::DimensionMismatch {
            expected: poset.dim(),
            found: a.dim(),
        });
    }
    let spaces = spectral_decompose(a, tols)?;
    let va = if spaces.len() < 2 {
        // Multiples of the identity lie in every context.
        Some(0)
    } else {
        let ctx = Context::from_minimals(spaces.iter().map(|e| e.projection.clone()).collect(), tols)?;
        poset.find(&ctx, tols)
    };
    let terms = spaces
        .par_iter()
        .map(|e| {
            let s = ClopenSubobject::daseinise(&e.projection, poset, tols)?;
            let f = mu.evaluate(&s)?;
            let (minimum, at) = f.min();
            Ok(ExpectationTerm {
                eigenvalue: e.value,
                rank: e.projection.rank(),
                minimum,
                argmin: poset.context(at).id().clone(),
                value_at_va: va.map(|k| f.value(k)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = terms.iter().map(|t| t.eigenvalue * t.minimum).sum();
    let minimum_attained_at_va = va.is_some()
        && terms
            .iter()
            .all(|t| t.value_at_va.is_some_and(|v| v - t.minimum <= tols.tol_order));
    Ok(ExpectationReport {
        value,
        abs_eigenvalue_sum: terms.iter().map(|t| t.eigenvalue.abs()).sum(),
        terms,
        va_in_poset: va.is_some(),
        degraded_accuracy: va.is_none(),
        minimum_attained_at_va,
    })
}

/// One spectral point per context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalSectionCandidate {
    pub assignment: BTreeMap<ContextId, usize>,
}

impl GlobalSectionCandidate {
    /// Whether every restriction map carries the chosen point at the upper
    /// context onto the chosen point at the lower one.
    pub fn is_compatible(&self, poset: &ContextPoset) -> Result<bool> {
        let choice = (0..poset.len())
            .map(|k| {
                self.assignment
                    .get(poset.context(k).id())
                    .copied()
                    .ok_or_else(|| Error::UnknownContext(poset.context(k).id().0.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(poset.arrows().into_iter().all(|(lower, upper)| {
            poset.restriction(upper, lower).expect("arrow has a restriction")[choice[upper]] == choice[lower]
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchResult {
    Found,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCertificate {
    pub result: SearchResult,
    pub nodes: u64,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GlobalSectionCandidate>,
}

/// Pairwise constraint: the choices at both contexts must fall into the same
/// block of their common subalgebra.
struct Link {
    other: usize,
    mine: Vec<usize>,
    theirs: Vec<usize>,
}

/// Exhaustive backtracking for a global section of the spectral presheaf.
///
/// Beyond the restriction maps of the poset, any two contexts with a
/// non-trivial common subalgebra `W` (in the poset or not) must choose
/// points lying over the same point of `W`.
pub fn global_section_search(poset: &ContextPoset, node_budget: u64, tols: &Tolerances) -> Result<SearchCertificate> {
    let n = poset.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        poset
            .context(b)
            .len()
            .cmp(&poset.context(a).len())
            .then_with(|| poset.context(a).id().cmp(poset.context(b).id()))
    });
    let position: Vec<usize> = {
        let mut p = vec![0; n];
        for (d, &k) in order.iter().enumerate() {
            p[k] = d;
        }
        p
    };

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    // (a, b, refinement of a onto the meet, refinement of b onto the meet)
    type Overlap = (usize, usize, Vec<usize>, Vec<usize>);
    let found: Vec<Option<Overlap>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (ca, cb) = (poset.context(a), poset.context(b));
            let w = ca.intersection(cb, tols)?;
            Ok(w.and_then(|w| {
                let ma = ca.refinement_map(&w, tols)?;
                let mb = cb.refinement_map(&w, tols)?;
                Some((a, b, ma, mb))
            }))
        })
        .collect::<Result<_>>()?;
    // links[k] holds the constraints of context k against contexts placed earlier.
    let mut links: Vec<Vec<Link>> = (0..n).map(|_| Vec::new()).collect();
    for (a, b, ma, mb) in found.into_iter().flatten() {
        if position[a] > position[b] {
            links[a].push(Link { other: b, mine: ma, theirs: mb });
        } else {
            links[b].push(Link { other: a, mine: mb, theirs: ma });
        }
    }
    for (lower, upper) in poset.arrows() {
        let map = poset.restriction(upper, lower).expect("arrow has a restriction").to_vec();
        let identity: Vec<usize> = (0..poset.context(lower).len()).collect();
        if position[upper] > position[lower] {
            links[upper].push(Link { other: lower, mine: map, theirs: identity });
        } else {
            links[lower].push(Link { other: upper, mine: identity, theirs: map });
        }
    }

    struct State<'a> {
        poset: &'a ContextPoset,
        order: &'a [usize],
        links: &'a [Vec<Link>],
        choice: Vec<usize>,
        nodes: u64,
        depth: usize,
        budget: u64,
    }

    fn recurse(st: &mut State<'_>, d: usize) -> Result<bool> {
        st.depth = st.depth.max(d);
        if d == st.order.len() {
            return Ok(true);
        }
        let k = st.order[d];
        for i in 0..st.poset.context(k).len() {
            st.nodes += 1;
            if st.nodes > st.budget {
                return Err(Error::SearchBudgetExceeded(st.budget));
            }
            let ok = st.links[k]
                .iter()
                .all(|l| l.mine[i] == l.theirs[st.choice[l.other]]);
            if ok {
                st.choice[k] = i;
                if recurse(st, d + 1)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    let mut st = State {
        poset,
        order: &order,
        links: &links,
        choice: vec![0; n],
        nodes: 0,
        depth: 0,
        budget: node_budget,
    };
    let ok = recurse(&mut st, 0)?;
    let witness = ok.then(|| GlobalSectionCandidate {
        assignment: (0..n).map(|k| (poset.context(k).id().clone(), st.choice[k])).collect(),
    });
    Ok(SearchCertificate {
        result: if ok { SearchResult::Found } else { SearchResult::None },
        nodes: st.nodes,
        depth: st.depth,
        witness,
    })
}
