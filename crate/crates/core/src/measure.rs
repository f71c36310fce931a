//! Measures on clopen subobjects.
//!
//! A measure sends each clopen subobject to an order-reversing function from
//! the context poset into `[0, 1]`. The state-induced measure is
//! `μ_ρ(S)(V) = tr(ρ · α⁻¹(S_V))`; abstract measures are supplied as finite
//! tables and checked against the normalisation and modular axioms.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{ContextId, ContextPoset};
use crate::error::{Error, Result};
use crate::linalg::{DensityState, Tolerances};
use crate::presheaf::SpectralSet;
use crate::subobject::{ClopenSubobject, SubobjectJson, SubobjectKey};

/// A global element of the presheaf `[0,1]^⪰`: one value per context,
/// non-decreasing when passing to smaller contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReversingFunction {
    poset_id: String,
    values: Vec<f64>,
}

impl OrderReversingFunction {
    /// Values must lie in `[−tol, 1 + tol]`; they are clamped to `[0, 1]`.
    pub fn new(poset: &ContextPoset, values: Vec<f64>, tol: f64) -> Result<Self> {
        if values.len() != poset.len() {
            return Err(Error::Scenario(format!(
                "value table has {} entries, poset has {} contexts",
                values.len(),
                poset.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= -tol && **v <= 1.0 + tol)) {
            return Err(Error::NotOrderReversing {
                key: String::new(),
                reason: format!("value {v} outside [0, 1]"),
            });
        }
        let f = Self {
            poset_id: poset.id().to_string(),
            values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        };
        let violation = f.order_violation(poset);
        if violation > tol {
            return Err(Error::NotOrderReversing {
                key: String::new(),
                reason: format!("value increases by {violation:.3e} towards a larger context"),
            });
        }
        Ok(f)
    }

    pub fn constant(poset: &ContextPoset, c: f64) -> Self {
        Self {
            poset_id: poset.id().to_string(),
            values: vec![c; poset.len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Largest `f(V) − f(V')` over arrows `V' ≤ V`; zero or negative when order-reversing.
    pub fn order_violation(&self, poset: &ContextPoset) -> f64 {
        poset
            .arrows()
            .into_iter()
            .map(|(lower, upper)| self.values[upper] - self.values[lower])
            .fold(0.0, f64::max)
    }

    /// Minimum value and the first context index attaining it.
    pub fn min(&self) -> (f64, usize) {
        self.values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(best, at), (k, &v)| if v < best { (v, k) } else { (best, at) })
    }

    pub fn to_map(&self, poset: &ContextPoset) -> BTreeMap<ContextId, f64> {
        poset
            .contexts()
            .iter()
            .zip(&self.values)
            .map(|(c, v)| (c.id().clone(), *v))
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Induced {
        state: DensityState,
        /// `tr(ρ p_i)` for every minimal `p_i` of every context.
        weights: Vec<Vec<f64>>,
    },
    Tabulated {
        table: HashMap<Vec<SpectralSet>, Vec<f64>>,
    },
    Mixture {
        c: f64,
        first: Box<Measure>,
        second: Box<Measure>,
    },
}

#[derive(Debug, Clone)]
pub struct Measure {
    poset_id: String,
    context_ids: Vec<ContextId>,
    kind: Kind,
}

/// One row of a tabulated measure file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableEntryJson {
    pub subobject: SubobjectJson,
    pub values: BTreeMap<ContextId, f64>,
}

impl Measure {
    /// The measure `μ_ρ` induced by a density state.
    pub fn from_state(rho: &DensityState, poset: &ContextPoset) -> Result<Self> {
        if rho.dim() != poset.dim() {
            return Err(Error::DimensionMismatch {
                expected: poset.dim(),
                found: rho.dim(),
            });
        }
        let weights = poset
            .contexts()
            .iter()
            .map(|c| c.minimals().iter().map(|p| rho.probability(p)).collect())
            .collect();
        Ok(Self {
            poset_id: poset.id().to_string(),
            context_ids: poset.contexts().iter().map(|c| c.id().clone()).collect(),
            kind: Kind::Induced {
                state: rho.clone(),
                weights,
            },
        })
    }

    /// A finite table of values; evaluation outside the table is an error.
    pub fn tabulated(
        poset: &ContextPoset,
        entries: Vec<(ClopenSubobject, Vec<f64>)>,
        tols: &Tolerances,
    ) -> Result<Self> {
        let mut table = HashMap::with_capacity(entries.len());
        for (s, values) in entries {
            s.check_antitone(poset)?;
            let key = s.key(poset);
            let f = OrderReversingFunction::new(poset, values, tols.tol_order).map_err(|e| match e {
                Error::NotOrderReversing { reason, .. } => Error::NotOrderReversing { key: key.0.clone(), reason },
                other => other,
            })?;
            table.insert(s.components().to_vec(), f.values);
        }
        Ok(Self {
            poset_id: poset.id().to_string(),
            context_ids: poset.contexts().iter().map(|c| c.id().clone()).collect(),
            kind: Kind::Tabulated { table },
        })
    }

    pub fn from_table_json(entries: &[TableEntryJson], poset: &ContextPoset, tols: &Tolerances) -> Result<Self> {
        let rows = entries
            .iter()
            .map(|e| {
                let s = ClopenSubobject::from_json(&e.subobject, poset)?;
                let mut values = vec![f64::NAN; poset.len()];
                for (id, v) in &e.values {
                    values[poset.index_of(id)?] = *v;
                }
                Ok((s, values))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::tabulated(poset, rows, tols)
    }

    /// The table of another measure restricted to the given subobjects.
    pub fn tabulate(&self, subobjects: &[ClopenSubobject], poset: &ContextPoset, tols: &Tolerances) -> Result<Self> {
        let rows = subobjects
            .iter()
            .map(|s| Ok((s.clone(), self.evaluate(s)?.values)))
            .collect::<Result<Vec<_>>>()?;
        Self::tabulated(poset, rows, tols)
    }

    pub fn to_table_json(&self, poset: &ContextPoset) -> Option<Vec<TableEntryJson>> {
        let Kind::Tabulated { table } = &self.kind else {
            return None;
        };
        let mut rows: Vec<TableEntryJson> = table
            .iter()
            .map(|(components, values)| {
                let s = ClopenSubobject::from_components(poset, components.clone()).expect("table rows are validated");
                TableEntryJson {
                    subobject: s.to_json(poset),
                    values: poset.contexts().iter().map(|c| c.id().clone()).zip(values.iter().copied()).collect(),
                }
            })
            .collect();
        rows.sort_by(|a, b| a.subobject.components.cmp(&b.subobject.components));
        Some(rows)
    }

    pub fn poset_id(&self) -> &str {
        &self.poset_id
    }

    /// The inducing state, when the measure is state-induced.
    pub fn state(&self) -> Option<&DensityState> {
        match &self.kind {
            Kind::Induced { state, .. } => Some(state),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Induced { .. } => "induced",
            Kind::Tabulated { .. } => "tabulated",
            Kind::Mixture { .. } => "mixture",
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, Kind::Tabulated { .. })
    }

    fn check(&self, s: &ClopenSubobject) -> Result<()> {
        if s.poset_id() != self.poset_id {
            return Err(Error::PosetMismatch {
                expected: self.poset_id.clone(),
                found: s.poset_id().to_string(),
            });
        }
        Ok(())
    }

    fn values_of(&self, s: &ClopenSubobject) -> Result<Vec<f64>> {
        match &self.kind {
            Kind::Induced { weights, .. } => Ok(s
                .components()
                .iter()
                .zip(weights)
                .map(|(members, w)| members.iter().map(|i| w[i]).sum::<f64>().clamp(0.0, 1.0))
                .collect()),
            Kind::Tabulated { table } => table.get(s.components()).cloned().ok_or_else(|| {
                Error::NotTabulated(self.key_of(s).0)
            }),
            Kind::Mixture { c, first, second } => {
                let a = first.values_of(s)?;
                let b = second.values_of(s)?;
                Ok(a.iter().zip(&b).map(|(x, y)| c * x + (1.0 - c) * y).collect())
            }
        }
    }

    fn key_of(&self, s: &ClopenSubobject) -> SubobjectKey {
        crate::subobject::subobject_key(&SubobjectJson {
            poset_id: self.poset_id.clone(),
            components: self
                .context_ids
                .iter()
                .cloned()
                .zip(s.components().iter().map(|m| m.to_vec()))
                .collect(),
        })
    }

    /// `μ(S)` as an order-reversing function on the poset.
    pub fn evaluate(&self, s: &ClopenSubobject) -> Result<OrderReversingFunction> {
        self.check(s)?;
        Ok(OrderReversingFunction {
            poset_id: self.poset_id.clone(),
            values: self.values_of(s)?,
        })
    }

    /// `μ(S)(V)` for the context at index `k`.
    pub fn value_at(&self, s: &ClopenSubobject, k: usize) -> Result<f64> {
        self.check(s)?;
        match &self.kind {
            Kind::Induced { weights, .. } => {
                Ok(s.component(k).iter().map(|i| weights[k][i]).sum::<f64>().clamp(0.0, 1.0))
            }
            _ => Ok(self.values_of(s)?[k]),
        }
    }

    /// Pointwise `c·μ₁ + (1 − c)·μ₂`.
    pub fn convex_combine(c: f64, first: &Measure, second: &Measure) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) || c.is_nan() {
            return Err(Error::BadCoefficient(c));
        }
        if first.poset_id != second.poset_id {
            return Err(Error::PosetMismatch {
                expected: first.poset_id.clone(),
                found: second.poset_id.clone(),
            });
        }
        Ok(Self {
            poset_id: first.poset_id.clone(),
            context_ids: first.context_ids.clone(),
            kind: Kind::Mixture {
                c,
                first: Box::new(first.clone()),
                second: Box::new(second.clone()),
            },
        })
    }
}

/// Free-function form of [`Measure::from_state`].
pub fn measure_from_state(rho: &DensityState, poset: &ContextPoset) -> Result<Measure> {
    Measure::from_state(rho, poset)
}

/// Free-function form of [`Measure::evaluate`].
pub fn evaluate_measure(mu: &Measure, s: &ClopenSubobject) -> Result<OrderReversingFunction> {
    mu.evaluate(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub pair: usize,
    /// `None` when a required value is missing from a table.
    pub context_id: Option<ContextId>,
    pub residual: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub pairs_checked: usize,
    pub normalization_residual: f64,
    pub max_modular_residual: f64,
    pub max_order_violation: f64,
    /// Largest disagreement between table rows sharing a component (tables only).
    pub locality_spread: f64,
    pub failures: Vec<PairFailure>,
    pub passed: bool,
}

/// Checks `μ(Σ̲) = 1` and the modular identity
/// `μ(S1∨S2) + μ(S1∧S2) = μ(S1) + μ(S2)` contextwise on the sampled pairs.
pub fn check_axioms(
    mu: &Measure,
    sample_pairs: &[(ClopenSubobject, ClopenSubobject)],
    poset: &ContextPoset,
    tols: &Tolerances,
) -> AxiomReport {
    let tol = tols.tol_order;
    let mut failures = Vec::new();
    let normalization_residual = match mu.evaluate(&ClopenSubobject::top(poset)) {
        Ok(f) => f.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max),
        Err(e) => {
            failures.push(PairFailure {
                pair: usize::MAX,
                context_id: None,
                residual: f64::INFINITY,
                reason: format!("normalization: {e}"),
            });
            f64::INFINITY
        }
    };
    if normalization_residual > tol && normalization_residual.is_finite() {
        failures.push(PairFailure {
            pair: usize::MAX,
            context_id: None,
            residual: normalization_residual,
            reason: "normalization: μ(Σ) differs from 1".into(),
        });
    }

    let per_pair: Vec<(f64, f64, Vec<PairFailure>)> = sample_pairs
        .par_iter()
        .enumerate()
        .map(|(idx, (s1, s2))| modular_residuals(mu, idx, s1, s2, poset, tol))
        .collect();
    let mut max_modular_residual = 0.0f64;
    let mut max_order_violation = 0.0f64;
    for (modular, order, fails) in per_pair {
        max_modular_residual = max_modular_residual.max(modular);
        max_order_violation = max_order_violation.max(order);
        failures.extend(fails);
    }

    let locality_spread = match &mu.kind {
        Kind::Tabulated { table } => locality_spread(table, poset.len()),
        _ => 0.0,
    };
    if locality_spread > tol {
        failures.push(PairFailure {
            pair: usize::MAX,
            context_id: None,
            residual: locality_spread,
            reason: "locality: rows sharing a component disagree".into(),
        });
    }

    AxiomReport {
        pairs_checked: sample_pairs.len(),
        normalization_residual,
        max_modular_residual,
        max_order_violation,
        locality_spread,
        passed: failures.is_empty(),
        failures,
    }
}

fn modular_residuals(
    mu: &Measure,
    idx: usize,
    s1: &ClopenSubobject,
    s2: &ClopenSubobject,
    poset: &ContextPoset,
    tol: f64,
) -> (f64, f64, Vec<PairFailure>) {
    let missing = |e: Error| PairFailure {
        pair: idx,
        context_id: None,
        residual: f64::INFINITY,
        reason: e.to_string(),
    };
    let join = match s1.join(s2) {
        Ok(j) => j,
        Err(e) => return (f64::INFINITY, 0.0, vec![missing(e)]),
    };
    let meet = s1.meet(s2).expect("same poset as join");
    let mut evaluated = Vec::with_capacity(4);
    for s in [&join, &meet, s1, s2] {
        match mu.evaluate(s) {
            Ok(f) => evaluated.push(f),
            Err(e) => return (f64::INFINITY, 0.0, vec![missing(e)]),
        }
    }
    let order = evaluated
        .iter()
        .map(|f| f.order_violation(poset))
        .fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for k in 0..poset.len() {
        let r = (evaluated[0].values[k] + evaluated[1].values[k] - evaluated[2].values[k] - evaluated[3].values[k]).abs();
        worst = worst.max(r);
        if r > tol {
            fails.push(PairFailure {
                pair: idx,
                context_id: Some(poset.context(k).id().clone()),
                residual: r,
                reason: "modular identity".into(),
            });
        }
    }
    if order > tol {
        fails.push(PairFailure {
            pair: idx,
            context_id: None,
            residual: order,
            reason: "order reversal".into(),
        });
    }
    (worst, order, fails)
}

fn locality_spread(table: &HashMap<Vec<SpectralSet>, Vec<f64>>, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..n {
        let mut seen: HashMap<SpectralSet, (f64, f64)> = HashMap::new();
        for (components, values) in table {
            let e = seen.entry(components[k]).or_insert((values[k], values[k]));
            e.0 = e.0.min(values[k]);
            e.1 = e.1.max(values[k]);
        }
        for (lo, hi) in seen.values() {
            worst = worst.max(hi - lo);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaAdditivityReport {
    pub context_id: ContextId,
    pub family_size: usize,
    pub join_value: f64,
    pub sum_of_values: f64,
    pub residual: f64,
    /// Contexts where some pair of family members overlaps: the family is
    /// disjoint only locally, not globally.
    pub global_overlaps: Vec<ContextId>,
    pub passed: bool,
}

/// Additivity at one context for a family whose components there are
/// pairwise disjoint.
pub fn check_local_sigma_additivity(
    mu: &Measure,
    context: &ContextId,
    family: &[ClopenSubobject],
    poset: &ContextPoset,
    tols: &Tolerances,
) -> Result<SigmaAdditivityReport> {
    let k = poset.index_of(context)?;
    for s in family {
        s.check_poset(poset)?;
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if !family[i].component(k).intersection(family[j].component(k)).is_empty() {
                return Err(Error::NotLocallyDisjoint {
                    context: context.0.clone(),
                    first: i,
                    second: j,
                });
            }
        }
    }
    let join = family
        .iter()
        .try_fold(ClopenSubobject::empty(poset), |acc, s| acc.join(s))?;
    let join_value = mu.value_at(&join, k)?;
    let sum_of_values = family
        .iter()
        .map(|s| mu.value_at(s, k))
        .sum::<Result<f64>>()?;
    let residual = (join_value - sum_of_values).abs();
    let global_overlaps = (0..poset.len())
        .filter(|&v| {
            (0..family.len()).any(|i| {
                (i + 1..family.len()).any(|j| !family[i].component(v).intersection(family[j].component(v)).is_empty())
            })
        })
        .map(|v| poset.context(v).id().clone())
        .collect();
    Ok(SigmaAdditivityReport {
        context_id: context.clone(),
        family_size: family.len(),
        join_value,
        sum_of_values,
        residual,
        global_overlaps,
        passed: residual <= tols.tol_order,
    })
}
