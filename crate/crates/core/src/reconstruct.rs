//! Recovering the state behind a measure.
//!
//! `m(P) = μ(δ(P))(V)` for any context `V ∋ P` defines a finitely additive
//! measure on projections. On a tomographically complete pool of
//! projections the state is then fixed by the linear system
//! `tr(ρ P_k) = m(P_k)`, solved here in least squares under `tr ρ = 1`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{ContextId, ContextPoset};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, CVector, DensityState, HermitianMatrix, MatrixJson, Projection, Tolerances, C64};
use crate::measure::Measure;
use crate::subobject::ClopenSubobject;

/// `m(P)`: the value of `μ(δ(P))` at the contexts containing `P`, which must
/// all agree.
pub fn extract_m(mu: &Measure, p: &Projection, poset: &ContextPoset, tols: &Tolerances) -> Result<f64> {
    let containing = poset.containing(p, tols);
    if containing.is_empty() {
        return Err(Error::NoContainingContext);
    }
    let s = ClopenSubobject::daseinise(p, poset, tols)?;
    let f = mu.evaluate(&s)?;
    let (lo, hi) = containing
        .iter()
        .map(|&(k, _)| f.value(k))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo > tols.tol_order {
        return Err(Error::WellDefinednessViolation { spread: hi - lo });
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub subobject: usize,
    pub context_id: ContextId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellDefinednessReport {
    pub witnesses: Vec<Witness>,
    pub spread: f64,
    pub passed: bool,
}

/// Collects `μ(S)(V)` over every pool member `S` and context `V` with
/// `α⁻¹(S_V) = P`, and reports the spread of those values.
pub fn verify_well_definedness(
    mu: &Measure,
    p: &Projection,
    subobject_pool: &[ClopenSubobject],
    poset: &ContextPoset,
    tols: &Tolerances,
) -> Result<WellDefinednessReport> {
    let containing = poset.containing(p, tols);
    let mut witnesses = Vec::new();
    for (idx, s) in subobject_pool.iter().enumerate() {
        s.check_poset(poset)?;
        for &(k, members) in &containing {
            if s.component(k) == members {
                witnesses.push(Witness {
                    subobject: idx,
                    context_id: poset.context(k).id().clone(),
                    value: mu.value_at(s, k)?,
                });
            }
        }
    }
    if witnesses.is_empty() {
        return Err(Error::EmptyWitnessSet);
    }
    let lo = witnesses.iter().map(|w| w.value).fold(f64::INFINITY, f64::min);
    let hi = witnesses.iter().map(|w| w.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(WellDefinednessReport {
        spread: hi - lo,
        passed: hi - lo <= tols.tol_order,
        witnesses,
    })
}

fn projection_key(p: &Projection) -> String {
    let (rank, entries) = p.canonical_key();
    let mut key = format!("r{rank}");
    for (re, im) in entries {
        key.push_str(&format!(":{re},{im}"));
    }
    key
}

/// The measure `m` on a finite set of projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMeasure {
    dim: usize,
    entries: BTreeMap<String, (Projection, f64)>,
}

impl ProjectionMeasure {
    /// Extracts `m` on every pool member (and on `0` and `1`).
    pub fn from_measure(mu: &Measure, pool: &[Projection], poset: &ContextPoset, tols: &Tolerances) -> Result<Self> {
        let dim = poset.dim();
        let mut all: Vec<Projection> = vec![Projection::zero(dim), Projection::identity(dim)];
        all.extend(pool.iter().cloned());
        let values = all
            .par_iter()
            .map(|p| extract_m(mu, p, poset, tols))
            .collect::<Result<Vec<_>>>()?;
        let entries = all
            .into_iter()
            .zip(values)
            .map(|(p, v)| (projection_key(&p), (p, v)))
            .collect();
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &Projection) -> Option<f64> {
        self.entries.get(&projection_key(p)).map(|(_, v)| *v)
    }

    /// Largest `|m(P∨Q) − m(P) − m(Q)|` over recorded orthogonal pairs whose
    /// join is also recorded.
    pub fn additivity_residual(&self, tols: &Tolerances) -> Result<f64> {
        let items: Vec<&(Projection, f64)> = self.entries.values().collect();
        let mut worst = 0.0f64;
        for (i, (p, mp)) in items.iter().enumerate() {
            for (q, mq) in items.iter().skip(i + 1) {
                if !p.orthogonal_to(q, tols) {
                    continue;
                }
                if let Some(mj) = self.get(&p.join(q, tols)?) {
                    worst = worst.max((mj - mp - mq).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Standard basis, `(e_i + e_j)/√2` and `(e_i + i·e_j)/√2`: `dim²` rank-one
/// projections spanning the Hermitian matrices.
pub fn default_frame(dim: usize) -> Vec<Projection> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<Projection> = (0..dim).map(|k| Projection::basis(dim, k)).collect();
    for i in 0..dim {
        for j in i + 1..dim {
            for phase in [C64::new(s, 0.0), C64::new(0.0, s)] {
                let mut v = CVector::zeros(dim);
                v[i] = C64::new(s, 0.0);
                v[j] = phase;
                out.push(Projection::rank_one(&v).expect("non-zero vector"));
            }
        }
    }
    out
}

/// Real coordinates of `P` against the Hermitian parametrisation of `ρ`, so
/// that `tr(ρ P)` is the dot product with the parameters.
fn design_row(p: &CMatrix) -> Vec<f64> {
    let n = p.nrows();
    let mut row = Vec::with_capacity(n * n);
    for i in 0..n {
        row.push(p[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            row.push(2.0 * p[(j, i)].re);
            row.push(-2.0 * p[(j, i)].im);
        }
    }
    row
}

fn from_parameters(x: &[f64], n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(x[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = C64::new(x[k], x[k + 1]);
            m[(j, i)] = C64::new(x[k], -x[k + 1]);
            k += 2;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub state: MatrixJson,
    pub pre_projection_residual: f64,
    pub residual: f64,
    pub pool_size: usize,
    pub pool_rank: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub state: DensityState,
    pub pre_projection_residual: f64,
    pub residual: f64,
    pub pool_rank: usize,
    pub warnings: Vec<String>,
}

impl Reconstruction {
    pub fn report(&self, pool_size: usize) -> ReconstructionReport {
        ReconstructionReport {
            state: MatrixJson::from_matrix(self.state.matrix()),
            pre_projection_residual: self.pre_projection_residual,
            residual: self.residual,
            pool_size,
            pool_rank: self.pool_rank,
            warnings: self.warnings.clone(),
        }
    }
}

pub const TYPE_I2_WARNING: &str =
    "TypeI2Warning: dim 2 algebras admit measures on projections that no state induces";

/// Least-squares state with `tr(ρ P_k) ≈ m(P_k)` and `tr ρ = 1`, projected
/// onto the positive semidefinite cone.
pub fn reconstruct_state(
    mu: &Measure,
    projection_pool: &[Projection],
    poset: &ContextPoset,
    tols: &Tolerances,
) -> Result<Reconstruction> {
    let n = poset.dim();
    let needed = n * n;
    if let Some(p) = projection_pool.iter().find(|p| p.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    let rows: Vec<Vec<f64>> = projection_pool.iter().map(|p| design_row(p.matrix())).collect();
    let a = DMatrix::from_fn(rows.len(), needed, |r, c| rows[r][c]);
    let rank = if rows.is_empty() {
        0
    } else {
        let sv = a.clone().svd(false, false).singular_values;
        let top = sv.iter().fold(0.0f64, |m, v| m.max(*v));
        sv.iter().filter(|&&v| v > 1e-10 * top.max(1.0)).count()
    };
    if rank < needed {
        return Err(Error::PoolRankDeficient { rank, needed });
    }

    let m: Vec<f64> = projection_pool
        .par_iter()
        .map(|p| extract_m(mu, p, poset, tols))
        .collect::<Result<_>>()?;
    let b = DVector::from_vec(m.clone());

    // KKT system for min ‖Ax − b‖² subject to cᵀx = 1.
    let mut kkt = DMatrix::zeros(needed + 1, needed + 1);
    kkt.view_mut((0, 0), (needed, needed)).copy_from(&(a.transpose() * &a));
    for i in 0..n {
        kkt[(i, needed)] = 1.0;
        kkt[(needed, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(needed + 1);
    rhs.rows_mut(0, needed).copy_from(&(a.transpose() * &b));
    rhs[needed] = 1.0;
    let solution = kkt
        .lu()
        .solve(&rhs)
        .ok_or(Error::PoolRankDeficient { rank, needed })?;
    let raw = from_parameters(&solution.as_slice()[..needed], n);

    let residual_of = |rho: &CMatrix| {
        projection_pool
            .iter()
            .zip(&m)
            .map(|(p, v)| (crate::linalg::trace_product(rho, p.matrix()) - v).abs())
            .fold(0.0, f64::max)
    };
    let pre_projection_residual = residual_of(&raw);

    let (values, vectors) = eigh(&raw);
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::InfeasibleMeasure {
            residual: pre_projection_residual,
        });
    }
    let mut psd = CMatrix::zeros(n, n);
    for (k, w) in clipped.iter().enumerate() {
        if *w > 0.0 {
            let v = vectors.column(k);
            psd += (v * v.adjoint()).scale(w / total);
        }
    }
    psd = (&psd + psd.adjoint()).scale(0.5);
    let residual = residual_of(&psd);
    if residual > 100.0 * tols.tol_order {
        return Err(Error::InfeasibleMeasure { residual });
    }
    let state = DensityState::new(HermitianMatrix::new(psd, tols)?, tols)?;
    let mut warnings = Vec::new();
    if n == 2 {
        warnings.push(TYPE_I2_WARNING.to_string());
    }
    Ok(Reconstruction {
        state,
        pre_projection_residual,
        residual,
        pool_rank: rank,
        warnings,
    })
}
