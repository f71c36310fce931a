//! Dense complex Hermitian linear algebra.
//!
//! Everything downstream is phrased in terms of projections, so this module
//! owns the numerical conventions: how Hermiticity and idempotency are
//! checked, how spectral decompositions group nearly-equal eigenvalues, and
//! how the projection lattice (order, meet, join, complement) is computed for
//! arbitrary, possibly non-commuting, pairs.
//!
//! Every constructed projection is re-symmetrised and re-idempotised (its
//! eigenvalues are rounded to `{0, 1}`), so that tolerances do not drift
//! through chains of lattice operations.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Resolution used for the canonical ordering of projections.
const CANONICAL_RESOLUTION: f64 = 1e6;

/// Numerical tolerances shared by all modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_herm: f64,
    pub tol_idem: f64,
    pub tol_state: f64,
    pub tol_eig_group: f64,
    pub tol_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_herm: 1e-10,
            tol_idem: 1e-9,
            tol_state: 1e-9,
            tol_eig_group: 1e-8,
            tol_order: 1e-9,
        }
    }
}

impl Tolerances {
    /// Defaults for user-supplied measure tables, which carry entry noise.
    pub fn for_tabulated() -> Self {
        Self {
            tol_order: 1e-6,
            ..Self::default()
        }
    }

    /// Sets one tolerance by field name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "tol_herm" => &mut self.tol_herm,
            "tol_idem" => &mut self.tol_idem,
            "tol_state" => &mut self.tol_state,
            "tol_eig_group" => &mut self.tol_eig_group,
            "tol_order" => &mut self.tol_order,
            other => return Err(Error::InvalidTolerances(format!("unknown tolerance {other}"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("tol_herm", self.tol_herm),
            ("tol_idem", self.tol_idem),
            ("tol_state", self.tol_state),
            ("tol_eig_group", self.tol_eig_group),
            ("tol_order", self.tol_order),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerances(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if self.tol_eig_group <= self.tol_idem {
            return Err(Error::InvalidTolerances(format!(
                "tol_eig_group ({}) must exceed tol_idem ({})",
                self.tol_eig_group, self.tol_idem
            )));
        }
        Ok(())
    }
}

/// Row-major JSON form of a complex matrix: a list of rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixJson(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.0.len();
        if n == 0 {
            return Err(Error::MalformedMatrix("matrix has no rows".into()));
        }
        for (i, row) in self.0.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MalformedMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.0[i][j];
            C64::new(re, im)
        }))
    }
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Real part of the trace of `a * b` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

/// Eigenvalues (ascending) and matching orthonormal eigenvector columns of a
/// Hermitian matrix.
pub(crate) fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `V V†` for the selected eigenvector columns.
fn span_projector(vectors: &CMatrix, columns: &[usize]) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for &c in columns {
        let v = vectors.column(c);
        out += v * v.adjoint();
    }
    out
}

/// A complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    /// Validates Hermiticity within `tol_herm` and stores the symmetrised matrix.
    pub fn new(entries: CMatrix, tols: &Tolerances) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::MalformedMatrix(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::MalformedMatrix("empty matrix".into()));
        }
        let asymmetry = hermitian_defect(&entries);
        if asymmetry > tols.tol_herm {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self {
            entries: symmetrize(&entries),
        })
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        let n = diagonal.len();
        Self {
            entries: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(diagonal[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        Self {
            entries: symmetrize(&entries),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).0
    }

    /// Operator (spectral) norm.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().into_iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn commutator_norm(&self, other: &HermitianMatrix) -> f64 {
        let ab = &self.entries * &other.entries;
        let ba = &other.entries * &self.entries;
        frobenius(&(ab - ba))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.entries)
    }

    pub fn from_json(json: &MatrixJson, tols: &Tolerances) -> Result<Self> {
        Self::new(json.to_matrix()?, tols)
    }
}

/// An orthogonal projection.
///
/// The complement is computed once at construction from the same
/// eigenvectors, which keeps `complement` an exact involution.
#[derive(Debug, Clone)]
pub struct Projection {
    matrix: CMatrix,
    complement: CMatrix,
    rank: usize,
}

impl PartialEq for Projection {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.matrix == other.matrix
    }
}

impl Projection {
    /// Validates a candidate projection and cleans it spectrally.
    pub fn new(entries: CMatrix, tols: &Tolerances) -> Result<Self> {
        let herm = HermitianMatrix::new(entries, tols)?;
        let m = herm.matrix();
        let dim = m.nrows() as f64;
        let defect = frobenius(&(m * m - m));
        if defect > tols.tol_idem * dim {
            return Err(Error::NotProjection { defect });
        }
        let trace = herm.trace();
        if (trace - trace.round()).abs() > tols.tol_idem * dim {
            return Err(Error::NotProjection {
                defect: (trace - trace.round()).abs(),
            });
        }
        Ok(Self::round_spectrum(m))
    }

    /// Spectral rounding: eigenvalues above 1/2 become 1, the rest 0.
    pub(crate) fn round_spectrum(m: &CMatrix) -> Self {
        let (values, vectors) = eigh(&symmetrize(m));
        let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..values.len()).partition(|&k| values[k] > 0.5);
        Self {
            matrix: span_projector(&vectors, &ones),
            complement: span_projector(&vectors, &zeros),
            rank: ones.len(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
            complement: CMatrix::identity(dim, dim),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::zero(dim).complement()
    }

    /// Rank-one projection onto the line spanned by `v` (need not be normalised).
    pub fn rank_one(v: &CVector) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::MalformedMatrix("cannot project onto the zero vector".into()));
        }
        let u = v.unscale(norm);
        Ok(Self::round_spectrum(&(&u * u.adjoint())))
    }

    /// Diagonal matrix unit `e_kk`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self::round_spectrum(&(&v * v.adjoint()))
    }

    /// Projection onto the span of the given (not necessarily orthonormal) columns.
    pub fn onto_span(columns: &[CVector], dim: usize, tols: &Tolerances) -> Self {
        let mut gram = CMatrix::zeros(dim, dim);
        for c in columns {
            gram += c * c.adjoint();
        }
        let (values, vectors) = eigh(&gram);
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let ones: Vec<usize> = (0..values.len())
            .filter(|&k| values[k] > tols.tol_idem * scale)
            .collect();
        Self::from_orthonormal_columns(&vectors, &ones)
    }

    fn from_orthonormal_columns(vectors: &CMatrix, columns: &[usize]) -> Self {
        let others: Vec<usize> = (0..vectors.ncols()).filter(|k| !columns.contains(k)).collect();
        Self {
            matrix: span_projector(vectors, columns),
            complement: span_projector(vectors, &others),
            rank: columns.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    pub fn is_identity(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix {
            entries: self.matrix.clone(),
        }
    }

    /// `1 - P`.
    pub fn complement(&self) -> Self {
        Self {
            matrix: self.complement.clone(),
            complement: self.matrix.clone(),
            rank: self.dim() - self.rank,
        }
    }

    fn check_dim(&self, other: &Projection) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// `range(self) ⊆ range(other)`, tested as `‖P − QP‖ ≤ tol_idem`.
    pub fn leq(&self, other: &Projection, tols: &Tolerances) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.leq_unchecked(other, tols))
    }

    pub(crate) fn leq_unchecked(&self, other: &Projection, tols: &Tolerances) -> bool {
        if self.rank > other.rank {
            return false;
        }
        // ‖P − QP‖ = ‖(1 − Q)P‖
        frobenius(&(&other.complement * &self.matrix)) <= tols.tol_idem
    }

    /// Whether `self · other` vanishes within `tol_idem`.
    pub fn orthogonal_to(&self, other: &Projection, tols: &Tolerances) -> bool {
        frobenius(&(&self.matrix * &other.matrix)) <= tols.tol_idem
    }

    pub fn approx_eq(&self, other: &Projection, tols: &Tolerances) -> bool {
        self.dim() == other.dim()
            && self.rank == other.rank
            && frobenius(&(&self.matrix - &other.matrix)) <= 2.0 * tols.tol_idem
    }

    pub fn commutes_with(&self, other: &Projection, tols: &Tolerances) -> bool {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        frobenius(&(ab - ba)) <= tols.tol_idem * self.dim() as f64
    }

    /// Projection onto `range(P) ∩ range(Q)`.
    ///
    /// The intersection is the kernel of the positive matrix `(1 − P) + (1 − Q)`.
    pub fn meet(&self, other: &Projection, tols: &Tolerances) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.meet_unchecked(other, tols))
    }

    fn meet_unchecked(&self, other: &Projection, tols: &Tolerances) -> Self {
        if self.leq_unchecked(other, tols) {
            return self.clone();
        }
        if other.leq_unchecked(self, tols) {
            return other.clone();
        }
        let m = &self.complement + &other.complement;
        let (values, vectors) = eigh(&m);
        let kernel: Vec<usize> = (0..values.len())
            .filter(|&k| values[k] <= tols.tol_idem)
            .collect();
        Self::from_orthonormal_columns(&vectors, &kernel)
    }

    /// Projection onto `range(P) + range(Q)`.
    pub fn join(&self, other: &Projection, tols: &Tolerances) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self
            .complement()
            .meet_unchecked(&other.complement(), tols)
            .complement())
    }

    /// Meet, join and the complement of `self` in one call.
    pub fn lattice_ops(&self, other: &Projection, tols: &Tolerances) -> Result<LatticeOps> {
        Ok(LatticeOps {
            meet: self.meet(other, tols)?,
            join: self.join(other, tols)?,
            complement: self.complement(),
        })
    }

    /// Sum of pairwise orthogonal projections, cleaned spectrally.
    pub fn orthogonal_sum<'a, I>(dim: usize, parts: I) -> Self
    where
        I: IntoIterator<Item = &'a Projection>,
    {
        let mut acc = CMatrix::zeros(dim, dim);
        let mut any = false;
        for p in parts {
            acc += &p.matrix;
            any = true;
        }
        if !any {
            return Self::zero(dim);
        }
        Self::round_spectrum(&acc)
    }

    /// Product of two commuting projections, cleaned spectrally.
    pub(crate) fn commuting_product(&self, other: &Projection) -> Self {
        Self::round_spectrum(&(&self.matrix * &other.matrix))
    }

    /// Sort key: rank, then entries rounded to 1e-6.
    pub fn canonical_key(&self) -> (usize, Vec<(i64, i64)>) {
        let entries = self
            .matrix
            .transpose()
            .iter()
            .map(|z| {
                (
                    round_canonical(z.re),
                    round_canonical(z.im),
                )
            })
            .collect();
        (self.rank, entries)
    }

    /// Ascending rank, then descending rounded entries, so that the
    /// diagonal matrix units come out as `e11, e22, ...`.
    pub fn canonical_cmp(&self, other: &Projection) -> Ordering {
        let (ra, ea) = self.canonical_key();
        let (rb, eb) = other.canonical_key();
        ra.cmp(&rb).then_with(|| eb.cmp(&ea))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.matrix)
    }

    pub fn from_json(json: &MatrixJson, tols: &Tolerances) -> Result<Self> {
        Self::new(json.to_matrix()?, tols)
    }
}

fn round_canonical(x: f64) -> i64 {
    let r = (x * CANONICAL_RESOLUTION).round() as i64;
    if r == 0 {
        0
    } else {
        r
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Projection(dim={}, rank={})", self.dim(), self.rank)
    }
}

#[derive(Debug, Clone)]
pub struct LatticeOps {
    pub meet: Projection,
    pub join: Projection,
    pub complement: Projection,
}

/// One eigenvalue of a Hermitian matrix with its eigenprojection.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub value: f64,
    pub projection: Projection,
}

/// Spectral decomposition with eigenvalues closer than `tol_eig_group`
/// merged into one eigenprojection. Eigenvalues come out ascending.
pub fn spectral_decompose(a: &HermitianMatrix, tols: &Tolerances) -> Result<Vec<Eigenspace>> {
    let asymmetry = hermitian_defect(a.matrix());
    if asymmetry > tols.tol_herm {
        return Err(Error::NotHermitian { asymmetry });
    }
    let (values, vectors) = eigh(a.matrix());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..values.len() {
        match groups.last_mut() {
            Some(g) if values[k] - values[*g.last().unwrap()] <= tols.tol_eig_group => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    Ok(groups
        .into_iter()
        .map(|g| Eigenspace {
            value: g.iter().map(|&k| values[k]).sum::<f64>() / g.len() as f64,
            projection: Projection::from_orthonormal_columns(&vectors, &g),
        })
        .collect())
}

/// A density matrix: positive semidefinite with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: HermitianMatrix,
}

impl DensityState {
    pub fn new(matrix: HermitianMatrix, tols: &Tolerances) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - 1.0).abs() > tols.tol_state {
            return Err(Error::NotDensityState {
                reason: format!("trace is {trace}"),
            });
        }
        let smallest = matrix.eigenvalues().first().copied().unwrap_or(0.0);
        if smallest < -tols.tol_state {
            return Err(Error::NotDensityState {
                reason: format!("negative eigenvalue {smallest}"),
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_matrix(entries: CMatrix, tols: &Tolerances) -> Result<Self> {
        Self::new(HermitianMatrix::new(entries, tols)?, tols)
    }

    /// Vector state `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &CVector, tols: &Tolerances) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > tols.tol_state {
            return Err(Error::NotUnitVector { norm });
        }
        let u = psi.unscale(norm);
        Ok(Self {
            matrix: HermitianMatrix::from_trusted(&u * u.adjoint()),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::from_trusted(CMatrix::identity(dim, dim).unscale(dim as f64)),
        }
    }

    /// `c·a + (1 − c)·b`.
    pub fn mix(c: f64, a: &DensityState, b: &DensityState) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::BadCoefficient(c));
        }
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let m = a.matrix.matrix().scale(c) + b.matrix.matrix().scale(1.0 - c);
        Ok(Self {
            matrix: HermitianMatrix::from_trusted(m),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.matrix.matrix()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        trace_product(self.matrix.matrix(), a)
    }

    pub fn probability(&self, p: &Projection) -> f64 {
        self.expectation(p.matrix())
    }

    pub fn frobenius_distance(&self, other: &DensityState) -> f64 {
        frobenius(&(self.matrix() - other.matrix()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn plus() -> Projection {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Projection::rank_one(&CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)])).unwrap()
    }

    #[test]
    fn identity_has_single_eigenspace() {
        let spaces = spectral_decompose(&HermitianMatrix::identity(3), &tols()).unwrap();
        assert_eq!(spaces.len(), 1);
        assert!((spaces[0].value - 1.0).abs() < 1e-12);
        assert!(spaces[0].projection.is_identity());
    }

    #[test]
    fn distinct_diagonal_splits_into_matrix_units() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0]);
        let spaces = spectral_decompose(&a, &tols()).unwrap();
        assert_eq!(spaces.len(), 3);
        for (k, s) in spaces.iter().enumerate() {
            assert!((s.value - (k as f64 + 1.0)).abs() < 1e-12);
            assert!(s.projection.approx_eq(&Projection::basis(3, k), &tols()));
        }
    }

    #[test]
    fn degenerate_eigenvalues_merge() {
        let a = HermitianMatrix::from_real_diagonal(&[2.0, 2.0, 5.0]);
        let spaces = spectral_decompose(&a, &tols()).unwrap();
        assert_eq!(spaces.len(), 2);
        let block = Projection::orthogonal_sum(3, [&Projection::basis(3, 0), &Projection::basis(3, 1)]);
        assert!((spaces[0].value - 2.0).abs() < 1e-12);
        assert!(spaces[0].projection.approx_eq(&block, &tols()));
        assert!(spaces[1].projection.approx_eq(&Projection::basis(3, 2), &tols()));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            HermitianMatrix::new(m, &tols()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn order_on_projections() {
        let t = tols();
        let zero = Projection::zero(2);
        let e11 = Projection::basis(2, 0);
        assert!(zero.leq(&e11, &t).unwrap());
        assert!(zero.leq(&plus(), &t).unwrap());
        // ‖P − QP‖ = 1/√2 for P = |+⟩⟨+|, Q = e11
        assert!(!plus().leq(&e11, &t).unwrap());
        let e11_3 = Projection::basis(3, 0);
        let block = Projection::orthogonal_sum(3, [&e11_3, &Projection::basis(3, 1)]);
        assert!(e11_3.leq(&block, &t).unwrap());
        assert!(matches!(e11.leq(&e11_3, &t), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn lattice_of_generic_pair() {
        let t = tols();
        let ops = Projection::basis(2, 0).lattice_ops(&plus(), &t).unwrap();
        assert!(ops.meet.is_zero());
        assert!(ops.join.is_identity());
        assert!(ops.complement.approx_eq(&Projection::basis(2, 1), &t));
    }

    #[test]
    fn lattice_of_equal_pair() {
        let t = tols();
        let p = plus();
        let ops = p.lattice_ops(&p, &t).unwrap();
        assert!(ops.meet.approx_eq(&p, &t));
        assert!(ops.join.approx_eq(&p, &t));
        assert!(ops.complement.approx_eq(&Projection::rank_one(&CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0)
        ]))
        .unwrap(), &t));
    }

    #[test]
    fn join_of_orthogonal_is_sum() {
        let t = tols();
        let p = Projection::basis(3, 0);
        let q = Projection::basis(3, 2);
        let join = p.join(&q, &t).unwrap();
        let sum = Projection::orthogonal_sum(3, [&p, &q]);
        assert!(join.approx_eq(&sum, &t));
        assert_eq!(join.rank(), 2);
    }

    #[test]
    fn complement_is_exact_involution() {
        let p = plus();
        assert_eq!(p.complement().complement(), p);
    }

    #[test]
    fn projection_validation() {
        let t = tols();
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(matches!(Projection::new(half, &t), Err(Error::NotProjection { .. })));
        let p = Projection::new(plus().matrix().clone(), &t).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn density_state_validation() {
        let t = tols();
        assert!(DensityState::from_matrix(CMatrix::identity(2, 2), &t).is_err());
        let neg = HermitianMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(DensityState::new(neg, &t).is_err());
        let rho = DensityState::maximally_mixed(2);
        assert!((rho.probability(&Projection::basis(2, 0)) - 0.5).abs() < 1e-15);
        assert!(matches!(DensityState::mix(1.5, &rho, &rho), Err(Error::BadCoefficient(_))));
    }

    #[test]
    fn tolerances_validate() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances {
            tol_eig_group: 1e-12,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn matrix_json_rejects_ragged_rows() {
        let json = MatrixJson(vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0]]]);
        assert!(json.to_matrix().is_err());
    }
}
