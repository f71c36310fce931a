//! Random states, operators, contexts and subobjects for tests and benches.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::context::{Context, ContextPoset};
use crate::linalg::{CMatrix, CVector, DensityState, HermitianMatrix, Projection, Tolerances, C64};
use crate::presheaf::SpectralSet;
use crate::subobject::ClopenSubobject;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Haar-random unitary, from the QR decomposition of a Ginibre matrix with
/// the phases of `R`'s diagonal absorbed.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim, dim).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix of the given rank (`G G† / tr`).
pub fn density_of_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityState {
    let g = ginibre(rng, dim, rank.max(1));
    let m = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
    let m = m.unscale(tr);
    let m = (&m + m.adjoint()).scale(0.5);
    DensityState::from_matrix(m, &Tolerances::default()).expect("Ginibre states are valid")
}

/// Random density matrix of random rank.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityState {
    let rank = rng.random_range(1..=dim);
    density_of_rank(rng, dim, rank)
}

/// Hermitian matrix with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    let g = ginibre(rng, dim, dim);
    HermitianMatrix::new((&g + g.adjoint()).scale(0.5), &Tolerances::default()).expect("symmetrised")
}

/// Hermitian matrix with a random eigenbasis and small-integer eigenvalues,
/// so that degeneracies occur.
pub fn degenerate_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    let u = unitary(rng, dim);
    let d = CMatrix::from_diagonal(&CVector::from_fn(dim, |_, _| C64::new(rng.random_range(-2..=2) as f64, 0.0)));
    let m = &u * d * u.adjoint();
    HermitianMatrix::new((&m + m.adjoint()).scale(0.5), &Tolerances::default()).expect("symmetrised")
}

/// Random projection of the given rank.
pub fn projection<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Projection {
    let u = unitary(rng, dim);
    let mut p = CMatrix::zeros(dim, dim);
    for k in 0..rank {
        let c = u.column(k);
        p += c * c.adjoint();
    }
    Projection::new(p, &Tolerances::default()).expect("orthonormal columns")
}

/// Maximal context of a Haar-random orthonormal basis.
pub fn basis_context<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Context {
    let u = unitary(rng, dim);
    let minimals = (0..dim)
        .map(|k| Projection::rank_one(&u.column(k).into_owned()).expect("unit column"))
        .collect();
    Context::from_minimals(minimals, &Tolerances::default()).expect("orthonormal basis")
}

/// Coarsening of `ctx` obtained by merging its minimals along a random
/// partition into `blocks` parts (at least two).
pub fn coarsening<R: Rng + ?Sized>(rng: &mut R, ctx: &Context, blocks: usize) -> Option<Context> {
    let n = ctx.len();
    let blocks = blocks.clamp(2, n);
    let mut labels: Vec<usize> = (0..n).map(|i| i % blocks).collect();
    labels.shuffle(rng);
    let parts = (0..blocks)
        .map(|b| {
            let members: SpectralSet = (0..n).filter(|&i| labels[i] == b).collect();
            ctx.projection_of(members)
        })
        .collect();
    Context::from_minimals(parts, &Tolerances::default()).ok()
}

fn unit_vector_of(p: &Projection) -> CVector {
    let m = p.matrix();
    let col = (0..m.ncols())
        .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
        .expect("non-empty matrix");
    let v = m.column(col).into_owned();
    let n = v.norm();
    v.unscale(n)
}

/// A maximal context sharing all but two rays with `ctx` (whose minimals must
/// all be rank one); the remaining two are rotated by a random 2×2 unitary.
pub fn related_basis<R: Rng + ?Sized>(rng: &mut R, ctx: &Context) -> Option<Context> {
    let n = ctx.len();
    if n < 2 || ctx.minimals().iter().any(|p| p.rank() != 1) {
        return None;
    }
    let mut vectors: Vec<CVector> = ctx.minimals().iter().map(unit_vector_of).collect();
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n)) % n;
    let u = unitary(rng, 2);
    let (a, b) = (vectors[i].clone(), vectors[j].clone());
    vectors[i] = &a * u[(0, 0)] + &b * u[(1, 0)];
    vectors[j] = &a * u[(0, 1)] + &b * u[(1, 1)];
    let minimals = vectors
        .iter()
        .map(|v| Projection::rank_one(v).expect("unit vector"))
        .collect();
    Context::from_minimals(minimals, &Tolerances::default()).ok()
}

/// A poset with between `min` and `max` contexts (closure included), built
/// from random bases, bases related to earlier ones, and all coarsenings.
/// `extra` contexts are always included. Returns `None` if `max` cannot be met.
pub fn random_poset<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    min: usize,
    max: usize,
    extra: &[Context],
    tols: &Tolerances,
) -> Option<ContextPoset> {
    let caps = crate::context::Caps {
        max_contexts: max.max(1) * 4,
        ..Default::default()
    };
    let target = rng.random_range(min..=max);
    let mut bases: Vec<Context> = Vec::new();
    let mut contexts: Vec<Context> = extra.to_vec();
    let mut best: Option<ContextPoset> = if contexts.is_empty() {
        None
    } else {
        ContextPoset::from_contexts(contexts.clone(), true, tols, &caps).ok()
    };
    for _ in 0..4 * max {
        if best.as_ref().is_some_and(|p| p.len() >= target) {
            break;
        }
        let basis = match bases.len() {
            0 => basis_context(rng, dim),
            k if rng.random_bool(0.5) => {
                let from = bases[rng.random_range(0..k)].clone();
                related_basis(rng, &from).unwrap_or_else(|| basis_context(rng, dim))
            }
            _ => basis_context(rng, dim),
        };
        let mut candidate = contexts.clone();
        candidate.extend(crate::families::coarsenings(&basis, tols).ok()?);
        candidate.push(basis.clone());
        let Ok(poset) = ContextPoset::from_contexts(candidate.clone(), true, tols, &caps) else {
            continue;
        };
        if poset.len() > max {
            continue;
        }
        bases.push(basis);
        contexts = candidate;
        best = Some(poset);
    }
    best.filter(|p| p.len() >= min.min(max))
}

/// A random clopen subobject: either a daseinised random projection or the
/// subobject generated by a sparse random seed.
pub fn subobject<R: Rng + ?Sized>(rng: &mut R, poset: &ContextPoset) -> ClopenSubobject {
    let dim = poset.dim();
    match rng.random_range(0..4) {
        0 => {
            // projection drawn from a context of the poset, so that daseinisation is exact there
            let k = rng.random_range(0..poset.len());
            let ctx = poset.context(k);
            let members = SpectralSet::from_bits(rng.random::<u64>() & ctx.full_set().bits());
            ClopenSubobject::daseinise(&ctx.projection_of(members), poset, &Tolerances::default())
                .expect("same dimension")
        }
        1 => {
            let rank = rng.random_range(1..=dim);
            ClopenSubobject::daseinise(&projection(rng, dim, rank), poset, &Tolerances::default())
                .expect("same dimension")
        }
        _ => {
            let seeds: Vec<SpectralSet> = (0..poset.len())
                .map(|k| {
                    if rng.random_bool(0.3) {
                        let len = poset.context(k).len();
                        SpectralSet::singleton(rng.random_range(0..len))
                    } else {
                        SpectralSet::empty()
                    }
                })
                .collect();
            ClopenSubobject::generated_by(poset, &seeds).expect("seeds in range")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = unitary(&mut rng, 4);
        let e = &u * u.adjoint() - CMatrix::identity(4, 4);
        assert!(e.norm() < 1e-12);
    }

    #[test]
    fn density_has_requested_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = density_of_rank(&mut rng, 4, 2);
        let positive = rho.as_hermitian().eigenvalues().iter().filter(|&&v| v > 1e-9).count();
        assert_eq!(positive, 2);
    }

    #[test]
    fn random_posets_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = Tolerances::default();
        for dim in 2..=4 {
            for _ in 0..3 {
                let p = random_poset(&mut rng, dim, 10, 60, &[], &t).unwrap();
                assert!((10..=60).contains(&p.len()), "dim {dim}: {}", p.len());
            }
        }
    }

    #[test]
    fn related_basis_shares_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = Tolerances::default();
        let a = basis_context(&mut rng, 4);
        let b = related_basis(&mut rng, &a).unwrap();
        let shared = a
            .minimals()
            .iter()
            .filter(|p| b.minimals().iter().any(|q| q.approx_eq(p, &t)))
            .count();
        assert_eq!(shared, 2);
        assert!(a.intersection(&b, &t).unwrap().is_some());
    }

    #[test]
    fn coarsening_is_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = Tolerances::default();
        let ctx = basis_context(&mut rng, 4);
        let coarse = coarsening(&mut rng, &ctx, 2).unwrap();
        assert_eq!(coarse.len(), 2);
        assert!(coarse.is_subcontext_of(&ctx, &t));
    }
}
