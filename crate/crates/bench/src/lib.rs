//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specsheaf_core::families::{cabello_18, frame_contexts, standard_basis_context};
use specsheaf_core::{sampling, Caps, ContextPoset, DensityState, Projection, Tolerances};

pub struct Fixture {
    pub poset: ContextPoset,
    pub state: DensityState,
    pub projections: Vec<Projection>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random poset of roughly `contexts` contexts with a random state and a few
/// random projections.
pub fn random_fixture(dim: usize, contexts: usize, seed: u64) -> Fixture {
    let mut rng = rng(seed);
    let t = Tolerances::default();
    let poset = sampling::random_poset(&mut rng, dim, contexts / 2, contexts, &[], &t).expect("poset fits");
    let state = sampling::density(&mut rng, dim);
    let projections = (1..dim).map(|r| sampling::projection(&mut rng, dim, r)).collect();
    Fixture { poset, state, projections }
}

/// Frame contexts plus the standard basis; reconstruction works on these.
pub fn frame_fixture(dim: usize, seed: u64) -> Fixture {
    let mut rng = rng(seed);
    let t = Tolerances::default();
    let mut contexts = frame_contexts(dim, &t).expect("frame");
    contexts.push(standard_basis_context(dim).expect("basis"));
    let poset = ContextPoset::from_contexts(contexts, false, &t, &Caps::default()).expect("poset");
    Fixture {
        poset,
        state: sampling::density(&mut rng, dim),
        projections: specsheaf_core::default_frame(dim),
    }
}

pub fn ks_poset() -> ContextPoset {
    let t = Tolerances::default();
    let contexts = cabello_18().contexts(&t).expect("asset contexts");
    ContextPoset::from_contexts(contexts, true, &t, &Caps::default()).expect("KS poset")
}
