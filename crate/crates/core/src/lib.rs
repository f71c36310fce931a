//! The spectral presheaf of a finite-dimensional matrix algebra.
//!
//! Contexts (commutative subalgebras) are described by their minimal
//! projections and ordered by inclusion. Projections daseinise to clopen
//! subobjects, density states induce measures on those subobjects, and
//! abstract measures can be turned back into states.
//!
//! ```
//! use specsheaf_core::{Caps, ClopenSubobject, ContextPoset, DensityState, HermitianMatrix, Measure, Projection, Tolerances};
//!
//! let tols = Tolerances::default();
//! let gens = vec![
//!     vec![HermitianMatrix::from_real_diagonal(&[1.0, 2.0, 3.0])],
//!     vec![HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 2.0])],
//! ];
//! let poset = ContextPoset::build(&gens, false, &tols, &Caps::default()).unwrap();
//! let rho = DensityState::maximally_mixed(3);
//! let mu = Measure::from_state(&rho, &poset).unwrap();
//! let s = ClopenSubobject::daseinise(&Projection::basis(3, 0), &poset, &tols).unwrap();
//! let values = mu.evaluate(&s).unwrap();
//! assert!(values.values().iter().all(|&v| v >= 1.0 / 3.0 - 1e-12));
//! ```

pub mod context;
pub mod error;
pub mod families;
pub mod linalg;
pub mod logic;
pub mod measure;
pub mod presheaf;
pub mod reconstruct;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod subobject;

pub use context::{Caps, Context, ContextId, ContextPoset, PosetJson};
pub use error::{Error, Result};
pub use linalg::{
    spectral_decompose, CMatrix, CVector, DensityState, Eigenspace, HermitianMatrix, MatrixJson, Projection,
    Tolerances, C64,
};
pub use logic::{
    check_minimality, expectation_via_measure, global_section_search, pseudo_state, ExpectationReport,
    GlobalSectionCandidate, PseudoState, SearchCertificate, SearchResult,
};
pub use measure::{
    check_axioms, check_local_sigma_additivity, evaluate_measure, measure_from_state, AxiomReport, Measure,
    OrderReversingFunction,
};
pub use presheaf::{alpha, alpha_inverse, ClopenSubset, SpectralElement, SpectralSet};
pub use reconstruct::{default_frame, extract_m, reconstruct_state, verify_well_definedness, ProjectionMeasure};
pub use scenario::Scenario;
pub use subobject::{ClopenSubobject, SubobjectJson, SubobjectKey};
