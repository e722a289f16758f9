//! Two-step nilpotent groups built from Clifford modules, certified checks of
//! the polycontact condition, and the Gaussian Szegő symbol of the
//! twisted-convolution calculus.
//!
//! ```
//! use polycontact::prelude::*;
//!
//! let quaternionic = build_htype(3, 1)?;
//! let cert = certify_polycontact(&quaternionic, &TolConfig::default())?;
//! assert_eq!(cert.verdict, Verdict::Certified);
//! # Ok::<(), polycontact::Error>(())
//! ```

pub mod clifford;
pub mod composition;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nilpotent;
pub mod pfaffian;
pub mod polycontact;
pub mod symbol;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::clifford::{build_clifford_rep, min_rep_dim, CliffordRep};
    pub use crate::composition::{Algebra, CompositionElement};
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{
        cayley_horizontality_residual, cayley_inverse, cayley_map, hypersurface_bracket, project_radially,
        sphere_distribution, DefiningFunction, Ellipsoid, PerturbedSphere, Sphere, SpherePoint,
    };
    pub use crate::nilpotent::{
        build_htype, darboux_basis, normalize_dim7, radical, GroupElement, SkewForm, TwoStepAlgebra,
    };
    pub use crate::pfaffian::{pfaffian_polynomial, PfaffianPoly};
    pub use crate::polycontact::{
        bracket_generating, certify_polycontact, cr_levi_signature, fatness_check, is_htype_with_metric,
        PolycontactCertificate, TolConfig, Verdict,
    };
    pub use crate::symbol::{
        compatible_complex_structure, fourier_symbol, symbol_sup_distance, szego_symbol_space, twisted_convolve,
        ComplexStructure, SymbolGrid,
    };
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/composition.md")]
    mod composition {}
    #[doc = include_str!("../../../book/src/two-step-groups.md")]
    mod two_step_groups {}
    #[doc = include_str!("../../../book/src/polycontact.md")]
    mod polycontact {}
    #[doc = include_str!("../../../book/src/dimension-seven.md")]
    mod dimension_seven {}
    #[doc = include_str!("../../../book/src/szego.md")]
    mod szego {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
