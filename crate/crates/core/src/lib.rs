//! Rank-two presemifields of order q^{2n} and the geometry of their
//! F_q-linear sets in PG(3,q^n).
//!
//! The crate builds spread sets from family constructors, computes isotopy
//! invariants (nuclei orders, weight spectra, long lines, pseudoregulus
//! classification, position relative to the hyperbolic quadric) and compares
//! a computed invariant signature against a catalog of published semifield
//! families to decide which families are excluded.

pub mod catalog;
pub mod error;
pub mod ffield;
pub mod linpoly;
pub mod linset;
pub mod presemifield;
pub mod signature;

pub use error::{Error, Result};
pub use ffield::{make_field, quad_ext, FieldCtx, FqnElem, QExtElem, QuadExtCtx};
pub use linpoly::LinearizedPoly;
pub use presemifield::{build_family, PresemifieldSpec, SpreadMap, SpreadSet};
pub use signature::{compute_signature, GeoSignature, SignatureOpts};
