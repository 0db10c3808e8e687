//! Extended-real convex calculus: compact convex sets with their support
//! functions, convex functions with closed-form conjugates, and grid-based
//! numeric transforms used as oracles.

mod ext_real;
mod function;
mod numeric;
pub(crate) mod set;

pub use ext_real::ExtReal;
pub use function::{ConvexFn, FnKind, CONJ_TOL};
pub use numeric::{
    fenchel_residual, infconv_numeric, lf_numeric, support_attainment_residual, GridSpec,
    MEMBERSHIP_TOL,
};
pub use set::{ConvexSet, SetKind, TIE_TOL};
