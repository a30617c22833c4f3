//! Generalized martingale differences `Δ_i` indexed by families `(T_i, ∂T_i)`,
//! with square and maximal functions, `H¹`/`H^p` and `BMO` norms.

mod family;
mod norms;

pub use family::{
    double_difference_four_term, double_family, family_differences, linear_family, mlast_family, require_valid,
    reversed_family, validate_family, DifferenceFamily, DifferenceSet, FamilyItem, FAMILY_GUARD,
};
pub use norms::{
    bmo_norm, h1_norm, hp_norm, lepingle_check, square_and_maximal, square_function, LepingleReport,
    SquareMaximal,
};
