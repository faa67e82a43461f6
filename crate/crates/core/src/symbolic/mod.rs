//! Exact angle dynamics of `m_{−d}`, Markov itineraries, the circle
//! conjugacy `𝓔_d`, and rational laminations.

mod angle;
mod coding;
mod lamination;

pub use angle::{md_step, periodic_angles, periodic_cycles, ParseAngleError, RationalAngle};
pub use coding::{
    circle_dist, eval_e, eval_e_inverse, itinerary_md, itinerary_rho, md_piece, CircleCoding, CodingError, EInverse,
    EValue, Itinerary, FIXED_POINT_SNAP,
};
pub use lamination::{
    co_landing_cycles, compare_laminations, cusp_angles, lamination_antipoly, lamination_from_generators,
    lamination_group, lamination_sigma, linked, step_class, two_cycle_in, Class, CompareMode, CompareReport,
    Lamination, LaminationError, CO_LANDING_TOL, DEFAULT_DEPTH, SEPARATION_TOL,
};
