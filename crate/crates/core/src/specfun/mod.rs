//! Special functions used by the capacity formulas: Gamma, the upper
//! incomplete Gamma function for arbitrary real shape, the modified Bessel
//! function of the second kind of real order, and both real branches of
//! Lambert-W. All functions are pure.

mod bessel;
mod gamma;
mod incgamma;
mod lambert;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use gamma::{gamma, ln_gamma};
pub use incgamma::upper_inc_gamma;
pub use lambert::{lambert_w, Branch};
