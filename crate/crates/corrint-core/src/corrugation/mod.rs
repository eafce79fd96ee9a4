//! Bessel functions, the inversion profile `f`, and the corrugation `Γ`.

pub mod bessel;
pub mod gamma;
pub mod profile;
pub mod table;

pub use bessel::{bessel_j, mu};
pub use gamma::{gamma, gamma_ds, gamma_dsdt, gamma_dt};
pub use profile::{fprime_bound, profile_f, profile_f_prime};
pub use table::{CorrugationProfile, GammaJet};
