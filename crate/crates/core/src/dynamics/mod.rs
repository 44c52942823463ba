//! The Anzai skew product `T(x, y) = (x + α, y + φ(x))` on the 2-torus:
//! Birkhoff sums, the rigidity times `r_n = ℓ_n q_n` and the distances of
//! `T^{r_n}` from the identity.
//!
//! All `L²` quantities are taken against Lebesgue measure in `x`, the only
//! possible `x`-marginal of an invariant measure.

mod birkhoff;
mod observable;
mod rigidity;

pub(crate) use birkhoff::geometric_ratio;
pub use birkhoff::{apply, birkhoff_direct, birkhoff_fourier, equidistribution_check, BirkhoffProfile, EquidistributionReport};
pub use observable::{parse_real, Envelope, FourierObservable, Psi};
pub use rigidity::{
    build_rigidity_sequence, character_displacement_sq, choose_ell, choose_ell_general, pr_rigidity_check, rigidity_indices,
    rigidity_l2_direct, rigidity_l2_hat, rigidity_sup, EllChoice, EllRule, GridValue, L2Hat, PrRow, RigidityConfig, RigidityEntry,
    SupValue,
};
