//! Reference computations that share no code path with the channel solver.

mod junction;
mod opaque;
mod perturbative;
mod static_coulomb;
mod static_rect;
mod wkb;

pub use junction::{quivering_rectangular, BesselMatchSolution, CONDITION_LIMIT, EXTRA_ORDERS};
pub use opaque::{opaque_barrier, OpaqueSideband};
pub use perturbative::{perturbative_sidebands, transparent_current_ratio, BarrierRegime, SidebandEstimate};
pub use static_coulomb::{static_coulomb, StaticCoulombResult};
pub use static_rect::{static_rectangular, StaticRectResult};
pub use wkb::{wkb_gamow, GamowExponent};
