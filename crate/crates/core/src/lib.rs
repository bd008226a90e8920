//! Tri-hybrid MIMO simulation library.
//!
//! Models a transmitter that stacks digital, analog, and
//! reconfigurable-antenna precoding, with interchangeable electromagnetic
//! front ends behind one contract:
//!
//! - [`parasitic`] — load-tuned parasitic arrays over mutual-impedance blocks
//! - [`pixel`] — pixel/port state selection with per-state efficiencies
//! - [`dma`] — waveguide-fed metasurface slots with Lorentzian weights
//! - [`polarization`] — per-antenna polarization states over unpolarized channels
//! - [`sim`] — stacked metasurface layers cascaded via transfer scattering parameters
//! - [`pass`] — pinched-waveguide couplers with sequential amplitude decay
//! - [`wire`] — periodically fed non-radiating wires with load-based field shaping
//!
//! [`model`] holds the generic signal model and objectives, [`optim`] the
//! configuration algorithms, and [`ref_metric`] the reconfigurability
//! efficiency factor used to compare designs.

pub mod dma;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod parasitic;
pub mod pass;
pub mod pixel;
pub mod polarization;
pub mod ref_metric;
pub mod sim;
pub mod special;
pub mod wire;

pub use error::{Error, Result};
