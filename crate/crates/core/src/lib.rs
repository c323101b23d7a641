//! Horizontal road alignment optimization inside a terrain corridor.
//!
//! The outer problem moves intersection points and curve radii of a
//! tangent/arc alignment with a derivative-free pattern search. Each
//! candidate is checked against the explicit constraints and, when feasible,
//! priced by the optimal earthwork cost of its best vertical profile, found
//! by a linear program.

pub mod bench;
pub mod bilevel;
pub mod dfo;
pub mod feasibility;
pub mod geometry;
pub mod point;
pub mod render;
pub mod synth;
pub mod terrain;
pub mod valign;

pub use point::Point;
pub use terrain::{load_corridor, Corridor};
