pub mod cones;
pub mod duality;
pub mod error;
pub mod instances;
pub mod mip;
pub mod model;
pub mod solver;
pub mod structure;
