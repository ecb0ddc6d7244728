//! Differentiable variable-font outlines: parsing, interpolation, Jacobians,
//! energy minimization, collision handling, simulation and rasterization.

pub mod collide;
pub mod diff;
pub mod energy;
pub mod font;
pub mod geom;
pub mod interp;
pub mod raster;
pub mod sim;
pub mod solve;
