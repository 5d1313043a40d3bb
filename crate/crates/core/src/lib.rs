pub mod constraint;
pub mod field;
pub mod geometry;
pub mod perturbation;
pub mod quadrature;
pub mod solver;
pub mod state;
pub mod waves;
