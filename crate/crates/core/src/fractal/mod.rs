//! IFS fractals, mass functions and devil's staircases.

pub mod ifs;
pub mod koch_boundary;
pub mod staircase;

pub use ifs::{
    hutchinson_iterate, koch_ifs, mass_function, unit_initiator, FractalCurve, IfsDocument, IfsMap, IfsSpec,
    MapDocument, Point, CHAIN_TOLERANCE, DEFAULT_SEGMENT_CAP, MASS_TOLERANCE,
};
pub use koch_boundary::{quadratic_koch_boundary, KochBoundary, Square};
pub use staircase::{
    staircase_from_cantor, staircase_from_curve, CantorSeed, Cell, Location, SeedDescriptor, Staircase,
    DEFAULT_TABLE_CAP, MAX_LEVEL,
};
