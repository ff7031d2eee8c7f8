//! Synthetic scan and sketch generation from boundary representations, with
//! BRep annotation transfer and annotation-quality metrics.

pub mod annot;
pub mod fixtures;
pub mod brep;
pub mod eval;
pub mod geom;
pub mod mesh;
pub mod par;
pub mod rng;
pub mod scan;
pub mod sketch;
