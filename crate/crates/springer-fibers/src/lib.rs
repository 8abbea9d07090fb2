//! Irreducible components of two-row Springer fibers.
//!
//! Nilpotent endomorphisms with two Jordan blocks (types A and D) have
//! Springer fibers whose irreducible components are indexed by cup
//! diagrams.  This crate provides:
//!
//! * crossingless (marked) cup diagram combinatorics, including the
//!   folding of symmetric type-A diagrams into marked half-diagrams and
//!   its inverse relation ([`diagram`]);
//! * cyclic quiver representations with framing, their admissibility and
//!   stability conditions, the diagram-indexed component membership tests,
//!   the reflection involution on representations, and the enlarged
//!   representation used to translate quiver data into flags ([`quiver`]);
//! * complete flags, nilpotent endomorphisms in two-block Jordan form,
//!   the bilinear form defining the type-D flag variety, and the
//!   diagram-imposed relations cutting out each component ([`flag`]);
//! * explicit parametrisations of components as iterated projective-line
//!   bundles ([`bundle`]);
//! * a finite-field brute-force oracle enumerating entire Springer fibers
//!   and decomposing them into components ([`oracle`]);
//! * JSON serialisation of the main objects ([`json`]).

pub mod bundle;
pub mod diagram;
pub mod flag;
pub mod json;
pub mod oracle;
pub mod quiver;
