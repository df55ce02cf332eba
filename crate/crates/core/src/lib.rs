//! Design automation for cluster supercomputers and data centres.
//!
//! The crate covers the whole flow: enumerating compute-node configurations
//! from component databases, pruning and ranking them, sizing the machine
//! against a performance target, designing the fat-tree network and UPS,
//! placing equipment into racks and onto the floor, routing cables and
//! computing lifecycle economics. [`dsl`] ties the steps together as a
//! script interpreter and [`report`] writes the documentation.

pub mod dsl;
pub mod econ;
pub mod expr;
pub mod graph;
pub mod layout;
pub mod net;
pub mod par;
pub mod perf;
pub mod report;
pub mod space;
pub mod ups;
