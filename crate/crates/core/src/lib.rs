//! Programming by example. Test cases in, dataflow programs out.
//!
//! A source file lists programs as input/output cases. [`synthesis::synthesize`]
//! searches a value space built from the inputs for instruction graphs that
//! reproduce every case, [`vm::execute`] runs the result and [`registry`]
//! stores it so later programs can call it.

pub mod values;
pub mod parser;
pub mod vm;
pub mod registry;
pub mod blackboard;
pub mod synthesis;
pub mod cli;
