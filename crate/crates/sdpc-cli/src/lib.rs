//! Library surface of the experiment CLI: results-file schema and figure
//! pivots, shared with the binary and the test suites.

pub mod plotdata;
pub mod results;
