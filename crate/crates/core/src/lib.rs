//! Deep processing of Japanese at desk scale: a typed feature structure
//! engine, an HPSG-style grammar fragment with Minimal Recursion Semantics,
//! a segmenting front end, an agenda chart parser and a profiling harness.

pub mod fragment;
pub mod grammar;
pub mod harness;
pub mod mrs;
pub mod parser;
pub mod preproc;
pub mod tfs;
