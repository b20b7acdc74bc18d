//! Batch front end for the workbench: scenario files drive the core
//! library, randomized corpora exercise the inequality suites, and the
//! transversality audit turns curvature integrals into verdicts.

pub mod corpus;
pub mod runner;
pub mod scenario;
pub mod transversality;
