pub mod analysis;
pub mod cfg;
pub mod constructs;
pub mod corpus;
pub mod dynamics;
pub mod report;
pub mod scoring;
pub mod stats;
pub mod syntax;
