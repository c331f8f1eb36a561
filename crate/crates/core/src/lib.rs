pub mod checkpoint;
pub mod cli;
pub mod cps;
pub mod error;
pub mod lang;
pub mod preprocess;
pub mod runtime;
pub mod search;
