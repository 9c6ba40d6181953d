//! Declarative network files and the command pipeline behind the `gasnet`
//! binary: parse a network description, construct and interconnect the
//! component models, run the requested analyses and emit CSV/JSON results.

pub mod build;
pub mod format;
pub mod report;
pub mod run;

pub use build::{build_network, BuildError, BuiltNetwork};
pub use format::{parse_network, serialize_network, FormatError, NetworkFile};
pub use report::{AnalysisReport, RunReport};
pub use run::{run, Command, RunOptions};
