//! One function per subcommand. Each takes the resolved configuration and
//! the output directory and returns a short summary for the terminal.

mod analyze;
mod estimate;
mod instrument;
mod prepare;
mod simulate;

pub use analyze::{irf, report};
pub use estimate::{estimate, ChainSummary};
pub use instrument::build_instrument;
pub use prepare::prepare_data;
pub use simulate::{simulate, Truth};
