pub mod oracle;
pub mod spectral;
pub mod trace;

pub use oracle::{EchoOperators, EchoOracle, ORACLE_SPIN_LIMIT};
pub use spectral::{log_times, uniform_times, SpectralEcho};
pub use trace::{run_fidelity, EchoSystem, EnsembleTrace, FidelityTrace};
