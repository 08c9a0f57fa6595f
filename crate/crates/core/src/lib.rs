//! Design and analysis of exchange-coupling distributions for pretty-good
//! quantum state transfer on XXZ spin chains.
//!
//! * [`chain`]: the one-excitation Hamiltonian and scalar figures of merit.
//! * [`spectral`]: tridiagonal eigensolver and the propagator built on it.
//! * [`optimizer`]: pivot-method search inside growing hypercubes.
//! * [`disorder`]: static coupling disorder and its statistics.
//! * [`analysis`]: `J_min` studies, exponential fits, peaks, divergences.

pub mod analysis;
pub mod chain;
pub mod disorder;
pub mod ecd_file;
pub mod error;
pub mod optimizer;
pub mod rng;
pub mod spectral;

pub use chain::{
    almost_pure_bound, averaged_fidelity, inverse_participation_ratio, project_hamiltonian,
    ChainParameters, CouplingDistribution, EnergyScale, SingleExcitationHamiltonian,
};
pub use ecd_file::EcdFile;
pub use error::{Error, Result};
pub use spectral::{eigendecompose, endpoint_spectrum, SpectralDecomposition, TransferSpectrum};

/// Full spectral decomposition of a chain.
pub fn chain_spectrum(params: &ChainParameters, ecd: &CouplingDistribution) -> Result<SpectralDecomposition> {
    eigendecompose(&project_hamiltonian(params, ecd)?)
}

/// `P(t)` for a chain, through the end-site spectrum.
pub fn transferred_population(params: &ChainParameters, ecd: &CouplingDistribution, t: f64) -> Result<f64> {
    error::Error::check_finite("time", t)?;
    Ok(endpoint_spectrum(&project_hamiltonian(params, ecd)?)?.transferred_population(t))
}
