//! XXZ chain model restricted to the one-excitation sector.
//!
//! The chain Hamiltonian is
//!
//! ```text
//! H = -s * Σ_i J_i (σx_i σx_{i+1} + σy_i σy_{i+1} + Δ σz_i σz_{i+1})
//! ```
//!
//! where `s` is the [`EnergyScale`] factor. In the basis `|j⟩` (only spin `j`
//! up) it becomes a real symmetric tridiagonal matrix with hopping
//! `-2 s J_i` and on-site energies `-s Δ (S - 2 (J_{j-1} + J_j))`,
//! `S = Σ J_i`, `J_0 = J_N = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Overall energy (equivalently time) unit of the chain Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyScale {
    /// Hopping amplitude `-J_i` between neighbouring sites. The published
    /// N = 50 coupling tables and the `π/2` perfect-transfer time of the
    /// `√(i(N-i))` XX chain are stated in this unit.
    #[default]
    Hopping,
    /// Literal Pauli-matrix form: hopping amplitude `-2 J_i`.
    Pauli,
}

impl EnergyScale {
    /// Multiplier applied to the Pauli-matrix form of the Hamiltonian.
    pub fn factor(self) -> f64 {
        match self {
            EnergyScale::Hopping => 0.5,
            EnergyScale::Pauli => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnergyScale::Hopping => "hopping",
            EnergyScale::Pauli => "pauli",
        }
    }
}

/// Chain length and anisotropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParameters {
    n_sites: usize,
    anisotropy: f64,
    scale: EnergyScale,
}

impl ChainParameters {
    pub fn new(n_sites: usize, anisotropy: f64) -> Result<Self> {
        Self::with_scale(n_sites, anisotropy, EnergyScale::default())
    }

    pub fn with_scale(n_sites: usize, anisotropy: f64, scale: EnergyScale) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::TooFewSites(n_sites));
        }
        Error::check_finite("anisotropy", anisotropy)?;
        Ok(Self {
            n_sites,
            anisotropy,
            scale,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn anisotropy(&self) -> f64 {
        self.anisotropy
    }

    pub fn scale(&self) -> EnergyScale {
        self.scale
    }

    pub fn n_couplings(&self) -> usize {
        self.n_sites - 1
    }
}

/// Number of free couplings: `⌈(N-1)/2⌉` under centro-symmetry, `N-1` otherwise.
pub fn free_dimension(n_sites: usize, centro_symmetric: bool) -> usize {
    let couplings = n_sites.saturating_sub(1);
    if centro_symmetric {
        couplings.div_ceil(2)
    } else {
        couplings
    }
}

/// Exchange coupling distribution `J_1..J_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDistribution {
    couplings: Vec<f64>,
    centro_symmetric: bool,
}

impl CouplingDistribution {
    /// A general distribution; at least one coupling is required.
    pub fn new(couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::TooFewSites(1));
        }
        for &j in &couplings {
            Error::check_finite("coupling", j)?;
        }
        Ok(Self {
            couplings,
            centro_symmetric: false,
        })
    }

    /// Mirror `free` (the first `⌈(N-1)/2⌉` couplings) into a centro-symmetric
    /// distribution with `J_{N-i} = J_i`.
    pub fn centro_symmetric(free: &[f64], n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::TooFewSites(n_sites));
        }
        let expected = free_dimension(n_sites, true);
        if free.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: free.len(),
            });
        }
        for &j in free {
            Error::check_finite("coupling", j)?;
        }
        let n_couplings = n_sites - 1;
        let couplings = (0..n_couplings)
            .map(|i| free[i.min(n_couplings - 1 - i)])
            .collect();
        Ok(Self {
            couplings,
            centro_symmetric: true,
        })
    }

    /// Build from free parameters in either mode.
    pub fn from_free(free: &[f64], n_sites: usize, centro_symmetric: bool) -> Result<Self> {
        if centro_symmetric {
            Self::centro_symmetric(free, n_sites)
        } else {
            let expected = n_sites.saturating_sub(1);
            if free.len() != expected {
                return Err(Error::LengthMismatch {
                    expected,
                    actual: free.len(),
                });
            }
            Self::new(free.to_vec())
        }
    }

    pub fn uniform(n_sites: usize, value: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::TooFewSites(n_sites));
        }
        Self::centro_symmetric(&vec![value; free_dimension(n_sites, true)], n_sites)
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn is_centro_symmetric(&self) -> bool {
        self.centro_symmetric
    }

    /// The independent values: the first half for centro-symmetric chains,
    /// all couplings otherwise.
    pub fn free_values(&self) -> &[f64] {
        let m = free_dimension(self.n_sites(), self.centro_symmetric);
        &self.couplings[..m]
    }

    pub fn max_coupling(&self) -> f64 {
        self.couplings.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Real symmetric tridiagonal one-excitation Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationHamiltonian {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl SingleExcitationHamiltonian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Dense row-major copy, mostly for checks.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut dense = vec![0.0; n * n];
        for (i, &d) in self.diagonal.iter().enumerate() {
            dense[i * n + i] = d;
        }
        for (i, &h) in self.off_diagonal.iter().enumerate() {
            dense[i * n + i + 1] = h;
            dense[(i + 1) * n + i] = h;
        }
        dense
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.diagonal
            .iter()
            .chain(&self.off_diagonal)
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Project the XXZ Hamiltonian onto the one-excitation basis.
pub fn project_hamiltonian(
    params: &ChainParameters,
    ecd: &CouplingDistribution,
) -> Result<SingleExcitationHamiltonian> {
    let expected = params.n_couplings();
    if ecd.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: ecd.len(),
        });
    }
    let s = params.scale().factor();
    let delta = params.anisotropy();
    let j = ecd.couplings();
    let total: f64 = j.iter().sum();
    let n = params.n_sites();

    let diagonal = (0..n)
        .map(|site| {
            let left = if site > 0 { j[site - 1] } else { 0.0 };
            let right = if site < n - 1 { j[site] } else { 0.0 };
            -s * delta * (total - 2.0 * (left + right))
        })
        .collect();
    let off_diagonal = j.iter().map(|&jj| -2.0 * s * jj).collect();
    Ok(SingleExcitationHamiltonian {
        diagonal,
        off_diagonal,
    })
}

/// Fidelity averaged over input states, `√P/3 + P/6 + 1/2`.
pub fn averaged_fidelity(p: f64) -> Result<f64> {
    Error::check_unit("population", p)?;
    Ok(p.sqrt() / 3.0 + p / 6.0 + 0.5)
}

pub(crate) const NORMALIZATION_TOLERANCE: f64 = 1e-8;

pub(crate) fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite())
        || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE
    {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// `1 / Σ p_m²` for a normalized probability vector.
pub fn inverse_participation_ratio(probabilities: &[f64]) -> Result<f64> {
    check_distribution(probabilities)?;
    let sq: f64 = probabilities.iter().map(|p| p * p).sum();
    Ok(1.0 / sq)
}

/// Transferred population bound `P (1 - η)` for an initial state of purity
/// defect `η`.
pub fn almost_pure_bound(p: f64, eta: f64) -> Result<f64> {
    Error::check_unit("population", p)?;
    Error::check_unit("eta", eta)?;
    Ok(p * (1.0 - eta))
}
