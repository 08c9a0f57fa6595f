//! Shared test helpers: the full-Hilbert-space oracle and the N = 50
//! reference tables.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use spinweave::{ChainParameters, CouplingDistribution, EcdFile};

pub const TABLE_KAPPAS: [(&str, f64, f64); 6] = [
    ("half", 0.5, 0.9557),
    ("1", 1.0, 0.9531),
    ("2", 2.0, 0.9550),
    ("3", 3.0, 0.9564),
    ("4", 4.0, 0.9530),
    ("5", 5.0, 0.9573),
];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Reference chain for `κ` given by its file tag (`half`, `1`, ... `5`).
pub fn table_ecd(tag: &str) -> EcdFile {
    EcdFile::read(data_path(&format!("table_n50_kappa_{tag}.csv"))).expect("reference table")
}

/// Sparse action of the full `2^N` XXZ Hamiltonian, built spin by spin from
/// the Pauli operators. Bit `i` set means spin `i` up.
pub struct FullHamiltonian {
    n_sites: usize,
    couplings: Vec<f64>,
    anisotropy: f64,
    factor: f64,
}

impl FullHamiltonian {
    pub fn new(params: &ChainParameters, ecd: &CouplingDistribution) -> Self {
        Self {
            n_sites: params.n_sites(),
            couplings: ecd.couplings().to_vec(),
            anisotropy: params.anisotropy(),
            factor: params.scale().factor(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// `H|state⟩` as (target, amplitude) pairs.
    pub fn column(&self, state: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut diagonal = 0.0;
        for (i, &j) in self.couplings.iter().enumerate() {
            let a = (state >> i) & 1;
            let b = (state >> (i + 1)) & 1;
            // σz σz: +1 for parallel spins, -1 for antiparallel.
            let zz = if a == b { 1.0 } else { -1.0 };
            diagonal += -self.factor * j * self.anisotropy * zz;
            if a != b {
                // σx σx + σy σy exchanges antiparallel neighbours with weight 2.
                let flipped = state ^ (1 << i) ^ (1 << (i + 1));
                out.push((flipped, -self.factor * j * 2.0));
            }
        }
        out.push((state, diagonal));
        out
    }

    fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (state, &amp) in psi.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (target, h) in self.column(state) {
                out[target] += h * amp;
            }
        }
        out
    }

    fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|s| self.column(s).iter().map(|(_, h)| h.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(-iHt) psi` by Taylor series over substeps with `‖H‖ dt ≤ 1/2`.
    pub fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let steps = ((self.norm_bound() * t.abs()) / 0.5).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut state = psi.to_vec();
        for _ in 0..steps {
            let mut term = state.clone();
            let mut sum = state.clone();
            for k in 1..60 {
                let h_term = self.apply(&term);
                let coef = Complex64::new(0.0, -dt / k as f64);
                term = h_term.into_iter().map(|x| x * coef).collect();
                let size: f64 = term.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                for (s, t) in sum.iter_mut().zip(&term) {
                    *s += t;
                }
                if size < 1e-20 {
                    break;
                }
            }
            state = sum;
        }
        state
    }

    /// `|⟨N|U(t)|1⟩|²` with the excitation starting on the first spin.
    pub fn transferred_population(&self, t: f64) -> f64 {
        let mut psi = vec![Complex64::new(0.0, 0.0); self.dim()];
        psi[1] = Complex64::new(1.0, 0.0);
        let out = self.evolve(&psi, t);
        out[1 << (self.n_sites - 1)].norm_sqr()
    }

    /// Dense one-excitation block, rows and columns ordered by site.
    pub fn one_excitation_block(&self) -> Vec<Vec<f64>> {
        let n = self.n_sites;
        let mut block = vec![vec![0.0; n]; n];
        for col in 0..n {
            for (target, h) in self.column(1 << col) {
                let row = target.trailing_zeros() as usize;
                assert_eq!(target.count_ones(), 1, "magnetization is conserved");
                block[row][col] += h;
            }
        }
        block
    }
}
