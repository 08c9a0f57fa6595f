//! Spectral decomposition of the one-excitation Hamiltonian and the
//! propagator `U(t) = exp(-iHt)` built from it.

use num_complex::Complex64;

use crate::chain::SingleExcitationHamiltonian;
use crate::error::{Error, Result};

const MAX_QL_ITERATIONS: usize = 60;

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
///
/// `rows` holds the rows of the eigenvector matrix that should be
/// accumulated; each starts as a row of the identity. Rows transform
/// independently, so callers may keep only the sites they need.
fn tridiagonal_ql(d: &mut [f64], off: &[f64], rows: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in rows.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn identity_rows(n: usize, sites: &[usize]) -> Vec<Vec<f64>> {
    sites
        .iter()
        .map(|&site| {
            let mut row = vec![0.0; n];
            row[site] = 1.0;
            row
        })
        .collect()
}

/// Anything that can report the end-to-end transferred population.
pub trait TransferSpectrum {
    fn n_sites(&self) -> usize;

    /// `P(t) = |⟨1|U(t)|N⟩|²`.
    fn transferred_population(&self, t: f64) -> f64;
}

fn endpoint_population(energies: &[f64], first: &[f64], last: &[f64], t: f64) -> f64 {
    if t == 0.0 {
        return if energies.len() == 1 { 1.0 } else { 0.0 };
    }
    let (mut re, mut im) = (0.0, 0.0);
    for ((&e, &a), &b) in energies.iter().zip(first).zip(last) {
        let w = a * b;
        let (sin, cos) = (e * t).sin_cos();
        re += w * cos;
        im -= w * sin;
    }
    (re * re + im * im).min(1.0)
}

/// Full eigen-decomposition `H = V diag(E) Vᵀ`, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Row-major; entry `(site, k)` is `⟨site|k⟩`.
    vectors: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `⟨site|k⟩`.
    pub fn component(&self, site: usize, k: usize) -> f64 {
        self.vectors[site * self.dim() + k]
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|site| self.component(site, k)).collect()
    }

    /// `max |H - V diag(E) Vᵀ|`.
    pub fn reconstruction_residual(&self, h: &SingleExcitationHamiltonian) -> f64 {
        let n = self.dim();
        let dense = h.to_dense();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n)
                    .map(|k| self.component(i, k) * self.eigenvalues[k] * self.component(j, k))
                    .sum();
                worst = worst.max((dense[i * n + j] - v).abs());
            }
        }
        worst
    }

    /// `max |VᵀV - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n)
                    .map(|site| self.component(site, a) * self.component(site, b))
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn check_site(&self, index: usize) -> Result<()> {
        if index < self.dim() {
            Ok(())
        } else {
            Err(Error::SiteIndex {
                index,
                n_sites: self.dim(),
            })
        }
    }

    /// `⟨m|U(t)|n⟩ = Σ_k ⟨m|k⟩⟨k|n⟩ e^{-i E_k t}` with zero-based sites.
    pub fn transfer_amplitude(&self, m: usize, n: usize, t: f64) -> Result<Complex64> {
        self.check_site(m)?;
        self.check_site(n)?;
        Error::check_finite("time", t)?;
        if t == 0.0 {
            return Ok(Complex64::new(if m == n { 1.0 } else { 0.0 }, 0.0));
        }
        let mut amp = Complex64::new(0.0, 0.0);
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let w = self.component(m, k) * self.component(n, k);
            amp += w * Complex64::from_polar(1.0, -e * t);
        }
        Ok(amp)
    }

    /// Matrix of `|⟨m|U(t)|n⟩|²`, row-major.
    pub fn site_population_matrix(&self, t: f64) -> Vec<Vec<f64>> {
        let n = self.dim();
        if t == 0.0 {
            return (0..n)
                .map(|m| (0..n).map(|site| if m == site { 1.0 } else { 0.0 }).collect())
                .collect();
        }
        let phases: Vec<(f64, f64)> = self
            .eigenvalues
            .iter()
            .map(|&e| {
                let (s, c) = (e * t).sin_cos();
                (c, s)
            })
            .collect();
        (0..n)
            .map(|m| {
                (0..n)
                    .map(|site| {
                        let (mut re, mut im) = (0.0, 0.0);
                        for (k, &(c, s)) in phases.iter().enumerate() {
                            let w = self.component(m, k) * self.component(site, k);
                            re += w * c;
                            im -= w * s;
                        }
                        re * re + im * im
                    })
                    .collect()
            })
            .collect()
    }

    pub fn endpoints(&self) -> EndpointSpectrum {
        let n = self.dim();
        EndpointSpectrum {
            eigenvalues: self.eigenvalues.clone(),
            first: (0..n).map(|k| self.component(0, k)).collect(),
            last: (0..n).map(|k| self.component(n - 1, k)).collect(),
        }
    }
}

impl TransferSpectrum for SpectralDecomposition {
    fn n_sites(&self) -> usize {
        self.dim()
    }

    fn transferred_population(&self, t: f64) -> f64 {
        let n = self.dim();
        let first: Vec<f64> = (0..n).map(|k| self.component(0, k)).collect();
        let last: Vec<f64> = (0..n).map(|k| self.component(n - 1, k)).collect();
        endpoint_population(&self.eigenvalues, &first, &last, t)
    }
}

/// Eigenvalues plus the first and last eigenvector components: everything
/// `P(t)` needs, at `O(N²)` cost.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointSpectrum {
    eigenvalues: Vec<f64>,
    first: Vec<f64>,
    last: Vec<f64>,
}

impl EndpointSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `|⟨1|k⟩|` and `|⟨N|k⟩|` pairs.
    pub fn end_weights(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.first.iter().zip(&self.last).map(|(a, b)| (a.abs(), b.abs()))
    }
}

impl TransferSpectrum for EndpointSpectrum {
    fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    fn transferred_population(&self, t: f64) -> f64 {
        endpoint_population(&self.eigenvalues, &self.first, &self.last, t)
    }
}

fn is_mirror_symmetric(h: &SingleExcitationHamiltonian) -> bool {
    let (d, e) = (&h.diagonal, &h.off_diagonal);
    d.iter().eq(d.iter().rev()) && e.iter().eq(e.iter().rev())
}

/// Unsorted eigenvalues and the eigenvector rows of the requested sites.
///
/// A mirror-symmetric Hamiltonian is split into its even and odd parity
/// blocks, so each eigenvector is exactly symmetric or antisymmetric under
/// `site ↔ N-1-site` even when eigenvalues nearly coincide.
fn decompose_rows(h: &SingleExcitationHamiltonian, sites: &[usize]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = h.dim();
    if n < 2 || !is_mirror_symmetric(h) {
        let mut d = h.diagonal.clone();
        let mut rows = identity_rows(n, sites);
        tridiagonal_ql(&mut d, &h.off_diagonal, &mut rows)?;
        return Ok((d, rows));
    }

    let half = n / 2;
    let has_middle = n % 2 == 1;
    let (d, e) = (&h.diagonal, &h.off_diagonal);
    let mut even_d = d[..half].to_vec();
    let mut even_e = e[..half - 1].to_vec();
    let mut odd_d = d[..half].to_vec();
    let odd_e = e[..half - 1].to_vec();
    if has_middle {
        even_d.push(d[half]);
        even_e.push(std::f64::consts::SQRT_2 * e[half - 1]);
    } else {
        even_d[half - 1] += e[half - 1];
        odd_d[half - 1] -= e[half - 1];
    }

    let folded: Vec<usize> = sites.iter().map(|&s| s.min(n - 1 - s)).collect();
    let mut even_rows = identity_rows(even_d.len(), &folded);
    tridiagonal_ql(&mut even_d, &even_e, &mut even_rows)?;
    let odd_sites: Vec<usize> = folded.iter().map(|&i| i.min(half - 1)).collect();
    let mut odd_rows = identity_rows(half, &odd_sites);
    tridiagonal_ql(&mut odd_d, &odd_e, &mut odd_rows)?;

    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let rows = sites
        .iter()
        .zip(folded.iter().zip(even_rows.iter().zip(&odd_rows)))
        .map(|(&site, (&i, (even, odd)))| {
            let middle = has_middle && i == half;
            let mirror_sign = if site == i { 1.0 } else { -1.0 };
            let even_part = even.iter().map(|&u| if middle { u } else { scale * u });
            let odd_part = odd
                .iter()
                .map(|&u| if middle { 0.0 } else { mirror_sign * scale * u });
            even_part.chain(odd_part).collect()
        })
        .collect();
    even_d.extend_from_slice(&odd_d);
    Ok((even_d, rows))
}

/// Diagonalize the tridiagonal Hamiltonian. Eigenvectors are normalized
/// with their first nonzero component nonnegative.
pub fn eigendecompose(h: &SingleExcitationHamiltonian) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let sites: Vec<usize> = (0..n).collect();
    let (d, rows) = decompose_rows(h, &sites)?;

    let order = ascending_order(&d);
    let eigenvalues = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        let flip = rows
            .iter()
            .map(|row| row[k])
            .find(|v| v.abs() > 1e-12)
            .is_some_and(|v| v < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for (site, row) in rows.iter().enumerate() {
            vectors[site * n + col] = sign * row[k];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
    })
}

/// Eigenvalues and end-site eigenvector components only.
pub fn endpoint_spectrum(h: &SingleExcitationHamiltonian) -> Result<EndpointSpectrum> {
    let n = h.dim();
    let (d, rows) = decompose_rows(h, &[0, n - 1])?;
    let order = ascending_order(&d);
    Ok(EndpointSpectrum {
        eigenvalues: order.iter().map(|&k| d[k]).collect(),
        first: order.iter().map(|&k| rows[0][k]).collect(),
        last: order.iter().map(|&k| rows[1][k]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{project_hamiltonian, ChainParameters, CouplingDistribution, EnergyScale};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

    fn tri(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> SingleExcitationHamiltonian {
        SingleExcitationHamiltonian {
            diagonal,
            off_diagonal,
        }
    }

    #[test]
    fn two_by_two() {
        let h = tri(vec![0.0, 0.0], vec![-2.0]);
        let spec = eigendecompose(&h).unwrap();
        assert!((spec.eigenvalues()[0] + 2.0).abs() < 1e-14);
        assert!((spec.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let v0 = spec.eigenvector(0);
        let v1 = spec.eigenvector(1);
        assert!((v0[0] - FRAC_1_SQRT_2).abs() < 1e-14 && (v0[1] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((v1[0] - FRAC_1_SQRT_2).abs() < 1e-14 && (v1[1] + FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn uniform_xx_three_sites() {
        let spec = eigendecompose(&tri(vec![0.0; 3], vec![-2.0, -2.0])).unwrap();
        let expected = [-2.0 * SQRT_2, 0.0, 2.0 * SQRT_2];
        for (e, x) in spec.eigenvalues().iter().zip(expected) {
            assert!((e - x).abs() < 1e-13, "{e} vs {x}");
        }
    }

    #[test]
    fn residual_and_orthogonality() {
        let h = tri(
            vec![0.3, -1.2, 4.0, 2.5, 0.0, -0.7],
            vec![1.0, -0.5, 2.2, 0.0, 3.1],
        );
        let spec = eigendecompose(&h).unwrap();
        assert!(spec.reconstruction_residual(&h) <= 1e-10 * h.max_abs().max(1.0));
        assert!(spec.orthogonality_defect() <= 1e-10);
        assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn deterministic_and_sign_convention() {
        let h = tri(vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.25, 0.125]);
        let a = eigendecompose(&h).unwrap();
        let b = eigendecompose(&h).unwrap();
        assert_eq!(a, b);
        for k in 0..a.dim() {
            let first = a.eigenvector(k).into_iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn endpoint_spectrum_matches_full() {
        let params = ChainParameters::new(9, 1.2).unwrap();
        let ecd = CouplingDistribution::new(vec![0.7, 1.3, 2.1, 0.4, 1.9, 2.2, 0.8, 1.1]).unwrap();
        let h = project_hamiltonian(&params, &ecd).unwrap();
        let full = eigendecompose(&h).unwrap();
        let ends = endpoint_spectrum(&h).unwrap();
        for t in [0.0, 0.37, 2.5, 11.0] {
            let a = full.transferred_population(t);
            let b = ends.transferred_population(t);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_at_zero_time() {
        let spec = eigendecompose(&tri(vec![0.2, -0.1, 0.4], vec![1.0, 0.6])).unwrap();
        for m in 0..3 {
            for n in 0..3 {
                let a = spec.transfer_amplitude(m, n, 0.0).unwrap();
                let target = if m == n { 1.0 } else { 0.0 };
                assert!((a.re - target).abs() < 1e-14 && a.im.abs() < 1e-14);
            }
        }
        assert!(spec.transfer_amplitude(3, 0, 0.0).is_err());
        assert!(spec.transfer_amplitude(0, 0, f64::NAN).is_err());
        assert_eq!(spec.transferred_population(0.0), spec.transfer_amplitude(0, 2, 0.0).unwrap().norm_sqr());
    }

    #[test]
    fn two_site_full_transfer() {
        for delta in [0.0, 0.5, 1.0, 3.0] {
            let ecd = CouplingDistribution::new(vec![1.0]).unwrap();
            let pauli = ChainParameters::with_scale(2, delta, EnergyScale::Pauli).unwrap();
            let spec = eigendecompose(&project_hamiltonian(&pauli, &ecd).unwrap()).unwrap();
            let amp = spec.transfer_amplitude(0, 1, FRAC_PI_4).unwrap();
            assert!((amp.norm() - 1.0).abs() < 1e-14);

            let hopping = ChainParameters::new(2, delta).unwrap();
            let spec = eigendecompose(&project_hamiltonian(&hopping, &ecd).unwrap()).unwrap();
            let amp = spec.transfer_amplitude(0, 1, 2.0 * FRAC_PI_4).unwrap();
            assert!((amp.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_population_matrix_at_zero() {
        let spec = eigendecompose(&tri(vec![0.0; 4], vec![1.0, 2.0, 1.0])).unwrap();
        let p = spec.site_population_matrix(0.0);
        for (m, row) in p.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                assert!((v - if m == n { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mirror_split_matches_general_solver() {
        for (diagonal, off_diagonal) in [
            (vec![0.3, -1.0, 2.0, -1.0, 0.3], vec![0.7, 1.5, 1.5, 0.7]),
            (vec![1.0, 0.5, 0.5, 1.0], vec![2.0, 0.25, 2.0]),
        ] {
            let h = tri(diagonal.clone(), off_diagonal.clone());
            let split = eigendecompose(&h).unwrap();
            let mut d = diagonal;
            tridiagonal_ql(&mut d, &off_diagonal, &mut []).unwrap();
            d.sort_by(f64::total_cmp);
            for (a, b) in split.eigenvalues().iter().zip(&d) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(split.reconstruction_residual(&h) < 1e-12);
            assert!(split.orthogonality_defect() < 1e-12);
        }
    }

    #[test]
    fn near_degenerate_mirror_modes_stay_parity_eigenstates() {
        let params = ChainParameters::new(10, 1.2).unwrap();
        let ecd = CouplingDistribution::centro_symmetric(&[4.0, 0.05, 0.05, 0.05, 0.05], 10).unwrap();
        let spectrum = eigendecompose(&project_hamiltonian(&params, &ecd).unwrap()).unwrap();
        for k in 0..10 {
            for site in 0..10 {
                assert_eq!(spectrum.component(site, k).abs(), spectrum.component(9 - site, k).abs());
            }
        }
    }
}
