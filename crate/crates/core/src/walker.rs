//! Continuous-time quantum walks and transfer fidelities.
//!
//! Units: ħ = 1 and the unit edge weight is the reference coupling, so the
//! single-excitation Hamiltonian of a network is `A(G)` (or `L(G)`) and times
//! are in units of the inverse coupling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::WeightedGraph;
use crate::spectral::Spectrum;

/// Largest walk dimension handled with dense matrices.
pub const MAX_DENSE_DIM: usize = 1 << 10;

pub const DEFAULT_PST_TOL: f64 = 1e-9;
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    Adjacency,
    Laplacian,
}

impl std::str::FromStr for HamiltonianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjacency" | "xy" => Ok(Self::Adjacency),
            "laplacian" | "heisenberg" => Ok(Self::Laplacian),
            other => Err(Error::InvalidParameter(format!("unknown hamiltonian kind {other:?}"))),
        }
    }
}

/// Generator of the walk: `A(G)` or `L(G)` of a source graph.
#[derive(Debug, Clone)]
pub struct WalkHamiltonian<'g> {
    pub kind: HamiltonianKind,
    pub matrix: DMatrix<f64>,
    pub graph: &'g WeightedGraph,
}

impl<'g> WalkHamiltonian<'g> {
    pub fn new(graph: &'g WeightedGraph, kind: HamiltonianKind) -> Self {
        let matrix = match kind {
            HamiltonianKind::Adjacency => graph.adjacency(),
            HamiltonianKind::Laplacian => graph.laplacian(),
        };
        Self { kind, matrix, graph }
    }

    pub fn adjacency(graph: &'g WeightedGraph) -> Self {
        Self::new(graph, HamiltonianKind::Adjacency)
    }

    pub fn laplacian(graph: &'g WeightedGraph) -> Self {
        Self::new(graph, HamiltonianKind::Laplacian)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.dim() > MAX_DENSE_DIM {
            return Err(Error::SizeOverflow(format!(
                "{} vertices exceeds the dense limit of {MAX_DENSE_DIM}; use the hypercube closed form",
                self.dim()
            )));
        }
        Spectrum::new(&self.matrix)
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.dim() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: v, size: self.dim() })
        }
    }
}

/// A normalized walker state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("state norm {norm} is not 1")));
        }
        Ok(Self(amplitudes))
    }

    pub fn basis(dim: usize, v: usize) -> Result<Self> {
        if v >= dim {
            return Err(Error::IndexOutOfRange { index: v, size: dim });
        }
        let mut a = DVector::zeros(dim);
        a[v] = Complex64::new(1.0, 0.0);
        Ok(Self(a))
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    /// `exp(-itH)|ζ⟩`.
    pub fn evolve(&self, spectrum: &Spectrum, t: f64) -> StateVector {
        StateVector(spectrum.evolve(&self.0, t))
    }

    pub fn probability(&self, v: usize) -> f64 {
        self.0[v].norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub u: usize,
    pub v: usize,
    pub time: f64,
    pub amplitude: Complex64,
    pub fidelity: f64,
}

impl FidelityReport {
    fn new(u: usize, v: usize, time: f64, amplitude: Complex64) -> Self {
        Self { u, v, time, amplitude, fidelity: amplitude.norm() }
    }
}

/// `exp(-itH)` via the eigendecomposition of `H`.
pub fn hermitian_propagator(h: &WalkHamiltonian<'_>, t: f64) -> Result<DMatrix<Complex64>> {
    Ok(h.spectrum()?.propagator(t))
}

/// `⟨v|exp(-itH)|u⟩` and its magnitude.
pub fn transfer_fidelity(h: &WalkHamiltonian<'_>, t: f64, u: usize, v: usize) -> Result<FidelityReport> {
    h.check_vertex(u)?;
    h.check_vertex(v)?;
    let s = h.spectrum()?;
    Ok(FidelityReport::new(u, v, t, s.amplitude(t, v, u)))
}

/// Exact `⟨v|exp(-itA(Q_n))|u⟩` from the tensor factorization of `Q_n`:
/// each agreeing bit contributes `cos t`, each differing bit `-i sin t`.
pub fn hypercube_closed_form(n: usize, t: f64, u: usize, v: usize) -> Complex64 {
    let differing = ((u ^ v) & mask(n)).count_ones() as i32;
    let same = n as i32 - differing;
    let hop = Complex64::new(0.0, -t.sin());
    Complex64::new(t.cos().powi(same), 0.0) * hop.powi(differing)
}

fn mask(n: usize) -> usize {
    if n >= usize::BITS as usize {
        usize::MAX
    } else {
        (1usize << n) - 1
    }
}

/// Transfer amplitudes over a time grid, sharing one eigendecomposition.
pub fn fidelity_curve(h: &WalkHamiltonian<'_>, u: usize, v: usize, grid: &[f64]) -> Result<Vec<FidelityReport>> {
    h.check_vertex(u)?;
    h.check_vertex(v)?;
    spectrum_curve(&h.spectrum()?, u, v, grid)
}

/// [`fidelity_curve`] for an already decomposed Hamiltonian.
pub fn spectrum_curve(s: &Spectrum, u: usize, v: usize, grid: &[f64]) -> Result<Vec<FidelityReport>> {
    validate_grid(grid)?;
    for x in [u, v] {
        if x >= s.dim() {
            return Err(Error::IndexOutOfRange { index: x, size: s.dim() });
        }
    }
    Ok(grid.par_iter().map(|&t| FidelityReport::new(u, v, t, s.amplitude(t, v, u))).collect())
}

/// Fails when the eigenbasis is not orthonormal to [`UNITARITY_TOL`], which
/// would make every propagator built from it non-unitary.
pub fn check_unitarity(s: &Spectrum) -> Result<f64> {
    let defect = s.orthonormality_defect();
    if !(defect <= UNITARITY_TOL) {
        return Err(Error::Numerical(format!("propagator unitarity defect {defect:.3e} exceeds {UNITARITY_TOL:e}")));
    }
    Ok(defect)
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid);
    }
    Ok(())
}

/// Evenly spaced grid `0, t_max/steps, …, t_max` (`steps + 1` points).
pub fn uniform_grid(t_max: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![0.0];
    }
    (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect()
}

/// Whether `|⟨v|exp(-i t0 H)|u⟩| ≥ 1 − tol`. Invalid vertices never transfer.
pub fn pst_check(graph: &WeightedGraph, kind: HamiltonianKind, u: usize, v: usize, t0: f64, tol: f64) -> bool {
    let h = WalkHamiltonian::new(graph, kind);
    transfer_fidelity(&h, t0, u, v).map(|r| r.fidelity >= 1.0 - tol).unwrap_or(false)
}
