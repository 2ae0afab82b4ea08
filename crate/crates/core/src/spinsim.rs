//! Full many-qubit simulation of spin networks and the coupler device.
//!
//! # Conventions
//!
//! * Basis state `b` of an `N`-qubit register has qubit `q` excited when bit
//!   `N − 1 − q` of `b` is set (qubit 0 is the most significant bit).
//! * `σᶻ` is `+1` on the excited state, so `½ ω σᶻ` puts the ground state lowest.
//! * Ladder operators are normalized, `σ± = (σˣ ± iσʸ)/2`, so
//!   `J (σˣσˣ + σʸσʸ) = 2J (σ⁺σ⁻ + σ⁻σ⁺)`.
//! * Network couplings default to `J = w/2` for an edge of weight `w`. With that
//!   choice the XY single-excitation block is exactly `A(G)` and transfer times
//!   are those of the bare quantum walk.
//! * Device registers hold the network qubits first (by vertex) and then one
//!   coupler per edge in sorted edge order.
//!
//! Every term used here is real in the computational basis, so Hamiltonians
//! are stored as sparse real-symmetric matrices.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupler::{CouplerParams, EdgeCouplings, DISPERSIVE_LIMIT};
use crate::error::{Error, Result};
use crate::hypergraph::WeightedGraph;
use crate::spectral::Spectrum;

pub const MAX_NETWORK_QUBITS: usize = 16;
pub const MAX_DEVICE_QUBITS: usize = 12;
/// Largest register evolved with a dense eigendecomposition.
pub const MAX_EVOLUTION_QUBITS: usize = 10;
/// Entries below this magnitude count as zero in sector checks.
pub const SECTOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinModel {
    Xy,
    Heisenberg,
}

/// A spin network: couplings on the edges of a graph and a local field on every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinNetworkSpec {
    pub graph: WeightedGraph,
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub fields: Vec<f64>,
    pub model: SpinModel,
}

impl SpinNetworkSpec {
    pub fn new(graph: WeightedGraph, couplings: BTreeMap<(usize, usize), f64>, fields: Vec<f64>, model: SpinModel) -> Result<Self> {
        if fields.len() != graph.num_vertices() {
            return Err(Error::LengthMismatch(fields.len(), graph.num_vertices()));
        }
        let edges: Vec<(usize, usize)> = graph.edges().map(|(i, j, _)| (i, j)).collect();
        if couplings.keys().copied().collect::<Vec<_>>() != edges {
            return Err(Error::InvalidParameter("couplings must be given on exactly the graph edges".into()));
        }
        Ok(Self { graph, couplings, fields, model })
    }

    /// XY network with `J = w/2` and no fields.
    pub fn xy(graph: &WeightedGraph) -> Self {
        let couplings = half_weights(graph);
        let fields = vec![0.0; graph.num_vertices()];
        Self { graph: graph.clone(), couplings, fields, model: SpinModel::Xy }
    }

    /// Heisenberg network with `J = w/2` and fields calibrated so the
    /// single-excitation block is `c·I + L(G)`.
    pub fn heisenberg(graph: &WeightedGraph) -> Result<Self> {
        let couplings = half_weights(graph);
        let cal = calibrate_local_fields(graph, &couplings)?;
        Ok(Self { graph: graph.clone(), couplings, fields: cal.fields, model: SpinModel::Heisenberg })
    }

    pub fn num_qubits(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn hamiltonian(&self) -> Result<FullHamiltonian> {
        match self.model {
            SpinModel::Xy => build_xy_hamiltonian(self),
            SpinModel::Heisenberg => build_heisenberg_hamiltonian(self),
        }
    }
}

fn half_weights(graph: &WeightedGraph) -> BTreeMap<(usize, usize), f64> {
    graph.edges().map(|(i, j, w)| ((i, j), 0.5 * w)).collect()
}

/// Sparse real-symmetric Hamiltonian on a qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct FullHamiltonian {
    num_qubits: usize,
    entries: BTreeMap<(usize, usize), f64>,
    ordering: String,
}

impl FullHamiltonian {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dimension(&self) -> usize {
        1 << self.num_qubits
    }

    /// Human-readable qubit order (which register slot is which physical qubit).
    pub fn ordering(&self) -> &str {
        &self.ordering
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries.get(&(row, col)).copied().unwrap_or(0.0)
    }

    /// Nonzero entries `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.num_qubits > MAX_EVOLUTION_QUBITS {
            return Err(Error::SizeOverflow(format!(
                "dense form of a {}-qubit register exceeds {MAX_EVOLUTION_QUBITS} qubits",
                self.num_qubits
            )));
        }
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        Ok(m)
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.get(c, r)).abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.max_asymmetry() <= SECTOR_TOL
    }

    /// Largest entry of `[H, N̂]` where `N̂` counts excitations on all qubits.
    pub fn excitation_commutator_norm(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v * (c.count_ones() as f64 - r.count_ones() as f64)).abs())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let mut y = DVector::zeros(self.dimension());
        for (r, c, v) in self.entries() {
            y[r] += x[c] * v;
        }
        y
    }

    /// Off-diagonal part (all couplings, no Zeeman terms).
    pub fn off_diagonal(&self) -> FullHamiltonian {
        FullHamiltonian {
            num_qubits: self.num_qubits,
            entries: self.entries.iter().filter(|((r, c), _)| r != c).map(|(&k, &v)| (k, v)).collect(),
            ordering: self.ordering.clone(),
        }
    }

    /// Sparse triplet dump: a `#` header, then one `row col re im` line per nonzero.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# dim {} qubits {} nnz {}", self.dimension(), self.num_qubits, self.nnz())?;
        writeln!(out, "# ordering {}", self.ordering)?;
        for (r, c, v) in self.entries() {
            writeln!(out, "{r} {c} {v:.16e} {:.16e}", 0.0)?;
        }
        Ok(())
    }
}

/// Accumulates Pauli terms on a register of `num_qubits`.
struct OperatorBuilder {
    num_qubits: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl OperatorBuilder {
    fn new(num_qubits: usize, limit: usize) -> Result<Self> {
        if num_qubits > limit {
            return Err(Error::SizeOverflow(format!("{num_qubits} qubits exceeds the limit of {limit}")));
        }
        Ok(Self { num_qubits, entries: BTreeMap::new() })
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        *self.entries.entry((r, c)).or_insert(0.0) += v;
    }

    fn states(&self) -> std::ops::Range<usize> {
        0..1 << self.num_qubits
    }

    fn sz(&self, b: usize, q: usize) -> f64 {
        if b & self.bit(q) != 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn z(&mut self, q: usize, coef: f64) {
        for b in self.states() {
            let s = self.sz(b, q);
            self.add(b, b, coef * s);
        }
    }

    fn zz(&mut self, p: usize, q: usize, coef: f64) {
        for b in self.states() {
            let s = self.sz(b, p) * self.sz(b, q);
            self.add(b, b, coef * s);
        }
    }

    fn xx(&mut self, p: usize, q: usize, coef: f64) {
        let flip = self.bit(p) | self.bit(q);
        for b in self.states() {
            self.add(b ^ flip, b, coef);
        }
    }

    /// `σʸ|g⟩ = i|e⟩`, `σʸ|e⟩ = −i|g⟩`: the product is `−1` on equal bits, `+1` otherwise.
    fn yy(&mut self, p: usize, q: usize, coef: f64) {
        let flip = self.bit(p) | self.bit(q);
        for b in self.states() {
            let equal = (b & self.bit(p) != 0) == (b & self.bit(q) != 0);
            self.add(b ^ flip, b, if equal { -coef } else { coef });
        }
    }

    /// `σ⁺_p σ⁻_q + σ⁻_p σ⁺_q`.
    fn flip_flop(&mut self, p: usize, q: usize, coef: f64) {
        let flip = self.bit(p) | self.bit(q);
        for b in self.states() {
            if (b & self.bit(p) != 0) != (b & self.bit(q) != 0) {
                self.add(b ^ flip, b, coef);
            }
        }
    }

    fn finish(mut self, ordering: String) -> FullHamiltonian {
        self.entries.retain(|_, v| *v != 0.0);
        FullHamiltonian { num_qubits: self.num_qubits, entries: self.entries, ordering }
    }
}

fn network_ordering(n: usize) -> String {
    format!("network qubits 0..{n} (qubit 0 = most significant bit)")
}

/// `H = Σ J_ij (σˣ_i σˣ_j + σʸ_i σʸ_j) + Σ B_j σᶻ_j`.
pub fn build_xy_hamiltonian(spec: &SpinNetworkSpec) -> Result<FullHamiltonian> {
    if spec.model != SpinModel::Xy {
        return Err(Error::InvalidParameter("spec is not an XY network".into()));
    }
    let n = spec.num_qubits();
    let mut b = OperatorBuilder::new(n, MAX_NETWORK_QUBITS)?;
    for (&(i, j), &coupling) in &spec.couplings {
        b.xx(i, j, coupling);
        b.yy(i, j, coupling);
    }
    for (q, &field) in spec.fields.iter().enumerate() {
        if field != 0.0 {
            b.z(q, field);
        }
    }
    Ok(b.finish(network_ordering(n)))
}

/// `H = −Σ J_ij σ⃗_i·σ⃗_j + Σ B_j σᶻ_j`.
pub fn build_heisenberg_hamiltonian(spec: &SpinNetworkSpec) -> Result<FullHamiltonian> {
    if spec.model != SpinModel::Heisenberg {
        return Err(Error::InvalidParameter("spec is not a Heisenberg network".into()));
    }
    heisenberg_operator(spec.num_qubits(), &spec.couplings, &spec.fields)
}

fn heisenberg_operator(n: usize, couplings: &BTreeMap<(usize, usize), f64>, fields: &[f64]) -> Result<FullHamiltonian> {
    let mut b = OperatorBuilder::new(n, MAX_NETWORK_QUBITS)?;
    for (&(i, j), &coupling) in couplings {
        b.xx(i, j, -coupling);
        b.yy(i, j, -coupling);
        b.zz(i, j, -coupling);
    }
    for (q, &field) in fields.iter().enumerate() {
        if field != 0.0 {
            b.z(q, field);
        }
    }
    Ok(b.finish(network_ordering(n)))
}

/// Restriction of `H` to the states with exactly one excited qubit, indexed by qubit.
pub fn single_excitation_block(h: &FullHamiltonian) -> Result<DMatrix<f64>> {
    let n = h.num_qubits();
    let state = |q: usize| 1usize << (n - 1 - q);
    let mut block = DMatrix::zeros(n, n);
    let mut leak = 0.0f64;
    for (r, c, v) in h.entries() {
        let (r_one, c_one) = (r.count_ones() == 1, c.count_ones() == 1);
        match (r_one, c_one) {
            (true, true) => {
                let (qr, qc) = (n - 1 - r.trailing_zeros() as usize, n - 1 - c.trailing_zeros() as usize);
                debug_assert_eq!((state(qr), state(qc)), (r, c));
                block[(qr, qc)] = v;
            }
            (true, false) | (false, true) => leak = leak.max(v.abs()),
            _ => {}
        }
    }
    if leak > SECTOR_TOL {
        return Err(Error::SubspaceLeak(leak));
    }
    Ok(block)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCalibration {
    pub fields: Vec<f64>,
    /// The scalar `c` in `block = c·I + L`.
    pub offset: f64,
}

/// Local fields that make the Heisenberg single-excitation block a shifted Laplacian.
///
/// The fields are the zero-mean solution; any uniform shift of them only
/// moves `c`.
pub fn calibrate_local_fields(graph: &WeightedGraph, couplings: &BTreeMap<(usize, usize), f64>) -> Result<FieldCalibration> {
    let n = graph.num_vertices();
    let bare = single_excitation_block(&heisenberg_operator(n, couplings, &vec![0.0; n])?)?;
    // Diagonal excess over the Laplacian whose off-diagonal part the couplings fix.
    let excess: Vec<f64> = (0..n)
        .map(|k| {
            let degree: f64 = (0..n).filter(|&j| j != k).map(|j| -bare[(k, j)]).sum();
            bare[(k, k)] - degree
        })
        .collect();
    let mean = excess.iter().sum::<f64>() / n as f64;
    // A field B_k shifts diagonal entry k by 2 B_k − Σ_j B_j.
    let fields = excess.iter().map(|r| -(r - mean) / 2.0).collect();
    Ok(FieldCalibration { fields, offset: mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullTransferReport {
    /// Overlap with the target after absorbing the fixed, state-independent
    /// phases that the vacuum and the single-excitation transfer acquire.
    pub fidelity: f64,
    /// Overlap with the bare target state.
    pub raw_fidelity: f64,
    /// Phase of the single-excitation amplitude relative to the vacuum amplitude (rad).
    pub relative_phase: f64,
}

/// Sends `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` from `u` to `v` through the full register.
pub fn full_state_transfer_fidelity(spec: &SpinNetworkSpec, theta: f64, phi: f64, u: usize, v: usize, t: f64) -> Result<FullTransferReport> {
    let n = spec.num_qubits();
    if n > MAX_EVOLUTION_QUBITS {
        return Err(Error::SizeOverflow(format!("{n} qubits exceeds {MAX_EVOLUTION_QUBITS} for full evolution")));
    }
    for q in [u, v] {
        if q >= n {
            return Err(Error::IndexOutOfRange { index: q, size: n });
        }
    }
    let spectrum = Spectrum::new(&spec.hamiltonian()?.to_dense()?)?;
    let (vac, src, dst) = (0usize, 1usize << (n - 1 - u), 1usize << (n - 1 - v));

    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let encoded = Complex64::from_polar(s, phi);
    let mut psi = DVector::zeros(1 << n);
    psi[vac] += Complex64::new(c, 0.0);
    psi[src] += encoded;
    let evolved = spectrum.evolve(&psi, t);

    let raw = (evolved[vac] * c + evolved[dst] * encoded.conj()).norm();
    let vacuum_phase = spectrum.amplitude(t, vac, vac).arg();
    let transfer_phase = spectrum.amplitude(t, dst, src).arg();
    let corrected = evolved[vac] * Complex64::from_polar(c, -vacuum_phase)
        + evolved[dst] * encoded.conj() * Complex64::from_polar(1.0, -transfer_phase);
    Ok(FullTransferReport {
        fidelity: corrected.norm(),
        raw_fidelity: raw,
        relative_phase: wrap_phase(transfer_phase - vacuum_phase),
    })
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Network of qubits with one tunable coupler per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub graph: WeightedGraph,
    pub edge_params: BTreeMap<(usize, usize), CouplerParams>,
    pub qubit_freqs: Vec<f64>,
}

impl DeviceSpec {
    pub fn new(graph: WeightedGraph, edge_params: BTreeMap<(usize, usize), CouplerParams>, qubit_freqs: Vec<f64>) -> Result<Self> {
        if qubit_freqs.len() != graph.num_vertices() {
            return Err(Error::LengthMismatch(qubit_freqs.len(), graph.num_vertices()));
        }
        let edges: Vec<(usize, usize)> = graph.edges().map(|(i, j, _)| (i, j)).collect();
        if edge_params.keys().copied().collect::<Vec<_>>() != edges {
            return Err(Error::InvalidParameter("need exactly one coupler per graph edge".into()));
        }
        for (&(i, j), p) in &edge_params {
            p.validate()?;
            if (p.omega_i - qubit_freqs[i]).abs() > 1e-12 || (p.omega_j - qubit_freqs[j]).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("edge ({i}, {j}) qubit frequencies disagree with the vertex frequencies")));
            }
        }
        Ok(Self { graph, edge_params, qubit_freqs })
    }

    /// Every edge with the same circuit; requires `omega_i == omega_j`.
    pub fn uniform(graph: &WeightedGraph, params: CouplerParams) -> Result<Self> {
        if params.omega_i != params.omega_j {
            return Err(Error::UnequalFrequencies(params.omega_i, params.omega_j));
        }
        let edge_params = graph.edges().map(|(i, j, _)| ((i, j), params)).collect();
        Self::new(graph.clone(), edge_params, vec![params.omega_i; graph.num_vertices()])
    }

    pub fn total_qubits(&self) -> usize {
        self.graph.num_vertices() + self.graph.edge_count()
    }

    /// Register slot of the coupler on edge `(i, j)`.
    pub fn coupler_slot(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edge_params.keys().position(|&k| k == key).map(|k| self.graph.num_vertices() + k)
    }
}

/// Whether qubit-coupler and qubit-qubit terms keep their counter-rotating parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceCoupling {
    /// `σˣσˣ` couplings, counter-rotating terms included.
    Full,
    /// `σ⁺σ⁻ + σ⁻σ⁺` only.
    RotatingWave,
}

/// `H = ½ Σ ω_i σᶻ_i + ½ Σ ω_C σᶻ_C + Σ (g_i σˣ_i σˣ_C + g_j σˣ_j σˣ_C) + Σ g_ij σˣ_i σˣ_j`.
pub fn build_device_hamiltonian(dev: &DeviceSpec, coupling: DeviceCoupling) -> Result<FullHamiltonian> {
    let v = dev.graph.num_vertices();
    let total = dev.total_qubits();
    let mut b = OperatorBuilder::new(total, MAX_DEVICE_QUBITS)?;
    for (q, &w) in dev.qubit_freqs.iter().enumerate() {
        b.z(q, 0.5 * w);
    }
    for (k, (&(i, j), p)) in dev.edge_params.iter().enumerate() {
        let c = p.couplings()?;
        add_edge_terms(&mut b, (i, j, v + k), &c, coupling);
    }
    let ordering = format!("network qubits 0..{v}, then couplers {v}..{total} in sorted edge order");
    Ok(b.finish(ordering))
}

fn add_edge_terms(b: &mut OperatorBuilder, (i, j, c): (usize, usize, usize), k: &EdgeCouplings, coupling: DeviceCoupling) {
    b.z(c, 0.5 * k.omega_c);
    for (p, q, g) in [(i, c, k.g_i), (j, c, k.g_j), (i, j, k.g_ij)] {
        if g == 0.0 {
            continue;
        }
        match coupling {
            DeviceCoupling::Full => b.xx(p, q, g),
            DeviceCoupling::RotatingWave => b.flip_flop(p, q, g),
        }
    }
}

/// Two qubits and their coupler, register order `(i, j, coupler)`.
pub fn edge_hamiltonian(k: &EdgeCouplings, coupling: DeviceCoupling) -> Result<FullHamiltonian> {
    let mut b = OperatorBuilder::new(3, MAX_DEVICE_QUBITS)?;
    b.z(0, 0.5 * k.omega_i);
    b.z(1, 0.5 * k.omega_j);
    add_edge_terms(&mut b, (0, 1, 2), k, coupling);
    Ok(b.finish("qubit i, qubit j, coupler".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwCheck {
    /// `max_t | |⟨01;0|ψ(t)⟩| − |⟨01|ψ_eff(t)⟩| |` over the sampled window.
    pub deviation: f64,
    pub effective_coupling: f64,
    /// Period of the effective excitation swap (ns).
    pub swap_period: f64,
    pub evolution_time: f64,
    pub g_over_delta: f64,
    pub samples: usize,
}

/// Exact coupler-qubit dynamics versus the effective exchange model for one edge.
pub fn sw_effective_coupling_check(params: &CouplerParams, evolution_time: Option<f64>) -> Result<SwCheck> {
    sw_deviation(&params.couplings()?, evolution_time)
}

/// Starts in `|1 0; 0⟩` and compares the amplitude on `|0 1; 0⟩` under the
/// full three-qubit Hamiltonian against the two-level model with Lamb-shifted
/// frequencies and the second-order exchange coupling. The window defaults to
/// one swap period of the effective model.
pub fn sw_deviation(k: &EdgeCouplings, evolution_time: Option<f64>) -> Result<SwCheck> {
    let ratio = k.dispersive_ratio()?;
    if ratio > DISPERSIVE_LIMIT {
        return Err(Error::NonDispersive { ratio, limit: DISPERSIVE_LIMIT });
    }
    let j_eff = k.effective_coupling()?;
    let (w_i, w_j) = k.lamb_shifted()?;
    let half_detuning = 0.5 * (w_i - w_j);
    let rabi = j_eff.hypot(half_detuning);
    if rabi == 0.0 {
        return Err(Error::InvalidParameter("effective model has no dynamics at this coupler frequency".into()));
    }
    let swap_period = PI / rabi;
    let window = evolution_time.unwrap_or(swap_period);
    if !(window.is_finite() && window >= 0.0) {
        return Err(Error::InvalidParameter(format!("evolution time {window}")));
    }

    let spectrum = Spectrum::new(&edge_hamiltonian(k, DeviceCoupling::Full)?.to_dense()?)?;
    let (src, dst) = (0b100, 0b010);
    // Resolve the fastest relevant oscillation, |Δ|, with 16 samples per period.
    let fastest = (k.omega_i - k.omega_c).abs().max((k.omega_j - k.omega_c).abs());
    let dt = 2.0 * PI / (16.0 * fastest);
    let steps = ((window / dt).ceil() as usize).clamp(1, 4_000_000);

    let deviation = (0..=steps)
        .into_par_iter()
        .map(|s| {
            let t = window * s as f64 / steps as f64;
            let exact = spectrum.amplitude(t, dst, src).norm();
            let model = j_eff.abs() * (rabi * t).sin().abs() / rabi;
            (exact - model).abs()
        })
        .reduce(|| 0.0, f64::max);

    Ok(SwCheck { deviation, effective_coupling: j_eff, swap_period, evolution_time: window, g_over_delta: ratio, samples: steps + 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwScalingPoint {
    pub g_over_delta: f64,
    pub g: f64,
    pub deviation: f64,
}

/// Deviation of the effective model as `g` grows at fixed detuning.
///
/// Both qubit-coupler couplings are set to `ratio · |Δ|` and the direct
/// coupling is dropped, so only the coupler-mediated exchange is tested.
pub fn sw_scaling_study(omega: f64, omega_c: f64, ratios: &[f64]) -> Result<Vec<SwScalingPoint>> {
    let delta = (omega - omega_c).abs();
    ratios
        .par_iter()
        .map(|&r| {
            let g = r * delta;
            let k = EdgeCouplings { omega_i: omega, omega_j: omega, omega_c, g_i: g, g_j: g, g_ij: 0.0 };
            Ok(SwScalingPoint { g_over_delta: r, g, deviation: sw_deviation(&k, None)?.deviation })
        })
        .collect()
}

/// Least-squares slope of `ln(deviation)` against `ln(g)`.
pub fn log_log_slope(points: &[SwScalingPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.g.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.deviation.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
