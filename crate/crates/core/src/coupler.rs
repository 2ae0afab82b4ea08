//! Tunable-coupler physics for one edge and compilation of switching schedules.
//!
//! Every edge of the network carries an ancillary coupler qubit. Its
//! frequency `omega_c` sets the effective qubit-qubit exchange
//!
//! ```text
//! J = (g_i g_j / 2) (1/Δ_i + 1/Δ_j − 1/Σ_i − 1/Σ_j) + g_ij,
//! Δ_k = ω_k − ω_c,  Σ_k = ω_k + ω_c,
//! ```
//!
//! with the qubit-coupler and direct couplings fixed by the capacitance
//! network. Above the qubit frequencies there is a cutoff `omega_off` where
//! the mediated and direct terms cancel, which is how an edge is switched off.
//!
//! Capacitances are in fF and frequencies in GHz. Frequencies are used as
//! angular frequencies, so `t0 = π / (2 J)` comes out directly in ns.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{induced_subcube, make_hypercube, SubcubeSpec, VertexLabel};

/// Largest `g/|Δ|` accepted when switching an edge on.
pub const DISPERSIVE_LIMIT: f64 = 0.2;
/// `g/|Δ|` above which a schedule carries a warning.
pub const DISPERSIVE_WARN: f64 = 0.1;
/// Lower end of the cutoff search is `ω + CUTOFF_BRACKET_OFFSET`.
pub const CUTOFF_BRACKET_OFFSET: f64 = 0.01;
pub const CUTOFF_TOL: f64 = 1e-10;

/// Circuit parameters of one edge: two qubits `i`, `j` and their coupler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerParams {
    /// Qubit capacitances (fF).
    pub c_i: f64,
    pub c_j: f64,
    /// Coupler capacitance (fF).
    pub c_c: f64,
    /// Qubit-coupler coupling capacitances (fF).
    pub c_ic: f64,
    pub c_jc: f64,
    /// Direct qubit-qubit capacitance (fF).
    pub c_ij: f64,
    /// Frequencies (GHz).
    pub omega_i: f64,
    pub omega_j: f64,
    pub omega_c: f64,
}

impl CouplerParams {
    /// The capacitance set of the reference two-qubit device
    /// (C_i = 70, C_j = 72, C_c = 200, C_ic = 4, C_jc = 4.2, C_ij = 0.1 fF,
    /// both qubits at 4 GHz) with the coupler parked at 5.426 GHz.
    pub fn reference() -> Self {
        Self {
            c_i: 70.0,
            c_j: 72.0,
            c_c: 200.0,
            c_ic: 4.0,
            c_jc: 4.2,
            c_ij: 0.1,
            omega_i: 4.0,
            omega_j: 4.0,
            omega_c: 5.426,
        }
    }

    pub fn with_omega_c(self, omega_c: f64) -> Self {
        Self { omega_c, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_i", self.c_i),
            ("c_j", self.c_j),
            ("c_c", self.c_c),
            ("c_ij", self.c_ij),
            ("omega_i", self.omega_i),
            ("omega_j", self.omega_j),
            ("omega_c", self.omega_c),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, value) in [("c_ic", self.c_ic), ("c_jc", self.c_jc)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {value}")));
            }
        }
        Ok(())
    }

    /// `η_ij = C_ic C_jc / (C_ij C_c)`.
    pub fn eta(&self) -> f64 {
        self.c_ic * self.c_jc / (self.c_ij * self.c_c)
    }

    pub fn detunings(&self) -> (f64, f64) {
        (self.omega_i - self.omega_c, self.omega_j - self.omega_c)
    }

    pub fn sums(&self) -> (f64, f64) {
        (self.omega_i + self.omega_c, self.omega_j + self.omega_c)
    }

    /// Resolved coupling constants at the current coupler frequency.
    pub fn couplings(&self) -> Result<EdgeCouplings> {
        let (g_i, g_j) = qubit_coupler_g(self)?;
        Ok(EdgeCouplings {
            omega_i: self.omega_i,
            omega_j: self.omega_j,
            omega_c: self.omega_c,
            g_i,
            g_j,
            g_ij: direct_coupling_g(self)?.g_ij,
        })
    }
}

/// Frequencies and couplings of one edge, independent of how they were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCouplings {
    pub omega_i: f64,
    pub omega_j: f64,
    pub omega_c: f64,
    pub g_i: f64,
    pub g_j: f64,
    pub g_ij: f64,
}

impl EdgeCouplings {
    fn check_detuning(&self) -> Result<(f64, f64)> {
        let d = (self.omega_i - self.omega_c, self.omega_j - self.omega_c);
        for delta in [d.0, d.1] {
            if delta == 0.0 {
                return Err(Error::Resonant(delta));
            }
        }
        Ok(d)
    }

    /// Second-order exchange coupling through the coupler plus the direct term.
    pub fn effective_coupling(&self) -> Result<f64> {
        let (d_i, d_j) = self.check_detuning()?;
        let (s_i, s_j) = (self.omega_i + self.omega_c, self.omega_j + self.omega_c);
        Ok(0.5 * self.g_i * self.g_j * (1.0 / d_i + 1.0 / d_j - 1.0 / s_i - 1.0 / s_j) + self.g_ij)
    }

    /// Lamb-shifted qubit frequencies `(ω̃_i, ω̃_j)`.
    pub fn lamb_shifted(&self) -> Result<(f64, f64)> {
        Ok((
            lamb_shift(self.omega_i, self.omega_c, self.g_i)?,
            lamb_shift(self.omega_j, self.omega_c, self.g_j)?,
        ))
    }

    /// `max_k g_k / |Δ_k|`.
    pub fn dispersive_ratio(&self) -> Result<f64> {
        let (d_i, d_j) = self.check_detuning()?;
        Ok((self.g_i / d_i.abs()).max(self.g_j / d_j.abs()))
    }
}

/// `g = ½ · C_qc/√(C_q C_c) · √(ω_q ω_c)` for one qubit-coupler pair.
pub fn coupling_from_capacitance(c_qc: f64, c_q: f64, c_c: f64, omega_q: f64, omega_c: f64) -> f64 {
    0.5 * c_qc / (c_q * c_c).sqrt() * (omega_q * omega_c).sqrt()
}

/// Qubit-coupler couplings `(g_i, g_j)` in GHz.
pub fn qubit_coupler_g(params: &CouplerParams) -> Result<(f64, f64)> {
    params.validate()?;
    Ok((
        coupling_from_capacitance(params.c_ic, params.c_i, params.c_c, params.omega_i, params.omega_c),
        coupling_from_capacitance(params.c_jc, params.c_j, params.c_c, params.omega_j, params.omega_c),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectCoupling {
    pub g_ij: f64,
    pub eta: f64,
}

/// `g_ij = ½ (1 + η) C_ij/√(C_i C_j) √(ω_i ω_j)`.
pub fn direct_coupling_g(params: &CouplerParams) -> Result<DirectCoupling> {
    params.validate()?;
    let eta = params.eta();
    let g_ij = 0.5 * (1.0 + eta) * params.c_ij / (params.c_i * params.c_j).sqrt() * (params.omega_i * params.omega_j).sqrt();
    Ok(DirectCoupling { g_ij, eta })
}

/// Effective coupling from the general second-order expression.
pub fn effective_coupling_full(params: &CouplerParams) -> Result<f64> {
    params.couplings()?.effective_coupling()
}

/// Effective coupling for identical qubit frequencies:
/// `J = ½ [ω² η / (Δ Σ) + 1] · C_ij/√(C_i C_j) · ω`.
pub fn effective_coupling_capacitive(params: &CouplerParams) -> Result<f64> {
    params.validate()?;
    if params.omega_i != params.omega_j {
        return Err(Error::UnequalFrequencies(params.omega_i, params.omega_j));
    }
    let omega = params.omega_i;
    let delta = omega - params.omega_c;
    if delta == 0.0 {
        return Err(Error::Resonant(delta));
    }
    let sigma = omega + params.omega_c;
    let bracket = omega * omega * params.eta() / (delta * sigma) + 1.0;
    Ok(0.5 * bracket * params.c_ij / (params.c_i * params.c_j).sqrt() * omega)
}

/// `ω̃ = ω + g² (1/Δ + 1/Σ)`.
pub fn lamb_shift(omega: f64, omega_c: f64, g: f64) -> Result<f64> {
    let delta = omega - omega_c;
    if delta == 0.0 {
        return Err(Error::Resonant(delta));
    }
    Ok(omega + g * g * (1.0 / delta + 1.0 / (omega + omega_c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    /// Coupler frequency at which the edge decouples (GHz).
    pub omega_off: f64,
    /// Qubit-coupler detuning `ω − ω_off` at the cutoff (GHz).
    pub detuning: f64,
    /// Independent root of the full expression found by bisection.
    pub bisection: f64,
}

/// Cutoff frequency for identical qubits: `ω_off = ω √(1 + η)`, cross-checked by bisection.
pub fn cutoff_frequency(params: &CouplerParams) -> Result<Cutoff> {
    params.validate()?;
    if params.omega_i != params.omega_j {
        return Err(Error::UnequalFrequencies(params.omega_i, params.omega_j));
    }
    let eta = params.eta();
    if eta <= 0.0 {
        return Err(Error::NoCutoff("eta = 0: the mediated coupling cannot cancel the direct one".into()));
    }
    let omega = params.omega_i;
    let omega_off = omega * (1.0 + eta).sqrt();
    let bisection = cutoff_by_bisection(params)?;
    Ok(Cutoff { omega_off, detuning: omega - omega_off, bisection })
}

/// Root of the full effective coupling in `ω_c ∈ [ω_max + 0.01, 4 ω_max]`.
///
/// Works for unequal qubit frequencies.
pub fn cutoff_by_bisection(params: &CouplerParams) -> Result<f64> {
    params.validate()?;
    let omega = params.omega_i.max(params.omega_j);
    let (mut lo, mut hi) = (omega + CUTOFF_BRACKET_OFFSET, 4.0 * omega);
    let j = |w: f64| effective_coupling_full(&params.with_omega_c(w));
    let (mut f_lo, f_hi) = (j(lo)?, j(hi)?);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCutoff(format!("no sign change of J in [{lo}, {hi}] GHz")));
    }
    while hi - lo > CUTOFF_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = j(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coupler parameters for every edge: one shared set, or a default with
/// per-edge overrides. Only the capacitances and qubit frequencies are
/// used; the schedule chooses each coupler frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeParams {
    PerEdge { default: CouplerParams, overrides: Vec<EdgeOverride> },
    Uniform(CouplerParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeOverride {
    pub i: usize,
    pub j: usize,
    #[serde(flatten)]
    pub params: CouplerParams,
}

impl EdgeParams {
    pub fn get(&self, i: usize, j: usize) -> CouplerParams {
        match self {
            EdgeParams::Uniform(p) => *p,
            EdgeParams::PerEdge { default, overrides } => overrides
                .iter()
                .rev()
                .find(|o| (o.i, o.j) == (i, j) || (o.j, o.i) == (i, j))
                .map_or(*default, |o| o.params),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EdgeParams::Uniform(p) => p.validate(),
            EdgeParams::PerEdge { default, overrides } => {
                default.validate()?;
                overrides.iter().try_for_each(|o| o.params.validate())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeState {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledEdge {
    pub i: usize,
    pub j: usize,
    pub state: EdgeState,
    /// Coupler frequency (GHz).
    pub omega_c: f64,
    /// Effective coupling at that frequency (GHz).
    #[serde(rename = "J")]
    pub coupling: f64,
    pub g_over_delta: f64,
}

/// Per-edge coupler settings that realize the switched network for one transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub edges: Vec<ScheduledEdge>,
    /// Mean effective coupling over the On edges (GHz).
    pub j_on: f64,
    /// Relative spread `(max − min) / |mean|` of the On couplings.
    pub j_on_spread: f64,
    pub t0_ns: f64,
    pub endpoints: (VertexLabel, VertexLabel),
    pub subcube: SubcubeSpec,
    pub warnings: Vec<String>,
}

impl Schedule {
    pub fn count(&self, state: EdgeState) -> usize {
        self.edges.iter().filter(|e| e.state == state).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Relative On-coupling spread above which a warning is attached.
    pub spread_tolerance: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self { spread_tolerance: 1e-3 }
    }
}

/// Sets every coupler of `Q_n`: edges of the sub-hypercube spanned by `x`
/// and `y` at `omega_on`, all others at their own cutoff.
pub fn compile_schedule(
    ambient_n: usize,
    x: &VertexLabel,
    y: &VertexLabel,
    params: &EdgeParams,
    omega_on: f64,
    options: &ScheduleOptions,
) -> Result<Schedule> {
    params.validate()?;
    if x.dimension() != ambient_n {
        return Err(Error::LengthMismatch(x.dimension(), ambient_n));
    }
    let subcube = induced_subcube(x, y)?;
    let inside = subcube.vertex_set();
    let cube = make_hypercube(ambient_n)?;
    let mut warnings = Vec::new();
    let mut edges = Vec::with_capacity(cube.edge_count());

    for (i, j, _) in cube.edges() {
        let base = params.get(i, j);
        let on = inside.contains(&i) && inside.contains(&j);
        let omega_c = if on {
            if !(omega_on > base.omega_i.max(base.omega_j)) {
                return Err(Error::InvalidParameter(format!(
                    "omega_on = {omega_on} GHz must lie above the qubit frequencies on edge ({i}, {j})"
                )));
            }
            omega_on
        } else if base.omega_i == base.omega_j {
            cutoff_frequency(&base)?.omega_off
        } else {
            cutoff_by_bisection(&base)?
        };
        let p = base.with_omega_c(omega_c);
        let c = p.couplings()?;
        let ratio = c.dispersive_ratio()?;
        if ratio > DISPERSIVE_LIMIT && on {
            return Err(Error::NonDispersive { ratio, limit: DISPERSIVE_LIMIT });
        }
        if ratio > DISPERSIVE_WARN {
            warnings.push(format!("edge ({i}, {j}) has g/|Delta| = {ratio:.4} at {omega_c} GHz"));
        }
        edges.push(ScheduledEdge {
            i,
            j,
            state: if on { EdgeState::On } else { EdgeState::Off },
            omega_c,
            coupling: c.effective_coupling()?,
            g_over_delta: ratio,
        });
    }

    let on: Vec<f64> = edges.iter().filter(|e| e.state == EdgeState::On).map(|e| e.coupling).collect();
    let j_on = on.iter().sum::<f64>() / on.len() as f64;
    if j_on == 0.0 {
        return Err(Error::InvalidParameter("omega_on coincides with the cutoff; the sub-hypercube is switched off".into()));
    }
    let (lo, hi) = on.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let j_on_spread = (hi - lo) / j_on.abs();
    if j_on_spread > options.spread_tolerance {
        warnings.push(format!(
            "On couplings spread by {:.3e} (relative) around {j_on:.6e} GHz; the switched cube is weighted",
            j_on_spread
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(Schedule {
        edges,
        j_on,
        j_on_spread,
        t0_ns: FRAC_PI_2 / j_on.abs(),
        endpoints: (*x, *y),
        subcube,
        warnings,
    })
}

/// `t0 = π / (2 |J|)`.
pub fn transfer_time(j_on: f64) -> f64 {
    FRAC_PI_2 / j_on.abs()
}

/// Per-edge effective couplings of a schedule keyed by `(i, j)`.
pub fn schedule_couplings(schedule: &Schedule) -> BTreeMap<(usize, usize), f64> {
    schedule.edges.iter().map(|e| ((e.i, e.j), e.coupling)).collect()
}
