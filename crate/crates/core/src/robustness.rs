//! Fidelity under miscalibrated couplings.
//!
//! A switched hypercube `Q̄` with adjacency `U` is realized as `U + E`, where
//! `E` collects the coupling errors on On edges and any residual coupling on
//! Off edges. For unitary groups the Duhamel formula
//!
//! ```text
//! e^{-it(U+E)} − e^{-itU} = −i ∫₀ᵗ e^{-i(t−s)(U+E)} E e^{-isU} ds
//! ```
//!
//! gives `‖e^{-it(U+E)} − e^{-itU}‖₂ ≤ t‖E‖₂`, so a transfer with ideal
//! fidelity 1 keeps at least `1 − t‖E‖₂`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{switch, SubcubeSpec, WeightedGraph};
use crate::spectral::symmetric_spectral_norm;
use crate::walker::{transfer_fidelity, WalkHamiltonian};

/// Per-trial tolerance when checking fidelity against the certified bound.
pub const SOUNDNESS_TOL: f64 = 1e-12;

/// Coupling error `δJ` per vertex pair, keyed `(i, j)` with `i < j`.
pub type Deviations = BTreeMap<(usize, usize), f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationModel {
    pub base: WeightedGraph,
    pub deviations: Deviations,
    pub error: DMatrix<f64>,
    /// Vertices with at least one edge in `base`, then the isolated ones.
    pub block_order: Vec<usize>,
    pub spectral_norm: f64,
    pub frobenius_norm: f64,
}

impl PerturbationModel {
    /// `U + E` as a graph.
    pub fn perturbed_graph(&self) -> Result<WeightedGraph> {
        let mut g = self.base.clone();
        for (&(i, j), &d) in &self.deviations {
            g.set_weight(i, j, self.base.weight(i, j) + d)?;
        }
        Ok(g)
    }
}

/// Assembles `E` from `deviations`. Keys may be given in either order; giving
/// both orders with different values is an error.
pub fn build_perturbation(base: &WeightedGraph, deviations: &Deviations) -> Result<PerturbationModel> {
    let n = base.num_vertices();
    let mut canonical = Deviations::new();
    for (&(i, j), &d) in deviations {
        for v in [i, j] {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, size: n });
            }
        }
        if i == j {
            return Err(Error::InvalidParameter(format!("deviation on the diagonal at vertex {i}")));
        }
        if !d.is_finite() {
            return Err(Error::InvalidParameter(format!("deviation {d} on ({i}, {j})")));
        }
        let key = (i.min(j), i.max(j));
        if let Some(&prev) = canonical.get(&key) {
            if prev != d {
                return Err(Error::AsymmetricDeviation(key.0, key.1));
            }
        }
        canonical.insert(key, d);
    }

    let mut error = DMatrix::zeros(n, n);
    for (&(i, j), &d) in &canonical {
        error[(i, j)] = d;
        error[(j, i)] = d;
    }
    let (mut block_order, isolated): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| base.degree(v) != 0.0);
    block_order.extend(isolated);

    Ok(PerturbationModel {
        base: base.clone(),
        deviations: canonical,
        spectral_norm: symmetric_spectral_norm(&error)?,
        frobenius_norm: error.norm(),
        error,
        block_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationConfig {
    /// Half-width of the On-edge error, relative to `j_on`.
    pub delta_rel: f64,
    pub j_on: f64,
    /// Half-width of the residual Off-edge coupling, relative to `j_on`.
    pub leakage: f64,
}

impl DeviationConfig {
    pub fn new(delta_rel: f64, j_on: f64) -> Self {
        Self { delta_rel, j_on, leakage: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("delta_rel", self.delta_rel), ("leakage", self.leakage)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite non-negative number, got {x}")));
            }
        }
        if !self.j_on.is_finite() {
            return Err(Error::InvalidParameter(format!("j_on {}", self.j_on)));
        }
        Ok(())
    }
}

/// Uniform errors on every edge of `ambient`: `±delta_rel·|j_on|` where
/// `switched` has the edge, `±leakage·|j_on|` elsewhere (omitted when leakage
/// is zero).
///
/// One draw is consumed per ambient edge in edge order regardless of the
/// scales, so the same `(seed, stream)` gives proportional deviations for
/// different widths.
pub fn sample_deviations(ambient: &WeightedGraph, switched: &WeightedGraph, cfg: &DeviationConfig, seed: u64, stream: u64) -> Result<Deviations> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Deviations::new();
    for (i, j, _) in ambient.edges() {
        let u: f64 = rng.random_range(-1.0..=1.0);
        if switched.weight(i, j) != 0.0 {
            out.insert((i, j), u * cfg.delta_rel * cfg.j_on.abs());
        } else if cfg.leakage > 0.0 {
            out.insert((i, j), u * cfg.leakage * cfg.j_on.abs());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBound {
    /// `1 − t0‖E‖₂`, clamped to `[0, 1]`.
    pub spectral: f64,
    /// `1 − t0‖E‖_F`, clamped to `[0, 1]`.
    pub frobenius: f64,
}

pub fn certified_bound(model: &PerturbationModel, t0: f64) -> Result<CertifiedBound> {
    Ok(CertifiedBound {
        spectral: bound_from_norm(model.spectral_norm, t0)?,
        frobenius: bound_from_norm(model.frobenius_norm, t0)?,
    })
}

pub fn bound_from_norm(norm: f64, t0: f64) -> Result<f64> {
    if !(t0.is_finite() && t0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("t0 must be finite and non-negative, got {t0}")));
    }
    Ok((1.0 - t0 * norm).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub spectral_norm: f64,
    pub frobenius_norm: f64,
    pub fidelity: f64,
    /// Spectral bound for this trial's `E`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub t0: f64,
    pub delta_rel: f64,
    pub j_on: f64,
    pub leakage: f64,
    /// From the largest `‖E‖₂` over all trials.
    pub bound_spectral: f64,
    /// From the largest `‖E‖_F` over all trials.
    pub bound_frobenius: f64,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    pub max_fidelity: f64,
    pub trials: u64,
    pub seed: u64,
    /// Trials whose fidelity fell below their own spectral bound.
    pub soundness_violations: usize,
    pub per_trial: Vec<TrialRecord>,
}

impl RobustnessReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Per-trial rows `trial,spectral_norm,frobenius_norm,fidelity,bound`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "trial,spectral_norm,frobenius_norm,fidelity,bound")?;
        for r in &self.per_trial {
            writeln!(out, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.trial, r.spectral_norm, r.frobenius_norm, r.fidelity, r.bound)?;
        }
        Ok(())
    }
}

/// Exact fidelity of the switched transfer `x′ → y′` at `t0` under sampled
/// coupling errors. Trial `k` uses stream `k` of `seed`, so the report does
/// not depend on scheduling.
pub fn monte_carlo_fidelity(ambient: &WeightedGraph, spec: &SubcubeSpec, cfg: &DeviationConfig, t0: f64, trials: u64, seed: u64) -> Result<RobustnessReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    cfg.validate()?;
    bound_from_norm(0.0, t0)?;
    let switched = switch(ambient, spec)?;
    let (u, v) = (spec.endpoints.0.index(), spec.endpoints.1.index());

    let per_trial = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let deviations = sample_deviations(ambient, &switched, cfg, seed, trial)?;
            let model = build_perturbation(&switched, &deviations)?;
            let graph = model.perturbed_graph()?;
            let fidelity = transfer_fidelity(&WalkHamiltonian::adjacency(&graph), t0, u, v)?.fidelity;
            Ok(TrialRecord {
                trial,
                spectral_norm: model.spectral_norm,
                frobenius_norm: model.frobenius_norm,
                fidelity,
                bound: bound_from_norm(model.spectral_norm, t0)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fidelities = per_trial.iter().map(|r| r.fidelity);
    let min_fidelity = fidelities.clone().fold(f64::INFINITY, f64::min);
    let max_fidelity = fidelities.clone().fold(f64::NEG_INFINITY, f64::max);
    let mean_fidelity = fidelities.sum::<f64>() / trials as f64;
    let worst_spectral = per_trial.iter().map(|r| r.spectral_norm).fold(0.0, f64::max);
    let worst_frobenius = per_trial.iter().map(|r| r.frobenius_norm).fold(0.0, f64::max);
    let soundness_violations = per_trial.iter().filter(|r| r.fidelity < r.bound - SOUNDNESS_TOL).count();
    if soundness_violations > 0 {
        log::error!("{soundness_violations} trials fell below the certified bound");
    }

    Ok(RobustnessReport {
        t0,
        delta_rel: cfg.delta_rel,
        j_on: cfg.j_on,
        leakage: cfg.leakage,
        bound_spectral: bound_from_norm(worst_spectral, t0)?,
        bound_frobenius: bound_from_norm(worst_frobenius, t0)?,
        min_fidelity,
        mean_fidelity,
        max_fidelity,
        trials,
        seed,
        soundness_violations,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{induced_subcube, make_hypercube, VertexLabel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn q4_to_q2() -> (WeightedGraph, SubcubeSpec, WeightedGraph) {
        let q4 = make_hypercube(4).unwrap();
        let x = VertexLabel::parse("0000", 4).unwrap();
        let y = VertexLabel::parse("0011", 4).unwrap();
        let spec = induced_subcube(&x, &y).unwrap();
        let switched = switch(&q4, &spec).unwrap();
        (q4, spec, switched)
    }

    #[test]
    fn zero_deviations() {
        let (_, _, switched) = q4_to_q2();
        let m = build_perturbation(&switched, &Deviations::new()).unwrap();
        assert_eq!((m.spectral_norm, m.frobenius_norm), (0.0, 0.0));
        assert_eq!(certified_bound(&m, FRAC_PI_2).unwrap(), CertifiedBound { spectral: 1.0, frobenius: 1.0 });
        assert_eq!(&m.block_order[..4], &[0, 1, 2, 3]);
    }

    #[test]
    fn uniform_on_edge_error() {
        let (_, _, switched) = q4_to_q2();
        let devs: Deviations = switched.edges().map(|(i, j, _)| ((i, j), 0.005)).collect();
        assert_eq!(devs.len(), 4);
        let m = build_perturbation(&switched, &devs).unwrap();
        assert_abs_diff_eq!(m.frobenius_norm, 0.005 * 8f64.sqrt(), epsilon = 1e-15);
        // E is 0.005·A(C4), whose spectral norm is 2·0.005.
        assert_abs_diff_eq!(m.spectral_norm, 0.01, epsilon = 1e-15);
        let b = certified_bound(&m, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(b.frobenius, 1.0 - FRAC_PI_2 * 0.005 * 8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.frobenius, 0.97779, epsilon = 5e-6);
        assert!(b.spectral >= b.frobenius);
    }

    #[test]
    fn single_leftover_edge() {
        let (_, _, switched) = q4_to_q2();
        let devs: Deviations = [((7, 15), 0.003)].into_iter().collect();
        let m = build_perturbation(&switched, &devs).unwrap();
        assert_abs_diff_eq!(m.spectral_norm, 0.003, epsilon = 1e-15);
    }

    #[test]
    fn full_q4_worst_case() {
        let q4 = make_hypercube(4).unwrap();
        let devs: Deviations = q4.edges().map(|(i, j, _)| ((i, j), 0.005)).collect();
        let m = build_perturbation(&q4, &devs).unwrap();
        let b = certified_bound(&m, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(b.spectral, 1.0 - FRAC_PI_2 * 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(b.spectral, 0.96858, epsilon = 5e-6);
    }

    #[test]
    fn rejects_bad_deviations() {
        let g = WeightedGraph::path(3);
        let asym: Deviations = [((0, 1), 0.1), ((1, 0), 0.2)].into_iter().collect();
        assert!(matches!(build_perturbation(&g, &asym), Err(Error::AsymmetricDeviation(0, 1))));
        let sym: Deviations = [((0, 1), 0.1), ((1, 0), 0.1)].into_iter().collect();
        assert_eq!(build_perturbation(&g, &sym).unwrap().deviations.len(), 1);
        let diag: Deviations = [((1, 1), 0.1)].into_iter().collect();
        assert!(build_perturbation(&g, &diag).is_err());
        let out: Deviations = [((0, 3), 0.1)].into_iter().collect();
        assert!(matches!(build_perturbation(&g, &out), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn sampling() {
        let (q4, _, switched) = q4_to_q2();
        let zero = sample_deviations(&q4, &switched, &DeviationConfig::new(0.0, 1.0), 1, 0).unwrap();
        assert_eq!(zero.len(), 4);
        assert!(zero.values().all(|&d| d == 0.0));

        let cfg = DeviationConfig::new(0.005, 1.0);
        let a = sample_deviations(&q4, &switched, &cfg, 42, 3).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.keys().all(|&(i, j)| switched.weight(i, j) == 1.0));
        assert!(a.values().all(|d| d.abs() <= 0.005));
        assert_eq!(a, sample_deviations(&q4, &switched, &cfg, 42, 3).unwrap());
        assert_ne!(a, sample_deviations(&q4, &switched, &cfg, 42, 4).unwrap());

        let leaky = DeviationConfig { leakage: 0.001, ..cfg };
        let b = sample_deviations(&q4, &switched, &leaky, 42, 3).unwrap();
        assert_eq!(b.len(), q4.edge_count());
        for (k, d) in &a {
            assert_eq!(b[k], *d);
        }
        assert!(sample_deviations(&q4, &switched, &DeviationConfig::new(-0.1, 1.0), 0, 0).is_err());
    }

    #[test]
    fn block_sensitivity() {
        // Errors among the vertices outside the subcube cannot reach the transfer.
        let (_, spec, switched) = q4_to_q2();
        let outside: Vec<usize> = (0..16).filter(|&v| !spec.contains(v)).collect();
        let devs: Deviations = [((outside[0], outside[1]), 0.2), ((outside[2], outside[5]), -0.1), ((outside[3], outside[7]), 0.05)]
            .into_iter()
            .collect();
        let m = build_perturbation(&switched, &devs).unwrap();
        let g = m.perturbed_graph().unwrap();
        let (u, v) = (spec.endpoints.0.index(), spec.endpoints.1.index());
        for t in [0.7, FRAC_PI_2, 2.0] {
            let ideal = transfer_fidelity(&WalkHamiltonian::adjacency(&switched), t, u, v).unwrap().fidelity;
            let perturbed = transfer_fidelity(&WalkHamiltonian::adjacency(&g), t, u, v).unwrap().fidelity;
            assert_abs_diff_eq!(ideal, perturbed, epsilon = 1e-12);
        }
    }

    #[test]
    fn ideal_monte_carlo() {
        let (q4, spec, _) = q4_to_q2();
        let r = monte_carlo_fidelity(&q4, &spec, &DeviationConfig::new(0.0, 1.0), FRAC_PI_2, 20, 7).unwrap();
        assert!(r.min_fidelity > 1.0 - 1e-9);
        assert_eq!((r.bound_spectral, r.bound_frobenius), (1.0, 1.0));
    }

    #[test]
    fn monte_carlo_is_sound_and_reproducible() {
        let (q4, spec, _) = q4_to_q2();
        let cfg = DeviationConfig { delta_rel: 0.005, j_on: 1.0, leakage: 0.002 };
        let r = monte_carlo_fidelity(&q4, &spec, &cfg, FRAC_PI_2, 200, 11).unwrap();
        assert_eq!(r.soundness_violations, 0);
        assert!(r.bound_spectral >= r.bound_frobenius);
        assert!(r.min_fidelity >= r.bound_spectral - SOUNDNESS_TOL);
        assert!(r.min_fidelity <= r.mean_fidelity && r.mean_fidelity <= r.max_fidelity);
        assert_eq!(r, monte_carlo_fidelity(&q4, &spec, &cfg, FRAC_PI_2, 200, 11).unwrap());

        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 201);
        let back: RobustnessReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn bound_tightness_order() {
        // E = ε·A(Q_d) commutes with U: fidelity is cos(ε t0)^d, so the
        // infidelity is second order in ε while the bound's deficit is first order.
        let d = 3;
        let q = make_hypercube(d).unwrap();
        let (mut infid, mut deficit) = (Vec::new(), Vec::new());
        let eps = [1e-4, 1e-3, 1e-2];
        for &e in &eps {
            let devs: Deviations = q.edges().map(|(i, j, _)| ((i, j), e)).collect();
            let m = build_perturbation(&q, &devs).unwrap();
            let f = transfer_fidelity(&WalkHamiltonian::adjacency(&m.perturbed_graph().unwrap()), FRAC_PI_2, 0, 7).unwrap().fidelity;
            assert_abs_diff_eq!(f, (e * FRAC_PI_2).cos().powi(d as i32), epsilon = 1e-12);
            infid.push(1.0 - f);
            deficit.push(1.0 - certified_bound(&m, FRAC_PI_2).unwrap().spectral);
        }
        let slope = |ys: &[f64]| (ys[2].ln() - ys[0].ln()) / (eps[2].ln() - eps[0].ln());
        assert_abs_diff_eq!(slope(&infid), 2.0, epsilon = 0.05);
        assert_abs_diff_eq!(slope(&deficit), 1.0, epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn bounds_shrink_as_errors_grow(seed in any::<u64>(), stream in 0u64..64, lo in 0.0f64..0.02, extra in 0.0f64..0.02) {
            let (q4, _, switched) = q4_to_q2();
            let leakage = 0.3 * lo;
            let small = DeviationConfig { delta_rel: lo, j_on: 1.0, leakage };
            let large = DeviationConfig { delta_rel: lo + extra, j_on: 1.0, leakage: leakage + extra };
            let bs = certified_bound(&build_perturbation(&switched, &sample_deviations(&q4, &switched, &small, seed, stream).unwrap()).unwrap(), FRAC_PI_2).unwrap();
            let bl = certified_bound(&build_perturbation(&switched, &sample_deviations(&q4, &switched, &large, seed, stream).unwrap()).unwrap(), FRAC_PI_2).unwrap();
            prop_assert!(bl.spectral <= bs.spectral + 1e-15);
            prop_assert!(bl.frobenius <= bs.frobenius + 1e-15);
        }

        #[test]
        fn spectral_below_frobenius(seed in any::<u64>(), delta in 0.0f64..0.1, leak in 0.0f64..0.05) {
            let (q4, _, switched) = q4_to_q2();
            let cfg = DeviationConfig { delta_rel: delta, j_on: 1.0, leakage: leak };
            let m = build_perturbation(&switched, &sample_deviations(&q4, &switched, &cfg, seed, 0).unwrap()).unwrap();
            prop_assert!(m.spectral_norm <= m.frobenius_norm + 1e-15);
            prop_assert!((m.error.clone() - m.error.transpose()).amax() == 0.0);
        }
    }
}
