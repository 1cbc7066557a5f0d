//! Level-set energy bookkeeping and the decay checks.
//!
//! For a level `λ` write `θ_λ = (θ − λ)₊`. Smooth solutions satisfy
//!
//! ```text
//!     ‖θ_λ(t₂)‖²_{L²} + 2 ∫_{t₁}^{t₂} ‖θ_λ‖²_{Ḣ^{α/2}} dt ≤ ‖θ_λ(t₁)‖²_{L²},
//! ```
//!
//! with `‖f‖²_{Ḣ^{α/2}} = ∫ f Λ^α f = L² Σ |k|^α |f̂ₖ|²`, and equality when
//! `λ` lies below the range of θ. The audit checks every pair of samples
//! with a tolerance made of a relative part and the trapezoid error
//! estimated from second differences of the integrand.

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::{forward_transform, sobolev_norm_squared_spectral, ScalarField};

/// Relative part of the per-pair tolerance.
pub const AUDIT_RELATIVE_TOLERANCE: f64 = 1e-6;
/// Multiplies the second-difference estimate of the trapezoid error.
pub const QUADRATURE_SAFETY: f64 = 4.0;
/// Relative increase of the L² norm tolerated between consecutive samples.
pub const MONOTONE_SLACK: f64 = 1e-8;
/// Slack added to `−1/α` when judging the fitted decay slope.
pub const SLOPE_SLACK: f64 = 0.2;

/// Pointwise `(θ − λ)₊`.
pub fn truncate_level(theta: &ScalarField, level: f64) -> ScalarField {
    theta
        .map(|v| (v - level).max(0.0))
        .expect("truncation keeps values finite")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub linf_norms: Vec<f64>,
    pub levels: Vec<f64>,
    /// Per level: `‖θ_λ(tᵢ)‖²_{L²}` at every sample.
    pub level_l2_squared: Vec<Vec<f64>>,
    /// Per level: `∫_{t₀}^{tᵢ} ‖θ_λ‖²_{Ḣ^{α/2}} dt` by the trapezoid rule.
    pub hdot_alpha_accumulated: Vec<Vec<f64>>,
    /// Per level: cumulative trapezoid error allowance matching
    /// `hdot_alpha_accumulated`.
    pub quadrature_allowance: Vec<Vec<f64>>,
}

impl EnergyLedger {
    pub fn from_history(history: &[ScalarField], levels: &[f64], alpha: f64) -> Result<Self, SolverError> {
        validate_history(history)?;
        let times: Vec<f64> = history.iter().map(|f| f.time()).collect();
        let mut ledger = EnergyLedger {
            l2_norms: history.iter().map(|f| f.l2_norm()).collect(),
            linf_norms: history.iter().map(|f| f.max_abs()).collect(),
            levels: levels.to_vec(),
            level_l2_squared: Vec::with_capacity(levels.len()),
            hdot_alpha_accumulated: Vec::with_capacity(levels.len()),
            quadrature_allowance: Vec::with_capacity(levels.len()),
            times,
        };
        for &level in levels {
            let mut e = Vec::with_capacity(history.len());
            let mut d = Vec::with_capacity(history.len());
            for f in history {
                let t = truncate_level(f, level);
                let l2 = t.l2_norm();
                e.push(l2 * l2);
                d.push(if t.max_abs() == 0.0 {
                    0.0
                } else {
                    sobolev_norm_squared_spectral(&forward_transform(&t)?, alpha / 2.0)
                });
            }
            let (acc, allow) = trapezoid_with_allowance(&ledger.times, &d);
            ledger.level_l2_squared.push(e);
            ledger.hdot_alpha_accumulated.push(acc);
            ledger.quadrature_allowance.push(allow);
        }
        Ok(ledger)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn validate_history(history: &[ScalarField]) -> Result<(), SolverError> {
    let first = history.first().ok_or(SolverError::EmptyHistory)?;
    if history.iter().any(|f| f.grid() != first.grid()) {
        return Err(SolverError::InvalidHistory("snapshots live on different grids".into()));
    }
    if history.windows(2).any(|w| w[1].time() <= w[0].time()) {
        return Err(SolverError::InvalidHistory(
            "snapshot times must increase strictly".into(),
        ));
    }
    if history.len() > 2 {
        let h0 = history[1].time() - history[0].time();
        if history
            .windows(2)
            .any(|w| ((w[1].time() - w[0].time()) - h0).abs() > 1e-6 * h0)
        {
            return Err(SolverError::InvalidHistory("snapshots must be uniformly spaced".into()));
        }
    }
    Ok(())
}

/// Cumulative trapezoid integral of `d` and a matching cumulative error
/// allowance `QUADRATURE_SAFETY · hᵢ · |Δ²d| / 12` per interval, with the
/// second difference taken from the neighbouring stencils.
fn trapezoid_with_allowance(times: &[f64], d: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut acc = vec![0.0; n];
    let mut allow = vec![0.0; n];
    let second = |j: usize| (d[j + 1] - 2.0 * d[j] + d[j - 1]).abs();
    for i in 0..n.saturating_sub(1) {
        let h = times[i + 1] - times[i];
        acc[i + 1] = acc[i] + 0.5 * h * (d[i] + d[i + 1]);
        let local = if n < 3 {
            // No curvature information: fall back to the variation bound.
            0.5 * (d[i + 1] - d[i]).abs() * 12.0 / QUADRATURE_SAFETY
        } else {
            let mut m = 0.0_f64;
            for j in [i, i + 1] {
                if j >= 1 && j + 1 < n {
                    m = m.max(second(j));
                }
            }
            m
        };
        allow[i + 1] = allow[i] + QUADRATURE_SAFETY * h * local / 12.0;
    }
    (acc, allow)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub t1: f64,
    pub t2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAudit {
    pub level: f64,
    pub pass: bool,
    pub pairs_checked: usize,
    pub violation_count: usize,
    /// First few violating pairs.
    pub violations: Vec<PairViolation>,
    /// Largest `lhs − rhs − tolerance` over all pairs (negative when passing).
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub ledger: EnergyLedger,
    pub levels: Vec<LevelAudit>,
    pub pass: bool,
}

const REPORTED_VIOLATIONS: usize = 8;

/// Check the level-set energy inequality for every level and every pair of
/// samples.
pub fn audit_energy(history: &[ScalarField], levels: &[f64], alpha: f64) -> Result<EnergyAudit, SolverError> {
    let ledger = EnergyLedger::from_history(history, levels, alpha)?;
    let n = ledger.len();
    let mut audits = Vec::with_capacity(levels.len());
    for (l, &level) in levels.iter().enumerate() {
        let e = &ledger.level_l2_squared[l];
        let acc = &ledger.hdot_alpha_accumulated[l];
        let allow = &ledger.quadrature_allowance[l];
        let mut audit = LevelAudit {
            level,
            pass: true,
            pairs_checked: 0,
            violation_count: 0,
            violations: Vec::new(),
            worst_excess: f64::NEG_INFINITY,
        };
        for i in 0..n {
            for j in i + 1..n {
                let lhs = e[j] + 2.0 * (acc[j] - acc[i]);
                let rhs = e[i];
                let tolerance = AUDIT_RELATIVE_TOLERANCE * e[i] + 2.0 * (allow[j] - allow[i]);
                let excess = lhs - rhs - tolerance;
                audit.pairs_checked += 1;
                audit.worst_excess = audit.worst_excess.max(excess);
                if excess > 0.0 {
                    audit.pass = false;
                    audit.violation_count += 1;
                    if audit.violations.len() < REPORTED_VIOLATIONS {
                        audit.violations.push(PairViolation {
                            t1: ledger.times[i],
                            t2: ledger.times[j],
                            lhs,
                            rhs,
                            tolerance,
                        });
                    }
                }
            }
        }
        if audit.pairs_checked == 0 {
            audit.worst_excess = 0.0;
        }
        audits.push(audit);
    }
    let pass = audits.iter().all(|a| a.pass);
    Ok(EnergyAudit {
        ledger,
        levels: audits,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub pass: bool,
    /// Sample indices `i` with `‖θ(tᵢ₊₁)‖ > (1 + slack) ‖θ(tᵢ)‖`.
    pub violations: Vec<usize>,
    pub max_relative_increase: f64,
}

/// L² norms non-increasing up to `MONOTONE_SLACK` relative per step.
pub fn check_l2_monotone(ledger: &EnergyLedger) -> MonotoneReport {
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for (i, w) in ledger.l2_norms.windows(2).enumerate() {
        let rel = if w[0] > 0.0 {
            (w[1] - w[0]) / w[0]
        } else if w[1] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(rel);
        if w[1] > w[0] * (1.0 + MONOTONE_SLACK) {
            violations.push(i);
        }
    }
    MonotoneReport {
        pass: violations.is_empty(),
        violations,
        max_relative_increase: if worst.is_finite() || worst == f64::INFINITY {
            worst
        } else {
            0.0
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfDecayFit {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    /// `sup ‖θ(t)‖_∞ · t^{1/α} / ‖θ₀‖_{L²}` over the window.
    pub constant: f64,
    /// Least-squares slope of `log ‖θ‖_∞` against `log t`; absent when θ
    /// vanishes somewhere in the window.
    pub slope: Option<f64>,
    /// `exp(intercept) / ‖θ₀‖_{L²}` of the fit.
    pub fitted_prefactor: Option<f64>,
    pub slope_limit: f64,
    pub pass: bool,
}

/// Fit `‖θ(t)‖_∞ ≈ C t^{slope}` over `[t_min, t_max]` and report the
/// smallest constant making `‖θ(t)‖_∞ ≤ C t^{−1/α} ‖θ₀‖_{L²}` hold on the
/// samples. Passes when that constant is finite and the slope is at most
/// `−1/α + SLOPE_SLACK`; decay faster than the power law is accepted.
pub fn check_linf_decay(
    ledger: &EnergyLedger,
    l2_initial: f64,
    alpha: f64,
    t_min: f64,
    t_max: f64,
) -> Result<LinfDecayFit, SolverError> {
    let window: Vec<(f64, f64)> = ledger
        .times
        .iter()
        .zip(&ledger.linf_norms)
        .filter(|(t, _)| **t >= t_min * (1.0 - 1e-12) && **t <= t_max * (1.0 + 1e-12) && **t > 0.0)
        .map(|(t, v)| (*t, *v))
        .collect();
    let span = match (window.first(), window.last()) {
        (Some(a), Some(b)) => b.0 / a.0,
        _ => 0.0,
    };
    if window.len() < 3 || span < 10.0 * (1.0 - 1e-9) {
        return Err(SolverError::WindowTooShort {
            samples: window.len(),
            span_ratio: span,
        });
    }
    let slope_limit = -1.0 / alpha + SLOPE_SLACK;
    if window.iter().all(|(_, v)| *v == 0.0) {
        return Ok(LinfDecayFit {
            t_min,
            t_max,
            samples: window.len(),
            constant: 0.0,
            slope: None,
            fitted_prefactor: None,
            slope_limit,
            pass: true,
        });
    }
    let constant = window
        .iter()
        .map(|(t, v)| v * t.powf(1.0 / alpha) / l2_initial)
        .fold(0.0_f64, f64::max);
    let (slope, prefactor) = if window.iter().any(|(_, v)| *v <= 0.0) {
        (None, None)
    } else {
        let pts: Vec<(f64, f64)> = window.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
        let (s, b) = least_squares(&pts);
        (Some(s), Some(b.exp() / l2_initial))
    };
    let pass = constant.is_finite() && slope.is_none_or(|s| s <= slope_limit);
    Ok(LinfDecayFit {
        t_min,
        t_max,
        samples: window.len(),
        constant,
        slope,
        fitted_prefactor: prefactor,
        slope_limit,
        pass,
    })
}

/// Slope and intercept of the ordinary least-squares line through `pts`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{integrate, SolverConfig};
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn sine(grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let grid = Grid::periodic(64).unwrap();
        let s = sine(grid);
        let below = truncate_level(&s, -2.0);
        assert!(below
            .values()
            .iter()
            .zip(s.values())
            .all(|(a, b)| (a - b - 2.0).abs() < 1e-15));
        assert_eq!(truncate_level(&s, 1.5).max_abs(), 0.0);
        // ∫ (sin x₁)₊² over the torus is half of ∫ sin² = 2π².
        let pos = truncate_level(&s, 0.0);
        let l2sq = pos.l2_norm().powi(2);
        assert!((l2sq - PI * PI).abs() < 1e-12, "{l2sq}");
    }

    #[test]
    fn single_mode_energy_identity_is_tight_below_range() {
        let grid = Grid::periodic(32).unwrap();
        let history = integrate(&sine(grid), &SolverConfig::new(1.0, 1e-3, 1.0), 20).unwrap();
        let audit = audit_energy(&history, &[-1.5, 0.0, 0.5], 1.0).unwrap();
        assert!(audit.pass, "{:?}", audit.levels);
        // Below the range the inequality is an identity up to quadrature.
        let l = &audit.levels[0];
        assert!(l.worst_excess <= 0.0);
        let led = &audit.ledger;
        let n = led.len() - 1;
        let lhs = led.level_l2_squared[0][n] + 2.0 * led.hdot_alpha_accumulated[0][n];
        let rhs = led.level_l2_squared[0][0];
        assert!(((lhs - rhs) / rhs).abs() < 1e-4, "{lhs} vs {rhs}");
    }

    #[test]
    fn level_above_history_is_trivial() {
        let grid = Grid::periodic(16).unwrap();
        let history = integrate(&sine(grid), &SolverConfig::new(1.0, 1e-2, 0.2), 5).unwrap();
        let audit = audit_energy(&history, &[1.0], 1.0).unwrap();
        assert!(audit.pass);
        assert!(audit.ledger.level_l2_squared[0].iter().all(|v| *v == 0.0));
        assert!(audit.ledger.hdot_alpha_accumulated[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_empty_and_non_uniform_history() {
        assert!(matches!(audit_energy(&[], &[0.0], 1.0), Err(SolverError::EmptyHistory)));
        let grid = Grid::periodic(8).unwrap();
        let h = vec![
            ScalarField::zeros(grid, 0.0),
            ScalarField::zeros(grid, 0.1),
            ScalarField::zeros(grid, 0.3),
        ];
        assert!(matches!(
            audit_energy(&h, &[0.0], 1.0),
            Err(SolverError::InvalidHistory(_))
        ));
    }

    #[test]
    fn monotone_examples() {
        let grid = Grid::periodic(16).unwrap();
        let history = integrate(&sine(grid), &SolverConfig::new(1.0, 1e-2, 1.0), 10).unwrap();
        let ledger = EnergyLedger::from_history(&history, &[], 1.0).unwrap();
        let r = check_l2_monotone(&ledger);
        assert!(r.pass && r.max_relative_increase < 0.0);
        let zeros: Vec<ScalarField> = (0..5).map(|i| ScalarField::zeros(grid, i as f64)).collect();
        assert!(check_l2_monotone(&EnergyLedger::from_history(&zeros, &[], 1.0).unwrap()).pass);
    }

    #[test]
    fn linf_decay_single_mode_from_t_one() {
        let grid = Grid::periodic(16).unwrap();
        let history = integrate(&sine(grid), &SolverConfig::new(1.0, 1e-2, 10.0), 50).unwrap();
        let ledger = EnergyLedger::from_history(&history, &[], 1.0).unwrap();
        let l2 = history[0].l2_norm();
        let fit = check_linf_decay(&ledger, l2, 1.0, 1.0, 10.0).unwrap();
        assert!(fit.pass);
        // e^{−t} t is maximal at t = 1, so C is read off there.
        assert!((fit.constant - (-1.0f64).exp() / l2).abs() < 1e-10 / l2);
        assert!(check_linf_decay(&ledger, l2, 1.0, 1.0, 5.0).is_err());
    }

    #[test]
    fn linf_decay_zero_field_is_vacuous() {
        let grid = Grid::periodic(8).unwrap();
        let zeros: Vec<ScalarField> = (0..21).map(|i| ScalarField::zeros(grid, 0.1 * i as f64)).collect();
        let ledger = EnergyLedger::from_history(&zeros, &[], 1.0).unwrap();
        let fit = check_linf_decay(&ledger, 1.0, 1.0, 0.1, 2.0).unwrap();
        assert!(fit.pass && fit.constant == 0.0 && fit.slope.is_none());
    }
}
