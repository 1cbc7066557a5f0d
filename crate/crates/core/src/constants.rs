//! Constant selection for the oscillation iteration.
//!
//! The build order is fixed: the velocity bounds `L` and `C` come first, then
//! `ρ`, then the measured improvement `η`, then `δ`. [`ConstantLedger`]
//! refuses to hand out a quantity before its inputs are recorded.
//!
//! Feasibility means all five of
//!
//! ```text
//!     L ρ^α + ρ ≤ 1/2,    −C ρ^α log ρ + C ρ^{1+α} + ρ ≤ 1/2,    ρ ≤ 1/16,
//!     ρ^δ ≥ max(1 − η, 2/3),    ρ^{−δ} ≤ 2.
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RHO_CAP: f64 = 1.0 / 16.0;
pub const RHO_RESOLUTION: f64 = 1e-12;
const SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("{0} must be computed before it is read")]
    NotYetComputed(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no admissible {0}")]
    Infeasible(&'static str),
}

fn flow_constraint(l: f64, rho: f64, alpha: f64) -> f64 {
    l * rho.powf(alpha) + rho
}

fn step_constraint(c: f64, rho: f64, alpha: f64) -> f64 {
    -c * rho.powf(alpha) * rho.ln() + c * rho.powf(1.0 + alpha) + rho
}

fn rho_admissible(l: f64, c: f64, alpha: f64, rho: f64) -> bool {
    rho <= RHO_CAP && flow_constraint(l, rho, alpha) <= 0.5 && step_constraint(c, rho, alpha) <= 0.5
}

/// Largest `ρ ∈ (0, 1/16]` meeting the two containment constraints, found by
/// bisection down to [`RHO_RESOLUTION`]. Both constraint functions increase
/// in `ρ` on this interval.
pub fn choose_rho(l: f64, c: f64, alpha: f64) -> Result<f64, ConstantsError> {
    if !(l >= 0.0 && c >= 0.0 && l.is_finite() && c.is_finite()) {
        return Err(ConstantsError::InvalidInput(format!("L = {l}, C = {c}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ConstantsError::InvalidInput(format!("alpha = {alpha}")));
    }
    if rho_admissible(l, c, alpha, RHO_CAP) {
        return Ok(RHO_CAP);
    }
    let (mut lo, mut hi) = (RHO_RESOLUTION, RHO_CAP);
    if !rho_admissible(l, c, alpha, lo) {
        return Err(ConstantsError::Infeasible("rho"));
    }
    while hi - lo > RHO_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if rho_admissible(l, c, alpha, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `δ = log(max(1 − η, 2/3)) / log ρ`, the largest exponent with
/// `ρ^δ ≥ max(1 − η, 2/3)`, nudged down if rounding breaks that bound.
pub fn choose_delta(rho: f64, eta: f64) -> Result<f64, ConstantsError> {
    if !(rho > 0.0 && rho <= RHO_CAP) {
        return Err(ConstantsError::InvalidInput(format!("rho = {rho}")));
    }
    if !(eta > 0.0) {
        return Err(ConstantsError::Infeasible("delta"));
    }
    let target = (1.0 - eta).max(2.0 / 3.0);
    let mut delta = target.ln() / rho.ln();
    while rho.powf(delta) < target {
        delta = f64::from_bits(delta.to_bits() - 1);
    }
    Ok(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosingCheck {
    /// `(4ρ)^δ (3/2 − ρ^δ/2)`.
    pub value: f64,
    /// `ρ^{δ/2} (3/2 − ρ^δ/2)`.
    pub majorant: f64,
    /// `1 − majorant`, computed without cancellation.
    pub deficit: f64,
    /// `(4ρ)^δ ≤ ρ^{δ/2}`.
    pub chain: bool,
    pub pass: bool,
}

/// With `x = ρ^{δ/2}` the majorant is `x (3/2 − x²/2)`, whose gap to 1 is
/// `(1 − x)² (2 + x) / 2`.
pub fn verify_closing_inequality(rho: f64, delta: f64) -> ClosingCheck {
    let half_log = 0.5 * delta * rho.ln();
    let x = half_log.exp();
    let one_minus_x = -half_log.exp_m1();
    let rho_delta = x * x;
    let tail = 1.5 - 0.5 * rho_delta;
    let value = (4.0 * rho).powf(delta) * tail;
    let majorant = x * tail;
    let deficit = one_minus_x * one_minus_x * (2.0 + x) / 2.0;
    let chain = (4.0 * rho).powf(delta) <= x * (1.0 + SLACK);
    ClosingCheck {
        value,
        majorant,
        deficit,
        chain,
        pass: chain && deficit > 0.0 && majorant <= 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub flow_containment: bool,
    pub step_containment: bool,
    pub rho_cap: bool,
    pub delta_floor: bool,
    pub delta_doubling: bool,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.flow_containment && self.step_containment && self.rho_cap && self.delta_floor && self.delta_doubling
    }
}

/// Direct substitution of `(L, C, α, ρ, η, δ)` into the five constraints.
pub fn check_invariants(l: f64, c: f64, alpha: f64, rho: f64, eta: f64, delta: f64) -> Feasibility {
    let rd = rho.powf(delta);
    Feasibility {
        flow_containment: flow_constraint(l, rho, alpha) <= 0.5 + SLACK,
        step_containment: step_constraint(c, rho, alpha) <= 0.5 + SLACK,
        rho_cap: rho <= RHO_CAP,
        delta_floor: rd >= (1.0 - eta).max(2.0 / 3.0) * (1.0 - SLACK),
        delta_doubling: 1.0 / rd <= 2.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    pub epsilon: f64,
    pub alpha: f64,
    pub l: Option<f64>,
    pub c_step: Option<f64>,
    pub m: Option<f64>,
    pub eta: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub feasibility: Option<Feasibility>,
    pub closing: Option<ClosingCheck>,
}

impl ConstantLedger {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            alpha: 1.0 - epsilon,
            l: None,
            c_step: None,
            m: None,
            eta: None,
            rho: None,
            delta: None,
            feasibility: None,
            closing: None,
        }
    }

    pub fn set_velocity_bounds(&mut self, l: f64, c_step: f64, m: f64) {
        self.l = Some(l);
        self.c_step = Some(c_step);
        self.m = Some(m);
        self.rho = None;
        self.eta = None;
        self.delta = None;
        self.feasibility = None;
        self.closing = None;
    }

    pub fn select_rho(&mut self) -> Result<f64, ConstantsError> {
        let l = self.l.ok_or(ConstantsError::NotYetComputed("L"))?;
        let c = self.c_step.ok_or(ConstantsError::NotYetComputed("C"))?;
        let rho = choose_rho(l, c, self.alpha)?;
        self.rho = Some(rho);
        Ok(rho)
    }

    /// Record the measured improvement; `ρ` must already be fixed.
    pub fn record_eta(&mut self, eta: f64) -> Result<(), ConstantsError> {
        self.rho.ok_or(ConstantsError::NotYetComputed("rho"))?;
        self.eta = Some(eta);
        self.delta = None;
        Ok(())
    }

    pub fn select_delta(&mut self) -> Result<f64, ConstantsError> {
        let rho = self.rho.ok_or(ConstantsError::NotYetComputed("rho"))?;
        let eta = self.eta.ok_or(ConstantsError::NotYetComputed("eta"))?;
        let delta = choose_delta(rho, eta)?;
        self.delta = Some(delta);
        let l = self.l.ok_or(ConstantsError::NotYetComputed("L"))?;
        let c = self.c_step.ok_or(ConstantsError::NotYetComputed("C"))?;
        self.feasibility = Some(check_invariants(l, c, self.alpha, rho, eta, delta));
        self.closing = Some(verify_closing_inequality(rho, delta));
        Ok(delta)
    }

    /// Run the whole chain for given `L`, `C`, `M` and `η`.
    pub fn solve(epsilon: f64, l: f64, c_step: f64, m: f64, eta: f64) -> Result<Self, ConstantsError> {
        let mut ledger = Self::new(epsilon);
        ledger.set_velocity_bounds(l, c_step, m);
        ledger.select_rho()?;
        ledger.record_eta(eta)?;
        ledger.select_delta()?;
        Ok(ledger)
    }

    pub fn feasible(&self) -> bool {
        self.feasibility.is_some_and(|f| f.all()) && self.closing.is_some_and(|c| c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_bounds_give_the_cap() {
        assert_eq!(choose_rho(0.0, 0.0, 0.9).unwrap(), RHO_CAP);
    }

    #[test]
    fn flow_constraint_binds_with_the_cap() {
        // 7ρ + ρ = 1/2 at ρ = 1/16.
        assert_eq!(choose_rho(7.0, 0.0, 1.0).unwrap(), RHO_CAP);
        let rho = choose_rho(15.0, 0.0, 1.0).unwrap();
        assert!((rho - 1.0 / 32.0).abs() < 2e-12);
    }

    #[test]
    fn step_constraint_matches_independent_root() {
        let g = |r: f64| -5.0 * r.powf(0.95) * r.ln() + 5.0 * r.powf(1.95) + r - 0.5;
        // Regula falsi on a bracket containing the root.
        let (mut a, mut b) = (1e-6, 0.2);
        for _ in 0..200 {
            let c = b - g(b) * (b - a) / (g(b) - g(a));
            if g(c) > 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        let root = if g(a).abs() < g(b).abs() { a } else { b };
        let want = root.min(RHO_CAP);
        let got = choose_rho(0.0, 5.0, 0.95).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn delta_examples() {
        let d = choose_delta(RHO_CAP, 0.1).unwrap();
        assert!((d - 0.9f64.ln() / RHO_CAP.ln()).abs() < 1e-15);
        assert!((d - 0.0380).abs() < 5e-5);
        let floor = choose_delta(RHO_CAP, 0.999).unwrap();
        assert!((floor - (2.0f64 / 3.0).ln() / RHO_CAP.ln()).abs() < 1e-15);
        assert_eq!(choose_delta(RHO_CAP, 0.0), Err(ConstantsError::Infeasible("delta")));
    }

    #[test]
    fn closing_inequality_examples() {
        let c = verify_closing_inequality(RHO_CAP, 0.038);
        assert!((c.majorant - 0.996).abs() < 1e-3 && c.pass);
        assert!((c.value - c.majorant).abs() < 1e-14);
        for k in 0..=60 {
            let delta = 1e-6 * 10f64.powf(k as f64 / 10.0);
            assert!(verify_closing_inequality(RHO_CAP, delta).pass, "delta = {delta}");
        }
    }

    #[test]
    fn ledger_enforces_build_order() {
        let mut ledger = ConstantLedger::new(0.05);
        assert_eq!(ledger.select_rho(), Err(ConstantsError::NotYetComputed("L")));
        assert_eq!(ledger.record_eta(0.1), Err(ConstantsError::NotYetComputed("rho")));
        ledger.set_velocity_bounds(2.0, 1.0, 1.0);
        assert_eq!(ledger.select_delta(), Err(ConstantsError::NotYetComputed("rho")));
        ledger.select_rho().unwrap();
        assert_eq!(ledger.select_delta(), Err(ConstantsError::NotYetComputed("eta")));
        ledger.record_eta(0.1).unwrap();
        ledger.select_delta().unwrap();
        assert!(ledger.feasible());
    }

    proptest! {
        #[test]
        fn chosen_constants_satisfy_invariants(l in 0.0..50.0f64, c in 0.0..50.0f64, alpha in 0.5..=1.0f64, eta in 0.001..0.999f64) {
            let ledger = ConstantLedger::solve(1.0 - alpha, l, c, 1.0, eta).unwrap();
            prop_assert!(ledger.feasible(), "{:?}", ledger);
        }

        #[test]
        fn rho_is_monotone(l in 0.0..50.0f64, c in 0.0..50.0f64, dl in 0.0..10.0f64, dc in 0.0..10.0f64, alpha in 0.5..=1.0f64) {
            let base = choose_rho(l, c, alpha).unwrap();
            prop_assert!(choose_rho(l + dl, c, alpha).unwrap() <= base);
            prop_assert!(choose_rho(l, c + dc, alpha).unwrap() <= base);
        }

        #[test]
        fn delta_is_monotone(rho in 1e-6..RHO_CAP, e1 in 0.001..0.999f64, e2 in 0.001..0.999f64) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(choose_delta(rho, lo).unwrap() <= choose_delta(rho, hi).unwrap());
        }
    }
}
