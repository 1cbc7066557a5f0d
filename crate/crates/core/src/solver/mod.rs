//! Time integration of `∂ₜθ + w·∇θ + Λ^α θ = 0` on the periodic grid.
//!
//! The dissipation is integrated exactly through exponential time
//! differencing; the advection term is evaluated pseudo-spectrally with the
//! 2/3 rule. The level-set energy audit and the decay checks live in
//! [`energy`], the binary snapshot format in [`checkpoint`].

pub mod checkpoint;
pub mod energy;
mod etd;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use energy::{
    audit_energy, check_l2_monotone, check_linf_decay, truncate_level, EnergyAudit, EnergyLedger, LevelAudit,
    LinfDecayFit, MonotoneReport, PairViolation,
};
pub use etd::{phi1, phi2, phi3};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{
    dealias, forward_transform, inverse_transform, remove_mean, riesz_velocity_spectral, Fft2d, Grid, ScalarField,
    SpectralError, SpectralField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    EtdRk2,
    EtdRk4,
}

impl Integrator {
    pub fn order(self) -> u32 {
        match self {
            Integrator::EtdRk2 => 2,
            Integrator::EtdRk4 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub integrator: Integrator,
    /// Switches off `Λ^α`; only used to test conservation of the advection.
    pub dissipation: bool,
    /// Multiplies the advection term, `∂ₜθ + M w·∇θ + Λ^α θ = 0`; the
    /// rescaled problems of the iteration carry such a factor.
    pub advection_scale: f64,
}

impl SolverConfig {
    pub fn new(alpha: f64, dt: f64, t_end: f64) -> Self {
        Self {
            alpha,
            dt,
            t_end,
            dealias: true,
            integrator: Integrator::EtdRk4,
            dissipation: true,
            advection_scale: 1.0,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    /// `ε = 1 − α`.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SolverError::InvalidConfig(format!("dt {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "t_end {} must be non-negative",
                self.t_end
            )));
        }
        if !self.advection_scale.is_finite() {
            return Err(SolverError::InvalidConfig("advection_scale must be finite".into()));
        }
        Ok(())
    }

    /// Number of steps and the uniform step that lands exactly on `span`.
    pub fn steps_for(&self, span: f64) -> (usize, f64) {
        if span <= 0.0 {
            return (0, self.dt);
        }
        let n = ((span / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("dt {dt} exceeds the CFL bound {bound} at t = {time}")]
    CflViolation { dt: f64, bound: f64, time: f64 },
    #[error("blow-up at t = {time}: max|θ| went from {before} to {after} in one step")]
    BlowUp { time: f64, before: f64, after: f64 },
    #[error("history is empty")]
    EmptyHistory,
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("fitting window too short: {samples} samples spanning a factor {span_ratio} in time")]
    WindowTooShort { samples: usize, span_ratio: f64 },
}

/// Largest growth factor of `max|θ|` tolerated in one step.
pub const BLOW_UP_FACTOR: f64 = 10.0;

/// CFL safety factor in `dt ≤ CFL_SAFETY · h / max|w|`.
pub const CFL_SAFETY: f64 = 0.5;

/// Fourier coefficients of `w·∇θ`, and the largest speed seen on the grid.
fn advection_spectral(spec: &SpectralField, dealiased: bool) -> (SpectralField, f64) {
    let grid = *spec.grid();
    let n = grid.n();
    let input = if dealiased { dealias(spec) } else { spec.clone() };
    let (u, v) = riesz_velocity_spectral(&input);
    // Real fields packed pairwise: ifft(â + i b̂) = a + i b.
    let mut w = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut g = vec![Complex64::new(0.0, 0.0); grid.len()];
    let iu = Complex64::new(0.0, 1.0);
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            w[k] = u.coefficients()[k] + iu * v.coefficients()[k];
            if !grid.is_nyquist(i, j) {
                let [k1, k2] = grid.wavevector(i, j);
                let c = input.coefficients()[k];
                g[k] = iu * k1 * c + iu * (iu * k2 * c);
            }
        }
    }
    let fft = Fft2d::cached(n);
    fft.inverse(&mut w);
    fft.inverse(&mut g);
    let mut max_speed = 0.0_f64;
    let mut prod: Vec<Complex64> = w
        .iter()
        .zip(&g)
        .map(|(w, g)| {
            max_speed = max_speed.max(w.re.hypot(w.im));
            Complex64::new(w.re * g.re + w.im * g.im, 0.0)
        })
        .collect();
    fft.forward(&mut prod);
    let mut out = SpectralField::new(grid, prod).expect("length preserved");
    if dealiased {
        out = dealias(&out);
    }
    out.coefficients_mut()[0] = Complex64::new(0.0, 0.0);
    (out, max_speed)
}

/// `w·∇θ` evaluated pseudo-spectrally for a mean-zero θ.
pub fn nonlinear_term(theta: &ScalarField, dealiased: bool) -> Result<ScalarField, SolverError> {
    let mut spec = forward_transform(theta)?;
    remove_mean(&mut spec, theta.max_abs())?;
    let (adv, _) = advection_spectral(&spec, dealiased);
    Ok(inverse_transform(&adv, theta.time())?)
}

/// ETD integrator holding the state in Fourier space.
pub struct Solver {
    grid: Grid,
    config: SolverConfig,
    state: SpectralField,
    time: f64,
    coeffs: etd::Coefficients,
    coeff_dt: f64,
    last_max: f64,
    steps: u64,
}

impl Solver {
    pub fn new(initial: &ScalarField, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let grid = *initial.grid();
        let mut state = forward_transform(initial)?;
        remove_mean(&mut state, initial.max_abs())?;
        let coeffs = etd::Coefficients::new(&grid, &config, config.dt);
        Ok(Self {
            grid,
            coeff_dt: config.dt,
            config,
            state,
            time: initial.time(),
            coeffs,
            last_max: initial.max_abs(),
            steps: 0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn spectrum(&self) -> &SpectralField {
        &self.state
    }

    pub fn state(&self) -> Result<ScalarField, SolverError> {
        Ok(inverse_transform(&self.state, self.time)?)
    }

    /// `CFL_SAFETY · h / (M max|w|)` for the current state.
    pub fn cfl_bound(&self) -> f64 {
        let (_, speed) = advection_spectral(&self.state, self.config.dealias);
        cfl_from_speed(&self.grid, speed, self.config.advection_scale)
    }

    /// Time derivative `−M P(w·∇θ) − |k|^α θ̂` of the current state.
    pub fn time_derivative(&self) -> SpectralField {
        self.rhs(&self.state)
    }

    fn rhs(&self, spec: &SpectralField) -> SpectralField {
        let mut out = self.nonlinear(spec).0;
        for (o, (c, l)) in out
            .coefficients_mut()
            .iter_mut()
            .zip(spec.coefficients().iter().zip(&self.coeffs.linear))
        {
            *o += c * *l;
        }
        out
    }

    fn nonlinear(&self, spec: &SpectralField) -> (SpectralField, f64) {
        let scale = self.config.advection_scale;
        if scale == 0.0 {
            return (SpectralField::zeros(self.grid), 0.0);
        }
        let (mut adv, speed) = advection_spectral(spec, self.config.dealias);
        for c in adv.coefficients_mut() {
            *c *= -scale;
        }
        (adv, speed)
    }

    /// Advance one step of size `dt`.
    pub fn step_by(&mut self, dt: f64) -> Result<(), SolverError> {
        if dt != self.coeff_dt {
            self.coeffs = etd::Coefficients::new(&self.grid, &self.config, dt);
            self.coeff_dt = dt;
        }
        let (n0, speed) = self.nonlinear(&self.state);
        let bound = cfl_from_speed(&self.grid, speed, self.config.advection_scale);
        if dt > bound {
            return Err(SolverError::CflViolation {
                dt,
                bound,
                time: self.time,
            });
        }
        let next = match self.config.integrator {
            Integrator::EtdRk2 => etd::rk2(&self.state, n0, &self.coeffs, |s| self.nonlinear(s).0),
            Integrator::EtdRk4 => etd::rk4(&self.state, n0, &self.coeffs, |s| self.nonlinear(s).0),
        };
        let time = self.time + dt;
        let field = inverse_transform(&next, time).map_err(|_| SolverError::BlowUp {
            time,
            before: self.last_max,
            after: f64::INFINITY,
        })?;
        let after = field.max_abs();
        if after > BLOW_UP_FACTOR * self.last_max && after > f64::MIN_POSITIVE {
            return Err(SolverError::BlowUp {
                time,
                before: self.last_max,
                after,
            });
        }
        self.state = next;
        self.state.coefficients_mut()[0] = Complex64::new(0.0, 0.0);
        self.time = time;
        self.last_max = after;
        self.steps += 1;
        Ok(())
    }

    /// Advance one configured step.
    pub fn step(&mut self) -> Result<(), SolverError> {
        self.step_by(self.config.dt)
    }

    /// Advance by `span` in uniform steps no larger than `dt`, calling
    /// `observe` after every `every` steps (and at the end).
    pub fn run(
        &mut self,
        span: f64,
        every: usize,
        mut observe: impl FnMut(&Solver) -> Result<(), SolverError>,
    ) -> Result<(), SolverError> {
        let (n, dt) = self.config.steps_for(span);
        let every = every.max(1);
        let start = self.time;
        for s in 1..=n {
            self.step_by(dt)?;
            // Avoid drift of the clock over many steps.
            self.time = start + s as f64 * dt;
            if s % every == 0 || s == n {
                observe(self)?;
            }
        }
        Ok(())
    }
}

fn cfl_from_speed(grid: &Grid, speed: f64, scale: f64) -> f64 {
    let s = speed * scale.abs();
    if s > 0.0 {
        CFL_SAFETY * grid.spacing() / s
    } else {
        f64::INFINITY
    }
}

/// One step of size `config.dt` from `state`.
pub fn step(state: &ScalarField, config: &SolverConfig) -> Result<ScalarField, SolverError> {
    let mut solver = Solver::new(state, config.clone())?;
    solver.step()?;
    solver.state()
}

/// Integrate to `config.t_end`, returning snapshots every `every` steps,
/// the initial state included.
pub fn integrate(initial: &ScalarField, config: &SolverConfig, every: usize) -> Result<Vec<ScalarField>, SolverError> {
    let mut solver = Solver::new(initial, config.clone())?;
    let mut out = vec![solver.state()?];
    solver.run(config.t_end, every, |s| {
        out.push(s.state()?);
        Ok(())
    })?;
    Ok(out)
}
