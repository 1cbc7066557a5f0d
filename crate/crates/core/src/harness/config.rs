//! `RunConfig` and its flat `key = value` file format.
//!
//! Keys are the field names. Reals are written in shortest round-trip
//! form, so `parse(render(c)) == c` for every valid config.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `sin(x₁)` in units of the base wavenumber.
    SingleMode,
    /// Random Fourier modes with `k_min ≤ |k| ≤ k_max`, scaled to
    /// `max|θ₀| = amplitude`.
    RandomBandLimited { k_min: f64, k_max: f64, amplitude: f64 },
    /// A checkpoint file.
    File(PathBuf),
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SingleMode => write!(f, "single_mode"),
            Self::RandomBandLimited {
                k_min,
                k_max,
                amplitude,
            } => {
                write!(
                    f,
                    "random_band_limited(k_min = {k_min:?}, k_max = {k_max:?}, amplitude = {amplitude:?})"
                )
            }
            Self::File(p) => write!(f, "file({})", p.display()),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "single_mode" {
            return Ok(Self::SingleMode);
        }
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|body| body.split_once('('))
            .ok_or_else(|| format!("unknown initial condition `{s}`"))?;
        match name.trim() {
            "file" => Ok(Self::File(PathBuf::from(args.trim()))),
            "random_band_limited" => {
                let (mut k_min, mut k_max, mut amplitude) = (2.0, 8.0, 1.0);
                for part in args.split(',').filter(|p| !p.trim().is_empty()) {
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| format!("expected key = value in `{part}`"))?;
                    let v: f64 = v.trim().parse().map_err(|e| format!("{}: {e}", k.trim()))?;
                    match k.trim() {
                        "k_min" => k_min = v,
                        "k_max" => k_max = v,
                        "amplitude" => amplitude = v,
                        other => return Err(format!("unknown parameter `{other}`")),
                    }
                }
                Ok(Self::RandomBandLimited {
                    k_min,
                    k_max,
                    amplitude,
                })
            }
            other => Err(format!("unknown initial condition `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// L² monotonicity, the level-set energy audit and L^∞ decay.
    Energy,
    Tail,
    Extension,
    Oscillation,
    Constants,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 5] = [
        Self::Energy,
        Self::Tail,
        Self::Extension,
        Self::Oscillation,
        Self::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Energy => "energy",
            Self::Tail => "tail",
            Self::Extension => "extension",
            Self::Oscillation => "oscillation",
            Self::Constants => "constants",
        }
    }
}

impl FromStr for Diagnostic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s.trim())
            .ok_or_else(|| format!("unknown diagnostic `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub initial_condition: InitialCondition,
    /// Time between written snapshots.
    pub snapshot_interval: f64,
    pub diagnostics: BTreeSet<Diagnostic>,
    /// Rescale/recenter steps when the oscillation suite runs.
    pub iteration_steps: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 64,
            alpha: 1.0,
            dt: 1e-3,
            t_end: 1.0,
            seed: 0,
            initial_condition: InitialCondition::SingleMode,
            snapshot_interval: 0.1,
            diagnostics: BTreeSet::new(),
            iteration_steps: 4,
            output_dir: PathBuf::from("out"),
        }
    }
}

const KEYS: [&str; 10] = [
    "n",
    "alpha",
    "dt",
    "t_end",
    "seed",
    "initial_condition",
    "snapshot_interval",
    "diagnostics",
    "iteration_steps",
    "output_dir",
];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| HarnessError::Config { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            fn num<T: FromStr>(v: &str) -> Result<T, String>
            where
                T::Err: fmt::Display,
            {
                v.parse().map_err(|e: T::Err| format!("`{v}`: {e}"))
            }
            let set = |cfg: &mut Self| -> Result<(), String> {
                match key {
                    "n" => cfg.n = num(value)?,
                    "alpha" => cfg.alpha = num(value)?,
                    "dt" => cfg.dt = num(value)?,
                    "t_end" => cfg.t_end = num(value)?,
                    "seed" => cfg.seed = num(value)?,
                    "initial_condition" => cfg.initial_condition = value.parse()?,
                    "snapshot_interval" => cfg.snapshot_interval = num(value)?,
                    "diagnostics" => {
                        cfg.diagnostics = value
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty() && *s != "none")
                            .map(str::parse)
                            .collect::<Result<_, _>>()?
                    }
                    "iteration_steps" => cfg.iteration_steps = num(value)?,
                    "output_dir" => cfg.output_dir = PathBuf::from(value),
                    _ => unreachable!(),
                }
                Ok(())
            };
            set(&mut cfg).map_err(|m| err(format!("{key}: {m}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("n = {} must be a power of two >= 8", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if !(self.snapshot_interval > 0.0) {
            return bad(format!(
                "snapshot_interval = {} must be positive",
                self.snapshot_interval
            ));
        }
        if let InitialCondition::RandomBandLimited {
            k_min,
            k_max,
            amplitude,
        } = self.initial_condition
        {
            if !(k_min >= 1.0 && k_max >= k_min && k_max <= (self.n / 3) as f64 && amplitude > 0.0) {
                return bad(format!("random_band_limited needs 1 <= k_min <= k_max <= n/3 and amplitude > 0, got {k_min}, {k_max}, {amplitude}"));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let diags: Vec<&str> = self.diagnostics.iter().map(|d| d.name()).collect();
        format!(
            "n = {}\nalpha = {:?}\ndt = {:?}\nt_end = {:?}\nseed = {}\ninitial_condition = {}\nsnapshot_interval = {:?}\ndiagnostics = {}\niteration_steps = {}\noutput_dir = {}\n",
            self.n,
            self.alpha,
            self.dt,
            self.t_end,
            self.seed,
            self.initial_condition,
            self.snapshot_interval,
            if diags.is_empty() { "none".to_string() } else { diags.join(", ") },
            self.iteration_steps,
            self.output_dir.display(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_defaults() {
        let cfg = RunConfig::parse("# run\nn = 32  # small\n\nalpha = 0.9\ndiagnostics = energy, tail\n").unwrap();
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.alpha, 0.9);
        assert_eq!(cfg.dt, RunConfig::default().dt);
        assert!(cfg.diagnostics.contains(&Diagnostic::Tail));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = RunConfig::parse("n = 32\nsize = 4\n").unwrap_err();
        assert!(matches!(e, HarnessError::Config { line: 2, .. }), "{e}");
        assert!(RunConfig::parse("n = 32\nn = 64\n").is_err());
        assert!(RunConfig::parse("n = 48\n").is_err());
    }

    #[test]
    fn initial_condition_syntax() {
        let ic: InitialCondition = "random_band_limited(k_max = 6)".parse().unwrap();
        assert_eq!(
            ic,
            InitialCondition::RandomBandLimited {
                k_min: 2.0,
                k_max: 6.0,
                amplitude: 1.0
            }
        );
        assert_eq!(
            "file(a/b.sqgd)".parse::<InitialCondition>().unwrap(),
            InitialCondition::File("a/b.sqgd".into())
        );
        assert!("gaussian".parse::<InitialCondition>().is_err());
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(
            log_n in 3u32..10,
            alpha in 0.01..=1.0f64,
            dt in 1e-6..1.0f64,
            t_end in 0.0..100.0f64,
            seed in any::<u64>(),
            which in 0usize..3,
            k_min in 1.0..2.0f64,
            amplitude in 0.01..10.0f64,
            mask in 0u8..32,
            steps in 1usize..10,
        ) {
            let n = 1usize << log_n;
            let initial_condition = match which {
                0 => InitialCondition::SingleMode,
                1 => InitialCondition::RandomBandLimited { k_min, k_max: (n / 3) as f64, amplitude },
                _ => InitialCondition::File("runs/ic.sqgd".into()),
            };
            let diagnostics = Diagnostic::ALL.into_iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|p| p.1).collect();
            let cfg = RunConfig { n, alpha, dt, t_end, seed, initial_condition, snapshot_interval: dt * 3.0, diagnostics, iteration_steps: steps, output_dir: "out/x".into() };
            prop_assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg);
        }
    }
}
