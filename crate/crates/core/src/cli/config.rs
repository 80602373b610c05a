use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::{TimeGrid, SUBSTEPS_PER_PERIOD};
use crate::error::{Error, Result};
use crate::model::SensorParams;
use crate::noise::{estimated_decay_times, LindbladParams, OUParams, PhenomNoise};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Dynamics,
    DynamicsPhase,
    Fisher,
    FisherNoisy,
    Lindblad,
    LindbladFit,
    OuPulses,
    MeasureDelay,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Dynamics,
        Experiment::DynamicsPhase,
        Experiment::Fisher,
        Experiment::FisherNoisy,
        Experiment::Lindblad,
        Experiment::LindbladFit,
        Experiment::OuPulses,
        Experiment::MeasureDelay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Dynamics => "dynamics",
            Experiment::DynamicsPhase => "dynamics-phase",
            Experiment::Fisher => "fisher",
            Experiment::FisherNoisy => "fisher-noisy",
            Experiment::Lindblad => "lindblad",
            Experiment::LindbladFit => "lindblad-fit",
            Experiment::OuPulses => "ou-pulses",
            Experiment::MeasureDelay => "measure-delay",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self == Experiment::OuPulses
    }

    fn uses_lindblad(self) -> bool {
        matches!(self, Experiment::Lindblad | Experiment::LindbladFit | Experiment::MeasureDelay)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Flat experiment configuration. Unset fields take per-experiment defaults
/// in [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub g: Option<f64>,
    pub b: Option<f64>,
    pub omega: Option<f64>,
    pub phi: Option<f64>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub n_samples: Option<usize>,
    pub h: Option<f64>,
    /// Relaxation time of the phenomenological noise model.
    pub t1: Option<f64>,
    /// Dephasing time of the phenomenological noise model.
    pub t2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub t_c: Option<f64>,
    /// Pulse spacing δt.
    pub delta_t: Option<f64>,
    pub n_traj: Option<usize>,
    /// Time at which the measured state is taken (measure-delay).
    pub t_state: Option<f64>,
    /// Largest inter-measurement delay (measure-delay).
    pub delay_max: Option<f64>,
    pub seed: Option<u64>,
    pub output_path: Option<String>,
}

fn set_default<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn require<T: Copy>(slot: Option<T>, key: &str) -> Result<T> {
    slot.ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Reads a config file, applies `key=value` overrides (values parsed as
    /// JSON when possible, otherwise as strings) and then `seed`.
    pub fn load(path: Option<&Path>, sets: &[String], seed: Option<u64>) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| Error::Config(format!("invalid JSON in {}: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        let obj = doc.as_object_mut().ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        for item in sets {
            let (key, raw) =
                item.split_once('=').ok_or_else(|| Error::Config(format!("--set expects key=value, got '{item}'")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            obj.insert(key.trim().to_string(), value);
        }
        let mut cfg: Self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if seed.is_some() {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    /// Fills every field the experiment consumes with its default and
    /// validates the result. Fields the experiment ignores are cleared.
    pub fn resolve(&self, experiment: Experiment) -> Result<Self> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(Error::Config(format!("config is for experiment '{e}' but '{experiment}' was requested")));
            }
        }
        let mut c = Self {
            experiment: Some(experiment),
            g: self.g,
            b: self.b,
            omega: self.omega,
            phi: self.phi,
            t_start: self.t_start,
            t_end: self.t_end,
            n_samples: self.n_samples,
            h: self.h,
            seed: self.seed,
            output_path: self.output_path.clone(),
            ..Self::default()
        };
        set_default(&mut c.g, 1.0);
        set_default(&mut c.b, 1.0);
        set_default(&mut c.omega, 10.0);
        set_default(&mut c.phi, if experiment == Experiment::DynamicsPhase { PI / 6.0 } else { 0.0 });
        set_default(&mut c.t_start, 0.0);
        let params = SensorParams::with_phase(c.g.unwrap(), c.b.unwrap(), c.omega.unwrap(), c.phi.unwrap())?;
        let field_step = params.period() / SUBSTEPS_PER_PERIOD;

        match experiment {
            Experiment::Dynamics | Experiment::DynamicsPhase => {
                set_default(&mut c.t_end, 20.0);
                set_default(&mut c.n_samples, 2001);
                set_default(&mut c.h, field_step);
            }
            Experiment::Fisher => {
                set_default(&mut c.t_end, 20.0);
                set_default(&mut c.n_samples, 2001);
                c.h = None;
            }
            Experiment::FisherNoisy => {
                c.t1 = Some(self.t1.unwrap_or(300.0));
                c.t2 = Some(self.t2.unwrap_or(200.0));
                set_default(&mut c.t_end, 300.0);
                set_default(&mut c.n_samples, 3001);
                c.h = None;
            }
            Experiment::Lindblad | Experiment::LindbladFit | Experiment::MeasureDelay => {
                c.gamma1 = Some(self.gamma1.unwrap_or(0.01));
                c.gamma2 = Some(self.gamma2.unwrap_or(0.05));
                set_default(&mut c.h, 0.01);
                if experiment == Experiment::MeasureDelay {
                    c.t_state = Some(self.t_state.unwrap_or(5.0));
                    c.delay_max = Some(self.delay_max.unwrap_or(0.1));
                    set_default(&mut c.n_samples, 11);
                    c.t_start = None;
                    c.t_end = None;
                } else {
                    let lp = LindbladParams::new(c.gamma1.unwrap(), c.gamma2.unwrap())?;
                    let (t1, t2) = estimated_decay_times(&lp);
                    set_default(&mut c.t_end, 3.0 * t1.max(t2));
                    set_default(&mut c.n_samples, 1501);
                }
            }
            Experiment::OuPulses => {
                c.mu = Some(self.mu.unwrap_or(0.0));
                c.sigma = Some(self.sigma.unwrap_or(0.2));
                c.t_c = Some(self.t_c.unwrap_or(50.0));
                c.delta_t = Some(self.delta_t.unwrap_or(params.period()));
                c.n_traj = Some(self.n_traj.unwrap_or(50));
                set_default(&mut c.t_end, 20.0);
                set_default(&mut c.n_samples, 201);
                set_default(&mut c.h, field_step);
            }
        }
        if experiment.is_stochastic() {
            require(c.seed, "seed")?;
        } else {
            c.seed = None;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let e = require(self.experiment, "experiment")?;
        self.params()?;
        if e == Experiment::MeasureDelay {
            let t_state = require(self.t_state, "t_state")?;
            let delay = require(self.delay_max, "delay_max")?;
            if !(t_state >= 0.0) || !(delay > 0.0) {
                return Err(Error::Config("measure-delay needs t_state >= 0 and delay_max > 0".into()));
            }
            if require(self.n_samples, "n_samples")? < 2 {
                return Err(Error::Config("n_samples must be at least 2".into()));
            }
        } else {
            self.sample_grid()?;
        }
        if let (Some(t1), Some(t2)) = (self.t1, self.t2) {
            PhenomNoise::new(t1, t2)?;
        }
        if e.uses_lindblad() {
            self.lindblad()?;
        }
        if e == Experiment::OuPulses {
            self.ou()?;
            if !(require(self.delta_t, "delta_t")? > 0.0) {
                return Err(Error::Config("delta_t must be positive".into()));
            }
            if require(self.n_traj, "n_traj")? == 0 {
                return Err(Error::Config("n_traj must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn experiment(&self) -> Result<Experiment> {
        require(self.experiment, "experiment")
    }

    pub fn params(&self) -> Result<SensorParams> {
        SensorParams::with_phase(
            require(self.g, "g")?,
            require(self.b, "b")?,
            require(self.omega, "omega")?,
            self.phi.unwrap_or(0.0),
        )
    }

    /// Sample grid. Experiments without an integrator get a step equal to
    /// the sample spacing, which is never used.
    pub fn sample_grid(&self) -> Result<TimeGrid> {
        let t0 = require(self.t_start, "t_start")?;
        let t1 = require(self.t_end, "t_end")?;
        let n = require(self.n_samples, "n_samples")?;
        let h = match self.h {
            Some(h) => h,
            None => (t1 - t0) / (n.max(2) - 1) as f64,
        };
        TimeGrid::new(t0, t1, n, h)
    }

    pub fn lindblad(&self) -> Result<LindbladParams> {
        LindbladParams::new(require(self.gamma1, "gamma1")?, require(self.gamma2, "gamma2")?)
    }

    pub fn phenom(&self) -> Result<PhenomNoise> {
        PhenomNoise::new(require(self.t1, "t1")?, require(self.t2, "t2")?)
    }

    pub fn ou(&self) -> Result<OUParams> {
        OUParams::new(require(self.mu, "mu")?, require(self.sigma, "sigma")?, require(self.t_c, "t_c")?)
    }
}
