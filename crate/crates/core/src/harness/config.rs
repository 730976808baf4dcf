//! Experiment configuration and its flat `section.key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! preset = planar
//! learner.eta = 0.3
//! sim.seed = 7
//! ```
//!
//! A `preset` line (anywhere in the file) selects the starting point; every
//! other key overrides one field. Lists are comma separated; a single value
//! is broadcast to every joint where a per-joint list is expected.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{ApproxModel, ConstantModel, JointVec, PerfectModel, Plant, SimConfig};
use crate::error::{Error, Result};
use crate::learner::{LearnerParams, OffsetModel, UpdateRule};
use crate::plants::{
    make_biased_arm_pair, make_planar_pair, make_stiction_plant, DoubleIntegratorPlant,
};
use crate::policies::{lqr_chain, AccelPolicy, PdPointPolicy};

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    Planar,
    BiasedArm {
        dof: usize,
        inertia: Vec<f64>,
        damping: Vec<f64>,
    },
    Stiction {
        mass: f64,
        breakaway: f64,
        velocity_epsilon: f64,
    },
    DoubleIntegrator {
        dof: usize,
        mass: f64,
        disturbance: Vec<f64>,
    },
}

impl PlantSpec {
    pub fn dof(&self) -> usize {
        match self {
            PlantSpec::Planar => 2,
            PlantSpec::Stiction { .. } => 1,
            PlantSpec::BiasedArm { dof, .. } | PlantSpec::DoubleIntegrator { dof, .. } => *dof,
        }
    }
}

/// Which model the controller uses.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// The mismatched model that goes with the plant.
    Nominal,
    /// `M̂ = s I`, `ĥ = 0`.
    ScaledIdentity(f64),
    /// Exact knowledge of the plant, disturbances included.
    Perfect,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Pd {
        target: Vec<f64>,
        k: f64,
        d: f64,
    },
    LqrChain {
        segments: usize,
        segment_duration: f64,
        q_pos: f64,
        q_vel: f64,
        r: f64,
        waypoint_range: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Direct,
    Indirect,
}

/// Where the controller's velocity reading comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocitySource {
    /// The simulator's velocity, unaffected by position noise.
    Sensor,
    /// Finite difference of successive (noisy) position readings.
    Differenced,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialVelocity {
    Fixed(Vec<f64>),
    /// Uniform per joint on `[-range, range]`, drawn from the trial's stream.
    Random {
        range: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub position_noise_amp: f64,
    pub offset_noise_amp: f64,
    pub velocity: VelocitySource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetySpec {
    pub max_abs_torque: f64,
    pub max_abs_velocity: f64,
}

impl Default for SafetySpec {
    fn default() -> Self {
        SafetySpec {
            max_abs_torque: 100.0,
            max_abs_velocity: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub plant: PlantSpec,
    pub model: ModelSpec,
    pub policy: PolicySpec,
    pub learner: LearnerParams,
    pub learning_enabled: bool,
    pub loss: LossKind,
    pub learning_on_at: f64,
    pub sim: SimConfig,
    pub initial_q: Vec<f64>,
    pub initial_qd: InitialVelocity,
    pub noise: NoiseSpec,
    /// Exponential smoothing inside the acceleration estimator (control path).
    pub estimator_smoothing: f64,
    /// Smoothing of the reported acceleration error column only.
    pub report_smoothing: f64,
    pub safety: SafetySpec,
    pub trials: usize,
}

/// The simulated objects an episode runs on.
pub struct Experiment {
    pub plant: Arc<dyn Plant>,
    pub model: Arc<dyn ApproxModel>,
    pub policy: Arc<dyn AccelPolicy>,
    pub offset: OffsetModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::planar()
    }
}

impl ExperimentConfig {
    /// 2-DOF sinusoidal-friction system, PD to (1, 1), 1 kHz, 5 s.
    pub fn planar() -> Self {
        ExperimentConfig {
            plant: PlantSpec::Planar,
            model: ModelSpec::Nominal,
            policy: PolicySpec::Pd {
                target: vec![1.0, 1.0],
                k: 100.0,
                d: 10.0,
            },
            learner: LearnerParams {
                eta_lr: 0.3,
                gamma_mom: 0.0,
                rule: UpdateRule::Gradient,
                ..LearnerParams::default()
            },
            learning_enabled: true,
            loss: LossKind::Direct,
            learning_on_at: 0.0,
            sim: SimConfig {
                dt_sim: 0.001,
                dt_control: 0.001,
                duration: 5.0,
                seed: 0,
            },
            initial_q: vec![0.0, 0.0],
            initial_qd: InitialVelocity::Random { range: 1.0 },
            noise: NoiseSpec {
                position_noise_amp: 0.0,
                offset_noise_amp: 0.0,
                velocity: VelocitySource::Sensor,
            },
            estimator_smoothing: 0.0,
            report_smoothing: 0.975,
            safety: SafetySpec {
                max_abs_torque: 1e4,
                max_abs_velocity: 100.0,
            },
            trials: 1,
        }
    }

    /// 7-joint biased arm, ten chained 3 s regulators, learning switched on
    /// at 15 s, noisy position and offset readings.
    pub fn biased_arm() -> Self {
        ExperimentConfig {
            plant: PlantSpec::BiasedArm {
                dof: 7,
                inertia: vec![1.0],
                damping: vec![0.5],
            },
            model: ModelSpec::Nominal,
            policy: PolicySpec::LqrChain {
                segments: 10,
                segment_duration: 3.0,
                q_pos: 100.0,
                q_vel: 10.0,
                r: 1.0,
                waypoint_range: 1.0,
            },
            learner: LearnerParams {
                eta_lr: 0.4,
                gamma_mom: 0.5,
                rule: UpdateRule::Momentum,
                ..LearnerParams::default()
            },
            learning_enabled: true,
            loss: LossKind::Direct,
            learning_on_at: 15.0,
            sim: SimConfig {
                dt_sim: 0.001,
                dt_control: 0.005,
                duration: 30.0,
                seed: 0,
            },
            initial_q: vec![0.0],
            initial_qd: InitialVelocity::Fixed(vec![0.0]),
            noise: NoiseSpec {
                position_noise_amp: 0.001,
                offset_noise_amp: 0.001,
                velocity: VelocitySource::Differenced,
            },
            estimator_smoothing: 0.8,
            report_smoothing: 0.975,
            safety: SafetySpec::default(),
            trials: 1,
        }
    }

    /// Desk-scale sensitivity setup: planar plant, two chained 3 s
    /// regulators, three trials per grid point.
    pub fn sweep_desk() -> Self {
        ExperimentConfig {
            policy: PolicySpec::LqrChain {
                segments: 2,
                segment_duration: 3.0,
                q_pos: 100.0,
                q_vel: 10.0,
                r: 1.0,
                waypoint_range: 1.0,
            },
            learner: LearnerParams {
                eta_lr: 0.05,
                gamma_mom: 0.9,
                rule: UpdateRule::Momentum,
                ..LearnerParams::default()
            },
            sim: SimConfig {
                dt_sim: 0.001,
                dt_control: 0.001,
                duration: 6.0,
                seed: 0,
            },
            initial_qd: InitialVelocity::Fixed(vec![0.0]),
            noise: NoiseSpec {
                position_noise_amp: 0.001,
                offset_noise_amp: 0.001,
                velocity: VelocitySource::Sensor,
            },
            safety: SafetySpec {
                max_abs_torque: 1e3,
                max_abs_velocity: 20.0,
            },
            trials: 3,
            ..Self::planar()
        }
    }

    /// One stuck joint driven toward 1 rad by a learner that is the whole
    /// inverse-dynamics model (`M̂ = 0`).
    pub fn stiction() -> Self {
        ExperimentConfig {
            plant: PlantSpec::Stiction {
                mass: 1.0,
                breakaway: 5.0,
                velocity_epsilon: 0.01,
            },
            model: ModelSpec::ScaledIdentity(0.0),
            policy: PolicySpec::Pd {
                target: vec![1.0],
                k: 16.0,
                d: 8.0,
            },
            learner: LearnerParams {
                eta_lr: 0.05,
                gamma_mom: 0.0,
                rule: UpdateRule::Gradient,
                ..LearnerParams::default()
            },
            learning_enabled: true,
            loss: LossKind::Direct,
            learning_on_at: 0.0,
            sim: SimConfig {
                dt_sim: 0.001,
                dt_control: 0.001,
                duration: 10.0,
                seed: 0,
            },
            initial_q: vec![0.0],
            initial_qd: InitialVelocity::Fixed(vec![0.0]),
            noise: NoiseSpec {
                position_noise_amp: 0.0,
                offset_noise_amp: 0.0,
                velocity: VelocitySource::Sensor,
            },
            estimator_smoothing: 0.0,
            report_smoothing: 0.975,
            safety: SafetySpec {
                max_abs_torque: 1e3,
                max_abs_velocity: 100.0,
            },
            trials: 1,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "planar" => Some(Self::planar()),
            "biased_arm" => Some(Self::biased_arm()),
            "sweep" => Some(Self::sweep_desk()),
            "stiction" => Some(Self::stiction()),
            _ => None,
        }
    }

    pub fn dof(&self) -> usize {
        self.plant.dof()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        self.sim.validate()?;
        self.learner.validate()?;
        let n = self.dof();
        if n == 0 {
            return bad("plant must have at least one joint".into());
        }
        broadcast("init.q", &self.initial_q, n)?;
        if let InitialVelocity::Fixed(v) = &self.initial_qd {
            broadcast("init.qd", v, n)?;
        }
        if let PolicySpec::Pd { target, .. } = &self.policy {
            broadcast("policy.target", target, n)?;
        }
        if self.noise.position_noise_amp < 0.0 || self.noise.offset_noise_amp < 0.0 {
            return bad("noise amplitudes must be non-negative".into());
        }
        if !(0.0..=self.sim.duration).contains(&self.learning_on_at) {
            return bad(format!(
                "learning_on_at ({}) must lie within [0, duration = {}]",
                self.learning_on_at, self.sim.duration
            ));
        }
        if !(0.0..1.0).contains(&self.estimator_smoothing)
            || !(0.0..1.0).contains(&self.report_smoothing)
        {
            return bad("smoothing factors must lie in [0, 1)".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.safety.max_abs_torque > 0.0 && self.safety.max_abs_velocity > 0.0) {
            return bad("safety bounds must be positive".into());
        }
        if self.loss == LossKind::Indirect && self.learner.rule != UpdateRule::Gradient {
            return bad("the indirect learner only supports the plain gradient rule".into());
        }
        Ok(())
    }

    /// Instantiates plant, model and policy. Regulator waypoints come from
    /// `plan_rng`, so every trial of a run shares the same plan.
    pub fn build(&self, plan_rng: &mut ChaCha8Rng) -> Result<Experiment> {
        self.validate()?;
        let n = self.dof();
        let (plant, nominal): (Arc<dyn Plant>, Arc<dyn ApproxModel>) = match &self.plant {
            PlantSpec::Planar => {
                let (p, m) = make_planar_pair();
                (Arc::new(p), Arc::new(m))
            }
            PlantSpec::BiasedArm {
                dof,
                inertia,
                damping,
            } => {
                let inertia = broadcast("plant.inertia", inertia, *dof)?;
                let damping = broadcast("plant.damping", damping, *dof)?;
                let (p, m) = make_biased_arm_pair(*dof, &inertia, &damping)?;
                (Arc::new(p), Arc::new(m))
            }
            PlantSpec::Stiction {
                mass,
                breakaway,
                velocity_epsilon,
            } => {
                let p = make_stiction_plant(*mass, *breakaway, *velocity_epsilon)?;
                (
                    Arc::new(p),
                    Arc::new(ConstantModel::scaled_identity(1, *mass)),
                )
            }
            PlantSpec::DoubleIntegrator {
                dof,
                mass,
                disturbance,
            } => {
                let d = broadcast("plant.disturbance", disturbance, *dof)?;
                let p = DoubleIntegratorPlant::new(*dof, *mass)?.with_disturbance(d)?;
                (
                    Arc::new(p),
                    Arc::new(ConstantModel::scaled_identity(*dof, *mass)),
                )
            }
        };
        let model: Arc<dyn ApproxModel> = match &self.model {
            ModelSpec::Nominal => nominal,
            ModelSpec::ScaledIdentity(s) => Arc::new(ConstantModel::scaled_identity(n, *s)),
            ModelSpec::Perfect => Arc::new(PerfectModel::new(plant.clone())),
        };
        let policy: Arc<dyn AccelPolicy> = match &self.policy {
            PolicySpec::Pd { target, k, d } => Arc::new(PdPointPolicy::new(
                broadcast("policy.target", target, n)?,
                *k,
                *d,
            )?),
            PolicySpec::LqrChain {
                segments,
                segment_duration,
                q_pos,
                q_vel,
                r,
                waypoint_range,
            } => {
                if *segments == 0 {
                    return Err(Error::InvalidParameter(
                        "policy.segments must be at least 1".into(),
                    ));
                }
                let goals: Vec<JointVec> = (0..*segments)
                    .map(|_| {
                        JointVec::from_fn(n, |_, _| {
                            plan_rng.gen_range(-waypoint_range..=*waypoint_range)
                        })
                    })
                    .collect();
                Arc::new(lqr_chain(
                    &goals,
                    *q_pos,
                    *q_vel,
                    *r,
                    *segment_duration,
                    self.sim.dt_control,
                )?)
            }
        };
        Ok(Experiment {
            plant,
            model,
            policy,
            offset: OffsetModel::constant(n),
        })
    }

    /// Parses the text format on top of the defaults (or the named preset).
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let mut cfg = match entries.iter().find(|e| e.key == "preset") {
            Some(e) => Self::preset(&e.value)
                .ok_or_else(|| Error::config(e.line, format!("unknown preset `{}`", e.value)))?,
            None => Self::default(),
        };
        for e in entries.iter().filter(|e| e.key != "preset") {
            cfg.apply(e)?;
        }
        cfg.validate().map_err(|err| match err {
            Error::InvalidParameter(m) => Error::config(0, m),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies a single `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply(&Entry {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        })
    }

    fn apply(&mut self, e: &Entry) -> Result<()> {
        let line = e.line;
        let num = || parse_num::<f64>(e);
        let int = || parse_num::<usize>(e);
        match e.key.as_str() {
            "plant.kind" => {
                self.plant = match e.value.as_str() {
                    "planar" => PlantSpec::Planar,
                    "biased_arm" => PlantSpec::BiasedArm {
                        dof: 7,
                        inertia: vec![1.0],
                        damping: vec![0.5],
                    },
                    "stiction" => PlantSpec::Stiction {
                        mass: 1.0,
                        breakaway: 5.0,
                        velocity_epsilon: 0.01,
                    },
                    "double_integrator" => PlantSpec::DoubleIntegrator {
                        dof: 2,
                        mass: 1.0,
                        disturbance: vec![0.0],
                    },
                    other => {
                        return Err(Error::config(line, format!("unknown plant kind `{other}`")))
                    }
                }
            }
            "plant.dof" => match &mut self.plant {
                PlantSpec::BiasedArm { dof, .. } | PlantSpec::DoubleIntegrator { dof, .. } => {
                    *dof = int()?
                }
                _ => {
                    return Err(Error::config(
                        line,
                        "plant.dof is fixed for this plant kind",
                    ))
                }
            },
            "plant.inertia" => match &mut self.plant {
                PlantSpec::BiasedArm { inertia, .. } => *inertia = parse_list(e)?,
                _ => {
                    return Err(Error::config(
                        line,
                        "plant.inertia applies to the biased arm only",
                    ))
                }
            },
            "plant.damping" => match &mut self.plant {
                PlantSpec::BiasedArm { damping, .. } => *damping = parse_list(e)?,
                _ => {
                    return Err(Error::config(
                        line,
                        "plant.damping applies to the biased arm only",
                    ))
                }
            },
            "plant.mass" => match &mut self.plant {
                PlantSpec::Stiction { mass, .. } | PlantSpec::DoubleIntegrator { mass, .. } => {
                    *mass = num()?
                }
                _ => {
                    return Err(Error::config(
                        line,
                        "plant.mass applies to stiction and double-integrator plants",
                    ))
                }
            },
            "plant.disturbance" => match &mut self.plant {
                PlantSpec::DoubleIntegrator { disturbance, .. } => *disturbance = parse_list(e)?,
                _ => {
                    return Err(Error::config(
                        line,
                        "plant.disturbance applies to the double integrator only",
                    ))
                }
            },
            "plant.breakaway" | "plant.velocity_epsilon" => match &mut self.plant {
                PlantSpec::Stiction {
                    breakaway,
                    velocity_epsilon,
                    ..
                } => {
                    if e.key == "plant.breakaway" {
                        *breakaway = num()?
                    } else {
                        *velocity_epsilon = num()?
                    }
                }
                _ => {
                    return Err(Error::config(
                        line,
                        format!("{} applies to the stiction plant only", e.key),
                    ))
                }
            },
            "model.kind" => {
                self.model = match e.value.as_str() {
                    "nominal" => ModelSpec::Nominal,
                    "perfect" => ModelSpec::Perfect,
                    "scaled_identity" => ModelSpec::ScaledIdentity(1.0),
                    other => {
                        return Err(Error::config(line, format!("unknown model kind `{other}`")))
                    }
                }
            }
            "model.scale" => self.model = ModelSpec::ScaledIdentity(num()?),
            "policy.kind" => {
                self.policy = match e.value.as_str() {
                    "pd" => PolicySpec::Pd {
                        target: vec![1.0],
                        k: 100.0,
                        d: 10.0,
                    },
                    "lqr_chain" => PolicySpec::LqrChain {
                        segments: 2,
                        segment_duration: 3.0,
                        q_pos: 100.0,
                        q_vel: 10.0,
                        r: 1.0,
                        waypoint_range: 1.0,
                    },
                    other => {
                        return Err(Error::config(
                            line,
                            format!("unknown policy kind `{other}`"),
                        ))
                    }
                }
            }
            "policy.target" | "policy.k" | "policy.d" => match &mut self.policy {
                PolicySpec::Pd { target, k, d } => match e.key.as_str() {
                    "policy.target" => *target = parse_list(e)?,
                    "policy.k" => *k = num()?,
                    _ => *d = num()?,
                },
                _ => {
                    return Err(Error::config(
                        line,
                        format!("{} applies to the pd policy only", e.key),
                    ))
                }
            },
            "policy.segments"
            | "policy.segment_duration"
            | "policy.q_pos"
            | "policy.q_vel"
            | "policy.r"
            | "policy.waypoint_range" => match &mut self.policy {
                PolicySpec::LqrChain {
                    segments,
                    segment_duration,
                    q_pos,
                    q_vel,
                    r,
                    waypoint_range,
                } => match e.key.as_str() {
                    "policy.segments" => *segments = int()?,
                    "policy.segment_duration" => *segment_duration = num()?,
                    "policy.q_pos" => *q_pos = num()?,
                    "policy.q_vel" => *q_vel = num()?,
                    "policy.r" => *r = num()?,
                    _ => *waypoint_range = num()?,
                },
                _ => {
                    return Err(Error::config(
                        line,
                        format!("{} applies to the lqr_chain policy only", e.key),
                    ))
                }
            },
            "learner.enabled" => self.learning_enabled = parse_bool(e)?,
            "learner.loss" => {
                self.loss = match e.value.as_str() {
                    "direct" => LossKind::Direct,
                    "indirect" => LossKind::Indirect,
                    other => return Err(Error::config(line, format!("unknown loss `{other}`"))),
                }
            }
            "learner.rule" => {
                self.learner.rule =
                    UpdateRule::from_str(&e.value).map_err(|m| Error::config(line, m))?
            }
            "learner.eta" => self.learner.eta_lr = num()?,
            "learner.lambda" => self.learner.lambda_reg = num()?,
            "learner.gamma" => self.learner.gamma_mom = num()?,
            "learner.alpha" => self.learner.alpha_var = num()?,
            "learner.adapt_forgetting" => self.learner.adapt_forgetting = parse_bool(e)?,
            "learner.forgetting_scale" => self.learner.forgetting_error_scale = num()?,
            "learner.lambda_max" => self.learner.lambda_max = num()?,
            "learner.variance_decay" => self.learner.variance_decay = num()?,
            "learner.on_at" | "learning_on_at" => self.learning_on_at = num()?,
            "sim.dt_sim" => self.sim.dt_sim = num()?,
            "sim.dt_control" => self.sim.dt_control = num()?,
            "sim.duration" => self.sim.duration = num()?,
            "sim.seed" => self.sim.seed = parse_num::<u64>(e)?,
            "init.q" => self.initial_q = parse_list(e)?,
            "init.qd" => {
                self.initial_qd = if e.value == "random" {
                    InitialVelocity::Random { range: 1.0 }
                } else {
                    InitialVelocity::Fixed(parse_list(e)?)
                }
            }
            "init.qd_range" => self.initial_qd = InitialVelocity::Random { range: num()? },
            "noise.position" => self.noise.position_noise_amp = num()?,
            "noise.offset" => self.noise.offset_noise_amp = num()?,
            "noise.velocity" => {
                self.noise.velocity = match e.value.as_str() {
                    "sensor" => VelocitySource::Sensor,
                    "differenced" => VelocitySource::Differenced,
                    other => {
                        return Err(Error::config(
                            line,
                            format!("unknown velocity source `{other}`"),
                        ))
                    }
                }
            }
            "estimator.smoothing" => self.estimator_smoothing = num()?,
            "report.smoothing" => self.report_smoothing = num()?,
            "safety.max_abs_torque" => self.safety.max_abs_torque = num()?,
            "safety.max_abs_velocity" => self.safety.max_abs_velocity = num()?,
            "trials" => self.trials = int()?,
            other => return Err(Error::config(line, format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.plant {
            PlantSpec::Planar => kv("plant.kind", "planar".into()),
            PlantSpec::BiasedArm {
                dof,
                inertia,
                damping,
            } => {
                kv("plant.kind", "biased_arm".into());
                kv("plant.dof", dof.to_string());
                kv("plant.inertia", list(inertia));
                kv("plant.damping", list(damping));
            }
            PlantSpec::Stiction {
                mass,
                breakaway,
                velocity_epsilon,
            } => {
                kv("plant.kind", "stiction".into());
                kv("plant.mass", mass.to_string());
                kv("plant.breakaway", breakaway.to_string());
                kv("plant.velocity_epsilon", velocity_epsilon.to_string());
            }
            PlantSpec::DoubleIntegrator {
                dof,
                mass,
                disturbance,
            } => {
                kv("plant.kind", "double_integrator".into());
                kv("plant.dof", dof.to_string());
                kv("plant.mass", mass.to_string());
                kv("plant.disturbance", list(disturbance));
            }
        }
        match &self.model {
            ModelSpec::Nominal => kv("model.kind", "nominal".into()),
            ModelSpec::Perfect => kv("model.kind", "perfect".into()),
            ModelSpec::ScaledIdentity(x) => {
                kv("model.kind", "scaled_identity".into());
                kv("model.scale", x.to_string());
            }
        }
        match &self.policy {
            PolicySpec::Pd { target, k, d } => {
                kv("policy.kind", "pd".into());
                kv("policy.target", list(target));
                kv("policy.k", k.to_string());
                kv("policy.d", d.to_string());
            }
            PolicySpec::LqrChain {
                segments,
                segment_duration,
                q_pos,
                q_vel,
                r,
                waypoint_range,
            } => {
                kv("policy.kind", "lqr_chain".into());
                kv("policy.segments", segments.to_string());
                kv("policy.segment_duration", segment_duration.to_string());
                kv("policy.q_pos", q_pos.to_string());
                kv("policy.q_vel", q_vel.to_string());
                kv("policy.r", r.to_string());
                kv("policy.waypoint_range", waypoint_range.to_string());
            }
        }
        let l = &self.learner;
        kv("learner.enabled", self.learning_enabled.to_string());
        kv(
            "learner.loss",
            match self.loss {
                LossKind::Direct => "direct",
                LossKind::Indirect => "indirect",
            }
            .into(),
        );
        kv(
            "learner.rule",
            match l.rule {
                UpdateRule::Gradient => "gradient",
                UpdateRule::Momentum => "momentum",
                UpdateRule::Smoother => "smoother",
            }
            .into(),
        );
        kv("learner.eta", l.eta_lr.to_string());
        kv("learner.lambda", l.lambda_reg.to_string());
        kv("learner.gamma", l.gamma_mom.to_string());
        kv("learner.alpha", l.alpha_var.to_string());
        kv("learner.adapt_forgetting", l.adapt_forgetting.to_string());
        kv(
            "learner.forgetting_scale",
            l.forgetting_error_scale.to_string(),
        );
        kv("learner.lambda_max", l.lambda_max.to_string());
        kv("learner.variance_decay", l.variance_decay.to_string());
        kv("learner.on_at", self.learning_on_at.to_string());
        kv("sim.dt_sim", self.sim.dt_sim.to_string());
        kv("sim.dt_control", self.sim.dt_control.to_string());
        kv("sim.duration", self.sim.duration.to_string());
        kv("sim.seed", self.sim.seed.to_string());
        kv("init.q", list(&self.initial_q));
        match &self.initial_qd {
            InitialVelocity::Fixed(v) => kv("init.qd", list(v)),
            InitialVelocity::Random { range } => kv("init.qd_range", range.to_string()),
        }
        kv("noise.position", self.noise.position_noise_amp.to_string());
        kv("noise.offset", self.noise.offset_noise_amp.to_string());
        kv(
            "noise.velocity",
            match self.noise.velocity {
                VelocitySource::Sensor => "sensor",
                VelocitySource::Differenced => "differenced",
            }
            .into(),
        );
        kv("estimator.smoothing", self.estimator_smoothing.to_string());
        kv("report.smoothing", self.report_smoothing.to_string());
        kv(
            "safety.max_abs_torque",
            self.safety.max_abs_torque.to_string(),
        );
        kv(
            "safety.max_abs_velocity",
            self.safety.max_abs_velocity.to_string(),
        );
        kv("trials", self.trials.to_string());
        s
    }
}

/// Expands a one-element list to `n` joints; otherwise requires length `n`.
pub fn broadcast(what: &str, values: &[f64], n: usize) -> Result<JointVec> {
    match values.len() {
        1 => Ok(JointVec::from_element(n, values[0])),
        len if len == n => Ok(JointVec::from_column_slice(values)),
        len => Err(Error::InvalidParameter(format!(
            "{what} has {len} entries, expected 1 or {n}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub(crate) fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            Error::config(line, format!("expected `key = value`, got `{content}`"))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(line, "empty key"));
        }
        if out.iter().any(|e: &Entry| e.key == key) {
            return Err(Error::config(line, format!("duplicate key `{key}`")));
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub(crate) fn parse_num<T: FromStr>(e: &Entry) -> Result<T> {
    e.value.parse::<T>().map_err(|_| {
        Error::config(
            e.line,
            format!("`{}` is not a valid value for {}", e.value, e.key),
        )
    })
}

pub(crate) fn parse_list(e: &Entry) -> Result<Vec<f64>> {
    let items = e
        .value
        .split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::config(
                    e.line,
                    format!("`{}` is not a number list for {}", e.value, e.key),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        return Err(Error::config(
            e.line,
            format!("{} needs at least one value", e.key),
        ));
    }
    Ok(items)
}

fn parse_bool(e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(
            e.line,
            format!("`{}` is not a boolean for {}", e.value, e.key),
        )),
    }
}
