//! Monte Carlo estimation of useful power, ICI and ergodic capacity by direct
//! simulation of every device and path in the cell.
//!
//! Each (trial, device) pair owns its own ChaCha8 sub-stream: the stream id is
//! the trial index and the device's sub-carrier selects a disjoint word range.
//! Trials run in parallel, their values are collected in trial order and
//! reduced sequentially, so results do not depend on the worker count.

use std::f64::consts::LOG2_E;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::sinc;
use crate::sysmodel::{sample_device, Device, Scenario, SystemConfig};

/// Word offset between the sub-streams of neighbouring devices.
const DEVICE_STREAM_SHIFT: u32 = 36;

/// How per-path contributions combine into one realization's power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    /// Sum of per-path powers; reproduces the averaged powers exactly in
    /// expectation.
    #[default]
    Incoherent,
    /// Squared magnitude of the complex sum of all path amplitudes.
    Coherent,
}

impl PowerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerMode::Incoherent => "incoherent",
            PowerMode::Coherent => "coherent",
        }
    }
}

impl std::str::FromStr for PowerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incoherent" => Ok(PowerMode::Incoherent),
            "coherent" => Ok(PowerMode::Coherent),
            other => Err(Error::invalid("mc.power_mode", format!("`{other}` is not incoherent|coherent"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialPlan {
    pub trials: u64,
    pub seed: u64,
    pub target_index: i32,
    pub mode: PowerMode,
}

impl Default for TrialPlan {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 42,
            target_index: 0,
            mode: PowerMode::Incoherent,
        }
    }
}

impl TrialPlan {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        let plan = Self {
            trials,
            seed,
            ..Self::default()
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::invalid("mc.trials", "must be >= 1"));
        }
        Ok(())
    }
}

/// Sample mean with its standard error, `sample std / √trials`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                trials: 0,
            };
        }
        let count = n as f64;
        let mean = samples.iter().sum::<f64>() / count;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
            (var / count).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            trials: n as u64,
        }
    }

    /// Whether `value` lies within `sigmas` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.std_error
    }
}

/// Power of one path's contribution from sub-carrier `j` into `i`:
/// `|a|²·sinc²((f_j − f_i + f_d)·T_s)·P_T`.
pub fn individual_ici_power(gain_sq: f64, freq_gap_hz: f64, doppler_hz: f64, cfg: &SystemConfig) -> f64 {
    gain_sq * sinc(cfg.to_symbol_units(freq_gap_hz + doppler_hz)).powi(2) * cfg.effective_power
}

/// Powers observed on the target sub-carrier in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    pub useful: f64,
    pub ici: f64,
    /// `Σ_{j≠i} Σ_m |a_{j,m}|²·P_T`, the most ICI these gains could cause.
    pub ici_ceiling: f64,
}

/// Deterministic per-(trial, device) random streams for one seed.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    key: <ChaCha8Rng as SeedableRng>::Seed,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
        }
    }

    pub fn device_stream(&self, trial: u64, device_index: i32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(trial);
        let slot = (i64::from(device_index) - i64::from(i32::MIN)) as u128;
        rng.set_word_pos(slot << DEVICE_STREAM_SHIFT);
        rng
    }
}

fn draw_device(streams: &StreamFactory, trial: u64, index: i32, scenario: &Scenario) -> Device {
    let mut rng = streams.device_stream(trial, index);
    sample_device(&mut rng, &scenario.cell, &scenario.mobility, &scenario.system, index)
}

/// Contribution of `device` onto sub-carrier `target`, in the given mode.
fn device_contribution(device: &Device, target: i32, mode: PowerMode, cfg: &SystemConfig, acc: &mut Complex64) -> f64 {
    let gap = f64::from(device.subcarrier_index - target) * cfg.subcarrier_spacing_hz;
    match mode {
        PowerMode::Incoherent => device
            .paths
            .iter()
            .map(|p| individual_ici_power(p.gain.norm_sqr(), gap, p.doppler_hz, cfg))
            .sum(),
        PowerMode::Coherent => {
            for p in &device.paths {
                let amplitude = sinc(cfg.to_symbol_units(gap + p.doppler_hz));
                *acc += p.gain * Complex64::from_polar(amplitude, p.phase);
            }
            0.0
        }
    }
}

fn own_power(device: &Device, mode: PowerMode, cfg: &SystemConfig) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let incoherent = device_contribution(device, device.subcarrier_index, mode, cfg, &mut acc);
    match mode {
        PowerMode::Incoherent => incoherent,
        PowerMode::Coherent => acc.norm_sqr() * cfg.effective_power,
    }
}

/// Simulates one trial: the target device and, if `with_interferers`, all
/// other `2N` devices.
pub fn realize(trial: u64, plan: &TrialPlan, scenario: &Scenario, streams: &StreamFactory, with_interferers: bool) -> Realization {
    let cfg = &scenario.system;
    let target = plan.target_index;
    let own = draw_device(streams, trial, target, scenario);
    let useful = own_power(&own, plan.mode, cfg);

    let mut ici = 0.0;
    let mut ici_ceiling = 0.0;
    if with_interferers {
        let n = cfg.half_subcarriers as i32;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (-n..=n).filter(|&j| j != target) {
            let device = draw_device(streams, trial, j, scenario);
            ici += device_contribution(&device, target, plan.mode, cfg, &mut acc);
            ici_ceiling += device.paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>() * cfg.effective_power;
        }
        if plan.mode == PowerMode::Coherent {
            ici = acc.norm_sqr() * cfg.effective_power;
        }
    }
    Realization {
        useful,
        ici,
        ici_ceiling,
    }
}

fn check_plan(plan: &TrialPlan, scenario: &Scenario) -> Result<()> {
    plan.validate()?;
    scenario.validate()?;
    scenario.system.check_index(plan.target_index)
}

fn run_trials<F>(plan: &TrialPlan, f: F) -> Estimate
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    let samples: Vec<f64> = (0..plan.trials).into_par_iter().map(f).collect();
    Estimate::from_samples(&samples)
}

/// Mean total ICI on the target sub-carrier from all `2N` other devices.
pub fn estimate_total_ici(plan: &TrialPlan, scenario: &Scenario) -> Result<Estimate> {
    check_plan(plan, scenario)?;
    require_interferers(scenario)?;
    let streams = StreamFactory::new(plan.seed);
    Ok(run_trials(plan, |t| realize(t, plan, scenario, &streams, true).ici))
}

/// Mean power the target device keeps on its own sub-carrier.
pub fn estimate_useful_power(plan: &TrialPlan, scenario: &Scenario) -> Result<Estimate> {
    check_plan(plan, scenario)?;
    let streams = StreamFactory::new(plan.seed);
    Ok(run_trials(plan, |t| realize(t, plan, scenario, &streams, false).useful))
}

/// Mean of useful plus in-band ICI power per trial.
pub fn estimate_received_power(plan: &TrialPlan, scenario: &Scenario) -> Result<Estimate> {
    check_plan(plan, scenario)?;
    let streams = StreamFactory::new(plan.seed);
    Ok(run_trials(plan, |t| {
        let r = realize(t, plan, scenario, &streams, true);
        r.useful + r.ici
    }))
}

/// Ergodic capacity `E[log₂(1 + U/(I + σ²))]` in bits per channel use.
pub fn estimate_ergodic_capacity(plan: &TrialPlan, scenario: &Scenario) -> Result<Estimate> {
    check_plan(plan, scenario)?;
    let noise = scenario.system.noise_variance;
    if !(noise > 0.0) {
        return Err(Error::domain("estimate_ergodic_capacity", "noise variance must be > 0"));
    }
    let streams = StreamFactory::new(plan.seed);
    Ok(run_trials(plan, |t| {
        let r = realize(t, plan, scenario, &streams, true);
        (r.useful / (r.ici + noise)).ln_1p() * LOG2_E
    }))
}

/// Estimates the ICI from `j` into `i` and from `i` into `j` on the same
/// trials. Their means should agree.
pub fn symmetry_probe(i: i32, j: i32, plan: &TrialPlan, scenario: &Scenario) -> Result<(Estimate, Estimate)> {
    plan.validate()?;
    scenario.validate()?;
    scenario.system.check_index(i)?;
    scenario.system.check_index(j)?;
    if i == j {
        return Err(Error::domain("symmetry_probe", "indices must differ"));
    }
    let streams = StreamFactory::new(plan.seed);
    let cfg = &scenario.system;
    let pairs: Vec<(f64, f64)> = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let di = draw_device(&streams, t, i, scenario);
            let dj = draw_device(&streams, t, j, scenario);
            (
                directed_power(&dj, i, plan.mode, cfg),
                directed_power(&di, j, plan.mode, cfg),
            )
        })
        .collect();
    let (into_i, into_j): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok((Estimate::from_samples(&into_i), Estimate::from_samples(&into_j)))
}

fn directed_power(source: &Device, target: i32, mode: PowerMode, cfg: &SystemConfig) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let p = device_contribution(source, target, mode, cfg, &mut acc);
    match mode {
        PowerMode::Incoherent => p,
        PowerMode::Coherent => acc.norm_sqr() * cfg.effective_power,
    }
}

fn require_interferers(scenario: &Scenario) -> Result<()> {
    if scenario.system.half_subcarriers == 0 {
        return Err(Error::domain("monte carlo ICI", "needs at least two sub-carriers"));
    }
    Ok(())
}
