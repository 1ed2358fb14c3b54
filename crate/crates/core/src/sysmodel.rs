//! Cell, carrier and mobility configuration, plus random sampling of devices
//! and their propagation paths.
//!
//! Sub-carrier `j` sits at baseband offset `j·Δf` from the carrier centre and
//! is occupied by device `j` (fully loaded system). Path delays are not
//! modelled: with a phase already uniform on `[0, 2π)`, a delay only rotates
//! that phase and changes no power statistic.
//!
//! The path-loss constant of the power-control law is called `reference_loss`
//! here so it cannot be confused with the wave speed.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance when checking that `T_s·Δf` is an integer.
const INTEGRALITY_TOLERANCE: f64 = 1e-9;

/// Carrier, sub-carrier grid, power and noise parameters.
///
/// The symbol period is stored as the integer product `T_s·Δf`, so that
/// frequency offsets that are whole multiples of `Δf` map to exact integers
/// in symbol units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub carrier_frequency_hz: f64,
    pub subcarrier_spacing_hz: f64,
    /// `T_s·Δf`; 1 is the minimum orthogonal spacing.
    pub symbol_spacing_product: u32,
    /// `N`; the system has `2N + 1` sub-carriers.
    pub half_subcarriers: u32,
    pub bandwidth_hz: f64,
    /// Received power per device after power control.
    pub effective_power: f64,
    pub noise_variance: f64,
    pub wave_speed_mps: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 900e6,
            subcarrier_spacing_hz: 2.5e3,
            symbol_spacing_product: 1,
            half_subcarriers: 24,
            bandwidth_hz: 200e3,
            effective_power: 1.0,
            noise_variance: 0.01,
            wave_speed_mps: 3e8,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        positive("system.carrier_frequency_hz", self.carrier_frequency_hz)?;
        positive("system.subcarrier_spacing_hz", self.subcarrier_spacing_hz)?;
        positive("system.effective_power", self.effective_power)?;
        positive("system.wave_speed_mps", self.wave_speed_mps)?;
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::invalid("system.noise_variance", "must be finite and >= 0"));
        }
        if self.symbol_spacing_product == 0 {
            return Err(Error::invalid("system.symbol_period_s", "T_s·Δf must be a positive integer"));
        }
        if !(self.bandwidth_hz >= 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(Error::invalid("system.bandwidth_hz", "must be finite and >= 0"));
        }
        let occupied = f64::from(self.subcarrier_count()) * self.subcarrier_spacing_hz;
        if occupied > self.bandwidth_hz {
            return Err(Error::invalid(
                "system.bandwidth_hz",
                format!("(2N+1)·Δf = {occupied} Hz does not fit in {} Hz", self.bandwidth_hz),
            ));
        }
        Ok(())
    }

    /// Derives `T_s·Δf` from an explicit symbol period, rejecting non-integers.
    pub fn spacing_product_from_period(symbol_period_s: f64, subcarrier_spacing_hz: f64) -> Result<u32> {
        let product = symbol_period_s * subcarrier_spacing_hz;
        let rounded = product.round();
        if !(product > 0.0)
            || !product.is_finite()
            || rounded < 1.0
            || (product - rounded).abs() > INTEGRALITY_TOLERANCE * rounded
            || rounded > f64::from(u32::MAX)
        {
            return Err(Error::invalid(
                "system.symbol_period_s",
                format!("T_s·Δf = {product} must be a positive integer"),
            ));
        }
        Ok(rounded as u32)
    }

    pub fn symbol_period_s(&self) -> f64 {
        f64::from(self.symbol_spacing_product) / self.subcarrier_spacing_hz
    }

    pub fn subcarrier_count(&self) -> u32 {
        2 * self.half_subcarriers + 1
    }

    /// Converts a frequency in Hz to symbol units, i.e. multiplies by `T_s`.
    ///
    /// Written as `hz·(T_s·Δf)/Δf` so whole multiples of `Δf` come out exact.
    pub fn to_symbol_units(&self, hz: f64) -> f64 {
        hz * f64::from(self.symbol_spacing_product) / self.subcarrier_spacing_hz
    }

    /// Largest Doppler shift in symbol units for a speed, `v·f_c·T_s/c`.
    pub fn max_doppler_symbol_units(&self, velocity_mps: f64) -> f64 {
        self.to_symbol_units(velocity_mps * self.carrier_frequency_hz / self.wave_speed_mps)
    }

    /// Sets the noise variance from an SNR in dB: `σ² = P_T·10^(−snr/10)`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_variance = self.effective_power * 10f64.powf(-snr_db / 10.0);
        self
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.effective_power / self.noise_variance).log10()
    }

    pub(crate) fn check_index(&self, index: i32) -> Result<()> {
        let n = i64::from(self.half_subcarriers);
        if i64::from(index).abs() > n {
            return Err(Error::domain(
                "subcarrier index",
                format!("index {index} outside [-{n}, {n}]"),
            ));
        }
        Ok(())
    }
}

/// Uniform speed law on `[0, V_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityModel {
    pub max_velocity_mps: f64,
}

impl MobilityModel {
    pub fn new(max_velocity_mps: f64) -> Result<Self> {
        let model = Self { max_velocity_mps };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_velocity_mps >= 0.0) || !self.max_velocity_mps.is_finite() {
            return Err(Error::invalid("mobility.max_velocity_mps", "must be finite and >= 0"));
        }
        Ok(())
    }
}

impl Default for MobilityModel {
    fn default() -> Self {
        Self {
            max_velocity_mps: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub cell_radius_m: f64,
    pub path_loss_exponent: f64,
    /// Median path loss at the reference distance.
    pub reference_loss: f64,
    /// Kept for completeness; scatterer geometry does not enter any metric.
    pub scatterer_radius_m: f64,
    pub paths_per_device: u32,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            cell_radius_m: 1000.0,
            path_loss_exponent: 3.5,
            reference_loss: 1e-3,
            scatterer_radius_m: 50.0,
            paths_per_device: 8,
        }
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<()> {
        positive("cell.radius_m", self.cell_radius_m)?;
        if !(self.path_loss_exponent >= 2.0) || !self.path_loss_exponent.is_finite() {
            return Err(Error::invalid("cell.path_loss_exponent", "must be finite and >= 2"));
        }
        positive("cell.reference_loss", self.reference_loss)?;
        if !(self.scatterer_radius_m >= 0.0) || !self.scatterer_radius_m.is_finite() {
            return Err(Error::invalid("cell.scatterer_radius_m", "must be finite and >= 0"));
        }
        if self.paths_per_device < 1 {
            return Err(Error::invalid("cell.paths_per_device", "must be >= 1"));
        }
        Ok(())
    }
}

/// The three configuration blocks that together define one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scenario {
    pub system: SystemConfig,
    pub cell: CellConfig,
    pub mobility: MobilityModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.cell.validate()?;
        self.mobility.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPath {
    /// Complex amplitude `a`.
    pub gain: Complex64,
    pub phase: f64,
    /// Angle between the path and the direction of motion.
    pub arrival_angle: f64,
    pub doppler_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub radius_m: f64,
    pub angle: f64,
    pub velocity_mps: f64,
    pub direction: f64,
    pub subcarrier_index: i32,
    pub paths: Vec<PropagationPath>,
}

/// Baseband offset of a sub-carrier from the carrier centre.
pub fn subcarrier_frequency(index: i32, cfg: &SystemConfig) -> Result<f64> {
    cfg.check_index(index)?;
    Ok(f64::from(index) * cfg.subcarrier_spacing_hz)
}

/// Doppler shift `(v/c)·f_c·cos ψ`.
pub fn doppler(velocity_mps: f64, arrival_angle: f64, cfg: &SystemConfig) -> f64 {
    velocity_mps / cfg.wave_speed_mps * cfg.carrier_frequency_hz * arrival_angle.cos()
}

/// Draws one device: radius with density `2r/R²`, uniform angles, uniform
/// speed on `[0, V_max]`, then its paths.
///
/// Draw order is fixed (radius, angle, speed, direction, paths) so a given
/// stream always yields the same device.
pub fn sample_device<R: Rng + ?Sized>(
    rng: &mut R,
    cell: &CellConfig,
    mobility: &MobilityModel,
    system: &SystemConfig,
    index: i32,
) -> Device {
    let radius_m = cell.cell_radius_m * rng.random::<f64>().sqrt();
    let angle = TAU * rng.random::<f64>();
    let velocity_mps = mobility.max_velocity_mps * rng.random::<f64>();
    let direction = TAU * rng.random::<f64>();
    let paths = sample_paths(rng, cell.paths_per_device, velocity_mps, system);
    Device {
        radius_m,
        angle,
        velocity_mps,
        direction,
        subcarrier_index: index,
        paths,
    }
}

/// Draws `count` paths with i.i.d. `CN(0, 1/count)` gains and uniform
/// arrival angle and phase.
pub fn sample_paths<R: Rng + ?Sized>(
    rng: &mut R,
    count: u32,
    velocity_mps: f64,
    system: &SystemConfig,
) -> Vec<PropagationPath> {
    let mut paths = Vec::with_capacity(count as usize);
    sample_paths_into(rng, count, velocity_mps, system, &mut paths);
    paths
}

/// Allocation-free variant of [`sample_paths`]; clears `out` first.
pub fn sample_paths_into<R: Rng + ?Sized>(
    rng: &mut R,
    count: u32,
    velocity_mps: f64,
    system: &SystemConfig,
    out: &mut Vec<PropagationPath>,
) {
    out.clear();
    // Per-component standard deviation for E|a|² = 1/count.
    let scale = (0.5 / f64::from(count)).sqrt();
    for _ in 0..count {
        let arrival_angle = TAU * rng.random::<f64>();
        let phase = TAU * rng.random::<f64>();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.push(PropagationPath {
            gain: Complex64::new(scale * re, scale * im),
            phase,
            arrival_angle,
            doppler_hz: doppler(velocity_mps, arrival_angle, system),
        });
    }
}

/// Transmit power that makes the received mean power equal `P_T`:
/// `P_T·r^β / K_ref`.
pub fn required_transmit_power(radius_m: f64, cell: &CellConfig, system: &SystemConfig) -> Result<f64> {
    if !(radius_m > 0.0) || radius_m > cell.cell_radius_m {
        return Err(Error::domain(
            "required_transmit_power",
            format!("radius {radius_m} m outside (0, {}]", cell.cell_radius_m),
        ));
    }
    Ok(system.effective_power * radius_m.powf(cell.path_loss_exponent) / cell.reference_loss)
}

fn positive(field: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::invalid(field, "must be finite and > 0"));
    }
    Ok(())
}
