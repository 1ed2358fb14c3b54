//! Deterministic evaluation of Doppler-induced leakage, ICI power, its
//! polynomial bounds and approximation, and the resulting capacity figures.
//!
//! Two routes compute the useful power: the double average of `sinc²` over
//! speed and arrival angle ([`leakage`] at zero offset), and the reduced
//! single integral over the sine integral ([`effective_useful_power`]). They
//! are independent and are expected to agree to quadrature tolerance.
//!
//! All capacities are in bits per channel use.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, LOG2_E, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_with_breakpoints, sinc, sine_integral, QuadratureSpec};
use crate::sysmodel::SystemConfig;

/// Below this argument the useful-power bracket is evaluated by its series.
const BRACKET_SERIES_LIMIT: f64 = 1e-3;

/// Inner `sinc²` integrals are split at its zeros once they span more than
/// this many symbol units.
const OSCILLATION_SPLIT: f64 = 4.0;

fn outer_spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn inner_spec() -> QuadratureSpec {
    QuadratureSpec {
        relative_tolerance: 1e-12,
        absolute_tolerance: 1e-18,
        max_subdivisions: 1 << 12,
    }
}

/// The dimensionless Doppler group `b` governing every mobility penalty.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormalizedDoppler(f64);

impl NormalizedDoppler {
    pub fn new(b: f64) -> Result<Self> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::invalid("b", "normalized Doppler must be finite and >= 0"));
        }
        Ok(Self(b))
    }

    /// `π·V_max·f_c / (c·Δf)`.
    pub fn from_config(max_velocity_mps: f64, cfg: &SystemConfig) -> Self {
        Self(PI * max_velocity_mps * cfg.carrier_frequency_hz / (cfg.wave_speed_mps * cfg.subcarrier_spacing_hz))
    }

    /// `π·V_max·f_c·T_s / c`; equal to [`from_config`](Self::from_config)
    /// when `T_s·Δf = 1`.
    pub fn symbol_scaled(max_velocity_mps: f64, cfg: &SystemConfig) -> Self {
        Self(PI * cfg.max_doppler_symbol_units(max_velocity_mps))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IciBounds {
    pub lower: f64,
    pub upper: f64,
}

impl IciBounds {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Split of the transmitted power into the part kept on the own sub-carrier
/// and the part leaked away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub useful: f64,
    pub leaked: f64,
    /// Equals `leaked` for unit `T_s·Δf` and an unbounded sub-carrier grid.
    pub ici: f64,
}

/// Fraction of a device's power that lands at `frequency_offset_hz` from its
/// own sub-carrier, averaged over the uniform speed and arrival-angle laws.
pub fn leakage(frequency_offset_hz: f64, max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    check_velocity(max_velocity_mps)?;
    leakage_symbol_units(
        cfg.to_symbol_units(frequency_offset_hz),
        cfg.max_doppler_symbol_units(max_velocity_mps),
    )
}

/// Leakage with the offset and the largest Doppler already multiplied by `T_s`.
///
/// Averages `sinc²(offset + w·cos ψ)` over `w ∈ [0, max_doppler]` and
/// `ψ ∈ [0, π)`; the half circle suffices because `cos` is symmetric about π.
pub fn leakage_symbol_units(offset: f64, max_doppler: f64) -> Result<f64> {
    if max_doppler == 0.0 {
        return Ok(sinc(offset).powi(2));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner = |psi: f64| -> f64 {
        let slope = psi.cos();
        let f = |w: f64| sinc(offset + w * slope).powi(2);
        let span = max_doppler * slope.abs();
        let result = if span > OSCILLATION_SPLIT {
            integrate_with_breakpoints(f, 0.0, max_doppler, &sinc_zero_crossings(offset, slope, max_doppler), &inner_spec())
        } else {
            integrate(f, 0.0, max_doppler, &inner_spec())
        };
        match result {
            Ok(v) => v / max_doppler,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let outer = integrate_with_breakpoints(inner, 0.0, PI, &[FRAC_PI_2], &outer_spec());
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(outer? / PI)
}

/// Values of `w ∈ (0, max)` where `offset + w·slope` is an integer.
fn sinc_zero_crossings(offset: f64, slope: f64, max: f64) -> Vec<f64> {
    let end = offset + max * slope;
    let (lo, hi) = if end < offset { (end, offset) } else { (offset, end) };
    let first = lo.floor() as i64 + 1;
    let last = hi.ceil() as i64 - 1;
    (first..=last).map(|k| (k as f64 - offset) / slope).collect()
}

/// `Si(2u)/u − sin²(u)/u²`, the mean of `sinc²(t/π)` over `t ∈ [0, u]`.
fn useful_bracket(u: f64) -> Result<f64> {
    if u < BRACKET_SERIES_LIMIT {
        let u2 = u * u;
        return Ok(1.0 - u2 / 9.0 + 2.0 * u2 * u2 / 225.0);
    }
    Ok(sine_integral(2.0 * u)? / u - (u.sin() / u).powi(2))
}

/// Useful power through the single-integral reduction over the sine integral.
pub fn effective_useful_power(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    check_velocity(max_velocity_mps)?;
    let b = NormalizedDoppler::symbol_scaled(max_velocity_mps, cfg).value();
    if b == 0.0 {
        return Ok(cfg.effective_power);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |psi: f64| match useful_bracket(b * psi.cos()) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let integral = integrate(integrand, 0.0, FRAC_PI_2, &outer_spec());
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(2.0 * cfg.effective_power / PI * integral?)
}

/// Useful power through the double-integral leakage route.
pub fn effective_useful_power_by_leakage(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    Ok(cfg.effective_power * leakage(0.0, max_velocity_mps, cfg)?)
}

/// Total ICI power per device for an unbounded grid, `P_T − P_U`.
pub fn total_ici_power(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    Ok(cfg.effective_power - effective_useful_power(max_velocity_mps, cfg)?)
}

pub fn power_budget(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<PowerBudget> {
    let useful = effective_useful_power(max_velocity_mps, cfg)?;
    let leaked = cfg.effective_power - useful;
    Ok(PowerBudget {
        useful,
        leaked,
        ici: leaked,
    })
}

/// Polynomial sandwich `(b²/18 − b⁴/50)·P_T ≤ P_ICI ≤ (b²/18 + b⁴/60)·P_T`,
/// lower end clamped at zero.
pub fn ici_bounds(max_velocity_mps: f64, cfg: &SystemConfig) -> IciBounds {
    let b2 = NormalizedDoppler::from_config(max_velocity_mps, cfg).value().powi(2);
    let b4 = b2 * b2;
    IciBounds {
        lower: ((b2 / 18.0 - b4 / 50.0) * cfg.effective_power).max(0.0),
        upper: (b2 / 18.0 + b4 / 60.0) * cfg.effective_power,
    }
}

/// Small-`b` approximation `b²/18 · P_T`.
pub fn ici_approx(max_velocity_mps: f64, cfg: &SystemConfig) -> f64 {
    NormalizedDoppler::from_config(max_velocity_mps, cfg).value().powi(2) / 18.0 * cfg.effective_power
}

/// Speed below which `b < 1/2`: `c·Δf / (2π·f_c)`.
pub fn approx_validity_threshold(cfg: &SystemConfig) -> f64 {
    cfg.wave_speed_mps * cfg.subcarrier_spacing_hz / (2.0 * PI * cfg.carrier_frequency_hz)
}

pub fn approx_is_valid(max_velocity_mps: f64, cfg: &SystemConfig) -> bool {
    max_velocity_mps < approx_validity_threshold(cfg)
}

/// ICI on one sub-carrier from the `2N` actual neighbours of a finite grid.
pub fn finite_n_ici(subcarrier_index: i32, max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    cfg.check_index(subcarrier_index)?;
    check_velocity(max_velocity_mps)?;
    let n = cfg.half_subcarriers as i32;
    let offsets = (-n..=n)
        .filter(|&j| j != subcarrier_index)
        .map(|j| j - subcarrier_index);
    Ok(cfg.effective_power * sum_leakage(offsets, max_velocity_mps, cfg)?)
}

/// `Σ_{j=−N}^{N} L_i(f_j)`, including the sub-carrier's own term.
pub fn leakage_sum(subcarrier_index: i32, half_subcarriers: u32, max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    check_velocity(max_velocity_mps)?;
    let n = i32::try_from(half_subcarriers).map_err(|_| Error::invalid("half_subcarriers", "too large"))?;
    if subcarrier_index.abs() > n {
        return Err(Error::domain(
            "leakage_sum",
            format!("index {subcarrier_index} outside [-{n}, {n}]"),
        ));
    }
    sum_leakage((-n..=n).map(|j| j - subcarrier_index), max_velocity_mps, cfg)
}

/// Sums leakage over sub-carrier separations. Terms are evaluated in parallel
/// and added in input order.
fn sum_leakage(separations: impl Iterator<Item = i32>, max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    let separations: Vec<i32> = separations.collect();
    let max_doppler = cfg.max_doppler_symbol_units(max_velocity_mps);
    let spacing = f64::from(cfg.symbol_spacing_product);
    let terms = separations
        .par_iter()
        .map(|&k| leakage_symbol_units(f64::from(k) * spacing, max_doppler))
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// Jensen upper bound on the ergodic capacity, `log₂(1 + P_U/(P_ICI + σ²))`.
pub fn capacity_upper(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    let budget = power_budget(max_velocity_mps, cfg)?;
    let denominator = budget.ici + cfg.noise_variance;
    if !(denominator > 0.0) {
        return Err(Error::domain(
            "capacity_upper",
            "interference plus noise is zero; capacity is unbounded",
        ));
    }
    Ok((budget.useful / denominator).ln_1p() * LOG2_E)
}

/// Closed-form small-`b` approximation of [`capacity_upper`]:
/// `(−ln(b²/18 + σ²/P_T) + σ²/P_T)·log₂e`.
pub fn capacity_upper_approx(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    let b2 = NormalizedDoppler::from_config(max_velocity_mps, cfg).value().powi(2);
    let noise = cfg.noise_variance / cfg.effective_power;
    let floor = b2 / 18.0 + noise;
    if !(floor > 0.0) {
        return Err(Error::domain(
            "capacity_upper_approx",
            "interference plus noise is zero; capacity is unbounded",
        ));
    }
    Ok((noise - floor.ln()) * LOG2_E)
}

/// Uplink sum-rate bound in bits per second, `B·C_upper`.
pub fn sum_rate_upper(max_velocity_mps: f64, cfg: &SystemConfig) -> Result<f64> {
    Ok(cfg.bandwidth_hz * capacity_upper(max_velocity_mps, cfg)?)
}

fn check_velocity(max_velocity_mps: f64) -> Result<()> {
    if !(max_velocity_mps >= 0.0) || !max_velocity_mps.is_finite() {
        return Err(Error::invalid("mobility.max_velocity_mps", "must be finite and >= 0"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference values from an independent nested quadrature (scipy
    /// `quad` over ψ and v, mpmath for the Si form) at V_max = 100 m/s,
    /// f_c = 900 MHz, Δf = 2.5 kHz.
    const USEFUL_AT_B0377: f64 = 0.9921712405420337;
    const FINITE_ICI_N24_900MHZ_100: f64 = 0.0076369955154613105;
    const LEAKAGE_NEIGHBOUR_900MHZ_100: f64 = 0.0023954205785208273;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn normalized_doppler_anchor() {
        let b = NormalizedDoppler::from_config(100.0, &cfg()).value();
        assert!((b - 0.377).abs() < 1e-3);
        let scaled = NormalizedDoppler::symbol_scaled(100.0, &cfg()).value();
        assert!((b - scaled).abs() < 1e-15);
        assert!(NormalizedDoppler::new(-1.0).is_err());
    }

    #[test]
    fn leakage_without_mobility_is_plain_sinc() {
        assert_eq!(leakage(0.0, 0.0, &cfg()).unwrap(), 1.0);
        for k in 1..20 {
            assert_eq!(leakage(f64::from(k) * 2500.0, 0.0, &cfg()).unwrap(), 0.0);
        }
    }

    #[test]
    fn leakage_matches_reference() {
        let l0 = leakage(0.0, 100.0, &cfg()).unwrap();
        assert!((l0 - USEFUL_AT_B0377).abs() < 1e-9, "{l0}");
        let l1 = leakage(2500.0, 100.0, &cfg()).unwrap();
        assert!((l1 - LEAKAGE_NEIGHBOUR_900MHZ_100).abs() < 1e-10, "{l1}");
        let b = 0.377f64;
        assert!((l0 - (1.0 - b * b / 18.0)).abs() <= b.powi(4) / 50.0);
    }

    #[test]
    fn leakage_handles_fast_devices() {
        // max Doppler of ~6.7 symbol units exercises the zero-split path.
        let fast = SystemConfig {
            subcarrier_spacing_hz: 500.0,
            ..cfg()
        };
        let l = leakage(0.0, 1000.0, &fast).unwrap();
        let via_si = effective_useful_power(1000.0, &fast).unwrap();
        assert!((l - via_si).abs() < 1e-8 * via_si, "{l} vs {via_si}");
    }

    #[test]
    fn useful_power_examples() {
        assert_eq!(effective_useful_power(0.0, &cfg()).unwrap(), 1.0);
        let p = effective_useful_power(100.0, &cfg()).unwrap();
        assert!((p - 0.99210).abs() < 4e-4);
        assert!((p - USEFUL_AT_B0377).abs() < 1e-10);
        let doubled = SystemConfig {
            effective_power: 2.0,
            ..cfg()
        };
        let p2 = effective_useful_power(100.0, &doubled).unwrap();
        assert!((p2 - 2.0 * p).abs() < 1e-14);
    }

    #[test]
    fn bracket_series_joins_closed_form() {
        let at = BRACKET_SERIES_LIMIT;
        let series = 1.0 - at * at / 9.0 + 2.0 * at.powi(4) / 225.0;
        let closed = sine_integral(2.0 * at).unwrap() / at - (at.sin() / at).powi(2);
        assert!((series - closed).abs() < 1e-12);
    }

    #[test]
    fn total_ici_examples() {
        assert_eq!(total_ici_power(0.0, &cfg()).unwrap(), 0.0);
        let ici = total_ici_power(100.0, &cfg()).unwrap();
        assert!((ici - 0.00790).abs() < 4e-4);
        assert!(ici_bounds(100.0, &cfg()).contains(ici));
        let high = SystemConfig {
            carrier_frequency_hz: 3e9,
            ..cfg()
        };
        assert!(total_ici_power(100.0, &high).unwrap() > ici);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(ici_bounds(0.0, &cfg()), IciBounds { lower: 0.0, upper: 0.0 });
        let b = ici_bounds(100.0, &cfg());
        assert!((b.lower - 0.007491).abs() < 1e-6);
        assert!((b.upper - 0.008232).abs() < 1e-6);
        let high = SystemConfig {
            carrier_frequency_hz: 3e9,
            ..cfg()
        };
        let loose = ici_bounds(100.0, &high);
        let exact = total_ici_power(100.0, &high).unwrap();
        assert!(loose.contains(exact));
        assert!(loose.upper - loose.lower > exact);
    }

    #[test]
    fn approx_examples() {
        assert_eq!(ici_approx(0.0, &cfg()), 0.0);
        assert!((ici_approx(100.0, &cfg()) - 0.0078956835).abs() < 1e-9);
        let high = SystemConfig {
            carrier_frequency_hz: 3e9,
            ..cfg()
        };
        assert!((approx_validity_threshold(&high) - 39.8).abs() < 0.1);
        assert!(approx_is_valid(39.0, &high));
        assert!(!approx_is_valid(40.0, &high));
    }

    #[test]
    fn finite_grid_ici() {
        assert_eq!(finite_n_ici(0, 0.0, &cfg()).unwrap(), 0.0);
        assert_eq!(finite_n_ici(7, 0.0, &cfg()).unwrap(), 0.0);
        let single = SystemConfig {
            half_subcarriers: 0,
            ..cfg()
        };
        assert_eq!(finite_n_ici(0, 100.0, &single).unwrap(), 0.0);
        let v = finite_n_ici(0, 100.0, &cfg()).unwrap();
        assert!((v - FINITE_ICI_N24_900MHZ_100).abs() < 1e-10, "{v}");
        assert!(finite_n_ici(25, 10.0, &cfg()).is_err());
    }

    #[test]
    fn leakage_sum_examples() {
        for n in [0, 1, 5, 30] {
            assert_eq!(leakage_sum(0, n, 0.0, &cfg()).unwrap(), 1.0);
        }
        let edge = leakage_sum(5, 5, 100.0, &cfg()).unwrap();
        assert!(edge < 1.0);
        assert!(leakage_sum(6, 5, 100.0, &cfg()).is_err());
    }

    #[test]
    fn capacity_examples() {
        let v0 = capacity_upper(0.0, &cfg()).unwrap();
        assert!((v0 - 101f64.log2()).abs() < 1e-12);
        let c = capacity_upper(100.0, &cfg()).unwrap();
        assert!((c - 5.823).abs() < 0.03);
        let noisy = SystemConfig {
            noise_variance: 1e12,
            ..cfg()
        };
        assert!(capacity_upper(100.0, &noisy).unwrap() < 1e-11);
        let silent = SystemConfig {
            noise_variance: 0.0,
            ..cfg()
        };
        assert!(matches!(capacity_upper(0.0, &silent), Err(Error::Domain { .. })));
    }

    #[test]
    fn capacity_approx_examples() {
        let a = capacity_upper_approx(100.0, &cfg()).unwrap();
        assert!((a - 5.819).abs() < 1e-3, "{a}");
        assert!((a - capacity_upper(100.0, &cfg()).unwrap()).abs() < 0.05);
    }

    #[test]
    fn sum_rate_examples() {
        let zero_band = SystemConfig {
            bandwidth_hz: 0.0,
            half_subcarriers: 0,
            ..cfg()
        };
        assert_eq!(sum_rate_upper(100.0, &zero_band).unwrap(), 0.0);
        let r = sum_rate_upper(100.0, &cfg()).unwrap();
        assert!((r - 1.165e6).abs() < 1e3, "{r}");
        let wide = SystemConfig {
            bandwidth_hz: 400e3,
            ..cfg()
        };
        assert!((sum_rate_upper(100.0, &wide).unwrap() - 2.0 * r).abs() < 1e-6);
    }

    #[test]
    fn ici_is_monotone_in_velocity() {
        let mut prev = 0.0;
        for v in (0..=100).step_by(5) {
            let ici = total_ici_power(f64::from(v), &cfg()).unwrap();
            assert!(ici >= prev);
            prev = ici;
        }
    }

    #[test]
    fn capacity_monotonicity() {
        let mut prev = f64::INFINITY;
        for v in (0..=100).step_by(10) {
            let c = capacity_upper(f64::from(v), &cfg()).unwrap();
            assert!(c <= prev);
            prev = c;
        }
        let mut prev = 0.0;
        for snr in (-10..=40).step_by(5) {
            let c = capacity_upper(60.0, &cfg().with_snr_db(f64::from(snr))).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn leakage_sum_grows_with_grid() {
        let mut prev = 0.0;
        for n in [0, 1, 2, 5, 10, 50, 200] {
            let s = leakage_sum(0, n, 100.0, &cfg()).unwrap();
            assert!(s >= prev && s <= 1.0 + 5e-4, "N={n}: {s}");
            prev = s;
        }
    }

    #[test]
    fn pairwise_exchange_identity_on_finite_grid() {
        // Σ_{j≠i} L(f_j − f_i) = Σ_{j≠i} L(f_i − f_j) term by term.
        let c = SystemConfig {
            half_subcarriers: 6,
            ..cfg()
        };
        for i in -6..=6 {
            let mut into = 0.0;
            let mut out = 0.0;
            for j in -6..=6 {
                if j != i {
                    into += leakage(f64::from(j - i) * 2500.0, 80.0, &c).unwrap();
                    out += leakage(f64::from(i - j) * 2500.0, 80.0, &c).unwrap();
                }
            }
            assert!((into - out).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn leakage_is_even(offset in 0.0f64..20_000.0, v in 1.0f64..150.0) {
            let c = cfg();
            let plus = leakage(offset, v, &c).unwrap();
            let minus = leakage(-offset, v, &c).unwrap();
            prop_assert!((plus - minus).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&plus));
        }
    }
}
