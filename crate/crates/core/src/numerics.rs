//! Special functions and deterministic adaptive quadrature.
//!
//! Everything here is pure: no state, no randomness, and identical inputs
//! always produce bit-identical outputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Number of Gauss–Legendre nodes used on every panel.
const GAUSS_ORDER: usize = 10;

/// Si is summed as a power series below this argument.
const SI_SERIES_LIMIT: f64 = 4.0;

/// `sin(πx)` with exact argument reduction, so integer `x` gives exactly zero.
pub fn sin_pi(x: f64) -> f64 {
    // `%` on floats is exact, so `r` carries no rounding error.
    let r = x % 2.0;
    let r = if r < 0.0 { r + 2.0 } else { r };
    if r <= 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        -(PI * (2.0 - r)).sin()
    }
}

/// Normalized sinc, `sin(πx)/(πx)`, with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        sin_pi(x) / (PI * x)
    }
}

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt` for `x ≥ 0`.
///
/// Power series below 4, series value at 4 plus adaptive quadrature of
/// `sin(t)/t` (split at multiples of π) above.
pub fn sine_integral(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("sine_integral", format!("argument {x} must be finite and >= 0")));
    }
    if x < SI_SERIES_LIMIT {
        return Ok(sine_integral_series(x));
    }
    static SI_AT_LIMIT: OnceLock<f64> = OnceLock::new();
    let base = *SI_AT_LIMIT.get_or_init(|| sine_integral_series(SI_SERIES_LIMIT));

    let first = (SI_SERIES_LIMIT / PI).floor() as usize + 1;
    let last = (x / PI).ceil() as usize;
    let breakpoints: Vec<f64> = (first..last).map(|k| k as f64 * PI).collect();
    let spec = QuadratureSpec {
        relative_tolerance: 1e-15,
        absolute_tolerance: 1e-14,
        max_subdivisions: breakpoints.len() + (1 << 14),
    };
    let tail = integrate_with_breakpoints(|t| t.sin() / t, SI_SERIES_LIMIT, x, &breakpoints, &spec)?;
    Ok(base + tail)
}

/// `Σ (−1)ᵏ x^{2k+1} / ((2k+1)(2k+1)!)`, summed until terms stop mattering.
fn sine_integral_series(x: f64) -> f64 {
    let x2 = x * x;
    // term_k = (−1)ᵏ x^{2k+1} / (2k+1)!
    let mut term = x;
    let mut sum = x;
    let mut k = 0u32;
    loop {
        k += 1;
        let n = f64::from(2 * k);
        term *= -x2 / (n * (n + 1.0));
        let contribution = term / (n + 1.0);
        sum += contribution;
        if contribution.abs() <= f64::EPSILON * 1e-2 * sum.abs() || k > 200 {
            return sum;
        }
    }
}

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-9,
            absolute_tolerance: 1e-12,
            max_subdivisions: 1 << 14,
        }
    }
}

impl QuadratureSpec {
    pub fn new(relative_tolerance: f64, absolute_tolerance: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            relative_tolerance,
            absolute_tolerance,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::invalid("relative_tolerance", "must be > 0"));
        }
        if !(self.absolute_tolerance > 0.0) {
            return Err(Error::invalid("absolute_tolerance", "must be > 0"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::invalid("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }
}

/// Adaptive Gauss–Legendre quadrature of `f` over `[lower, upper]`.
///
/// The estimate is accepted once the summed panel error bound drops below
/// `max(absolute_tolerance, relative_tolerance · |estimate|)`.
pub fn integrate<F>(f: F, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_with_breakpoints(f, lower, upper, &[], spec)
}

/// Like [`integrate`], but the interval is pre-split at `breakpoints`.
///
/// Points outside `(lower, upper)` are ignored. Seeding panels at the zeros of
/// an oscillatory integrand keeps each panel close to a single lobe.
pub fn integrate_with_breakpoints<F>(
    f: F,
    lower: f64,
    upper: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if !lower.is_finite() || !upper.is_finite() {
        return Err(Error::domain("integrate", "bounds must be finite"));
    }
    if lower > upper {
        return Err(Error::domain("integrate", format!("lower bound {lower} exceeds upper bound {upper}")));
    }
    if lower == upper {
        return Ok(0.0);
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| *p > lower && *p < upper)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lower);
    edges.extend(cuts);
    edges.push(upper);

    let mut panels: Vec<Panel> = edges
        .windows(2)
        .map(|w| Panel::new(&f, w[0], w[1]))
        .collect();
    let mut heap: BinaryHeap<Ranked> = panels
        .iter()
        .enumerate()
        .map(|(index, p)| Ranked { error: p.error, index })
        .collect();

    let mut estimate: f64 = panels.iter().map(|p| p.estimate).sum();
    let mut error: f64 = panels.iter().map(|p| p.error).sum();

    loop {
        if !estimate.is_finite() || !error.is_finite() {
            return Err(Error::domain("integrate", "integrand is not finite on the interval"));
        }
        if error <= spec.absolute_tolerance.max(spec.relative_tolerance * estimate.abs()) {
            // Re-sum in interval order so the result does not depend on the
            // history of running-sum updates.
            panels.sort_by(|a, b| a.lower.total_cmp(&b.lower));
            let total = panels.iter().map(|p| p.estimate).sum();
            let bound: f64 = panels.iter().map(|p| p.error).sum();
            if bound <= spec.absolute_tolerance.max(spec.relative_tolerance * f64::abs(total)) {
                return Ok(total);
            }
            estimate = total;
            error = bound;
            heap = panels
                .iter()
                .enumerate()
                .map(|(index, p)| Ranked { error: p.error, index })
                .collect();
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                estimate,
                error_bound: error,
                subdivisions: panels.len(),
            });
        }

        let Some(worst) = heap.pop() else {
            return Err(Error::Quadrature {
                estimate,
                error_bound: error,
                subdivisions: panels.len(),
            });
        };
        let parent = panels[worst.index];
        let mid = 0.5 * (parent.lower + parent.upper);
        if mid <= parent.lower || mid >= parent.upper {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                estimate,
                error_bound: error,
                subdivisions: panels.len(),
            });
        }
        let left = Panel::with_coarse(&f, parent.lower, mid, parent.left);
        let right = Panel::with_coarse(&f, mid, parent.upper, parent.right);

        estimate += left.estimate + right.estimate - parent.estimate;
        error += left.error + right.error - parent.error;

        panels[worst.index] = left;
        heap.push(Ranked {
            error: left.error,
            index: worst.index,
        });
        panels.push(right);
        heap.push(Ranked {
            error: right.error,
            index: panels.len() - 1,
        });
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lower: f64,
    upper: f64,
    left: f64,
    right: f64,
    estimate: f64,
    error: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Self {
        let coarse = gauss_legendre(f, lower, upper);
        Self::with_coarse(f, lower, upper, coarse)
    }

    fn with_coarse<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64, coarse: f64) -> Self {
        let mid = 0.5 * (lower + upper);
        let left = gauss_legendre(f, lower, mid);
        let right = gauss_legendre(f, mid, upper);
        let estimate = left + right;
        Self {
            lower,
            upper,
            left,
            right,
            estimate,
            error: (coarse - estimate).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    error: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.index.cmp(&self.index))
    }
}

fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> f64 {
    let rule = gauss_legendre_rule();
    let half = 0.5 * (upper - lower);
    let centre = 0.5 * (upper + lower);
    let mut sum = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        sum += w * f(centre + half * x);
    }
    sum * half
}

struct GaussRule {
    nodes: [f64; GAUSS_ORDER],
    weights: [f64; GAUSS_ORDER],
}

/// Nodes and weights on `[-1, 1]`, found by Newton iteration on `P_n`.
fn gauss_legendre_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_ORDER;
        let mut nodes = [0.0; GAUSS_ORDER];
        let mut weights = [0.0; GAUSS_ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                derivative = dp;
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            if dp != 0.0 {
                derivative = dp;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * derivative * derivative);
        }
        GaussRule { nodes, weights }
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Value of `Si(x)` at its first maximum, `x = π`.
pub fn sine_integral_first_maximum() -> f64 {
    sine_integral_series(PI)
}
