//! Closed-form achievability bounds for `(l, d)` variable-length stop-feedback
//! codes under a hard delay of `L = d·l` channel uses.
//!
//! Every function here works in nats per channel use. The free parameter `α`
//! trades the missed-detection probability (`α`) against the false-detection
//! budget (`ε - α`); the threshold is `γ(α) = (1 - δ)·C·d·l` with
//! `δ = sqrt(2·ln(1/α) / (C·d·l))`. Internally `α` is handled as `ln α` because
//! the lower end of its range, `exp(-C·d·l/2)`, underflows for long delays.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::channel::ChannelInfo;
use crate::optimize::golden_section_max;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("decoding period d and attempt cap l must be positive (d={d}, l={l})")]
    BadDelay { d: u64, l: u64 },
    #[error("error probability {0} outside (0, 1)")]
    BadEpsilon(f64),
    #[error("channel capacity must be positive, got {0}")]
    ZeroCapacity(f64),
    #[error("alpha = {alpha:e} outside the admissible interval (exp({log_lo}), {hi})")]
    AlphaOutOfRange { alpha: f64, log_lo: f64, hi: f64 },
    #[error("infeasible: epsilon {epsilon} <= exp(-C·d·l/2) = exp({log_floor}) at L = {delay}")]
    Infeasible {
        epsilon: f64,
        log_floor: f64,
        delay: u64,
    },
    #[error("c0 must lie in (0, 1], got {0}")]
    BadC0(f64),
    #[error("blocklength must be at least 1")]
    ZeroBlocklength,
    #[error("l values must be non-empty and strictly increasing")]
    BadGrid,
}

/// Code parameters: decoding period `d`, attempt cap `l`, error target `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlfParams {
    d: u64,
    l: u64,
    epsilon: f64,
}

impl VlfParams {
    pub fn new(d: u64, l: u64, epsilon: f64) -> Result<Self, BoundsError> {
        if d == 0 || l == 0 {
            return Err(BoundsError::BadDelay { d, l });
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(BoundsError::BadEpsilon(epsilon));
        }
        Ok(Self { d, l, epsilon })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Hard delay budget `L = d·l` in channel uses.
    pub fn delay(&self) -> u64 {
        self.d * self.l
    }
}

/// Integer codebook size with a log-domain companion.
///
/// `m` saturates at `u64::MAX`; `log_m` stays accurate beyond that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookSize {
    pub m: u64,
    pub log_m: f64,
    pub saturated: bool,
}

/// Result of the α-optimised ATR lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtrBound {
    /// Lower bound on the achievable ATR, clamped below at 0.
    pub atr_nats_per_symbol: f64,
    pub alpha_star: f64,
    pub log_alpha_star: f64,
    /// Codebook size guaranteed at `α*`.
    pub m_star: CodebookSize,
    /// Cap on `E[τ*]` at `α*`, in decoding attempts.
    pub etau_cap: f64,
    pub gamma_nats: f64,
    /// True when the unclamped objective was ≤ 0 (the bound is vacuous).
    pub clamped: bool,
}

/// Settings for the α-search: a log-spaced scan followed by golden-section
/// refinement around the best scan point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub scan_points: usize,
    /// Relative shrink of the open interval `(ln α_lo, ln ε)` at both ends.
    pub rel_margin: f64,
    /// Bracket width (in `ln α`) at which golden-section stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            scan_points: 256,
            rel_margin: 1e-12,
            tol: 1e-12,
            max_iter: 300,
        }
    }
}

/// `(ln α_lo, ln α_hi) = (-C·d·l/2, ln ε)`.
fn log_alpha_domain(info: &ChannelInfo, p: &VlfParams) -> (f64, f64) {
    let cdl = info.capacity_nats * p.delay() as f64;
    (-0.5 * cdl, p.epsilon.ln())
}

fn check_capacity(info: &ChannelInfo) -> Result<(), BoundsError> {
    if info.capacity_nats > 0.0 {
        Ok(())
    } else {
        Err(BoundsError::ZeroCapacity(info.capacity_nats))
    }
}

fn check_alpha(info: &ChannelInfo, p: &VlfParams, alpha: f64) -> Result<f64, BoundsError> {
    check_capacity(info)?;
    let (lo, _) = log_alpha_domain(info, p);
    let la = alpha.ln();
    if !(la > lo && alpha < p.epsilon) {
        return Err(BoundsError::AlphaOutOfRange {
            alpha,
            log_lo: lo,
            hi: p.epsilon,
        });
    }
    Ok(la)
}

/// `δ(α) = sqrt(2 ln(1/α) / (C·d·l))` from `ln α`.
fn delta_of(info: &ChannelInfo, p: &VlfParams, log_alpha: f64) -> f64 {
    let cdl = info.capacity_nats * p.delay() as f64;
    (-2.0 * log_alpha / cdl).sqrt()
}

/// `ln(ε - α)` without cancellation.
fn log_eps_minus_alpha(p: &VlfParams, log_alpha: f64) -> f64 {
    let le = p.epsilon.ln();
    le + (-(log_alpha - le).exp()).ln_1p()
}

/// Stopping threshold `γ(α) = (1 - δ)·C·d·l`.
pub fn gamma_nats(info: &ChannelInfo, p: &VlfParams, alpha: f64) -> Result<f64, BoundsError> {
    let la = check_alpha(info, p, alpha)?;
    Ok(gamma_from_log(info, p, la))
}

fn gamma_from_log(info: &ChannelInfo, p: &VlfParams, log_alpha: f64) -> f64 {
    let cdl = info.capacity_nats * p.delay() as f64;
    (1.0 - delta_of(info, p, log_alpha)) * cdl
}

fn codebook_size_from_log(info: &ChannelInfo, p: &VlfParams, log_alpha: f64) -> CodebookSize {
    // M = floor((ε-α)·e^γ + 1)
    let x = log_eps_minus_alpha(p, log_alpha) + gamma_from_log(info, p, log_alpha);
    let val = x.exp() + 1.0;
    if val < u64::MAX as f64 {
        let m = val.floor() as u64;
        CodebookSize {
            m,
            log_m: (m as f64).ln(),
            saturated: false,
        }
    } else {
        CodebookSize {
            m: u64::MAX,
            log_m: x + (-x).exp().ln_1p(),
            saturated: true,
        }
    }
}

/// Largest codebook size meeting the error target at a given `α`.
pub fn lemma1_max_m(
    info: &ChannelInfo,
    p: &VlfParams,
    alpha: f64,
) -> Result<CodebookSize, BoundsError> {
    let la = check_alpha(info, p, alpha)?;
    Ok(codebook_size_from_log(info, p, la))
}

fn etau_cap_from_log(info: &ChannelInfo, p: &VlfParams, log_alpha: f64) -> f64 {
    let l = p.l as f64;
    let unclamped =
        (1.0 - delta_of(info, p, log_alpha)) * l + info.a0_nats / info.capacity_nats;
    unclamped.min(l)
}

/// Upper bound on the mean number of decoding attempts, `min{(1-δ)l + a₀/C, l}`.
pub fn lemma2_etau_cap(info: &ChannelInfo, p: &VlfParams, alpha: f64) -> Result<f64, BoundsError> {
    let la = check_alpha(info, p, alpha)?;
    Ok(etau_cap_from_log(info, p, la))
}

/// Unclamped ATR objective as a function of `ln α`.
pub fn atr_objective(info: &ChannelInfo, p: &VlfParams, log_alpha: f64) -> f64 {
    let cdl = info.capacity_nats * p.delay() as f64;
    let num = log_eps_minus_alpha(p, log_alpha) + cdl - (-2.0 * cdl * log_alpha).sqrt();
    num / (p.d as f64 * etau_cap_from_log(info, p, log_alpha))
}

/// α-optimised lower bound on the maximum ATR.
///
/// Returns [`BoundsError::Infeasible`] when `ε ≤ exp(-C·d·l/2)`, which leaves
/// no admissible `α`.
pub fn theorem1_atr(
    info: &ChannelInfo,
    p: &VlfParams,
    opt: &OptimizerSettings,
) -> Result<AtrBound, BoundsError> {
    check_capacity(info)?;
    let (lo, hi) = log_alpha_domain(info, p);
    if hi <= lo {
        return Err(BoundsError::Infeasible {
            epsilon: p.epsilon,
            log_floor: lo,
            delay: p.delay(),
        });
    }
    let width = hi - lo;
    let a = lo + opt.rel_margin * width;
    let b = hi - opt.rel_margin * width;
    let f = |u: f64| atr_objective(info, p, u);

    let n = opt.scan_points.max(3);
    let grid: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    let (best_i, best_v) = grid
        .iter()
        .map(|&u| f(u))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    let left = grid[best_i.saturating_sub(1)];
    let right = grid[(best_i + 1).min(n - 1)];
    let refined = golden_section_max(f, left, right, opt.tol, opt.max_iter);
    let (u, v) = if refined.value >= best_v {
        (refined.x, refined.value)
    } else {
        (grid[best_i], best_v)
    };

    Ok(AtrBound {
        atr_nats_per_symbol: v.max(0.0),
        alpha_star: u.exp(),
        log_alpha_star: u,
        m_star: codebook_size_from_log(info, p, u),
        etau_cap: etau_cap_from_log(info, p, u),
        gamma_nats: gamma_from_log(info, p, u),
        clamped: v <= 0.0,
    })
}

/// Large-delay approximation `C - (d·a₀ - ln(ε/2)) / L`.
///
/// Not clamped: a negative value means `L` is far too small for the
/// approximation to mean anything.
pub fn approx_atr(info: &ChannelInfo, p: &VlfParams) -> f64 {
    info.capacity_nats
        - (p.d as f64 * info.a0_nats - (0.5 * p.epsilon).ln()) / p.delay() as f64
}

/// Explicit `O(1/l)` bound on `C - ATR`: `(d·a₀ - ln(ε/2)) / (l·d·c0)`.
///
/// Only meaningful once [`theorem2_premise`] holds for the same `c0`.
pub fn theorem2_gap_bound(info: &ChannelInfo, p: &VlfParams, c0: f64) -> Result<f64, BoundsError> {
    if !(c0 > 0.0 && c0 <= 1.0) {
        return Err(BoundsError::BadC0(c0));
    }
    let d = p.d as f64;
    Ok((d * info.a0_nats - (0.5 * p.epsilon).ln()) / (p.l as f64 * d * c0))
}

/// Checks the conditions under which [`theorem2_gap_bound`] is proven:
/// `α = ε/2` lies strictly inside `(e^{-Cdl/2}, min{ε, e^{-d·a₀²/(2Cl)}})`
/// and `(dl - sqrt(2dl·ln(2/ε)/C) + d·a₀/C) / l > c0·d`.
pub fn theorem2_premise(info: &ChannelInfo, p: &VlfParams, c0: f64) -> bool {
    let c = info.capacity_nats;
    if c <= 0.0 {
        return false;
    }
    let d = p.d as f64;
    let l = p.l as f64;
    let la = (0.5 * p.epsilon).ln();
    let lower = -0.5 * c * d * l;
    let upper = -d * info.a0_nats * info.a0_nats / (2.0 * c * l);
    let in_range = la > lower && la < upper;
    let ratio = (d * l - (2.0 * d * l * (2.0 / p.epsilon).ln() / c).sqrt() + d * info.a0_nats / c) / l;
    in_range && ratio > c0 * d
}

/// `Q⁻¹(ε)`, the inverse of the standard-normal upper tail.
pub fn q_inv(epsilon: f64) -> f64 {
    let n = Normal::standard();
    if epsilon < 0.5 {
        -n.inverse_cdf(epsilon)
    } else {
        n.inverse_cdf(1.0 - epsilon)
    }
}

/// Fixed-blocklength rate without feedback (normal approximation),
/// `C - sqrt(V/n)·Q⁻¹(ε) + ln(n)/(2n)`, clamped at 0.
pub fn nonfeedback_rate(info: &ChannelInfo, n: u64, epsilon: f64) -> Result<f64, BoundsError> {
    if n == 0 {
        return Err(BoundsError::ZeroBlocklength);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundsError::BadEpsilon(epsilon));
    }
    let nf = n as f64;
    let r = info.capacity_nats - (info.dispersion_nats2 / nf).sqrt() * q_inv(epsilon)
        + nf.ln() / (2.0 * nf);
    Ok(r.max(0.0))
}

/// One row of an ATR-versus-delay sweep (values in nats per channel use).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l: u64,
    pub d: u64,
    pub delay: u64,
    /// `None` when no admissible `α` exists at this delay.
    pub vlf: Option<AtrBound>,
    pub approx: f64,
    pub nofb: f64,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.vlf.is_some()
    }

    /// VLF bound with infeasible points read as 0.
    pub fn vlf_or_zero(&self) -> f64 {
        self.vlf.map_or(0.0, |b| b.atr_nats_per_symbol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub epsilon: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn all_infeasible(&self) -> bool {
        self.rows.iter().all(|r| !r.feasible())
    }

    /// Delay at which the VLF bound overtakes the no-feedback rate for good:
    /// the row following the last row where VLF ≤ no-feedback.
    /// `None` if VLF never ends up strictly above.
    pub fn vlf_overtakes_at(&self) -> Option<u64> {
        match self.rows.iter().rposition(|r| r.vlf_or_zero() <= r.nofb) {
            None => self.rows.first().map(|r| r.delay),
            Some(i) => self.rows.get(i + 1).map(|r| r.delay),
        }
    }
}

/// Evaluates the VLF bound, its approximation and the no-feedback baseline
/// (at `n = L`) for each `l`.
pub fn sweep(
    info: &ChannelInfo,
    epsilon: f64,
    d: u64,
    l_values: &[u64],
    opt: &OptimizerSettings,
) -> Result<SweepTable, BoundsError> {
    if l_values.is_empty() || l_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BoundsError::BadGrid);
    }
    let rows = l_values
        .par_iter()
        .map(|&l| {
            let p = VlfParams::new(d, l, epsilon)?;
            let vlf = match theorem1_atr(info, &p, opt) {
                Ok(b) => Some(b),
                Err(BoundsError::Infeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                l,
                d,
                delay: p.delay(),
                vlf,
                approx: approx_atr(info, &p),
                nofb: nonfeedback_rate(info, p.delay(), epsilon)?,
            })
        })
        .collect::<Result<Vec<_>, BoundsError>>()?;
    Ok(SweepTable { epsilon, rows })
}

/// Log-spaced integer grid on `[lo, hi]` with `per_decade` points per decade,
/// deduplicated after rounding.
pub fn log_grid(lo: u64, hi: u64, per_decade: usize) -> Vec<u64> {
    if lo == 0 || hi < lo || per_decade == 0 {
        return Vec::new();
    }
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let n = ((b - a) * per_decade as f64).ceil() as usize;
    let mut out: Vec<u64> = (0..=n)
        .map(|i| {
            let t = if n == 0 { a } else { a + (b - a) * i as f64 / n as f64 };
            (10f64.powf(t).round() as u64).clamp(lo, hi)
        })
        .collect();
    out.dedup();
    out
}
