//! Monte Carlo simulation of the random-coding stop-feedback scheme.
//!
//! Each trial draws a fresh i.i.d. codebook of `M` codewords of length `d·l`,
//! sends codeword `W` through the channel, and at every `d`-th symbol compares
//! each codeword's accumulated information density with the threshold `γ`.
//! The first attempt at which any codeword crosses is `τ'`; the decoder
//! outputs the largest crossing index, or `M` if nothing crossed by attempt
//! `l`. The decision time is `τ* = min(τ', l)`.
//!
//! Two samplers produce the same outcome law:
//!
//! * **explicit** draws all `M` codewords symbol by symbol (cost `O(M·d·l)`);
//! * **aggregated** draws only the transmitted codeword and the output, then
//!   computes, conditional on the output, the exact first-passage law of a
//!   single competing codeword by dynamic programming over its density
//!   values. The `M - 1` competitors are i.i.d. given the output, so the
//!   first attempt at which any of them crosses, how many cross together,
//!   and the largest index among those are sampled directly. This handles
//!   codebooks far too large to enumerate (e.g. `M ≈ 10^15`).

mod exact;

pub use exact::{exact_enumerate, ExactResult, EXACT_MAX_WORK};

use std::borrow::Cow;
use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::Channel;
use crate::rng::{stream, Role};

/// Codebooks up to this size use the explicit sampler under [`Sampler::Auto`].
pub const EXPLICIT_MAX_M: u64 = 1024;

/// Cap on distinct density values tracked by the competitor DP.
pub const MAX_DP_STATES: usize = 200_000;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("pairwise mode needs m = 2, got {0}")]
    NotPairwise(u64),
    #[error("instance too large for exhaustive enumeration ({work:e} > {limit:e} configurations)")]
    TooLarge { work: f64, limit: f64 },
    #[error("competitor density DP exceeded {0} states; use a smaller delay or the explicit sampler")]
    DpTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MessageMode {
    /// `W` uniform on `1..=M`: measures the true average error.
    #[default]
    UniformW,
    /// `W = 1` always: the conditioning used by the union-bound analysis.
    FixedW1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    #[default]
    Auto,
    Explicit,
    Aggregated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub channel: Channel,
    pub m: u64,
    pub d: u64,
    pub l: u64,
    pub gamma_nats: f64,
    pub trials: u64,
    pub seed: u64,
    pub message_mode: MessageMode,
    pub sampler: Sampler,
}

impl SimConfig {
    pub fn new(channel: Channel, m: u64, d: u64, l: u64, gamma_nats: f64, trials: u64, seed: u64) -> Self {
        Self {
            channel,
            m,
            d,
            l,
            gamma_nats,
            trials,
            seed,
            message_mode: MessageMode::default(),
            sampler: Sampler::default(),
        }
    }

    pub fn with_message_mode(mut self, mode: MessageMode) -> Self {
        self.message_mode = mode;
        self
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.d == 0 || self.l == 0 {
            return bad("d and l must be positive");
        }
        if self.l == u64::MAX {
            return bad("l too large");
        }
        if !self.gamma_nats.is_finite() {
            return bad("gamma must be finite");
        }
        if self.sampler == Sampler::Explicit && self.m > (1 << 24) {
            return bad("explicit sampler limited to m <= 2^24");
        }
        Ok(())
    }

    fn uses_explicit(&self) -> bool {
        match self.sampler {
            Sampler::Explicit => true,
            Sampler::Aggregated => false,
            Sampler::Auto => self.m <= EXPLICIT_MAX_M,
        }
    }
}

/// Outcome of one trial. Message indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub w: u64,
    pub w_hat: u64,
    pub tau_star: u64,
    /// First crossing attempt over all codewords, `l + 1` if none.
    pub tau_prime: u64,
}

impl TrialOutcome {
    pub fn is_error(&self) -> bool {
        self.w != self.w_hat
    }
}

/// A binomial proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Proportion {
    pub count: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn estimate(&self) -> f64 {
        self.count as f64 / self.trials as f64
    }

    /// Binomial standard error `sqrt(p(1-p)/n)` at the point estimate.
    pub fn std_err(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn wilson(&self, z: f64) -> (f64, f64) {
        let n = self.trials as f64;
        let p = self.estimate();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        let lo = if self.count == 0 { 0.0 } else { (centre - half).max(0.0) };
        let hi = if self.count == self.trials { 1.0 } else { (centre + half).min(1.0) };
        (lo, hi)
    }

    pub fn wilson95(&self) -> (f64, f64) {
        self.wilson(Z95)
    }
}

/// Aggregate estimates over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub trials: u64,
    pub m: u64,
    pub d: u64,
    pub l: u64,
    /// `Pr[Ŵ ≠ W]`.
    pub error: Proportion,
    /// Mean of `τ*` in decoding attempts.
    pub mean_tau_star: f64,
    pub tau_std_err: f64,
    /// `ln(M) / (d · mean τ*)`, nats per channel use.
    pub atr_estimate: f64,
    /// `Pr[τ' = l + 1]`.
    pub no_detect: Proportion,
    /// `Pr[τ̄ ≤ τ]` (counted as `τ̄ ≤ min(τ, l)`), pairwise mode only.
    pub pairwise: Option<Proportion>,
    /// `Pr[l < τ]` for the transmitted codeword, pairwise mode only.
    pub true_miss: Option<Proportion>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    errors: u64,
    tau_sum: u128,
    tau_sq: u128,
    no_detect: u64,
    pairwise: u64,
    miss: u64,
}

impl Tally {
    fn record(&mut self, o: &TrialOutcome, l: u64) {
        self.trials += 1;
        self.errors += o.is_error() as u64;
        self.tau_sum += o.tau_star as u128;
        self.tau_sq += (o.tau_star as u128) * (o.tau_star as u128);
        self.no_detect += (o.tau_prime > l) as u64;
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.trials += o.trials;
        self.errors += o.errors;
        self.tau_sum += o.tau_sum;
        self.tau_sq += o.tau_sq;
        self.no_detect += o.no_detect;
        self.pairwise += o.pairwise;
        self.miss += o.miss;
        self
    }

    fn into_stats(self, cfg: &SimConfig, pairwise: bool) -> SimStats {
        let n = self.trials;
        let mean = self.tau_sum as f64 / n as f64;
        // integer sums keep this exact and order-independent
        let var = if n > 1 {
            let num = (n as u128) * self.tau_sq - self.tau_sum * self.tau_sum;
            num as f64 / (n as f64 * (n - 1) as f64)
        } else {
            0.0
        };
        let prop = |count| Proportion { count, trials: n };
        SimStats {
            trials: n,
            m: cfg.m,
            d: cfg.d,
            l: cfg.l,
            error: prop(self.errors),
            mean_tau_star: mean,
            tau_std_err: (var / n as f64).sqrt(),
            atr_estimate: (cfg.m as f64).ln() / (cfg.d as f64 * mean),
            no_detect: prop(self.no_detect),
            pairwise: pairwise.then(|| prop(self.pairwise)),
            true_miss: pairwise.then(|| prop(self.miss)),
        }
    }
}

struct Categorical {
    cum: Vec<f64>,
    last: usize,
}

impl Categorical {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cum = p
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        let last = p.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        Self { cum, last }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cum.iter().position(|&c| u < c).unwrap_or(self.last).min(self.last)
    }
}

/// Per-run precomputation shared by all trials.
struct Prepared {
    input: Categorical,
    transition: Vec<Categorical>,
    dens: Vec<Vec<f64>>,
    /// For each output `y`: `(P_X(x), i(x; y))` over the input support.
    competitor: Vec<Vec<(f64, f64)>>,
    max_increment: f64,
    /// Competitor hazards per attempt when they do not depend on the output.
    hazards: Option<Vec<f64>>,
}

impl Prepared {
    fn new(cfg: &SimConfig) -> Result<Self, SimError> {
        let ch = &cfg.channel;
        let dens = ch.density_table();
        let py = ch.output_dist();
        let px = ch.input_dist();
        let competitor: Vec<Vec<(f64, f64)>> = (0..ch.output_size())
            .map(|y| {
                (0..ch.input_size())
                    .filter(|&x| px[x] > 0.0)
                    .map(|x| (px[x], dens[x][y]))
                    .collect()
            })
            .collect();
        let mut prep = Self {
            input: Categorical::new(px),
            transition: ch.transition().iter().map(|r| Categorical::new(r)).collect(),
            dens,
            competitor,
            max_increment: ch.info().a0_nats,
            hazards: None,
        };
        if !cfg.uses_explicit() {
            let live: Vec<usize> = (0..ch.output_size()).filter(|&y| py[y] > 0.0).collect();
            if output_symmetric(&prep.competitor, &live) {
                let n = (cfg.d * cfg.l) as usize;
                let ys = std::iter::repeat_n(live[0], n);
                prep.hazards = Some(competitor_hazards(&prep, ys, cfg.d, cfg.l, cfg.gamma_nats)?);
            }
        }
        Ok(prep)
    }
}

/// True when the law of a competitor's density increment is the same for
/// every reachable output symbol.
fn output_symmetric(competitor: &[Vec<(f64, f64)>], live: &[usize]) -> bool {
    let canon = |y: usize| {
        let mut v = competitor[y].clone();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        v
    };
    let first = canon(live[0]);
    live[1..].iter().all(|&y| {
        let other = canon(y);
        other.len() == first.len()
            && first.iter().zip(&other).all(|(a, b)| {
                (a.0 - b.0).abs() < 1e-12
                    && (a.1 == b.1 || (a.1 - b.1).abs() < 1e-12)
            })
    })
}

/// Hazard `Pr[τ̄ = k | τ̄ ≥ k, y]` for `k = 1..=attempts` of a single
/// competitor whose symbols are i.i.d. `P_X`, independent of the output `ys`.
fn competitor_hazards(
    prep: &Prepared,
    mut ys: impl Iterator<Item = usize>,
    d: u64,
    attempts: u64,
    gamma: f64,
) -> Result<Vec<f64>, SimError> {
    let total = d * attempts;
    let mut states: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let mut next: Vec<(f64, f64)> = Vec::new();
    // mass that can no longer cross: -inf densities and pruned paths
    let mut dead = 0.0;
    let mut out = Vec::with_capacity(attempts as usize);
    let mut used = 0u64;
    for _ in 0..attempts {
        for _ in 0..d {
            let y = ys.next().expect("output sequence shorter than horizon");
            used += 1;
            let reach = (total - used) as f64 * prep.max_increment;
            next.clear();
            for &(s, p) in &states {
                for &(q, inc) in &prep.competitor[y] {
                    let v = s + inc;
                    if inc == f64::NEG_INFINITY || v + reach < gamma - 1e-9 * gamma.abs().max(1.0) {
                        dead += p * q;
                    } else {
                        next.push((v, p * q));
                    }
                }
            }
            next.sort_by(|a, b| a.0.total_cmp(&b.0));
            states.clear();
            for &(v, p) in &next {
                match states.last_mut() {
                    Some(last) if (v - last.0).abs() <= 1e-9 * v.abs().max(1.0) => last.1 += p,
                    _ => states.push((v, p)),
                }
            }
            if states.len() > MAX_DP_STATES {
                return Err(SimError::DpTooLarge(MAX_DP_STATES));
            }
        }
        let alive: f64 = states.iter().map(|s| s.1).sum::<f64>() + dead;
        let split = states.partition_point(|s| s.0 < gamma);
        let crossed: f64 = states[split..].iter().map(|s| s.1).sum();
        states.truncate(split);
        out.push(if alive > 0.0 { (crossed / alive).min(1.0) } else { 0.0 });
    }
    Ok(out)
}

fn sample_message(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> u64 {
    match cfg.message_mode {
        MessageMode::UniformW => rng.random_range(1..=cfg.m),
        MessageMode::FixedW1 => 1,
    }
}

fn explicit_trial(cfg: &SimConfig, prep: &Prepared, trial: u64) -> TrialOutcome {
    let w = sample_message(cfg, &mut stream(cfg.seed, trial, Role::Message));
    let mut cb = stream(cfg.seed, trial, Role::Codebook);
    let mut noise = stream(cfg.seed, trial, Role::Noise);
    let m = cfg.m as usize;
    let d = cfg.d as usize;
    let sent = (w - 1) as usize;
    let mut score = vec![0.0f64; m];
    let mut block = vec![0usize; m * d];
    for k in 1..=cfg.l {
        for x in block.iter_mut() {
            *x = prep.input.sample(&mut cb);
        }
        for n in 0..d {
            let y = prep.transition[block[sent * d + n]].sample(&mut noise);
            for (j, s) in score.iter_mut().enumerate() {
                *s += prep.dens[block[j * d + n]][y];
            }
        }
        if let Some(j) = score.iter().rposition(|&s| s >= cfg.gamma_nats) {
            return TrialOutcome {
                w,
                w_hat: j as u64 + 1,
                tau_star: k,
                tau_prime: k,
            };
        }
    }
    TrialOutcome {
        w,
        w_hat: cfg.m,
        tau_star: cfg.l,
        tau_prime: cfg.l + 1,
    }
}

/// `N ~ Binomial(k, h)` conditioned on `N ≥ 1`.
fn zero_truncated_binomial(k: u64, h: f64, rng: &mut ChaCha8Rng) -> u64 {
    if h >= 1.0 {
        return k;
    }
    let mean = k as f64 * h;
    if mean > 20.0 {
        let b = Binomial::new(k, h).expect("valid binomial");
        loop {
            let v = b.sample(rng);
            if v > 0 {
                return v;
            }
        }
    }
    let ln_q = (-h).ln_1p();
    let total = -(k as f64 * ln_q).exp_m1();
    let u = rng.random::<f64>() * total;
    let mut pmf = ((k as f64).ln() + h.ln() + (k - 1) as f64 * ln_q).exp();
    let mut cum = 0.0;
    let mut n = 1u64;
    loop {
        cum += pmf;
        if u < cum || n >= k || pmf <= 0.0 {
            return n;
        }
        pmf *= (k - n) as f64 / (n + 1) as f64 * h / (1.0 - h);
        n += 1;
    }
}

/// Largest element of a uniformly random `n`-subset of `1..=k`.
fn max_of_random_subset(k: u64, n: u64, rng: &mut ChaCha8Rng) -> u64 {
    if n >= k {
        return k;
    }
    if n <= 64 {
        // Floyd's sampling without replacement
        let mut seen = HashSet::with_capacity(n as usize);
        let mut best = 0;
        for j in (k - n + 1)..=k {
            let t = rng.random_range(1..=j);
            let v = if seen.insert(t) {
                t
            } else {
                seen.insert(j);
                j
            };
            best = best.max(v);
        }
        best
    } else if k / n <= 64 {
        // scan down from k; expected k/n steps
        let mut i = k;
        loop {
            if rng.random_range(0..i) < n {
                return i;
            }
            i -= 1;
        }
    } else {
        k - subset_gap_by_inversion(k, n, rng)
    }
}

/// `ln Pr[k - max >= t] = sum_{j<t} ln(1 - n/(k-j))`, by the midpoint rule on
/// `x -> ln(1 - n/x)`. The rule's error is of order `t·n/k³`.
fn log_gap_tail(k: u64, n: u64, t: u64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let n = n as f64;
    let a = k as f64 + 0.5;
    let b = (k - t) as f64 + 0.5;
    a * (-n / a).ln_1p() - b * (-n / b).ln_1p() - n * (t as f64 / (b - n)).ln_1p()
}

/// Samples `k - max` for a random `n`-subset by bisection on its tail.
fn subset_gap_by_inversion(k: u64, n: u64, rng: &mut ChaCha8Rng) -> u64 {
    let log_u = (1.0 - rng.random::<f64>()).ln();
    // largest t with Pr[gap >= t] >= u; Pr[gap >= k - n + 1] = 0
    let (mut lo, mut hi) = (0u64, k - n + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if log_gap_tail(k, n, mid) >= log_u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn aggregated_trial(cfg: &SimConfig, prep: &Prepared, trial: u64) -> Result<TrialOutcome, SimError> {
    let w = sample_message(cfg, &mut stream(cfg.seed, trial, Role::Message));
    let mut cb = stream(cfg.seed, trial, Role::Codebook);
    let mut noise = stream(cfg.seed, trial, Role::Noise);
    let mut comp = stream(cfg.seed, trial, Role::Competitor);

    let mut ys = Vec::with_capacity((cfg.d * cfg.l) as usize);
    let mut s = 0.0;
    let mut tau_true = cfg.l + 1;
    for k in 1..=cfg.l {
        for _ in 0..cfg.d {
            let x = prep.input.sample(&mut cb);
            let y = prep.transition[x].sample(&mut noise);
            s += prep.dens[x][y];
            ys.push(y);
        }
        if s >= cfg.gamma_nats {
            tau_true = k;
            break;
        }
    }
    let horizon = tau_true.min(cfg.l);
    let hazards: Cow<[f64]> = match &prep.hazards {
        Some(h) => Cow::Borrowed(&h[..horizon as usize]),
        None => Cow::Owned(competitor_hazards(
            prep,
            ys.iter().copied(),
            cfg.d,
            horizon,
            cfg.gamma_nats,
        )?),
    };

    let others = cfg.m - 1;
    if others > 0 {
        for (idx, &h) in hazards.iter().enumerate() {
            if h <= 0.0 {
                continue;
            }
            let k = idx as u64 + 1;
            let p_none = if h >= 1.0 {
                0.0
            } else {
                (others as f64 * (-h).ln_1p()).exp()
            };
            if comp.random::<f64>() < p_none {
                continue;
            }
            let n = zero_truncated_binomial(others, h, &mut comp);
            let top = max_of_random_subset(others, n, &mut comp);
            // competitor indices are 1..=M with w removed
            let wrong_max = if top < w { top } else { top + 1 };
            let w_hat = if k == tau_true { w.max(wrong_max) } else { wrong_max };
            return Ok(TrialOutcome {
                w,
                w_hat,
                tau_star: k,
                tau_prime: k,
            });
        }
    }

    Ok(if tau_true <= cfg.l {
        TrialOutcome {
            w,
            w_hat: w,
            tau_star: tau_true,
            tau_prime: tau_true,
        }
    } else {
        TrialOutcome {
            w,
            w_hat: cfg.m,
            tau_star: cfg.l,
            tau_prime: cfg.l + 1,
        }
    })
}

fn trial_with(cfg: &SimConfig, prep: &Prepared, trial: u64) -> Result<TrialOutcome, SimError> {
    if cfg.uses_explicit() {
        Ok(explicit_trial(cfg, prep, trial))
    } else {
        aggregated_trial(cfg, prep, trial)
    }
}

/// Runs trial number `trial` of `cfg`. The result depends only on
/// `(cfg, trial)`.
pub fn run_trial(cfg: &SimConfig, trial: u64) -> Result<TrialOutcome, SimError> {
    cfg.validate()?;
    let prep = Prepared::new(cfg)?;
    trial_with(cfg, &prep, trial)
}

/// Runs all trials on the current rayon pool and aggregates them.
pub fn run_sim(cfg: &SimConfig) -> Result<SimStats, SimError> {
    cfg.validate()?;
    let prep = Prepared::new(cfg)?;
    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let o = trial_with(cfg, &prep, t)?;
            let mut tally = Tally::default();
            tally.record(&o, cfg.l);
            Ok(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    Ok(tally.into_stats(cfg, false))
}

fn pairwise_trial(cfg: &SimConfig, prep: &Prepared, trial: u64, independent: bool) -> (u64, u64) {
    let mut cb = stream(cfg.seed, trial, Role::Codebook);
    let mut noise = stream(cfg.seed, trial, Role::Noise);
    let mut comp = stream(cfg.seed, trial, Role::Competitor);
    let unset = cfg.l + 1;
    let (mut tau, mut tau_bar) = (unset, unset);
    let (mut s, mut s_bar) = (0.0, 0.0);
    for k in 1..=cfg.l {
        for _ in 0..cfg.d {
            let x = prep.input.sample(&mut cb);
            let x_bar = if independent {
                prep.input.sample(&mut comp)
            } else {
                prep.input.sample(&mut cb)
            };
            let y = prep.transition[x].sample(&mut noise);
            s += prep.dens[x][y];
            s_bar += prep.dens[x_bar][y];
        }
        if tau == unset && s >= cfg.gamma_nats {
            tau = k;
        }
        if tau_bar == unset && s_bar >= cfg.gamma_nats {
            tau_bar = k;
        }
        if tau != unset && tau_bar != unset {
            break;
        }
    }
    (tau, tau_bar)
}

/// Two-codeword mode: codeword 1 is sent, a second codeword `X̄` is scored
/// against the same output. Estimates `Pr[τ̄ ≤ τ]` and `Pr[l < τ]` alongside
/// the ordinary decoder statistics of the codebook `{X, X̄}` with `W = 1`.
///
/// With `independent_pair` the competitor comes from its own stream;
/// otherwise it is the second codeword of the codebook stream. Both have the
/// same law.
pub fn run_pairwise(cfg: &SimConfig, independent_pair: bool) -> Result<SimStats, SimError> {
    cfg.validate()?;
    if cfg.m != 2 {
        return Err(SimError::NotPairwise(cfg.m));
    }
    let cfg = &cfg.clone().with_message_mode(MessageMode::FixedW1);
    let prep = Prepared::new(&cfg.clone().with_sampler(Sampler::Explicit))?;
    let l = cfg.l;
    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (tau, tau_bar) = pairwise_trial(cfg, &prep, t, independent_pair);
            let tau_prime = tau.min(tau_bar);
            let w_hat = if tau_prime <= l && tau_bar == tau_prime { 2 } else if tau_prime <= l { 1 } else { 2 };
            let o = TrialOutcome {
                w: 1,
                w_hat,
                tau_star: tau_prime.min(l),
                tau_prime,
            };
            let mut tally = Tally::default();
            tally.record(&o, l);
            tally.pairwise = (tau_bar <= l && tau_bar <= tau) as u64;
            tally.miss = (tau > l) as u64;
            tally
        })
        .reduce(Tally::default, Tally::merge);
    Ok(tally.into_stats(cfg, true))
}

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_bsc;

    fn bsc(q: f64) -> Channel {
        make_bsc(q).unwrap()
    }

    #[test]
    fn config_validation() {
        let ch = bsc(0.11);
        assert!(SimConfig::new(ch.clone(), 0, 1, 1, 1.0, 1, 0).validate().is_err());
        assert!(SimConfig::new(ch.clone(), 2, 0, 1, 1.0, 1, 0).validate().is_err());
        assert!(SimConfig::new(ch.clone(), 2, 1, 1, 1.0, 0, 0).validate().is_err());
        assert!(SimConfig::new(ch.clone(), 2, 1, 1, f64::NAN, 1, 0).validate().is_err());
        assert!(SimConfig::new(ch.clone(), 2, 1, 1, f64::NEG_INFINITY, 1, 0).validate().is_err());
        assert!(SimConfig::new(ch, 2, 1, 1, -1e300, 1, 0).validate().is_ok());
    }

    #[test]
    fn tau_star_never_exceeds_l() {
        for sampler in [Sampler::Explicit, Sampler::Aggregated] {
            let cfg = SimConfig::new(bsc(0.11), 8, 3, 5, 2.0, 1, 9).with_sampler(sampler);
            for t in 0..2000 {
                let o = run_trial(&cfg, t).unwrap();
                assert!(o.tau_star >= 1 && o.tau_star <= cfg.l);
                assert!(o.w_hat >= 1 && o.w_hat <= cfg.m);
                assert_eq!(o.tau_star, o.tau_prime.min(cfg.l));
            }
        }
    }

    #[test]
    fn very_negative_gamma_stops_immediately_at_max_index() {
        for sampler in [Sampler::Explicit, Sampler::Aggregated] {
            let cfg = SimConfig::new(bsc(0.11), 5, 2, 4, -1e6, 1, 1).with_sampler(sampler);
            for t in 0..200 {
                let o = run_trial(&cfg, t).unwrap();
                assert_eq!((o.tau_star, o.w_hat), (1, 5));
            }
        }
        // huge codebook through the aggregated path
        let cfg = SimConfig::new(bsc(0.11), 1 << 50, 2, 4, -1e6, 1, 1);
        let o = run_trial(&cfg, 0).unwrap();
        assert_eq!((o.tau_star, o.w_hat), (1, 1 << 50));
    }

    #[test]
    fn unreachable_gamma_never_detects() {
        let info = bsc(0.11).info();
        let (d, l) = (3, 4);
        let gamma = info.a0_nats * (d * l) as f64 + 1.0;
        for sampler in [Sampler::Explicit, Sampler::Aggregated] {
            let cfg = SimConfig::new(bsc(0.11), 6, d, l, gamma, 1, 1).with_sampler(sampler);
            for t in 0..200 {
                let o = run_trial(&cfg, t).unwrap();
                assert_eq!((o.tau_star, o.tau_prime, o.w_hat), (l, l + 1, 6));
            }
        }
    }

    #[test]
    fn noiseless_single_codeword_stops_deterministically() {
        let ln2 = std::f64::consts::LN_2;
        for (d, l, gamma, want) in [(1, 10, 2.5 * ln2, 3), (2, 10, 5.0 * ln2, 3), (1, 2, 7.0 * ln2, 2)] {
            let cfg = SimConfig::new(bsc(0.0), 1, d, l, gamma, 1, 3);
            let o = run_trial(&cfg, 0).unwrap();
            assert_eq!(o.tau_star, want);
            assert!(!o.is_error());
        }
    }

    #[test]
    fn noiseless_pair_tie_rate() {
        // τ* = 1 always; error iff the competitor matches y and outranks W:
        // Pr = 1/2 (match) · 1/2 (W = 1) = 1/4
        let ln2 = std::f64::consts::LN_2;
        let cfg = SimConfig::new(bsc(0.0), 2, 1, 3, 0.5 * ln2, 40_000, 5);
        let s = run_sim(&cfg).unwrap();
        assert_eq!(s.mean_tau_star, 1.0);
        let p = s.error.estimate();
        assert!((p - 0.25).abs() < 4.0 * s.error.std_err(), "{p}");
        let exact = exact_enumerate(&cfg).unwrap();
        assert!((exact.error_prob - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_trial_stats_match_outcome() {
        let cfg = SimConfig::new(bsc(0.11), 4, 2, 6, 3.0, 1, 77);
        let o = run_trial(&cfg, 0).unwrap();
        let s = run_sim(&cfg).unwrap();
        assert_eq!(s.trials, 1);
        assert_eq!(s.error.count, o.is_error() as u64);
        assert_eq!(s.mean_tau_star, o.tau_star as f64);
        assert_eq!(s.no_detect.count, (o.tau_prime > cfg.l) as u64);
        assert_eq!(s.tau_std_err, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = SimConfig::new(bsc(0.11), 1 << 20, 5, 8, 6.0, 3000, 42);
        let a = with_threads(1, || run_sim(&cfg).unwrap());
        let b = with_threads(4, || run_sim(&cfg).unwrap());
        assert_eq!(a, b);
        let cfg = SimConfig::new(bsc(0.11), 2, 2, 8, 2.0, 3000, 42);
        let a = with_threads(1, || run_pairwise(&cfg, true).unwrap());
        let b = with_threads(3, || run_pairwise(&cfg, true).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_and_aggregated_agree() {
        // same law, different draws: compare within 4.5 combined standard errors
        let base = SimConfig::new(bsc(0.11), 40, 2, 10, 3.0, 60_000, 2024);
        let e = run_sim(&base.clone().with_sampler(Sampler::Explicit)).unwrap();
        let a = run_sim(&base.clone().with_sampler(Sampler::Aggregated)).unwrap();
        let se = (e.error.std_err().powi(2) + a.error.std_err().powi(2)).sqrt();
        assert!((e.error.estimate() - a.error.estimate()).abs() < 4.5 * se);
        let se = (e.tau_std_err.powi(2) + a.tau_std_err.powi(2)).sqrt();
        assert!((e.mean_tau_star - a.mean_tau_star).abs() < 4.5 * se);
        let se = (e.no_detect.std_err().powi(2) + a.no_detect.std_err().powi(2)).sqrt();
        assert!((e.no_detect.estimate() - a.no_detect.estimate()).abs() < 4.5 * se.max(1e-9));
    }

    #[test]
    fn aggregated_matches_exact_on_asymmetric_channel() {
        // Z-channel: competitor law depends on y, exercising the per-trial DP
        let z = Channel::new(vec![vec![1.0, 0.0], vec![0.3, 0.7]], vec![0.5, 0.5]).unwrap();
        let cfg = SimConfig::new(z, 2, 1, 3, 0.4, 200_000, 8).with_sampler(Sampler::Aggregated);
        let s = run_sim(&cfg).unwrap();
        let ex = exact_enumerate(&cfg).unwrap();
        assert!((s.error.estimate() - ex.error_prob).abs() < 4.0 * s.error.std_err());
        assert!((s.mean_tau_star - ex.mean_tau_star).abs() < 4.0 * s.tau_std_err);
    }

    #[test]
    fn hazard_dp_on_noiseless_channel() {
        // competitor on BSC(0) survives each symbol w.p. 1/2 and gains ln 2
        let ln2 = std::f64::consts::LN_2;
        let cfg = SimConfig::new(bsc(0.0), 1 << 40, 1, 4, 2.5 * ln2, 1, 0);
        let prep = Prepared::new(&cfg).unwrap();
        let h = prep.hazards.as_ref().unwrap();
        // crossing at k=3 requires 3 matches (1/8) out of total mass 1
        assert_eq!(h[0], 0.0);
        assert_eq!(h[1], 0.0);
        assert!((h[2] - 0.125).abs() < 1e-15);
        // after crossing, all surviving finite mass is gone
        assert_eq!(h[3], 0.0);
    }

    #[test]
    fn truncated_binomial_and_subset_max() {
        let mut rng = stream(1, 0, Role::Competitor);
        for _ in 0..1000 {
            let n = zero_truncated_binomial(1_000_000_000_000, 1e-13, &mut rng);
            assert!((1..20).contains(&n));
        }
        assert_eq!(zero_truncated_binomial(10, 1.0, &mut rng), 10);
        let mut big = 0;
        for _ in 0..200 {
            big += zero_truncated_binomial(1000, 0.5, &mut rng);
        }
        assert!((big as f64 / 200.0 - 500.0).abs() < 10.0);

        // max of a 1-subset of 1..=4 is uniform
        let mut counts = [0u32; 5];
        for _ in 0..40_000 {
            counts[max_of_random_subset(4, 1, &mut rng) as usize] += 1;
        }
        for c in &counts[1..] {
            assert!((*c as f64 - 10_000.0).abs() < 400.0);
        }
        // n = k - 1 of 1..=k: max is k unless k itself is the excluded one
        let mut top = 0;
        for _ in 0..10_000 {
            top += (max_of_random_subset(10, 9, &mut rng) == 10) as u32;
        }
        assert!((top as f64 - 9000.0).abs() < 150.0);
        assert_eq!(max_of_random_subset(7, 7, &mut rng), 7);
        let m = max_of_random_subset(1 << 20, 5000, &mut rng);
        assert!(m > (1 << 20) - 2000);
    }

    #[test]
    fn gap_tail_matches_product() {
        let (k, n) = (100_000u64, 100u64);
        for t in [1u64, 10, 1000, 5000, 50_000] {
            let exact: f64 = (0..t).map(|j| (-(n as f64) / (k - j) as f64).ln_1p()).sum();
            assert!((log_gap_tail(k, n, t) - exact).abs() < 1e-9 * exact.abs().max(1.0), "t = {t}");
        }
    }

    #[test]
    fn inverted_subset_max_has_the_right_mean() {
        // E[max] = n (k + 1) / (n + 1)
        let mut rng = stream(2, 0, Role::Competitor);
        for (k, n) in [(100_000u64, 100u64), (1u64 << 40, 5000)] {
            let gap = |m: u64| (k - m) as f64;
            let draws: Vec<f64> = (0..20_000).map(|_| gap(max_of_random_subset(k, n, &mut rng))).collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let expect = (k - n) as f64 / (n + 1) as f64;
            // the gap is roughly exponential, so its sd is about its mean
            let se = expect / (draws.len() as f64).sqrt();
            assert!((mean - expect).abs() < 4.0 * se, "k = {k}, n = {n}: {mean} vs {expect}");
        }
    }

    #[test]
    fn pairwise_requires_two_codewords() {
        let cfg = SimConfig::new(bsc(0.11), 3, 1, 2, 1.0, 10, 0);
        assert_eq!(run_pairwise(&cfg, true), Err(SimError::NotPairwise(3)));
    }

    #[test]
    fn pairwise_noiseless_never_misses() {
        let ln2 = std::f64::consts::LN_2;
        let cfg = SimConfig::new(bsc(0.0), 2, 2, 5, 9.5 * ln2, 2000, 3);
        let s = run_pairwise(&cfg, true).unwrap();
        assert_eq!(s.true_miss.unwrap().count, 0);
    }

    #[test]
    fn wilson_interval_sane() {
        let p = Proportion { count: 0, trials: 100 };
        let (lo, hi) = p.wilson95();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let p = Proportion { count: 50, trials: 100 };
        let (lo, hi) = p.wilson95();
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }
}
