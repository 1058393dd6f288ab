//! Exhaustive evaluation of the random-coding ensemble for tiny instances.
//!
//! Sums over every codebook, message and output sequence, weighting each by
//! its probability, and applies the decoder rule literally: full score matrix,
//! per-codeword first crossing, minimum, largest index among the minimisers.

use super::{MessageMode, SimConfig, SimError};

/// Upper limit on `|A|^(M·d·l) · |B|^(d·l)`.
pub const EXACT_MAX_WORK: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactResult {
    pub error_prob: f64,
    pub mean_tau_star: f64,
    /// `Pr[τ' = l + 1]`.
    pub no_detect_prob: f64,
}

fn digits(mut index: u64, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut() {
        *slot = (index % base as u64) as usize;
        index /= base as u64;
    }
}

pub fn exact_enumerate(cfg: &SimConfig) -> Result<ExactResult, SimError> {
    cfg.validate()?;
    let ch = &cfg.channel;
    let (a, b) = (ch.input_size(), ch.output_size());
    let m = cfg.m as usize;
    let n = (cfg.d * cfg.l) as usize;
    let work = (a as f64).powi((m * n) as i32) * (b as f64).powi(n as i32);
    if work > EXACT_MAX_WORK {
        return Err(SimError::TooLarge {
            work,
            limit: EXACT_MAX_WORK,
        });
    }
    let codebooks = (a as u64).pow((m * n) as u32);
    let outputs = (b as u64).pow(n as u32);
    let px = ch.input_dist();
    let w_tr = ch.transition();
    let dens = ch.density_table();
    let l = cfg.l as usize;
    let d = cfg.d as usize;

    let messages: Vec<(usize, f64)> = match cfg.message_mode {
        MessageMode::UniformW => (0..m).map(|w| (w, 1.0 / m as f64)).collect(),
        MessageMode::FixedW1 => vec![(0, 1.0)],
    };

    let mut flat = vec![0usize; m * n];
    let mut y = vec![0usize; n];
    let mut tau = vec![0usize; m];
    let (mut err, mut etau, mut nodet) = (0.0, 0.0, 0.0);

    for c in 0..codebooks {
        digits(c, a, &mut flat);
        let p_code: f64 = flat.iter().map(|&x| px[x]).product();
        if p_code == 0.0 {
            continue;
        }
        let word = |j: usize| &flat[j * n..(j + 1) * n];
        for &(w, p_w) in &messages {
            for yi in 0..outputs {
                digits(yi, b, &mut y);
                let p_y: f64 = word(w).iter().zip(&y).map(|(&x, &yy)| w_tr[x][yy]).product();
                if p_y == 0.0 {
                    continue;
                }
                for (j, t) in tau.iter_mut().enumerate() {
                    let mut score = 0.0;
                    *t = l + 1;
                    for k in 1..=l {
                        for s in (k - 1) * d..k * d {
                            score += dens[word(j)[s]][y[s]];
                        }
                        if score >= cfg.gamma_nats {
                            *t = k;
                            break;
                        }
                    }
                }
                let tau_prime = *tau.iter().min().unwrap();
                let w_hat = if tau_prime <= l {
                    tau.iter().rposition(|&t| t == tau_prime).unwrap()
                } else {
                    m - 1
                };
                let prob = p_code * p_w * p_y;
                if w_hat != w {
                    err += prob;
                }
                etau += prob * tau_prime.min(l) as f64;
                if tau_prime > l {
                    nodet += prob;
                }
            }
        }
    }
    Ok(ExactResult {
        error_prob: err,
        mean_tau_star: etau,
        no_detect_prob: nodet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_bsc;

    #[test]
    fn rejects_large_instances() {
        let cfg = SimConfig::new(make_bsc(0.11).unwrap(), 4, 2, 4, 1.0, 1, 0);
        assert!(matches!(exact_enumerate(&cfg), Err(SimError::TooLarge { .. })));
    }

    #[test]
    fn huge_gamma_gives_no_detection() {
        for m in [2, 3] {
            let cfg = SimConfig::new(make_bsc(0.11).unwrap(), m, 1, 2, 1e9, 1, 0);
            let r = exact_enumerate(&cfg).unwrap();
            assert!((r.error_prob - (m - 1) as f64 / m as f64).abs() < 1e-12);
            assert!((r.mean_tau_star - 2.0).abs() < 1e-12);
            assert!((r.no_detect_prob - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_single_codeword() {
        let ln2 = std::f64::consts::LN_2;
        let cfg = SimConfig::new(make_bsc(0.0).unwrap(), 1, 1, 3, 1.5 * ln2, 1, 0);
        let r = exact_enumerate(&cfg).unwrap();
        assert_eq!(r.error_prob, 0.0);
        assert!((r.mean_tau_star - 2.0).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one() {
        // with γ = -1e6 every codeword crosses at k = 1; decoder says M
        let cfg = SimConfig::new(make_bsc(0.2).unwrap(), 3, 1, 2, -1e6, 1, 0);
        let r = exact_enumerate(&cfg).unwrap();
        assert!((r.mean_tau_star - 1.0).abs() < 1e-12);
        assert!((r.error_prob - 2.0 / 3.0).abs() < 1e-12);
    }
}
