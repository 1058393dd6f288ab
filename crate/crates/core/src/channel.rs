//! Discrete memoryless channels and the information quantities derived from them.
//!
//! All quantities are in nats. A channel carries its own input distribution
//! because every derived quantity (output marginal, information density,
//! capacity under that input) depends on it.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Tolerance on probability-vector normalisation.
pub const SUM_TOL: f64 = 1e-12;

/// Default Blahut–Arimoto stopping gap, in nats.
pub const BA_DEFAULT_TOL: f64 = 1e-10;

/// Default Blahut–Arimoto iteration cap.
pub const BA_MAX_ITER: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("crossover probability {0} outside [0, 0.5]")]
    CrossoverOutOfRange(f64),
    #[error("erasure probability {0} outside [0, 1]")]
    ErasureOutOfRange(f64),
    #[error("channel must have at least one input and one output symbol")]
    EmptyAlphabet,
    #[error("transition row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("{what} contains an entry outside [0, 1]: {value}")]
    NotAProbability { what: String, value: f64 },
    #[error("{what} sums to {sum}, not 1")]
    NotNormalised { what: String, sum: f64 },
    #[error("input distribution has {got} entries, channel has {expected} inputs")]
    InputSizeMismatch { got: usize, expected: usize },
    #[error("symbol ({x}, {y}) outside the channel alphabets")]
    SymbolOutOfRange { x: usize, y: usize },
    #[error("output symbol {0} has zero probability under the input distribution")]
    ZeroOutputProbability(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("Blahut-Arimoto did not converge in {iterations} iterations (residual gap {gap:e} nats)")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("channel file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading channel file: {0}")]
    Io(String),
}

/// A finite-alphabet memoryless channel `P(y|x)` together with an input law `P_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    transition: Vec<Vec<f64>>,
    input_dist: Vec<f64>,
}

/// Information-theoretic summary of a channel under its input distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelInfo {
    /// `E[i(X;Y)]`, i.e. the mutual information under `P_X`.
    pub capacity_nats: f64,
    /// Largest finite single-symbol information density over the support.
    pub a0_nats: f64,
    /// `Var[i(X;Y)]`.
    pub dispersion_nats2: f64,
}

fn check_prob_vector(what: &str, v: &[f64]) -> Result<(), ChannelError> {
    for &p in v {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(ChannelError::NotAProbability {
                what: what.to_string(),
                value: p,
            });
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(ChannelError::NotNormalised {
            what: what.to_string(),
            sum,
        });
    }
    Ok(())
}

impl Channel {
    /// Builds a channel from a row-stochastic transition matrix and an input law.
    pub fn new(transition: Vec<Vec<f64>>, input_dist: Vec<f64>) -> Result<Self, ChannelError> {
        let inputs = transition.len();
        if inputs == 0 || transition[0].is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        let outputs = transition[0].len();
        for (row, r) in transition.iter().enumerate() {
            if r.len() != outputs {
                return Err(ChannelError::RaggedRow {
                    row,
                    got: r.len(),
                    expected: outputs,
                });
            }
            check_prob_vector(&format!("transition row {row}"), r)?;
        }
        if input_dist.len() != inputs {
            return Err(ChannelError::InputSizeMismatch {
                got: input_dist.len(),
                expected: inputs,
            });
        }
        check_prob_vector("input distribution", &input_dist)?;
        let ch = Self {
            transition,
            input_dist,
        };
        check_prob_vector("output marginal", &ch.output_dist())?;
        Ok(ch)
    }

    /// Same as [`Channel::new`] with a uniform input law.
    pub fn with_uniform_input(transition: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        let n = transition.len().max(1);
        Self::new(transition, vec![1.0 / n as f64; n])
    }

    pub fn input_size(&self) -> usize {
        self.transition.len()
    }

    pub fn output_size(&self) -> usize {
        self.transition[0].len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn input_dist(&self) -> &[f64] {
        &self.input_dist
    }

    /// Replaces the input law, re-validating the result.
    pub fn with_input_dist(&self, input_dist: Vec<f64>) -> Result<Self, ChannelError> {
        Self::new(self.transition.clone(), input_dist)
    }

    /// Output marginal `P_Y(y) = Σ_x P_X(x) P(y|x)`.
    pub fn output_dist(&self) -> Vec<f64> {
        output_marginal(&self.transition, &self.input_dist)
    }

    /// Single-symbol information density `log(P(y|x) / P_Y(y))`.
    ///
    /// Returns `f64::NEG_INFINITY` when `P(y|x) = 0` but `P_Y(y) > 0`; such a
    /// pair can never occur on the true codeword and acts as a veto on a
    /// competing one.
    pub fn info_density(&self, x: usize, y: usize) -> Result<f64, ChannelError> {
        if x >= self.input_size() || y >= self.output_size() {
            return Err(ChannelError::SymbolOutOfRange { x, y });
        }
        let py = self.output_dist()[y];
        if py <= 0.0 {
            return Err(ChannelError::ZeroOutputProbability(y));
        }
        Ok(density(self.transition[x][y], py))
    }

    /// Full `|A| x |B|` table of information densities. Columns with
    /// `P_Y(y) = 0` are filled with `NEG_INFINITY`; those outputs never occur.
    pub fn density_table(&self) -> Vec<Vec<f64>> {
        let py = self.output_dist();
        self.transition
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&py)
                    .map(|(&w, &p)| if p > 0.0 { density(w, p) } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect()
    }

    /// Information density of a whole sequence pair, `Σ_n i(x_n; y_n)`.
    pub fn sequence_info_density(&self, xs: &[usize], ys: &[usize]) -> Result<f64, ChannelError> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| self.info_density(x, y))
            .sum()
    }

    pub fn info(&self) -> ChannelInfo {
        channel_info(self)
    }

    /// Returns a copy with the capacity-achieving input law
    /// (Blahut–Arimoto, stopped once the certified capacity gap is below `tol`).
    pub fn optimize_input_dist(&self, tol: f64) -> Result<Self, ChannelError> {
        let (dist, _) = blahut_arimoto(&self.transition, tol, BA_MAX_ITER)?;
        self.with_input_dist(dist)
    }

    /// Parses the text channel format:
    ///
    /// ```text
    /// # comment
    /// 2 3
    /// 0.7 0.3 0.0
    /// 0.0 0.3 0.7
    /// input 0.5 0.5
    /// ```
    ///
    /// Without an `input` line the capacity-achieving input law is used.
    pub fn parse(text: &str) -> Result<Self, ChannelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(ChannelError::Parse {
            line: 0,
            msg: "missing `|A| |B|` header".into(),
        })?;
        let dims = parse_numbers::<usize>(hline, header)?;
        let [inputs, outputs] = dims[..] else {
            return Err(ChannelError::Parse {
                line: hline,
                msg: format!("header needs 2 integers, found {}", dims.len()),
            });
        };
        if inputs == 0 || outputs == 0 {
            return Err(ChannelError::EmptyAlphabet);
        }

        let mut transition = Vec::with_capacity(inputs);
        for row in 0..inputs {
            let (ln, l) = lines.next().ok_or(ChannelError::Parse {
                line: hline,
                msg: format!("expected {inputs} transition rows, found {row}"),
            })?;
            let r = parse_numbers::<f64>(ln, l)?;
            if r.len() != outputs {
                return Err(ChannelError::Parse {
                    line: ln,
                    msg: format!("expected {outputs} probabilities, found {}", r.len()),
                });
            }
            transition.push(r);
        }

        let input = match lines.next() {
            None => None,
            Some((ln, l)) => {
                let rest = l.strip_prefix("input").ok_or(ChannelError::Parse {
                    line: ln,
                    msg: "unexpected trailing line (only `input ...` allowed)".into(),
                })?;
                let v = parse_numbers::<f64>(ln, rest)?;
                if v.len() != inputs {
                    return Err(ChannelError::Parse {
                        line: ln,
                        msg: format!("input line needs {inputs} probabilities, found {}", v.len()),
                    });
                }
                if let Some((ln, _)) = lines.next() {
                    return Err(ChannelError::Parse {
                        line: ln,
                        msg: "content after the input line".into(),
                    });
                }
                Some(v)
            }
        };

        match input {
            Some(p) => Self::new(transition, p),
            None => Self::with_uniform_input(transition)?.optimize_input_dist(BA_DEFAULT_TOL),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ChannelError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.input_size(), self.output_size())?;
        for row in &self.transition {
            let cells: Vec<String> = row.iter().map(|p| format!("{p}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        let cells: Vec<String> = self.input_dist.iter().map(|p| format!("{p}")).collect();
        writeln!(f, "input {}", cells.join(" "))
    }
}

fn parse_numbers<T: std::str::FromStr>(line: usize, s: &str) -> Result<Vec<T>, ChannelError> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| ChannelError::Parse {
                line,
                msg: format!("cannot parse `{tok}`"),
            })
        })
        .collect()
}

fn density(w: f64, py: f64) -> f64 {
    if w > 0.0 {
        (w / py).ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn output_marginal(transition: &[Vec<f64>], input: &[f64]) -> Vec<f64> {
    let mut py = vec![0.0; transition[0].len()];
    for (row, &px) in transition.iter().zip(input) {
        for (acc, &w) in py.iter_mut().zip(row) {
            *acc += px * w;
        }
    }
    py
}

/// Binary symmetric channel with crossover `q` and uniform input.
pub fn make_bsc(q: f64) -> Result<Channel, ChannelError> {
    if !(0.0..=0.5).contains(&q) {
        return Err(ChannelError::CrossoverOutOfRange(q));
    }
    Channel::with_uniform_input(vec![vec![1.0 - q, q], vec![q, 1.0 - q]])
}

/// Binary erasure channel with erasure probability `p`; outputs are `{0, 1, e}`.
pub fn make_bec(p: f64) -> Result<Channel, ChannelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ChannelError::ErasureOutOfRange(p));
    }
    Channel::with_uniform_input(vec![vec![1.0 - p, 0.0, p], vec![0.0, 1.0 - p, p]])
}

/// Capacity (mutual information under `P_X`), `a₀` and dispersion.
pub fn channel_info(ch: &Channel) -> ChannelInfo {
    let table = ch.density_table();
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut a0 = f64::NEG_INFINITY;
    for (x, &px) in ch.input_dist.iter().enumerate() {
        if px <= 0.0 {
            continue;
        }
        for (y, &w) in ch.transition[x].iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let i = table[x][y];
            mean += px * w * i;
            second += px * w * i * i;
            a0 = a0.max(i);
        }
    }
    ChannelInfo {
        capacity_nats: mean.max(0.0),
        a0_nats: a0,
        dispersion_nats2: (second - mean * mean).max(0.0),
    }
}

/// Mutual information `I(P_X; W)` in nats.
pub fn mutual_information(transition: &[Vec<f64>], input: &[f64]) -> f64 {
    let py = output_marginal(transition, input);
    let mut acc = 0.0;
    for (row, &px) in transition.iter().zip(input) {
        if px <= 0.0 {
            continue;
        }
        for (&w, &p) in row.iter().zip(&py) {
            if w > 0.0 {
                acc += px * w * (w / p).ln();
            }
        }
    }
    acc
}

/// Blahut–Arimoto iteration. Returns the input law and the certified gap
/// `max_x D(W(.|x) || P_Y) - I(P_X)` at termination.
pub fn blahut_arimoto(
    transition: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64), ChannelError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(ChannelError::BadTolerance(tol));
    }
    let n = transition.len();
    let mut r = vec![1.0 / n as f64; n];
    let mut divs = vec![0.0; n];
    let mut gap = f64::INFINITY;
    for _ in 0..max_iter {
        let py = output_marginal(transition, &r);
        for (d, row) in divs.iter_mut().zip(transition) {
            *d = row
                .iter()
                .zip(&py)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &p)| w * (w / p).ln())
                .sum();
        }
        let upper = divs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lower: f64 = r.iter().zip(&divs).map(|(p, d)| p * d).sum();
        gap = upper - lower;
        if gap < tol {
            return Ok((r, gap));
        }
        // Multiplicative update, shifted by `upper` for numerical range.
        let mut z = 0.0;
        for (p, d) in r.iter_mut().zip(&divs) {
            *p *= (d - upper).exp();
            z += *p;
        }
        r.iter_mut().for_each(|p| *p /= z);
    }
    Err(ChannelError::NotConverged {
        iterations: max_iter,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn bsc_capacity_endpoints() {
        let info = make_bsc(0.0).unwrap().info();
        assert_abs_diff_eq!(info.capacity_nats, LN2, epsilon = 1e-15);
        assert_abs_diff_eq!(info.a0_nats, LN2, epsilon = 1e-15);
        assert_abs_diff_eq!(info.dispersion_nats2, 0.0, epsilon = 1e-15);

        let info = make_bsc(0.5).unwrap().info();
        assert_abs_diff_eq!(info.capacity_nats, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(info.a0_nats, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bsc_011_is_half_a_bit() {
        let info = make_bsc(0.11).unwrap().info();
        assert!((info.capacity_nats / LN2 - 0.5).abs() < 1e-3);
        assert_abs_diff_eq!(info.a0_nats, 1.78f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(info.a0_nats, 0.5766, epsilon = 1e-4);
    }

    #[test]
    fn bsc_dispersion_closed_form_and_brute_force() {
        let q: f64 = 0.11;
        let ch = make_bsc(q).unwrap();
        let closed = q * (1.0 - q) * ((1.0 - q) / q).ln().powi(2);
        // brute-force variance over the four (x, y) pairs
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let p = 0.5 * ch.transition()[x][y];
                let i = ch.info_density(x, y).unwrap();
                m1 += p * i;
                m2 += p * i * i;
            }
        }
        let info = ch.info();
        assert_abs_diff_eq!(info.dispersion_nats2, closed, epsilon = 1e-12);
        assert_abs_diff_eq!(info.dispersion_nats2, m2 - m1 * m1, epsilon = 1e-12);
        assert_abs_diff_eq!(info.dispersion_nats2, 0.4279, epsilon = 1e-4);
    }

    #[test]
    fn bsc_densities() {
        let ch = make_bsc(0.11).unwrap();
        assert_abs_diff_eq!(ch.info_density(0, 0).unwrap(), 0.5766, epsilon = 1e-4);
        assert_abs_diff_eq!(ch.info_density(1, 0).unwrap(), -1.5141, epsilon = 1e-4);
        assert_abs_diff_eq!(ch.info_density(1, 0).unwrap(), 0.22f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn capacity_equals_exhaustive_expectation_for_bsc() {
        for &q in &[0.01, 0.11, 0.3] {
            let ch = make_bsc(q).unwrap();
            let h = -q * f64::ln(q) - (1.0 - q) * f64::ln(1.0 - q);
            assert_abs_diff_eq!(ch.info().capacity_nats, LN2 - h, epsilon = 1e-12);
        }
    }

    #[test]
    fn input_independent_output_has_zero_density() {
        let row = vec![0.2, 0.5, 0.3];
        let ch = Channel::new(vec![row.clone(), row.clone()], vec![0.4, 0.6]).unwrap();
        for x in 0..2 {
            for y in 0..3 {
                assert_abs_diff_eq!(ch.info_density(x, y).unwrap(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn zero_transition_gives_neg_infinity() {
        let ch = make_bsc(0.0).unwrap();
        assert_eq!(ch.info_density(0, 1).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_output_probability_is_domain_error() {
        let ch = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]).unwrap();
        assert_eq!(
            ch.info_density(0, 1),
            Err(ChannelError::ZeroOutputProbability(1))
        );
    }

    #[test]
    fn rejects_invalid_channels() {
        assert!(make_bsc(0.6).is_err());
        assert!(make_bsc(-0.1).is_err());
        assert!(Channel::with_uniform_input(vec![vec![0.5, 0.6]]).is_err());
        assert!(Channel::with_uniform_input(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(Channel::new(vec![vec![1.0]], vec![0.5]).is_err());
        assert!(Channel::new(vec![vec![1.5, -0.5]], vec![1.0]).is_err());
    }

    #[test]
    fn ba_bsc_stays_uniform() {
        let ch = make_bsc(0.11).unwrap().optimize_input_dist(1e-10).unwrap();
        assert_abs_diff_eq!(ch.input_dist()[0], 0.5, epsilon = 1e-9);
        assert!((ch.info().capacity_nats / LN2 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn ba_bec() {
        let ch = make_bec(0.3)
            .unwrap()
            .with_input_dist(vec![0.9, 0.1])
            .unwrap()
            .optimize_input_dist(1e-10)
            .unwrap();
        assert_abs_diff_eq!(ch.input_dist()[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(ch.info().capacity_nats / LN2, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn ba_reports_non_convergence() {
        let t = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        match blahut_arimoto(&t, 1e-300, 3) {
            Err(ChannelError::NotConverged { iterations: 3, gap }) => assert!(gap > 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(blahut_arimoto(&t, 0.0, 10).is_err());
    }

    /// Exhaustive search over the 2-simplex with step 1e-3.
    fn grid_capacity_3x3(t: &[Vec<f64>]) -> f64 {
        let n = 1000;
        let mut best = 0.0f64;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let p = [
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    (n - i - j) as f64 / n as f64,
                ];
                best = best.max(mutual_information(t, &p));
            }
        }
        best
    }

    pub(crate) fn random_stochastic(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| {
                let raw: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = raw.iter().sum();
                let mut r: Vec<f64> = raw.iter().map(|v| v / s).collect();
                // renormalise the last cell so the row sums to 1 exactly enough
                let head: f64 = r[..cols - 1].iter().sum();
                r[cols - 1] = 1.0 - head;
                r
            })
            .collect()
    }

    #[test]
    fn ba_matches_grid_on_random_3x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2 {
            let t = random_stochastic(&mut rng, 3, 3);
            let ch = Channel::with_uniform_input(t.clone())
                .unwrap()
                .optimize_input_dist(1e-10)
                .unwrap();
            let grid = grid_capacity_3x3(&t);
            assert!(
                (ch.info().capacity_nats - grid).abs() < 1e-4,
                "BA {} vs grid {grid}",
                ch.info().capacity_nats
            );
        }
    }

    #[test]
    fn parse_roundtrip_and_comments() {
        let text = "# bsc\n2 2\n0.89 0.11\n# between\n0.11 0.89\ninput 0.5 0.5\n";
        let ch = Channel::parse(text).unwrap();
        assert_eq!(ch, make_bsc(0.11).unwrap());
        let again = Channel::parse(&ch.to_string()).unwrap();
        assert_eq!(again, ch);
    }

    #[test]
    fn parse_without_input_line_optimises() {
        let ch = Channel::parse("2 3\n0.7 0.3 0\n0 0.3 0.7\n").unwrap();
        assert_abs_diff_eq!(ch.input_dist()[0], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Channel::parse(""), Err(ChannelError::Parse { .. })));
        assert!(matches!(
            Channel::parse("2 2\n0.5 0.5\n"),
            Err(ChannelError::Parse { .. })
        ));
        assert!(matches!(
            Channel::parse("2 2\n0.5 0.5\n0.5 x\n"),
            Err(ChannelError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Channel::parse("2 2\n0.5 0.5\n0.5 0.5\nfoo 1\n"),
            Err(ChannelError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            Channel::parse("2 2\n0.5 0.6\n0.5 0.5\n"),
            Err(ChannelError::NotNormalised { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn channel_strategy() -> impl Strategy<Value = Channel> {
            (2usize..5, 2usize..5, any::<u64>()).prop_map(|(a, b, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let t = random_stochastic(&mut rng, a, b);
                let raw: Vec<f64> = (0..a).map(|_| rng.random::<f64>() + 1e-2).collect();
                let s: f64 = raw.iter().sum();
                let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let head: f64 = p[..a - 1].iter().sum();
                p[a - 1] = 1.0 - head;
                Channel::new(t, p).unwrap()
            })
        }

        proptest! {
            #[test]
            fn capacity_bounded_by_a0_and_alphabet(ch in channel_strategy()) {
                let info = ch.info();
                prop_assert!(info.capacity_nats <= info.a0_nats + 1e-12);
                let cap = (ch.input_size().min(ch.output_size()) as f64).ln();
                prop_assert!(info.capacity_nats <= cap + 1e-12);
                prop_assert!(info.dispersion_nats2 >= 0.0);
            }

            #[test]
            fn a0_is_max_over_support(ch in channel_strategy()) {
                let mut best = f64::NEG_INFINITY;
                for x in 0..ch.input_size() {
                    for y in 0..ch.output_size() {
                        if ch.transition()[x][y] > 0.0 {
                            best = best.max(ch.info_density(x, y).unwrap());
                        }
                    }
                }
                prop_assert_eq!(ch.info().a0_nats, best);
            }

            #[test]
            fn density_is_additive(ch in channel_strategy(), seed in any::<u64>(), n in 1usize..12) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let xs: Vec<usize> = (0..n).map(|_| rng.random_range(0..ch.input_size())).collect();
                let ys: Vec<usize> = (0..n).map(|_| rng.random_range(0..ch.output_size())).collect();
                // product-form route: log of the ratio of joint likelihoods
                let py = ch.output_dist();
                let num: f64 = xs.iter().zip(&ys).map(|(&x, &y)| ch.transition()[x][y]).product();
                let den: f64 = ys.iter().map(|&y| py[y]).product();
                let direct = (num / den).ln();
                let summed = ch.sequence_info_density(&xs, &ys).unwrap();
                prop_assert!((direct - summed).abs() < 1e-9);
            }
        }
    }
}
