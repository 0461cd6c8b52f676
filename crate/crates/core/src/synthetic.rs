//! Ground truth for the synthetic tracking experiment: sparse states moved by
//! a fresh random signed permutation each step, with a few coefficients sent
//! to the wrong place, observed through fresh Gaussian matrices.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{MeasurementFrame, SignedPermutation};
use crate::operators::gaussian_sensing;
use crate::scalar::{standard_normal, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticConfig {
    /// State dimension.
    pub n: usize,
    /// Nonzeros per state.
    pub s: usize,
    /// Measurements per step.
    pub m: usize,
    /// Misrouted coefficients per step.
    pub p: usize,
    pub noise_var: f64,
    pub t_steps: usize,
    /// Master seed; trial streams are derived from it.
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 500,
            s: 20,
            m: 70,
            p: 3,
            noise_var: 0.001,
            t_steps: 50,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 {
            return bad("state dimension n must be positive".into());
        }
        if self.s > self.n {
            return bad(format!("sparsity s={} exceeds n={}", self.s, self.n));
        }
        if self.m == 0 || self.m > self.n {
            return bad(format!(
                "measurements m={} must lie in 1..={}",
                self.m, self.n
            ));
        }
        if self.p > self.s {
            return bad(format!(
                "innovation p={} exceeds sparsity s={}",
                self.p, self.s
            ));
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return bad(format!(
                "noise variance {} must be nonnegative",
                self.noise_var
            ));
        }
        if self.t_steps == 0 {
            return bad("t_steps must be at least 1".into());
        }
        Ok(())
    }
}

/// One coefficient that did not go where the known dynamics sent it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Misroute {
    /// Slot the known dynamics predicts.
    pub expected: usize,
    /// Slot the coefficient actually landed in.
    pub actual: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthSequence<T> {
    pub states: Vec<Vec<T>>,
    /// `dynamics[k]` is the known model taking `states[k]` to `states[k + 1]`.
    pub dynamics: Vec<SignedPermutation>,
    /// Misroutes applied on the way to `states[k + 1]`.
    pub innovations: Vec<Vec<Misroute>>,
    /// Steps where fewer than `p` misroutes were possible.
    pub shortfalls: Vec<usize>,
}

/// `s` uniformly placed standard normal entries.
pub fn gen_initial_state<T: Real, R: Rng + ?Sized>(cfg: &SyntheticConfig, rng: &mut R) -> Vec<T> {
    let mut x = vec![T::zero(); cfg.n];
    for i in index::sample(rng, cfg.n, cfg.s) {
        x[i] = standard_normal(rng);
    }
    x
}

/// Result of one step of the ground-truth dynamics.
#[derive(Clone, Debug)]
pub struct DynamicsStep<T> {
    pub x_next: Vec<T>,
    pub known: SignedPermutation,
    pub misroutes: Vec<Misroute>,
}

/// Applies a fresh random signed permutation, then moves `p` of the resulting
/// nonzeros to slots that would otherwise be empty.
///
/// Each move empties one predicted slot and fills one unpredicted slot, so the
/// innovation `x_next − f(x_prev)` has exactly `2·(moves)` nonzeros. If fewer
/// than `p` nonzeros or free slots exist, every available move is made and
/// the shortfall shows in the returned misroute count.
pub fn permutation_dynamics_step<T: Real, R: Rng + ?Sized>(
    x_prev: &[T],
    cfg: &SyntheticConfig,
    rng: &mut R,
) -> Result<DynamicsStep<T>> {
    let n = x_prev.len();
    let mut dest: Vec<usize> = (0..n).collect();
    dest.shuffle(rng);
    let negate: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let known = SignedPermutation::new(dest, negate)?;
    let mut x_next = known.apply(x_prev);

    let occupied: Vec<usize> = (0..n).filter(|&i| x_next[i] != T::zero()).collect();
    let empty: Vec<usize> = (0..n).filter(|&i| x_next[i] == T::zero()).collect();
    let moves = cfg.p.min(occupied.len()).min(empty.len());
    let sources = index::sample(rng, occupied.len(), moves);
    let targets = index::sample(rng, empty.len(), moves);
    let mut misroutes = Vec::with_capacity(moves);
    for (si, ti) in sources.into_iter().zip(targets) {
        let (from, to) = (occupied[si], empty[ti]);
        x_next[to] = x_next[from];
        x_next[from] = T::zero();
        misroutes.push(Misroute {
            expected: from,
            actual: to,
        });
    }
    Ok(DynamicsStep {
        x_next,
        known,
        misroutes,
    })
}

/// `y = Φ x + ε` with a fresh column-normalized Gaussian `Φ` and
/// `ε ~ N(0, noise_var)`. The frame carries `σ_max(Φ)²`.
pub fn measure_state<T: Real, R: Rng + ?Sized>(
    x: &[T],
    m: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<MeasurementFrame<T>> {
    let phi = gaussian_sensing::<T, R>(m, x.len(), rng)?.into_matrix();
    let sd = T::lit(noise_var.max(0.0).sqrt());
    let mut y = phi.mul_vec(x);
    if noise_var > 0.0 {
        for v in &mut y {
            *v += sd * standard_normal::<T, R>(rng);
        }
    }
    let lip = phi.spectral_norm_sq();
    Ok(MeasurementFrame::new(Arc::new(phi), y, T::lit(noise_var))?.with_lipschitz(lip))
}

/// Independent streams for trial `trial`: one for the states, one for the
/// measurements, so runs that differ only in `m` share their ground truth.
pub fn trial_streams(seed: u64, trial: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut states = ChaCha8Rng::seed_from_u64(seed);
    states.set_stream(2 * trial);
    let mut meas = ChaCha8Rng::seed_from_u64(seed);
    meas.set_stream(2 * trial + 1);
    (states, meas)
}

/// Ground truth for `cfg.t_steps` steps.
pub fn generate_truth<T: Real, R: Rng + ?Sized>(
    cfg: &SyntheticConfig,
    rng: &mut R,
) -> Result<GroundTruthSequence<T>> {
    cfg.validate()?;
    let mut states = Vec::with_capacity(cfg.t_steps);
    let mut dynamics = Vec::with_capacity(cfg.t_steps.saturating_sub(1));
    let mut innovations = Vec::with_capacity(cfg.t_steps.saturating_sub(1));
    let mut shortfalls = Vec::new();
    states.push(gen_initial_state(cfg, rng));
    for k in 1..cfg.t_steps {
        let step = permutation_dynamics_step(&states[k - 1], cfg, rng)?;
        if step.misroutes.len() < cfg.p {
            shortfalls.push(k);
        }
        states.push(step.x_next);
        dynamics.push(step.known);
        innovations.push(step.misroutes);
    }
    Ok(GroundTruthSequence {
        states,
        dynamics,
        innovations,
        shortfalls,
    })
}

/// A full synthetic trial: ground truth and one measurement frame per state.
#[derive(Clone, Debug)]
pub struct SyntheticTrial<T: Real> {
    pub truth: GroundTruthSequence<T>,
    pub frames: Vec<MeasurementFrame<T>>,
}

pub fn generate_trial<T: Real>(cfg: &SyntheticConfig, trial: u64) -> Result<SyntheticTrial<T>> {
    let (mut state_rng, mut meas_rng) = trial_streams(cfg.seed, trial);
    let truth = generate_truth(cfg, &mut state_rng)?;
    let frames = truth
        .states
        .iter()
        .map(|x| measure_state(x, cfg.m, cfg.noise_var, &mut meas_rng))
        .collect::<Result<_>>()?;
    Ok(SyntheticTrial { truth, frames })
}

/// Writes states as CSV with header `t,index,value`, one row per entry.
pub fn write_states_csv<T: Real, W: Write>(states: &[Vec<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "index", "value"]).map_err(csv_err)?;
    for (t, x) in states.iter().enumerate() {
        for (i, v) in x.iter().enumerate() {
            w.write_record([t.to_string(), i.to_string(), v.to_f64_lossy().to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_states_csv`]. Entries not listed are zero.
pub fn read_states_csv<T: Real, R: Read>(input: R, n: usize) -> Result<Vec<Vec<T>>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "index", "value"] {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut states: Vec<Vec<T>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| {
            rec.get(k)
                .ok_or_else(|| Error::Parse(format!("line {line}: missing column {k}")))
        };
        let t: usize = field(0)?
            .parse()
            .map_err(|e| Error::Parse(format!("line {line}: bad t: {e}")))?;
        let i: usize = field(1)?
            .parse()
            .map_err(|e| Error::Parse(format!("line {line}: bad index: {e}")))?;
        let v: f64 = field(2)?
            .parse()
            .map_err(|e| Error::Parse(format!("line {line}: bad value: {e}")))?;
        if i >= n {
            return Err(Error::Parse(format!(
                "line {line}: index {i} out of range for n={n}"
            )));
        }
        if states.len() <= t {
            states.resize(t + 1, vec![T::zero(); n]);
        }
        states[t][i] = T::lit(v);
    }
    Ok(states)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm;

    fn cfg(n: usize, s: usize, p: usize) -> SyntheticConfig {
        SyntheticConfig {
            n,
            s,
            m: n.min(10),
            p,
            noise_var: 0.0,
            t_steps: 5,
            seed: 1,
        }
    }

    #[test]
    fn initial_support_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zero: Vec<f64> = gen_initial_state(&cfg(8, 0, 0), &mut rng);
        assert!(zero.iter().all(|&v| v == 0.0));
        let dense: Vec<f64> = gen_initial_state(&cfg(8, 8, 0), &mut rng);
        assert!(dense.iter().all(|&v| v != 0.0));
        let x: Vec<f64> = gen_initial_state(&cfg(500, 20, 0), &mut rng);
        assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 20);
    }

    #[test]
    fn exact_dynamics_is_isometry() {
        let c = cfg(50, 6, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = gen_initial_state(&c, &mut rng);
        let step = permutation_dynamics_step(&x, &c, &mut rng).unwrap();
        assert_eq!(step.x_next, step.known.apply(&x));
        assert!((norm(&step.x_next) - norm(&x)).abs() < 1e-14);
        assert!(step.misroutes.is_empty());
    }

    #[test]
    fn noiseless_zero_state_measures_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = measure_state(&[0.0f64; 12], 5, 0.0, &mut rng).unwrap();
        assert_eq!(f.y, vec![0.0; 5]);
    }

    #[test]
    fn more_misroutes_than_support() {
        let c = cfg(10, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = vec![0.0f64; 10];
        x[4] = 1.0;
        let step = permutation_dynamics_step(&x, &c, &mut rng).unwrap();
        assert_eq!(step.misroutes.len(), 1);
        assert_eq!(step.x_next.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let states = vec![vec![0.0f64, 1.25, -3.0e-7], vec![0.1, 0.0, 2.0 / 3.0]];
        let mut buf = Vec::new();
        write_states_csv(&states, &mut buf).unwrap();
        assert!(buf.starts_with(b"t,index,value\n"));
        let back: Vec<Vec<f64>> = read_states_csv(&buf[..], 3).unwrap();
        assert_eq!(back, states);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(cfg(5, 6, 0).validate().is_err());
        assert!(cfg(5, 2, 3).validate().is_err());
        let mut c = cfg(5, 2, 1);
        c.m = 6;
        assert!(c.validate().is_err());
    }
}
