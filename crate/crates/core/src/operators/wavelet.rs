//! Orthonormal periodic Daubechies DWT, 1-D and separable 2-D.
//!
//! Coefficient layout is the usual Mallat ordering: for 1-D signals
//! `[a_J | d_J | d_{J-1} | ... | d_1]`; for square images the coarse
//! approximation sits in the top-left `side/2^J` block of the row-major array
//! with detail bands around it.

use super::daubechies::scaling_filter;
use super::LinearOperator;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveletLayout {
    /// 1-D signal of length `signal_len`.
    Line,
    /// Square image of side `signal_len`, stored row-major.
    Square,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WaveletConfig {
    /// Daubechies filter length (2 = Haar, 4 = "D4", ...).
    pub taps: usize,
    pub levels: usize,
    /// Signal length (1-D) or side length (2-D).
    pub signal_len: usize,
    pub layout: WaveletLayout,
}

impl WaveletConfig {
    pub fn line(taps: usize, levels: usize, signal_len: usize) -> Self {
        Self {
            taps,
            levels,
            signal_len,
            layout: WaveletLayout::Line,
        }
    }

    pub fn square(taps: usize, levels: usize, side: usize) -> Self {
        Self {
            taps,
            levels,
            signal_len: side,
            layout: WaveletLayout::Square,
        }
    }

    /// Number of samples (and coefficients).
    pub fn total_len(&self) -> usize {
        match self.layout {
            WaveletLayout::Line => self.signal_len,
            WaveletLayout::Square => self.signal_len * self.signal_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if scaling_filter(self.taps).is_none() {
            return Err(Error::InvalidConfig(format!(
                "unsupported Daubechies tap count {} (expected even, 2..=20)",
                self.taps
            )));
        }
        if self.signal_len == 0 {
            return Err(Error::InvalidConfig(
                "signal length must be positive".into(),
            ));
        }
        let block = 1usize
            .checked_shl(self.levels as u32)
            .filter(|b| *b <= self.signal_len)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "{} levels exceed signal length {}",
                    self.levels, self.signal_len
                ))
            })?;
        if !self.signal_len.is_multiple_of(block) {
            return Err(Error::InvalidConfig(format!(
                "signal length {} not divisible by 2^{} = {}",
                self.signal_len, self.levels, block
            )));
        }
        Ok(())
    }
}

/// A validated DWT. As a [`LinearOperator`] it is the synthesis map
/// (coefficients → signal); its adjoint is the analysis map.
#[derive(Clone, Debug)]
pub struct Dwt<T> {
    cfg: WaveletConfig,
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> Dwt<T> {
    pub fn new(cfg: WaveletConfig) -> Result<Self> {
        cfg.validate()?;
        let h = scaling_filter(cfg.taps).expect("validated");
        let lo: Vec<T> = h.iter().map(|&v| T::lit(v)).collect();
        let len = lo.len();
        let hi = (0..len)
            .map(|j| {
                let v = lo[len - 1 - j];
                if j % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Ok(Self { cfg, lo, hi })
    }

    pub fn config(&self) -> &WaveletConfig {
        &self.cfg
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x.len())?;
        let mut out = x.to_vec();
        self.forward_in_place(&mut out);
        Ok(out)
    }

    pub fn inverse(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_len(z.len())?;
        let mut out = z.to_vec();
        self.inverse_in_place(&mut out);
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.cfg.total_len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} samples, got {len}",
                self.cfg.total_len()
            )));
        }
        Ok(())
    }

    fn forward_in_place(&self, data: &mut [T]) {
        let side = self.cfg.signal_len;
        let mut buf = vec![T::zero(); side];
        let mut tmp = vec![T::zero(); side];
        let mut len = side;
        for _ in 0..self.cfg.levels {
            match self.cfg.layout {
                WaveletLayout::Line => {
                    self.analyze(&data[..len], &mut tmp[..len]);
                    data[..len].copy_from_slice(&tmp[..len]);
                }
                WaveletLayout::Square => {
                    for r in 0..len {
                        let row = &mut data[r * side..r * side + len];
                        self.analyze(row, &mut tmp[..len]);
                        row.copy_from_slice(&tmp[..len]);
                    }
                    for c in 0..len {
                        for r in 0..len {
                            buf[r] = data[r * side + c];
                        }
                        self.analyze(&buf[..len], &mut tmp[..len]);
                        for r in 0..len {
                            data[r * side + c] = tmp[r];
                        }
                    }
                }
            }
            len /= 2;
        }
    }

    fn inverse_in_place(&self, data: &mut [T]) {
        let side = self.cfg.signal_len;
        let mut buf = vec![T::zero(); side];
        let mut tmp = vec![T::zero(); side];
        for level in (0..self.cfg.levels).rev() {
            let len = side >> level;
            match self.cfg.layout {
                WaveletLayout::Line => {
                    self.synthesize(&data[..len], &mut tmp[..len]);
                    data[..len].copy_from_slice(&tmp[..len]);
                }
                WaveletLayout::Square => {
                    for c in 0..len {
                        for r in 0..len {
                            buf[r] = data[r * side + c];
                        }
                        self.synthesize(&buf[..len], &mut tmp[..len]);
                        for r in 0..len {
                            data[r * side + c] = tmp[r];
                        }
                    }
                    for r in 0..len {
                        let row = &mut data[r * side..r * side + len];
                        self.synthesize(row, &mut tmp[..len]);
                        row.copy_from_slice(&tmp[..len]);
                    }
                }
            }
        }
    }

    /// One periodic analysis level: `out = [approx | detail]`.
    fn analyze(&self, x: &[T], out: &mut [T]) {
        let n = x.len();
        let half = n / 2;
        for k in 0..half {
            let (mut a, mut d) = (T::zero(), T::zero());
            for (j, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                let v = x[(2 * k + j) % n];
                a += h * v;
                d += g * v;
            }
            out[k] = a;
            out[half + k] = d;
        }
    }

    /// Transpose of [`Self::analyze`].
    fn synthesize(&self, coeffs: &[T], out: &mut [T]) {
        let n = coeffs.len();
        let half = n / 2;
        out.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..half {
            let (a, d) = (coeffs[k], coeffs[half + k]);
            for (j, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                out[(2 * k + j) % n] += h * a + g * d;
            }
        }
    }
}

impl<T: Real> LinearOperator<T> for Dwt<T> {
    fn in_dim(&self) -> usize {
        self.cfg.total_len()
    }
    fn out_dim(&self) -> usize {
        self.cfg.total_len()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
        self.inverse_in_place(out);
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        out.copy_from_slice(u);
        self.forward_in_place(out);
    }
    fn norm_bound(&self) -> Option<T> {
        Some(T::one())
    }
}

/// Multilevel orthonormal DWT coefficients of `x`.
pub fn dwt_forward<T: Real>(x: &[T], cfg: &WaveletConfig) -> Result<Vec<T>> {
    Dwt::new(*cfg)?.forward(x)
}

/// Reconstructs the signal from [`dwt_forward`] coefficients.
pub fn dwt_inverse<T: Real>(z: &[T], cfg: &WaveletConfig) -> Result<Vec<T>> {
    Dwt::new(*cfg)?.inverse(z)
}
