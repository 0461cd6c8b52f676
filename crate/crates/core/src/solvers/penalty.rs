use crate::error::{Error, Result};
use crate::scalar::Real;

/// `sign(v) · max(|v| − t, 0)`, the proximal map of `t·|·|`.
#[inline]
pub fn soft_threshold<T: Real>(v: T, t: T) -> T {
    let mag = v.abs() - t;
    if mag > T::zero() {
        mag.copysign(v)
    } else {
        T::zero()
    }
}

/// Coordinate-separable convex penalty
///
/// ```text
/// h(z) = Σ_i  a_i |z_i|  +  b_i |z_i − c_i|
/// ```
///
/// The `a` term is the weighted ℓ1 norm; the optional anchored term `(b, c)`
/// pulls coordinates toward a target and is how the ℓ1 prediction penalty of
/// the dynamic BPDN filter enters the same solver.
#[derive(Clone, Debug)]
pub struct SeparablePenalty<T> {
    origin: Vec<T>,
    anchor: Option<(Vec<T>, Vec<T>)>,
}

/// Breakpoints of one coordinate's penalty, sorted, with merged weights.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Kinks<T> {
    pts: [(T, T); 2],
    len: usize,
}

impl<T: Real> Kinks<T> {
    fn new(mut a: (T, T), b: Option<(T, T)>) -> Self {
        let mut pts = [(T::zero(), T::zero()); 2];
        let mut len = 0;
        if a.1 > T::zero() {
            pts[0] = a;
            len = 1;
        }
        if let Some(mut b) = b.filter(|b| b.1 > T::zero()) {
            if len == 0 {
                pts[0] = b;
                len = 1;
            } else if b.0 == a.0 {
                pts[0].1 += b.1;
            } else {
                if b.0 < a.0 {
                    std::mem::swap(&mut a, &mut b);
                }
                pts = [a, b];
                len = 2;
            }
        }
        Self { pts, len }
    }

    #[inline]
    pub(crate) fn points(&self) -> &[(T, T)] {
        &self.pts[..self.len]
    }

    pub(crate) fn total(&self) -> T {
        self.points().iter().fold(T::zero(), |s, p| s + p.1)
    }

    /// Derivative on segment `j` (left of kink `j`, right of kink `j-1`).
    pub(crate) fn segment_slope(&self, j: usize) -> T {
        let mut s = T::zero();
        for (k, &(_, w)) in self.points().iter().enumerate() {
            if k < j {
                s += w;
            } else {
                s -= w;
            }
        }
        s
    }

    pub(crate) fn value(&self, v: T) -> T {
        self.points()
            .iter()
            .fold(T::zero(), |s, &(p, w)| s + w * (v - p).abs())
    }
}

/// Where a coordinate value sits relative to its penalty's breakpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum CoordState<T> {
    /// Exactly on a breakpoint; the subdifferential is `[lo, hi]`.
    Pinned { lo: T, hi: T },
    /// Strictly inside the open segment `(lower, upper)` with constant slope.
    Free { slope: T, lower: T, upper: T },
}

impl<T: Real> SeparablePenalty<T> {
    /// Plain weighted ℓ1: `Σ scale · weights[i] · |z_i|`.
    pub fn weighted_l1(scale: T, weights: &[T]) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "base scale must be positive and finite, got {scale}"
            )));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !(**w > T::zero()) || !w.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive and finite, found {w}"
            )));
        }
        Ok(Self {
            origin: weights.iter().map(|&w| scale * w).collect(),
            anchor: None,
        })
    }

    /// `Σ a_i |z_i| + Σ b_i |z_i − c_i|`; all weights nonnegative.
    pub fn anchored(origin: Vec<T>, anchor_weights: Vec<T>, anchor: Vec<T>) -> Result<Self> {
        if origin.len() != anchor_weights.len() || origin.len() != anchor.len() {
            return Err(Error::InvalidDimension(
                "anchored penalty vectors must have equal length".into(),
            ));
        }
        let bad = |w: &T| !(*w >= T::zero()) || !w.is_finite();
        if origin.iter().chain(&anchor_weights).any(bad) {
            return Err(Error::InvalidParameter(
                "penalty weights must be nonnegative and finite".into(),
            ));
        }
        if anchor.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("anchor must be finite".into()));
        }
        Ok(Self {
            origin,
            anchor: Some((anchor_weights, anchor)),
        })
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    #[inline]
    pub(crate) fn kinks(&self, i: usize) -> Kinks<T> {
        let a = (T::zero(), self.origin[i]);
        let b = self.anchor.as_ref().map(|(w, c)| (c[i], w[i]));
        Kinks::new(a, b)
    }

    pub fn value(&self, z: &[T]) -> T {
        (0..z.len()).fold(T::zero(), |s, i| s + self.kinks(i).value(z[i]))
    }

    /// Largest total breakpoint weight over coordinates; sets the KKT scale.
    pub fn max_weight(&self) -> T {
        (0..self.len()).fold(T::zero(), |m, i| m.max(self.kinks(i).total()))
    }

    /// Proximal map of `step · h_i` at `u`.
    pub fn prox_coord(&self, i: usize, u: T, step: T) -> T {
        let kinks = self.kinks(i);
        let pts = kinks.points();
        for j in 0..=pts.len() {
            let slope = kinks.segment_slope(j);
            let v = u - step * slope;
            let lower_ok = j == 0 || v > pts[j - 1].0;
            let upper_ok = j == pts.len() || v < pts[j].0;
            if lower_ok && upper_ok {
                return v;
            }
            if j < pts.len() {
                let p = pts[j].0;
                let lo = p + step * slope;
                let hi = p + step * kinks.segment_slope(j + 1);
                if u >= lo && u <= hi {
                    return p;
                }
            }
        }
        // Unreachable for finite input: φ(v) = v + step·∂h(v) is onto.
        u
    }

    pub fn prox(&self, u: &[T], step: T, out: &mut [T]) {
        for (i, (o, &ui)) in out.iter_mut().zip(u).enumerate() {
            *o = self.prox_coord(i, ui, step);
        }
    }

    /// A minimizer of `h_i` alone (the solution when the data term vanishes).
    pub fn argmin_coord(&self, i: usize) -> T {
        let kinks = self.kinks(i);
        kinks
            .points()
            .iter()
            .map(|&(p, _)| p)
            .fold((T::zero(), kinks.value(T::zero())), |best, p| {
                let v = kinks.value(p);
                if v < best.1 {
                    (p, v)
                } else {
                    best
                }
            })
            .0
    }

    pub(crate) fn state(&self, i: usize, v: T) -> CoordState<T> {
        let kinks = self.kinks(i);
        let pts = kinks.points();
        for (j, &(p, _)) in pts.iter().enumerate() {
            if v == p {
                return CoordState::Pinned {
                    lo: kinks.segment_slope(j),
                    hi: kinks.segment_slope(j + 1),
                };
            }
        }
        let j = pts.iter().take_while(|&&(p, _)| v > p).count();
        CoordState::Free {
            slope: kinks.segment_slope(j),
            lower: if j == 0 {
                T::neg_infinity()
            } else {
                pts[j - 1].0
            },
            upper: if j == pts.len() {
                T::infinity()
            } else {
                pts[j].0
            },
        }
    }

    /// Segment/breakpoint code per coordinate; used to detect a settled
    /// active set.
    pub(crate) fn pattern_code(&self, i: usize, v: T) -> u8 {
        let kinks = self.kinks(i);
        let mut code = 0u8;
        for &(p, _) in kinks.points() {
            if v == p {
                return code + 1;
            }
            if v > p {
                code += 2;
            }
        }
        code
    }

    /// Largest violation of `−g_i ∈ ∂h_i(z_i)` over coordinates.
    pub fn kkt_violation(&self, z: &[T], grad: &[T]) -> T {
        let mut worst = T::zero();
        for (i, (&v, &g)) in z.iter().zip(grad).enumerate() {
            let viol = match self.state(i, v) {
                CoordState::Free { slope, .. } => (g + slope).abs(),
                CoordState::Pinned { lo, hi } => (-g - hi).max(lo + g).max(T::zero()),
            };
            worst = worst.max(viol);
        }
        worst
    }
}
