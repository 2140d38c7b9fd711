//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! The integrand receives a segment tag together with the abscissa, so one
//! adaptive run can refine several pieces of a half line that each use their
//! own change of variables. Subintervals are kept in a max-heap keyed on
//! their error estimate; the worst one is bisected until the summed error
//! falls below the target.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the even-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Segment<T> {
    pub tag: usize,
    pub lo: T,
    pub hi: T,
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: T,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Adaptive<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece<T> {
    tag: usize,
    lo: T,
    hi: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Piece<T> {}

impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.lo.partial_cmp(&self.lo).unwrap_or(Ordering::Equal))
    }
}

fn kronrod<T: Real, F: Fn(usize, T) -> T>(f: &F, tag: usize, lo: T, hi: T) -> Piece<T> {
    let half = T::lit(0.5);
    let center = half * (lo + hi);
    let half_len = half * (hi - lo);
    let abs_half = half_len.abs();

    let fc = f(tag, center);
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    let mut res_abs = fc.abs() * T::lit(WGK[7]);
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(tag, center - dx);
        let f2 = f(tag, center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half_len;
    let res_abs = res_abs * abs_half;
    let res_asc = res_asc * abs_half;
    let mut error = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && error != T::zero() {
        let scale = (T::lit(200.0) * error / res_asc).powf(T::lit(1.5));
        error = res_asc * scale.min(T::one());
    }
    let eps50 = T::lit(50.0) * T::epsilon();
    if res_abs > T::min_positive_value() / eps50 {
        error = error.max(eps50 * res_abs);
    }
    Piece {
        tag,
        lo,
        hi,
        value,
        error,
    }
}

impl<T: Real> Adaptive<T> {
    /// Integrates `f` over the union of `segments`.
    pub fn integrate<F: Fn(usize, T) -> T>(
        &self,
        f: F,
        segments: &[Segment<T>],
    ) -> Result<Integral<T>> {
        let floor = T::lit(200.0) * T::epsilon();
        let rel = self.rel_tol.max(floor);
        let mut heap: BinaryHeap<Piece<T>> = segments
            .iter()
            .filter(|s| s.hi > s.lo)
            .map(|s| kronrod(&f, s.tag, s.lo, s.hi))
            .collect();
        // Pieces too narrow to bisect further keep their error here.
        let mut frozen: Vec<Piece<T>> = Vec::new();

        loop {
            let value: T = heap.iter().chain(frozen.iter()).map(|p| p.value).sum();
            let error: T = heap.iter().chain(frozen.iter()).map(|p| p.error).sum();
            let target = self.abs_tol.max(rel * value.abs());
            let intervals = heap.len() + frozen.len();
            if error <= target {
                return Ok(Integral {
                    value,
                    abs_error: error,
                    intervals,
                });
            }
            if intervals >= self.max_intervals || heap.is_empty() {
                return Err(Error::NonConvergence {
                    error: error.to_f64().unwrap_or(f64::NAN),
                    target: target.to_f64().unwrap_or(f64::NAN),
                    intervals,
                });
            }
            // Bisect a batch of the worst pieces before re-summing.
            let batch = (heap.len() / 8).max(1);
            for _ in 0..batch {
                let Some(worst) = heap.pop() else { break };
                let mid = T::lit(0.5) * (worst.lo + worst.hi);
                let width = worst.hi - worst.lo;
                if mid <= worst.lo
                    || mid >= worst.hi
                    || width <= T::epsilon() * worst.lo.abs().max(worst.hi.abs()) * T::lit(4.0)
                {
                    frozen.push(worst);
                    continue;
                }
                heap.push(kronrod(&f, worst.tag, worst.lo, mid));
                heap.push(kronrod(&f, worst.tag, mid, worst.hi));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Integral<f64> {
        Adaptive {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
        .integrate(|_, x| f(x), &[Segment { tag: 0, lo, hi }])
        .unwrap()
    }

    #[test]
    fn polynomials_are_exact() {
        let got = run(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0);
        assert!((got.value - (32.0 - 8.0)).abs() < 1e-13);
        assert_eq!(got.intervals, 1);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫₀¹ x^{-1/2} dx = 2
        let got = run(|x| x.powf(-0.5), 0.0, 1.0);
        assert!((got.value - 2.0).abs() < 1e-10, "{got:?}");
    }

    #[test]
    fn sharp_peak() {
        // ∫ 1/(x² + 1e-6) over [-1, 1] = 2·atan(1000)/1e-3
        let got = run(|x| 1.0 / (x * x + 1e-6), -1.0, 1.0);
        let want = 2.0 * 1000f64.atan() / 1e-3;
        assert!(((got.value - want) / want).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = Adaptive {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_intervals: 3,
        }
        .integrate(
            |_, x: f64| (1.0 / x).sin(),
            &[Segment {
                tag: 0,
                lo: 1e-4,
                hi: 1.0,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
