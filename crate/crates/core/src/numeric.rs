//! Small numerical kernels: adaptive Gauss–Kronrod quadrature, golden-section
//! minimisation and bisection root bracketing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error(
        "quadrature did not converge: value {value:e}, error estimate {error:e} after {intervals} subintervals"
    )]
    NonConvergent { value: f64, error: f64, intervals: usize },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("bisection bracket [{lo}, {hi}] does not contain a sign change")]
    NoBracket { lo: f64, hi: f64 },
}

// Kronrod 15-point abscissae on [0, 1]; odd indices are the Gauss 7-point nodes.
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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), NumericError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, NumericError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericError::NonFinite { x })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature, NumericError> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, intervals: 0, evaluations: 0 });
    }
    let (value, error) = gk15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;

    loop {
        let tol = abs_tol.max(rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_intervals {
            return Err(NumericError::NonConvergent {
                value: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid)?;
        let (v2, e2) = gk15(&f, mid, worst.b)?;
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Re-sum from the segments to shed accumulated rounding of the running total.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error_estimate: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, error_estimate, intervals: heap.len(), evaluations })
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
/// Returns the abscissa once the bracket is narrower than `tol`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Bisection for the boundary of a predicate that is true at `lo` and false
/// at `hi`. Returns the last `true` abscissa once `hi - lo <= rel_tol * hi`.
pub fn bisect_predicate<P: Fn(f64) -> bool>(
    pred: P,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64, NumericError> {
    if !pred(lo) || pred(hi) {
        return Err(NumericError::NoBracket { lo, hi });
    }
    while hi - lo > rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 0.0, 50).unwrap();
        assert!((q.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_adapts() {
        // ∫ 1/(1e-4 + x²) over [-1, 1] = 2·atan(100)/1e-2
        let exact = 2.0 * (100f64).atan() / 1e-2;
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 0.0, 500).unwrap();
        assert!(((q.value - exact) / exact).abs() < 1e-10);
        assert!(q.intervals > 1);
    }

    #[test]
    fn interval_cap_reports_diagnostics() {
        let err = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, 1e-14, 0.0, 4).unwrap_err();
        assert!(matches!(err, NumericError::NonConvergent { intervals: 4, .. }));
    }

    #[test]
    fn non_finite_detected() {
        let err = integrate(|_| f64::NAN, 0.0, 1.0, 1e-8, 0.0, 10).unwrap_err();
        assert!(matches!(err, NumericError::NonFinite { .. }));
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = golden_section_min(|x| (x - 0.37).powi(2), 0.0, 1.0, 1e-6);
        assert!((x - 0.37).abs() < 1e-6);
    }

    #[test]
    fn bisection_boundary() {
        let x = bisect_predicate(|x| x * x < 2.0, 0.0, 4.0, 1e-12).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-10);
        assert!(bisect_predicate(|x| x < 0.0, 1.0, 2.0, 1e-3).is_err());
    }
}
