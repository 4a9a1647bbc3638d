//! Globally adaptive Gauss-Kronrod quadrature (7-15 pair).
//!
//! The embedded rule gives a per-interval error estimate; the worst interval
//! is bisected until the summed estimate meets the requested absolute
//! tolerance or the subdivision budget runs out. All nodes are interior, so
//! integrands may blow up at the interval endpoints (beta densities with shape
//! parameters below one) as long as the integral itself is finite.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half; the
/// odd-indexed entries are the embedded 7-point Gauss nodes).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Weights of the embedded 7-point Gauss rule (nodes XGK[1], XGK[3], XGK[5],
/// XGK[7]).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOutcome {
    pub value: f64,
    /// Summed per-interval error estimate at termination.
    pub error_bound: f64,
    pub evaluations: u64,
    pub subdivisions: u64,
}

#[derive(Debug)]
struct Segment {
    value: f64,
    error: f64,
    a: f64,
    b: f64,
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

/// One Gauss-Kronrod 7-15 application on [a, b]: returns (value, error
/// estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut resk = WGK[7] * f_center;
    let mut resg = WG[3] * f_center;
    let mut resabs = WGK[7] * f_center.abs();
    let mut values = [0.0f64; 15];
    values[7] = f_center;

    for j in 0..7 {
        let offset = half * XGK[j];
        let low = f(center - offset);
        let high = f(center + offset);
        values[j] = low;
        values[14 - j] = high;
        let sum = low + high;
        resk += WGK[j] * sum;
        resabs += WGK[j] * (low.abs() + high.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * sum;
        }
    }

    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((values[j] - mean).abs() + (values[14 - j] - mean).abs());
    }

    let value = resk * half;
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * 1.0f64.min((200.0 * error / resasc).powf(1.5));
    }
    let _ = resabs;
    (value, error)
}

/// Integrates `f` over [a, b] to absolute tolerance `abs_tol`, bisecting the
/// worst interval until the budget of `max_subdivisions` is spent. Failure
/// carries the best estimate achieved and its error bound.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_subdivisions: u64,
) -> Result<QuadratureOutcome> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::contract(format!(
            "adaptive_quadrature: need finite a < b, got [{a}, {b}]"
        )));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::contract(format!(
            "adaptive_quadrature: tolerance must be positive, got {abs_tol}"
        )));
    }

    let (value, error) = gk15(&f, a, b);
    if !value.is_finite() {
        return Err(Error::Numerical {
            message: "integrand evaluated to a non-finite value".to_string(),
            estimate: value,
            error_bound: f64::INFINITY,
        });
    }
    let mut evaluations = 15u64;
    let mut subdivisions = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { value, error, a, b });
    let mut total_value = value;
    let mut total_error = error;

    while total_error > abs_tol {
        if subdivisions >= max_subdivisions {
            return Err(Error::Numerical {
                message: format!(
                    "quadrature did not converge to {abs_tol:e} within {max_subdivisions} subdivisions"
                ),
                estimate: total_value,
                error_bound: total_error,
            });
        }
        let worst = heap.pop().expect("non-empty heap while error exceeds tolerance");
        let mid = 0.5 * (worst.a + worst.b);
        // Interval too narrow to split: the midpoint has collided with an
        // endpoint, so further bisection cannot make progress.
        if !(worst.a < mid && mid < worst.b) {
            return Err(Error::Numerical {
                message: format!(
                    "quadrature stalled on [{}, {}] with error {:e}",
                    worst.a, worst.b, worst.error
                ),
                estimate: total_value,
                error_bound: total_error,
            });
        }
        let (left_value, left_error) = gk15(&f, worst.a, mid);
        let (right_value, right_error) = gk15(&f, mid, worst.b);
        if !(left_value.is_finite() && right_value.is_finite()) {
            return Err(Error::Numerical {
                message: "integrand evaluated to a non-finite value".to_string(),
                estimate: total_value,
                error_bound: f64::INFINITY,
            });
        }
        evaluations += 30;
        subdivisions += 1;
        total_value += left_value + right_value - worst.value;
        total_error += left_error + right_error - worst.error;
        heap.push(Segment {
            value: left_value,
            error: left_error,
            a: worst.a,
            b: mid,
        });
        heap.push(Segment {
            value: right_value,
            error: right_error,
            a: mid,
            b: worst.b,
        });
    }

    // Re-sum from the segments to shed accumulated cancellation.
    let mut value = 0.0;
    let mut error = 0.0;
    for segment in heap.iter() {
        value += segment.value;
        error += segment.error;
    }
    Ok(QuadratureOutcome {
        value,
        error_bound: error,
        evaluations,
        subdivisions,
    })
}
