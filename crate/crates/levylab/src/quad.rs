//! Quadrature kernels shared by the exponent and measure modules.
//!
//! Three building blocks:
//! * an adaptive Gauss–Kronrod 15(7) driver on finite intervals with optional
//!   pre-split points (band breakpoints produce kinks in the integrands),
//! * geometric-panel tail integration for positive decaying integrands on
//!   `[lo, ∞)` and `(0, hi]`, with a divergence test,
//! * oscillatory tails `∫ g(x)·cos/sin(ωx) dx` summed over half-periods with
//!   iterated-averaging acceleration of the alternating partial sums, capped
//!   at 10⁴ half-periods.

use crate::{Error, Result};

/// 1 − cos(z) without cancellation for small z.
#[inline]
pub fn one_minus_cos(z: f64) -> f64 {
    let s = (0.5 * z).sin();
    2.0 * s * s
}

// QK15 nodes on [-1,1] (positive half), Kronrod weights, embedded Gauss-7 weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub value: f64,
    pub abs_err: f64,
}

/// One Gauss–Kronrod 15(7) panel over [a, b].
pub fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    if !res_k.is_finite() {
        return Err(Error::Domain(format!(
            "integrand not finite on [{a}, {b}]"
        )));
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        value,
        abs_err: err,
    })
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// Adaptive integration of `f` over [a, b].
///
/// `splits` are interior points where the integrand is merely continuous
/// (band breakpoints); they seed the initial segmentation. Tolerance is
/// `max(abs_tol, rel_tol · |estimate|)` on the summed error.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    splits: &[f64],
) -> Result<Panel> {
    if a == b {
        return Ok(Panel {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let mut edges: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&s| s > a && s < b)
        .collect();
    inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
    inner.dedup();
    // Too many seed splits just slow the heap down; keep the 64 largest.
    if inner.len() > 64 {
        let skip = inner.len() - 64;
        inner.drain(..skip);
    }
    edges.extend(inner);
    edges.push(b);

    let mut segs: Vec<Segment> = Vec::with_capacity(256);
    for w in edges.windows(2) {
        let p = qk15(f, w[0], w[1])?;
        segs.push(Segment {
            a: w[0],
            b: w[1],
            value: p.value,
            err: p.abs_err,
        });
    }

    const MAX_SEGS: usize = 4096;
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target || err <= 1e-300 {
            return Ok(Panel {
                value: total,
                abs_err: err,
            });
        }
        if segs.len() >= MAX_SEGS {
            return Err(Error::QuadratureNoConverge {
                best: total,
                achieved: err,
                target,
            });
        }
        // Split the worst segment.
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .unwrap();
        let s = segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval at floating-point resolution; accept its estimate.
            segs[worst].err = 0.0;
            continue;
        }
        let left = qk15(f, s.a, mid)?;
        let right = qk15(f, mid, s.b)?;
        segs[worst] = Segment {
            a: s.a,
            b: mid,
            value: left.value,
            err: left.abs_err,
        };
        segs.push(Segment {
            a: mid,
            b: s.b,
            value: right.value,
            err: right.abs_err,
        });
    }
}

/// ∫_lo^∞ f dx for nonnegative `f` with a decaying tail, by geometric panels.
///
/// Divergence (panels failing to shrink) is reported as `TailDiverges`.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    rel_tol: f64,
    splits: &[f64],
) -> Result<f64> {
    assert!(lo > 0.0, "tail integration needs a positive lower limit");
    let mut sum = 0.0f64;
    let mut a = lo;
    let mut flat = 0usize;
    let mut prev_panel = f64::INFINITY;
    for _ in 0..4000 {
        let b = a * 2.0;
        let p = adaptive(f, a, b, 0.0, rel_tol.max(1e-12), splits)?;
        sum += p.value;
        if p.value < 0.0 {
            return Err(Error::Domain(
                "tail integrand went negative".into(),
            ));
        }
        if p.value >= prev_panel * 0.999 && p.value > 0.0 {
            flat += 1;
            if flat > 24 {
                return Err(Error::TailDiverges);
            }
        } else {
            flat = 0;
        }
        if p.value <= rel_tol * sum.abs() && sum > 0.0 {
            // Remainder bound: geometric continuation of the last ratio.
            let r = (p.value / prev_panel).min(0.9);
            let rem = if prev_panel.is_finite() {
                p.value * r / (1.0 - r)
            } else {
                p.value
            };
            return Ok(sum + rem);
        }
        if sum == 0.0 && p.value == 0.0 {
            return Ok(0.0);
        }
        prev_panel = p.value;
        a = b;
    }
    Err(Error::TailDiverges)
}

/// ∫_0^hi f dx for nonnegative `f` (possibly singular at 0), geometric panels
/// shrinking toward zero. Divergence reported as `SmallJumpsDiverge`.
pub fn integrate_to_zero<F: Fn(f64) -> f64>(
    f: &F,
    hi: f64,
    rel_tol: f64,
    splits: &[f64],
) -> Result<f64> {
    assert!(hi > 0.0);
    let mut sum = 0.0f64;
    let mut b = hi;
    let mut flat = 0usize;
    let mut prev_panel = f64::INFINITY;
    for _ in 0..4000 {
        let a = b * 0.5;
        let p = adaptive(f, a, b, 0.0, rel_tol.max(1e-12), splits)?;
        sum += p.value;
        if p.value >= prev_panel * 0.999 && p.value > 0.0 {
            flat += 1;
            if flat > 24 {
                return Err(Error::SmallJumpsDiverge);
            }
        } else {
            flat = 0;
        }
        if (p.value <= rel_tol * sum.abs() && sum > 0.0) || b < 1e-300 {
            return Ok(sum);
        }
        prev_panel = p.value;
        b = a;
    }
    Err(Error::SmallJumpsDiverge)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// ∫_{x0}^∞ g(x)·trig(ω x) dx for g ≥ 0 decaying to zero.
///
/// The integral is split at the zeros of the trig factor; consecutive
/// half-period panels alternate in sign and are accelerated by iterated
/// averaging of the partial sums. `abs_tol` is an absolute target (callers
/// scale it by the magnitude of the surrounding computation). Capped at
/// 10⁴ half-periods; past the cap the remainder is bounded by the last term.
pub fn oscillatory_tail<F: Fn(f64) -> f64>(
    g: &F,
    omega: f64,
    x0: f64,
    trig: Trig,
    abs_tol: f64,
    splits: &[f64],
) -> Result<f64> {
    assert!(omega > 0.0 && x0 >= 0.0);
    let integrand = |x: f64| {
        let t = match trig {
            Trig::Cos => (omega * x).cos(),
            Trig::Sin => (omega * x).sin(),
        };
        g(x) * t
    };
    // First zero of the trig factor at or beyond x0.
    let period_index = |x: f64| -> f64 {
        match trig {
            Trig::Cos => ((x * omega / std::f64::consts::PI) - 0.5).ceil(),
            Trig::Sin => (x * omega / std::f64::consts::PI).ceil(),
        }
    };
    let zero_at = |k: f64| -> f64 {
        match trig {
            Trig::Cos => (k + 0.5) * std::f64::consts::PI / omega,
            Trig::Sin => k * std::f64::consts::PI / omega,
        }
    };

    let mut k = period_index(x0).max(0.0);
    if zero_at(k) <= x0 {
        k += 1.0;
    }
    let mut prev_edge = x0;
    let mut sum = 0.0f64;
    let mut partials: Vec<f64> = Vec::with_capacity(64);
    let mut last_term = f64::INFINITY;
    const CAP: usize = 10_000;

    for n in 0..CAP {
        let edge = zero_at(k);
        let p = adaptive(&integrand, prev_edge, edge, abs_tol * 0.01, 1e-3, splits)?;
        sum += p.value;
        partials.push(sum);
        last_term = p.value.abs();
        prev_edge = edge;
        k += 1.0;

        if last_term <= abs_tol * 0.1 && n >= 2 {
            return Ok(sum);
        }
        if n >= 7 {
            let (acc, acc_err) = averaged_limit(&partials);
            if acc_err <= abs_tol {
                return Ok(acc);
            }
        }
    }
    let (acc, acc_err) = averaged_limit(&partials);
    let err = acc_err.max(last_term);
    if err <= abs_tol * 10.0 {
        Ok(acc)
    } else {
        Err(Error::QuadratureNoConverge {
            best: acc,
            achieved: err,
            target: abs_tol,
        })
    }
}

/// Iterated averaging (van Wijngaarden) of the tail of a partial-sum sequence.
/// Returns (estimate, error heuristic).
fn averaged_limit(partials: &[f64]) -> (f64, f64) {
    let take = partials.len().min(24);
    let mut row: Vec<f64> = partials[partials.len() - take..].to_vec();
    let mut prev = *row.last().unwrap();
    let mut err = f64::INFINITY;
    while row.len() > 1 {
        for i in 0..row.len() - 1 {
            row[i] = 0.5 * (row[i] + row[i + 1]);
        }
        row.pop();
        let cur = *row.last().unwrap();
        err = (cur - prev).abs();
        prev = cur;
    }
    (prev, err.max(f64::EPSILON * prev.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qk15_polynomial_is_near_exact() {
        let f = |x: f64| 3.0 * x * x;
        let p = qk15(&f, 0.0, 2.0).unwrap();
        assert!((p.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_kinks_with_splits() {
        // |x - 0.3| has a kink; exact integral over [0,1] is 0.5*(0.09 + 0.49) = 0.29.
        let f = |x: f64| (x - 0.3f64).abs();
        let p = adaptive(&f, 0.0, 1.0, 0.0, 1e-12, &[0.3]).unwrap();
        assert!((p.value - 0.29).abs() < 1e-12);
    }

    #[test]
    fn tail_integration_power_law() {
        // ∫_1^∞ x^{-2.5} dx = 1/1.5.
        let f = |x: f64| x.powf(-2.5);
        let v = integrate_tail(&f, 1.0, 1e-10, &[]).unwrap();
        assert!((v - 1.0 / 1.5).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn tail_integration_detects_divergence() {
        let f = |x: f64| 1.0 / x;
        assert!(matches!(
            integrate_tail(&f, 1.0, 1e-8, &[]),
            Err(Error::TailDiverges)
        ));
    }

    #[test]
    fn to_zero_integrates_integrable_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2.
        let f = |x: f64| x.powf(-0.5);
        let v = integrate_to_zero(&f, 1.0, 1e-10, &[]).unwrap();
        assert!((v - 2.0).abs() < 1e-7, "got {v}");
    }

    #[test]
    fn oscillatory_cos_tail_matches_closed_form() {
        // ∫_0^∞ e^{-x} cos(ω x) dx = 1/(1+ω²).
        for &omega in &[0.7, 3.0, 25.0] {
            let g = |x: f64| (-x).exp();
            let v = oscillatory_tail(&g, omega, 0.0, Trig::Cos, 1e-11, &[]).unwrap();
            let exact = 1.0 / (1.0 + omega * omega);
            assert!((v - exact).abs() < 1e-9, "omega={omega}: {v} vs {exact}");
        }
    }

    #[test]
    fn oscillatory_sin_tail_matches_closed_form() {
        // ∫_0^∞ e^{-x} sin(ω x) dx = ω/(1+ω²).
        let omega = 4.0;
        let g = |x: f64| (-x).exp();
        let v = oscillatory_tail(&g, omega, 0.0, Trig::Sin, 1e-11, &[]).unwrap();
        let exact = omega / (1.0 + omega * omega);
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn oscillatory_slow_power_decay_converges() {
        // ∫_1^∞ x^{-1.5} cos(10 x) dx — slowly decaying envelope, needs acceleration.
        let g = |x: f64| x.powf(-1.5);
        let v = oscillatory_tail(&g, 10.0, 1.0, Trig::Cos, 1e-10, &[]).unwrap();
        // Reference by brute force over a long range with fine panels.
        let mut reference = 0.0;
        let n = 4_000_000usize;
        let hi = 4000.0f64;
        let dx = (hi - 1.0) / n as f64;
        for i in 0..n {
            let x = 1.0 + (i as f64 + 0.5) * dx;
            reference += x.powf(-1.5) * (10.0 * x).cos() * dx;
        }
        assert!(
            (v - reference).abs() < 5e-5,
            "accelerated {v} vs brute {reference}"
        );
    }
}
