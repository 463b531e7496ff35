//! Monotone piecewise-cubic (Fritsch–Carlson) interpolation.
//!
//! Used for the cached exponent/variogram tables: data that is monotone stays
//! monotone under interpolation, which keeps inverse lookups well posed.
//! Outside the node range evaluation extends linearly with the end slopes
//! (callers that need power-law extension work in log-log coordinates).

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Domain(
                "interpolation needs at least two matched nodes".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "interpolation abscissae must be strictly increasing".into(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("interpolation data must be finite".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0f64; n];

        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = edge_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        d[n - 1] = edge_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n >= 3 { delta[n - 3] } else { delta[n - 2] },
        );
        Ok(Pchip { x, y, d })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .x
            .binary_search_by(|p| p.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return self.y[0] + self.d[0] * (x - self.x[0]);
        }
        if x >= *self.x.last().unwrap() {
            let n = self.x.len();
            return self.y[n - 1] + self.d[n - 1] * (x - self.x[n - 1]);
        }
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * d0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + h * d1 * (t3 - t2)
    }

    /// End slope of the data itself (used by callers for power-law tails in
    /// log-log coordinates): (at_min, at_max).
    pub fn end_slopes(&self) -> (f64, f64) {
        (self.d[0], self.d[self.d.len() - 1])
    }

    /// Inverse lookup on strictly monotone increasing data, bisection to
    /// `rel_tol` in x.
    pub fn invert(&self, target: f64, rel_tol: f64) -> Result<f64> {
        let (ylo, yhi) = (self.y[0], *self.y.last().unwrap());
        if !(ylo < yhi) {
            return Err(Error::Domain("inverse lookup needs increasing data".into()));
        }
        if target < ylo || target > yhi {
            return Err(Error::OutOfRange {
                value: target,
                lo: ylo,
                hi: yhi,
            });
        }
        let mut a = self.x[0];
        let mut b = *self.x.last().unwrap();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.eval(m) < target {
                a = m;
            } else {
                b = m;
            }
            if (b - a).abs() <= rel_tol * m.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        Ok(0.5 * (a + b))
    }
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        d = 0.0;
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(x, y).unwrap();
        for i in 0..90 {
            let t = i as f64 * 0.1;
            assert!((p.eval(t) - (2.0 * t + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.7).tanh() + 0.01 * v).collect();
        let p = Pchip::new(x.clone(), y).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=950 {
            let t = i as f64 * 0.01;
            let v = p.eval(t);
            assert!(v >= prev - 1e-13, "not monotone at {t}");
            prev = v;
        }
    }

    #[test]
    fn inverse_round_trips() {
        let x: Vec<f64> = (1..40).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(1.5)).collect();
        let p = Pchip::new(x, y).unwrap();
        for &t in &[0.3, 1.0, 4.7, 9.2] {
            let yv = p.eval(t);
            let back = p.invert(yv, 1e-12).unwrap();
            assert!((back - t).abs() < 1e-9 * t, "{back} vs {t}");
        }
    }

    #[test]
    fn inverse_rejects_out_of_range() {
        let p = Pchip::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(p.invert(2.0, 1e-9), Err(Error::OutOfRange { .. })));
    }
}
