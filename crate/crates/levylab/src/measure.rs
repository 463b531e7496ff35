//! Declarative models for symmetric Levy measures with density 1/θ on (0, ∞),
//! their tail masses, and the ratio indices (x/θ(x)) / ν(tail ≥ x) whose
//! liminf/limsup at zero and infinity classify the small- and large-jump
//! behavior.
//!
//! Tail-mass convention: the measure lives on (0, ∞). `OneSided` integrates
//! the density over (x, ∞); `TwoSided` doubles it, reading the measure as
//! symmetrized onto the whole line. One-sided is the default: it is the
//! convention under which the pure power model of index α has ratio exactly α.

use crate::interp::Pchip;
use crate::quad;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// θ(x) = c · x^p on (lo, hi]; the density is 1/θ.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub c: f64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    /// ∫ density over (a, b] ∩ (lo, hi] in closed form.
    fn mass(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if b <= a {
            return 0.0;
        }
        let q = self.p - 1.0; // > 0 for all admissible bands
        if b.is_infinite() {
            a.powf(-q) / (self.c * q)
        } else {
            (a.powf(-q) - b.powf(-q)) / (self.c * q)
        }
    }

    /// ∫ x² density over (a, b] ∩ (lo, hi].
    fn second_moment(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if b <= a {
            return 0.0;
        }
        let q = 3.0 - self.p;
        if (q).abs() < 1e-12 {
            (b / a).ln() / self.c
        } else if b.is_infinite() {
            if q >= 0.0 {
                f64::INFINITY
            } else {
                -a.powf(q) / (self.c * q)
            }
        } else {
            (b.powf(q) - a.powf(q)) / (self.c * q)
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    /// density x^{-α-1} on (0, ∞), i.e. θ(x) = x^{α+1}.
    Stable { alpha: f64 },
    /// θ piecewise c·x^p over contiguous bands tiling (0, ∞).
    PiecewisePower { bands: Vec<Band> },
    /// density tabulated at knots, interpolated log-log (power-law extension
    /// beyond the end knots).
    Tabulated {
        log_x: Vec<f64>,
        interp: Pchip,
    },
}

#[derive(Debug, Clone)]
pub struct LevyModel {
    pub kind: ModelKind,
    pub gaussian_coef: f64,
    pub sidedness: Sidedness,
    pub label: String,
}

impl LevyModel {
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 2.0) {
            return Err(Error::Domain(format!(
                "stable index must lie in (0,2), got {alpha}"
            )));
        }
        Ok(LevyModel {
            kind: ModelKind::Stable { alpha },
            gaussian_coef: 0.0,
            sidedness: Sidedness::OneSided,
            label: format!("stable({alpha})"),
        })
    }

    /// Pure Gaussian model: ψ(λ) = A²λ², no jump part.
    pub fn brownian(a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::Domain("gaussian coefficient must be positive".into()));
        }
        Ok(LevyModel {
            kind: ModelKind::PiecewisePower { bands: vec![] },
            gaussian_coef: a,
            sidedness: Sidedness::OneSided,
            label: format!("brownian(A={a})"),
        })
    }

    pub fn piecewise(bands: Vec<Band>) -> Result<Self> {
        validate_bands(&bands)?;
        let model = LevyModel {
            kind: ModelKind::PiecewisePower { bands },
            gaussian_coef: 0.0,
            sidedness: Sidedness::OneSided,
            label: "piecewise".into(),
        };
        model.check_admissible()?;
        Ok(model)
    }

    pub fn tabulated(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 4 {
            return Err(Error::Domain("tabulated density needs ≥ 4 knots".into()));
        }
        let mut k = knots.to_vec();
        k.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if k.iter().any(|&(x, d)| x <= 0.0 || d <= 0.0) {
            return Err(Error::Domain(
                "tabulated knots need positive abscissae and densities".into(),
            ));
        }
        let log_x: Vec<f64> = k.iter().map(|&(x, _)| x.ln()).collect();
        let log_d: Vec<f64> = k.iter().map(|&(_, d)| d.ln()).collect();
        let interp = Pchip::new(log_x.clone(), log_d)?;
        let model = LevyModel {
            kind: ModelKind::Tabulated { log_x, interp },
            gaussian_coef: 0.0,
            sidedness: Sidedness::OneSided,
            label: "tabulated".into(),
        };
        model.check_admissible()?;
        Ok(model)
    }

    /// Alternating-coefficient octave model: θ(x) = c₁|x|^{α+1} on
    /// (b_{2k+2}, b_{2k+1}], θ(x) = c₂|x|^{α+1} on (b_{2k+1}, b_{2k}], with
    /// b_n = ratio^n, extended by the c₂ band beyond b₀ = 1 and by the
    /// pattern's next coefficient down to 0.
    pub fn octave_alternating(c1: f64, c2: f64, alpha: f64, ratio: f64, depth: usize) -> Result<Self> {
        if !(0.0 < c1 && c1 <= c2) {
            return Err(Error::Domain("need 0 < c1 <= c2".into()));
        }
        if !(1.0 < alpha && alpha < 2.0) || !(0.0 < ratio && ratio < 1.0) || depth < 2 {
            return Err(Error::Domain("bad octave model parameters".into()));
        }
        let p = alpha + 1.0;
        let b = |n: usize| ratio.powi(n as i32);
        let mut bands = Vec::with_capacity(2 * depth + 2);
        // innermost band down to zero continues the pattern with c₂
        // ((b_{2k+1}, b_{2k}] bands carry c₂ and the truncation edge is b_{2·depth})
        bands.push(Band {
            c: c2,
            p,
            lo: 0.0,
            hi: b(2 * depth),
        });
        for k in (0..depth).rev() {
            bands.push(Band {
                c: c1,
                p,
                lo: b(2 * k + 2),
                hi: b(2 * k + 1),
            });
            bands.push(Band {
                c: c2,
                p,
                lo: b(2 * k + 1),
                hi: b(2 * k),
            });
        }
        bands.push(Band {
            c: c2,
            p,
            lo: 1.0,
            hi: f64::INFINITY,
        });
        let mut m = Self::piecewise(bands)?;
        m.label = format!("octaves(c1={c1},c2={c2},alpha={alpha})");
        Ok(m)
    }

    /// Sparse heavy-band model: background density |x|^{-α₁-1} interrupted by
    /// thin |x|^{-α₂-1} bands (b_{2k+1}, b_{2k}] whose endpoints decay
    /// superexponentially: b_{2k} = b_{2k-1}/(k+1) and b_{2k+1} is pushed as
    /// low as the two mass constraints allow with 1% slack (bisection).
    /// The ratio (x/θ(x))/ν̄(x) then diverges along x = b_{2k}.
    pub fn sparse_heavy_bands(alpha1: f64, alpha2: f64, pairs: usize, slack: f64) -> Result<Self> {
        if !(1.0 < alpha1 && alpha1 < alpha2 && alpha2 < 2.0) {
            return Err(Error::Domain("need 1 < alpha1 < alpha2 < 2".into()));
        }
        if !(0.0 < slack && slack < 0.5) || pairs < 3 {
            return Err(Error::Domain("bad sparse-band parameters".into()));
        }
        let budget = 1.0 - slack;
        let mut b = vec![1.0f64, 0.5f64]; // b0, b1
        for k in 1..=pairs {
            let b_prev = b[2 * k - 1];
            let b_even = b_prev / (k as f64 + 1.0);
            b.push(b_even);
            // Heavy-band mass constraint: ∫_{s}^{b_even} x^{-α₂-1} ≤ budget · ∫_{b_even}^{b_prev} x^{-α₁-1}
            let light_mass = (b_even.powf(-alpha1) - b_prev.powf(-alpha1)) / alpha1;
            let heavy_mass =
                |s: f64| (s.powf(-alpha2) - b_even.powf(-alpha2)) / alpha2;
            // Second-moment constraint: ∫_s^{b_even} x^{1-α₂} ≤ budget · ∫_0^s x^{1-α₁}
            let heavy_m2 = |s: f64| (b_even.powf(2.0 - alpha2) - s.powf(2.0 - alpha2)) / (2.0 - alpha2);
            let light_m2 = |s: f64| s.powf(2.0 - alpha1) / (2.0 - alpha1);

            let root_a = bisect_decreasing(
                |s| heavy_mass(s) - budget * light_mass,
                b_even * 1e-9,
                b_even,
            );
            let root_b = bisect_decreasing(
                |s| heavy_m2(s) - budget * light_m2(s),
                b_even * 1e-9,
                b_even,
            );
            let b_odd = root_a.max(root_b).min(b_even * (1.0 - 1e-9));
            b.push(b_odd);
        }
        let p1 = alpha1 + 1.0;
        let p2 = alpha2 + 1.0;
        let n = b.len();
        let mut bands = Vec::with_capacity(n + 2);
        bands.push(Band {
            c: 1.0,
            p: p1,
            lo: 0.0,
            hi: b[n - 1],
        });
        for i in (1..n).rev() {
            // (b[i], b[i-1]] is heavy when i is odd (pattern (b_{2k+1}, b_{2k}]), light when even
            let p = if i % 2 == 1 { p2 } else { p1 };
            bands.push(Band {
                c: 1.0,
                p,
                lo: b[i],
                hi: b[i - 1],
            });
        }
        bands.push(Band {
            c: 1.0,
            p: p2,
            lo: 1.0,
            hi: f64::INFINITY,
        });
        let mut m = Self::piecewise(bands)?;
        m.label = format!("sparse-bands(a1={alpha1},a2={alpha2})");
        Ok(m)
    }

    pub fn with_sidedness(mut self, s: Sidedness) -> Self {
        self.sidedness = s;
        self
    }

    pub fn with_gaussian_coef(mut self, a: f64) -> Self {
        self.gaussian_coef = a;
        self
    }

    pub fn is_pure_gaussian(&self) -> bool {
        matches!(&self.kind, ModelKind::PiecewisePower { bands } if bands.is_empty())
    }

    /// θ(x); the density is 1/θ(x).
    pub fn theta(&self, x: f64) -> f64 {
        1.0 / self.density(x)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            ModelKind::Stable { alpha } => x.powf(-alpha - 1.0),
            ModelKind::PiecewisePower { bands } => {
                if bands.is_empty() {
                    return 0.0;
                }
                match bands.binary_search_by(|b| {
                    if x <= b.lo {
                        std::cmp::Ordering::Greater
                    } else if x > b.hi {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Equal
                    }
                }) {
                    Ok(i) => {
                        let b = &bands[i];
                        1.0 / (b.c * x.powf(b.p))
                    }
                    Err(_) => 0.0,
                }
            }
            ModelKind::Tabulated { interp, .. } => interp.eval(x.ln()).exp(),
        }
    }

    /// One-sided tail ∫_x^∞ density, regardless of the sidedness switch.
    pub fn one_sided_tail(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("tail mass needs x > 0, got {x}")));
        }
        match &self.kind {
            ModelKind::Stable { alpha } => Ok(x.powf(-alpha) / alpha),
            ModelKind::PiecewisePower { bands } => {
                Ok(bands.iter().map(|b| b.mass(x, f64::INFINITY)).sum())
            }
            ModelKind::Tabulated { .. } => {
                let (_, hi_slope) = self.tabulated_end_slopes();
                if hi_slope >= -1.0 {
                    return Err(Error::TailDiverges);
                }
                let f = |t: f64| self.density(t);
                quad::integrate_tail(&f, x, 1e-10, &self.breakpoints())
            }
        }
    }

    fn tabulated_end_slopes(&self) -> (f64, f64) {
        match &self.kind {
            ModelKind::Tabulated { interp, .. } => interp.end_slopes(),
            _ => unreachable!(),
        }
    }

    /// ν-mass of the tail per the model's sidedness convention.
    pub fn tail_mass(&self, x: f64) -> Result<f64> {
        let one = self.one_sided_tail(x)?;
        Ok(match self.sidedness {
            Sidedness::OneSided => one,
            Sidedness::TwoSided => 2.0 * one,
        })
    }

    /// (x/θ(x)) / tail_mass(x).
    pub fn condition_ratio(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("ratio needs x > 0, got {x}")));
        }
        let tail = self.tail_mass(x)?;
        if tail <= 0.0 || !tail.is_finite() {
            return Err(Error::ZeroTailMass(x));
        }
        Ok(x * self.density(x) / tail)
    }

    /// ∫_0^eps x² density — the variance rate of the small-jump remainder.
    pub fn small_jump_variance(&self, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Err(Error::Domain("need eps > 0".into()));
        }
        match &self.kind {
            ModelKind::Stable { alpha } => Ok(eps.powf(2.0 - alpha) / (2.0 - alpha)),
            ModelKind::PiecewisePower { bands } => {
                let v: f64 = bands.iter().map(|b| b.second_moment(0.0, eps)).sum();
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::SmallJumpsDiverge)
                }
            }
            ModelKind::Tabulated { .. } => {
                let (lo_slope, _) = self.tabulated_end_slopes();
                if lo_slope <= -3.0 {
                    return Err(Error::SmallJumpsDiverge);
                }
                let f = |t: f64| t * t * self.density(t);
                quad::integrate_to_zero(&f, eps, 1e-10, &self.breakpoints())
            }
        }
    }

    /// ∫ min(1, x²) ν(dx) < ∞, checked numerically.
    pub fn check_admissible(&self) -> Result<()> {
        if self.is_pure_gaussian() {
            return Ok(());
        }
        let tail = self.one_sided_tail(1.0)?;
        let small = self.small_jump_variance(1.0)?;
        if !tail.is_finite() {
            return Err(Error::TailDiverges);
        }
        if !small.is_finite() {
            return Err(Error::SmallJumpsDiverge);
        }
        Ok(())
    }

    /// Band edges (quadrature split points).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::Stable { .. } => vec![],
            ModelKind::PiecewisePower { bands } => bands
                .iter()
                .map(|b| b.lo)
                .filter(|&e| e > 0.0 && e.is_finite())
                .collect(),
            ModelKind::Tabulated { log_x, .. } => log_x.iter().map(|lx| lx.exp()).collect(),
        }
    }

    /// Density scaled by `factor` (θ divided by `factor`). Power models stay
    /// in closed form.
    pub fn scale_density(&self, factor: f64) -> Result<LevyModel> {
        assert!(factor > 0.0);
        let kind = match &self.kind {
            ModelKind::Stable { alpha } => ModelKind::PiecewisePower {
                bands: vec![Band {
                    c: 1.0 / factor,
                    p: alpha + 1.0,
                    lo: 0.0,
                    hi: f64::INFINITY,
                }],
            },
            ModelKind::PiecewisePower { bands } => ModelKind::PiecewisePower {
                bands: bands
                    .iter()
                    .map(|b| Band {
                        c: b.c / factor,
                        ..*b
                    })
                    .collect(),
            },
            ModelKind::Tabulated { log_x, interp } => ModelKind::Tabulated {
                log_x: log_x.clone(),
                interp: {
                    let xs = log_x.clone();
                    let ys: Vec<f64> = log_x.iter().map(|&lx| interp.eval(lx) + factor.ln()).collect();
                    Pchip::new(xs, ys)?
                },
            },
        };
        Ok(LevyModel {
            kind,
            label: format!("{}·{factor}", self.label),
            ..self.clone()
        })
    }
}

fn validate_bands(bands: &[Band]) -> Result<()> {
    if bands.is_empty() {
        return Ok(()); // pure-Gaussian sentinel
    }
    let mut prev_hi = 0.0f64;
    for (i, b) in bands.iter().enumerate() {
        if b.c <= 0.0 {
            return Err(Error::Domain(format!("band {i}: coefficient must be > 0")));
        }
        if (b.lo - prev_hi).abs() > 1e-12 * b.lo.max(1.0) {
            return Err(Error::Domain(format!(
                "band {i}: bands must tile the support, gap/overlap at {}",
                b.lo
            )));
        }
        if b.hi <= b.lo {
            return Err(Error::Domain(format!("band {i}: empty interval")));
        }
        if b.lo < 1.0 && !(2.0 < b.p && b.p < 3.0) {
            return Err(Error::Domain(format!(
                "band {i}: exponent {} near zero must lie in (2,3)",
                b.p
            )));
        }
        if b.hi.is_infinite() && b.p <= 1.0 {
            return Err(Error::TailDiverges);
        }
        prev_hi = b.hi;
    }
    if !bands.last().unwrap().hi.is_infinite() {
        return Err(Error::Domain("bands must extend to infinity".into()));
    }
    Ok(())
}

/// Bisection root of a function that is positive at `lo` and negative at `hi`
/// (strictly decreasing margin). Returns `lo` if already nonpositive there.
fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    if f(a) <= 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if (b - a) <= 1e-14 * b {
            break;
        }
    }
    b
}

/// Log-spaced probe grid.
#[derive(Debug, Clone)]
pub struct ProbeGrid {
    pub points: Vec<f64>,
}

impl ProbeGrid {
    pub fn log(lo: f64, hi: f64, per_decade: usize) -> Self {
        assert!(lo > 0.0 && hi > lo && per_decade >= 1);
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).ceil() as usize + 1;
        let step = (hi.ln() - lo.ln()) / (n - 1) as f64;
        let points = (0..n).map(|i| (lo.ln() + step * i as f64).exp()).collect();
        ProbeGrid { points }
    }

    pub fn decades(&self) -> f64 {
        (self.points.last().unwrap() / self.points[0]).log10()
    }
}

#[derive(Debug, Clone)]
pub struct ConditionIndices {
    /// liminf/limsup estimates at zero (last-decade extrema).
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// liminf/limsup estimates at infinity.
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Relative drift of the extrema between the last two decades (diagnostic).
    pub drift_zero: f64,
    pub drift_inf: f64,
    pub c1_satisfied: bool,
    pub c2_satisfied: bool,
    pub unbounded_at_zero: bool,
    pub unbounded_at_inf: bool,
}

/// Estimate the ratio indices over log probe grids near 0 and near ∞.
///
/// The liminf/limsup are reported as the extrema over the finest decade of
/// each grid; the drift between the last two decades is the stabilization
/// diagnostic. A ratio that keeps growing decade over decade is flagged
/// unbounded and the index reported as +∞.
pub fn estimate_indices(
    model: &LevyModel,
    grid_zero: &ProbeGrid,
    grid_inf: &ProbeGrid,
) -> Result<ConditionIndices> {
    for (g, name) in [(grid_zero, "zero"), (grid_inf, "infinity")] {
        if g.points.len() < 32 || g.decades() < 4.0 - 1e-9 {
            return Err(Error::Domain(format!(
                "probe grid at {name} needs ≥ 32 points spanning ≥ 4 decades"
            )));
        }
    }
    let (a_lo, a_hi, drift_zero, unb_zero) = decade_extrema(model, grid_zero, true)?;
    let (b_lo, b_hi, drift_inf, unb_inf) = decade_extrema(model, grid_inf, false)?;
    Ok(ConditionIndices {
        alpha_lo: a_lo,
        alpha_hi: if unb_zero { f64::INFINITY } else { a_hi },
        beta_lo: b_lo,
        beta_hi: if unb_inf { f64::INFINITY } else { b_hi },
        drift_zero,
        drift_inf,
        c1_satisfied: !unb_zero && 1.0 < a_lo && a_hi < 2.0,
        c2_satisfied: !unb_inf && 1.0 < b_lo && b_hi < 2.0,
        unbounded_at_zero: unb_zero,
        unbounded_at_inf: unb_inf,
    })
}

fn decade_extrema(
    model: &LevyModel,
    grid: &ProbeGrid,
    toward_zero: bool,
) -> Result<(f64, f64, f64, bool)> {
    // Augment with band breakpoints inside the grid range: the interesting
    // extremes of piecewise models sit exactly on the band edges.
    let lo = grid.points[0];
    let hi = *grid.points.last().unwrap();
    let mut pts = grid.points.clone();
    pts.extend(
        model
            .breakpoints()
            .into_iter()
            .filter(|&b| b >= lo && b <= hi),
    );
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();

    // The "finest" decade is the one nearest the regime limit.
    let (last, prev): (Vec<f64>, Vec<f64>) = if toward_zero {
        (
            pts.iter().copied().filter(|&x| x <= lo * 10.0).collect(),
            pts.iter()
                .copied()
                .filter(|&x| x > lo * 10.0 && x <= lo * 100.0)
                .collect(),
        )
    } else {
        (
            pts.iter().copied().filter(|&x| x >= hi / 10.0).collect(),
            pts.iter()
                .copied()
                .filter(|&x| x < hi / 10.0 && x >= hi / 100.0)
                .collect(),
        )
    };
    let extrema = |xs: &[f64]| -> Result<(f64, f64)> {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for &x in xs {
            let r = model.condition_ratio(x)?;
            mn = mn.min(r);
            mx = mx.max(r);
        }
        Ok((mn, mx))
    };
    let (mn1, mx1) = extrema(&last)?;
    let (mn0, mx0) = extrema(&prev)?;
    let drift = ((mn1 / mn0 - 1.0).abs()).max((mx1 / mx0 - 1.0).abs());
    // Unbounded: the max keeps growing into the finest decade and has left
    // the admissible band by a clear margin.
    let unbounded = mx1 > mx0 * 1.25 && mx1 > 4.0;
    Ok((mn1, mx1, drift, unbounded))
}
