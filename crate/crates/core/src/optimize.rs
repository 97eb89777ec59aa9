//! Bounded scalar maximization: a coarse grid picks the bracket, golden
//! section refines it, and the interval endpoints are always compared.

use crate::error::Result;

const PRESCAN: usize = 64;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub argmax: f64,
    pub value: f64,
}

/// Maximizes `f` over `[lo, hi]` to within `tol` in the argument.
///
/// Ties are broken toward the smaller argument, so a flat objective reports
/// `lo`.
pub fn maximize<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<ScalarMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    debug_assert!(lo <= hi);
    if hi - lo <= tol {
        let v = f(lo)?;
        return Ok(ScalarMax { argmax: lo, value: v });
    }
    let step = (hi - lo) / PRESCAN as f64;
    let grid: Vec<f64> = (0..=PRESCAN).map(|i| if i == PRESCAN { hi } else { lo + step * i as f64 }).collect();
    let mut best = ScalarMax { argmax: lo, value: f(lo)? };
    let mut best_i = 0;
    for (i, &x) in grid.iter().enumerate().skip(1) {
        let v = f(x)?;
        if v > best.value {
            best = ScalarMax { argmax: x, value: v };
            best_i = i;
        }
    }
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(PRESCAN)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.value {
            best = ScalarMax { argmax: x, value: v };
        }
    }
    Ok(best)
}

/// Central finite difference, one-sided when `x ± step` leaves `[lo, hi]`.
pub fn slope<F>(mut f: F, x: f64, step: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (a, b) = if x - step < lo {
        (x, x + step)
    } else if x + step > hi {
        (x - step, x)
    } else {
        (x - step, x + step)
    };
    Ok((f(b)? - f(a)?) / (b - a))
}

/// Finds the boundary of a monotone predicate on `[lo, hi]` to within `tol`.
/// Requires `pred(lo) != pred(hi)`; returns a point where the value flips.
pub fn bisect<F>(mut pred: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    let at_lo = pred(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
