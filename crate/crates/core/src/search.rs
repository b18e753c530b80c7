//! One-dimensional maximization: uniform grid pre-scan followed by
//! golden-section refinement inside the best grid bracket.

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult<T> {
    pub arg: T,
    pub value: T,
    pub evaluations: usize,
}

const MAX_GOLDEN_ITERATIONS: usize = 200;

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `rel_tol * (hi - lo)`.
pub fn golden_section_max<T, F>(mut f: F, lo: T, hi: T, rel_tol: T) -> SearchResult<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let width = (hi - lo).abs();
    let tol = rel_tol * width;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    for _ in 0..MAX_GOLDEN_ITERATIONS {
        if (b - a).abs() <= tol {
            break;
        }
        let previous = b - a;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        if !((b - a) < previous) {
            // bracket can no longer shrink at this precision
            break;
        }
    }
    let (arg, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    SearchResult {
        arg,
        value,
        evaluations,
    }
}

/// Best of `points` evenly spaced samples on `[lo, hi]`, endpoints included.
/// Ties keep the lowest argument.
pub fn grid_scan<T, F>(mut f: F, lo: T, hi: T, points: usize) -> (usize, SearchResult<T>)
where
    T: Real,
    F: FnMut(T) -> T,
{
    let points = points.max(2);
    let step = (hi - lo) / T::lit((points - 1) as f64);
    let mut best = (0, lo, f(lo));
    for idx in 1..points {
        let x = if idx == points - 1 {
            hi
        } else {
            lo + step * T::lit(idx as f64)
        };
        let v = f(x);
        if v > best.2 {
            best = (idx, x, v);
        }
    }
    (
        best.0,
        SearchResult {
            arg: best.1,
            value: best.2,
            evaluations: points,
        },
    )
}

/// Grid pre-scan with `grid_points` samples, then golden-section search in
/// the bracket around the best sample. The grid guards against objectives
/// that are not unimodal on the whole interval.
pub fn maximize_on_interval<T, F>(
    mut f: F,
    lo: T,
    hi: T,
    grid_points: usize,
    rel_tol: T,
) -> SearchResult<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if hi <= lo {
        let value = f(lo);
        return SearchResult {
            arg: lo,
            value,
            evaluations: 1,
        };
    }
    let (idx, grid) = grid_scan(&mut f, lo, hi, grid_points);
    let points = grid_points.max(2);
    let step = (hi - lo) / T::lit((points - 1) as f64);
    let left = if idx == 0 {
        lo
    } else {
        lo + step * T::lit((idx - 1) as f64)
    };
    let right = if idx + 1 >= points {
        hi
    } else {
        (lo + step * T::lit((idx + 1) as f64)).min(hi)
    };
    // tolerance expressed against the full interval
    let bracket_tol = rel_tol * (hi - lo) / (right - left);
    let refined = golden_section_max(&mut f, left, right, bracket_tol);
    let evaluations = grid.evaluations + refined.evaluations;
    let best = if refined.value > grid.value {
        refined
    } else {
        grid
    };
    SearchResult {
        evaluations,
        ..best
    }
}
