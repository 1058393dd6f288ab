//! One-dimensional maximisation used by the α-search.

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol` or after `max_iter`
/// reductions. The endpoints are evaluated too, so a monotone `f` returns
/// the better endpoint.
pub fn golden_section_max<F>(f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        iterations += 1;
    }

    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a, b] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    Maximum {
        x: best.0,
        value: best.1,
        iterations,
    }
}
