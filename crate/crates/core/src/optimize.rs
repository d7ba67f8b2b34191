//! Golden-section search for unimodal 1-D maximization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` on `[lo, hi]`. `done(a, b)` decides when the current bracket
/// is tight enough, which lets callers express tolerances in a transformed
/// coordinate. Non-finite objective values are treated as -inf.
pub(crate) fn golden_section_max<F, D>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    done: D,
    max_iter: usize,
) -> Maximum
where
    F: FnMut(f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        if done(lo, hi) {
            converged = true;
            break;
        }
        iterations += 1;
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        }
    }
    // also consider the bracket ends; the optimum may sit on a boundary
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for end in [lo, hi] {
        let v = eval(end);
        if v > best.1 {
            best = (end, v);
        }
    }
    Maximum {
        x: best.0,
        value: best.1,
        iterations,
        converged,
    }
}
