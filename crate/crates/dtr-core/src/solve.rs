//! Bounded scalar root finding (Brent's method).

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    /// Abscissa of the root estimate.
    pub x: f64,
    /// Function value at `x`.
    pub fx: f64,
    /// Iterations consumed.
    pub iterations: usize,
}

/// Find a root of `f` known to lie between `a` and `b` with Brent's method
/// (inverse quadratic interpolation / secant / bisection, after Numerical
/// Recipes `zbrent`).
///
/// `fa` and `fb` are the already-evaluated endpoint values; they must bracket
/// a sign change. Converges when the bracket shrinks below `xtol` or when
/// `|f| <= ftol`.
///
/// # Panics
/// Panics if `fa` and `fb` do not bracket a root.
pub fn brent_root<F>(
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> RootResult
where
    F: FnMut(f64) -> f64,
{
    assert!(
        (fa > 0.0 && fb < 0.0) || (fa < 0.0 && fb > 0.0) || fa == 0.0 || fb == 0.0,
        "brent_root: root must be bracketed, f({a}) = {fa}, f({b}) = {fb}"
    );
    if fa == 0.0 {
        return RootResult { x: a, fx: 0.0, iterations: 0 };
    }
    if fb == 0.0 {
        return RootResult { x: b, fx: 0.0, iterations: 0 };
    }

    let eps = f64::EPSILON.sqrt();
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (fa, fb);
    let mut c = b;
    let mut fc = fb;
    let mut d = 0.0_f64;
    let mut e = 0.0_f64;

    for iter in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * eps * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return RootResult { x: b, fx: fb, iterations: iter };
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Try inverse quadratic interpolation (secant when a == c).
            let s = fb / fa;
            let (mut p, mut q) = if (a - c).abs() < f64::EPSILON {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += if xm > 0.0 { tol1 } else { -tol1 };
        }
        fb = f(b);
    }
    RootResult { x: b, fx: fb, iterations: max_iter }
}
