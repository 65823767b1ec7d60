//! One-dimensional searches: golden section, coarse scan plus golden
//! refinement, and bisection.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes a unimodal `f` on `[lo, hi]` until the bracket is narrower than `tol`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
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
        // the interval stops shrinking once it reaches float resolution
        if x2 <= x1 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    [(x, fx), (x1, f1), (x2, f2)]
        .into_iter()
        .fold((x, fx), |b, c| if c.1 > b.1 { c } else { b })
}

/// Grid scan with `n` intervals followed by golden-section refinement around
/// the best grid point. Endpoints are always candidates.
pub fn scan_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> (f64, f64) {
    let n = n.max(2);
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    let mut best_k = 0;
    for k in 1..=n {
        let x = if k == n { hi } else { lo + h * k as f64 };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let a = lo + h * best_k.saturating_sub(1) as f64;
    let b = (lo + h * (best_k + 1) as f64).min(hi);
    let refined = golden_max(&f, a, b, tol);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Root of `f` on `[lo, hi]` given a sign change, to bracket width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// All sign changes of `f` over an `n`-interval grid, each refined by bisection.
pub fn roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let mut out = Vec::new();
    let mut xa = lo;
    let mut fa = f(lo);
    for k in 1..=n {
        let xb = if k == n { hi } else { lo + h * k as f64 };
        let fb = f(xb);
        if fa == 0.0 {
            out.push(xa);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            if let Some(r) = bisect(&f, xa, xb, tol) {
                out.push(r);
            }
        }
        xa = xb;
        fa = fb;
    }
    if fa == 0.0 {
        out.push(xa);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn scan_handles_kinks_and_endpoints() {
        let (x, _) = scan_max(|x| (1.0 - (x - 0.7).abs()).min(0.9), 0.0, 1.0, 512, 1e-10);
        assert!((x - 0.7).abs() <= 0.1 + 1e-9);
        let (x, _) = scan_max(|x| x, 0.0, 1.0, 512, 1e-10);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn bisect_and_roots() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-13);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
        let rs = roots(|x| (x * std::f64::consts::PI).sin(), 0.5, 3.5, 64, 1e-13);
        assert_eq!(rs.len(), 3);
        assert_abs_diff_eq!(rs[1], 2.0, epsilon = 1e-12);
    }
}
