//! One-dimensional adaptive quadrature for smooth integrands.

use std::sync::OnceLock;

use crate::polynomials::segment_rule;

fn base_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let r = segment_rule(13).expect("static order");
        r.points.into_iter().zip(r.weights).collect()
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let len = b - a;
    base_rule().iter().map(|&(s, w)| w * f(a + s * len)).sum::<f64>() * len
}

/// Integrates `f` over `[a, b]` (either orientation) to roughly `tol`
/// absolute error by recursive bisection of 7-point Gauss panels.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = panel(&f, a, b);
    recurse(&f, a, b, whole, tol.max(1e-15), 0)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth >= 40 {
        return refined;
    }
    recurse(f, a, m, left, 0.5 * tol, depth + 1) + recurse(f, m, b, right, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_and_kinked_integrands() {
        let v = adaptive(f64::sin, 0.0, std::f64::consts::PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive(|x: f64| x.abs(), -1.0, 2.0, 1e-12);
        assert!((v - 2.5).abs() < 1e-11);
        let v = adaptive(|x: f64| x * x, 1.0, 0.0, 1e-14);
        assert!((v + 1.0 / 3.0).abs() < 1e-14);
        let d = 1e-3;
        let v = adaptive(|x: f64| x / (x * x + d * d).sqrt(), -1.0, 0.5, 1e-12);
        let exact = (0.25 + d * d).sqrt() - (1.0 + d * d).sqrt();
        assert!((v - exact).abs() < 1e-11);
    }
}
