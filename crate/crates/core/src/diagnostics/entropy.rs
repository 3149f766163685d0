//! Entropy pairs, the mollified Kruzkov family and the weak entropy residual.

use crate::error::{Error, Result};
use crate::fluxes::FluxFunction;
use crate::integrate::adaptive;
use crate::polynomials::triangle_rule;
use crate::solver::RunState;

/// Convex entropy `eta` whose flux follows from `q' = f' eta'`.
pub trait EntropyPair {
    fn eta(&self, u: f64) -> f64;
    fn deta(&self, u: f64) -> f64;
    fn d2eta(&self, u: f64) -> f64;
    /// State where the entropy flux is anchored to zero.
    fn reference_state(&self) -> f64;

    /// `q(u) = int_ref^u eta'(xi) f'(xi) dxi` by adaptive quadrature.
    fn flux(&self, f: &FluxFunction, u: f64) -> f64 {
        let k = self.reference_state();
        adaptive(|xi| self.deta(xi) * f.df(xi), k, u, 1e-12)
    }

    /// Space-time entropy flux `(eta(u), q(u))`.
    fn spacetime_flux(&self, f: &FluxFunction, u: f64) -> [f64; 2] {
        [self.eta(u), self.flux(f, u)]
    }
}

/// `eta(u) = u^2 / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticEntropy;

impl EntropyPair for QuadraticEntropy {
    fn eta(&self, u: f64) -> f64 {
        0.5 * u * u
    }
    fn deta(&self, u: f64) -> f64 {
        u
    }
    fn d2eta(&self, _u: f64) -> f64 {
        1.0
    }
    fn reference_state(&self) -> f64 {
        0.0
    }
}

/// `eta(u) = sqrt((u - k)^2 + delta^2) - delta`, a smooth convex
/// approximation of `|u - k|` within `delta` uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedKruzkov {
    pub k: f64,
    pub delta: f64,
}

impl MollifiedKruzkov {
    pub fn new(k: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !k.is_finite() {
            return Err(Error::arg(format!("Kruzkov regularisation needs delta > 0 (got {delta})")));
        }
        Ok(MollifiedKruzkov { k, delta })
    }
}

impl EntropyPair for MollifiedKruzkov {
    fn eta(&self, u: f64) -> f64 {
        let s = u - self.k;
        // sqrt(s^2 + d^2) - d without cancellation
        s * s / ((s * s + self.delta * self.delta).sqrt() + self.delta)
    }
    fn deta(&self, u: f64) -> f64 {
        let s = u - self.k;
        s / (s * s + self.delta * self.delta).sqrt()
    }
    fn d2eta(&self, u: f64) -> f64 {
        let s = u - self.k;
        let r2 = s * s + self.delta * self.delta;
        self.delta * self.delta / (r2 * r2.sqrt())
    }
    fn reference_state(&self) -> f64 {
        self.k
    }
}

/// `q_{k,delta}(u)`.
pub fn kruzkov_flux(f: &FluxFunction, k: f64, delta: f64, u: f64) -> Result<f64> {
    Ok(MollifiedKruzkov::new(k, delta)?.flux(f, u))
}

/// Smooth tensor bump `chi((t - t_c)/r_t) chi((x - x_c)/r_x)` with
/// `chi(s) = exp(-1 / (1 - s^2))` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpTest {
    pub t_center: f64,
    pub x_center: f64,
    pub t_radius: f64,
    pub x_radius: f64,
}

fn chi(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - s * s;
    let v = (-1.0 / w).exp();
    (v, v * (-2.0 * s / (w * w)))
}

impl BumpTest {
    /// Value and gradient `(d/dt, d/dx)`.
    pub fn eval(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let (ct, dct) = chi((p[0] - self.t_center) / self.t_radius);
        let (cx, dcx) = chi((p[1] - self.x_center) / self.x_radius);
        (ct * cx, [dct / self.t_radius * cx, ct * dcx / self.x_radius])
    }

    fn support(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.t_center - self.t_radius, self.t_center + self.t_radius],
            [self.x_center - self.x_radius, self.x_center + self.x_radius],
        )
    }
}

const RULE_ORDER: usize = 16;
/// Sub-elements per bump radius along each edge.
const SUBDIVISIONS_PER_RADIUS: f64 = 10.0;

/// The `m^2` congruent sub-triangles of the reference triangle.
fn sub_triangles(m: usize) -> impl Iterator<Item = [[f64; 2]; 3]> {
    let h = 1.0 / m as f64;
    (0..m).flat_map(move |i| {
        (0..m - i).flat_map(move |j| {
            let p = |a: usize, b: usize| [a as f64 * h, b as f64 * h];
            let up = [p(i, j), p(i + 1, j), p(i, j + 1)];
            let down = (i + j + 1 < m).then(|| [p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)]);
            std::iter::once(up).chain(down)
        })
    })
}

/// `E_h = int q~(u_h) . grad phi` summed over every element of the run.
pub fn entropy_residual<E: EntropyPair + Sync>(run: &RunState, entropy: &E, phi: &BumpTest) -> Result<f64> {
    let (ts, xs) = phi.support();
    let s = &run.setup;
    if !(ts[0] > 0.0 && ts[1] < s.t_final && xs[0] > s.x_left && xs[1] < s.x_right) {
        return Err(Error::arg(format!(
            "test function support {ts:?} x {xs:?} must lie inside (0, {}) x ({}, {})",
            s.t_final, s.x_left, s.x_right
        )));
    }
    use rayon::prelude::*;
    // Neither the bump nor the entropy is polynomial: integrate with a
    // high-order rule on a regular refinement of each element, fine enough
    // to resolve the bump.
    let rule = triangle_rule(RULE_ORDER)?;
    let radius = phi.t_radius.min(phi.x_radius);
    let mut total = 0.0;
    for rec in &run.slabs {
        if rec.t_hi() <= ts[0] || rec.t_lo() >= ts[1] {
            continue;
        }
        let u = &rec.solution;
        let mesh = &u.space.mesh;
        let f = &rec.flux().flux.flux;
        let parts: Vec<f64> = (0..u.space.n_elements())
            .into_par_iter()
            .map(|e| {
                let el = &mesh.elements[e];
                let pts = el.vertices.map(|v| mesh.points[v]);
                let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.x), h.max(p.x)));
                if hi <= xs[0] || lo >= xs[1] {
                    return 0.0;
                }
                let map = mesh.map(e);
                let m = ((SUBDIVISIONS_PER_RADIUS * el.diameter / radius).ceil() as usize).max(1);
                let det = map.det.abs();
                sub_triangles(m)
                    .map(|[p0, p1, p2]| {
                        let sub_det = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
                        rule.iter()
                            .map(|(r, w)| {
                                let rr = [
                                    p0[0] + r[0] * (p1[0] - p0[0]) + r[1] * (p2[0] - p0[0]),
                                    p0[1] + r[0] * (p1[1] - p0[1]) + r[1] * (p2[1] - p0[1]),
                                ];
                                let (_, g) = phi.eval(map.to_physical(rr));
                                if g == [0.0, 0.0] {
                                    return 0.0;
                                }
                                let q = entropy.spacetime_flux(f, u.eval_reference(e, rr));
                                w * sub_det * det * (q[0] * g[0] + q[1] * g[1])
                            })
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect();
        total += parts.iter().sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollified_kruzkov_properties() {
        for delta in [1e-1, 1e-2, 1e-3] {
            let e = MollifiedKruzkov::new(0.3, delta).unwrap();
            for i in 0..=2000 {
                let u = -2.0 + 4.0 * i as f64 / 2000.0;
                assert!((e.eta(u) - (u - 0.3).abs()).abs() <= delta);
                assert!(e.deta(u).abs() <= 1.0);
                assert!(e.d2eta(u) >= 0.0);
            }
        }
        assert!(MollifiedKruzkov::new(0.0, 0.0).is_err());
    }

    #[test]
    fn kruzkov_flux_closed_forms() {
        let (k, delta) = (0.25, 1e-2);
        let e = MollifiedKruzkov::new(k, delta).unwrap();
        let lin = FluxFunction::linear(-1.5);
        for u in [-1.0, 0.0, 0.25, 0.7, 2.0] {
            let q = kruzkov_flux(&lin, k, delta, u).unwrap();
            assert!((q - (-1.5) * (e.eta(u) - e.eta(k))).abs() < 1e-11, "u={u}");
        }
        assert_eq!(kruzkov_flux(&FluxFunction::burgers(), k, delta, k).unwrap(), 0.0);
        // Burgers: int s (s + k) / r ds with s = xi - k, r = sqrt(s^2 + d^2).
        let burgers = FluxFunction::burgers();
        for u in [-0.8, 0.1, 0.9] {
            let s = u - k;
            let r = (s * s + delta * delta).sqrt();
            let closed = 0.5 * (s * r - delta * delta * (s / delta).asinh()) + k * (r - delta);
            assert!((kruzkov_flux(&burgers, k, delta, u).unwrap() - closed).abs() < 1e-11);
        }
        // delta -> 0 with u > k recovers (u^2 - k^2) / 2.
        let q = kruzkov_flux(&burgers, 0.2, 1e-9, 0.9).unwrap();
        assert!((q - 0.5 * (0.81 - 0.04)).abs() < 1e-8);
    }

    #[test]
    fn entropy_flux_is_compatible() {
        let f = FluxFunction::buckley_leverett(0.5);
        let e = MollifiedKruzkov::new(0.4, 1e-2).unwrap();
        let step = 1e-5;
        for i in 0..20 {
            let u = 0.05 * i as f64;
            let dq = (e.flux(&f, u + step) - e.flux(&f, u - step)) / (2.0 * step);
            assert!((dq - f.df(u) * e.deta(u)).abs() < 1e-8, "u={u}");
        }
    }

    #[test]
    fn sub_triangles_tile_the_reference_element() {
        for m in 1..6 {
            let tris: Vec<_> = sub_triangles(m).collect();
            assert_eq!(tris.len(), m * m);
            let area: f64 = tris
                .iter()
                .map(|[a, b, c]| 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])))
                .sum();
            assert!((area - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let b = BumpTest { t_center: 0.3, x_center: 0.1, t_radius: 0.2, x_radius: 0.15 };
        let p = [0.35, 0.05];
        let (_, g) = b.eval(p);
        let h = 1e-6;
        let dt = (b.eval([p[0] + h, p[1]]).0 - b.eval([p[0] - h, p[1]]).0) / (2.0 * h);
        let dx = (b.eval([p[0], p[1] + h]).0 - b.eval([p[0], p[1] - h]).0) / (2.0 * h);
        assert!((g[0] - dt).abs() < 1e-6 && (g[1] - dx).abs() < 1e-6);
    }
}
