//! Randomised probe of the shock-capturing coercivity constant
//! `sup ||v||_inf^(p-2) int |grad v|^2 / int grad v . grad P(v^(p-1))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polynomials::{triangle_rule, AffineMap, QuadratureRule, SimplexBasis};
use crate::projection::h1_project;

/// Ratios with a denominator at or below this are skipped.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;
/// Barycentric lattice resolution for the sup-norm.
const LATTICE: usize = 48;
/// Smallest interior angle accepted for a random element.
const MIN_ANGLE_DEG: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityProbe {
    pub q: usize,
    pub p: usize,
    pub trials: usize,
    /// Trials whose denominator fell below the floor.
    pub skipped: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Maximum ratio with every element shrunk by 1/2 about its centroid.
    pub scaled_max_ratio: f64,
    /// `|scaled_max_ratio - max_ratio| / max_ratio`.
    pub drift: f64,
    /// Smallest denominator seen over both scales.
    pub min_denominator: f64,
}

struct Sample {
    ratio: Option<f64>,
    denominator: f64,
}

fn random_element(rng: &mut ChaCha8Rng) -> [[f64; 2]; 3] {
    loop {
        let h = rng.random_range(0.05..1.0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let centre = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let mut v = [[0.0; 2]; 3];
        for (i, p) in v.iter_mut().enumerate() {
            let a = theta + i as f64 * std::f64::consts::TAU / 3.0;
            let r = h * rng.random_range(0.7..1.3);
            let a = a + rng.random_range(-0.3..0.3);
            *p = [centre[0] + r * a.cos(), centre[1] + r * a.sin()];
        }
        if min_angle(&v) >= MIN_ANGLE_DEG.to_radians() {
            return v;
        }
    }
}

fn min_angle(v: &[[f64; 2]; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            let (u, w) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
            let cos = (u[0] * w[0] + u[1] * w[1]) / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (w[0] * w[0] + w[1] * w[1]).sqrt());
            cos.clamp(-1.0, 1.0).acos()
        })
        .fold(f64::INFINITY, f64::min)
}

fn shrink(v: &[[f64; 2]; 3], factor: f64) -> [[f64; 2]; 3] {
    let c = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
    v.map(|p| [c[0] + factor * (p[0] - c[0]), c[1] + factor * (p[1] - c[1])])
}

fn eval(basis: &SimplexBasis, map: &AffineMap, c: &[f64], r: [f64; 2]) -> (f64, [f64; 2]) {
    let v = basis.eval(r).iter().zip(c).map(|(a, b)| a * b).sum();
    let g = basis.eval_grad(r, map).iter().zip(c).fold([0.0, 0.0], |a, (g, ci)| [a[0] + ci * g[0], a[1] + ci * g[1]]);
    (v, g)
}

fn sup_norm(basis: &SimplexBasis, c: &[f64]) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..=LATTICE {
        for j in 0..=(LATTICE - i) {
            let r = [i as f64 / LATTICE as f64, j as f64 / LATTICE as f64];
            m = m.max(basis.eval(r).iter().zip(c).map(|(a, b)| a * b).sum::<f64>().abs());
        }
    }
    m
}

fn sample(basis: &SimplexBasis, rule: &QuadratureRule<[f64; 2]>, vertices: [[f64; 2]; 3], c: &[f64], p: usize) -> Result<Sample> {
    let map = AffineMap::from_vertices(vertices)?;
    let det = map.det.abs();
    let e = (p - 2) as i32;
    let power = |x: [f64; 2]| {
        let (v, g) = eval(basis, &map, c, map.to_reference(x));
        let s = (p - 1) as f64 * v.powi(e);
        (v.powi(e + 1), [s * g[0], s * g[1]])
    };
    let proj = h1_project(basis, &map, rule, power)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, w) in rule.iter() {
        let (_, gv) = eval(basis, &map, c, r);
        let (_, gp) = eval(basis, &map, &proj, r);
        num += w * det * (gv[0] * gv[0] + gv[1] * gv[1]);
        den += w * det * (gv[0] * gp[0] + gv[1] * gp[1]);
    }
    let num = sup_norm(basis, c).powi(e) * num;
    Ok(Sample { ratio: (den > DENOMINATOR_FLOOR).then(|| num / den), denominator: den })
}

/// Runs `trials` random `(v, k)` pairs of degree `q` for even `p >= 2`, and
/// repeats each pair with `k` shrunk by 1/2 (same reference coefficients).
pub fn sc_coercivity_probe(q: usize, p: usize, trials: usize, seed: u64) -> Result<CoercivityProbe> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::arg(format!("p = {p} must be an even integer >= 2")));
    }
    if trials == 0 {
        return Err(Error::arg("need at least one trial"));
    }
    let basis = SimplexBasis::new(q)?;
    // grad v . grad P(v^(p-1)) has degree q p - 2; v^(p-1) itself q (p - 1).
    let rule = triangle_rule(q * p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CoercivityProbe {
        q,
        p,
        trials,
        skipped: 0,
        max_ratio: 0.0,
        min_ratio: f64::INFINITY,
        scaled_max_ratio: 0.0,
        drift: 0.0,
        min_denominator: f64::INFINITY,
    };
    for _ in 0..trials {
        let vertices = random_element(&mut rng);
        let c: Vec<f64> = (0..basis.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let full = sample(&basis, &rule, vertices, &c, p)?;
        let half = sample(&basis, &rule, shrink(&vertices, 0.5), &c, p)?;
        out.min_denominator = out.min_denominator.min(full.denominator).min(half.denominator);
        match full.ratio {
            Some(r) => {
                out.max_ratio = out.max_ratio.max(r);
                out.min_ratio = out.min_ratio.min(r);
            }
            None => out.skipped += 1,
        }
        if let Some(r) = half.ratio {
            out.scaled_max_ratio = out.scaled_max_ratio.max(r);
        }
    }
    out.drift = if out.max_ratio > 0.0 { (out.scaled_max_ratio - out.max_ratio).abs() / out.max_ratio } else { 0.0 };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_ratio_is_one() {
        for q in 1..=3 {
            let r = sc_coercivity_probe(q, 2, 100, 7).unwrap();
            assert!((r.max_ratio - 1.0).abs() < 1e-12 && (r.min_ratio - 1.0).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn odd_p_is_rejected() {
        assert!(sc_coercivity_probe(1, 3, 10, 0).is_err());
        assert!(sc_coercivity_probe(1, 0, 10, 0).is_err());
    }

    #[test]
    fn constant_v_is_skipped() {
        let basis = SimplexBasis::new(2).unwrap();
        let rule = triangle_rule(8).unwrap();
        let c = [0.4, 0.0, 0.0, 0.0, 0.0, 0.0];
        let s = sample(&basis, &rule, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &c, 4).unwrap();
        assert!(s.ratio.is_none() && s.denominator.abs() < 1e-14);
    }

    #[test]
    fn denominator_matches_closed_form() {
        // P is the H1 projection, so int grad v . grad P(v^(p-1)) equals
        // (p - 1) int v^(p-2) |grad v|^2 for v in the space.
        let basis = SimplexBasis::new(2).unwrap();
        let rule = triangle_rule(8).unwrap();
        let verts = [[0.2, 0.1], [1.1, 0.3], [0.4, 0.9]];
        let map = AffineMap::from_vertices(verts).unwrap();
        let c = [0.3, -0.5, 0.2, 0.7, -0.1, 0.4];
        let s = sample(&basis, &rule, verts, &c, 4).unwrap();
        let direct: f64 = rule
            .iter()
            .map(|(r, w)| {
                let (v, g) = eval(&basis, &map, &c, r);
                w * map.det.abs() * 3.0 * v * v * (g[0] * g[0] + g[1] * g[1])
            })
            .sum();
        assert!((s.denominator - direct).abs() < 1e-12 * direct.abs().max(1.0), "{} vs {direct}", s.denominator);
    }
}
