use crate::error::{Error, Result};

use super::quadrature::triangle_rule;

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 6;

/// Affine map from the reference triangle (0,0), (1,0), (0,1) onto a physical
/// triangle in (t, x) coordinates.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: [f64; 2],
    /// Column k is the image of the k-th reference axis.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn from_vertices(p: [[f64; 2]; 3]) -> Result<Self> {
        let jac = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = jac.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale || scale == 0.0 {
            return Err(Error::Geometry(format!(
                "degenerate triangle {p:?} (Jacobian determinant {det:e})"
            )));
        }
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Ok(AffineMap { origin: p[0], jac, inv, det })
    }

    pub fn to_physical(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Pulls a reference gradient back to physical space: J^{-T} g.
    #[inline]
    pub fn grad_to_physical(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Orthonormal basis of total-degree-q polynomials on the reference triangle.
///
/// Built from monomials centred at the reference centroid, orthonormalised by
/// two passes of Cholesky against the exactly integrated Gram matrix.
#[derive(Debug, Clone)]
pub struct SimplexBasis {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row i holds the monomial coefficients of basis function i.
    coeffs: Vec<f64>,
}

const CENTROID: f64 = 1.0 / 3.0;

impl SimplexBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::arg(format!(
                "polynomial degree {degree} outside supported range 1..={MAX_DEGREE}"
            )));
        }
        let exponents: Vec<(i32, i32)> = (0..=degree as i32)
            .flat_map(|total| (0..=total).map(move |b| (total - b, b)))
            .collect();
        let n = exponents.len();

        let rule = triangle_rule(2 * degree)?;
        let mut gram = vec![0.0; n * n];
        for (p, w) in rule.iter() {
            let m = monomials(&exponents, p);
            for i in 0..n {
                for j in 0..n {
                    gram[i * n + j] += w * m[i] * m[j];
                }
            }
        }

        let c1 = inverse_cholesky_factor(&gram, n)?;
        // Re-orthonormalise: G2 = C1 G C1^T should already be close to I.
        let g2 = congruence(&c1, &gram, n);
        let c2 = inverse_cholesky_factor(&g2, n)?;
        let coeffs = matmul(&c2, &c1, n);
        Ok(SimplexBasis { degree, exponents, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn eval_into(&self, r: [f64; 2], out: &mut [f64]) {
        let m = monomials(&self.exponents, r);
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.coeffs[i * n..i * n + i + 1];
            *o = row.iter().zip(&m).map(|(c, v)| c * v).sum();
        }
    }

    pub fn eval(&self, r: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(r, &mut out);
        out
    }

    /// Gradients with respect to the reference coordinates.
    pub fn grad_reference(&self, r: [f64; 2]) -> Vec<[f64; 2]> {
        let n = self.dim();
        let dm = monomial_grads(&self.exponents, r);
        (0..n)
            .map(|i| {
                let row = &self.coeffs[i * n..i * n + i + 1];
                row.iter().zip(&dm).fold([0.0, 0.0], |acc, (c, d)| {
                    [acc[0] + c * d[0], acc[1] + c * d[1]]
                })
            })
            .collect()
    }

    /// Physical-space gradients, one row per basis function.
    pub fn eval_grad(&self, r: [f64; 2], map: &AffineMap) -> Vec<[f64; 2]> {
        self.grad_reference(r)
            .into_iter()
            .map(|g| map.grad_to_physical(g))
            .collect()
    }
}

fn monomials(exponents: &[(i32, i32)], r: [f64; 2]) -> Vec<f64> {
    let (a, b) = (r[0] - CENTROID, r[1] - CENTROID);
    exponents.iter().map(|&(i, j)| a.powi(i) * b.powi(j)).collect()
}

fn monomial_grads(exponents: &[(i32, i32)], r: [f64; 2]) -> Vec<[f64; 2]> {
    let (a, b) = (r[0] - CENTROID, r[1] - CENTROID);
    exponents
        .iter()
        .map(|&(i, j)| {
            let da = if i > 0 { f64::from(i) * a.powi(i - 1) * b.powi(j) } else { 0.0 };
            let db = if j > 0 { f64::from(j) * a.powi(i) * b.powi(j - 1) } else { 0.0 };
            [da, db]
        })
        .collect()
}

/// Returns L^{-1} where G = L L^T.
fn inverse_cholesky_factor(g: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Geometry("Gram matrix is not positive definite".into()));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // Forward substitution column by column.
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[i * n + k] * inv[k * n + col];
            }
            inv[i * n + col] = s / l[i * n + i];
        }
    }
    Ok(inv)
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    c
}

/// C G C^T.
fn congruence(c: &[f64], g: &[f64], n: usize) -> Vec<f64> {
    let cg = matmul(c, g, n);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| cg[i * n + k] * c[j * n + k]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mass_matrix(basis: &SimplexBasis) -> Vec<f64> {
        let n = basis.dim();
        let rule = triangle_rule(2 * basis.degree() + 2).unwrap();
        let mut m = vec![0.0; n * n];
        for (p, w) in rule.iter() {
            let v = basis.eval(p);
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += w * v[i] * v[j];
                }
            }
        }
        m
    }

    #[test]
    fn orthonormal_for_all_degrees() {
        for q in 1..=4 {
            let basis = SimplexBasis::new(q).unwrap();
            assert_eq!(basis.dim(), (q + 1) * (q + 2) / 2);
            let n = basis.dim();
            let m = mass_matrix(&basis);
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (m[i * n + j] - target).abs() < 1e-12,
                        "q={q} M[{i}][{j}] = {}",
                        m[i * n + j]
                    );
                }
            }
        }
    }

    /// Classical Gram-Schmidt of {1, xi, eta} by quadrature, written
    /// independently of the Cholesky construction.
    #[test]
    fn linear_basis_matches_gram_schmidt() {
        let rule = triangle_rule(4).unwrap();
        let ip = |f: &dyn Fn([f64; 2]) -> f64, g: &dyn Fn([f64; 2]) -> f64| -> f64 {
            rule.iter().map(|(p, w)| w * f(p) * g(p)).sum()
        };
        let one = |_: [f64; 2]| 1.0;
        let n0 = ip(&one, &one).sqrt();
        let e0 = move |p: [f64; 2]| one(p) / n0;
        let xi = |p: [f64; 2]| p[0];
        let c10 = ip(&xi, &e0);
        let u1 = move |p: [f64; 2]| xi(p) - c10 * e0(p);
        let n1 = ip(&u1, &u1).sqrt();
        let e1 = move |p: [f64; 2]| u1(p) / n1;

        let basis = SimplexBasis::new(1).unwrap();
        let c = [1.0 / 3.0, 1.0 / 3.0];
        let v = basis.eval(c);
        assert!((v[0] - 2.0_f64.sqrt()).abs() < 1e-13);
        for p in [[0.1, 0.2], [0.7, 0.1], c] {
            let v = basis.eval(p);
            assert!((v[0] - e0(p)).abs() < 1e-13);
            // The second mode is the xi-direction up to sign.
            assert!((v[1].abs() - e1(p).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let basis = SimplexBasis::new(3).unwrap();
        let map = AffineMap::from_vertices([[0.0, 0.0], [0.3, 0.1], [0.05, 0.4]]).unwrap();
        let step = 1e-5;
        for r in [[0.2, 0.3], [0.6, 0.1], [0.1, 0.1]] {
            let p = map.to_physical(r);
            let g = basis.eval_grad(r, &map);
            for dir in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[dir] += step;
                pm[dir] -= step;
                let vp = basis.eval(map.to_reference(pp));
                let vm = basis.eval(map.to_reference(pm));
                for i in 0..basis.dim() {
                    let fd = (vp[i] - vm[i]) / (2.0 * step);
                    assert!((g[i][dir] - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "{i} {dir}");
                }
            }
        }
    }

    #[test]
    fn constant_mode_has_zero_gradient() {
        let basis = SimplexBasis::new(2).unwrap();
        let map = AffineMap::from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let g = basis.eval_grad([0.25, 0.25], &map);
        assert_eq!(g[0], [0.0, 0.0]);
    }

    #[test]
    fn projected_coordinate_has_unit_x_gradient() {
        let basis = SimplexBasis::new(1).unwrap();
        let map = AffineMap::from_vertices([[0.0, 1.0], [0.5, 1.2], [0.1, 1.6]]).unwrap();
        // L2-project v(t, x) = x onto the basis.
        let rule = triangle_rule(4).unwrap();
        let mut c = vec![0.0; basis.dim()];
        for (r, w) in rule.iter() {
            let x = map.to_physical(r)[1];
            for (ci, phi) in c.iter_mut().zip(basis.eval(r)) {
                *ci += w * x * phi;
            }
        }
        for r in [[0.2, 0.2], [0.9, 0.05]] {
            let g = basis.eval_grad(r, &map);
            let gt: f64 = c.iter().zip(&g).map(|(ci, gi)| ci * gi[0]).sum();
            let gx: f64 = c.iter().zip(&g).map(|(ci, gi)| ci * gi[1]).sum();
            assert!(gt.abs() < 1e-12 && (gx - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_map_is_rejected() {
        assert!(AffineMap::from_vertices([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
    }

    #[test]
    fn degree_bounds() {
        assert!(SimplexBasis::new(0).is_err());
        assert!(SimplexBasis::new(MAX_DEGREE + 1).is_err());
    }
}
