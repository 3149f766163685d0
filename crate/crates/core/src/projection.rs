//! Element-local H1 projection: the Neumann problem
//! `int_k grad(P g - g) . grad w = 0` for all `w`, closed by the mean
//! constraint `int_k (P g - g) = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polynomials::{AffineMap, QuadratureRule, SimplexBasis};

/// Projects `g` onto `P^q(k)` in the element's orthonormal basis.
///
/// `g` returns the value and physical gradient at a physical point; `rule`
/// must integrate `grad g . grad phi_i` accurately (exactly for polynomial g).
pub fn h1_project<G>(basis: &SimplexBasis, map: &AffineMap, rule: &QuadratureRule<[f64; 2]>, g: G) -> Result<Vec<f64>>
where
    G: Fn([f64; 2]) -> (f64, [f64; 2]),
{
    let d = basis.dim();
    let det = map.det.abs();
    // phi_0 is constant and every other mode has zero mean, so the mean
    // constraint fixes c_0 alone and the gradient equations fix the rest.
    let mut mean = 0.0;
    let mut phi0_sq = 0.0;
    let mut stiff = DMatrix::<f64>::zeros(d - 1, d - 1);
    let mut rhs = DVector::<f64>::zeros(d - 1);
    for (r, w) in rule.iter() {
        let phi = basis.eval(r);
        let grads = basis.eval_grad(r, map);
        let (gv, gg) = g(map.to_physical(r));
        let w = w * det;
        mean += w * gv * phi[0];
        phi0_sq += w * phi[0] * phi[0];
        for i in 1..d {
            rhs[i - 1] += w * (gg[0] * grads[i][0] + gg[1] * grads[i][1]);
            for j in 1..d {
                stiff[(i - 1, j - 1)] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
    }
    let chol = stiff
        .cholesky()
        .ok_or_else(|| Error::Geometry("element stiffness matrix is not positive definite".into()))?;
    let rest = chol.solve(&rhs);
    let mut out = Vec::with_capacity(d);
    out.push(mean / phi0_sq);
    out.extend(rest.iter());
    Ok(out)
}
