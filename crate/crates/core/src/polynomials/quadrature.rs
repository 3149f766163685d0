use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Highest polynomial order the rule constructors accept.
pub const MAX_ORDER: usize = 60;

/// Points and positive weights on a reference domain, exact for polynomials
/// up to `order`.
#[derive(Debug, Clone)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl<P: Copy> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights mapped to [0, 1].
fn legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n.max(1)).expect("nonzero");
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::arg(format!(
            "quadrature order {order} outside supported range 1..={MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Gauss-Legendre rule on the unit segment [0, 1].
pub fn segment_rule(order: usize) -> Result<QuadratureRule<f64>> {
    check_order(order)?;
    let n = (order + 1).div_ceil(2);
    let (points, weights) = legendre_unit(n).into_iter().unzip();
    Ok(QuadratureRule { points, weights, order })
}

/// Collapsed-coordinate (Duffy) rule on the reference triangle with vertices
/// (0,0), (1,0), (0,1). Coordinates are (xi, eta).
///
/// The map (r, s) -> (r, s(1 - r)) has Jacobian (1 - r), so a total-degree-k
/// integrand becomes degree k + 1 in r and k in s.
pub fn triangle_rule(order: usize) -> Result<QuadratureRule<[f64; 2]>> {
    check_order(order)?;
    let nr = (order + 2).div_ceil(2);
    let ns = (order + 1).div_ceil(2);
    let rs = legendre_unit(nr);
    let ss = legendre_unit(ns);
    let mut points = Vec::with_capacity(nr * ns);
    let mut weights = Vec::with_capacity(nr * ns);
    for &(r, wr) in &rs {
        for &(s, ws) in &ss {
            points.push([r, s * (1.0 - r)]);
            weights.push(wr * ws * (1.0 - r));
        }
    }
    Ok(QuadratureRule { points, weights, order })
}
