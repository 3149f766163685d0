//! Physical fluxes, the space-time flux `(u, f(u))` and monotone numerical
//! fluxes on space-time facets.

use crate::error::{Error, Result};
use crate::integrate;
use crate::mesh::TEMPORAL_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhysicalFlux {
    LinearAdvection { speed: f64 },
    Burgers,
    /// `f(u) = u^2 / (u^2 + m (1 - u)^2)` with mobility ratio `m`.
    BuckleyLeverett { mobility: f64 },
}

impl PhysicalFlux {
    fn f(self, u: f64) -> f64 {
        match self {
            PhysicalFlux::LinearAdvection { speed } => speed * u,
            PhysicalFlux::Burgers => 0.5 * u * u,
            PhysicalFlux::BuckleyLeverett { mobility: m } => {
                let w = 1.0 - u;
                u * u / (u * u + m * w * w)
            }
        }
    }

    fn df(self, u: f64) -> f64 {
        match self {
            PhysicalFlux::LinearAdvection { speed } => speed,
            PhysicalFlux::Burgers => u,
            PhysicalFlux::BuckleyLeverett { mobility: m } => {
                let w = 1.0 - u;
                let d = u * u + m * w * w;
                2.0 * m * u * w / (d * d)
            }
        }
    }

    fn d2f(self, u: f64) -> f64 {
        match self {
            PhysicalFlux::LinearAdvection { .. } => 0.0,
            PhysicalFlux::Burgers => 1.0,
            PhysicalFlux::BuckleyLeverett { mobility: m } => {
                let w = 1.0 - u;
                let d = u * u + m * w * w;
                let dd = 2.0 * u - 2.0 * m * w;
                // d/du [2 m u w / d^2]
                2.0 * m * ((w - u) * d - 2.0 * u * w * dd) / (d * d * d)
            }
        }
    }

    /// An antiderivative of `f`, in closed form where one is cheap.
    fn antiderivative(self, u: f64) -> Option<f64> {
        match self {
            PhysicalFlux::LinearAdvection { speed } => Some(0.5 * speed * u * u),
            PhysicalFlux::Burgers => Some(u * u * u / 6.0),
            PhysicalFlux::BuckleyLeverett { .. } => None,
        }
    }

    /// Zeros of `f''`, i.e. the points where `f'` changes monotonicity.
    fn inflections(self) -> Vec<f64> {
        match self {
            PhysicalFlux::LinearAdvection { .. } | PhysicalFlux::Burgers => Vec::new(),
            PhysicalFlux::BuckleyLeverett { .. } => {
                let (lo, hi, n) = (-50.0, 50.0, 200_000);
                let step = (hi - lo) / n as f64;
                let mut out = Vec::new();
                let mut prev = self.d2f(lo);
                for i in 1..=n {
                    let x = lo + i as f64 * step;
                    let cur = self.d2f(x);
                    if prev == 0.0 {
                        out.push(x - step);
                    } else if prev * cur < 0.0 {
                        out.push(bisect(|u| self.d2f(u), x - step, x));
                    }
                    prev = cur;
                }
                out
            }
        }
    }
}

fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scalar flux `f` with an optional linear continuation outside
/// `[u_lo, u_hi]`, which keeps `f` C^1 and `f'` bounded.
#[derive(Debug, Clone)]
pub struct FluxFunction {
    pub kind: PhysicalFlux,
    clamp: Option<(f64, f64)>,
    inflections: Vec<f64>,
}

impl FluxFunction {
    pub fn new(kind: PhysicalFlux) -> Self {
        FluxFunction { kind, clamp: None, inflections: kind.inflections() }
    }

    pub fn linear(speed: f64) -> Self {
        Self::new(PhysicalFlux::LinearAdvection { speed })
    }

    pub fn burgers() -> Self {
        Self::new(PhysicalFlux::Burgers)
    }

    pub fn buckley_leverett(mobility: f64) -> Self {
        Self::new(PhysicalFlux::BuckleyLeverett { mobility })
    }

    pub fn with_clamp(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::arg(format!("invalid clamp interval [{lo}, {hi}]")));
        }
        self.clamp = Some((lo, hi));
        Ok(self)
    }

    /// Default clamp interval for initial data with range `[min, max]`:
    /// the range widened by 10% of its oscillation on each side.
    pub fn with_default_clamp(self, min: f64, max: f64) -> Result<Self> {
        let osc = max - min;
        let margin = if osc > 0.0 { 0.1 * osc } else { 0.1 * max.abs().max(1.0) };
        self.with_clamp(min - margin, max + margin)
    }

    pub fn clamp_interval(&self) -> Option<(f64, f64)> {
        self.clamp
    }

    pub fn f(&self, u: f64) -> f64 {
        match self.clamp {
            Some((lo, _)) if u < lo => self.kind.f(lo) + self.kind.df(lo) * (u - lo),
            Some((_, hi)) if u > hi => self.kind.f(hi) + self.kind.df(hi) * (u - hi),
            _ => self.kind.f(u),
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        self.kind.df(self.clamped(u))
    }

    pub fn d2f(&self, u: f64) -> f64 {
        match self.clamp {
            Some((lo, hi)) if u < lo || u > hi => 0.0,
            _ => self.kind.d2f(u),
        }
    }

    fn clamped(&self, u: f64) -> f64 {
        match self.clamp {
            Some((lo, hi)) => u.clamp(lo, hi),
            None => u,
        }
    }

    /// `sup |f'|` when it is finite (clamped or linear flux).
    pub fn slope_bound(&self) -> Option<f64> {
        match (self.kind, self.clamp) {
            (PhysicalFlux::LinearAdvection { speed }, _) => Some(speed.abs()),
            (_, Some((lo, hi))) => {
                let mut pts = vec![lo, hi];
                pts.extend(self.inflections.iter().copied().filter(|&p| p > lo && p < hi));
                Some(pts.into_iter().map(|p| self.kind.df(p).abs()).fold(0.0, f64::max))
            }
            _ => None,
        }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        match self.kind.antiderivative(0.0) {
            Some(_) => self.primitive(b) - self.primitive(a),
            None => {
                let (lo, hi) = (a.min(b), a.max(b));
                let mut pts = vec![lo, hi];
                if let Some((cl, ch)) = self.clamp {
                    pts.extend([cl, ch].into_iter().filter(|&p| p > lo && p < hi));
                }
                pts.sort_by(f64::total_cmp);
                let s: f64 = pts
                    .windows(2)
                    .map(|w| integrate::adaptive(|u| self.f(u), w[0], w[1], 1e-14))
                    .sum();
                if a < b {
                    s
                } else {
                    -s
                }
            }
        }
    }

    /// Closed-form antiderivative of the (clamped) flux; only for fluxes
    /// with a polynomial base.
    fn primitive(&self, u: f64) -> f64 {
        let k = self.kind;
        let big_f = |v: f64| k.antiderivative(v).expect("polynomial flux");
        let ext = |e: f64, v: f64| {
            let d = v - e;
            big_f(e) + k.f(e) * d + 0.5 * k.df(e) * d * d
        };
        match self.clamp {
            Some((lo, _)) if u < lo => ext(lo, u),
            Some((_, hi)) if u > hi => ext(hi, u),
            _ => big_f(u),
        }
    }

    /// Points in the open interval where `f'` may change monotonicity.
    fn monotone_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo];
        let mut inner: Vec<f64> = self.inflections.iter().copied().filter(|&p| p > lo && p < hi).collect();
        if let Some((cl, ch)) = self.clamp {
            inner.extend([cl, ch].into_iter().filter(|&p| p > lo && p < hi));
        }
        inner.sort_by(f64::total_cmp);
        pts.extend(inner);
        pts.push(hi);
        pts
    }

    /// Solutions of `f'(u) = slope` strictly inside `(lo, hi)`.
    fn slope_preimages(&self, slope: f64, lo: f64, hi: f64) -> Vec<f64> {
        match self.kind {
            PhysicalFlux::LinearAdvection { .. } => Vec::new(),
            PhysicalFlux::Burgers => {
                let inside_clamp = self.clamp.is_none_or(|(cl, ch)| slope > cl && slope < ch);
                if inside_clamp && slope > lo && slope < hi {
                    vec![slope]
                } else {
                    Vec::new()
                }
            }
            PhysicalFlux::BuckleyLeverett { .. } => {
                let g = |u: f64| self.df(u) - slope;
                let breaks = self.monotone_breaks(lo, hi);
                let mut out = Vec::new();
                for w in breaks.windows(2) {
                    let (ga, gb) = (g(w[0]), g(w[1]));
                    if ga * gb < 0.0 {
                        out.push(bisect(g, w[0], w[1]));
                    }
                }
                out
            }
        }
    }
}

/// Space-time flux `f~(u) = (u, f(u))`.
#[derive(Debug, Clone)]
pub struct SpaceTimeFlux {
    pub flux: FluxFunction,
}

impl SpaceTimeFlux {
    pub fn new(flux: FluxFunction) -> Self {
        SpaceTimeFlux { flux }
    }

    /// `f~(u) . nu = u nu_t + f(u) nu_x`.
    #[inline]
    pub fn dot(&self, u: f64, nu: [f64; 2]) -> f64 {
        u * nu[0] + self.flux.f(u) * nu[1]
    }

    #[inline]
    pub fn dot_derivative(&self, u: f64, nu: [f64; 2]) -> f64 {
        nu[0] + self.flux.df(u) * nu[1]
    }

    /// `|f~'(u)| = (1 + f'(u)^2)^(1/2)`.
    pub fn derivative_norm(&self, u: f64) -> f64 {
        (1.0 + self.flux.df(u).powi(2)).sqrt()
    }

    /// Divergence `u_t + f'(u) u_x` for a given state and gradient.
    #[inline]
    pub fn divergence(&self, u: f64, grad: [f64; 2]) -> f64 {
        grad[0] + self.flux.df(u) * grad[1]
    }

    /// `int_a^b f~(xi) . nu dxi`.
    pub fn integral_dot(&self, a: f64, b: f64, nu: [f64; 2]) -> f64 {
        0.5 * (b * b - a * a) * nu[0] + self.flux.integral(a, b) * nu[1]
    }

    /// Stationary points of `xi -> f~(xi) . nu` strictly inside `(lo, hi)`.
    pub fn critical_points(&self, nu: [f64; 2], lo: f64, hi: f64) -> Vec<f64> {
        if nu[1].abs() <= TEMPORAL_TOL || !(lo < hi) {
            return Vec::new();
        }
        self.flux.slope_preimages(-nu[0] / nu[1], lo, hi)
    }

    /// Location and value of `max |d/dxi f~(xi) . nu|` over `[lo, hi]`.
    fn max_abs_slope(&self, nu: [f64; 2], lo: f64, hi: f64) -> (f64, f64) {
        let pts = self.flux.monotone_breaks(lo, hi);
        let mut best = (lo, self.dot_derivative(lo, nu).abs());
        for p in pts.into_iter().skip(1) {
            let v = self.dot_derivative(p, nu).abs();
            if v > best.1 {
                best = (p, v);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    Godunov,
    EngquistOsher,
    LocalLaxFriedrichs,
    /// Upwinding in time; only valid on facets with normal (+-1, 0).
    TemporalUpwind,
    /// Central average. Not monotone; kept as a negative control.
    Central,
}

/// Value and partial derivatives of a numerical flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxEval {
    pub value: f64,
    pub d_owner: f64,
    pub d_neighbor: f64,
}

#[derive(Debug, Clone)]
pub struct NumericalFlux {
    pub kind: FluxKind,
    pub flux: SpaceTimeFlux,
}

impl NumericalFlux {
    pub fn new(kind: FluxKind, flux: FluxFunction) -> Self {
        NumericalFlux { kind, flux: SpaceTimeFlux::new(flux) }
    }

    pub fn eval(&self, a: f64, b: f64, nu: [f64; 2]) -> Result<f64> {
        self.eval_with_derivatives(a, b, nu).map(|e| e.value)
    }

    /// Flux `h(a, b; nu)` with `a` the owner trace and `b` the neighbor trace.
    pub fn eval_with_derivatives(&self, a: f64, b: f64, nu: [f64; 2]) -> Result<FluxEval> {
        let st = &self.flux;
        let g = |u: f64| st.dot(u, nu);
        let dg = |u: f64| st.dot_derivative(u, nu);
        let out = match self.kind {
            FluxKind::TemporalUpwind => {
                if nu[1].abs() > TEMPORAL_TOL || (nu[0].abs() - 1.0).abs() > TEMPORAL_TOL {
                    return Err(Error::Usage(format!(
                        "temporal upwinding requested on a non-temporal facet with normal {nu:?}"
                    )));
                }
                if nu[0] > 0.0 {
                    FluxEval { value: g(a), d_owner: dg(a), d_neighbor: 0.0 }
                } else {
                    FluxEval { value: g(b), d_owner: 0.0, d_neighbor: dg(b) }
                }
            }
            FluxKind::Central => FluxEval {
                value: 0.5 * (g(a) + g(b)),
                d_owner: 0.5 * dg(a),
                d_neighbor: 0.5 * dg(b),
            },
            FluxKind::Godunov => godunov(st, a, b, nu),
            FluxKind::EngquistOsher => {
                let (lo, hi) = (a.min(b), a.max(b));
                let mut pts = vec![lo];
                pts.extend(st.critical_points(nu, lo, hi));
                pts.push(hi);
                let variation: f64 = pts.windows(2).map(|w| (g(w[1]) - g(w[0])).abs()).sum();
                let sign = if b >= a { 1.0 } else { -1.0 };
                FluxEval {
                    value: 0.5 * (g(a) + g(b)) - 0.5 * sign * variation,
                    d_owner: dg(a).max(0.0),
                    d_neighbor: dg(b).min(0.0),
                }
            }
            FluxKind::LocalLaxFriedrichs => {
                let (lo, hi) = (a.min(b), a.max(b));
                let (at, lambda) = st.max_abs_slope(nu, lo, hi);
                // d lambda / d(endpoint) when the maximum sits at an endpoint.
                let slope_of_abs = |u: f64| dg(u).signum() * st.flux.d2f(u) * nu[1];
                let (dl_a, dl_b) = if at == a {
                    (slope_of_abs(a), 0.0)
                } else if at == b {
                    (0.0, slope_of_abs(b))
                } else {
                    (0.0, 0.0)
                };
                let jump = b - a;
                FluxEval {
                    value: 0.5 * (g(a) + g(b)) - 0.5 * lambda * jump,
                    d_owner: 0.5 * dg(a) + 0.5 * lambda - 0.5 * jump * dl_a,
                    d_neighbor: 0.5 * dg(b) - 0.5 * lambda - 0.5 * jump * dl_b,
                }
            }
        };
        Ok(out)
    }

    /// `int_a^b (f~(xi) . nu - h(a, b; nu)) dxi`, the interface dissipation
    /// of an E-flux (nonnegative for monotone fluxes).
    pub fn dissipation(&self, a: f64, b: f64, nu: [f64; 2]) -> Result<f64> {
        let h = self.eval(a, b, nu)?;
        Ok(self.flux.integral_dot(a, b, nu) - h * (b - a))
    }
}

fn godunov(st: &SpaceTimeFlux, a: f64, b: f64, nu: [f64; 2]) -> FluxEval {
    let g = |u: f64| st.dot(u, nu);
    let dg = |u: f64| st.dot_derivative(u, nu);
    if a == b {
        let s = dg(a);
        return if s >= 0.0 {
            FluxEval { value: g(a), d_owner: s, d_neighbor: 0.0 }
        } else {
            FluxEval { value: g(a), d_owner: 0.0, d_neighbor: s }
        };
    }
    let minimize = a < b;
    let better = |cand: f64, best: f64| if minimize { cand < best } else { cand > best };
    // 0 = owner endpoint, 1 = interior critical point, 2 = neighbor endpoint
    let mut best = (g(a), 0u8);
    let (lo, hi) = (a.min(b), a.max(b));
    for c in st.critical_points(nu, lo, hi) {
        let v = g(c);
        if better(v, best.0) {
            best = (v, 1);
        }
    }
    let gb = g(b);
    // An exact tie between the endpoints (states equal up to rounding)
    // must still hand the derivative to the upwind side.
    if better(gb, best.0) || (best.1 == 0 && gb == best.0 && dg(a) < 0.0) {
        best = (gb, 2);
    }
    match best.1 {
        0 => FluxEval { value: best.0, d_owner: dg(a), d_neighbor: 0.0 },
        2 => FluxEval { value: best.0, d_owner: 0.0, d_neighbor: dg(b) },
        _ => FluxEval { value: best.0, d_owner: 0.0, d_neighbor: 0.0 },
    }
}

/// Result of a sampled monotonicity check.
#[derive(Debug, Clone)]
pub struct MonotoneReport {
    pub samples: usize,
    /// Samples where the flux decreased in the owner argument.
    pub owner_violations: usize,
    /// Samples where the flux increased in the neighbor argument.
    pub neighbor_violations: usize,
    /// Most negative observed difference quotient in the owner argument.
    pub worst_owner_slope: f64,
    /// Most positive observed difference quotient in the neighbor argument.
    pub worst_neighbor_slope: f64,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.owner_violations == 0 && self.neighbor_violations == 0
    }
}

/// Default normals used for sampling: axis-aligned spatial normals,
/// diagonals and a few generic directions.
pub fn sample_normals() -> Vec<[f64; 2]> {
    let mut out = vec![[0.0, 1.0], [0.0, -1.0]];
    for k in 0..12 {
        let angle = 0.3 + k as f64 * std::f64::consts::PI / 6.0;
        let nu = [angle.cos(), angle.sin()];
        if nu[1].abs() > 1e-3 {
            out.push(nu);
        }
    }
    out
}

/// Finite-difference sign check of `dh/da >= 0` and `dh/db <= 0` over an
/// `n_samples x n_samples` grid of `[lo, hi]^2` for each normal.
pub fn check_monotone(
    flux: &NumericalFlux,
    (lo, hi): (f64, f64),
    n_samples: usize,
    normals: &[[f64; 2]],
) -> Result<MonotoneReport> {
    if n_samples < 2 {
        return Err(Error::arg("check_monotone needs at least 2 samples per axis"));
    }
    let step = 1e-4 * (hi - lo).abs().max(1e-8);
    let tol = 1e-10;
    let mut report = MonotoneReport {
        samples: 0,
        owner_violations: 0,
        neighbor_violations: 0,
        worst_owner_slope: f64::INFINITY,
        worst_neighbor_slope: f64::NEG_INFINITY,
    };
    let at = |i: usize| lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
    for &nu in normals {
        for i in 0..n_samples {
            for j in 0..n_samples {
                let (a, b) = (at(i), at(j));
                let h0 = flux.eval(a, b, nu)?;
                let da = (flux.eval(a + step, b, nu)? - h0) / step;
                let db = (flux.eval(a, b + step, nu)? - h0) / step;
                report.samples += 1;
                report.worst_owner_slope = report.worst_owner_slope.min(da);
                report.worst_neighbor_slope = report.worst_neighbor_slope.max(db);
                if da < -tol {
                    report.owner_violations += 1;
                }
                if db > tol {
                    report.neighbor_violations += 1;
                }
            }
        }
    }
    Ok(report)
}
