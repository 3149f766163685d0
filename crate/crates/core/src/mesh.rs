//! Simplicial triangulations of one space-time slab `[t_lo, t_hi] x [x_left, x_right]`.
//!
//! Coordinates are ordered `(t, x)` everywhere; normals are `(nu_t, nu_x)`.
//! Elements are numbered column by column so that the slab Jacobian is
//! block-banded.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::polynomials::{AffineMap, QuadratureRule};

/// Tolerance used to recognise temporal facets (normal = (+-1, 0)).
pub const TEMPORAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: f64,
}

impl SpaceTimePoint {
    pub fn as_array(self) -> [f64; 2] {
        [self.t, self.x]
    }
}

#[derive(Debug, Clone)]
pub struct TriElement {
    /// Counter-clockwise in the (t, x) plane.
    pub vertices: [usize; 3],
    pub slab: usize,
    /// Index of the spatial cell the element lives in.
    pub column: usize,
    pub diameter: f64,
    pub area: f64,
    pub perimeter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    Internal,
    TemporalInterface,
    SpatialBoundary,
}

#[derive(Debug, Clone)]
pub struct Facet {
    pub endpoints: [usize; 2],
    pub owner: usize,
    pub neighbor: Option<usize>,
    /// Unit outward normal with respect to the owner.
    pub normal: [f64; 2],
    pub kind: FacetKind,
    pub length: f64,
}

impl Facet {
    /// Temporal facet at the bottom of the slab (normal (-1, 0)).
    pub fn is_slab_bottom(&self) -> bool {
        self.kind == FacetKind::TemporalInterface && self.normal[0] < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Owner,
    Neighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pattern {
    /// Four triangles per cell around the cell centroid.
    CrissCross,
    /// Two triangles per cell split along the (t_lo, x_i)-(t_hi, x_{i+1}) diagonal.
    #[default]
    UniformDiagonal,
}

#[derive(Debug, Clone)]
pub struct SlabMesh {
    pub points: Vec<SpaceTimePoint>,
    pub elements: Vec<TriElement>,
    pub facets: Vec<Facet>,
    /// Facet id of local edge k (vertices k, k+1) of each element.
    pub element_facets: Vec<[usize; 3]>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub n_x: usize,
    pub h: f64,
    /// Bottom temporal facets ordered by column.
    pub bottom_facets: Vec<usize>,
    /// Top temporal facets ordered by column.
    pub top_facets: Vec<usize>,
    maps: Vec<AffineMap>,
}

fn dist(a: SpaceTimePoint, b: SpaceTimePoint) -> f64 {
    (a.t - b.t).hypot(a.x - b.x)
}

/// Builds a conforming triangulation of one slab with `n_x` uniform spatial cells.
pub fn build_slab_mesh(
    x_left: f64,
    x_right: f64,
    t_lo: f64,
    t_hi: f64,
    n_x: usize,
    pattern: Pattern,
) -> Result<SlabMesh> {
    SlabMesh::build(x_left, x_right, t_lo, t_hi, n_x, pattern, 0)
}

impl SlabMesh {
    pub fn build(
        x_left: f64,
        x_right: f64,
        t_lo: f64,
        t_hi: f64,
        n_x: usize,
        pattern: Pattern,
        slab: usize,
    ) -> Result<Self> {
        let finite = [x_left, x_right, t_lo, t_hi].iter().all(|v| v.is_finite());
        if !finite || x_left >= x_right || t_lo >= t_hi || n_x == 0 {
            return Err(Error::arg(format!(
                "invalid slab bounds x=[{x_left}, {x_right}], t=[{t_lo}, {t_hi}], n_x={n_x}"
            )));
        }
        let dx = (x_right - x_left) / n_x as f64;
        let xs: Vec<f64> = (0..=n_x)
            .map(|i| if i == n_x { x_right } else { x_left + i as f64 * dx })
            .collect();

        let mut points = Vec::new();
        for &x in &xs {
            points.push(SpaceTimePoint { t: t_lo, x });
        }
        for &x in &xs {
            points.push(SpaceTimePoint { t: t_hi, x });
        }
        let bl = |i: usize| i;
        let top = |i: usize| n_x + 1 + i;

        let mut tris: Vec<([usize; 3], usize)> = Vec::new();
        for i in 0..n_x {
            let (a, b, c, d) = (bl(i), bl(i + 1), top(i + 1), top(i));
            match pattern {
                Pattern::UniformDiagonal => {
                    tris.push(([a, b, c], i));
                    tris.push(([a, c, d], i));
                }
                Pattern::CrissCross => {
                    let m = points.len();
                    points.push(SpaceTimePoint {
                        t: 0.5 * (t_lo + t_hi),
                        x: 0.5 * (xs[i] + xs[i + 1]),
                    });
                    tris.push(([a, b, m], i));
                    tris.push(([b, c, m], i));
                    tris.push(([c, d, m], i));
                    tris.push(([d, a, m], i));
                }
            }
        }
        Self::from_triangles(points, &tris, slab, (t_lo, t_hi), (x_left, x_right), n_x)
    }

    /// Assembles elements and facet connectivity from raw triangles. Each
    /// triangle carries its column index.
    pub fn from_triangles(
        points: Vec<SpaceTimePoint>,
        tris: &[([usize; 3], usize)],
        slab: usize,
        (t_lo, t_hi): (f64, f64),
        (x_left, x_right): (f64, f64),
        n_x: usize,
    ) -> Result<Self> {
        let mut elements = Vec::with_capacity(tris.len());
        let mut maps = Vec::with_capacity(tris.len());
        for &(v, column) in tris {
            let p = v.map(|i| points[i]);
            let signed = 0.5 * ((p[1].t - p[0].t) * (p[2].x - p[0].x) - (p[2].t - p[0].t) * (p[1].x - p[0].x));
            let vertices = if signed < 0.0 { [v[0], v[2], v[1]] } else { v };
            let p = vertices.map(|i| points[i]);
            let map = AffineMap::from_vertices(p.map(SpaceTimePoint::as_array))?;
            let edges = [dist(p[0], p[1]), dist(p[1], p[2]), dist(p[2], p[0])];
            elements.push(TriElement {
                vertices,
                slab,
                column,
                diameter: edges.iter().copied().fold(0.0, f64::max),
                area: 0.5 * map.det.abs(),
                perimeter: edges.iter().sum(),
            });
            maps.push(map);
        }

        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = vec![[usize::MAX; 3]; elements.len()];
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (el.vertices[k], el.vertices[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&f) = edge_index.get(&key) {
                    let facet: &mut Facet = &mut facets[f];
                    if facet.neighbor.is_some() {
                        return Err(Error::Geometry(format!("edge {key:?} shared by more than two elements")));
                    }
                    facet.neighbor = Some(e);
                    element_facets[e][k] = f;
                } else {
                    let (pa, pb) = (points[a], points[b]);
                    let length = dist(pa, pb);
                    // Outward normal of a counter-clockwise edge: (dx, -dt) / |d|.
                    let normal = [(pb.x - pa.x) / length, -(pb.t - pa.t) / length];
                    edge_index.insert(key, facets.len());
                    element_facets[e][k] = facets.len();
                    facets.push(Facet {
                        endpoints: [a, b],
                        owner: e,
                        neighbor: None,
                        normal,
                        kind: FacetKind::Internal,
                        length,
                    });
                }
            }
        }
        for f in &mut facets {
            if f.neighbor.is_none() {
                f.kind = if f.normal[1].abs() <= TEMPORAL_TOL {
                    FacetKind::TemporalInterface
                } else {
                    FacetKind::SpatialBoundary
                };
            }
        }

        let column_of = |f: &Facet| elements[f.owner].column;
        let mut bottom: Vec<usize> = (0..facets.len()).filter(|&i| facets[i].is_slab_bottom()).collect();
        let mut top: Vec<usize> = (0..facets.len())
            .filter(|&i| facets[i].kind == FacetKind::TemporalInterface && facets[i].normal[0] > 0.0)
            .collect();
        bottom.sort_by_key(|&i| column_of(&facets[i]));
        top.sort_by_key(|&i| column_of(&facets[i]));

        let h = elements.iter().map(|e| e.diameter).fold(0.0, f64::max);
        Ok(SlabMesh {
            points,
            elements,
            facets,
            element_facets,
            t_lo,
            t_hi,
            x_left,
            x_right,
            n_x,
            h,
            bottom_facets: bottom,
            top_facets: top,
            maps,
        })
    }

    pub fn map(&self, element: usize) -> &AffineMap {
        &self.maps[element]
    }

    pub fn dx(&self) -> f64 {
        (self.x_right - self.x_left) / self.n_x as f64
    }

    /// Spatial cell containing `x` (clamped to the domain).
    pub fn column_of(&self, x: f64) -> usize {
        let c = ((x - self.x_left) / self.dx()).floor();
        (c.max(0.0) as usize).min(self.n_x - 1)
    }

    /// Element owning the top temporal facet of each column.
    pub fn top_element(&self, column: usize) -> usize {
        self.facets[self.top_facets[column]].owner
    }

    pub fn bottom_element(&self, column: usize) -> usize {
        self.facets[self.bottom_facets[column]].owner
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Same triangulation translated in time so that it starts at `t_lo`.
    pub fn shifted(&self, t_lo: f64, slab: usize) -> Result<Self> {
        let dt = t_lo - self.t_lo;
        let points = self.points.iter().map(|p| SpaceTimePoint { t: p.t + dt, x: p.x }).collect();
        let tris: Vec<_> = self.elements.iter().map(|e| (e.vertices, e.column)).collect();
        Self::from_triangles(
            points,
            &tris,
            slab,
            (self.t_lo + dt, self.t_hi + dt),
            (self.x_left, self.x_right),
            self.n_x,
        )
    }

    /// Quadrature points of a facet expressed in the reference coordinates of
    /// one of its two elements, with physical weights (summing to the facet
    /// length). Points are ordered along the facet, so owner and neighbor
    /// lists coincide physically entry by entry.
    pub fn facet_quadrature_trace(
        &self,
        facet: usize,
        side: Side,
        rule: &QuadratureRule<f64>,
    ) -> Result<Vec<([f64; 2], f64)>> {
        let f = &self.facets[facet];
        let element = match side {
            Side::Owner => f.owner,
            Side::Neighbor => f.neighbor.ok_or_else(|| {
                Error::Usage(format!("facet {facet} ({:?}) has no neighbor element", f.kind))
            })?,
        };
        let map = &self.maps[element];
        let (pa, pb) = (self.points[f.endpoints[0]], self.points[f.endpoints[1]]);
        Ok(rule
            .iter()
            .map(|(s, w)| {
                let p = [pa.t + s * (pb.t - pa.t), pa.x + s * (pb.x - pa.x)];
                (map.to_reference(p), w * f.length)
            })
            .collect())
    }

    /// Physical points of a facet for a segment rule, ordered along the facet.
    pub fn facet_points(&self, facet: usize, rule: &QuadratureRule<f64>) -> Vec<[f64; 2]> {
        let f = &self.facets[facet];
        let (pa, pb) = (self.points[f.endpoints[0]], self.points[f.endpoints[1]]);
        rule.points
            .iter()
            .map(|&s| [pa.t + s * (pb.t - pa.t), pa.x + s * (pb.x - pa.x)])
            .collect()
    }

    /// Writes `point <id> <t> <x>` and `tri <id> <v0> <v1> <v2>` records.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            writeln!(w, "point {i} {:.17e} {:.17e}", p.t, p.x)?;
        }
        for (i, e) in self.elements.iter().enumerate() {
            writeln!(w, "tri {i} {} {} {}", e.vertices[0], e.vertices[1], e.vertices[2])?;
        }
        Ok(())
    }
}

/// Min and max over elements of `h_k |dk| / |k|`.
pub fn shape_regularity(mesh: &SlabMesh) -> (f64, f64) {
    mesh.elements
        .iter()
        .map(|e| e.diameter * e.perimeter / e.area)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}
