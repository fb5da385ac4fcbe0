//! Triangulated hold-all domain: structured construction, boundary tagging,
//! adjacency and point location.
//!
//! Conventions:
//! - triangles are counterclockwise (strictly positive signed area);
//! - local edge `k` of a triangle joins local vertices `k` and `(k+1)%3`;
//! - the boundary is the set of edges incident to exactly one triangle;
//! - boundary edges keep the orientation induced by their triangle.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Disjoint boundary parts: clamped, loaded, and free (optimizable).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    GammaD,
    GammaN,
    GammaFree,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    /// Vertex indices, oriented as in the owning triangle.
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// One boundary-tagging rule: edges whose midpoint satisfies the predicate
/// receive `tag`. Rules are applied in order; the first match wins.
pub struct TagRule {
    pub tag: BoundaryTag,
    pub predicate: Box<dyn Fn(Vec2) -> bool>,
}

impl TagRule {
    pub fn new(tag: BoundaryTag, predicate: impl Fn(Vec2) -> bool + 'static) -> Self {
        TagRule { tag, predicate: Box::new(predicate) }
    }
}

/// Diagonal orientation used when splitting structured quads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalSplit {
    /// Every quad is split along its bottom-left to top-right diagonal.
    #[default]
    Fixed,
    /// Diagonal alternates with the parity of the quad indices; the resulting
    /// mesh is exactly mirror-symmetric for even subdivision counts.
    Alternating,
}

/// Inclusion tolerance for point location (absolute, in barycentric units).
pub const LOCATE_TOL: f64 = 1e-9;

/// Immutable triangulation of the hold-all domain.
pub struct TriMesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    /// `neighbors[t][k]` is the triangle sharing edge `k` of `t`, if any.
    neighbors: Vec<[Option<usize>; 3]>,
    areas: Vec<f64>,
}

impl TriMesh {
    /// Builds a mesh from raw cells, deriving adjacency and the (untagged)
    /// boundary. Fails if any triangle is degenerate or inverted.
    pub fn from_cells(vertices: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidGeometry("triangle vertex index out of range"));
            }
            let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let area = 0.5 * (b - a).cross(c - a);
            if !(area > 0.0) {
                return Err(Error::InvalidGeometry(
                    "triangle with non-positive signed area (must be counterclockwise)",
                ));
            }
            areas.push(area);
        }

        // Edge incidence via a sorted key list: (min, max, triangle, local edge).
        let mut keyed: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                keyed.push((u.min(v), u.max(v), t, k));
            }
        }
        keyed.sort_unstable();

        let mut neighbors = vec![[None; 3]; triangles.len()];
        let mut owner = vec![false; keyed.len()];
        let mut i = 0;
        while i < keyed.len() {
            let j = i + 1;
            if j < keyed.len() && keyed[j].0 == keyed[i].0 && keyed[j].1 == keyed[i].1 {
                if j + 1 < keyed.len() && keyed[j + 1].0 == keyed[i].0 && keyed[j + 1].1 == keyed[i].1
                {
                    return Err(Error::InvalidGeometry("edge shared by more than two triangles"));
                }
                let (_, _, ta, ka) = keyed[i];
                let (_, _, tb, kb) = keyed[j];
                neighbors[ta][ka] = Some(tb);
                neighbors[tb][kb] = Some(ta);
                i += 2;
            } else {
                owner[i] = true;
                i += 1;
            }
        }

        // Boundary edges in deterministic (triangle, local edge) order.
        let mut bnd: Vec<(usize, usize)> = keyed
            .iter()
            .zip(owner.iter())
            .filter(|(_, &own)| own)
            .map(|(&(_, _, t, k), _)| (t, k))
            .collect();
        bnd.sort_unstable();
        let boundary_edges = bnd
            .into_iter()
            .map(|(t, k)| BoundaryEdge {
                vertices: [triangles[t][k], triangles[t][(k + 1) % 3]],
                tag: BoundaryTag::GammaFree,
            })
            .collect();

        Ok(TriMesh { vertices, triangles, boundary_edges, neighbors, areas })
    }

    /// Structured mesh of a `width x height` box with the default fixed
    /// diagonal split; all boundary edges start as GammaFree.
    pub fn build_structured(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::build_structured_at(Vec2::ZERO, width, height, nx, ny, DiagonalSplit::Fixed)
    }

    /// Structured mesh with explicit origin and diagonal rule.
    pub fn build_structured_at(
        origin: Vec2,
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        split: DiagonalSplit,
    ) -> Result<Self> {
        if !(width > 0.0) || !(height > 0.0) {
            return Err(Error::InvalidGeometry("box dimensions must be positive"));
        }
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidGeometry("subdivision counts must be at least 1"));
        }
        let (dx, dy) = (width / nx as f64, height / ny as f64);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(origin + Vec2::new(i as f64 * dx, j as f64 * dy));
            }
        }
        let at = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10) = (at(i, j), at(i + 1, j));
                let (v01, v11) = (at(i, j + 1), at(i + 1, j + 1));
                let flip = matches!(split, DiagonalSplit::Alternating) && (i + j) % 2 == 1;
                if flip {
                    triangles.push([v00, v10, v01]);
                    triangles.push([v10, v11, v01]);
                } else {
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                }
            }
        }
        Self::from_cells(vertices, triangles)
    }

    /// Union of two meshes, snapping coincident vertices within `snap_tol`.
    /// Edges on the glued interface become interior; the boundary is rebuilt.
    pub fn merge(a: &TriMesh, b: &TriMesh, snap_tol: f64) -> Result<Self> {
        let mut vertices = a.vertices.clone();
        // Sort a's vertex indices by x to narrow the snap search.
        let mut by_x: Vec<usize> = (0..a.vertices.len()).collect();
        by_x.sort_by(|&p, &q| a.vertices[p].x.total_cmp(&a.vertices[q].x));
        let xs: Vec<f64> = by_x.iter().map(|&p| a.vertices[p].x).collect();

        let mut remap = Vec::with_capacity(b.vertices.len());
        for &p in &b.vertices {
            let lo = xs.partition_point(|&x| x < p.x - snap_tol);
            let hi = xs.partition_point(|&x| x <= p.x + snap_tol);
            let hit = by_x[lo..hi]
                .iter()
                .copied()
                .find(|&q| a.vertices[q].dist(p) <= snap_tol);
            remap.push(match hit {
                Some(q) => q,
                None => {
                    vertices.push(p);
                    vertices.len() - 1
                }
            });
        }
        let mut triangles = a.triangles.clone();
        triangles.extend(
            b.triangles
                .iter()
                .map(|tri| [remap[tri[0]], remap[tri[1]], remap[tri[2]]]),
        );
        Self::from_cells(vertices, triangles)
    }

    /// Re-tags the boundary: every edge gets the first rule matching its
    /// midpoint, or GammaFree when none matches.
    pub fn tag_boundary(mut self, rules: &[TagRule]) -> Self {
        for edge in &mut self.boundary_edges {
            let mid = (self.vertices[edge.vertices[0]] + self.vertices[edge.vertices[1]]) * 0.5;
            edge.tag = rules
                .iter()
                .find(|r| (r.predicate)(mid))
                .map(|r| r.tag)
                .unwrap_or(BoundaryTag::GammaFree);
        }
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, v: usize) -> Vec2 {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) / 3.0
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        self.vertices[edge.vertices[0]].dist(self.vertices[edge.vertices[1]])
    }

    /// Total length of boundary edges carrying `tag`.
    pub fn boundary_measure(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.edge_length(e))
            .sum()
    }

    /// Gradients of the three P1 shape functions on triangle `t`.
    pub fn shape_gradients(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangle_points(t);
        let inv_2a = 1.0 / (2.0 * self.areas[t]);
        [
            (c - b).perp() * inv_2a,
            (a - c).perp() * inv_2a,
            (b - a).perp() * inv_2a,
        ]
    }

    /// Smallest edge length over all triangles.
    pub fn min_cell_size(&self) -> f64 {
        let mut h = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            h = h.min(a.dist(b)).min(b.dist(c)).min(c.dist(a));
        }
        h
    }

    /// Largest edge length (cell diameter) over all triangles.
    pub fn max_cell_diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            h = h.max(a.dist(b)).max(b.dist(c)).max(c.dist(a));
        }
        h
    }

    /// Lumped vertex areas: one third of the incident triangle areas.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut va = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let third = self.areas[t] / 3.0;
            for &v in tri {
                va[v] += third;
            }
        }
        va
    }

    /// Barycentric coordinates of `p` in triangle `t` (sum exactly 1).
    pub fn barycentric(&self, t: usize, p: Vec2) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let inv_2a = 1.0 / (2.0 * self.areas[t]);
        let wa = (b - p).cross(c - p) * inv_2a;
        let wb = (c - p).cross(a - p) * inv_2a;
        [wa, wb, 1.0 - wa - wb]
    }

    /// Locates `p` by walking across triangle neighbors from `hint`, with a
    /// brute-force sweep as fallback. Returns the containing triangle and
    /// clamped barycentric coordinates.
    pub fn locate_point_from(&self, p: Vec2, hint: usize) -> Result<(usize, [f64; 3])> {
        let mut t = hint.min(self.triangles.len() - 1);
        for _ in 0..self.triangles.len() {
            let w = self.barycentric(t, p);
            let (kmin, &wmin) = w
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            if wmin >= -LOCATE_TOL {
                return Ok((t, clamp_bary(w)));
            }
            // Negative coordinate k means p lies beyond the edge opposite
            // vertex k, i.e. local edge (k+1).
            match self.neighbors[t][(kmin + 1) % 3] {
                Some(next) => t = next,
                None => break,
            }
        }
        self.locate_brute(p)
    }

    pub fn locate_point(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        self.locate_point_from(p, 0)
    }

    fn locate_brute(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in 0..self.triangles.len() {
            let w = self.barycentric(t, p);
            let wmin = w[0].min(w[1]).min(w[2]);
            if wmin >= -LOCATE_TOL {
                return Ok((t, clamp_bary(w)));
            }
            if best.map(|(_, _, m)| wmin > m).unwrap_or(true) {
                best = Some((t, w, wmin));
            }
        }
        let _ = best;
        Err(Error::NotInDomain { x: p.x, y: p.y })
    }

    /// P1 interpolation of a per-vertex scalar field at (t, barycentric).
    pub fn interpolate(&self, field: &[f64], t: usize, w: [f64; 3]) -> f64 {
        let tri = self.triangles[t];
        field[tri[0]] * w[0] + field[tri[1]] * w[1] + field[tri[2]] * w[2]
    }
}

fn clamp_bary(w: [f64; 3]) -> [f64; 3] {
    let mut c = [w[0].max(0.0), w[1].max(0.0), w[2].max(0.0)];
    let s = c[0] + c[1] + c[2];
    for x in &mut c {
        *x /= s;
    }
    c
}
