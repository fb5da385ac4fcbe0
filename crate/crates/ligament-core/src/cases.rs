//! Canonical study configurations shared by the validation suite and the
//! command-line defaults: a bridged cantilever for expansion validation and
//! an x-tension strip for the ρ-denominator experiment.

use alloc::vec::Vec;

use crate::elasticity::LoadSpec;
use crate::geom::Vec2;
use crate::ligament::Segment;
use crate::material::{ersatz_field, LameField, LevelSet, MaterialPair};
use crate::mesh::{BoundaryTag, TagRule, TriMesh};

/// A ready-to-run validation configuration.
pub struct ValidationCase {
    pub mesh: TriMesh,
    pub pair: MaterialPair,
    pub loads: LoadSpec,
    pub sigma: Segment,
    pub phi: Option<LevelSet>,
}

/// Signed distance to an axis-aligned box given by corners (x0, y0)-(x1, y1).
pub fn box_sdf(p: Vec2, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let c = Vec2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let h = Vec2::new(0.5 * (x1 - x0), 0.5 * (y1 - y0));
    let q = Vec2::new((p.x - c.x).abs() - h.x, (p.y - c.y).abs() - h.y);
    let outside = Vec2::new(q.x.max(0.0), q.y.max(0.0)).norm();
    let inside = q.x.max(q.y).min(0.0);
    outside + inside
}

fn cantilever_mesh(nx: usize, ny: usize) -> TriMesh {
    TriMesh::build_structured(2.0, 1.0, nx, ny)
        .unwrap()
        .tag_boundary(&[
            TagRule::new(BoundaryTag::GammaD, |m| m.x < 1e-9),
            TagRule::new(BoundaryTag::GammaN, |m| {
                m.x > 2.0 - 1e-9 && (m.y - 0.5).abs() <= 0.0625 + 1e-12
            }),
        ])
}

/// Level set of the bridged-cantilever structure: two horizontal members
/// joined by a loaded tip post, with void in between. The union of boxes is
/// represented by the min of their signed distances.
pub fn bridged_cantilever_phi(mesh: &TriMesh) -> LevelSet {
    LevelSet::new(
        (0..mesh.num_vertices())
            .map(|v| {
                let p = mesh.vertex(v);
                box_sdf(p, 0.0, 0.0, 2.0, 0.25)
                    .min(box_sdf(p, 0.0, 0.75, 2.0, 1.0))
                    .min(box_sdf(p, 1.8, 0.0, 2.0, 1.0))
            })
            .collect(),
    )
}

/// Expansion-validation case: 2x1 cantilever-style background (left clamp,
/// edge-aligned tip load band), η = 1e-3 ersatz of the bridged structure,
/// and a contrast-10 bar material (A₁ = 10 A₀ pointwise). The segment spans
/// the void between the two members.
pub fn bridged_cantilever(nx: usize, ny: usize, eta: f64, contrast: f64) -> ValidationCase {
    let mesh = cantilever_mesh(nx, ny);
    let phi = bridged_cantilever_phi(&mesh);
    let width = 2.0 * 2.0 / nx as f64;
    let background = ersatz_field(&mesh, &phi, (1.0, 1.0), eta, width).unwrap();
    let inclusion = background.scaled(contrast);
    ValidationCase {
        pair: MaterialPair { background, inclusion },
        loads: LoadSpec::traction_only(Vec2::new(0.0, -1.0)),
        sigma: Segment::line(Vec2::new(0.8, 0.25), Vec2::new(1.2, 0.75)),
        phi: Some(phi),
        mesh,
    }
}

/// ρ-discrimination case: homogeneous x-tension strip (left clamp, uniform
/// horizontal traction on the right edge) with (λ₀,μ₀,λ₁,μ₁) = (1,1,4,2),
/// so μ₁λ₀ ≠ μ₀λ₁, and a vertical segment whose normal aligns with the
/// dominant uniaxial strain.
pub fn rho_discriminating(nx: usize, ny: usize) -> ValidationCase {
    let mesh = TriMesh::build_structured(2.0, 1.0, nx, ny)
        .unwrap()
        .tag_boundary(&[
            TagRule::new(BoundaryTag::GammaD, |m| m.x < 1e-9),
            TagRule::new(BoundaryTag::GammaN, |m| m.x > 2.0 - 1e-9),
        ]);
    let nv = mesh.num_vertices();
    ValidationCase {
        pair: MaterialPair {
            background: LameField::constant(nv, 1.0, 1.0),
            inclusion: LameField::constant(nv, 4.0, 2.0),
        },
        loads: LoadSpec::traction_only(Vec2::new(1.0, 0.0)),
        sigma: Segment::line(Vec2::new(1.0, 0.3), Vec2::new(1.0, 0.7)),
        phi: None,
        mesh,
    }
}

/// Initial cantilever design for the descent workflow: full box with a grid
/// of circular holes.
pub fn holey_cantilever_phi(mesh: &TriMesh) -> LevelSet {
    let holes: Vec<(Vec2, f64)> = [
        (0.42, 0.25),
        (0.42, 0.75),
        (0.92, 0.25),
        (0.92, 0.75),
        (1.42, 0.25),
        (1.42, 0.75),
        (0.67, 0.5),
        (1.17, 0.5),
        (1.67, 0.5),
    ]
    .iter()
    .map(|&(x, y)| (Vec2::new(x, y), 0.12))
    .collect();
    LevelSet::new(
        (0..mesh.num_vertices())
            .map(|v| {
                let p = mesh.vertex(v);
                holes
                    .iter()
                    .map(|&(c, r)| r - p.dist(c))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
    )
}

/// The §-style cantilever optimization mesh and loads.
pub fn cantilever_problem(nx: usize, ny: usize) -> (TriMesh, LoadSpec) {
    (cantilever_mesh(nx, ny), LoadSpec::traction_only(Vec2::new(0.0, -1.0)))
}

/// T-shaped mast domain: a vertical stem carrying a horizontal top arm,
/// clamped at the stem base, loaded downward at the two arm tips.
/// `h` must divide all box dimensions; the meshes share grid spacing on the
/// glued interface.
pub struct MastGeometry {
    /// Stem box (x0, y0, x1, y1).
    pub stem: (f64, f64, f64, f64),
    /// Arm box on top of the stem.
    pub arm: (f64, f64, f64, f64),
    /// Width of the loaded bands at the arm tips (measured along x on the
    /// arm undersides).
    pub tip_width: f64,
}

impl Default for MastGeometry {
    fn default() -> Self {
        MastGeometry {
            stem: (0.45, 0.0, 0.75, 0.75),
            arm: (0.0, 0.75, 1.2, 1.0),
            tip_width: 0.1,
        }
    }
}

impl MastGeometry {
    pub fn build(&self, h: f64) -> crate::error::Result<TriMesh> {
        let (sx0, sy0, sx1, sy1) = self.stem;
        let (ax0, ay0, ax1, ay1) = self.arm;
        let cells = |a: f64, b: f64| ((b - a) / h + 0.5) as usize;
        let stem = TriMesh::build_structured_at(
            Vec2::new(sx0, sy0),
            sx1 - sx0,
            sy1 - sy0,
            cells(sx0, sx1),
            cells(sy0, sy1),
            crate::mesh::DiagonalSplit::Fixed,
        )?;
        let arm = TriMesh::build_structured_at(
            Vec2::new(ax0, ay0),
            ax1 - ax0,
            ay1 - ay0,
            cells(ax0, ax1),
            cells(ay0, ay1),
            crate::mesh::DiagonalSplit::Fixed,
        )?;
        let merged = TriMesh::merge(&stem, &arm, 1e-9)?;
        let (gy, tip) = (sy0, self.tip_width);
        let (bx0, bx1) = (ax0, ax1);
        let underside = ay0;
        Ok(merged.tag_boundary(&[
            TagRule::new(BoundaryTag::GammaD, move |m| m.y < gy + 1e-9),
            TagRule::new(BoundaryTag::GammaN, move |m| {
                (m.y - underside).abs() < 1e-9 && (m.x < bx0 + tip || m.x > bx1 - tip)
            }),
        ]))
    }

    /// Default anchor lattice: arm tips, arm midpoints, junction corners,
    /// stem waist and base corners.
    pub fn default_anchors(&self) -> Vec<Vec2> {
        let (sx0, sy0, sx1, sy1) = self.stem;
        let (ax0, ay0, ax1, _ay1) = self.arm;
        let mid = 0.5 * (sx0 + sx1);
        alloc::vec![
            Vec2::new(ax0 + 0.05, ay0 + 0.05),
            Vec2::new(ax1 - 0.05, ay0 + 0.05),
            Vec2::new(0.5 * (ax0 + sx0), ay0 + 0.12),
            Vec2::new(0.5 * (ax1 + sx1), ay0 + 0.12),
            Vec2::new(sx0 + 0.05, sy1 - 0.05),
            Vec2::new(sx1 - 0.05, sy1 - 0.05),
            Vec2::new(sx0 + 0.05, 0.5 * (sy0 + sy1)),
            Vec2::new(sx1 - 0.05, 0.5 * (sy0 + sy1)),
            Vec2::new(sx0 + 0.05, sy0 + 0.05),
            Vec2::new(sx1 - 0.05, sy0 + 0.05),
            Vec2::new(mid, sy1 - 0.05),
            Vec2::new(mid, sy0 + 0.05),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sdf_signs() {
        assert!(box_sdf(Vec2::new(1.0, 0.1), 0.0, 0.0, 2.0, 0.25) < 0.0);
        assert!(box_sdf(Vec2::new(1.0, 0.5), 0.0, 0.0, 2.0, 0.25) > 0.0);
        assert!((box_sdf(Vec2::new(1.0, 0.5), 0.0, 0.0, 2.0, 0.25) - 0.25).abs() < 1e-14);
        assert!(box_sdf(Vec2::new(0.0, 0.0), 0.0, 0.0, 2.0, 0.25).abs() < 1e-14);
    }

    #[test]
    fn bridged_case_has_void_between_members() {
        let case = bridged_cantilever(32, 16, 1e-3, 10.0);
        let phi = case.phi.as_ref().unwrap();
        let (t, w) = case.mesh.locate_point(Vec2::new(1.0, 0.5)).unwrap();
        assert!(case.mesh.interpolate(&phi.phi, t, w) > 0.0);
        // Contrast-10 inclusion pointwise.
        for v in 0..case.mesh.num_vertices() {
            assert!(
                (case.pair.inclusion.mu[v] - 10.0 * case.pair.background.mu[v]).abs() < 1e-15
            );
        }
        // Segment endpoints sit on the member surfaces.
        let pts = case.sigma.points();
        assert!((pts[0].y - 0.25).abs() < 1e-12 && (pts[1].y - 0.75).abs() < 1e-12);
    }

    #[test]
    fn mast_builds_and_tags() {
        let geo = MastGeometry::default();
        let mesh = geo.build(0.05).unwrap();
        assert!(mesh.boundary_measure(BoundaryTag::GammaD) > 0.0);
        let gn = mesh.boundary_measure(BoundaryTag::GammaN);
        assert!((gn - 2.0 * geo.tip_width).abs() < 0.05, "GammaN measure {gn}");
        for a in geo.default_anchors() {
            mesh.locate_point(a).unwrap();
        }
    }
}
