//! Inhomogeneous isotropic materials: Lamé coefficient fields, the smoothed
//! ersatz background built from a level set, and the sharp tube material used
//! by the finite-difference oracle.
//!
//! The background field lives at mesh vertices and is interpolated linearly;
//! the tube assignment is per element (sharp interface).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::Sym2;
use crate::ligament::Segment;
use crate::mesh::TriMesh;

/// Per-vertex Lamé coefficient pair (λ(x), μ(x)).
#[derive(Debug, Clone)]
pub struct LameField {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl LameField {
    pub fn constant(num_vertices: usize, lambda: f64, mu: f64) -> Self {
        LameField {
            lambda: alloc::vec![lambda; num_vertices],
            mu: alloc::vec![mu; num_vertices],
        }
    }

    /// Checks μ > 0 and λ + μ > 0 at every vertex.
    pub fn validate(&self) -> Result<()> {
        for (&l, &m) in self.lambda.iter().zip(&self.mu) {
            if !(m > 0.0) || !(l + m > 0.0) {
                return Err(Error::InvalidMaterial("need mu > 0 and lambda + mu > 0"));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> LameField {
        LameField {
            lambda: self.lambda.iter().map(|v| v * factor).collect(),
            mu: self.mu.iter().map(|v| v * factor).collect(),
        }
    }

    /// Per-element averages (exact 3-point quadrature of a linear field).
    pub fn to_element(&self, mesh: &TriMesh) -> ElementLame {
        let mut lambda = Vec::with_capacity(mesh.num_triangles());
        let mut mu = Vec::with_capacity(mesh.num_triangles());
        for tri in mesh.triangles() {
            lambda.push((self.lambda[tri[0]] + self.lambda[tri[1]] + self.lambda[tri[2]]) / 3.0);
            mu.push((self.mu[tri[0]] + self.mu[tri[1]] + self.mu[tri[2]]) / 3.0);
        }
        ElementLame { lambda, mu }
    }

    /// Linear interpolation at a located point.
    pub fn at(&self, mesh: &TriMesh, t: usize, w: [f64; 3]) -> (f64, f64) {
        (
            mesh.interpolate(&self.lambda, t, w),
            mesh.interpolate(&self.mu, t, w),
        )
    }
}

/// Per-element (piecewise constant) Lamé values used by assembly.
#[derive(Debug, Clone)]
pub struct ElementLame {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Background A₀ and inclusion A₁ material fields.
#[derive(Debug, Clone)]
pub struct MaterialPair {
    pub background: LameField,
    pub inclusion: LameField,
}

/// Level-set description of the shape: Ω = {φ < 0} on mesh vertices.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub phi: Vec<f64>,
}

impl LevelSet {
    pub fn new(phi: Vec<f64>) -> Self {
        LevelSet { phi }
    }

    pub fn constant(num_vertices: usize, value: f64) -> Self {
        LevelSet { phi: alloc::vec![value; num_vertices] }
    }

    /// True if φ changes sign (or touches zero) somewhere.
    pub fn has_interface(&self) -> bool {
        let any_neg = self.phi.iter().any(|&v| v <= 0.0);
        let any_pos = self.phi.iter().any(|&v| v > 0.0);
        any_neg && any_pos
    }
}

/// Isotropic Hooke law: Ae = 2μe + λ tr(e) I.
pub fn hooke_apply(lambda: f64, mu: f64, e: Sym2) -> Sym2 {
    let t = lambda * e.trace();
    Sym2::new(2.0 * mu * e.xx + t, 2.0 * mu * e.yy + t, 2.0 * mu * e.xy)
}

/// Smoothed Heaviside: 0 for s < -w, 1 for s > w, and
/// ½(1 + s/w + sin(πs/w)/π) in between. H(0) = ½.
pub fn smoothed_heaviside(s: f64, w: f64) -> f64 {
    if s < -w {
        0.0
    } else if s > w {
        1.0
    } else {
        0.5 * (1.0 + s / w + libm::sin(core::f64::consts::PI * s / w) / core::f64::consts::PI)
    }
}

/// Ersatz background: per-vertex (λ₀, μ₀) = [η + (1-η)·H_w(-φ)]·(λ, μ).
pub fn ersatz_field(
    mesh: &TriMesh,
    phi: &LevelSet,
    solid: (f64, f64),
    eta: f64,
    transition_width: f64,
) -> Result<LameField> {
    if !(eta > 0.0) {
        return Err(Error::InvalidMaterial("ersatz factor eta must be positive"));
    }
    if !(eta < 1.0) {
        return Err(Error::InvalidMaterial("ersatz factor eta must be below 1"));
    }
    if !(transition_width > 0.0) {
        return Err(Error::InvalidMaterial("transition width must be positive"));
    }
    debug_assert_eq!(phi.phi.len(), mesh.num_vertices());
    let (lambda, mu) = solid;
    let mut out = LameField {
        lambda: Vec::with_capacity(phi.phi.len()),
        mu: Vec::with_capacity(phi.phi.len()),
    };
    for &p in &phi.phi {
        let scale = eta + (1.0 - eta) * smoothed_heaviside(-p, transition_width);
        out.lambda.push(scale * lambda);
        out.mu.push(scale * mu);
    }
    out.validate()?;
    Ok(out)
}

/// Sharp tube material for the perturbed problem: an element takes the
/// inclusion values when its centroid lies within `eps` of the segment,
/// otherwise the background values. Both fields are evaluated at centroids.
pub fn tube_material(
    mesh: &TriMesh,
    pair: &MaterialPair,
    sigma: &Segment,
    eps: f64,
) -> ElementLame {
    let mut lambda = Vec::with_capacity(mesh.num_triangles());
    let mut mu = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let field = if sigma.distance(c) < eps { &pair.inclusion } else { &pair.background };
        let w = mesh.barycentric(t, c);
        lambda.push(mesh.interpolate(&field.lambda, t, w));
        mu.push(mesh.interpolate(&field.mu, t, w));
    }
    ElementLame { lambda, mu }
}
