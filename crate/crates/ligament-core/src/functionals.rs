//! Objective and constraint functionals, their evaluation, and the adjoint
//! right-hand sides.
//!
//! Compliance is handled by the self-adjoint convention (adjoint rhs is the
//! negated traction vector, so p₀ = -u₀); domain integrands j(u) get the
//! assembled -∫ j'(u₀)·φ_i rhs.

use alloc::vec;
use alloc::vec::Vec;

use crate::elasticity::{traction_vector, LoadSpec, VectorField};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::material::{smoothed_heaviside, LevelSet};
use crate::mesh::{BoundaryTag, TriMesh};

/// A pointwise integrand j(u) with its derivative j'(u).
#[derive(Debug, Clone, Copy)]
pub struct DomainIntegrand {
    pub j: fn(Vec2) -> f64,
    pub j_prime: fn(Vec2) -> Vec2,
}

#[derive(Debug, Clone, Copy)]
pub enum FunctionalKind {
    /// Work of the traction loads: ∫_{ΓN} g·u ds.
    Compliance,
    /// Smoothed material volume ∫ H_w(-φ) dx.
    Volume,
    /// ∫ j(u) dx over the hold-all domain.
    DomainIntegrand(DomainIntegrand),
}

#[derive(Debug, Clone, Copy)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    /// Constraint target (V_T or C_T) when used as a constraint.
    pub target: Option<f64>,
}

impl FunctionalSpec {
    pub fn compliance() -> Self {
        FunctionalSpec { kind: FunctionalKind::Compliance, target: None }
    }

    pub fn volume() -> Self {
        FunctionalSpec { kind: FunctionalKind::Volume, target: None }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }
}

/// Exact P1 edge quadrature of g·u over the GammaN edges.
pub fn compliance(mesh: &TriMesh, u: &VectorField, loads: &LoadSpec) -> f64 {
    let g = loads.traction;
    let mut total = 0.0;
    for edge in mesh.boundary_edges() {
        if edge.tag != BoundaryTag::GammaN {
            continue;
        }
        let ua = u.values[edge.vertices[0]];
        let ub = u.values[edge.vertices[1]];
        total += g.dot(ua + ub) * 0.5 * mesh.edge_length(edge);
    }
    total
}

/// Smoothed material volume ∫ H_w(-φ) dx with φ interpolated linearly and
/// H_w evaluated at edge midpoints.
pub fn volume(mesh: &TriMesh, phi: &LevelSet, smoothing_width: f64) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = [phi.phi[tri[0]], phi.phi[tri[1]], phi.phi[tri[2]]];
        let mids = [
            0.5 * (p[0] + p[1]),
            0.5 * (p[1] + p[2]),
            0.5 * (p[2] + p[0]),
        ];
        let mut acc = 0.0;
        for m in mids {
            acc += smoothed_heaviside(-m, smoothing_width);
        }
        total += mesh.area(t) / 3.0 * acc;
    }
    total
}

/// ∫ j(u) dx by the edge-midpoint rule on each element.
pub fn domain_integral(mesh: &TriMesh, u: &VectorField, j: fn(Vec2) -> f64) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let uv = [u.values[tri[0]], u.values[tri[1]], u.values[tri[2]]];
        let mut acc = 0.0;
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            acc += j((uv[a] + uv[b]) * 0.5);
        }
        total += mesh.area(t) / 3.0 * acc;
    }
    total
}

/// Evaluates a functional. Compliance and domain integrands need `u`; the
/// volume needs the level set and its smoothing width.
pub fn evaluate(
    spec: &FunctionalSpec,
    mesh: &TriMesh,
    u: Option<&VectorField>,
    phi: Option<(&LevelSet, f64)>,
    loads: &LoadSpec,
) -> Result<f64> {
    match spec.kind {
        FunctionalKind::Compliance => {
            let u = u.ok_or(Error::InvalidConfig("compliance needs a solved state"))?;
            Ok(compliance(mesh, u, loads))
        }
        FunctionalKind::Volume => {
            let (phi, w) = phi.ok_or(Error::MissingLevelSet)?;
            Ok(volume(mesh, phi, w))
        }
        FunctionalKind::DomainIntegrand(d) => {
            let u = u.ok_or(Error::InvalidConfig("domain integrand needs a solved state"))?;
            Ok(domain_integral(mesh, u, d.j))
        }
    }
}

/// Adjoint right-hand side: -∫ j'(u₀)·φ_i dx for domain integrands, the
/// negated traction vector for compliance, zero for the volume.
pub fn adjoint_rhs(
    spec: &FunctionalSpec,
    mesh: &TriMesh,
    u0: &VectorField,
    loads: &LoadSpec,
) -> Vec<f64> {
    match spec.kind {
        FunctionalKind::Volume => vec![0.0; 2 * mesh.num_vertices()],
        FunctionalKind::Compliance => {
            let mut f = traction_vector(mesh, loads.traction);
            for v in &mut f {
                *v = -*v;
            }
            f
        }
        FunctionalKind::DomainIntegrand(d) => {
            let mut rhs = vec![0.0; 2 * mesh.num_vertices()];
            for (t, tri) in mesh.triangles().iter().enumerate() {
                let uv = [u0.values[tri[0]], u0.values[tri[1]], u0.values[tri[2]]];
                let w = mesh.area(t) / 3.0;
                // At the midpoint of local edge (a, b) the shape functions of
                // a and b are both 1/2 and the third vanishes.
                for (a, b) in [(0usize, 1usize), (1, 2), (2, 0)] {
                    let jp = (d.j_prime)((uv[a] + uv[b]) * 0.5);
                    for &v in &[tri[a], tri[b]] {
                        rhs[2 * v] -= w * 0.5 * jp.x;
                        rhs[2 * v + 1] -= w * 0.5 * jp.y;
                    }
                }
            }
            rhs
        }
    }
}

/// Finite-difference consistency check of j'(u) against j (spec setup
/// invariant: relative tolerance `tol` with step `step`).
pub fn check_integrand_consistency(
    d: &DomainIntegrand,
    samples: &[Vec2],
    step: f64,
    tol: f64,
) -> bool {
    for &u in samples {
        let jp = (d.j_prime)(u);
        for dir in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
            let plus = (d.j)(u + dir * step);
            let minus = (d.j)(u - dir * step);
            let fd = (plus - minus) / (2.0 * step);
            let exact = jp.dot(dir);
            let scale = exact.abs().max(fd.abs()).max(1e-12);
            if (fd - exact).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::{assemble, solve_adjoint, solve_state};
    use crate::material::LameField;
    use crate::mesh::TagRule;

    fn cantilever(nx: usize, ny: usize) -> (TriMesh, LoadSpec) {
        let mesh = TriMesh::build_structured(2.0, 1.0, nx, ny)
            .unwrap()
            .tag_boundary(&[
                TagRule::new(BoundaryTag::GammaD, |m| m.x < 1e-9),
                TagRule::new(BoundaryTag::GammaN, |m| {
                    m.x > 2.0 - 1e-9 && (m.y - 0.5).abs() <= 0.0625 + 1e-12
                }),
            ]);
        (mesh, LoadSpec::traction_only(Vec2::new(0.0, -1.0)))
    }

    #[test]
    fn compliance_of_zero_field_is_zero() {
        let (mesh, loads) = cantilever(8, 4);
        let u = VectorField::zeros(mesh.num_vertices());
        assert_eq!(compliance(&mesh, &u, &loads), 0.0);
    }

    #[test]
    fn volume_of_full_box() {
        let mesh = TriMesh::build_structured(2.0, 1.0, 8, 4).unwrap();
        let phi = LevelSet::constant(mesh.num_vertices(), -1.0);
        assert!((volume(&mesh, &phi, 0.05) - 2.0).abs() < 1e-12);
        let spec = FunctionalSpec::volume();
        assert!(matches!(
            evaluate(&spec, &mesh, None, None, &LoadSpec::NONE),
            Err(Error::MissingLevelSet)
        ));
    }

    #[test]
    fn compliance_equals_discrete_work() {
        let (mesh, loads) = cantilever(16, 8);
        let material = LameField::constant(mesh.num_vertices(), 1.0, 1.0).to_element(&mesh);
        let (u, _) = solve_state(&mesh, &material, &loads).unwrap();
        let c = compliance(&mesh, &u, &loads);
        assert!(c >= 0.0);
        // F·u (the rhs IS the traction vector here).
        let f = traction_vector(&mesh, loads.traction);
        let dofs = u.to_dofs();
        let fu: f64 = f.iter().zip(&dofs).map(|(a, b)| a * b).sum();
        assert!((c - fu).abs() <= 1e-10 * c.abs());
        // u'Ku with the pre-elimination stiffness (u is zero on GammaD).
        let system = assemble(&mesh, &material, &loads);
        let mut ku = vec![0.0; dofs.len()];
        system.matrix.matvec(&dofs, &mut ku);
        let uku: f64 = dofs.iter().zip(&ku).map(|(a, b)| a * b).sum();
        assert!((c - uku).abs() <= 1e-10 * c.abs(), "c = {c}, u'Ku = {uku}");
    }

    #[test]
    fn adjoint_rhs_volume_is_zero_and_adjoint_vanishes() {
        let (mesh, loads) = cantilever(8, 4);
        let material = LameField::constant(mesh.num_vertices(), 1.0, 1.0).to_element(&mesh);
        let (u0, _) = solve_state(&mesh, &material, &loads).unwrap();
        let spec = FunctionalSpec::volume();
        assert!(adjoint_rhs(&spec, &mesh, &u0, &loads).iter().all(|&v| v == 0.0));
        let (p0, _) = solve_adjoint(&mesh, &material, &loads, &spec, &u0).unwrap();
        assert_eq!(p0.norm(), 0.0);
    }

    #[test]
    fn compliance_adjoint_is_negated_state() {
        let (mesh, loads) = cantilever(16, 8);
        let material = LameField::constant(mesh.num_vertices(), 1.0, 1.0).to_element(&mesh);
        let (u0, _) = solve_state(&mesh, &material, &loads).unwrap();
        let spec = FunctionalSpec::compliance();
        let rhs = adjoint_rhs(&spec, &mesh, &u0, &loads);
        let f = traction_vector(&mesh, loads.traction);
        for (r, fv) in rhs.iter().zip(&f) {
            assert_eq!(*r, -fv);
        }
        let (p0, _) = solve_adjoint(&mesh, &material, &loads, &spec, &u0).unwrap();
        let mut diff = 0.0f64;
        for v in 0..mesh.num_vertices() {
            diff += (p0.values[v] + u0.values[v]).norm_sq();
        }
        let rel = libm::sqrt(diff) / u0.norm();
        assert!(rel <= 1e-8, "|p0 + u0| / |u0| = {rel:e}");
    }

    #[test]
    fn domain_integrand_rhs_constant_state_has_closed_form() {
        // j(u) = |u|², u0 = c constant: rhs entries are -2c·(lumped areas).
        let (mesh, loads) = cantilever(6, 3);
        let c = Vec2::new(0.3, -0.7);
        let u0 = VectorField { values: vec![c; mesh.num_vertices()] };
        let d = DomainIntegrand {
            j: |u| u.norm_sq(),
            j_prime: |u| u * 2.0,
        };
        let spec = FunctionalSpec { kind: FunctionalKind::DomainIntegrand(d), target: None };
        let rhs = adjoint_rhs(&spec, &mesh, &u0, &loads);
        let va = mesh.vertex_areas();
        for v in 0..mesh.num_vertices() {
            assert!((rhs[2 * v] + 2.0 * c.x * va[v]).abs() < 1e-12);
            assert!((rhs[2 * v + 1] + 2.0 * c.y * va[v]).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_integrand_rhs_is_weak_derivative() {
        // Verify ∫ j'(u0)·v dx = -(rhs·v) for random nodal v, using an
        // independent degree-5 (7-point Gauss) quadrature as the oracle.
        let (mesh, loads) = cantilever(5, 4);
        let material = LameField::constant(mesh.num_vertices(), 1.0, 1.0).to_element(&mesh);
        let (u0, _) = solve_state(&mesh, &material, &loads).unwrap();
        let d = DomainIntegrand { j: |u| u.norm_sq(), j_prime: |u| u * 2.0 };
        let spec = FunctionalSpec { kind: FunctionalKind::DomainIntegrand(d), target: None };
        let rhs = adjoint_rhs(&spec, &mesh, &u0, &loads);

        // 7-point Gauss rule on the reference triangle (degree 5).
        let w1 = 0.125939180544827;
        let w2 = 0.132394152788506;
        let a1 = 0.101286507323456;
        let a2 = 0.470142064105115;
        let quad: [( [f64;3], f64 ); 7] = [
            ([1.0/3.0, 1.0/3.0, 1.0/3.0], 0.225),
            ([1.0 - 2.0*a1, a1, a1], w1),
            ([a1, 1.0 - 2.0*a1, a1], w1),
            ([a1, a1, 1.0 - 2.0*a1], w1),
            ([1.0 - 2.0*a2, a2, a2], w2),
            ([a2, 1.0 - 2.0*a2, a2], w2),
            ([a2, a2, 1.0 - 2.0*a2], w2),
        ];

        let mut state = 12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..5 {
            let v: Vec<Vec2> = (0..mesh.num_vertices())
                .map(|_| Vec2::new(next(), next()))
                .collect();
            let mut exact = 0.0;
            for (t, tri) in mesh.triangles().iter().enumerate() {
                for &(bary, w) in &quad {
                    let mut uq = Vec2::ZERO;
                    let mut vq = Vec2::ZERO;
                    for k in 0..3 {
                        uq += u0.values[tri[k]] * bary[k];
                        vq += v[tri[k]] * bary[k];
                    }
                    exact += mesh.area(t) * w * (d.j_prime)(uq).dot(vq);
                }
            }
            let mut dot = 0.0;
            for vtx in 0..mesh.num_vertices() {
                dot += rhs[2 * vtx] * v[vtx].x + rhs[2 * vtx + 1] * v[vtx].y;
            }
            // The midpoint rule is degree 2 and the integrand is quadratic,
            // so both quadratures are exact: identity holds to roundoff.
            assert!(
                (exact + dot).abs() <= 1e-10 * exact.abs().max(1.0),
                "weak derivative mismatch: {exact} vs {}",
                -dot
            );
        }
    }

    #[test]
    fn integrand_consistency_check_accepts_and_rejects() {
        let good = DomainIntegrand { j: |u| u.norm_sq(), j_prime: |u| u * 2.0 };
        let bad = DomainIntegrand { j: |u| u.norm_sq(), j_prime: |u| u * 3.0 };
        let samples = [Vec2::new(0.2, -0.4), Vec2::new(1.0, 2.0), Vec2::new(-3.0, 0.5)];
        assert!(check_integrand_consistency(&good, &samples, 1e-6, 1e-5));
        assert!(!check_integrand_consistency(&bad, &samples, 1e-6, 1e-5));
    }

    #[test]
    fn load_directional_derivative_matches_adjoint_identity() {
        // For J = compliance: dJ/dF·δF = 2 u·δF. Central finite differences
        // over a random load perturbation must agree to 1e-5 relative.
        let (mesh, loads) = cantilever(8, 4);
        let material = LameField::constant(mesh.num_vertices(), 1.0, 1.0).to_element(&mesh);
        let constraints = crate::elasticity::dirichlet_constraints(&mesh, None).unwrap();

        let solve_with = |extra: &[f64], scale: f64| -> (VectorField, f64) {
            let mut system = assemble(&mesh, &material, &loads);
            for (r, e) in system.rhs.iter_mut().zip(extra) {
                *r += scale * e;
            }
            let rhs_snapshot = system.rhs.clone();
            system
                .matrix
                .eliminate_dirichlet(&mut system.rhs, &constraints);
            let (x, _) = crate::sparse::pcg_jacobi(
                &system.matrix,
                &system.rhs,
                None,
                1e-12,
                20 * system.rhs.len(),
            )
            .unwrap();
            let u = VectorField::from_dofs(&x);
            let j: f64 = rhs_snapshot.iter().zip(&x).map(|(a, b)| a * b).sum();
            (u, j)
        };

        let mut state = 777u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let delta: Vec<f64> = (0..2 * mesh.num_vertices()).map(|_| next()).collect();
        let (u0, j0) = solve_with(&delta, 0.0);
        let _ = j0;
        let dofs = u0.to_dofs();
        let predicted: f64 = 2.0 * delta.iter().zip(&dofs).map(|(a, b)| a * b).sum::<f64>();
        let h = 1e-5;
        let (_, jp) = solve_with(&delta, h);
        let (_, jm) = solve_with(&delta, -h);
        let fd = (jp - jm) / (2.0 * h);
        assert!(
            (fd - predicted).abs() <= 1e-5 * predicted.abs().max(1e-12),
            "fd {fd} vs adjoint {predicted}"
        );
    }
}
