//! P1 finite elements for plane linear elasticity: assembly of the background,
//! adjoint and perturbed-tube systems, Dirichlet elimination, and strain
//! recovery.
//!
//! Dof layout: vertex `v` owns dofs `2v` (x) and `2v + 1` (y). Stiffness uses
//! one Gauss point per element with per-element Lamé values (exact for the
//! constant P1 strains; vertex-based fields are averaged, which equals their
//! exact 3-point quadrature).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{Sym2, Vec2};
use crate::ligament::Segment;
use crate::material::{tube_material, ElementLame, MaterialPair};
use crate::mesh::{BoundaryTag, TriMesh};
use crate::sparse::{pcg_jacobi, Csr, SolveStats};

/// Relative residual demanded from every linear solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Nodal 2-vector field (state, adjoint, or perturbed displacement).
#[derive(Debug, Clone)]
pub struct VectorField {
    pub values: Vec<Vec2>,
}

impl VectorField {
    pub fn zeros(num_vertices: usize) -> Self {
        VectorField { values: vec![Vec2::ZERO; num_vertices] }
    }

    pub fn from_dofs(dofs: &[f64]) -> Self {
        VectorField {
            values: dofs.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect(),
        }
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.values.len());
        for v in &self.values {
            out.push(v.x);
            out.push(v.y);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v.norm_sq()).sum())
    }

    /// L2 norm over the mesh (mass-weighted by lumped vertex areas).
    pub fn l2_norm(&self, mesh: &TriMesh) -> f64 {
        let va = mesh.vertex_areas();
        libm::sqrt(
            self.values
                .iter()
                .zip(&va)
                .map(|(v, &a)| a * v.norm_sq())
                .sum(),
        )
    }

    /// Value at a located point by P1 interpolation.
    pub fn at(&self, mesh: &TriMesh, t: usize, w: [f64; 3]) -> Vec2 {
        let tri = mesh.triangle(t);
        self.values[tri[0]] * w[0] + self.values[tri[1]] * w[1] + self.values[tri[2]] * w[2]
    }
}

/// Per-element constant strains (P1 gradients are constant).
#[derive(Debug, Clone)]
pub struct StrainField {
    pub strains: Vec<Sym2>,
}

/// Loading: a constant body force density and a constant traction applied on
/// every GammaN edge.
#[derive(Debug, Clone, Copy)]
pub struct LoadSpec {
    pub body: Vec2,
    pub traction: Vec2,
}

impl LoadSpec {
    pub const NONE: LoadSpec = LoadSpec { body: Vec2::ZERO, traction: Vec2::ZERO };

    pub fn traction_only(g: Vec2) -> Self {
        LoadSpec { body: Vec2::ZERO, traction: g }
    }
}

/// Assembled linear system before Dirichlet elimination.
pub struct LinearSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
}

/// 6x6 element stiffness for a triangle with constant Lamé values.
/// Dof order: (v0.x, v0.y, v1.x, v1.y, v2.x, v2.y).
pub fn element_stiffness(points: [Vec2; 3], lambda: f64, mu: f64) -> [[f64; 6]; 6] {
    let area = 0.5 * (points[1] - points[0]).cross(points[2] - points[0]);
    let inv_2a = 1.0 / (2.0 * area);
    let g = [
        (points[2] - points[1]).perp() * inv_2a,
        (points[0] - points[2]).perp() * inv_2a,
        (points[1] - points[0]).perp() * inv_2a,
    ];
    let lp2m = lambda + 2.0 * mu;
    let mut k = [[0.0; 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            let (ga, gb) = (g[a], g[b]);
            k[2 * a][2 * b] = area * (ga.x * lp2m * gb.x + ga.y * mu * gb.y);
            k[2 * a][2 * b + 1] = area * (ga.x * lambda * gb.y + ga.y * mu * gb.x);
            k[2 * a + 1][2 * b] = area * (ga.y * lambda * gb.x + ga.x * mu * gb.y);
            k[2 * a + 1][2 * b + 1] = area * (ga.y * lp2m * gb.y + ga.x * mu * gb.x);
        }
    }
    k
}

/// Sparsity pattern of the global stiffness from vertex adjacency.
fn stiffness_pattern(mesh: &TriMesh) -> Csr {
    let nv = mesh.num_vertices();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (v, adj) in adjacency.iter_mut().enumerate() {
        adj.push(v);
    }
    for tri in mesh.triangles() {
        for &a in tri {
            for &b in tri {
                if a != b {
                    adjacency[a].push(b);
                }
            }
        }
    }
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(2 * nv);
    for adj in &mut adjacency {
        adj.sort_unstable();
        adj.dedup();
        for comp in 0..2 {
            let mut cols = Vec::with_capacity(2 * adj.len());
            for &u in adj.iter() {
                cols.push(2 * u);
                cols.push(2 * u + 1);
            }
            let _ = comp;
            rows.push(cols);
        }
    }
    Csr::from_pattern(&rows)
}

/// Constant-traction load vector: each GammaN edge contributes
/// g * (edge length) / 2 to each endpoint (exact P1 trace integration).
pub fn traction_vector(mesh: &TriMesh, g: Vec2) -> Vec<f64> {
    let mut f = vec![0.0; 2 * mesh.num_vertices()];
    for edge in mesh.boundary_edges() {
        if edge.tag != BoundaryTag::GammaN {
            continue;
        }
        let half = 0.5 * mesh.edge_length(edge);
        for &v in &edge.vertices {
            f[2 * v] += g.x * half;
            f[2 * v + 1] += g.y * half;
        }
    }
    f
}

/// Assembles stiffness and load vector; no boundary conditions applied yet.
pub fn assemble(mesh: &TriMesh, material: &ElementLame, loads: &LoadSpec) -> LinearSystem {
    debug_assert_eq!(material.lambda.len(), mesh.num_triangles());
    let mut k = stiffness_pattern(mesh);
    let mut rhs = traction_vector(mesh, loads.traction);
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let ke = element_stiffness(mesh.triangle_points(t), material.lambda[t], material.mu[t]);
        let dofs = [
            2 * tri[0], 2 * tri[0] + 1,
            2 * tri[1], 2 * tri[1] + 1,
            2 * tri[2], 2 * tri[2] + 1,
        ];
        for (i, &di) in dofs.iter().enumerate() {
            for (j, &dj) in dofs.iter().enumerate() {
                k.add(di, dj, ke[i][j]);
            }
        }
        let third = mesh.area(t) / 3.0;
        for &v in &tri {
            rhs[2 * v] += loads.body.x * third;
            rhs[2 * v + 1] += loads.body.y * third;
        }
    }
    LinearSystem { matrix: k, rhs }
}

/// Dirichlet constraints for all vertices on GammaD edges. `values` supplies
/// inhomogeneous data; `None` clamps to zero. Errors if no edge is tagged.
pub fn dirichlet_constraints(
    mesh: &TriMesh,
    values: Option<&dyn Fn(Vec2) -> Vec2>,
) -> Result<Vec<(usize, f64)>> {
    let mut seen = vec![false; mesh.num_vertices()];
    let mut constraints = Vec::new();
    for edge in mesh.boundary_edges() {
        if edge.tag != BoundaryTag::GammaD {
            continue;
        }
        for &v in &edge.vertices {
            if !seen[v] {
                seen[v] = true;
                let g = values.map(|f| f(mesh.vertex(v))).unwrap_or(Vec2::ZERO);
                constraints.push((2 * v, g.x));
                constraints.push((2 * v + 1, g.y));
            }
        }
    }
    if constraints.is_empty() {
        return Err(Error::SingularSystem);
    }
    constraints.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(constraints)
}

fn solve_system(
    mut system: LinearSystem,
    constraints: &[(usize, f64)],
    initial: Option<&VectorField>,
    rel_tol: f64,
) -> Result<(VectorField, SolveStats)> {
    system
        .matrix
        .eliminate_dirichlet(&mut system.rhs, constraints);
    let ndof = system.rhs.len();
    let x0 = initial.map(|u| {
        let mut d = u.to_dofs();
        for &(i, g) in constraints {
            d[i] = g;
        }
        d
    });
    let (x, stats) = pcg_jacobi(
        &system.matrix,
        &system.rhs,
        x0.as_deref(),
        rel_tol,
        20 * ndof,
    )?;
    Ok((VectorField::from_dofs(&x), stats))
}

/// Solves the background system for the state u₀ (zero on GammaD).
pub fn solve_state(
    mesh: &TriMesh,
    material: &ElementLame,
    loads: &LoadSpec,
) -> Result<(VectorField, SolveStats)> {
    let constraints = dirichlet_constraints(mesh, None)?;
    let mut out = solve_system(assemble(mesh, material, loads), &constraints, None, SOLVE_TOL)?;
    // Constrained dofs are exact by construction.
    for &(dof, g) in &constraints {
        let v = &mut out.0.values[dof / 2];
        if dof % 2 == 0 {
            v.x = g;
        } else {
            v.y = g;
        }
        debug_assert_eq!(g, 0.0);
    }
    Ok(out)
}

/// Solves with inhomogeneous Dirichlet data (patch tests). The tolerance is
/// explicit because patch verification wants solutions well below the
/// default solver contract.
pub fn solve_state_with_dirichlet(
    mesh: &TriMesh,
    material: &ElementLame,
    loads: &LoadSpec,
    dirichlet: &dyn Fn(Vec2) -> Vec2,
    rel_tol: f64,
) -> Result<(VectorField, SolveStats)> {
    let constraints = dirichlet_constraints(mesh, Some(dirichlet))?;
    solve_system(assemble(mesh, material, loads), &constraints, None, rel_tol)
}

/// Solves the adjoint system: same operator, right-hand side from the
/// functional (see `functionals::adjoint_rhs`).
pub fn solve_adjoint(
    mesh: &TriMesh,
    material: &ElementLame,
    loads: &LoadSpec,
    spec: &crate::functionals::FunctionalSpec,
    u0: &VectorField,
) -> Result<(VectorField, SolveStats)> {
    let constraints = dirichlet_constraints(mesh, None)?;
    let mut system = assemble(mesh, material, &LoadSpec::NONE);
    system.rhs = crate::functionals::adjoint_rhs(spec, mesh, u0, loads);
    solve_system(system, &constraints, None, SOLVE_TOL)
}

/// Result of a perturbed (tube) solve.
pub struct PerturbedSolve {
    pub u: VectorField,
    pub stats: SolveStats,
    /// True when the mesh does not resolve the tube (max cell diameter
    /// above eps/2); reported, never fatal.
    pub under_resolved: bool,
}

/// Solves the sharp-tube problem for u_ε. `warm_start` (typically u₀) cuts
/// iterations since the tube is a local perturbation.
pub fn solve_perturbed(
    mesh: &TriMesh,
    pair: &MaterialPair,
    sigma: &Segment,
    eps: f64,
    loads: &LoadSpec,
    warm_start: Option<&VectorField>,
) -> Result<PerturbedSolve> {
    let constraints = dirichlet_constraints(mesh, None)?;
    let material = tube_material(mesh, pair, sigma, eps);
    let system = assemble(mesh, &material, loads);
    let (u, stats) = solve_system(system, &constraints, warm_start, SOLVE_TOL)?;
    let under_resolved = mesh.max_cell_diameter() > 0.5 * eps;
    Ok(PerturbedSolve { u, stats, under_resolved })
}

/// Per-element strain e(u) = ½(∇u + ∇uᵀ) from the P1 gradients.
pub fn strain(mesh: &TriMesh, u: &VectorField) -> StrainField {
    let mut strains = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        let g = mesh.shape_gradients(t);
        let mut grad_ux = Vec2::ZERO;
        let mut grad_uy = Vec2::ZERO;
        for (k, &v) in tri.iter().enumerate() {
            grad_ux += g[k] * u.values[v].x;
            grad_uy += g[k] * u.values[v].y;
        }
        strains.push(Sym2::from_gradient(grad_ux, grad_uy));
    }
    StrainField { strains }
}
