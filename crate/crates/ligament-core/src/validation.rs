//! Independent finite-difference oracle for the first-order tube expansion:
//! solves the sharp-tube problem at a sequence of thicknesses and compares
//! the effective derivatives (J_σ(ε) - J_σ(0))/ε against the predicted
//! J'_σ(0), including the discrimination experiment for the ρ denominator.

use alloc::string::String;
use alloc::vec::Vec;

use crate::elasticity::{solve_adjoint, solve_perturbed, solve_state, LoadSpec, VectorField};
use crate::error::{Error, Result};
use crate::functionals::{compliance, domain_integral, FunctionalKind, FunctionalSpec};
use crate::ligament::{segment_derivative, RhoDenominator, Segment};
use crate::material::MaterialPair;
use crate::mesh::TriMesh;

/// One thickness sample of the oracle.
#[derive(Debug, Clone, Copy)]
pub struct FdEntry {
    pub eps: f64,
    pub j_eps: f64,
    pub j0: f64,
    /// (J_σ(ε) - J_σ(0)) / ε.
    pub effective: f64,
    /// |effective - predicted| / |predicted| (zero when both vanish).
    pub rel_error: f64,
    pub sign_agrees: bool,
    pub under_resolved: bool,
}

/// Full oracle report for one segment.
#[derive(Debug, Clone)]
pub struct FDReport {
    pub predicted: f64,
    pub entries: Vec<FdEntry>,
    /// Relative errors decrease monotonically along decreasing ε.
    pub monotone_error_decrease: bool,
    /// Least-squares slope of log|J_σ(ε) - J_σ(0) - ε J'| against log ε;
    /// above 1 is consistent with an o(ε) remainder.
    pub remainder_slope: f64,
    pub terminal_rel_error: f64,
    pub warnings: Vec<String>,
}

impl FDReport {
    /// Derives the summary statistics from raw entries (which must be in
    /// decreasing-ε order).
    pub fn from_entries(predicted: f64, entries: Vec<FdEntry>, warnings: Vec<String>) -> Self {
        let monotone = entries.windows(2).all(|w| w[1].rel_error <= w[0].rel_error + 1e-15);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for e in &entries {
            let remainder = (e.j_eps - e.j0 - e.eps * predicted).abs();
            if remainder > 0.0 {
                pts.push((libm::log(e.eps), libm::log(remainder)));
            }
        }
        let slope = if pts.len() >= 2 {
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            (n * sxy - sx * sy) / (n * sxx - sx * sx)
        } else {
            // No measurable remainder anywhere: the expansion is exact.
            f64::INFINITY
        };
        let terminal = entries.last().map(|e| e.rel_error).unwrap_or(0.0);
        FDReport {
            predicted,
            entries,
            monotone_error_decrease: monotone,
            remainder_slope: slope,
            terminal_rel_error: terminal,
            warnings,
        }
    }
}

fn functional_value(
    spec: &FunctionalSpec,
    mesh: &TriMesh,
    u: &VectorField,
    loads: &LoadSpec,
) -> Result<f64> {
    match spec.kind {
        FunctionalKind::Compliance => Ok(compliance(mesh, u, loads)),
        FunctionalKind::DomainIntegrand(d) => Ok(domain_integral(mesh, u, d.j)),
        FunctionalKind::Volume => Err(Error::InvalidConfig(
            "the volume does not depend on the state; nothing to validate",
        )),
    }
}

fn adjoint_for(
    spec: &FunctionalSpec,
    mesh: &TriMesh,
    pair: &MaterialPair,
    loads: &LoadSpec,
    u0: &VectorField,
) -> Result<VectorField> {
    match spec.kind {
        FunctionalKind::Compliance => Ok(VectorField {
            values: u0.values.iter().map(|&v| -v).collect(),
        }),
        _ => {
            let material = pair.background.to_element(mesh);
            let (p0, _) = solve_adjoint(mesh, &material, loads, spec, u0)?;
            Ok(p0)
        }
    }
}

/// Runs the oracle on one mesh: background solve, prediction along σ, then a
/// sharp-tube solve per ε (warm-started from u₀). `eps_list` must be
/// strictly decreasing.
#[allow(clippy::too_many_arguments)]
pub fn fd_check(
    mesh: &TriMesh,
    pair: &MaterialPair,
    sigma: &Segment,
    loads: &LoadSpec,
    spec: &FunctionalSpec,
    eps_list: &[f64],
    quad_step: f64,
    rho_choice: RhoDenominator,
) -> Result<FDReport> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("eps list must be strictly decreasing"));
    }
    let background = pair.background.to_element(mesh);
    let (u0, _) = solve_state(mesh, &background, loads)?;
    let j0 = functional_value(spec, mesh, &u0, loads)?;
    let p0 = adjoint_for(spec, mesh, pair, loads, &u0)?;
    let predicted =
        segment_derivative(mesh, sigma, &u0, &p0, pair, quad_step, rho_choice)?.jprime;

    let mut warnings = Vec::new();
    let mut entries = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let solve = solve_perturbed(mesh, pair, sigma, eps, loads, Some(&u0))?;
        if solve.under_resolved {
            warnings.push(alloc::format!(
                "tube eps = {eps} under-resolved: max cell diameter {} above eps/2",
                mesh.max_cell_diameter()
            ));
        }
        let j_eps = functional_value(spec, mesh, &solve.u, loads)?;
        let effective = (j_eps - j0) / eps;
        let rel_error = if predicted == 0.0 && effective == 0.0 {
            0.0
        } else {
            (effective - predicted).abs() / predicted.abs().max(f64::MIN_POSITIVE)
        };
        let sign_agrees = (effective == 0.0 && predicted == 0.0)
            || effective.signum() == predicted.signum();
        entries.push(FdEntry {
            eps,
            j_eps,
            j0,
            effective,
            rel_error,
            sign_agrees,
            under_resolved: solve.under_resolved,
        });
    }
    Ok(FDReport::from_entries(predicted, entries, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoResolution {
    Chosen(RhoDenominator),
    /// Terminal errors within two percentage points of each other.
    Inconclusive,
}

/// Both error tables of the ρ-denominator experiment.
#[derive(Debug, Clone)]
pub struct RhoExperiment {
    pub resolution: RhoResolution,
    pub report_mu0: FDReport,
    pub report_mu1: FDReport,
}

/// Runs the oracle once and grades both ρ-denominator choices against it.
/// The configuration must make the normal-strain term matter (μ₁λ₀ ≠ μ₀λ₁
/// and a segment with dominant normal strain), otherwise the outcome is
/// Inconclusive by construction.
#[allow(clippy::too_many_arguments)]
pub fn resolve_rho(
    mesh: &TriMesh,
    pair: &MaterialPair,
    sigma: &Segment,
    loads: &LoadSpec,
    spec: &FunctionalSpec,
    eps_list: &[f64],
    quad_step: f64,
) -> Result<RhoExperiment> {
    let report_mu0 = fd_check(mesh, pair, sigma, loads, spec, eps_list, quad_step, RhoDenominator::Mu0)?;
    let report_mu1 = fd_check(mesh, pair, sigma, loads, spec, eps_list, quad_step, RhoDenominator::Mu1)?;
    let (e0, e1) = (report_mu0.terminal_rel_error, report_mu1.terminal_rel_error);
    let resolution = if (e0 - e1).abs() <= 0.02 {
        RhoResolution::Inconclusive
    } else if e1 < e0 {
        RhoResolution::Chosen(RhoDenominator::Mu1)
    } else {
        RhoResolution::Chosen(RhoDenominator::Mu0)
    };
    Ok(RhoExperiment { resolution, report_mu0, report_mu1 })
}
