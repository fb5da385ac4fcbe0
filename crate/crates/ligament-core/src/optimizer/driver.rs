//! Shape-optimization drivers: augmented-Lagrangian descent on a fixed grid
//! with periodic bar grafting, and the greedy bar-insertion initialization
//! for truss-like designs.

use alloc::vec;
use alloc::vec::Vec;

use crate::elasticity::{solve_state, strain, LoadSpec, VectorField};
use crate::error::{Error, Result};
use crate::functionals::{compliance, volume, FunctionalKind, FunctionalSpec};
use crate::geom::Vec2;
use crate::ligament::{
    scan_segments, zero_contour_points, RhoDenominator, ScanEntry, ScanFlag, Segment,
    SensitivityContext,
};
use crate::material::{ersatz_field, hooke_apply, ElementLame, LameField, LevelSet, MaterialPair};
use crate::mesh::{BoundaryTag, TriMesh};
use crate::optimizer::transport::{insert_ligament, LevelSetOps};

/// Where candidate bar endpoints come from.
#[derive(Debug, Clone)]
pub enum CandidateSource {
    /// Discretization of the current {φ = 0} contour, capped.
    Contour { max_points: usize },
    /// User-supplied points (anchors).
    Anchors(Vec<Vec2>),
}

/// Iterations at which the scan-and-graft step runs: `start..=end`, every
/// `every` iterations.
#[derive(Debug, Clone, Copy)]
pub struct LigamentSchedule {
    pub start: usize,
    pub end: usize,
    pub every: usize,
}

impl LigamentSchedule {
    pub fn active(&self, iteration: usize) -> bool {
        self.every > 0
            && iteration >= self.start
            && iteration <= self.end
            && (iteration - self.start) % self.every == 0
    }
}

/// Augmented-Lagrangian state for one equality constraint C = 0.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedLagrangian {
    pub multiplier: f64,
    pub penalty: f64,
    pub growth: f64,
    pub penalty_max: f64,
}

impl AugmentedLagrangian {
    pub fn merit(&self, objective: f64, constraint: f64) -> f64 {
        objective + self.multiplier * constraint + 0.5 * self.penalty * constraint * constraint
    }

    fn update(&mut self, constraint: f64) {
        self.multiplier += self.penalty * constraint;
        self.penalty = (self.penalty * self.growth).min(self.penalty_max);
    }
}

#[derive(Debug, Clone)]
pub struct OptimConfig {
    pub objective: FunctionalSpec,
    pub constraint: FunctionalSpec,
    /// CFL-like step factor: dt = step * h / max|v|.
    pub step: f64,
    pub al: AugmentedLagrangian,
    pub schedule: Option<LigamentSchedule>,
    pub eps_insert: f64,
    pub candidates: CandidateSource,
    pub quad_step: f64,
    pub rho_choice: RhoDenominator,
    pub max_iterations: usize,
    pub reinit_period: usize,
    pub max_backtracks: usize,
    /// Greedy initialization: stop once the measured compliance drops to
    /// this threshold.
    pub compliance_threshold: f64,
    /// Radius of the solid pads placed at anchors and along the clamped and
    /// loaded boundary parts during greedy initialization.
    pub pad_radius: f64,
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidConfig("step size must be positive"));
        }
        if !(self.al.penalty > 0.0) {
            return Err(Error::InvalidConfig("penalty must be positive"));
        }
        if let Some(s) = &self.schedule {
            if s.end < s.start {
                return Err(Error::InvalidConfig("schedule end before start"));
            }
        }
        Ok(())
    }
}

/// Fixed problem data: mesh with tagged boundary, loads, solid material and
/// the ersatz parameters.
pub struct DescentProblem<'a> {
    pub mesh: &'a TriMesh,
    pub loads: LoadSpec,
    pub solid: (f64, f64),
    pub eta: f64,
    pub transition_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterEvent {
    Descent,
    LigamentInsert,
    Reinit,
}

impl IterEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            IterEvent::Descent => "descent",
            IterEvent::LigamentInsert => "ligament_insert",
            IterEvent::Reinit => "reinit",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub constraint: f64,
    pub volume: f64,
    pub compliance: f64,
    pub event: IterEvent,
}

/// A grafted bar with its predicted derivative and, for greedy insertion,
/// the measured compliance change.
#[derive(Debug, Clone, Copy)]
pub struct InsertedBar {
    pub iteration: usize,
    pub z1: Vec2,
    pub z2: Vec2,
    pub eps: f64,
    pub predicted: f64,
    pub measured_delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    ComplianceThreshold,
    NoImprovingBar,
    EmptyRun,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::MaxIterations => "max_iterations",
            Termination::ComplianceThreshold => "compliance_threshold",
            Termination::NoImprovingBar => "no_improving_bar",
            Termination::EmptyRun => "empty_run",
        }
    }
}

/// Functional values of one evaluated design.
#[derive(Debug, Clone, Copy)]
pub struct EvalState {
    pub objective: f64,
    pub constraint: f64,
    pub volume: f64,
    pub compliance: f64,
}

pub struct RunOutput {
    pub phi: LevelSet,
    pub history: Vec<IterationRecord>,
    pub bars: Vec<InsertedBar>,
    pub termination: Termination,
    pub final_state: EvalState,
}

/// Descent velocity density for one functional under the advection
/// convention "v > 0 expands the shape": compliance wants material where the
/// elastic energy density A e(u):e(u) is large; the volume shrinks uniformly.
pub fn shape_gradient(
    mesh: &TriMesh,
    u0: &VectorField,
    material: &ElementLame,
    kind: &FunctionalKind,
) -> Result<Vec<f64>> {
    match kind {
        FunctionalKind::Volume => Ok(vec![-1.0; mesh.num_vertices()]),
        FunctionalKind::Compliance => {
            let strains = strain(mesh, u0);
            let mut dens = vec![0.0; mesh.num_vertices()];
            for (t, tri) in mesh.triangles().iter().enumerate() {
                let e = strains.strains[t];
                let energy = hooke_apply(material.lambda[t], material.mu[t], e).ddot(e);
                let third = mesh.area(t) / 3.0;
                for &v in tri {
                    dens[v] += energy * third;
                }
            }
            let va = mesh.vertex_areas();
            for (d, &a) in dens.iter_mut().zip(&va) {
                *d /= a;
            }
            Ok(dens)
        }
        FunctionalKind::DomainIntegrand(_) => Err(Error::InvalidConfig(
            "shape gradient is implemented for compliance and volume",
        )),
    }
}

struct Evaluator<'a> {
    problem: &'a DescentProblem<'a>,
    objective: FunctionalSpec,
    constraint: FunctionalSpec,
}

struct Evaluated {
    state: EvalState,
    u0: VectorField,
    element_material: ElementLame,
    background: LameField,
}

impl<'a> Evaluator<'a> {
    fn eval(&self, phi: &LevelSet) -> Result<Evaluated> {
        let p = self.problem;
        let background = ersatz_field(p.mesh, phi, p.solid, p.eta, p.transition_width)?;
        let element_material = background.to_element(p.mesh);
        let (u0, _) = solve_state(p.mesh, &element_material, &p.loads)?;
        let vol = volume(p.mesh, phi, p.transition_width);
        let comp = compliance(p.mesh, &u0, &p.loads);
        let value = |spec: &FunctionalSpec| -> f64 {
            let raw = match spec.kind {
                FunctionalKind::Compliance => comp,
                FunctionalKind::Volume => vol,
                FunctionalKind::DomainIntegrand(_) => f64::NAN,
            };
            raw - spec.target.unwrap_or(0.0)
        };
        Ok(Evaluated {
            state: EvalState {
                objective: value(&self.objective),
                constraint: value(&self.constraint),
                volume: vol,
                compliance: comp,
            },
            u0,
            element_material,
            background,
        })
    }
}

/// Chooses the best strictly improving, in-domain scan entry.
fn best_improving(entries: &[ScanEntry]) -> Option<&ScanEntry> {
    entries
        .iter()
        .find(|e| e.flag == ScanFlag::Improving && e.jprime < 0.0)
}

fn candidate_points(
    source: &CandidateSource,
    mesh: &TriMesh,
    phi: &LevelSet,
) -> Vec<Vec2> {
    match source {
        CandidateSource::Contour { max_points } => {
            zero_contour_points(mesh, &phi.phi, *max_points)
        }
        CandidateSource::Anchors(points) => points.clone(),
    }
}

/// Runs the ligament scan on the current design: the state's self-adjoint
/// compliance adjoint p₀ = -u₀ is used (all workflows optimize compliance
/// either as objective or constraint), and bars graft full solid material
/// into the ersatz background.
fn scan_current(
    problem: &DescentProblem<'_>,
    config: &OptimConfig,
    evaluated: &Evaluated,
    phi: &LevelSet,
) -> Result<Vec<ScanEntry>> {
    let candidates = candidate_points(&config.candidates, problem.mesh, phi);
    if candidates.len() < 2 {
        return Ok(Vec::new());
    }
    let p0 = VectorField {
        values: evaluated.u0.values.iter().map(|&v| -v).collect(),
    };
    let pair = MaterialPair {
        background: evaluated.background.clone(),
        inclusion: LameField::constant(
            problem.mesh.num_vertices(),
            problem.solid.0,
            problem.solid.1,
        ),
    };
    let ctx = SensitivityContext::new(
        problem.mesh,
        &evaluated.u0,
        &p0,
        &pair,
        config.quad_step,
        config.rho_choice,
    )?;
    scan_segments(&ctx, &candidates, config.eps_insert)
}

/// Augmented-Lagrangian level-set descent with scheduled bar grafting.
///
/// Per iteration: rebuild the ersatz background, solve the state, form the
/// combined descent velocity v_J + (ℓ + cC) v_C, advect with a backtracking
/// line search on the merit, and reinitialize periodically. At scheduled
/// iterations the pair scan runs instead and the best strictly negative bar
/// is grafted (skipped when none improves).
pub fn run_descent(
    problem: &DescentProblem<'_>,
    config: &OptimConfig,
    phi0: &LevelSet,
    mut observer: Option<&mut dyn FnMut(usize, &LevelSet)>,
) -> Result<RunOutput> {
    config.validate()?;
    let evaluator = Evaluator {
        problem,
        objective: config.objective,
        constraint: config.constraint,
    };
    let ops = LevelSetOps::new(problem.mesh);
    let h = problem.mesh.min_cell_size();
    let mut al = config.al;

    let mut phi = phi0.clone();
    let mut bars: Vec<InsertedBar> = Vec::new();
    let mut history: Vec<IterationRecord> = Vec::new();

    if config.max_iterations == 0 {
        let current = evaluator.eval(&phi)?;
        return Ok(RunOutput {
            phi,
            history,
            bars,
            termination: Termination::EmptyRun,
            final_state: current.state,
        });
    }

    let mut current = evaluator.eval(&phi)?;
    for it in 0..config.max_iterations {
        let mut event = IterEvent::Descent;
        let scan_now = config.schedule.map(|s| s.active(it)).unwrap_or(false);

        if scan_now {
            let entries = scan_current(problem, config, &current, &phi)?;
            if let Some(best) = best_improving(&entries) {
                let sigma = Segment::line(best.z1, best.z2);
                phi = insert_ligament(problem.mesh, &phi, &sigma, config.eps_insert);
                // The min() breaks the distance property; restore it now.
                let (reinit, _) = ops.reinitialize(&phi);
                phi = reinit;
                bars.push(InsertedBar {
                    iteration: it,
                    z1: best.z1,
                    z2: best.z2,
                    eps: config.eps_insert,
                    predicted: best.jprime,
                    measured_delta: None,
                });
                event = IterEvent::LigamentInsert;
            }
        } else {
            // Combined descent velocity.
            let v_obj = shape_gradient(
                problem.mesh,
                &current.u0,
                &current.element_material,
                &config.objective.kind,
            )?;
            let v_con = shape_gradient(
                problem.mesh,
                &current.u0,
                &current.element_material,
                &config.constraint.kind,
            )?;
            let weight = al.multiplier + al.penalty * current.state.constraint;
            let velocity: Vec<f64> = v_obj
                .iter()
                .zip(&v_con)
                .map(|(o, c)| o + weight * c)
                .collect();
            let vmax = velocity.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if vmax > 0.0 {
                let merit_old = al.merit(current.state.objective, current.state.constraint);
                let mut dt = config.step * h / vmax;
                let mut accepted: Option<(LevelSet, Evaluated)> = None;
                for _ in 0..=config.max_backtracks {
                    let (trial, _) = ops.advect(&phi, &velocity, dt);
                    let trial_eval = evaluator.eval(&trial)?;
                    let merit_new =
                        al.merit(trial_eval.state.objective, trial_eval.state.constraint);
                    if merit_new < merit_old {
                        accepted = Some((trial, trial_eval));
                        break;
                    }
                    accepted = Some((trial, trial_eval));
                    dt *= 0.5;
                }
                let (new_phi, new_eval) = accepted.unwrap();
                phi = new_phi;
                current = new_eval;
            }
        }

        if !scan_now && config.reinit_period > 0 && (it + 1) % config.reinit_period == 0 {
            let (reinit, _) = ops.reinitialize(&phi);
            phi = reinit;
            if event == IterEvent::Descent {
                event = IterEvent::Reinit;
            }
        }
        if scan_now || event == IterEvent::Reinit {
            current = evaluator.eval(&phi)?;
        }

        al.update(current.state.constraint);
        history.push(IterationRecord {
            iteration: it,
            objective: current.state.objective,
            constraint: current.state.constraint,
            volume: current.state.volume,
            compliance: current.state.compliance,
            event,
        });
        if let Some(obs) = observer.as_deref_mut() {
            obs(it, &phi);
        }
    }

    Ok(RunOutput {
        final_state: current.state,
        phi,
        history,
        bars,
        termination: Termination::MaxIterations,
    })
}

/// Initial level set for greedy initialization: everything void except solid
/// pads at the anchors and solid strips along the clamped and loaded
/// boundary parts.
pub fn greedy_initial_phi(
    mesh: &TriMesh,
    anchors: &[Vec2],
    pad_radius: f64,
) -> LevelSet {
    let mut strips: Vec<(Vec2, Vec2)> = Vec::new();
    for edge in mesh.boundary_edges() {
        if matches!(edge.tag, BoundaryTag::GammaD | BoundaryTag::GammaN) {
            strips.push((mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1])));
        }
    }
    let phi = (0..mesh.num_vertices())
        .map(|v| {
            let p = mesh.vertex(v);
            let mut d = f64::INFINITY;
            for a in anchors {
                d = d.min(p.dist(*a));
            }
            for &(a, b) in &strips {
                d = d.min(crate::geom::dist_point_segment(p, a, b));
            }
            d - pad_radius
        })
        .collect();
    LevelSet::new(phi)
}

/// Greedy bar insertion from a near-empty design: scan anchor pairs, graft
/// the best predicted bar, keep it only if the measured compliance drops,
/// and stop at the compliance threshold or when no candidate improves.
pub fn run_greedy_init(
    problem: &DescentProblem<'_>,
    config: &OptimConfig,
    anchors: &[Vec2],
    mut observer: Option<&mut dyn FnMut(usize, &LevelSet)>,
) -> Result<RunOutput> {
    config.validate()?;
    if anchors.len() < 2 {
        return Err(Error::InsufficientCandidates);
    }
    let evaluator = Evaluator {
        problem,
        objective: config.objective,
        constraint: config.constraint,
    };
    let ops = LevelSetOps::new(problem.mesh);
    let anchor_config = OptimConfig {
        candidates: CandidateSource::Anchors(anchors.to_vec()),
        ..config.clone()
    };

    let mut phi = greedy_initial_phi(problem.mesh, anchors, config.pad_radius);
    let (reinit, _) = ops.reinitialize(&phi);
    phi = reinit;

    let mut history = Vec::new();
    let mut bars = Vec::new();
    let mut rejected: Vec<(usize, usize)> = Vec::new();
    let mut current = evaluator.eval(&phi)?;
    let mut termination = Termination::MaxIterations;

    for it in 0..config.max_iterations {
        if current.state.compliance <= config.compliance_threshold {
            termination = Termination::ComplianceThreshold;
            break;
        }
        let entries = scan_current(problem, &anchor_config, &current, &phi)?;
        let mut inserted = false;
        for entry in entries.iter() {
            if entry.flag != ScanFlag::Improving || rejected.contains(&(entry.i, entry.j)) {
                continue;
            }
            let sigma = Segment::line(entry.z1, entry.z2);
            let trial = insert_ligament(problem.mesh, &phi, &sigma, config.eps_insert);
            let (trial, _) = ops.reinitialize(&trial);
            let trial_eval = evaluator.eval(&trial)?;
            let delta = trial_eval.state.compliance - current.state.compliance;
            if delta < 0.0 {
                bars.push(InsertedBar {
                    iteration: it,
                    z1: entry.z1,
                    z2: entry.z2,
                    eps: config.eps_insert,
                    predicted: entry.jprime,
                    measured_delta: Some(delta),
                });
                phi = trial;
                current = trial_eval;
                inserted = true;
                break;
            }
            // Rolled back; never try this pair again.
            rejected.push((entry.i, entry.j));
        }
        if !inserted {
            termination = Termination::NoImprovingBar;
            break;
        }
        history.push(IterationRecord {
            iteration: it,
            objective: current.state.objective,
            constraint: current.state.constraint,
            volume: current.state.volume,
            compliance: current.state.compliance,
            event: IterEvent::LigamentInsert,
        });
        if let Some(obs) = observer.as_deref_mut() {
            obs(it, &phi);
        }
    }

    Ok(RunOutput {
        final_state: current.state,
        phi,
        history,
        bars,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TagRule;

    fn cantilever(nx: usize, ny: usize) -> TriMesh {
        TriMesh::build_structured(2.0, 1.0, nx, ny)
            .unwrap()
            .tag_boundary(&[
                TagRule::new(BoundaryTag::GammaD, |m| m.x < 1e-9),
                TagRule::new(BoundaryTag::GammaN, |m| {
                    m.x > 2.0 - 1e-9 && (m.y - 0.5).abs() <= 0.0625 + 1e-12
                }),
            ])
    }

    fn base_config() -> OptimConfig {
        OptimConfig {
            objective: FunctionalSpec::compliance(),
            constraint: FunctionalSpec::volume().with_target(1.6),
            step: 0.5,
            al: AugmentedLagrangian {
                multiplier: 0.0,
                penalty: 2.0,
                growth: 1.02,
                penalty_max: 100.0,
            },
            schedule: None,
            eps_insert: 0.06,
            candidates: CandidateSource::Contour { max_points: 60 },
            quad_step: 0.05,
            rho_choice: RhoDenominator::Mu1,
            max_iterations: 0,
            reinit_period: 5,
            max_backtracks: 10,
            compliance_threshold: 0.0,
            pad_radius: 0.08,
        }
    }

    fn holey_phi(mesh: &TriMesh) -> LevelSet {
        let holes = [
            Vec2::new(0.5, 0.25),
            Vec2::new(0.5, 0.75),
            Vec2::new(1.0, 0.5),
            Vec2::new(1.5, 0.25),
            Vec2::new(1.5, 0.75),
        ];
        LevelSet::new(
            (0..mesh.num_vertices())
                .map(|v| {
                    let p = mesh.vertex(v);
                    holes
                        .iter()
                        .map(|c| 0.13 - p.dist(*c))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect(),
        )
    }

    #[test]
    fn zero_iterations_returns_input_and_empty_history() {
        let mesh = cantilever(16, 8);
        let problem = DescentProblem {
            mesh: &mesh,
            loads: LoadSpec::traction_only(Vec2::new(0.0, -1.0)),
            solid: (1.0, 1.0),
            eta: 1e-3,
            transition_width: 2.0 * 2.0 / 16.0,
        };
        let phi0 = holey_phi(&mesh);
        let out = run_descent(&problem, &base_config(), &phi0, None).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.termination, Termination::EmptyRun);
        assert_eq!(out.phi.phi, phi0.phi);
    }

    #[test]
    fn velocity_is_zero_for_zero_state_and_minus_one_for_volume() {
        let mesh = cantilever(8, 4);
        let u0 = VectorField::zeros(mesh.num_vertices());
        let mat = LameField::constant(mesh.num_vertices(), 1.0, 1.0).to_element(&mesh);
        let v = shape_gradient(&mesh, &u0, &mat, &FunctionalKind::Compliance).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
        let v = shape_gradient(&mesh, &u0, &mat, &FunctionalKind::Volume).unwrap();
        assert!(v.iter().all(|&x| x == -1.0));
    }

    #[test]
    fn pure_compliance_descent_decreases_compliance() {
        // Zero penalty, fixed multiplier: backtracked steps must reduce the
        // objective on at least 80% of iterations.
        let mesh = cantilever(32, 16);
        let problem = DescentProblem {
            mesh: &mesh,
            loads: LoadSpec::traction_only(Vec2::new(0.0, -1.0)),
            solid: (1.0, 1.0),
            eta: 1e-3,
            transition_width: 2.0 * 2.0 / 32.0,
        };
        let mut config = base_config();
        config.max_iterations = 10;
        config.al = AugmentedLagrangian {
            multiplier: 0.0,
            penalty: 1e-12,
            growth: 1.0,
            penalty_max: 1e-12,
        };
        let phi0 = holey_phi(&mesh);
        let out = run_descent(&problem, &config, &phi0, None).unwrap();
        assert_eq!(out.history.len(), 10);
        let mut decreases = 0;
        let mut prev = f64::INFINITY;
        for rec in &out.history {
            assert!(rec.compliance.is_finite() && rec.volume.is_finite());
            if rec.compliance < prev {
                decreases += 1;
            }
            prev = rec.compliance;
        }
        assert!(
            decreases * 10 >= out.history.len() * 8,
            "only {decreases}/{} decreasing",
            out.history.len()
        );
    }

    #[test]
    fn greedy_init_threshold_respected_and_monotone() {
        let mesh = cantilever(32, 16);
        let problem = DescentProblem {
            mesh: &mesh,
            loads: LoadSpec::traction_only(Vec2::new(0.0, -1.0)),
            solid: (1.0, 1.0),
            eta: 1e-3,
            transition_width: 2.0 * 2.0 / 32.0,
        };
        let anchors = vec![
            Vec2::new(0.1, 0.1),
            Vec2::new(0.1, 0.9),
            Vec2::new(1.0, 0.1),
            Vec2::new(1.0, 0.9),
            Vec2::new(1.9, 0.5),
        ];
        let mut config = base_config();
        config.max_iterations = 10;
        config.compliance_threshold = f64::INFINITY;
        // Threshold at or above the initial compliance: zero insertions.
        let out = run_greedy_init(&problem, &config, &anchors, None).unwrap();
        assert!(out.bars.is_empty());
        assert_eq!(out.termination, Termination::ComplianceThreshold);

        // Finite threshold: strictly decreasing measured compliance.
        config.compliance_threshold = 0.0;
        config.max_iterations = 4;
        let out = run_greedy_init(&problem, &config, &anchors, None).unwrap();
        assert!(!out.bars.is_empty(), "no bars inserted");
        for bar in &out.bars {
            assert!(bar.predicted < 0.0);
            assert!(bar.measured_delta.unwrap() < 0.0);
        }
        let compliances: Vec<f64> = out.history.iter().map(|r| r.compliance).collect();
        for w in compliances.windows(2) {
            assert!(w[1] < w[0], "compliance not strictly decreasing: {compliances:?}");
        }
    }
}
