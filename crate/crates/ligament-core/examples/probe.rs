//! Scratch numerical probe for the validation cases (development aid).

use std::time::Instant;

use ligament_core::cases;
use ligament_core::elasticity::solve_state;
use ligament_core::functionals::FunctionalSpec;
use ligament_core::ligament::RhoDenominator;
use ligament_core::validation::{fd_check, resolve_rho};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("bridge");
    let nx: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(128);

    match which {
        "bridge" => {
            let t0 = Instant::now();
            let case = cases::bridged_cantilever(nx, nx / 2, 1e-3, 10.0);
            let eps: Vec<f64> = args
                .get(3)
                .map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
                .unwrap_or_else(|| vec![0.08, 0.04, 0.02, 0.01]);
            println!("mesh {}x{}, h_diam = {:.5}", nx, nx / 2, case.mesh.max_cell_diameter());
            let report = fd_check(
                &case.mesh,
                &case.pair,
                &case.sigma,
                &case.loads,
                &FunctionalSpec::compliance(),
                &eps,
                0.01,
                RhoDenominator::Mu1,
            )
            .unwrap();
            println!("predicted J' = {:.8e}", report.predicted);
            for e in &report.entries {
                println!(
                    "eps {:6.3}  J(eps) {:.10e}  J0 {:.10e}  eff {:.8e}  rel_err {:.4}  sign {}  underres {}",
                    e.eps, e.j_eps, e.j0, e.effective, e.rel_error, e.sign_agrees, e.under_resolved
                );
            }
            println!(
                "monotone {} slope {:.3} terminal {:.4}  [{}s]",
                report.monotone_error_decrease,
                report.remainder_slope,
                report.terminal_rel_error,
                t0.elapsed().as_secs_f64()
            );
        }
        "rho" => {
            let case = cases::rho_discriminating(nx, nx / 2);
            let eps: Vec<f64> = vec![0.08, 0.04, 0.02, 0.01];
            let t0 = Instant::now();
            let exp = resolve_rho(
                &case.mesh,
                &case.pair,
                &case.sigma,
                &case.loads,
                &FunctionalSpec::compliance(),
                &eps,
                0.01,
            )
            .unwrap();
            println!("mu0: predicted {:.8e}", exp.report_mu0.predicted);
            for e in &exp.report_mu0.entries {
                println!("  eps {:6.3} eff {:.8e} rel_err {:.4}", e.eps, e.effective, e.rel_error);
            }
            println!("mu1: predicted {:.8e}", exp.report_mu1.predicted);
            for e in &exp.report_mu1.entries {
                println!("  eps {:6.3} eff {:.8e} rel_err {:.4}", e.eps, e.effective, e.rel_error);
            }
            println!("resolution: {:?}  [{}s]", exp.resolution, t0.elapsed().as_secs_f64());
        }
        "time" => {
            let case = cases::bridged_cantilever(nx, nx / 2, 1e-3, 10.0);
            let mat = case.pair.background.to_element(&case.mesh);
            let t0 = Instant::now();
            let (u, stats) = solve_state(&case.mesh, &mat, &case.loads).unwrap();
            println!(
                "nx {}: ndof {} iters {} res {:.2e} time {:.2}s  |u| {:.6}",
                nx,
                2 * case.mesh.num_vertices(),
                stats.iterations,
                stats.residual,
                t0.elapsed().as_secs_f64(),
                u.norm()
            );
        }
        other => eprintln!("unknown probe {other}"),
    }
}
