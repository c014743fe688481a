//! Solves a small box-constrained ridge least-squares problem.

use ndarray::array;
use sentilex::qp::{solve, ConstrainedLsqProblem, Interval, SolverOptions};

fn main() -> sentilex::Result<()> {
    let design = array![[1.0, 0.0, 0.5], [0.0, 1.0, 0.5], [1.0, 1.0, 0.0], [0.5, 0.0, 1.0]];
    let bias = array![0.0, 0.1, 0.0, -0.1];
    let targets = array![1.0, -1.0, 0.0, 1.0];
    let bounds = vec![Interval::at_least(1e-6), Interval::at_most(-1e-6), Interval::new(0.0, 0.3)];
    let problem = ConstrainedLsqProblem::new(design, bias, targets, 0.1, bounds)?;

    let report = solve(&problem, SolverOptions::default())?;
    println!("solution   {:.6}", report.solution);
    println!("objective  {:.6}", report.objective);
    println!("sweeps     {}", report.iterations);
    println!("kkt        {:.2e} (converged: {})", report.kkt_residual, report.converged);
    Ok(())
}
