//! Box-constrained ridge least squares:
//!
//! ```text
//! minimize   ‖X v + b − t‖² + λ ‖v‖²
//! subject to lo_d ≤ v_d ≤ hi_d
//! ```
//!
//! solved by cyclic coordinate descent with exact, clipped coordinate
//! updates. Both the adverb problem and the sentiment-word problem of the
//! score learner reduce to this form.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// A closed interval; either endpoint may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn at_least(lo: f64) -> Self {
        Interval { lo, hi: f64::INFINITY }
    }

    pub fn at_most(hi: f64) -> Self {
        Interval { lo: f64::NEG_INFINITY, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn project(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    fn is_valid(&self) -> bool {
        !self.lo.is_nan() && !self.hi.is_nan() && self.lo <= self.hi && self.lo < f64::INFINITY && self.hi > f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedLsqProblem {
    design: Array2<f64>,
    bias: Array1<f64>,
    targets: Array1<f64>,
    lambda: f64,
    bounds: Vec<Interval>,
}

impl ConstrainedLsqProblem {
    pub fn new(
        design: Array2<f64>,
        bias: Array1<f64>,
        targets: Array1<f64>,
        lambda: f64,
        bounds: Vec<Interval>,
    ) -> Result<Self> {
        let (rows, cols) = design.dim();
        if bias.len() != rows || targets.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "design has {rows} rows but bias has {} and targets {}",
                bias.len(),
                targets.len()
            )));
        }
        if bounds.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "design has {cols} columns but {} bounds were given",
                bounds.len()
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if let Some(d) = bounds.iter().position(|b| !b.is_valid()) {
            return Err(Error::InvalidArgument(format!("bound {d} is empty: {:?}", bounds[d])));
        }
        let finite = design.iter().chain(bias.iter()).chain(targets.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("problem data must be finite".into()));
        }
        Ok(ConstrainedLsqProblem { design, bias, targets, lambda, bounds })
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.targets
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn rows(&self) -> usize {
        self.design.nrows()
    }

    pub fn cols(&self) -> usize {
        self.design.ncols()
    }

    /// The feasible point nearest the origin.
    pub fn feasible_origin(&self) -> Array1<f64> {
        self.bounds.iter().map(|b| b.project(0.0)).collect()
    }

    fn check_len(&self, v: ArrayView1<f64>) -> Result<()> {
        if v.len() == self.cols() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("expected {} coordinates, got {}", self.cols(), v.len())))
        }
    }

    fn residual(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.design.dot(&v) + &self.bias - &self.targets
    }

    /// `‖X v + b − t‖² + λ ‖v‖²`.
    pub fn objective(&self, v: ArrayView1<f64>) -> Result<f64> {
        self.check_len(v)?;
        let r = self.residual(v);
        Ok(r.dot(&r) + self.lambda * v.dot(&v))
    }

    /// Gradient of the objective at `v`.
    pub fn gradient(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_len(v)?;
        let r = self.residual(v);
        Ok((self.design.t().dot(&r) + &v * self.lambda) * 2.0)
    }

    /// First-order optimality violation of a feasible point.
    pub fn kkt_residual(&self, v: ArrayView1<f64>) -> Result<f64> {
        self.check_len(v)?;
        for (index, (&value, b)) in v.iter().zip(&self.bounds).enumerate() {
            if !b.contains(value) {
                return Err(Error::Infeasible { index, value, lo: b.lo, hi: b.hi });
            }
        }
        let grad = self.gradient(v)?;
        Ok(kkt_from_gradient(v, grad.view(), &self.bounds))
    }

    /// Serializes the problem to the line-oriented debug format.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# constrained-lsq v1");
        let _ = writeln!(out, "{} {} {}", self.rows(), self.cols(), self.lambda);
        for b in &self.bounds {
            let _ = writeln!(out, "{} {}", b.lo, b.hi);
        }
        for (m, row) in self.design.axis_iter(Axis(0)).enumerate() {
            for x in row {
                let _ = write!(out, "{x} ");
            }
            let _ = writeln!(out, "{} {}", self.bias[m], self.targets[m]);
        }
        out
    }

    /// Parses the debug format written by [`to_debug_text`](Self::to_debug_text).
    pub fn from_debug_text(input: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(input)
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.starts_with('#')));
        let mut next_numbers = |expected: Option<usize>| -> Result<(usize, Vec<f64>)> {
            let (n, line) = lines.next().ok_or_else(|| Error::parse("problem", 0, "unexpected end of input"))?;
            let line = line.map_err(|e| Error::io("problem", e))?;
            let nums = line
                .split_whitespace()
                .map(|f| f.parse::<f64>().map_err(|_| Error::parse("problem", n + 1, format!("bad number `{f}`"))))
                .collect::<Result<Vec<_>>>()?;
            if let Some(k) = expected.filter(|&k| k != nums.len()) {
                return Err(Error::parse("problem", n + 1, format!("expected {k} numbers, found {}", nums.len())));
            }
            Ok((n + 1, nums))
        };
        let (_, header) = next_numbers(Some(3))?;
        let (rows, cols, lambda) = (header[0] as usize, header[1] as usize, header[2]);
        let mut bounds = Vec::with_capacity(cols);
        for _ in 0..cols {
            let (_, b) = next_numbers(Some(2))?;
            bounds.push(Interval::new(b[0], b[1]));
        }
        let mut design = Array2::zeros((rows, cols));
        let mut bias = Array1::zeros(rows);
        let mut targets = Array1::zeros(rows);
        for m in 0..rows {
            let (_, row) = next_numbers(Some(cols + 2))?;
            for d in 0..cols {
                design[[m, d]] = row[d];
            }
            bias[m] = row[cols];
            targets[m] = row[cols + 1];
        }
        ConstrainedLsqProblem::new(design, bias, targets, lambda, bounds)
    }
}

fn kkt_from_gradient(v: ArrayView1<f64>, grad: ArrayView1<f64>, bounds: &[Interval]) -> f64 {
    v.iter()
        .zip(grad.iter())
        .zip(bounds)
        .map(|((&x, &g), b)| {
            let at_lo = x <= b.lo;
            let at_hi = x >= b.hi;
            match (at_lo, at_hi) {
                (true, true) => 0.0,
                (true, false) => (-g).max(0.0),
                (false, true) => g.max(0.0),
                (false, false) => g.abs(),
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// KKT residual at which the solve is declared converged.
    pub tol: f64,
    /// Maximum number of full coordinate sweeps.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub solution: Array1<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Cyclic coordinate descent state. Exposed so callers can observe
/// per-sweep progress; most code should call [`solve`].
pub struct CoordinateDescent<'a> {
    problem: &'a ConstrainedLsqProblem,
    columns: Vec<Array1<f64>>,
    curvature: Vec<f64>,
    v: Array1<f64>,
    residual: Array1<f64>,
    last_step: f64,
}

impl<'a> CoordinateDescent<'a> {
    /// Starts from the feasible point nearest the origin.
    pub fn new(problem: &'a ConstrainedLsqProblem) -> Self {
        Self::from_start(problem, problem.feasible_origin()).expect("origin projection is feasible")
    }

    /// Starts from `start` projected onto the box.
    pub fn from_start(problem: &'a ConstrainedLsqProblem, start: Array1<f64>) -> Result<Self> {
        problem.check_len(start.view())?;
        let v: Array1<f64> = start.iter().zip(&problem.bounds).map(|(&x, b)| b.project(x)).collect();
        let columns: Vec<Array1<f64>> = problem.design.columns().into_iter().map(|c| c.to_owned()).collect();
        let curvature = columns.iter().map(|c| c.dot(c) + problem.lambda).collect();
        let residual = problem.residual(v.view());
        Ok(CoordinateDescent { problem, columns, curvature, v, residual, last_step: f64::INFINITY })
    }

    pub fn solution(&self) -> &Array1<f64> {
        &self.v
    }

    pub fn objective(&self) -> f64 {
        self.residual.dot(&self.residual) + self.problem.lambda * self.v.dot(&self.v)
    }

    /// Largest coordinate change made by the most recent sweep.
    pub fn last_step(&self) -> f64 {
        self.last_step
    }

    pub fn kkt_residual(&self) -> f64 {
        let grad: Array1<f64> = self
            .columns
            .iter()
            .zip(self.v.iter())
            .map(|(c, &x)| 2.0 * (c.dot(&self.residual) + self.problem.lambda * x))
            .collect();
        kkt_from_gradient(self.v.view(), grad.view(), &self.problem.bounds)
    }

    /// One pass over all coordinates in index order; returns the objective
    /// afterwards.
    pub fn sweep(&mut self) -> f64 {
        let lambda = self.problem.lambda;
        self.last_step = 0.0;
        for d in 0..self.v.len() {
            let h = self.curvature[d];
            // zero column with λ = 0: the objective does not depend on v_d
            if h <= 0.0 {
                continue;
            }
            let col = &self.columns[d];
            let g = col.dot(&self.residual) + lambda * self.v[d];
            let old = self.v[d];
            let new = self.problem.bounds[d].project(old - g / h);
            let step = new - old;
            if step != 0.0 {
                self.last_step = self.last_step.max(step.abs());
                self.v[d] = new;
                self.residual.scaled_add(step, col);
            }
        }
        self.objective()
    }
}

/// Minimizes the problem from the feasible point nearest the origin.
///
/// Stops when the KKT residual drops to `options.tol`, when a sweep no longer
/// moves any coordinate beyond machine precision, or after `options.max_iter`
/// sweeps. `converged` reports whether the KKT tolerance was met.
pub fn solve(problem: &ConstrainedLsqProblem, options: SolverOptions) -> Result<SolverReport> {
    solve_from(problem, problem.feasible_origin(), options)
}

/// As [`solve`], warm-started from `start` (projected onto the box).
pub fn solve_from(problem: &ConstrainedLsqProblem, start: Array1<f64>, options: SolverOptions) -> Result<SolverReport> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", options.tol)));
    }
    let mut cd = CoordinateDescent::from_start(problem, start)?;
    let mut kkt = cd.kkt_residual();
    let mut iterations = 0;
    while kkt > options.tol && iterations < options.max_iter {
        cd.sweep();
        iterations += 1;
        kkt = cd.kkt_residual();
        let scale = cd.v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if cd.last_step <= f64::EPSILON * scale {
            break;
        }
    }
    // recompute from scratch so the report does not carry drift in the
    // incrementally updated residual
    let solution = cd.v;
    let objective = problem.objective(solution.view())?;
    let kkt_residual = problem.kkt_residual(solution.view())?;
    Ok(SolverReport { converged: kkt_residual <= options.tol, solution, objective, iterations, kkt_residual })
}
