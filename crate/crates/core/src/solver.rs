//! Minimization of `A_ε` over mean-zero nodal functions and continuation in `ε`.
//!
//! Each `ε` is solved by damped Newton with Armijo backtracking. The Hessian
//! annihilates constants, so one node is grounded for the linear solve and the
//! update is then projected back to mean zero; this yields the same update as
//! solving on the mean-zero subspace.

use serde::{Deserialize, Serialize};

use crate::chart::{Chart, NodalFunction, Winding};
use crate::error::{Error, Result};
use crate::functional::AreaFunctional;
use crate::linalg::ProfileMatrix;

pub use crate::levelset::{beta_diagnostic, BetaRow, LevelSetDiagnostics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Explicit schedule; when empty, `eps_start · eps_factor^j` down to `eps_min`.
    pub eps_schedule: Vec<f64>,
    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_min: f64,
    /// Newton stops when `|r| ≤ max(rtol · |r_0|, atol)`.
    pub newton_rtol: f64,
    pub newton_atol: f64,
    pub max_newton: usize,
    pub backtrack_factor: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Continuation stops when `sup |u_ε − u_ε'| <` this between consecutive levels.
    pub continuation_tol: f64,
    /// Stop the schedule as soon as the continuation test passes.
    pub early_stop: bool,
    /// Boundary margin (fraction of the axis extent) excluded from gradient metrics.
    pub interior_margin: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            eps_schedule: Vec::new(),
            eps_start: 1.0,
            eps_factor: 0.25,
            eps_min: 1e-5,
            newton_rtol: 1e-10,
            newton_atol: 1e-12,
            max_newton: 60,
            backtrack_factor: 0.5,
            armijo: 1e-4,
            max_backtracks: 50,
            continuation_tol: 1e-6,
            early_stop: true,
            interior_margin: 0.1,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::parameter(format!("solver.{name}"), format!("must be positive (got {v})")))
            }
        };
        if self.eps_schedule.is_empty() {
            positive("eps_start", self.eps_start)?;
            positive("eps_min", self.eps_min)?;
            if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
                return Err(Error::parameter("solver.eps_factor", "must lie in (0, 1)"));
            }
            if self.eps_min > self.eps_start {
                return Err(Error::parameter("solver.eps_min", "must not exceed eps_start"));
            }
        } else {
            for (i, &e) in self.eps_schedule.iter().enumerate() {
                positive(&format!("eps_schedule[{i}]"), e)?;
                if i > 0 && e >= self.eps_schedule[i - 1] {
                    return Err(Error::parameter(
                        format!("solver.eps_schedule[{i}]"),
                        "schedule must be strictly decreasing",
                    ));
                }
            }
        }
        positive("newton_rtol", self.newton_rtol)?;
        positive("newton_atol", self.newton_atol)?;
        positive("armijo", self.armijo)?;
        positive("continuation_tol", self.continuation_tol)?;
        if self.armijo >= 0.5 {
            return Err(Error::parameter("solver.armijo", "must be below 1/2"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::parameter("solver.backtrack_factor", "must lie in (0, 1)"));
        }
        if self.max_newton == 0 {
            return Err(Error::parameter("solver.max_newton", "must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.interior_margin) {
            return Err(Error::parameter("solver.interior_margin", "must lie in [0, 1/2)"));
        }
        Ok(())
    }

    /// The decreasing sequence of regularization parameters.
    pub fn schedule(&self) -> Vec<f64> {
        if !self.eps_schedule.is_empty() {
            return self.eps_schedule.clone();
        }
        let mut out = Vec::new();
        let mut e = self.eps_start;
        while e > self.eps_min * (1.0 + 1e-12) {
            out.push(e);
            e *= self.eps_factor;
        }
        out.push(self.eps_min);
        out
    }
}

/// Outcome of the Newton solve at one `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsStats {
    pub eps: f64,
    pub iterations: usize,
    pub backtracks: usize,
    pub initial_residual: f64,
    pub residual: f64,
    /// `A(u_ε)`
    pub area: f64,
    /// `A_ε(u_ε)`
    pub area_eps: f64,
    /// `ε ∫ |du_ε|²`
    pub eps_energy: f64,
    /// Sup of `|du_ε|_g` over interior simplices.
    pub sup_grad_interior: f64,
    /// Sup of `|du_ε|_g` over all simplices.
    pub sup_grad: f64,
    /// Lumped mean of `u_ε` relative to the total volume.
    pub mean_defect: f64,
    /// `A_ε` never increased across accepted Newton steps.
    pub monotone: bool,
    /// Sup-norm change from the previous level.
    pub change: Option<f64>,
}

/// State dump attached to a solver failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonconvergenceInfo {
    pub reason: String,
    pub eps: f64,
    pub iterations: usize,
    pub residual: f64,
    pub state: Vec<f64>,
    pub completed: Vec<EpsStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub levels: Vec<EpsStats>,
    pub u0: NodalFunction,
    /// `A(u_0)`
    pub area: f64,
    /// `A_1(0)`, the bound on `ε ∫ |du_ε|²`.
    pub energy_bound: f64,
    pub converged: bool,
    pub verdict: String,
    /// `h ≡ 0`: both sheets coincide.
    pub degenerate_thickness: bool,
}

impl SolveReport {
    /// Relative change of the interior gradient sup over the last two levels.
    pub fn gradient_variation(&self) -> Option<f64> {
        let n = self.levels.len();
        if n < 2 {
            return None;
        }
        let (a, b) = (self.levels[n - 2].sup_grad_interior, self.levels[n - 1].sup_grad_interior);
        let scale = a.max(b);
        Some(if scale < 1e-6 { 0.0 } else { (a - b).abs() / scale })
    }
}

/// Newton solver bound to one chart, reusing the matrix profile across solves.
pub struct Solver<'c> {
    chart: &'c Chart,
    functional: AreaFunctional<'c>,
    config: SolveConfig,
    matrix: ProfileMatrix,
    interior: Vec<bool>,
    ground: usize,
}

fn nonfinite_to_data(e: Error) -> Error {
    match e {
        Error::NonFinite { simplex } => Error::Data(format!("functional is not finite on simplex {simplex}")),
        other => other,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl<'c> Solver<'c> {
    pub fn new(chart: &'c Chart, config: SolveConfig) -> Result<Self> {
        config.validate()?;
        let interior = chart.interior_mask(config.interior_margin);
        // ground the node of largest lumped mass
        let ground = chart
            .node_weights
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &w)| if w > best.1 { (i, w) } else { best })
            .0;
        Ok(Self {
            chart,
            functional: AreaFunctional::new(chart),
            matrix: ProfileMatrix::from_adjacency(&chart.grid.adjacency()),
            config,
            interior,
            ground,
        })
    }

    pub fn config(&self) -> &SolveConfig {
        &self.config
    }

    fn fail(&self, reason: String, eps: f64, iterations: usize, residual: f64, u: &NodalFunction) -> Error {
        Error::Nonconvergence(Box::new(NonconvergenceInfo {
            reason,
            eps,
            iterations,
            residual,
            state: u.values.clone(),
            completed: Vec::new(),
        }))
    }

    /// Minimize `A_ε` starting from `warm_start` (projected to mean zero).
    pub fn minimize_eps(&mut self, eps: f64, warm_start: &NodalFunction) -> Result<(NodalFunction, EpsStats)> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::parameter("eps", format!("must be positive (got {eps})")));
        }
        let cfg = self.config.clone();
        let f = self.functional;
        let mut u = warm_start.clone();
        self.chart.project_mean_zero(&mut u);
        let mut value = f.area_eps(&u, eps).map_err(nonfinite_to_data)?;
        let mut r = f.first_variation(&u, eps)?;
        let r0 = norm(&r);
        let tol = (cfg.newton_rtol * r0).max(cfg.newton_atol);
        let mut iterations = 0;
        let mut backtracks = 0;
        let mut monotone = true;
        let mut res = r0;

        while res > tol {
            if iterations >= cfg.max_newton {
                return Err(self.fail(
                    format!("no convergence after {iterations} Newton iterations (residual {res:e}, tolerance {tol:e})"),
                    eps,
                    iterations,
                    res,
                    &u,
                ));
            }
            iterations += 1;
            f.assemble_hessian(&u, eps, &mut self.matrix)?;
            self.matrix.ground(self.ground);
            let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            rhs[self.ground] = 0.0;
            let factor = self.matrix.clone().cholesky()?;
            let mut step = NodalFunction::new(factor.solve(&rhs));
            self.chart.project_mean_zero(&mut step);

            let slope: f64 = r.iter().zip(&step.values).map(|(a, b)| a * b).sum();
            if !slope.is_finite() {
                return Err(Error::Data("non-finite Newton direction".to_string()));
            }
            let step_size = step.sup_norm();
            let roundoff = -slope <= 1e-13 * value.abs().max(1.0);
            if roundoff {
                // the decrease is below the resolution of A_ε; take the full step
                for (x, d) in u.values.iter_mut().zip(&step.values) {
                    *x += d;
                }
                let new_value = f.area_eps(&u, eps).map_err(nonfinite_to_data)?;
                if new_value > value + 1e-13 * value.abs().max(1.0) {
                    monotone = false;
                }
                value = new_value;
                r = f.first_variation(&u, eps)?;
                res = norm(&r);
                if step_size <= 1e-14 * (1.0 + u.sup_norm()) {
                    break;
                }
                continue;
            }
            if slope >= 0.0 {
                return Err(self.fail("Newton direction is not a descent direction".to_string(), eps, iterations, res, &u));
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..=cfg.max_backtracks {
                let trial = NodalFunction {
                    values: u.values.iter().zip(&step.values).map(|(x, d)| x + alpha * d).collect(),
                    winding: u.winding,
                };
                let tv = f.area_eps(&trial, eps).map_err(nonfinite_to_data)?;
                if tv <= value + cfg.armijo * alpha * slope {
                    if tv > value {
                        monotone = false;
                    }
                    u = trial;
                    value = tv;
                    accepted = true;
                    break;
                }
                alpha *= cfg.backtrack_factor;
                backtracks += 1;
            }
            if !accepted {
                return Err(self.fail(
                    format!("line search failed after {} backtracks", cfg.max_backtracks),
                    eps,
                    iterations,
                    res,
                    &u,
                ));
            }
            self.chart.project_mean_zero(&mut u);
            r = f.first_variation(&u, eps)?;
            res = norm(&r);
        }
        self.chart.project_mean_zero(&mut u);
        let stats = self.stats(eps, &u, iterations, backtracks, r0, res, monotone)?;
        Ok((u, stats))
    }

    #[allow(clippy::too_many_arguments)]
    fn stats(
        &self,
        eps: f64,
        u: &NodalFunction,
        iterations: usize,
        backtracks: usize,
        r0: f64,
        res: f64,
        monotone: bool,
    ) -> Result<EpsStats> {
        let f = self.functional;
        let area = f.area(u).map_err(nonfinite_to_data)?;
        let energy = f.dirichlet_energy(u)?;
        let norms = f.gradient_norms(u)?;
        let sup_grad = norms.iter().fold(0.0f64, |m, v| m.max(*v));
        let sup_grad_interior = norms
            .iter()
            .zip(&self.interior)
            .filter(|(_, &inside)| inside)
            .fold(0.0f64, |m, (v, _)| m.max(*v));
        let mean_defect = self.chart.mean(u).abs();
        Ok(EpsStats {
            eps,
            iterations,
            backtracks,
            initial_residual: r0,
            residual: res,
            area,
            area_eps: area + eps * energy,
            eps_energy: eps * energy,
            sup_grad_interior,
            sup_grad,
            mean_defect,
            monotone,
            change: None,
        })
    }

    /// Run the full `ε` schedule from `warm_start` (zero when `None`) at a fixed winding.
    pub fn continuation(&mut self, warm_start: Option<&NodalFunction>, winding: Winding) -> Result<SolveReport> {
        let n = self.chart.node_count();
        let mut u = match warm_start {
            Some(w) => {
                if w.values.len() != n {
                    return Err(Error::Data(format!("warm start has {} values for {n} nodes", w.values.len())));
                }
                if w.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Data("warm start is not finite".to_string()));
                }
                w.clone().with_winding(winding)
            }
            None => NodalFunction::zeros(n).with_winding(winding),
        };
        let zero = NodalFunction::zeros(n).with_winding(winding);
        let energy_bound = self.functional.area_eps(&zero, 1.0).map_err(nonfinite_to_data)?;
        let mut levels: Vec<EpsStats> = Vec::new();
        let mut converged = false;
        for eps in self.config.schedule() {
            let (next, mut stats) = match self.minimize_eps(eps, &u) {
                Ok(v) => v,
                Err(Error::Nonconvergence(mut info)) => {
                    info.completed = levels;
                    return Err(Error::Nonconvergence(info));
                }
                Err(e) => return Err(e),
            };
            if !levels.is_empty() {
                let change = next.max_abs_diff(&u);
                stats.change = Some(change);
                converged = change < self.config.continuation_tol;
            }
            levels.push(stats);
            u = next;
            if converged && self.config.early_stop {
                break;
            }
        }
        let area = self.functional.area(&u).map_err(nonfinite_to_data)?;
        let degenerate_thickness = self.chart.thickness.is_degenerate();
        let verdict = if converged {
            "converged".to_string()
        } else {
            "unconverged: continuation tolerance not met at the end of the schedule".to_string()
        };
        Ok(SolveReport {
            levels,
            u0: u,
            area,
            energy_bound,
            converged,
            verdict,
            degenerate_thickness,
        })
    }
}

/// Minimize `A_ε` for a single `ε`.
pub fn minimize_eps(chart: &Chart, eps: f64, warm_start: &NodalFunction, config: &SolveConfig) -> Result<(NodalFunction, EpsStats)> {
    Solver::new(chart, config.clone())?.minimize_eps(eps, warm_start)
}

/// Continuation down the `ε` schedule from the zero function.
pub fn continuation_solve(chart: &Chart, config: &SolveConfig) -> Result<SolveReport> {
    Solver::new(chart, config.clone())?.continuation(None, Winding::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{OneForm, ScalarField, SyntheticField};
    use crate::chart::Region;
    use crate::geometry::{EuclideanChart, SpaceBackend};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid() -> SpaceBackend {
        SpaceBackend::Euclidean {
            dim: 3,
            coords: EuclideanChart::Cartesian,
        }
    }

    #[test]
    fn default_schedule() {
        let s = SolveConfig::default().schedule();
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 0.25);
        assert_eq!(*s.last().unwrap(), 1e-5);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = SolveConfig {
            eps_schedule: vec![1.0, 2.0],
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("eps_schedule[1]"));
        let bad = SolveConfig {
            backtrack_factor: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("backtrack_factor"));
    }

    #[test]
    fn null_test_from_random_start() {
        let c = Chart::build(
            &SpaceBackend::RealHyperbolic { dim: 3 },
            &Region::new(vec![0.2, 0.0], vec![1.2, 1.0], vec![12, 12]),
            &ScalarField::Gaussian {
                offset: 0.1,
                amplitude: 0.1,
                center: vec![0.6, 0.5],
                width: 0.3,
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let start = NodalFunction::new((0..c.node_count()).map(|_| rng.gen_range(-0.5..0.5)).collect());
        let (u, stats) = minimize_eps(&c, 0.01, &start, &SolveConfig::default()).unwrap();
        assert!(u.sup_norm() < 1e-8, "{}", u.sup_norm());
        assert!(stats.monotone);
        assert!(stats.mean_defect < 1e-12);
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        let v = ScalarField::SinProduct {
            amplitude: 0.1,
            wavenumbers: vec![std::f64::consts::PI, std::f64::consts::PI],
        };
        let field = SyntheticField::new(euclid(), OneForm::Exact { potential: v.clone() }).unwrap();
        let c = Chart::build(&field, &Region::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![16, 16]), &ScalarField::constant(0.1)).unwrap();
        let report = continuation_solve(&c, &SolveConfig::default()).unwrap();
        assert!(report.converged);
        let mut target = c.nodal(&v).unwrap();
        target.values.iter_mut().for_each(|x| *x = -*x);
        c.project_mean_zero(&mut target);
        assert!(report.u0.max_abs_diff(&target) < 2e-2);
        let f = AreaFunctional::new(&c);
        assert!(report.area < f.area(&NodalFunction::zeros(c.node_count())).unwrap());
        for l in &report.levels {
            assert!(l.eps_energy <= report.energy_bound);
            assert!(l.monotone);
        }
    }

    #[test]
    fn nonconvergence_carries_state() {
        let field = SyntheticField::new(
            euclid(),
            OneForm::Constant {
                components: vec![0.3, 0.0],
            },
        )
        .unwrap();
        let c = Chart::build(&field, &Region::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![6, 6]), &ScalarField::constant(0.1)).unwrap();
        let cfg = SolveConfig {
            max_newton: 1,
            newton_rtol: 1e-300,
            newton_atol: 1e-300,
            ..Default::default()
        };
        let start = c
            .nodal(&ScalarField::SinProduct {
                amplitude: 2.0,
                wavenumbers: vec![3.0, 3.0],
            })
            .unwrap();
        match minimize_eps(&c, 1e-3, &start, &cfg) {
            Err(Error::Nonconvergence(info)) => {
                assert_eq!(info.state.len(), c.node_count());
                assert_eq!(info.iterations, 1);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }
}
