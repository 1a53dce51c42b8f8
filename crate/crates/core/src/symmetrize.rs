//! Symmetrization of a domain given as a two-sided graph `u ± h` along the
//! orbits, and the winding scan over charts with a periodic seam.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, NodalFunction, Winding};
use crate::error::{Error, Result};
use crate::functional::AreaFunctional;
use crate::solver::{SolveConfig, SolveReport, Solver};

pub const VOLUME_FORMULA: &str = "2 * integral of h * k dvol_g";

/// Ambient volume of the domain; `u` does not enter.
pub fn domain_volume(chart: &Chart) -> Result<f64> {
    let h = &chart.thickness;
    if let Some(i) = h.nodal.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Data(format!("thickness h = {} at node {i} is negative", h.nodal[i])));
    }
    let integrand: Vec<f64> = h.mean.iter().zip(&chart.fields.k).map(|(h, k)| 2.0 * h * k).collect();
    chart.integrate(&integrand)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedDomain {
    pub u0: NodalFunction,
    /// `u_0 − h` per node.
    pub lower_sheet: Vec<f64>,
    /// `u_0 + h` per node.
    pub upper_sheet: Vec<f64>,
    pub area: f64,
    pub initial_area: f64,
    pub initial_residual: f64,
    pub volume: f64,
    pub volume_formula: String,
    pub initial: NodalFunction,
    pub config: SolveConfig,
    pub report: SolveReport,
}

impl SymmetrizedDomain {
    /// Rows `(node, u_0 − h, u_0 + h)`.
    pub fn sheets(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.lower_sheet
            .iter()
            .zip(&self.upper_sheet)
            .enumerate()
            .map(|(i, (lo, hi))| (i, *lo, *hi))
    }
}

/// Replace `u_init` by the minimizer of the area functional with the same thickness.
pub fn symmetrize(chart: &Chart, u_init: &NodalFunction, config: &SolveConfig) -> Result<SymmetrizedDomain> {
    let f = AreaFunctional::new(chart);
    let initial_area = f.area(u_init)?;
    let initial_residual = f.first_variation(u_init, 0.0)?.iter().map(|r| r * r).sum::<f64>().sqrt();
    let mut solver = Solver::new(chart, config.clone())?;
    let report = solver.continuation(Some(u_init), u_init.winding)?;
    let u0 = report.u0.clone();
    let h = &chart.thickness.nodal;
    Ok(SymmetrizedDomain {
        lower_sheet: u0.values.iter().zip(h).map(|(u, h)| u - h).collect(),
        upper_sheet: u0.values.iter().zip(h).map(|(u, h)| u + h).collect(),
        area: report.area,
        initial_area,
        initial_residual,
        volume: domain_volume(chart)?,
        volume_formula: VOLUME_FORMULA.to_string(),
        initial: u_init.clone(),
        config: config.clone(),
        report,
        u0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HelixSpec {
    pub windings: Vec<i32>,
    pub periods: Vec<f64>,
    /// Grid multi-index of a node on the core loop; the middle ring when empty.
    pub loop_node: Vec<usize>,
    /// Abort unless `|∮ w|` over the core loop exceeds `holonomy_tol`.
    pub require_holonomy: bool,
    pub holonomy_tol: f64,
}

impl Default for HelixSpec {
    fn default() -> Self {
        Self {
            windings: (-2..=2).collect(),
            periods: vec![0.05, 0.1, 0.2],
            loop_node: Vec::new(),
            require_holonomy: true,
            holonomy_tol: 1e-8,
        }
    }
}

impl HelixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.windings.is_empty() {
            return Err(Error::parameter("helix.windings", "must not be empty"));
        }
        if !self.windings.contains(&0) {
            return Err(Error::parameter("helix.windings", "must contain 0 as the reference winding"));
        }
        if self.periods.is_empty() {
            return Err(Error::parameter("helix.periods", "must not be empty"));
        }
        if let Some((i, p)) = self.periods.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::parameter(format!("helix.periods[{i}]"), format!("must be positive (got {p})")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingResult {
    pub m: i32,
    pub period: f64,
    pub area: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub u0: Option<NodalFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period: f64,
    pub best_m: i32,
    pub best_area: f64,
    pub area_zero: f64,
    /// `A_0 − A_{m*}`
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelixScan {
    pub holonomy: f64,
    pub loop_nodes: Vec<usize>,
    pub results: Vec<WindingResult>,
    pub summaries: Vec<PeriodSummary>,
}

impl HelixScan {
    /// Summary with the largest area gain over the untwisted graph.
    pub fn best(&self) -> Option<&PeriodSummary> {
        self.summaries.iter().max_by(|a, b| a.delta.total_cmp(&b.delta))
    }
}

/// Minimize the area at every winding number and period of `spec`.
pub fn build_helix(chart: &Chart, spec: &HelixSpec, config: &SolveConfig) -> Result<HelixScan> {
    spec.validate()?;
    config.validate()?;
    let seam = chart
        .grid
        .seam
        .ok_or_else(|| Error::parameter("region.periodic_axis", "winding scan needs a periodic axis"))?;
    let start: Vec<usize> = if spec.loop_node.is_empty() {
        chart.grid.shape.iter().map(|n| n / 2).collect()
    } else {
        spec.loop_node.clone()
    };
    if start.len() != chart.dim() || start.iter().zip(&chart.grid.shape).any(|(i, n)| i >= n) {
        return Err(Error::parameter("helix.loop_node", "not a node of the grid"));
    }
    let mut core = start.clone();
    core[seam.axis] = 0;
    let loop_nodes = chart.grid.axis_loop(&core)?;
    let holonomy = chart.loop_holonomy(&loop_nodes)?;
    if spec.require_holonomy && holonomy.abs() <= spec.holonomy_tol {
        return Err(Error::Experiment(format!(
            "core loop holonomy {holonomy:e} does not exceed {:e}",
            spec.holonomy_tol
        )));
    }

    let jobs: Vec<(f64, i32)> = spec
        .periods
        .iter()
        .flat_map(|&p| spec.windings.iter().map(move |&m| (p, m)))
        .collect();
    let results: Vec<WindingResult> = jobs
        .par_iter()
        .map(|&(period, m)| {
            let outcome = Solver::new(chart, config.clone()).and_then(|mut s| s.continuation(None, Winding::new(m, period)));
            match outcome {
                Ok(report) => WindingResult {
                    m,
                    period,
                    area: Some(report.area),
                    converged: report.converged,
                    error: None,
                    u0: Some(report.u0),
                },
                Err(e) => WindingResult {
                    m,
                    period,
                    area: None,
                    converged: false,
                    error: Some(e.to_string()),
                    u0: None,
                },
            }
        })
        .collect();
    if results.iter().all(|r| r.area.is_none()) {
        return Err(Error::Experiment(format!(
            "all windings failed: {}",
            results[0].error.clone().unwrap_or_default()
        )));
    }

    let mut summaries = Vec::new();
    for &period in &spec.periods {
        let rows: Vec<&WindingResult> = results.iter().filter(|r| r.period == period && r.area.is_some()).collect();
        let zero = rows.iter().find(|r| r.m == 0).and_then(|r| r.area);
        let best = rows
            .iter()
            .min_by(|a, b| a.area.unwrap().total_cmp(&b.area.unwrap()).then(a.m.abs().cmp(&b.m.abs())));
        if let (Some(area_zero), Some(best)) = (zero, best) {
            let best_area = best.area.unwrap();
            summaries.push(PeriodSummary {
                period,
                best_m: best.m,
                best_area,
                area_zero,
                delta: area_zero - best_area,
            });
        }
    }
    Ok(HelixScan {
        holonomy,
        loop_nodes,
        results,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{OneForm, ScalarField, SyntheticField};
    use crate::chart::Region;
    use crate::geometry::{EuclideanChart, SpaceBackend};
    use std::f64::consts::TAU;

    fn polar() -> SpaceBackend {
        SpaceBackend::Euclidean {
            dim: 3,
            coords: EuclideanChart::Polar,
        }
    }

    #[test]
    fn flat_volume_and_steiner_case() {
        let c = Chart::build(
            &SpaceBackend::Euclidean {
                dim: 3,
                coords: EuclideanChart::Cartesian,
            },
            &Region::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![8, 8]),
            &ScalarField::constant(0.5),
        )
        .unwrap();
        assert!((domain_volume(&c).unwrap() - 1.0).abs() < 1e-12);
        let init = c
            .nodal(&ScalarField::SinProduct {
                amplitude: 0.2,
                wavenumbers: vec![3.0, 1.0],
            })
            .unwrap();
        let out = symmetrize(&c, &init, &SolveConfig::default()).unwrap();
        assert!(out.u0.sup_norm() < 1e-8);
        assert!(out.area < out.initial_area);
        assert_eq!(out.volume, domain_volume(&c).unwrap());
        assert!(out.sheets().all(|(_, lo, hi)| (hi - lo - 1.0).abs() < 1e-12));
    }

    fn annulus(w: OneForm) -> Chart {
        let field = SyntheticField::new(polar(), w).unwrap();
        let region = Region::new(vec![1.0, 0.0], vec![1.5, TAU], vec![4, 24]).periodic(1);
        Chart::build(&field, &region, &ScalarField::constant(0.05)).unwrap()
    }

    #[test]
    fn winding_scan_prefers_cancelling_twist() {
        let c = annulus(OneForm::Constant {
            components: vec![0.0, 0.5 / TAU],
        });
        let spec = HelixSpec {
            periods: vec![0.2],
            ..Default::default()
        };
        let scan = build_helix(&c, &spec, &SolveConfig::default()).unwrap();
        assert!((scan.holonomy - 0.5).abs() < 1e-12);
        let best = scan.best().unwrap();
        assert_eq!(best.best_m, -2);
        assert!(best.delta > 0.0);
    }

    #[test]
    fn exact_form_requires_opt_out() {
        let c = annulus(OneForm::Constant {
            components: vec![0.2, 0.0],
        });
        let err = build_helix(&c, &HelixSpec::default(), &SolveConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Experiment(_)));
        let spec = HelixSpec {
            require_holonomy: false,
            periods: vec![0.1],
            ..Default::default()
        };
        let scan = build_helix(&c, &spec, &SolveConfig::default()).unwrap();
        assert_eq!(scan.best().unwrap().best_m, 0);
    }
}
