//! One function per subcommand. Each writes its tables and returns the
//! deterministic body of `report.json`.

use anyhow::{Context, Result};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use steiner_core::functional::AreaFunctional;
use steiner_core::levelset::{beta_diagnostic, graph_distances};
use steiner_core::symmetrize::VOLUME_FORMULA;
use steiner_core::{
    build_helix, domain_volume, symmetrize, Chart, FieldProvider, NodalFunction, OneForm, SolveReport, Solver,
    SpaceBackend, SymmetrizedDomain, SyntheticField,
};
use steiner_verify::sampling::random_smooth;
use steiner_verify::CheckOutcome;

use crate::config::ExperimentConfig;
use crate::output::{Cell, OutputDir, Table};
use crate::ConfigError;

pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub out: &'a OutputDir,
}

/// Body of `report.json` and whether every check passed.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self { result, passed: true }
    }
}

pub fn build_chart(config: &ExperimentConfig) -> Result<Chart> {
    let region = config.region.to_region()?;
    let h = config.thickness_field()?;
    let chart = match &config.connection {
        Some(w) => {
            let field = SyntheticField::new(config.backend, w.clone())?;
            Chart::build(&field, &region, &h)?
        }
        None => Chart::build(&config.backend, &region, &h)?,
    };
    Ok(chart)
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn initial_guess(ctx: &RunContext, chart: &Chart) -> Result<NodalFunction> {
    let init = &ctx.config.initial;
    let mut u = match &init.field {
        Some(f) => chart.nodal(f)?,
        None => NodalFunction::zeros(chart.node_count()),
    };
    if init.random_amplitude != 0.0 {
        if !(init.random_amplitude > 0.0 && init.random_amplitude.is_finite()) {
            return Err(ConfigError::new("initial.random_amplitude", "must be a nonnegative number").into());
        }
        let a = init.random_amplitude;
        let mut r = rng(ctx.seed, 1);
        for v in &mut u.values {
            *v += r.gen_range(-a..=a);
        }
    }
    if let Some(w) = ctx.config.winding {
        u = u.with_winding(w);
    }
    Ok(u)
}

/// Column names for chart coordinates and their metric subscripts.
fn axis_names(labels: &[String]) -> Vec<(String, String)> {
    labels
        .iter()
        .map(|l| {
            let long = match l.as_str() {
                "th" => "theta",
                "ph" => "phi",
                other => other,
            };
            (long.to_string(), l.clone())
        })
        .collect()
}

/// Axes sampled by `fields`; the complex hyperbolic fields do not depend on the azimuth.
fn sampled_axes(config: &ExperimentConfig, dim: usize) -> usize {
    if config.backend == SpaceBackend::ComplexHyperbolic2 {
        dim - 1
    } else {
        dim
    }
}

pub fn fields(ctx: &RunContext) -> Result<Outcome> {
    let chart = build_chart(ctx.config)?;
    let d = chart.dim();
    let synthetic = match &ctx.config.connection {
        Some(w) => Some(SyntheticField::new(ctx.config.backend, w.clone())?),
        None => None,
    };
    let provider: &dyn FieldProvider = match &synthetic {
        Some(f) => f,
        None => &ctx.config.backend,
    };
    let names = axis_names(&chart.axis_labels);
    let axes = sampled_axes(ctx.config, d);
    let mut header: Vec<String> = names[..axes].iter().map(|(long, _)| long.clone()).collect();
    header.push("k".into());
    header.push("w_norm".into());
    let mut entries = Vec::new();
    for j in 0..d {
        for i in 0..=j {
            header.push(format!("g_{}{}", names[i].1, names[j].1));
            entries.push((i, j));
        }
    }
    let grid = &chart.grid;
    let center = |axis: usize, i: usize| grid.region.lower[axis] + (i as f64 + 0.5) * grid.spacing[axis];
    let counts: Vec<usize> = (0..d).map(|a| if a < axes { grid.region.cells[a] } else { 1 }).collect();
    let total: usize = counts.iter().product();
    let mut table = Table::new(&header);
    for flat in 0..total {
        // first axis varies slowest
        let mut rem = flat;
        let mut x = vec![0.0; d];
        for a in (0..d).rev() {
            x[a] = center(a, rem % counts[a]);
            rem /= counts[a];
        }
        let f = provider.sample(&x)?;
        let g_inv = f
            .metric
            .inverse()
            .ok_or_else(|| anyhow::anyhow!("metric is not positive definite at {x:?}"))?;
        let w_norm = f.w.dot(&(g_inv * f.w)).max(0.0).sqrt();
        let mut row: Vec<Cell> = x[..axes].iter().map(|&v| v.into()).collect();
        row.push(f.k.into());
        row.push(w_norm.into());
        for &(i, j) in &entries {
            row.push(f.metric.get(i, j).into());
        }
        table.row(&row);
    }
    let (mut k_min, mut k_max, mut w_max) = (f64::INFINITY, 0.0f64, 0.0f64);
    for s in 0..chart.simplex_count() {
        k_min = k_min.min(chart.fields.k[s]);
        k_max = k_max.max(chart.fields.k[s]);
        w_max = w_max.max(chart.covector_norm_sq(s, &chart.fields.w[s]).sqrt());
    }
    ctx.out.csv("fields.csv", &table)?;
    if ctx.config.save_chart {
        chart.save_json(&ctx.out.path("chart.json"))?;
    }
    let holonomy = match chart.grid.seam {
        Some(seam) => {
            let mut start: Vec<usize> = chart.grid.shape.iter().map(|n| n / 2).collect();
            start[seam.axis] = 0;
            Some(chart.loop_holonomy(&chart.grid.axis_loop(&start)?)?)
        }
        None => None,
    };
    Ok(Outcome::ok(json!({
        "dim": d,
        "axis_labels": chart.axis_labels,
        "nodes": chart.node_count(),
        "simplices": chart.simplex_count(),
        "k_min": k_min,
        "k_max": k_max,
        "w_norm_max": w_max,
        "total_volume": chart.total_volume(),
        "domain_volume": domain_volume(&chart)?,
        "volume_formula": VOLUME_FORMULA,
        "seam_holonomy": holonomy,
    })))
}

#[derive(Serialize)]
struct LevelRow {
    eps: f64,
    iterations: usize,
    backtracks: usize,
    residual: f64,
    area: f64,
    sup_grad_interior: f64,
    change: Option<f64>,
}

fn solve_summary(report: &SolveReport) -> Value {
    let levels: Vec<LevelRow> = report
        .levels
        .iter()
        .map(|l| LevelRow {
            eps: l.eps,
            iterations: l.iterations,
            backtracks: l.backtracks,
            residual: l.residual,
            area: l.area,
            sup_grad_interior: l.sup_grad_interior,
            change: l.change,
        })
        .collect();
    json!({
        "area": report.area,
        "energy_bound": report.energy_bound,
        "converged": report.converged,
        "verdict": report.verdict,
        "degenerate_thickness": report.degenerate_thickness,
        "gradient_variation": report.gradient_variation(),
        "levels": levels,
    })
}

fn reference_error(ctx: &RunContext, chart: &Chart, u0: &NodalFunction) -> Result<Option<f64>> {
    let Some(v) = &ctx.config.reference else {
        return Ok(None);
    };
    let mut expected = chart.nodal(v)?;
    for x in &mut expected.values {
        *x = -*x;
    }
    chart.project_mean_zero(&mut expected);
    Ok(Some(u0.values.iter().zip(&expected.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)))
}

fn sheets_table(domain: &SymmetrizedDomain) -> Table {
    let mut t = Table::new(&["node", "lower", "upper"]);
    for (i, lo, hi) in domain.sheets() {
        t.row(&[i.into(), lo.into(), hi.into()]);
    }
    t
}

pub fn solve(ctx: &RunContext) -> Result<Outcome> {
    let chart = build_chart(ctx.config)?;
    let init = initial_guess(ctx, &chart)?;
    let domain = symmetrize(&chart, &init, &ctx.config.solver)?;
    ctx.out.csv("sheets.csv", &sheets_table(&domain))?;
    let mut u0 = Table::new(&["node", "u0"]);
    for (i, v) in domain.u0.values.iter().enumerate() {
        u0.row(&[i.into(), (*v).into()]);
    }
    ctx.out.csv("u0.csv", &u0)?;
    Ok(Outcome::ok(json!({
        "nodes": chart.node_count(),
        "simplices": chart.simplex_count(),
        "winding": domain.u0.winding,
        "area": domain.area,
        "initial_area": domain.initial_area,
        "initial_residual": domain.initial_residual,
        "volume": domain.volume,
        "volume_formula": domain.volume_formula,
        "u0_sup": domain.u0.sup_norm(),
        "reference_error": reference_error(ctx, &chart, &domain.u0)?,
        "solve": solve_summary(&domain.report),
    })))
}

pub fn helix(ctx: &RunContext) -> Result<Outcome> {
    let chart = build_chart(ctx.config)?;
    let scan = build_helix(&chart, &ctx.config.helix, &ctx.config.solver)?;
    let mut full = Table::new(&["period", "m", "area"]);
    for r in &scan.results {
        full.row(&[r.period.into(), r.m.into(), r.area.into()]);
    }
    ctx.out.csv("winding_scan.csv", &full)?;
    let best = scan.best().cloned();
    if let Some(b) = &best {
        let mut t = Table::new(&["m", "area"]);
        for r in scan.results.iter().filter(|r| r.period == b.period) {
            t.row(&[r.m.into(), r.area.into()]);
        }
        ctx.out.csv("windings.csv", &t)?;
    }
    Ok(Outcome::ok(json!({
        "holonomy": scan.holonomy,
        "loop_length": scan.loop_nodes.len(),
        "best": best,
        "summaries": scan.summaries,
        "results": scan.results,
    })))
}

pub fn diagnose(ctx: &RunContext) -> Result<Outcome> {
    let chart = build_chart(ctx.config)?;
    let init = initial_guess(ctx, &chart)?;
    let mut solver = Solver::new(&chart, ctx.config.solver.clone())?;
    let report = solver.continuation(Some(&init), init.winding)?;
    let eps = report.levels.last().map_or(0.0, |l| l.eps);
    let u = &report.u0;
    let cfg = &ctx.config.diagnose;
    let d = chart.dim();
    let center = match &cfg.center {
        Some(c) => c.clone(),
        None => (0..d).map(|i| 0.5 * (ctx.config.region.lower[i] + ctx.config.region.upper[i])).collect(),
    };
    let probe = beta_diagnostic(&chart, u, eps, &center, &[0.0], &[0.0])
        .map_err(|e| ConfigError::new("diagnose.center", e.to_string()))?;
    let lambdas = match &cfg.lambdas {
        Some(l) => l.clone(),
        None => {
            let q_max = probe.q.iter().cloned().fold(0.0, f64::max);
            (0..8).map(|i| q_max * i as f64 / 8.0).collect()
        }
    };
    let rhos = match &cfg.rhos {
        Some(r) => r.clone(),
        None => {
            let far = graph_distances(&chart, probe.center_node).into_iter().fold(0.0, f64::max);
            (1..=4).map(|i| far * i as f64 / 4.0).collect()
        }
    };
    let diag = beta_diagnostic(&chart, u, eps, &center, &lambdas, &rhos)?;
    let mut beta = Table::new(&["lambda", "rho", "beta", "hausdorff"]);
    for r in &diag.rows {
        beta.row(&[r.lambda.into(), r.rho.into(), r.beta.into(), r.hausdorff.into()]);
    }
    ctx.out.csv("beta.csv", &beta)?;

    let f = AreaFunctional::new(&chart);
    let bounds = f.ellipticity_bounds();
    // one random direction X per simplex, sampled at du_0
    let du = chart.discrete_gradient(u);
    let mut r = rng(ctx.seed, 2);
    let mut ell = Table::new(&["simplex", "mu1", "mu2", "ddf", "proj", "grad_norm_sq"]);
    for (s, b) in bounds.iter().enumerate() {
        let integrand = f.integrand(s);
        let x = Vector3::from_fn(|i, _| if i < d { r.gen_range(-1.0..1.0) } else { 0.0 });
        let ddf = integrand.ddf(&du[s], &x, &x);
        let proj = integrand.projections(&du[s], &x).p;
        ell.row(&[
            s.into(),
            b.mu1.into(),
            b.mu2.into(),
            ddf.into(),
            proj.into(),
            integrand.norm_sq(&du[s]).into(),
        ]);
    }
    ctx.out.csv("ellipticity.csv", &ell)?;
    let mu1_min = bounds.iter().map(|b| b.mu1).fold(f64::INFINITY, f64::min);
    let mu2_max = bounds.iter().map(|b| b.mu2).fold(0.0, f64::max);
    Ok(Outcome::ok(json!({
        "center": diag.center,
        "center_node": diag.center_node,
        "eps": eps,
        "lambdas": diag.lambdas,
        "rhos": diag.rhos,
        "level_inequality_violation": diag.level_inequality_violation(),
        "monotone": diag.is_monotone(),
        "mu1_min": mu1_min,
        "mu2_max": mu2_max,
        "solve": solve_summary(&report),
    })))
}

#[derive(Serialize)]
struct Invariant {
    name: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
}

impl Invariant {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

fn connection_is_zero(config: &ExperimentConfig) -> bool {
    config.backend.has_constant_curvature() && matches!(config.connection, None | Some(OneForm::Zero))
}

/// Invariants of the configured chart: validity, area monotonicity,
/// volume invariance, uniqueness and, without a connection, `u_0 ≡ 0`.
fn chart_invariants(ctx: &RunContext) -> Result<Vec<Invariant>> {
    let chart = build_chart(ctx.config)?;
    chart.validate()?;
    let volume = domain_volume(&chart)?;
    let winding = ctx.config.winding.unwrap_or_default();
    let mut runs = Vec::new();
    for stream in 0..2 {
        let mut r = rng(ctx.seed, 100 + stream);
        let field = random_smooth(&mut r, chart.dim(), 0.2);
        let init = chart.nodal(&field)?.with_winding(winding);
        runs.push(symmetrize(&chart, &init, &ctx.config.solver).context("symmetrize from a random start")?);
    }
    let mut out = vec![Invariant::at_most("chart_valid", 0.0, 0.0)];
    let increase = runs
        .iter()
        .map(|d| (d.area - d.initial_area) / d.initial_area)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Invariant::at_most("area_monotone", increase, 0.0));
    let volume_bits = runs.iter().all(|d| d.volume.to_bits() == volume.to_bits());
    out.push(Invariant::at_most("volume_bitwise", if volume_bits { 0.0 } else { 1.0 }, 0.0));
    out.push(Invariant::at_most("uniqueness", runs[0].u0.max_abs_diff(&runs[1].u0), 1e-7));
    if connection_is_zero(ctx.config) && winding.m == 0 {
        let sup = runs.iter().map(|d| d.u0.sup_norm()).fold(0.0, f64::max);
        out.push(Invariant::at_most("steiner_consistency", sup, 1e-8));
    }
    Ok(out)
}

/// `names` lists the configured checks first; the remaining ones came from `--check`.
pub fn verify(
    ctx: Option<&RunContext>,
    seed: u64,
    names: &[String],
    configured: usize,
) -> Result<(Outcome, Vec<CheckOutcome>)> {
    let invariants = match ctx {
        Some(c) => chart_invariants(c)?,
        None => Vec::new(),
    };
    let specs: Vec<&steiner_verify::CheckSpec> = if names.iter().any(|n| n == "all") {
        steiner_verify::registry().iter().collect()
    } else {
        let mut specs = Vec::new();
        for (i, n) in names.iter().enumerate() {
            let spec = steiner_verify::find(n)
                .ok_or_else(|| {
                let field = if i < configured { format!("verify.checks[{i}]") } else { "--check".to_string() };
                ConfigError::new(field, format!("unknown check `{n}`"))
            })?;
            specs.push(spec);
        }
        specs
    };
    let checks: Vec<CheckOutcome> = specs.iter().map(|s| steiner_verify::run(s, seed)).collect();
    let passed = invariants.iter().all(|i| i.passed) && checks.iter().all(|c| c.passed);
    let result = json!({
        "passed": passed,
        "invariants": invariants,
        "checks": checks,
    });
    Ok((Outcome { result, passed }, checks))
}
