//! Level-set energies of `q = log(1 + |du|²)` on metric balls.
//!
//! For a level `λ` and radius `ρ` the super-level region is
//! `Ω_{λ,ρ} = {q > λ} ∩ B_ρ(x₀)`, and
//! `β(λ, ρ) = ∫_{Ω_{λ,ρ}} (q − λ)² (sqrt(1 + |du|²) + ε (1 + |du|²))`,
//! `H(λ, ρ) = ∫_{Ω_{λ,ρ}} sqrt(1 + |du|²)`.
//! Balls are discrete: graph distance over edges measured with `g`, and a
//! simplex belongs to the ball when all its vertices do.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::chart::{Chart, NodalFunction};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaRow {
    pub lambda: f64,
    pub rho: f64,
    pub beta: f64,
    pub hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetDiagnostics {
    pub center: Vec<f64>,
    pub center_node: usize,
    pub eps: f64,
    /// `q_ε` per simplex.
    pub q: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Rows ordered by `ρ`, then `λ`.
    pub rows: Vec<BetaRow>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Distances from `source` along grid edges with lengths measured in `g`
/// (averaged over the simplices sharing each edge).
pub fn graph_distances(chart: &Chart, source: usize) -> Vec<f64> {
    let grid = &chart.grid;
    let n = grid.node_count();
    let mut neighbours: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (a, b) in grid.edges() {
        let inc = grid.edge_simplices(a, b).expect("edge from edge list");
        let len_sq = inc.iter().map(|(s, e)| e.dot(&(chart.fields.metric[*s] * e))).sum::<f64>() / inc.len() as f64;
        let len = len_sq.sqrt();
        neighbours[a].push((b, len));
        neighbours[b].push((a, len));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        for &(j, len) in &neighbours[i] {
            let nd = d + len;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Entry(nd, j));
            }
        }
    }
    dist
}

/// Tabulate `β(λ, ρ)` and `H(λ, ρ)` around the node nearest to `center`.
pub fn beta_diagnostic(
    chart: &Chart,
    u: &NodalFunction,
    eps: f64,
    center: &[f64],
    lambdas: &[f64],
    rhos: &[f64],
) -> Result<LevelSetDiagnostics> {
    if !(eps >= 0.0) {
        return Err(Error::parameter("eps", "must be ≥ 0"));
    }
    if center.len() != chart.dim() {
        return Err(Error::parameter("center", format!("needs {} coordinates", chart.dim())));
    }
    if let Some(r) = rhos.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::parameter("rhos", format!("radius {r} must be ≥ 0")));
    }
    if u.values.len() != chart.node_count() {
        return Err(Error::Data("function does not match the chart".to_string()));
    }
    let grid = &chart.grid;
    let center_node = (0..grid.node_count())
        .min_by(|&a, &b| {
            let da: f64 = (0..chart.dim()).map(|i| (grid.nodes[a][i] - center[i]).powi(2)).sum();
            let db: f64 = (0..chart.dim()).map(|i| (grid.nodes[b][i] - center[i]).powi(2)).sum();
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    let dist = graph_distances(chart, center_node);
    let du = chart.discrete_gradient(u);
    let grad_sq: Vec<f64> = du.iter().enumerate().map(|(s, p)| chart.covector_norm_sq(s, p)).collect();
    let q: Vec<f64> = grad_sq.iter().map(|g| g.ln_1p()).collect();
    let radius: Vec<f64> = (0..grid.simplex_count())
        .map(|s| grid.verts(s).iter().map(|&v| dist[v]).fold(0.0, f64::max))
        .collect();

    let mut rows = Vec::with_capacity(lambdas.len() * rhos.len());
    for &rho in rhos {
        for &lambda in lambdas {
            let mut beta = 0.0;
            let mut hausdorff = 0.0;
            for s in 0..grid.simplex_count() {
                if radius[s] <= rho && q[s] > lambda {
                    let w = chart.fields.weight[s];
                    let area = (1.0 + grad_sq[s]).sqrt();
                    let excess = (q[s] - lambda).powi(2);
                    beta += excess * (area + eps * (1.0 + grad_sq[s])) * w;
                    hausdorff += area * w;
                }
            }
            rows.push(BetaRow {
                lambda,
                rho,
                beta,
                hausdorff,
            });
        }
    }
    Ok(LevelSetDiagnostics {
        center: center.to_vec(),
        center_node,
        eps,
        q,
        lambdas: lambdas.to_vec(),
        rhos: rhos.to_vec(),
        rows,
    })
}

impl LevelSetDiagnostics {
    pub fn row(&self, i_lambda: usize, i_rho: usize) -> &BetaRow {
        &self.rows[i_rho * self.lambdas.len() + i_lambda]
    }

    /// Largest violation of `H(Λ, R) ≤ β(λ, R) / (Λ − λ)²` over all `λ < Λ`,
    /// relative to the right-hand side; nonpositive when the inequality holds.
    pub fn level_inequality_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for ir in 0..self.rhos.len() {
            for (i, &lo) in self.lambdas.iter().enumerate() {
                for (j, &hi) in self.lambdas.iter().enumerate() {
                    if hi <= lo {
                        continue;
                    }
                    let bound = self.row(i, ir).beta / (hi - lo).powi(2);
                    let lhs = self.row(j, ir).hausdorff;
                    worst = worst.max((lhs - bound) / bound.max(f64::MIN_POSITIVE));
                }
            }
        }
        worst
    }

    /// `β` and `H` nonincreasing in `λ` and nondecreasing in `ρ`.
    pub fn is_monotone(&self) -> bool {
        let order = |xs: &[f64]| {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
            idx
        };
        let lam = order(&self.lambdas);
        let rho = order(&self.rhos);
        for &ir in &rho {
            for w in lam.windows(2) {
                let (a, b) = (self.row(w[0], ir), self.row(w[1], ir));
                if b.beta > a.beta || b.hausdorff > a.hausdorff {
                    return false;
                }
            }
        }
        for &il in &lam {
            for w in rho.windows(2) {
                let (a, b) = (self.row(il, w[0]), self.row(il, w[1]));
                if b.beta < a.beta || b.hausdorff < a.hausdorff {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ScalarField;
    use crate::chart::Region;
    use crate::geometry::{EuclideanChart, SpaceBackend};

    fn chart() -> Chart {
        Chart::build(
            &SpaceBackend::Euclidean {
                dim: 3,
                coords: EuclideanChart::Cartesian,
            },
            &Region::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![16, 16]),
            &ScalarField::constant(0.1),
        )
        .unwrap()
    }

    #[test]
    fn distances_are_euclidean_along_axes() {
        let c = chart();
        let d = graph_distances(&c, 0);
        let corner = c.grid.node_index(&[16, 0]);
        assert!((d[corner] - 1.0).abs() < 1e-12);
        let diag = c.grid.node_index(&[16, 16]);
        assert!(d[diag] <= 2.0 && d[diag] >= 2f64.sqrt() - 1e-12);
    }

    #[test]
    fn beta_table_properties() {
        let c = chart();
        let u = c
            .nodal(&ScalarField::Gaussian {
                offset: 0.0,
                amplitude: 0.3,
                center: vec![0.5, 0.5],
                width: 0.15,
            })
            .unwrap();
        let lambdas = [0.0, 0.1, 0.3, 0.6, 10.0];
        let rhos = [0.1, 0.25, 0.5];
        let diag = beta_diagnostic(&c, &u, 0.01, &[0.5, 0.5], &lambdas, &rhos).unwrap();
        assert!(diag.is_monotone());
        assert!(diag.level_inequality_violation() <= 1e-12);
        for ir in 0..rhos.len() {
            assert_eq!(diag.row(4, ir).beta, 0.0);
        }
        assert!(diag.row(0, 2).beta > 0.0);
    }
}
