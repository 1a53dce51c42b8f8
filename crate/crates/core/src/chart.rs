//! Discretization of a coordinate patch of the orbit space.
//!
//! A [`Chart`] is a structured box split into Kuhn simplices (2 triangles per
//! square, 6 tetrahedra per cube) with the geometric fields `g, k, w` and the
//! thickness `h` sampled at simplex barycenters. Functions are continuous and
//! piecewise linear; every integrand of the area functional depends only on
//! the gradient, so one-point quadrature is exact for the discrete problem.
//!
//! One axis may be periodic. The node layer at the upper end of that axis is
//! identified with the first layer, and functions may jump across the seam:
//! a [`NodalFunction`] with winding `m` and period `T` represents the lifted
//! function satisfying `u(x + L e_axis) = u(x) + m T`, i.e. the value grows by
//! `m T` each time the seam is crossed in the positive axis direction.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::FieldProvider;

/// Coordinate box with resolution and optional periodic axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
    #[serde(default)]
    pub periodic_axis: Option<usize>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: Vec<usize>) -> Self {
        Self {
            lower,
            upper,
            cells,
            periodic_axis: None,
        }
    }

    pub fn periodic(mut self, axis: usize) -> Self {
        self.periodic_axis = Some(axis);
        self
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.cells.len();
        if !(2..=3).contains(&d) {
            return Err(Error::parameter(
                "region.cells",
                format!("chart dimension must be 2 or 3 (got {d})"),
            ));
        }
        if self.lower.len() != d || self.upper.len() != d {
            return Err(Error::parameter(
                "region",
                "lower, upper and cells must have the same length",
            ));
        }
        for i in 0..d {
            if self.cells[i] < 4 {
                return Err(Error::parameter(
                    format!("region.cells[{i}]"),
                    format!("at least 4 cells per axis required (got {})", self.cells[i]),
                ));
            }
            if !(self.lower[i].is_finite() && self.upper[i].is_finite()) || self.upper[i] <= self.lower[i] {
                return Err(Error::parameter(
                    format!("region.upper[{i}]"),
                    format!("must exceed lower bound {}", self.lower[i]),
                ));
            }
        }
        if let Some(a) = self.periodic_axis {
            if a >= d {
                return Err(Error::parameter(
                    "region.periodic_axis",
                    format!("axis {a} out of range for dimension {d}"),
                ));
            }
        }
        Ok(())
    }
}

/// Identification of the two end faces of the periodic axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seam {
    pub axis: usize,
    /// Coordinate length of the periodic axis.
    pub length: f64,
}

/// Edge of the grid with the simplices containing it and the local vertex
/// slots of its endpoints.
type EdgeMap = HashMap<(usize, usize), Vec<(usize, u8, u8)>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub region: Region,
    /// Nodes per axis; the periodic axis has as many nodes as cells.
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub seam: Option<Seam>,
    pub nodes: Vec<[f64; 3]>,
    /// Vertex node indices; only the first `dim + 1` entries are used.
    pub simplices: Vec<[usize; 4]>,
    /// Bit `j` marks local vertex `j` as the seam copy of its node.
    pub wrapped: Vec<u8>,
    /// Coordinate gradients of the barycentric basis functions.
    pub basis_grads: Vec<[Vector3<f64>; 4]>,
    pub coord_volume: Vec<f64>,
    pub barycenters: Vec<[f64; 3]>,
    /// Nodes on non-periodic boundary faces.
    pub boundary: Vec<usize>,
    #[serde(skip)]
    edges: OnceLock<EdgeMap>,
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    }
}

impl Grid {
    pub fn new(region: &Region) -> Result<Self> {
        region.validate()?;
        let d = region.dim();
        let periodic = region.periodic_axis;
        if let Some(a) = periodic {
            if region.cells[a] < 3 {
                return Err(Error::parameter("region.cells", "periodic axis needs at least 3 cells"));
            }
        }
        let shape: Vec<usize> = (0..d)
            .map(|a| if Some(a) == periodic { region.cells[a] } else { region.cells[a] + 1 })
            .collect();
        let spacing: Vec<f64> = (0..d)
            .map(|a| (region.upper[a] - region.lower[a]) / region.cells[a] as f64)
            .collect();
        let seam = periodic.map(|axis| Seam {
            axis,
            length: region.upper[axis] - region.lower[axis],
        });

        let n_nodes: usize = shape.iter().product();
        let mut nodes = Vec::with_capacity(n_nodes);
        for idx in 0..n_nodes {
            let mi = multi_index(idx, &shape);
            let mut x = [0.0; 3];
            for a in 0..d {
                x[a] = region.lower[a] + mi[a] as f64 * spacing[a];
            }
            nodes.push(x);
        }

        let mut boundary = Vec::new();
        for idx in 0..n_nodes {
            let mi = multi_index(idx, &shape);
            let on_face = (0..d).any(|a| Some(a) != periodic && (mi[a] == 0 || mi[a] == shape[a] - 1));
            if on_face {
                boundary.push(idx);
            }
        }

        let perms = permutations(d);
        let n_cells: usize = region.cells.iter().product();
        let mut simplices = Vec::with_capacity(n_cells * perms.len());
        let mut wrapped = Vec::with_capacity(n_cells * perms.len());
        for cell in 0..n_cells {
            let origin = multi_index(cell, &region.cells);
            for perm in &perms {
                let mut verts = [usize::MAX; 4];
                let mut wrap_bits = 0u8;
                let mut v = origin;
                for j in 0..=d {
                    if j > 0 {
                        v[perm[j - 1]] += 1;
                    }
                    let mut vi = v;
                    if let Some(a) = periodic {
                        if vi[a] == shape[a] {
                            vi[a] = 0;
                            wrap_bits |= 1 << j;
                        }
                    }
                    verts[j] = flat_index(&vi, &shape);
                }
                simplices.push(verts);
                wrapped.push(wrap_bits);
            }
        }

        let mut grid = Grid {
            dim: d,
            region: region.clone(),
            shape,
            spacing,
            seam,
            nodes,
            simplices,
            wrapped,
            basis_grads: Vec::new(),
            coord_volume: Vec::new(),
            barycenters: Vec::new(),
            boundary,
            edges: OnceLock::new(),
        };
        grid.compute_geometry()?;
        Ok(grid)
    }

    fn compute_geometry(&mut self) -> Result<()> {
        let d = self.dim;
        let factorial = if d == 2 { 2.0 } else { 6.0 };
        let n = self.simplices.len();
        self.basis_grads = Vec::with_capacity(n);
        self.coord_volume = Vec::with_capacity(n);
        self.barycenters = Vec::with_capacity(n);
        for s in 0..n {
            let x0 = Vector3::from(self.vertex_coords(s, 0));
            let mut e = Matrix3::identity();
            for j in 1..=d {
                let xj = Vector3::from(self.vertex_coords(s, j));
                e.set_row(j - 1, &(xj - x0).transpose());
            }
            let det = e.determinant();
            if det.abs() <= 0.0 || !det.is_finite() {
                return Err(Error::Data(format!("degenerate simplex {s}")));
            }
            let inv = e.try_inverse().ok_or_else(|| Error::Data(format!("degenerate simplex {s}")))?;
            let mut grads = [Vector3::zeros(); 4];
            let mut sum = Vector3::zeros();
            for j in 1..=d {
                grads[j] = inv.column(j - 1).into_owned();
                sum += grads[j];
            }
            grads[0] = -sum;
            let mut bc = [0.0; 3];
            for j in 0..=d {
                let xj = self.vertex_coords(s, j);
                for a in 0..3 {
                    bc[a] += xj[a] / (d + 1) as f64;
                }
            }
            self.basis_grads.push(grads);
            self.coord_volume.push(det.abs() / factorial);
            self.barycenters.push(bc);
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn verts(&self, s: usize) -> &[usize] {
        &self.simplices[s][..=self.dim]
    }

    pub fn is_wrapped(&self, s: usize, j: usize) -> bool {
        self.wrapped[s] & (1 << j) != 0
    }

    /// Coordinates of local vertex `j` of simplex `s`, unrolled across the seam.
    pub fn vertex_coords(&self, s: usize, j: usize) -> [f64; 3] {
        let mut x = self.nodes[self.simplices[s][j]];
        if self.is_wrapped(s, j) {
            let seam = self.seam.expect("wrapped vertex without seam");
            x[seam.axis] += seam.length;
        }
        x
    }

    pub fn node_index(&self, mi: &[usize]) -> usize {
        let mut full = [0usize; 3];
        full[..mi.len()].copy_from_slice(mi);
        flat_index(&full, &self.shape)
    }

    pub fn node_multi_index(&self, idx: usize) -> [usize; 3] {
        multi_index(idx, &self.shape)
    }

    /// Gradient of the piecewise-linear interpolant on simplex `s`.
    #[inline]
    pub fn simplex_gradient(&self, s: usize, values: &[f64], jump: f64) -> Vector3<f64> {
        let grads = &self.basis_grads[s];
        let verts = &self.simplices[s];
        let mut out = Vector3::zeros();
        for j in 0..=self.dim {
            let mut v = values[verts[j]];
            if jump != 0.0 && self.is_wrapped(s, j) {
                v += jump;
            }
            out += grads[j] * v;
        }
        out
    }

    fn edge_map(&self) -> &EdgeMap {
        self.edges.get_or_init(|| {
            let mut map: EdgeMap = HashMap::new();
            for s in 0..self.simplices.len() {
                let v = self.verts(s);
                for a in 0..v.len() {
                    for b in (a + 1)..v.len() {
                        let (i, j, la, lb) = if v[a] < v[b] {
                            (v[a], v[b], a, b)
                        } else {
                            (v[b], v[a], b, a)
                        };
                        map.entry((i, j)).or_default().push((s, la as u8, lb as u8));
                    }
                }
            }
            map
        })
    }

    /// Sorted list of grid edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edge_map().keys().copied().collect();
        e.sort_unstable();
        e
    }

    /// Simplices containing edge `{a, b}` with the coordinate vector `b - a`
    /// as seen inside each simplex.
    pub fn edge_simplices(&self, a: usize, b: usize) -> Option<Vec<(usize, Vector3<f64>)>> {
        let key = (a.min(b), a.max(b));
        let entries = self.edge_map().get(&key)?;
        Some(
            entries
                .iter()
                .map(|&(s, la, lb)| {
                    let (pa, pb) = if a < b { (la, lb) } else { (lb, la) };
                    let xa = Vector3::from(self.vertex_coords(s, pa as usize));
                    let xb = Vector3::from(self.vertex_coords(s, pb as usize));
                    (s, xb - xa)
                })
                .collect(),
        )
    }

    /// Node adjacency (including the diagonal) as sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.node_count()).map(|i| vec![i]).collect();
        for &(i, j) in self.edge_map().keys() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }

    /// Closed loop running once around the periodic axis through `start`.
    pub fn axis_loop(&self, start: &[usize]) -> Result<Vec<usize>> {
        let seam = self
            .seam
            .ok_or_else(|| Error::parameter("loop", "grid has no periodic axis"))?;
        let mut mi = [0usize; 3];
        mi[..start.len()].copy_from_slice(start);
        Ok((0..self.shape[seam.axis])
            .map(|i| {
                let mut m = mi;
                m[seam.axis] = i;
                flat_index(&m, &self.shape)
            })
            .collect())
    }

    /// Counter-clockwise boundary of the coordinate rectangle spanned from
    /// `corner` by `extent.0` steps along `axes.0` and `extent.1` along `axes.1`.
    pub fn rectangle_loop(&self, corner: &[usize], axes: (usize, usize), extent: (usize, usize)) -> Result<Vec<usize>> {
        let mut mi = [0usize; 3];
        mi[..corner.len()].copy_from_slice(corner);
        let (a, b) = axes;
        let fits = |axis: usize, n: usize| Some(axis) == self.seam.map(|s| s.axis) || mi[axis] + n < self.shape[axis];
        if a == b || a >= self.dim || b >= self.dim || extent.0 == 0 || extent.1 == 0 || !fits(a, extent.0) || !fits(b, extent.1) {
            return Err(Error::parameter("loop", "rectangle leaves the grid"));
        }
        let mut steps = Vec::new();
        steps.extend(std::iter::repeat_n((a, 1i64), extent.0));
        steps.extend(std::iter::repeat_n((b, 1i64), extent.1));
        steps.extend(std::iter::repeat_n((a, -1i64), extent.0));
        steps.extend(std::iter::repeat_n((b, -1i64), extent.1));
        let mut cur = [mi[0] as i64, mi[1] as i64, mi[2] as i64];
        let mut out = Vec::with_capacity(steps.len());
        for (axis, dir) in steps {
            out.push(self.wrap_index(&cur));
            cur[axis] += dir;
        }
        Ok(out)
    }

    fn wrap_index(&self, mi: &[i64; 3]) -> usize {
        let mut m = [0usize; 3];
        for a in 0..self.dim {
            let n = self.shape[a] as i64;
            m[a] = mi[a].rem_euclid(n) as usize;
        }
        flat_index(&m, &self.shape)
    }
}

fn multi_index(mut idx: usize, shape: &[usize]) -> [usize; 3] {
    let mut out = [0usize; 3];
    for (a, &n) in shape.iter().enumerate() {
        out[a] = idx % n;
        idx /= n;
    }
    out
}

fn flat_index(mi: &[usize; 3], shape: &[usize]) -> usize {
    let mut idx = 0;
    for a in (0..shape.len()).rev() {
        idx = idx * shape[a] + mi[a];
    }
    idx
}

/// Geometric fields sampled at simplex barycenters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldData {
    pub metric: Vec<Matrix3<f64>>,
    pub metric_inv: Vec<Matrix3<f64>>,
    pub k: Vec<f64>,
    pub w: Vec<Vector3<f64>>,
    /// `sqrt(det g) · |simplex|`
    pub weight: Vec<f64>,
}

/// Thickness `h` as nodal values with per-simplex mean and gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Thickness {
    pub nodal: Vec<f64>,
    pub mean: Vec<f64>,
    pub grad: Vec<Vector3<f64>>,
}

impl Thickness {
    fn new(grid: &Grid, nodal: Vec<f64>) -> Result<Self> {
        if nodal.len() != grid.node_count() {
            return Err(Error::Data(format!(
                "thickness table has {} values for {} nodes",
                nodal.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = nodal.iter().position(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::Data(format!("thickness h = {} at node {i} is negative or non-finite", nodal[i])));
        }
        let n = grid.simplex_count();
        let mut mean = Vec::with_capacity(n);
        let mut grad = Vec::with_capacity(n);
        for s in 0..n {
            let v = grid.verts(s);
            mean.push(v.iter().map(|&i| nodal[i]).sum::<f64>() / v.len() as f64);
            grad.push(grid.simplex_gradient(s, &nodal, 0.0));
        }
        Ok(Self { nodal, mean, grad })
    }

    pub fn is_degenerate(&self) -> bool {
        self.nodal.iter().all(|&h| h == 0.0)
    }
}

/// Winding of a function across the seam: jump `m · period`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub m: i32,
    pub period: f64,
}

impl Winding {
    pub fn new(m: i32, period: f64) -> Self {
        Self { m, period }
    }

    pub fn jump(&self) -> f64 {
        self.m as f64 * self.period
    }
}

/// Piecewise-linear function given by one value per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalFunction {
    pub values: Vec<f64>,
    #[serde(default)]
    pub winding: Winding,
}

impl NodalFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            winding: Winding::default(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn with_winding(mut self, winding: Winding) -> Self {
        self.winding = winding;
        self
    }

    pub fn jump(&self) -> f64 {
        self.winding.jump()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &NodalFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Grid, sampled geometry and thickness of one orbit-space patch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Chart {
    pub grid: Grid,
    pub fields: FieldData,
    pub thickness: Thickness,
    /// Lumped node masses `Σ_{T ∋ i} weight_T / (d + 1)`.
    pub node_weights: Vec<f64>,
    pub axis_labels: Vec<String>,
}

impl Chart {
    /// Sample `provider` over `region` and attach the thickness `h`.
    pub fn build(provider: &dyn FieldProvider, region: &Region, h: &ScalarField) -> Result<Self> {
        region.validate()?;
        if provider.orbit_dim() != region.dim() {
            return Err(Error::parameter(
                "region",
                format!(
                    "backend orbit space has dimension {} but region has {}",
                    provider.orbit_dim(),
                    region.dim()
                ),
            ));
        }
        provider.validate_region(&region.lower, &region.upper)?;
        let grid = Grid::new(region)?;
        let d = grid.dim;

        let samples: Vec<_> = grid
            .barycenters
            .par_iter()
            .map(|bc| provider.sample(&bc[..d]))
            .collect::<Result<Vec<_>>>()?;

        let n = grid.simplex_count();
        let mut fields = FieldData {
            metric: Vec::with_capacity(n),
            metric_inv: Vec::with_capacity(n),
            k: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
            weight: Vec::with_capacity(n),
        };
        for (s, pf) in samples.into_iter().enumerate() {
            let inv = pf.metric.inverse().ok_or_else(|| {
                Error::BackendConsistency(format!("metric not positive definite at simplex {s}"))
            })?;
            fields.weight.push(pf.metric.det().sqrt() * grid.coord_volume[s]);
            fields.metric.push(pf.metric.matrix);
            fields.metric_inv.push(inv);
            fields.k.push(pf.k);
            fields.w.push(pf.w);
        }

        let thickness = Thickness::new(&grid, sample_nodes(&grid, h)?)?;
        let chart = Self::assemble(grid, fields, thickness, provider.axis_labels());
        chart.validate()?;
        Ok(chart)
    }

    fn assemble(grid: Grid, fields: FieldData, thickness: Thickness, axis_labels: Vec<String>) -> Self {
        let mut node_weights = vec![0.0; grid.node_count()];
        let share = 1.0 / (grid.dim + 1) as f64;
        for s in 0..grid.simplex_count() {
            for &v in grid.verts(s) {
                node_weights[v] += fields.weight[s] * share;
            }
        }
        Self {
            grid,
            fields,
            thickness,
            node_weights,
            axis_labels,
        }
    }

    /// Same geometry with a different thickness profile.
    pub fn with_thickness(&self, h: &ScalarField) -> Result<Self> {
        let thickness = Thickness::new(&self.grid, sample_nodes(&self.grid, h)?)?;
        Ok(Self {
            thickness,
            ..self.clone()
        })
    }

    /// Check the sampled-field invariants: `g` SPD, `k ≥ 1`, weights and `h` valid.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.simplex_count();
        let f = &self.fields;
        if [f.metric.len(), f.metric_inv.len(), f.k.len(), f.w.len(), f.weight.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Data("field arrays do not match simplex count".to_string()));
        }
        for s in 0..n {
            if f.metric[s].cholesky().is_none() {
                return Err(Error::BackendConsistency(format!("metric not positive definite at simplex {s}")));
            }
            if !(f.k[s] >= 1.0 - 1e-12) {
                return Err(Error::BackendConsistency(format!("k = {} < 1 at simplex {s}", f.k[s])));
            }
            if !(f.weight[s] > 0.0 && f.weight[s].is_finite()) {
                return Err(Error::BackendConsistency(format!("non-positive volume weight at simplex {s}")));
            }
            if !f.w[s].iter().all(|v| v.is_finite()) {
                return Err(Error::BackendConsistency(format!("non-finite w at simplex {s}")));
            }
        }
        if self.thickness.nodal.len() != self.grid.node_count() {
            return Err(Error::Data("thickness does not match node count".to_string()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn simplex_count(&self) -> usize {
        self.grid.simplex_count()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// Per-simplex gradient `du` of a nodal function (covector in chart coordinates).
    pub fn discrete_gradient(&self, u: &NodalFunction) -> Vec<Vector3<f64>> {
        let jump = u.jump();
        (0..self.simplex_count())
            .map(|s| self.grid.simplex_gradient(s, &u.values, jump))
            .collect()
    }

    /// `Σ integrand_T · weight_T`, summed in simplex order.
    pub fn integrate(&self, integrand: &[f64]) -> Result<f64> {
        if integrand.len() != self.simplex_count() {
            return Err(Error::Data(format!(
                "integrand has {} entries for {} simplices",
                integrand.len(),
                self.simplex_count()
            )));
        }
        let mut acc = 0.0;
        for (s, (v, w)) in integrand.iter().zip(&self.fields.weight).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { simplex: s });
            }
            acc += v * w;
        }
        Ok(acc)
    }

    pub fn total_volume(&self) -> f64 {
        self.fields.weight.iter().sum()
    }

    /// `g`-norm of a covector on simplex `s`.
    #[inline]
    pub fn covector_norm_sq(&self, s: usize, p: &Vector3<f64>) -> f64 {
        p.dot(&(self.fields.metric_inv[s] * p))
    }

    /// Lumped `dvol_g`-mean of the nodal values.
    pub fn mean(&self, u: &NodalFunction) -> f64 {
        let total: f64 = self.node_weights.iter().sum();
        u.values.iter().zip(&self.node_weights).map(|(v, m)| v * m).sum::<f64>() / total
    }

    pub fn project_mean_zero(&self, u: &mut NodalFunction) {
        let mean = self.mean(u);
        for v in &mut u.values {
            *v -= mean;
        }
    }

    /// Sample an analytic field (or copy a table) at the nodes.
    pub fn nodal(&self, f: &ScalarField) -> Result<NodalFunction> {
        Ok(NodalFunction::new(sample_nodes(&self.grid, f)?))
    }

    /// `∮ w` along a closed edge loop, with `w` averaged over the simplices
    /// sharing each edge.
    pub fn loop_holonomy(&self, path: &[usize]) -> Result<f64> {
        let mut path = path;
        if path.len() > 1 && path.first() == path.last() {
            path = &path[..path.len() - 1];
        }
        if path.len() < 3 {
            return Err(Error::OpenPath(format!("loop has only {} distinct nodes", path.len())));
        }
        let mut total = 0.0;
        for i in 0..path.len() {
            let (a, b) = (path[i], path[(i + 1) % path.len()]);
            let incident = self
                .grid
                .edge_simplices(a, b)
                .ok_or_else(|| Error::OpenPath(format!("nodes {a} and {b} are not joined by an edge")))?;
            let mut acc = 0.0;
            for (s, vec) in &incident {
                acc += self.fields.w[*s].dot(vec);
            }
            total += acc / incident.len() as f64;
        }
        Ok(total)
    }

    /// Simplices whose barycenter keeps a distance of at least `margin`
    /// (fraction of the axis extent) from every non-periodic boundary face.
    pub fn interior_mask(&self, margin: f64) -> Vec<bool> {
        let r = &self.grid.region;
        self.grid
            .barycenters
            .iter()
            .map(|bc| {
                (0..self.dim()).all(|a| {
                    if Some(a) == r.periodic_axis {
                        return true;
                    }
                    let m = margin * (r.upper[a] - r.lower[a]);
                    bc[a] >= r.lower[a] + m && bc[a] <= r.upper[a] - m
                })
            })
            .collect()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let chart: Chart = serde_json::from_reader(file)?;
        chart.validate()?;
        Ok(chart)
    }
}

fn sample_nodes(grid: &Grid, f: &ScalarField) -> Result<Vec<f64>> {
    if let ScalarField::Table { values } = f {
        return Ok(values.clone());
    }
    grid.nodes.iter().map(|x| f.eval(&x[..grid.dim])).collect()
}
