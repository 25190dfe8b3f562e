//! The extended space `E = (L²)^|P| × R^|W|` on the discrete grid.
//!
//! Elements pair a path departure-rate matrix (paths × steps, veh/h) with an
//! OD demand vector (veh). The inner product integrates the flow block with
//! the left-endpoint rule and adds the Euclidean product of the demand block.

use std::ops::{Add, Sub};

use ndarray::{Array1, Array2, Zip};
use serde::Serialize;

use super::grid::TimeGrid;
use crate::error::{Error, Result};

/// A point `X = (h, Q)` of the extended space. Not necessarily feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPoint {
    /// Departure rates, one row per path, one column per grid step.
    pub flow: Array2<f64>,
    /// Demand per OD pair.
    pub demand: Array1<f64>,
}

impl ExtendedPoint {
    pub fn new(flow: Array2<f64>, demand: Array1<f64>) -> Self {
        ExtendedPoint { flow, demand }
    }

    pub fn zeros(n_paths: usize, n_steps: usize, n_od: usize) -> Self {
        ExtendedPoint {
            flow: Array2::zeros((n_paths, n_steps)),
            demand: Array1::zeros(n_od),
        }
    }

    /// `(paths, steps, od pairs)`
    pub fn shape(&self) -> (usize, usize, usize) {
        let (p, n) = self.flow.dim();
        (p, n, self.demand.len())
    }

    pub fn same_shape(&self, other: &ExtendedPoint) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// `self + c * other`
    pub fn add_scaled(&self, c: f64, other: &ExtendedPoint) -> ExtendedPoint {
        ExtendedPoint {
            flow: Zip::from(&self.flow)
                .and(&other.flow)
                .map_collect(|&a, &b| a + c * b),
            demand: Zip::from(&self.demand)
                .and(&other.demand)
                .map_collect(|&a, &b| a + c * b),
        }
    }

    pub fn scaled(&self, c: f64) -> ExtendedPoint {
        ExtendedPoint {
            flow: self.flow.mapv(|v| c * v),
            demand: self.demand.mapv(|v| c * v),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flow.iter().chain(self.demand.iter()).all(|v| v.is_finite())
    }
}

impl Sub for &ExtendedPoint {
    type Output = ExtendedPoint;

    fn sub(self, rhs: &ExtendedPoint) -> ExtendedPoint {
        self.add_scaled(-1.0, rhs)
    }
}

impl Add for &ExtendedPoint {
    type Output = ExtendedPoint;

    fn add(self, rhs: &ExtendedPoint) -> ExtendedPoint {
        self.add_scaled(1.0, rhs)
    }
}

/// The constraint structure of the feasible set: which paths serve which OD
/// pair, and the grid the flows live on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    grid: TimeGrid,
    od_paths: Vec<Vec<usize>>,
    n_paths: usize,
}

impl FeasibleSet {
    /// `od_paths[w]` lists the path indices of OD pair `w`; every path must
    /// appear in exactly one OD pair and every OD pair needs at least one path.
    pub fn new(grid: TimeGrid, od_paths: Vec<Vec<usize>>) -> Result<Self> {
        let n_paths = od_paths.iter().map(Vec::len).sum();
        let mut seen = vec![false; n_paths];
        for (w, paths) in od_paths.iter().enumerate() {
            if paths.is_empty() {
                return Err(Error::scenario(format!("od_pairs[{w}]"), "OD pair has no path"));
            }
            for &p in paths {
                if p >= n_paths || seen[p] {
                    return Err(Error::scenario(
                        format!("od_pairs[{w}]"),
                        format!("path index {p} is out of range or assigned twice"),
                    ));
                }
                seen[p] = true;
            }
        }
        Ok(FeasibleSet {
            grid,
            od_paths,
            n_paths,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn od_paths(&self) -> &[Vec<usize>] {
        &self.od_paths
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_od(&self) -> usize {
        self.od_paths.len()
    }

    pub fn zero_point(&self) -> ExtendedPoint {
        ExtendedPoint::zeros(self.n_paths, self.grid.n_steps(), self.n_od())
    }

    pub fn check_shape(&self, x: &ExtendedPoint) -> Result<()> {
        let want = (self.n_paths, self.grid.n_steps(), self.n_od());
        if x.shape() != want {
            return Err(Error::Dimension(format!(
                "point has shape {:?}, feasible set expects {want:?}",
                x.shape()
            )));
        }
        Ok(())
    }

    /// Spreads `demand[w]` evenly over every path and step of OD pair `w`.
    pub fn uniform_point(&self, demand: &[f64]) -> Result<ExtendedPoint> {
        if demand.len() != self.n_od() {
            return Err(Error::Dimension(format!(
                "{} demands for {} OD pairs",
                demand.len(),
                self.n_od()
            )));
        }
        let mut x = self.zero_point();
        let span = self.grid.span();
        for (w, paths) in self.od_paths.iter().enumerate() {
            let rate = demand[w] / (paths.len() as f64 * span);
            for &p in paths {
                x.flow.row_mut(p).fill(rate);
            }
            x.demand[w] = demand[w];
        }
        Ok(x)
    }

    /// Per-OD departed volume `Σ_p Σ_k h_p(t_k) dt`.
    pub fn od_volumes(&self, x: &ExtendedPoint) -> Vec<f64> {
        let dt = self.grid.dt();
        self.od_paths
            .iter()
            .map(|paths| paths.iter().map(|&p| x.flow.row(p).sum() * dt).sum())
            .collect()
    }
}

/// `⟨x, y⟩_E = Σ_p Σ_k x_p(t_k) y_p(t_k) dt + Σ_w x_w y_w`
pub fn inner_product(x: &ExtendedPoint, y: &ExtendedPoint, grid: &TimeGrid) -> Result<f64> {
    x.same_shape(y)?;
    if x.flow.ncols() != grid.n_steps() {
        return Err(Error::Dimension(format!(
            "{} flow columns on a {}-step grid",
            x.flow.ncols(),
            grid.n_steps()
        )));
    }
    Ok(inner_unchecked(x, y, grid.dt()))
}

// Fixed-order accumulation: reported numbers must be bit-reproducible.
pub(crate) fn inner_unchecked(x: &ExtendedPoint, y: &ExtendedPoint, dt: f64) -> f64 {
    let mut flow = 0.0;
    for (a, b) in x.flow.iter().zip(y.flow.iter()) {
        flow += a * b;
    }
    let mut demand = 0.0;
    for (a, b) in x.demand.iter().zip(y.demand.iter()) {
        demand += a * b;
    }
    flow * dt + demand
}

pub fn norm(x: &ExtendedPoint, grid: &TimeGrid) -> f64 {
    inner_unchecked(x, x, grid.dt()).max(0.0).sqrt()
}

/// `‖x - y‖_E`
pub fn distance(x: &ExtendedPoint, y: &ExtendedPoint, grid: &TimeGrid) -> f64 {
    norm(&(x - y), grid)
}

/// Discrete essential infimum: every step has positive measure, so this is the minimum.
pub fn essential_infimum(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("essential infimum of an empty vector".into()));
    }
    let mut best = f64::INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite cost {v}")));
        }
        best = best.min(v);
    }
    Ok(best)
}

/// Minimum effective cost per OD pair over its paths and departure steps.
pub fn od_min_cost(psi: &Array2<f64>, set: &FeasibleSet) -> Result<Vec<f64>> {
    if psi.nrows() != set.n_paths() {
        return Err(Error::Dimension(format!(
            "{} cost rows for {} paths",
            psi.nrows(),
            set.n_paths()
        )));
    }
    set.od_paths()
        .iter()
        .map(|paths| {
            let mut best = f64::INFINITY;
            for &p in paths {
                let row = psi.row(p);
                let row = row.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| row.to_vec());
                best = best.min(essential_infimum(&row)?);
            }
            Ok(best)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub min_flow: f64,
    /// `|Σ_p Σ_k h_p(t_k) dt − Q_w|` per OD pair.
    pub demand_defects: Vec<f64>,
    pub feasible: bool,
}

pub fn check_feasible(x: &ExtendedPoint, set: &FeasibleSet, tol: f64) -> Result<FeasibilityReport> {
    set.check_shape(x)?;
    let min_flow = x.flow.iter().copied().fold(f64::INFINITY, f64::min);
    let demand_defects: Vec<f64> = set
        .od_volumes(x)
        .into_iter()
        .zip(x.demand.iter())
        .map(|(vol, &q)| (vol - q).abs())
        .collect();
    let feasible = min_flow >= -tol
        && x.demand.iter().all(|&q| q >= -tol)
        && demand_defects.iter().all(|&d| d <= tol);
    Ok(FeasibilityReport {
        min_flow,
        demand_defects,
        feasible,
    })
}
