//! Scenario files and CSV artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! written point reads back bit for bit and repeated runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::loader::{CumulativeCurves, DelayField};
use crate::model::{ExtendedPoint, Scenario, ScenarioDocument};
use crate::solvers::IterateHistory;

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDocument = serde_json::from_str(text)?;
    Scenario::from_document(doc)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn scenario_to_json(scenario: &Scenario) -> Result<String> {
    let mut s = serde_json::to_string_pretty(scenario.document())?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temporary file and a rename, so readers never see
/// a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Internal(format!("csv buffer: {e}")))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().flexible(true).from_writer(Vec::new())
}

/// Rows `h,<path>,h_0,…,h_{N−1}` followed by `Q,<od>,Q_w`.
pub fn final_point_csv(x: &ExtendedPoint, path_ids: &[String], od_ids: &[String]) -> Result<Vec<u8>> {
    if path_ids.len() != x.flow.nrows() || od_ids.len() != x.demand.len() {
        return Err(Error::Dimension("labels do not match the point".into()));
    }
    let mut w = writer();
    for (p, id) in path_ids.iter().enumerate() {
        let mut row = vec!["h".to_string(), id.clone()];
        row.extend(x.flow.row(p).iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    for (q, id) in od_ids.iter().enumerate() {
        w.write_record(["Q", id, &num(x.demand[q])])?;
    }
    finish(w)
}

/// Labeled point as read back from [`final_point_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub path_ids: Vec<String>,
    pub od_ids: Vec<String>,
    pub point: ExtendedPoint,
}

pub fn parse_final_point(bytes: &[u8]) -> Result<LabeledPoint> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut path_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut od_ids = Vec::new();
    let mut demand = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        match rec.get(0) {
            Some("h") if rec.len() >= 3 => {
                path_ids.push(rec[1].to_string());
                rows.push(rec.iter().skip(2).map(parse).collect::<Result<_>>()?);
            }
            Some("Q") if rec.len() == 3 => {
                od_ids.push(rec[1].to_string());
                demand.push(parse(&rec[2])?);
            }
            _ => return Err(Error::Parse(format!("unexpected row {:?}", rec))),
        }
    }
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("flow rows have different lengths".into()));
    }
    let flow = Array2::from_shape_vec((rows.len(), n), rows.concat())
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(LabeledPoint {
        path_ids,
        od_ids,
        point: ExtendedPoint::new(flow, Array1::from(demand)),
    })
}

pub fn scenario_point_csv(x: &ExtendedPoint, scenario: &Scenario) -> Result<Vec<u8>> {
    let paths: Vec<String> = scenario.paths().iter().map(|p| p.id.clone()).collect();
    let ods: Vec<String> = scenario.od_pairs().iter().map(|o| o.id.clone()).collect();
    final_point_csv(x, &paths, &ods)
}

/// Long format `path,k,t,h,d,psi`.
pub fn delay_field_csv(scenario: &Scenario, h: &Array2<f64>, field: &DelayField) -> Result<Vec<u8>> {
    let grid = scenario.grid();
    let mut w = writer();
    w.write_record(["path", "k", "t", "h", "d", "psi"])?;
    for (p, path) in scenario.paths().iter().enumerate() {
        for k in 0..grid.n_steps() {
            w.write_record([
                path.id.clone(),
                k.to_string(),
                num(grid.time(k)),
                num(h[[p, k]]),
                num(field.d[[p, k]]),
                num(field.psi[[p, k]]),
            ])?;
        }
    }
    finish(w)
}

/// Reads a departure profile in the [`final_point_csv`] layout; `Q` rows are optional.
pub fn parse_flow_profile(bytes: &[u8], scenario: &Scenario) -> Result<Array2<f64>> {
    let lp = parse_final_point(bytes)?;
    let ids: Vec<&str> = scenario.paths().iter().map(|p| p.id.as_str()).collect();
    let n = scenario.grid().n_steps();
    let mut h = Array2::zeros((ids.len(), n));
    let mut seen = vec![false; ids.len()];
    for (row, id) in lp.path_ids.iter().enumerate() {
        let p = ids
            .iter()
            .position(|i| i == id)
            .ok_or_else(|| Error::Parse(format!("unknown path `{id}`")))?;
        if lp.point.flow.ncols() != n {
            return Err(Error::Dimension(format!("{} steps, grid has {n}", lp.point.flow.ncols())));
        }
        h.row_mut(p).assign(&lp.point.flow.row(row));
        seen[p] = true;
    }
    if let Some(p) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!("no profile for path `{}`", ids[p])));
    }
    Ok(h)
}

/// One row per grid sample; columns `t`, then per link `<link>:up`,
/// `<link>:down` and per carried path `<link>:<path>:up|down`, then per path
/// `<path>:departed|entered|arrived`.
pub fn curves_csv(scenario: &Scenario, curves: &CumulativeCurves) -> Result<Vec<u8>> {
    let links = scenario.links();
    let paths = scenario.paths();
    let mut header = vec!["t".to_string()];
    for lc in &curves.links {
        let id = &links[lc.link].id;
        header.push(format!("{id}:up"));
        header.push(format!("{id}:down"));
        for &p in &lc.paths {
            header.push(format!("{id}:{}:up", paths[p].id));
            header.push(format!("{id}:{}:down", paths[p].id));
        }
    }
    for p in paths {
        for end in ["departed", "entered", "arrived"] {
            header.push(format!("{}:{end}", p.id));
        }
    }
    let mut w = writer();
    w.write_record(&header)?;
    for s in 0..curves.samples {
        let mut row = vec![num(curves.time(s))];
        for lc in &curves.links {
            row.push(num(lc.upstream[s]));
            row.push(num(lc.downstream[s]));
            for j in 0..lc.paths.len() {
                row.push(num(lc.upstream_by_path[j][s]));
                row.push(num(lc.downstream_by_path[j][s]));
            }
        }
        for p in 0..paths.len() {
            row.push(num(curves.departed[p][s]));
            row.push(num(curves.entered[p][s]));
            row.push(num(curves.arrived[p][s]));
        }
        w.write_record(&row)?;
    }
    finish(w)
}

/// `k,gap,Q_<od>…,vbar_<od>…,dnl_calls` and, with `timings`, `elapsed_s`.
/// Undefined averages (zero demand) are written as `NaN`.
pub fn history_csv(history: &IterateHistory, od_ids: &[String], timings: bool) -> Result<Vec<u8>> {
    let mut header = vec!["k".to_string(), "gap".to_string()];
    header.extend(od_ids.iter().map(|o| format!("Q_{o}")));
    header.extend(od_ids.iter().map(|o| format!("vbar_{o}")));
    header.push("dnl_calls".into());
    if timings {
        header.push("elapsed_s".into());
    }
    let mut w = writer();
    w.write_record(&header)?;
    for r in &history.records {
        if r.demand.len() != od_ids.len() {
            return Err(Error::Dimension("history width does not match OD labels".into()));
        }
        let mut row = vec![r.iteration.to_string(), num(r.gap)];
        row.extend(r.demand.iter().map(|&v| num(v)));
        row.extend(r.avg_cost.iter().map(|&v| num(v)));
        row.push(r.dnl_calls.to_string());
        if timings {
            row.push(num(r.elapsed));
        }
        w.write_record(&row)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn point_round_trip_is_exact() {
        let x = ExtendedPoint::new(
            array![[0.1, 1.0 / 3.0, 0.0], [1e-300, 5e20, 2.5]],
            array![std::f64::consts::PI],
        );
        let bytes = final_point_csv(&x, &["a".into(), "b,c".into()], &["w".into()]).unwrap();
        let back = parse_final_point(&bytes).unwrap();
        assert_eq!(back.point, x);
        assert_eq!(back.path_ids, vec!["a".to_string(), "b,c".to_string()]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
