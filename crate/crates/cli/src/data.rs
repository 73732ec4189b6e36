//! Long-format panel CSV: header `id,t,income`, one row per (individual,
//! time). Panels must be balanced.

use crate::CliError;
use gpilab_core::income_model::{IncomePanel, TimeGrid};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

/// Missing pairs listed in full in an unbalanced-panel error.
const MAX_LISTED: usize = 20;

fn row_error(line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("row {line}: {msg}"))
}

pub fn read_panel_csv<R: Read>(reader: R) -> Result<IncomePanel, CliError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read header: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["id", "t", "income"] {
        return Err(CliError::Input(format!(
            "header must be \"id,t,income\", found {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let mut obs: Vec<(usize, f64, f64, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_error(line, format!("malformed row ({e})"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(row_error(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(row_error(line, "empty id"));
        }
        let t: f64 = rec[1]
            .parse()
            .map_err(|_| row_error(line, format!("time {:?} is not a number", &rec[1])))?;
        let y: f64 = rec[2]
            .parse()
            .map_err(|_| row_error(line, format!("income {:?} is not a number", &rec[2])))?;
        if !t.is_finite() {
            return Err(row_error(line, format!("time {t} is not finite")));
        }
        if y.is_nan() || y <= 0.0 || y.is_infinite() {
            return Err(row_error(line, format!("income {y} must be positive and finite")));
        }
        let k = *id_index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            ids.len() - 1
        });
        obs.push((k, t, y, line));
    }
    if obs.is_empty() {
        return Err(CliError::Input("panel has no data rows".into()));
    }

    let mut times: Vec<f64> = obs.iter().map(|o| o.1).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let grid = TimeGrid::spanning(times.clone())?;

    let mut cells: Vec<Option<(f64, u64)>> = vec![None; ids.len() * times.len()];
    for &(k, t, y, line) in &obs {
        let j = times.binary_search_by(|x| x.total_cmp(&t)).expect("time collected above");
        let cell = &mut cells[k * times.len() + j];
        if let Some((_, first)) = cell {
            return Err(row_error(
                line,
                format!("duplicate observation for id {:?} at t = {t} (first on row {first})", ids[k]),
            ));
        }
        *cell = Some((y, line));
    }

    let missing: Vec<String> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_none())
        .map(|(i, _)| format!("({}, {})", ids[i / times.len()], times[i % times.len()]))
        .collect();
    if !missing.is_empty() {
        let mut listed = missing.iter().take(MAX_LISTED).cloned().collect::<Vec<_>>().join(", ");
        if missing.len() > MAX_LISTED {
            listed.push_str(&format!(" and {} more", missing.len() - MAX_LISTED));
        }
        return Err(CliError::Input(format!(
            "unbalanced panel: {} missing (id, t) pairs: {listed}",
            missing.len()
        )));
    }

    let rows: Vec<Vec<f64>> = cells
        .chunks(times.len())
        .map(|r| r.iter().map(|c| c.expect("balanced").0).collect())
        .collect();
    Ok(IncomePanel::new(grid, rows, ids)?)
}

pub fn parse_panel_csv(path: &Path) -> Result<IncomePanel, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open data file {}: {e}", path.display())))?;
    read_panel_csv(file)
}

/// Writes the panel in long format, individual-major. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_panel_csv<W: Write>(panel: &IncomePanel, writer: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "t", "income"])?;
    for (i, id) in panel.ids().iter().enumerate() {
        for (&t, &y) in panel.grid().points().iter().zip(panel.row(i)) {
            w.write_record([id.clone(), t.to_string(), y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
