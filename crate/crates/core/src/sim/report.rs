//! CSV and fixed-width text rendering of simulator tables.

use indexmap::IndexMap;

use super::{DistanceTable, RecommendationGrid};

/// Marker for cells where no lot had a free spot.
pub const EMPTY_CELL: &str = "-";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub csv: String,
    pub text: String,
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn to_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// One row per alpha, one column per origin.
pub fn render_grid(grid: &RecommendationGrid) -> Rendered {
    let mut header = vec!["alpha".to_string()];
    header.extend(grid.origins.iter().cloned());
    let rows: Vec<Vec<String>> = grid
        .alphas
        .iter()
        .zip(&grid.cells)
        .map(|(a, cells)| {
            let mut row = vec![a.to_string()];
            row.extend(cells.iter().map(|c| c.clone().unwrap_or_else(|| EMPTY_CELL.to_string())));
            row
        })
        .collect();
    let csv = to_csv(&header, &rows);

    let marked: Vec<Vec<String>> = rows
        .iter()
        .zip(&grid.alphas)
        .map(|(row, &alpha)| {
            let mut row = row.clone();
            for (o, origin) in grid.origins.iter().enumerate() {
                if grid.mismatches.iter().any(|m| m.alpha == alpha && &m.origin == origin) {
                    row[o + 1].push('*');
                }
            }
            row
        })
        .collect();
    let mut text = to_text(&header, &marked);
    if !grid.mismatches.is_empty() {
        text.push_str("\n* differs from the scenario's reference grid:\n");
        for m in &grid.mismatches {
            text.push_str(&format!(
                "  alpha {} / {}: reference lot {}, computed lot {}\n",
                m.alpha, m.origin, m.expected, m.computed
            ));
        }
    }
    for w in &grid.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    Rendered { csv, text }
}

/// One row per lot, one column per origin, plus open spots when known.
pub fn render_distances(table: &DistanceTable, spots: Option<&IndexMap<String, u32>>) -> Rendered {
    let mut header = vec!["lot".to_string()];
    header.extend(table.origins.iter().cloned());
    if spots.is_some() {
        header.push("open_spots".into());
    }
    let rows: Vec<Vec<String>> = table
        .lots
        .iter()
        .enumerate()
        .map(|(li, lot)| {
            let mut row = vec![lot.clone()];
            row.extend(table.km.iter().map(|r| format!("{:.4}", r[li])));
            if let Some(s) = spots {
                row.push(s.get(lot).copied().unwrap_or(0).to_string());
            }
            row
        })
        .collect();
    Rendered {
        csv: to_csv(&header, &rows),
        text: to_text(&header, &rows),
    }
}

/// Every scored lot for every cell.
pub fn render_scores(grid: &RecommendationGrid) -> String {
    let header: Vec<String> = ["alpha", "origin", "rank", "lot", "distance_km", "spots", "objective"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for cell in &grid.audit {
        for (rank, s) in cell.scores.iter().enumerate() {
            rows.push(vec![
                cell.alpha.to_string(),
                cell.origin.clone(),
                (rank + 1).to_string(),
                s.lot_id.clone(),
                format!("{:.4}", s.distance_km),
                s.spots.to_string(),
                format!("{:.6}", s.objective),
            ]);
        }
    }
    to_csv(&header, &rows)
}
