//! CSV ingestion and emission.
//!
//! Schema: header row with `well_id`, `formation`, `depth`, one float
//! column per channel, optional `class` and `layer` integer columns.
//! Missing cell = empty field, UTF-8, comma separator, `.` decimal.

use std::path::Path;

use super::{Channel, Corpus, CorpusError, WellLog, MISSING};

struct WellAccum {
    formation: String,
    depths: Vec<f64>,
    values: Vec<f64>,
    class: Option<i64>,
    layers: Vec<Option<i64>>,
    first_line: u64,
}

/// Read a corpus, grouping rows by `well_id`. Rows of one well must
/// already be in increasing depth order; wells may interleave. Depth
/// spacing must be constant up to 1e-6 relative tolerance.
pub fn ingest_csv(path: &Path, schema: &[String]) -> Result<Corpus, CorpusError> {
    ingest_impl(path, schema, true)
}

/// Like [`ingest_csv`] but without the constant-spacing validation:
/// cleaned corpora legitimately carry depth gaps where rows were
/// dropped. Monotonicity is still enforced.
pub fn ingest_csv_preprocessed(path: &Path, schema: &[String]) -> Result<Corpus, CorpusError> {
    ingest_impl(path, schema, false)
}

fn ingest_impl(path: &Path, schema: &[String], strict_spacing: bool) -> Result<Corpus, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let well_col = col("well_id").ok_or_else(|| CorpusError::MissingColumn("well_id".into()))?;
    let formation_col =
        col("formation").ok_or_else(|| CorpusError::MissingColumn("formation".into()))?;
    let depth_col = col("depth").ok_or_else(|| CorpusError::MissingColumn("depth".into()))?;
    let channel_cols: Vec<usize> = schema
        .iter()
        .map(|name| col(name).ok_or_else(|| CorpusError::MissingColumn(name.clone())))
        .collect::<Result<_, _>>()?;
    let class_col = col("class");
    let layer_col = col("layer");

    let d = schema.len();
    // First-appearance order of wells is preserved.
    let mut order: Vec<String> = Vec::new();
    let mut accum: std::collections::BTreeMap<String, WellAccum> = std::collections::BTreeMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| CorpusError::MalformedRow {
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| -> Result<&str, CorpusError> {
            record.get(idx).ok_or(CorpusError::MalformedRow {
                line,
                message: "row shorter than header".into(),
            })
        };
        let well_id = field(well_col)?.to_string();
        if well_id.is_empty() {
            return Err(CorpusError::MalformedRow {
                line,
                message: "empty well_id".into(),
            });
        }
        let formation = field(formation_col)?.to_string();
        let depth: f64 = parse_f64(field(depth_col)?, line, "depth")?.ok_or(
            CorpusError::MalformedRow {
                line,
                message: "empty depth".into(),
            },
        )?;

        let entry = accum.entry(well_id.clone()).or_insert_with(|| {
            order.push(well_id.clone());
            WellAccum {
                formation: formation.clone(),
                depths: Vec::new(),
                values: Vec::new(),
                class: None,
                layers: Vec::new(),
                first_line: line,
            }
        });
        if entry.formation != formation {
            return Err(CorpusError::InconsistentWell {
                well_id,
                message: format!(
                    "formation changes from '{}' to '{}' at line {line}",
                    entry.formation, formation
                ),
            });
        }
        if let Some(&last) = entry.depths.last() {
            if depth <= last {
                return Err(CorpusError::NonMonotoneDepth { well_id });
            }
        }
        entry.depths.push(depth);
        for &c in &channel_cols {
            let v = parse_f64(field(c)?, line, &headers[c])?;
            entry.values.push(v.unwrap_or(MISSING));
        }
        if let Some(c) = class_col {
            let parsed = parse_i64(field(c)?, line, "class")?;
            match (entry.class, parsed) {
                (None, v) => entry.class = v,
                (Some(prev), Some(v)) if prev != v => {
                    return Err(CorpusError::InconsistentWell {
                        well_id,
                        message: format!("class changes from {prev} to {v} at line {line}"),
                    })
                }
                _ => {}
            }
        }
        if let Some(c) = layer_col {
            entry.layers.push(parse_i64(field(c)?, line, "layer")?);
        }
    }

    let mut wells = Vec::with_capacity(order.len());
    for id in order {
        let acc = accum.remove(&id).expect("accumulated well");
        let mut well =
            WellLog::new_impl(id.clone(), acc.formation, acc.depths, acc.values, d, strict_spacing)?;
        well.class_label = acc.class;
        if acc.layers.iter().any(Option::is_some) {
            if let Some(gap) = acc.layers.iter().position(Option::is_none) {
                return Err(CorpusError::MalformedRow {
                    line: acc.first_line + gap as u64,
                    message: format!("well '{id}' has a partially filled layer column"),
                });
            }
            well.layer_labels = Some(acc.layers.into_iter().map(|v| v.unwrap()).collect());
        }
        wells.push(well);
    }

    let channels = schema.iter().map(|n| Channel::named(n)).collect();
    Corpus::new(channels, wells)
}

fn parse_f64(s: &str, line: u64, column: &str) -> Result<Option<f64>, CorpusError> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(None);
    }
    t.parse::<f64>()
        .map(Some)
        .map_err(|_| CorpusError::MalformedRow {
            line,
            message: format!("cannot parse '{t}' in column '{column}' as a number"),
        })
}

fn parse_i64(s: &str, line: u64, column: &str) -> Result<Option<i64>, CorpusError> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(None);
    }
    t.parse::<i64>()
        .map(Some)
        .map_err(|_| CorpusError::MalformedRow {
            line,
            message: format!("cannot parse '{t}' in column '{column}' as an integer"),
        })
}

/// Write a corpus back to CSV. Floats use the shortest representation
/// that round-trips, so emit -> ingest reproduces the corpus exactly.
pub fn emit_csv(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let io_err = |e: csv::Error| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(io_err)?;
    let any_class = corpus.wells.iter().any(|w| w.class_label.is_some());
    let any_layer = corpus.wells.iter().any(|w| w.layer_labels.is_some());

    let mut header = vec!["well_id".to_string(), "formation".into(), "depth".into()];
    header.extend(corpus.channels.iter().map(|c| c.name.clone()));
    if any_class {
        header.push("class".into());
    }
    if any_layer {
        header.push("layer".into());
    }
    writer.write_record(&header).map_err(io_err)?;

    for well in &corpus.wells {
        for i in 0..well.len() {
            let mut row = vec![
                well.well_id.clone(),
                well.formation.clone(),
                format!("{}", well.depths[i]),
            ];
            for ch in 0..well.n_channels {
                let v = well.value(i, ch);
                row.push(if super::is_missing(v) {
                    String::new()
                } else {
                    format!("{v}")
                });
            }
            if any_class {
                row.push(well.class_label.map(|c| c.to_string()).unwrap_or_default());
            }
            if any_layer {
                row.push(
                    well.layer_labels
                        .as_ref()
                        .map(|l| l[i].to_string())
                        .unwrap_or_default(),
                );
            }
            writer.write_record(&row).map_err(io_err)?;
        }
    }
    writer.flush().map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(())
}
