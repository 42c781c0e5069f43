//! The fixed cleaning pipeline, in order: drop nonpositive-resistivity
//! rows, drop cavernous rows (caliper minus bit size above the
//! threshold), log-transform resistivity channels, fill missing values,
//! standardize. Gamma and neutron channels are standardized per well
//! (one formation per well in this data model); every other channel is
//! standardized with corpus-global statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{is_missing, Channel, ChannelKind, Corpus, CorpusError, WellLog};

pub const DEFAULT_CAVERN_DELTA: f64 = 0.35;

#[derive(Debug, Clone, thiserror::Error)]
pub enum PreprocessError {
    #[error("zero variance in channel '{channel}' within group '{group}'")]
    ZeroVariance { group: String, channel: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("cannot {action} '{path}': {message}")]
    Io {
        action: &'static str,
        path: String,
        message: String,
    },
    #[error("bad stats file line {line}: {message}")]
    BadStatsFile { line: usize, message: String },
}

/// Mean/std pair used to standardize one channel within one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

/// What `clean` and `normalize` did, plus the statistics needed to
/// replay the transform on unseen data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreprocessReport {
    pub rows_dropped_resistivity: usize,
    pub rows_dropped_caverns: usize,
    /// Wells fully emptied by cleaning, removed from the corpus.
    pub wells_removed: Vec<String>,
    /// Wells lacking caliper or bit-size channels; the cavern filter was
    /// skipped for them.
    pub cavern_filter_skipped: Vec<String>,
    /// Corpus-global stats per channel name (non gamma/neutron).
    pub global_stats: BTreeMap<String, ChannelStats>,
    /// Per-(well, channel-name) stats for gamma/neutron channels.
    pub well_stats: BTreeMap<(String, String), ChannelStats>,
}

/// Drop physically inadequate rows and log-transform resistivity.
/// Returns the cleaned corpus and the drop counts. Runs before fill so
/// bad readings never leak into their neighbours.
pub fn clean(corpus: &Corpus, cavern_delta: f64) -> (Corpus, PreprocessReport) {
    let mut report = PreprocessReport::default();
    let resistivity: Vec<usize> = kind_indices(corpus, ChannelKind::Resistivity);
    let caliper = kind_indices(corpus, ChannelKind::Caliper).first().copied();
    let bitsize = kind_indices(corpus, ChannelKind::Bitsize).first().copied();

    let mut wells = Vec::with_capacity(corpus.wells.len());
    for well in &corpus.wells {
        let cavern_cols = match (caliper, bitsize) {
            (Some(c), Some(b)) => Some((c, b)),
            _ => {
                report.cavern_filter_skipped.push(well.well_id.clone());
                None
            }
        };
        let mut depths = Vec::with_capacity(well.len());
        let mut values = Vec::with_capacity(well.values.len());
        let mut layers = well.layer_labels.as_ref().map(|_| Vec::with_capacity(well.len()));
        for i in 0..well.len() {
            let row = well.row(i);
            if resistivity
                .iter()
                .any(|&ch| !is_missing(row[ch]) && row[ch] <= 0.0)
            {
                report.rows_dropped_resistivity += 1;
                continue;
            }
            if let Some((c, b)) = cavern_cols {
                if !is_missing(row[c]) && !is_missing(row[b]) && row[c] - row[b] > cavern_delta {
                    report.rows_dropped_caverns += 1;
                    continue;
                }
            }
            depths.push(well.depths[i]);
            let mut out_row = row.to_vec();
            for &ch in &resistivity {
                if !is_missing(out_row[ch]) {
                    out_row[ch] = out_row[ch].ln();
                }
            }
            values.extend_from_slice(&out_row);
            if let Some(l) = layers.as_mut() {
                l.push(well.layer_labels.as_ref().unwrap()[i]);
            }
        }
        if depths.is_empty() {
            report.wells_removed.push(well.well_id.clone());
            continue;
        }
        // Constructed directly: row drops leave depth gaps, so the
        // constant-spacing validation of ingestion no longer applies.
        wells.push(WellLog {
            well_id: well.well_id.clone(),
            formation: well.formation.clone(),
            depths,
            values,
            n_channels: well.n_channels,
            class_label: well.class_label,
            layer_labels: layers,
        });
    }
    let cleaned = Corpus {
        channels: corpus.channels.clone(),
        wells,
    };
    (cleaned, report)
}

fn kind_indices(corpus: &Corpus, kind: ChannelKind) -> Vec<usize> {
    corpus
        .channels
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == kind)
        .map(|(i, _)| i)
        .collect()
}

fn is_per_well(channel: &Channel) -> bool {
    matches!(channel.kind, ChannelKind::Gamma | ChannelKind::Neutron)
}

/// Fit standardization statistics and apply them. Expects a cleaned and
/// filled corpus (no missing cells).
pub fn normalize(corpus: &Corpus) -> Result<(Corpus, PreprocessReport), PreprocessError> {
    let mut report = PreprocessReport::default();
    fit_stats(corpus, &mut report)?;
    let out = apply_stats(corpus, &report)?;
    Ok((out, report))
}

fn fit_stats(corpus: &Corpus, report: &mut PreprocessReport) -> Result<(), PreprocessError> {
    for (ch, channel) in corpus.channels.iter().enumerate() {
        if is_per_well(channel) {
            for well in &corpus.wells {
                let column: Vec<f64> = (0..well.len()).map(|i| well.value(i, ch)).collect();
                let stats = mean_std(&column);
                if stats.std < 1e-12 {
                    return Err(PreprocessError::ZeroVariance {
                        group: format!("well {} / formation {}", well.well_id, well.formation),
                        channel: channel.name.clone(),
                    });
                }
                report
                    .well_stats
                    .insert((well.well_id.clone(), channel.name.clone()), stats);
            }
        } else {
            let mut column = Vec::new();
            for well in &corpus.wells {
                column.extend((0..well.len()).map(|i| well.value(i, ch)));
            }
            let stats = mean_std(&column);
            if stats.std < 1e-12 {
                return Err(PreprocessError::ZeroVariance {
                    group: "corpus".to_string(),
                    channel: channel.name.clone(),
                });
            }
            report.global_stats.insert(channel.name.clone(), stats);
        }
    }
    Ok(())
}

/// Standardize a corpus with previously fitted statistics. Global
/// channels replay the stored transform; gamma/neutron channels are
/// refit per well so unseen wells can be processed.
pub fn apply_stats(
    corpus: &Corpus,
    report: &PreprocessReport,
) -> Result<Corpus, PreprocessError> {
    let mut wells = Vec::with_capacity(corpus.wells.len());
    for well in &corpus.wells {
        let mut out = well.clone();
        for (ch, channel) in corpus.channels.iter().enumerate() {
            let stats = if is_per_well(channel) {
                match report.well_stats.get(&(well.well_id.clone(), channel.name.clone())) {
                    Some(s) => *s,
                    None => {
                        let column: Vec<f64> =
                            (0..well.len()).map(|i| well.value(i, ch)).collect();
                        let s = mean_std(&column);
                        if s.std < 1e-12 {
                            return Err(PreprocessError::ZeroVariance {
                                group: format!(
                                    "well {} / formation {}",
                                    well.well_id, well.formation
                                ),
                                channel: channel.name.clone(),
                            });
                        }
                        s
                    }
                }
            } else {
                *report
                    .global_stats
                    .get(&channel.name)
                    .ok_or_else(|| PreprocessError::BadStatsFile {
                        line: 0,
                        message: format!("no stored stats for channel '{}'", channel.name),
                    })?
            };
            for i in 0..well.len() {
                let v = well.value(i, ch);
                out.values[i * well.n_channels + ch] = (v - stats.mean) / stats.std;
            }
        }
        wells.push(out);
    }
    Ok(Corpus {
        channels: corpus.channels.clone(),
        wells,
    })
}

/// Population mean and standard deviation.
fn mean_std(values: &[f64]) -> ChannelStats {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    ChannelStats {
        mean,
        std: var.sqrt(),
    }
}

/// The full pipeline: clean, fill, normalize. Merges the reports.
pub fn run_pipeline(
    corpus: &Corpus,
    cavern_delta: f64,
) -> Result<(Corpus, PreprocessReport), PreprocessError> {
    let (cleaned, mut report) = clean(corpus, cavern_delta);
    let filled = cleaned.fill_missing()?;
    let (normalized, stats) = normalize(&filled)?;
    report.global_stats = stats.global_stats;
    report.well_stats = stats.well_stats;
    Ok((normalized, report))
}

impl PreprocessReport {
    /// Plain-text key=value serialization; floats keep full precision.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rows_dropped_resistivity={}", self.rows_dropped_resistivity);
        let _ = writeln!(s, "rows_dropped_caverns={}", self.rows_dropped_caverns);
        for w in &self.wells_removed {
            let _ = writeln!(s, "well_removed={w}");
        }
        for w in &self.cavern_filter_skipped {
            let _ = writeln!(s, "cavern_filter_skipped={w}");
        }
        for (name, st) in &self.global_stats {
            let _ = writeln!(s, "global.{name}={};{}", st.mean, st.std);
        }
        for ((well, name), st) in &self.well_stats {
            let _ = writeln!(s, "well.{well}.{name}={};{}", st.mean, st.std);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), PreprocessError> {
        std::fs::write(path, self.to_text()).map_err(|e| PreprocessError::Io {
            action: "write",
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_text(text: &str) -> Result<PreprocessReport, PreprocessError> {
        let mut report = PreprocessReport::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(PreprocessError::BadStatsFile {
                line: idx + 1,
                message: "expected key=value".into(),
            })?;
            let bad = |message: String| PreprocessError::BadStatsFile {
                line: idx + 1,
                message,
            };
            let parse_stats = |v: &str| -> Result<ChannelStats, PreprocessError> {
                let (m, sd) = v
                    .split_once(';')
                    .ok_or_else(|| bad("expected mean;std".into()))?;
                Ok(ChannelStats {
                    mean: m.parse().map_err(|_| bad(format!("bad mean '{m}'")))?,
                    std: sd.parse().map_err(|_| bad(format!("bad std '{sd}'")))?,
                })
            };
            match key {
                "rows_dropped_resistivity" => {
                    report.rows_dropped_resistivity =
                        value.parse().map_err(|_| bad("bad count".into()))?
                }
                "rows_dropped_caverns" => {
                    report.rows_dropped_caverns =
                        value.parse().map_err(|_| bad("bad count".into()))?
                }
                "well_removed" => report.wells_removed.push(value.to_string()),
                "cavern_filter_skipped" => report.cavern_filter_skipped.push(value.to_string()),
                _ => {
                    if let Some(name) = key.strip_prefix("global.") {
                        report.global_stats.insert(name.to_string(), parse_stats(value)?);
                    } else if let Some(rest) = key.strip_prefix("well.") {
                        let (well, name) = rest
                            .split_once('.')
                            .ok_or_else(|| bad("expected well.<id>.<channel>".into()))?;
                        report
                            .well_stats
                            .insert((well.to_string(), name.to_string()), parse_stats(value)?);
                    } else {
                        return Err(bad(format!("unknown key '{key}'")));
                    }
                }
            }
        }
        Ok(report)
    }

    pub fn load(path: &Path) -> Result<PreprocessReport, PreprocessError> {
        let text = std::fs::read_to_string(path).map_err(|e| PreprocessError::Io {
            action: "read",
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text)
    }
}
