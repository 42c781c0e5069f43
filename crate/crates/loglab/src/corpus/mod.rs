//! Data model for well-log corpora: channels, wells, CSV ingestion,
//! missing-value filling, and a deterministic synthetic generator.
//!
//! Values are stored row-major per well (`n` depth samples by `d`
//! channels). Missing readings are encoded as NaN, a sentinel no real
//! channel can produce; zeros stay meaningful.

mod csv_io;
mod synth;

pub use csv_io::{emit_csv, ingest_csv, ingest_csv_preprocessed};
pub use synth::{generate_synthetic, SynthSpec};

use std::collections::BTreeMap;

/// Missing-value sentinel used in raw (pre-fill) value matrices.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("non-monotone depth in well '{well_id}'")]
    NonMonotoneDepth { well_id: String },
    #[error("irregular depth spacing in well '{well_id}' at row {row}")]
    IrregularSpacing { well_id: String, row: usize },
    #[error("inconsistent well '{well_id}': {message}")]
    InconsistentWell { well_id: String, message: String },
    #[error("all values missing in well '{well_id}' channel '{channel}'")]
    AllMissing { well_id: String, channel: String },
    #[error("well '{well_id}' has {got} columns, corpus has {expected} channels")]
    ChannelWidth {
        well_id: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate well id '{0}'")]
    DuplicateWell(String),
    #[error("duplicate channel name '{0}'")]
    DuplicateChannel(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// What a logging channel measures; decides which cleaning rules apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Resistivity,
    Caliper,
    Bitsize,
    Gamma,
    Neutron,
    Generic,
}

impl ChannelKind {
    /// Infer the kind from conventional log mnemonics (RESD, CALI, BS,
    /// GR, NEUT...); anything unrecognized is generic.
    pub fn from_name(name: &str) -> ChannelKind {
        let upper = name.to_ascii_uppercase();
        if upper.starts_with("RES") {
            ChannelKind::Resistivity
        } else if upper.starts_with("CALI") {
            ChannelKind::Caliper
        } else if upper == "BS" || upper.starts_with("BITSIZE") {
            ChannelKind::Bitsize
        } else if upper == "GR" || upper.starts_with("GAMMA") {
            ChannelKind::Gamma
        } else if upper.starts_with("NEUT") {
            ChannelKind::Neutron
        } else {
            ChannelKind::Generic
        }
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub name: String,
    pub kind: ChannelKind,
}

impl Channel {
    pub fn named(name: &str) -> Channel {
        Channel {
            name: name.to_string(),
            kind: ChannelKind::from_name(name),
        }
    }
}

impl PartialEq for Channel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind
    }
}

/// One well's ordered depth samples across `d` channels plus optional
/// expert labels.
#[derive(Debug, Clone)]
pub struct WellLog {
    pub well_id: String,
    pub formation: String,
    pub depths: Vec<f64>,
    /// Row-major `n x d` readings; NaN marks a missing cell.
    pub values: Vec<f64>,
    pub n_channels: usize,
    pub class_label: Option<i64>,
    pub layer_labels: Option<Vec<i64>>,
}

impl WellLog {
    pub fn new(
        well_id: String,
        formation: String,
        depths: Vec<f64>,
        values: Vec<f64>,
        n_channels: usize,
    ) -> Result<WellLog, CorpusError> {
        Self::new_impl(well_id, formation, depths, values, n_channels, true)
    }

    pub(crate) fn new_impl(
        well_id: String,
        formation: String,
        depths: Vec<f64>,
        values: Vec<f64>,
        n_channels: usize,
        strict_spacing: bool,
    ) -> Result<WellLog, CorpusError> {
        if values.len() != depths.len() * n_channels {
            return Err(CorpusError::ChannelWidth {
                well_id,
                got: if depths.is_empty() { 0 } else { values.len() / depths.len() },
                expected: n_channels,
            });
        }
        let well = WellLog {
            well_id,
            formation,
            depths,
            values,
            n_channels,
            class_label: None,
            layer_labels: None,
        };
        well.validate_depths(strict_spacing)?;
        Ok(well)
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn value(&self, row: usize, ch: usize) -> f64 {
        self.values[row * self.n_channels + ch]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_channels..(row + 1) * self.n_channels]
    }

    /// Depths must increase strictly; under strict validation the
    /// spacing must also be constant up to a 1e-6 relative tolerance
    /// (the data model assumes unit spacing, and the corpus is
    /// validated rather than resampled).
    fn validate_depths(&self, strict_spacing: bool) -> Result<(), CorpusError> {
        if self.depths.len() < 2 {
            return Ok(());
        }
        for w in self.depths.windows(2) {
            if w[1] <= w[0] {
                return Err(CorpusError::NonMonotoneDepth {
                    well_id: self.well_id.clone(),
                });
            }
        }
        if !strict_spacing {
            return Ok(());
        }
        let spacing = self.depths[1] - self.depths[0];
        for (i, w) in self.depths.windows(2).enumerate() {
            let diff = w[1] - w[0];
            if (diff - spacing).abs() > 1e-6 * spacing.abs() {
                return Err(CorpusError::IrregularSpacing {
                    well_id: self.well_id.clone(),
                    row: i + 1,
                });
            }
        }
        Ok(())
    }

    /// Fraction of missing cells per channel.
    pub fn missing_fraction(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        (0..self.n_channels)
            .map(|ch| {
                let miss = (0..self.len()).filter(|&i| is_missing(self.value(i, ch))).count();
                miss as f64 / n
            })
            .collect()
    }
}

impl PartialEq for WellLog {
    fn eq(&self, other: &Self) -> bool {
        // Bitwise value comparison so NaN missing markers compare equal.
        self.well_id == other.well_id
            && self.formation == other.formation
            && self.n_channels == other.n_channels
            && self.class_label == other.class_label
            && self.layer_labels == other.layer_labels
            && bits_eq(&self.depths, &other.depths)
            && bits_eq(&self.values, &other.values)
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// An ordered collection of wells sharing one channel schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub channels: Vec<Channel>,
    pub wells: Vec<WellLog>,
}

impl Corpus {
    pub fn new(channels: Vec<Channel>, wells: Vec<WellLog>) -> Result<Corpus, CorpusError> {
        let mut names = std::collections::BTreeSet::new();
        for ch in &channels {
            if !names.insert(ch.name.clone()) {
                return Err(CorpusError::DuplicateChannel(ch.name.clone()));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for w in &wells {
            if w.n_channels != channels.len() {
                return Err(CorpusError::ChannelWidth {
                    well_id: w.well_id.clone(),
                    got: w.n_channels,
                    expected: channels.len(),
                });
            }
            if !ids.insert(w.well_id.clone()) {
                return Err(CorpusError::DuplicateWell(w.well_id.clone()));
            }
        }
        Ok(Corpus { channels, wells })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn well(&self, well_id: &str) -> Option<&WellLog> {
        self.wells.iter().find(|w| w.well_id == well_id)
    }

    /// Map from formation name to the ids of wells drilled through it.
    pub fn formation_index(&self) -> BTreeMap<String, Vec<String>> {
        let mut index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for w in &self.wells {
            index
                .entry(w.formation.clone())
                .or_default()
                .push(w.well_id.clone());
        }
        index
    }

    /// Missing fraction per channel over the whole corpus.
    pub fn missing_fraction(&self) -> Vec<f64> {
        let mut miss = vec![0usize; self.n_channels()];
        let mut total = 0usize;
        for w in &self.wells {
            total += w.len();
            for i in 0..w.len() {
                for (ch, m) in miss.iter_mut().enumerate() {
                    if is_missing(w.value(i, ch)) {
                        *m += 1;
                    }
                }
            }
        }
        miss.iter()
            .map(|&m| m as f64 / total.max(1) as f64)
            .collect()
    }

    /// Apply [`fill_missing`] to every well.
    pub fn fill_missing(&self) -> Result<Corpus, CorpusError> {
        let wells = self
            .wells
            .iter()
            .map(|w| fill_missing_names(w, &self.channels))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus {
            channels: self.channels.clone(),
            wells,
        })
    }
}

/// Forward-fill each gap with the previous reading; leading gaps take
/// the first future value. A channel with no readings at all is an
/// error naming the well and channel index.
pub fn fill_missing(well: &WellLog) -> Result<WellLog, CorpusError> {
    fill_missing_impl(well, |ch| format!("#{ch}"))
}

fn fill_missing_names(well: &WellLog, channels: &[Channel]) -> Result<WellLog, CorpusError> {
    fill_missing_impl(well, |ch| channels[ch].name.clone())
}

fn fill_missing_impl(
    well: &WellLog,
    channel_name: impl Fn(usize) -> String,
) -> Result<WellLog, CorpusError> {
    let n = well.len();
    let d = well.n_channels;
    let mut out = well.clone();
    for ch in 0..d {
        let first_present = (0..n).find(|&i| !is_missing(well.value(i, ch)));
        let Some(first) = first_present else {
            return Err(CorpusError::AllMissing {
                well_id: well.well_id.clone(),
                channel: channel_name(ch),
            });
        };
        let mut last = well.value(first, ch);
        // Backward fill the leading gap, then forward fill.
        for i in 0..n {
            let v = well.value(i, ch);
            if is_missing(v) {
                out.values[i * d + ch] = last;
            } else {
                last = v;
            }
        }
    }
    Ok(out)
}
