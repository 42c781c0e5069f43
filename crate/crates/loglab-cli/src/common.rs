//! Shared helpers: schema inference, corpus loading, run-config files.

use anyhow::{Context, Result};
use std::path::Path;

use loglab::corpus::{ingest_csv, ingest_csv_preprocessed, Corpus};

const RESERVED_COLUMNS: [&str; 5] = ["well_id", "formation", "depth", "class", "layer"];

/// Channel columns are whatever the header carries beyond the reserved
/// names, in header order.
pub fn infer_schema(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open corpus '{}'", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("cannot read header of '{}'", path.display()))?;
    let schema: Vec<String> = headers
        .iter()
        .filter(|h| !RESERVED_COLUMNS.contains(h))
        .map(str::to_string)
        .collect();
    if schema.is_empty() {
        anyhow::bail!(
            "corpus '{}' has no channel columns beyond {:?}",
            path.display(),
            RESERVED_COLUMNS
        );
    }
    Ok(schema)
}

/// Raw corpus: strict depth-grid validation.
pub fn load_raw_corpus(path: &Path) -> Result<Corpus> {
    let schema = infer_schema(path)?;
    Ok(ingest_csv(path, &schema)?)
}

/// Preprocessed corpus: cleaned rows may have left depth gaps.
pub fn load_preprocessed_corpus(path: &Path) -> Result<Corpus> {
    let schema = infer_schema(path)?;
    Ok(ingest_csv_preprocessed(path, &schema)?)
}

/// Write the run configuration next to the outputs so every run
/// directory is self-describing and re-runnable.
pub fn write_config(out: &Path, command: &str, entries: &[(&str, String)]) -> Result<()> {
    let mut text = format!(
        "command={command}\nversion={}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in entries {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    std::fs::write(out.join("config.txt"), text)
        .with_context(|| format!("cannot write config into '{}'", out.display()))?;
    Ok(())
}

pub fn read_config(dir: &Path) -> Result<std::collections::BTreeMap<String, String>> {
    let path = dir.join("config.txt");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read '{}'", path.display()))?;
    let mut map = std::collections::BTreeMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            map.insert(k.to_string(), v.to_string());
        }
    }
    Ok(map)
}

pub fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("cannot create output directory '{}'", path.display()))?;
    Ok(())
}

/// Worker-thread cap from LOGLAB_THREADS (default 1).
pub fn thread_cap() -> usize {
    std::env::var("LOGLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Run one closure per item with at most `thread_cap` threads, results
/// returned in item order.
pub fn run_parallel<T, F>(items: Vec<T>, f: F) -> Vec<Result<()>>
where
    T: Send,
    F: Fn(usize, &T) -> Result<()> + Sync,
{
    let cap = thread_cap();
    if cap <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let mut results: Vec<Result<()>> = Vec::with_capacity(items.len());
    for chunk_start in (0..items.len()).step_by(cap) {
        let chunk_end = (chunk_start + cap).min(items.len());
        let mut chunk_results: Vec<(usize, Result<()>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (chunk_start..chunk_end)
                .map(|i| {
                    let item = &items[i];
                    let f = &f;
                    scope.spawn(move || (i, f(i, item)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        chunk_results.sort_by_key(|(i, _)| *i);
        results.extend(chunk_results.into_iter().map(|(_, r)| r));
    }
    results
}
