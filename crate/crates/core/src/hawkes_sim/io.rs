//! NDJSON event export: one header record, then one {"t","c"} line per event.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::thinning::{Event, EventStream};

#[derive(Debug, Error)]
pub enum EventIoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("missing header record")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub horizon: f64,
    pub dim: usize,
    pub seed: u64,
    pub events: usize,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: StreamHeader,
}

pub fn write_ndjson<W: Write>(mut w: W, es: &EventStream, params: serde_json::Value) -> Result<(), EventIoError> {
    let header = HeaderLine {
        header: StreamHeader {
            horizon: es.horizon,
            dim: es.dim,
            seed: es.seed,
            events: es.events.len(),
            params,
        },
    };
    serde_json::to_writer(&mut w, &header).map_err(|e| EventIoError::Parse { line: 1, source: e })?;
    writeln!(w)?;
    for e in &es.events {
        writeln!(w, "{{\"t\":{},\"c\":{}}}", fmt_f64(e.t), e.c)?;
    }
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip representation
    let s = format!("{x:?}");
    s
}

pub fn read_ndjson<R: BufRead>(r: R) -> Result<(EventStream, StreamHeader), EventIoError> {
    let mut lines = r.lines();
    let first = lines.next().ok_or(EventIoError::MissingHeader)??;
    let h: HeaderLine = serde_json::from_str(&first).map_err(|e| EventIoError::Parse { line: 1, source: e })?;
    let mut events = Vec::with_capacity(h.header.events);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: Event = serde_json::from_str(&line).map_err(|e| EventIoError::Parse {
            line: i + 2,
            source: e,
        })?;
        events.push(e);
    }
    Ok((
        EventStream {
            events,
            horizon: h.header.horizon,
            dim: h.header.dim,
            seed: h.header.seed,
            intensity_trace: None,
        },
        h.header,
    ))
}
