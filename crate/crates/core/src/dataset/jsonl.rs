//! JSONL training files, one `["<text>", {"entities": [[s, e, "LABEL"], ...]}]`
//! array per line.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::{AnnotatedExample, EntitySpan, Label};
use crate::{Error, Result};

#[derive(Deserialize)]
struct Annotations {
    entities: Vec<(usize, usize, Label)>,
}

/// Serializes one example with `", "` and `": "` separators.
pub fn format_jsonl_line(ex: &AnnotatedExample) -> String {
    let mut line = String::from("[");
    line.push_str(&serde_json::to_string(&ex.text).expect("string serialization"));
    line.push_str(", {\"entities\": [");
    for (i, s) in ex.spans.iter().enumerate() {
        if i > 0 {
            line.push_str(", ");
        }
        write!(line, "[{}, {}, \"{}\"]", s.start, s.end, s.label).unwrap();
    }
    line.push_str("]}]");
    line
}

pub fn parse_jsonl_line(line: &str) -> std::result::Result<AnnotatedExample, String> {
    let (text, ann): (String, Annotations) =
        serde_json::from_str(line).map_err(|e| e.to_string())?;
    let spans = ann
        .entities
        .into_iter()
        .map(|(s, e, l)| EntitySpan::new(s, e, l))
        .collect();
    let ex = AnnotatedExample::new(text, spans);
    ex.validate()?;
    Ok(ex)
}

pub fn write_jsonl(examples: &[AnnotatedExample], path: &Path) -> Result<()> {
    for (i, ex) in examples.iter().enumerate() {
        ex.validate()
            .map_err(|m| Error::InvalidInput(format!("example {i}: {m}")))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for ex in examples {
        w.write_all(format_jsonl_line(ex).as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<AnnotatedExample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex = parse_jsonl_line(&line).map_err(|message| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        })?;
        out.push(ex);
    }
    Ok(out)
}
