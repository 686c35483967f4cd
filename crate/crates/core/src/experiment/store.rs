//! JSON-lines result files and plain CSV tables.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance fields carried by every line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub config_hash: String,
    pub master_seed: u64,
    #[serde(flatten)]
    pub body: T,
}

/// Reads the complete lines of a result file written under `hash`.
///
/// A trailing line without its newline is the remains of an interrupted
/// write; it is cut from the file and ignored. A missing file reads as empty.
pub fn load_lines<T: DeserializeOwned>(path: &Path, hash: &str) -> Result<Vec<T>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if complete < text.len() {
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(complete as u64)?;
    }
    let mut out = Vec::new();
    for (no, raw) in text[..complete].lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line<T> = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line: no + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        if line.config_hash != hash {
            return Err(Error::InvalidParameter(format!(
                "{} holds results of config {}, current config is {hash}; use another output directory",
                path.display(),
                line.config_hash
            )));
        }
        out.push(line.body);
    }
    Ok(out)
}

pub fn to_line<T: Serialize>(hash: &str, master_seed: u64, body: &T) -> Result<String> {
    Ok(serde_json::to_string(&Line {
        config_hash: hash.to_string(),
        master_seed,
        body,
    })?)
}

/// Writes a whole file through a temporary sibling so readers never see a
/// half-written version.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Appends lines in task order no matter in which order they arrive.
pub struct OrderedAppender {
    state: Mutex<AppendState>,
}

struct AppendState {
    file: File,
    next: usize,
    pending: BTreeMap<usize, String>,
}

impl OrderedAppender {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(OrderedAppender {
            state: Mutex::new(AppendState {
                file,
                next: 0,
                pending: BTreeMap::new(),
            }),
        })
    }

    /// Queues the line of task `index`; writes every line that is now
    /// contiguous with what is already on disk. Returns the number written.
    pub fn push(&self, index: usize, line: String) -> Result<usize> {
        let mut st = self.state.lock().expect("appender lock");
        st.pending.insert(index, line);
        let mut written = 0;
        loop {
            let next = st.next;
            let Some(line) = st.pending.remove(&next) else {
                break;
            };
            let mut buf = line.into_bytes();
            buf.push(b'\n');
            st.file.write_all(&buf)?;
            st.next += 1;
            written += 1;
        }
        if written > 0 {
            st.file.flush()?;
        }
        Ok(written)
    }
}

/// A CSV table with string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Rows whose `key` column equals `value`.
    pub fn rows_where<'a>(&'a self, key: &str, value: &'a str) -> impl Iterator<Item = &'a Vec<String>> + 'a {
        let col = self.column(key);
        self.rows
            .iter()
            .filter(move |r| col.is_some_and(|c| r[c] == value))
    }

    /// Parsed numeric cell; `None` when empty or unparseable.
    pub fn number(&self, row: &[String], col: &str) -> Option<f64> {
        self.column(col).and_then(|c| row[c].parse().ok())
    }

    pub fn to_csv(&self, hash: &str, master_seed: u64) -> String {
        let mut out = format!("# config_hash={hash} master_seed={master_seed}\n");
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| quote(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Shortest round-trip form; `inf`, `-inf` and `nan` for the rest.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        k: usize,
        v: f64,
    }

    #[test]
    fn truncated_tail_is_dropped() {
        let dir = std::env::temp_dir().join(format!("qa2sat-store-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.jsonl");
        let a = to_line("h", 1, &Rec { k: 0, v: 0.5 }).unwrap();
        fs::write(&path, format!("{a}\n{{\"config_hash\":\"h\",\"mas")).unwrap();
        let got: Vec<Rec> = load_lines(&path, "h").unwrap();
        assert_eq!(got, vec![Rec { k: 0, v: 0.5 }]);
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{a}\n"));
        assert!(load_lines::<Rec>(&path, "other").is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn appender_restores_order() {
        let dir = std::env::temp_dir().join(format!("qa2sat-app-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("b.jsonl");
        let app = OrderedAppender::open(&path).unwrap();
        assert_eq!(app.push(2, "c".into()).unwrap(), 0);
        assert_eq!(app.push(1, "b".into()).unwrap(), 0);
        assert_eq!(app.push(0, "a".into()).unwrap(), 3);
        assert_eq!(fs::read_to_string(&path).unwrap(), "a\nb\nc\n");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_quotes_and_numbers() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec!["x,y".into(), num(f64::INFINITY)]);
        assert_eq!(t.to_csv("h", 3), "# config_hash=h master_seed=3\na,b\n\"x,y\",inf\n");
        assert_eq!(num(0.1), "0.1");
    }
}
