use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use flate2::read::GzDecoder;

use super::{InteractionSet, Reindex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    Tab,
    Comma,
    /// Any run of spaces or tabs.
    #[default]
    Whitespace,
}

impl Delimiter {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

impl std::str::FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tab" | "\\t" | "\t" => Ok(Delimiter::Tab),
            "comma" | "," => Ok(Delimiter::Comma),
            "whitespace" | "space" | " " => Ok(Delimiter::Whitespace),
            other => Err(Error::config(format!("unknown delimiter '{other}'"))),
        }
    }
}

/// Column roles of a delimited interaction file (0-based column indices).
#[derive(Debug, Clone, PartialEq)]
pub struct DelimitedFormat {
    pub delimiter: Delimiter,
    pub context_col: usize,
    pub object_col: usize,
    pub rating_col: Option<usize>,
    pub timestamp_col: Option<usize>,
    pub has_header: bool,
}

impl Default for DelimitedFormat {
    fn default() -> Self {
        DelimitedFormat {
            delimiter: Delimiter::Whitespace,
            context_col: 0,
            object_col: 1,
            rating_col: None,
            timestamp_col: None,
            has_header: false,
        }
    }
}

impl DelimitedFormat {
    fn required_columns(&self) -> usize {
        [Some(self.context_col), Some(self.object_col), self.rating_col, self.timestamp_col]
            .into_iter()
            .flatten()
            .max()
            .unwrap_or(0)
            + 1
    }
}

/// Raw-label lookup for dense ids; the line index is the dense id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    pub contexts: Vec<String>,
    pub objects: Vec<String>,
}

impl IdMap {
    /// Projects the map through a reindexing produced by filtering.
    pub fn project(&self, reindex: &Reindex) -> IdMap {
        IdMap {
            contexts: reindex.contexts.iter().map(|&i| self.contexts[i as usize].clone()).collect(),
            objects: reindex.objects.iter().map(|&i| self.objects[i as usize].clone()).collect(),
        }
    }

    /// One line per id: `context|object <TAB> dense-id <TAB> raw-label`.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, label) in self.contexts.iter().enumerate() {
            writeln!(w, "context\t{i}\t{label}")?;
        }
        for (i, label) in self.objects.iter().enumerate() {
            writeln!(w, "object\t{i}\t{label}")?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<IdMap> {
        let mut map = IdMap::default();
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (kind, id, label) = match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(i), Some(l)) => (k, i, l),
                _ => return Err(parse_err(n + 1, "expected three tab-separated fields")),
            };
            let id: usize = id.parse().map_err(|_| parse_err(n + 1, "bad id"))?;
            let target = match kind {
                "context" => &mut map.contexts,
                "object" => &mut map.objects,
                _ => return Err(parse_err(n + 1, "kind must be 'context' or 'object'")),
            };
            if id != target.len() {
                return Err(parse_err(n + 1, "ids must be listed densely in order"));
            }
            target.push(label.to_string());
        }
        Ok(map)
    }
}

/// Result of ingesting a raw interaction file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub set: InteractionSet,
    pub ids: IdMap,
    pub below_threshold: usize,
    pub duplicates: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Wraps the stream in a gzip decoder when it starts with the gzip magic bytes.
fn maybe_gunzip<'a, R: Read + 'a>(source: R) -> Result<Box<dyn BufRead + 'a>> {
    let mut buffered = BufReader::new(source);
    let head = buffered.fill_buf()?;
    if head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b {
        Ok(Box::new(BufReader::new(GzDecoder::new(buffered))))
    } else {
        Ok(Box::new(buffered))
    }
}

/// Reads delimited interactions, drops rows rated below `rating_threshold`,
/// collapses duplicates and assigns dense ids in order of first appearance.
pub fn load_interactions<R: Read>(
    source: R,
    format: &DelimitedFormat,
    rating_threshold: Option<f64>,
) -> Result<Loaded> {
    let reader = maybe_gunzip(source)?;
    let needed = format.required_columns();
    let mut ctx_ids: HashMap<String, u32> = HashMap::new();
    let mut obj_ids: HashMap<String, u32> = HashMap::new();
    let mut ids = IdMap::default();
    let mut pairs = Vec::new();
    let mut below_threshold = 0;

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        if n == 0 && format.has_header {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = format.delimiter.split(trimmed);
        if fields.len() < needed {
            return Err(parse_err(
                line_no,
                format!("expected at least {needed} columns, found {}", fields.len()),
            ));
        }
        if let Some(rc) = format.rating_col {
            let rating: f64 = fields[rc]
                .parse()
                .map_err(|_| parse_err(line_no, format!("rating '{}' is not a number", fields[rc])))?;
            if let Some(t) = rating_threshold {
                if rating < t {
                    below_threshold += 1;
                    continue;
                }
            }
        }
        let (c, o) = (fields[format.context_col], fields[format.object_col]);
        if c.is_empty() || o.is_empty() {
            return Err(parse_err(line_no, "empty id field"));
        }
        let x = *ctx_ids.entry(c.to_string()).or_insert_with(|| {
            ids.contexts.push(c.to_string());
            (ids.contexts.len() - 1) as u32
        });
        let y = *obj_ids.entry(o.to_string()).or_insert_with(|| {
            ids.objects.push(o.to_string());
            (ids.objects.len() - 1) as u32
        });
        pairs.push((x, y));
    }

    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let raw = pairs.len();
    let set = InteractionSet::new(ids.contexts.len(), ids.objects.len(), pairs)?;
    let duplicates = raw - set.len();
    Ok(Loaded { set, ids, below_threshold, duplicates })
}

/// Native set format: header `M N |D|`, then one `context object` pair per line.
pub fn write_set<W: Write>(set: &InteractionSet, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", set.n_contexts(), set.n_objects(), set.len())?;
    for &(x, y) in set.entries() {
        writeln!(w, "{x} {y}")?;
    }
    Ok(())
}

pub fn read_set<R: Read>(source: R) -> Result<InteractionSet> {
    let mut lines = maybe_gunzip(source)?.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(1, "header must be 'M N |D|'")))
        .collect::<Result<_>>()?;
    let [m, n, count] = dims[..] else {
        return Err(parse_err(1, "header must be 'M N |D|'"));
    };
    let mut entries = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(i + 2, "expected 'context object'"));
        };
        let x = a.parse().map_err(|_| parse_err(i + 2, "bad context id"))?;
        let y = b.parse().map_err(|_| parse_err(i + 2, "bad object id"))?;
        entries.push((x, y));
    }
    if entries.len() != count {
        return Err(parse_err(1, format!("header promises {count} pairs, found {}", entries.len())));
    }
    InteractionSet::new(m, n, entries)
}
