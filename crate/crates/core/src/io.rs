//! File formats: edge lists, attribute tables and model-spec files.
//!
//! Edge list: UTF-8, one edge per line as two whitespace-separated node ids.
//! A line with a single id declares a (possibly isolated) node. Blank lines
//! and anything after `#` are ignored. Node ids may be arbitrary strings and
//! are mapped to dense indices in order of first appearance, unless an
//! attribute file fixes the node order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributeTable, Column, ColumnValues, Network};
use crate::statistics::{ModelSpec, Term, TermKind, DEFAULT_ALPHA};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads an edge list. With `nodes`, ids must belong to that ordered set.
pub fn read_edge_list(path: &Path, nodes: Option<&[String]>) -> Result<Network> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path, nodes)
}

pub(crate) fn parse_edge_list(text: &str, path: &Path, nodes: Option<&[String]>) -> Result<Network> {
    let mut labels: Vec<String> = nodes.map(|n| n.to_vec()).unwrap_or_default();
    let mut index: HashMap<String, usize> =
        labels.iter().enumerate().map(|(k, l)| (l.clone(), k)).collect();
    if index.len() != labels.len() {
        return Err(Error::Spec("duplicate node ids in the attribute file".into()));
    }
    let fixed = nodes.is_some();
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() > 2 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected two node ids, found {} fields", tokens.len()),
            ));
        }
        let mut ids = Vec::with_capacity(2);
        for tok in &tokens {
            let k = match index.get(*tok) {
                Some(&k) => k,
                None if fixed => {
                    return Err(parse_err(path, lineno, format!("unknown node id '{tok}'")))
                }
                None => {
                    labels.push(tok.to_string());
                    index.insert(tok.to_string(), labels.len() - 1);
                    labels.len() - 1
                }
            };
            ids.push(k);
        }
        if let [a, b] = ids[..] {
            if a == b {
                return Err(parse_err(path, lineno, format!("self-loop on '{}'", tokens[0])));
            }
            pairs.push((a, b));
        }
    }
    let mut net = Network::with_labels(labels);
    for (a, b) in pairs {
        net.add_edge(a, b)?;
    }
    Ok(net)
}

/// Writes every node id on its own line (fixing order and isolated nodes),
/// then one line per edge.
pub fn write_edge_list(path: &Path, net: &Network) -> Result<()> {
    fs::write(path, format_edge_list(net)).map_err(|e| Error::io(path, e))
}

pub fn format_edge_list(net: &Network) -> String {
    let mut out = format!("# nodes {} edges {}\n", net.n_nodes(), net.edge_count());
    for l in net.labels() {
        out.push_str(l);
        out.push('\n');
    }
    for (i, j) in net.edges() {
        out.push_str(net.label(i));
        out.push(' ');
        out.push_str(net.label(j));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeType {
    Numeric,
    Categorical,
}

/// Declared type of one attribute column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSchema {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: AttributeType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

/// Reads a comma-separated attribute table. Returns node ids (first column,
/// in file order) and the typed columns. Columns missing from `schema` are
/// numeric when every value parses as a number, categorical otherwise.
pub fn read_attributes(path: &Path, schema: &[AttributeSchema]) -> Result<(Vec<String>, AttributeTable)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_attributes(&text, path, schema)
}

pub(crate) fn parse_attributes(
    text: &str,
    path: &Path,
    schema: &[AttributeSchema],
) -> Result<(Vec<String>, AttributeTable)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(parse_err(path, 1, "attribute file needs an id column and at least one attribute"));
    }
    let mut ids = Vec::new();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len() - 1];
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        for (c, v) in rec.iter().enumerate().skip(1) {
            if v.is_empty() || v == "NA" {
                return Err(parse_err(
                    path,
                    line,
                    format!("missing value in column '{}'", header[c]),
                ));
            }
            raw[c - 1].push(v.to_string());
        }
        ids.push(rec[0].to_string());
    }
    for s in schema {
        if !header[1..].contains(&s.name) {
            return Err(Error::Spec(format!("attribute column '{}' not in {}", s.name, path.display())));
        }
    }
    let mut table = AttributeTable::new(ids.len());
    for (name, values) in header[1..].iter().zip(raw) {
        let decl = schema.iter().find(|s| &s.name == name);
        let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
        let column = match (decl.map(|d| d.kind), numeric) {
            (Some(AttributeType::Numeric), Some(x)) | (None, Some(x)) => Column::numeric(name.clone(), x),
            (Some(AttributeType::Numeric), None) => {
                return Err(Error::Spec(format!("column '{name}' is declared numeric but has non-numeric values")))
            }
            (Some(AttributeType::Categorical), _) | (None, None) => Column::categorical(
                name.clone(),
                &values,
                decl.and_then(|d| d.levels.clone()),
                decl.and_then(|d| d.reference.as_deref()),
            )?,
        };
        table.push(column)?;
    }
    Ok((ids, table))
}

/// Writes an attribute table with node ids from `labels` in the first column.
pub fn write_attributes(path: &Path, labels: &[String], table: &AttributeTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(table.columns().iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        for c in table.columns() {
            rec.push(match &c.values {
                ColumnValues::Numeric(x) => format!("{}", x[i]),
                ColumnValues::Categorical { levels, codes, .. } => levels[codes[i]].clone(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Schema entries describing `table` exactly (levels and reference included).
pub fn schema_of(table: &AttributeTable) -> Vec<AttributeSchema> {
    table
        .columns()
        .iter()
        .map(|c| match &c.values {
            ColumnValues::Numeric(_) => AttributeSchema {
                name: c.name.clone(),
                kind: AttributeType::Numeric,
                reference: None,
                levels: None,
            },
            ColumnValues::Categorical {
                levels, reference, ..
            } => AttributeSchema {
                name: c.name.clone(),
                kind: AttributeType::Categorical,
                reference: Some(levels[*reference].clone()),
                levels: Some(levels.clone()),
            },
        })
        .collect()
}

/// One entry of the `terms` list in a model-spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    /// One of `edges`, `gwesp`, `gwnsp`, `gwdegree`, `nodecov`, `nodefactor`, `nodematch`.
    pub term: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// For `nodefactor`; omitted means one term per non-reference level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    /// Fixed scale; standardization leaves it untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalized: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TermEntry {
    pub fn new(term: &str) -> Self {
        TermEntry {
            term: term.to_string(),
            alpha: None,
            column: None,
            level: None,
            scale: None,
            penalized: None,
            label: None,
        }
    }
}

/// JSON model-spec file: attribute schema plus ordered term list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default)]
    pub attributes: Vec<AttributeSchema>,
    pub terms: Vec<TermEntry>,
}

impl SpecFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            parse_err(path, e.line(), format!("invalid model spec: {e}"))
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Resolves entries into a [`ModelSpec`], expanding level-less
    /// `nodefactor` entries against `attrs`.
    pub fn to_model_spec(&self, attrs: &AttributeTable) -> Result<ModelSpec> {
        let mut terms = Vec::new();
        for e in &self.terms {
            let column = || {
                e.column
                    .clone()
                    .ok_or_else(|| Error::Spec(format!("term '{}' needs a column", e.term)))
            };
            let alpha = e.alpha.unwrap_or(DEFAULT_ALPHA);
            let kinds = match e.term.as_str() {
                "edges" => vec![TermKind::Edges],
                "gwesp" => vec![TermKind::Gwesp { alpha }],
                "gwnsp" => vec![TermKind::Gwnsp { alpha }],
                "gwdegree" => vec![TermKind::Gwdegree { alpha }],
                "nodecov" => vec![TermKind::NodeCov { column: column()? }],
                "nodematch" => vec![TermKind::NodeMatch { column: column()? }],
                "nodefactor" => {
                    let name = column()?;
                    match &e.level {
                        Some(level) => vec![TermKind::NodeFactor {
                            column: name,
                            level: level.clone(),
                        }],
                        None => {
                            let col = attrs.get(&name).ok_or_else(|| {
                                Error::Spec(format!("attribute column '{name}' not found"))
                            })?;
                            match &col.values {
                                ColumnValues::Categorical {
                                    levels, reference, ..
                                } => levels
                                    .iter()
                                    .enumerate()
                                    .filter(|(k, _)| k != reference)
                                    .map(|(_, l)| TermKind::NodeFactor {
                                        column: name.clone(),
                                        level: l.clone(),
                                    })
                                    .collect(),
                                _ => {
                                    return Err(Error::Spec(format!(
                                        "nodefactor needs a categorical column, '{name}' is numeric"
                                    )))
                                }
                            }
                        }
                    }
                }
                other => return Err(Error::Spec(format!("unknown term '{other}'"))),
            };
            if e.label.is_some() && kinds.len() > 1 {
                return Err(Error::Spec(format!(
                    "a label cannot be given to the expanded nodefactor on '{}'",
                    e.column.as_deref().unwrap_or("")
                )));
            }
            for kind in kinds {
                let mut t = Term::new(kind);
                if let Some(l) = &e.label {
                    t.label = l.clone();
                }
                if let Some(s) = e.scale {
                    t = t.with_scale(s);
                }
                if let Some(p) = e.penalized {
                    t.penalized = p;
                }
                terms.push(t);
            }
        }
        ModelSpec::new(terms)
    }

    /// File form of `spec`, with every scale written out as a fixed scale.
    pub fn from_model_spec(spec: &ModelSpec, attributes: Vec<AttributeSchema>) -> Self {
        let terms = spec
            .terms()
            .iter()
            .map(|t| {
                let mut e = match &t.kind {
                    TermKind::Edges => TermEntry::new("edges"),
                    TermKind::Gwesp { alpha } => TermEntry {
                        alpha: Some(*alpha),
                        ..TermEntry::new("gwesp")
                    },
                    TermKind::Gwnsp { alpha } => TermEntry {
                        alpha: Some(*alpha),
                        ..TermEntry::new("gwnsp")
                    },
                    TermKind::Gwdegree { alpha } => TermEntry {
                        alpha: Some(*alpha),
                        ..TermEntry::new("gwdegree")
                    },
                    TermKind::NodeCov { column } => TermEntry {
                        column: Some(column.clone()),
                        ..TermEntry::new("nodecov")
                    },
                    TermKind::NodeFactor { column, level } => TermEntry {
                        column: Some(column.clone()),
                        level: Some(level.clone()),
                        ..TermEntry::new("nodefactor")
                    },
                    TermKind::NodeMatch { column } => TermEntry {
                        column: Some(column.clone()),
                        ..TermEntry::new("nodematch")
                    },
                };
                if t.kind != TermKind::Edges {
                    e.scale = Some(t.scale);
                    e.penalized = Some(t.penalized);
                }
                if t.label != t.kind.default_label() {
                    e.label = Some(t.label.clone());
                }
                e
            })
            .collect();
        SpecFile { attributes, terms }
    }
}

/// Network, attributes and model spec loaded together.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub network: Network,
    pub attributes: AttributeTable,
    pub spec: ModelSpec,
    pub spec_file: SpecFile,
}

/// Loads the observed network, its optional attribute table and the model spec.
///
/// With an attribute file, its id column fixes the node order and every edge
/// list id must appear in it.
pub fn load_dataset(edges: &Path, attrs: Option<&Path>, spec: &Path) -> Result<Dataset> {
    let spec_file = SpecFile::read(spec)?;
    let (network, attributes) = match attrs {
        Some(a) => {
            let (ids, table) = read_attributes(a, &spec_file.attributes)?;
            (read_edge_list(edges, Some(&ids))?, table)
        }
        None => {
            if let Some(s) = spec_file.attributes.first() {
                return Err(Error::Spec(format!(
                    "attribute column '{}' declared but no attribute file given",
                    s.name
                )));
            }
            let net = read_edge_list(edges, None)?;
            let n = net.n_nodes();
            (net, AttributeTable::new(n))
        }
    };
    let spec = spec_file.to_model_spec(&attributes)?;
    Ok(Dataset {
        network,
        attributes,
        spec,
        spec_file,
    })
}

/// Shortest decimal string that parses back to the same `f64`.
///
/// Very small or large magnitudes use exponent notation.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes a CSV table.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
