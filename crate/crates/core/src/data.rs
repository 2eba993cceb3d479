//! Embedding and meta-feature datasets: loading, validation, alignment,
//! numeric discretization, binarization and single-feature clustering.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder category for missing cells under [`MissingPolicy::Category`].
pub const MISSING_CATEGORY: &str = "∅";

/// `N x d` embedding matrix (row-major) with one identifier per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    name: String,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, name: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Self::from_flat(ids, rows.concat(), dim, name)
    }

    pub fn from_flat(
        ids: Vec<String>,
        data: Vec<f64>,
        dim: usize,
        name: impl Into<String>,
    ) -> Result<Self> {
        if ids.is_empty() || dim == 0 {
            return Err(Error::InvalidArgument(
                "an embedding set needs at least one entity and one dimension".into(),
            ));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value for entity `{}` in dimension {}",
                ids[pos / dim],
                pos % dim
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate id `{id}`")));
            }
        }
        Ok(Self {
            ids,
            data,
            dim,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Flat row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            data,
            dim: self.dim,
            name: self.name.clone(),
        }
    }

    /// Rows reordered to match `ids`; every id must be present.
    pub fn reindex(&self, ids: &[String]) -> Result<Self> {
        let pos: HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let rows = ids
            .iter()
            .map(|id| {
                pos.get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::IdMismatch(format!("entity `{id}` missing from `{}`", self.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_rows(&rows))
    }

    /// Replace the values while keeping ids and name, e.g. after adding noise.
    pub fn with_values(&self, data: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.ids.clone(), data, self.dim, self.name.clone())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend((0..self.dim).map(|j| format!("e{j}")));
        w.write_record(&header).map_err(csv_write_err)?;
        let mut record = Vec::with_capacity(self.dim + 1);
        for (id, row) in self.ids.iter().zip(self.rows()) {
            record.clear();
            record.push(id.clone());
            record.extend(row.iter().map(|v| format_f64(*v)));
            w.write_record(&record).map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::io("<embedding csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| csv_read_err(source, e))?,
            None => return Err(Error::EmptyFile(source.to_string())),
        };
        if header.len() < 2 || header.get(0).map(str::trim) != Some("id") {
            return Err(Error::Parse {
                path: source.to_string(),
                line: 1,
                message: "header must be `id,e0,e1,...`".into(),
            });
        }
        let dim = header.len() - 1;
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut seen = HashSet::new();
        for rec in records {
            let rec = rec.map_err(|e| csv_read_err(source, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != dim + 1 {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("expected {} columns, found {}", dim + 1, rec.len()),
                });
            }
            let id = rec[0].trim().to_string();
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId {
                    path: source.to_string(),
                    line,
                    id,
                });
            }
            for (j, cell) in rec.iter().skip(1).enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("non-numeric value `{cell}` in column e{j}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: source.to_string(),
                        line,
                        message: format!("non-finite value `{cell}` in column e{j}"),
                    });
                }
                data.push(v);
            }
            ids.push(id);
        }
        if ids.is_empty() {
            return Err(Error::EmptyFile(source.to_string()));
        }
        Ok(Self {
            ids,
            data,
            dim,
            name: String::new(),
        })
    }
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_read_err(source: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: source.to_string(),
        line,
        message: e.to_string(),
    }
}

fn csv_write_err(e: csv::Error) -> Error {
    Error::io("<csv>", std::io::Error::other(e.to_string()))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Load an embedding CSV (`id,e0,...,e{d-1}`). The set is named after the file stem.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let mut set = EmbeddingSet::from_reader(open(path)?, &path.display().to_string())?;
    set.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(set)
}

/// How empty feature cells are treated at load time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    #[default]
    Error,
    /// Map missing cells to the [`MISSING_CATEGORY`] category.
    Category,
}

/// One categorical column; `codes[i]` indexes into the sorted `categories`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    name: String,
    categories: Vec<String>,
    codes: Vec<u32>,
}

impl FeatureColumn {
    pub fn from_values(name: impl Into<String>, values: &[String]) -> Self {
        let categories: Vec<String> = values
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, u32> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let codes = values.iter().map(|v| index[v.as_str()]).collect();
        Self {
            name: name.into(),
            categories,
            codes,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Distinct categories in lexicographic order.
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// `k_j`, the number of distinct categories.
    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn value(&self, entity: usize) -> &str {
        &self.categories[self.codes[entity] as usize]
    }

    fn select_rows(&self, indices: &[usize]) -> Self {
        let values: Vec<String> = indices.iter().map(|&i| self.value(i).to_string()).collect();
        Self::from_values(self.name.clone(), &values)
    }
}

/// Per-entity categorical meta-features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    columns: Vec<FeatureColumn>,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, columns: Vec<FeatureColumn>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidArgument("feature table has no rows".into()));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate id `{id}`")));
            }
        }
        let mut names = HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::InvalidArgument("empty column name".into()));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
            if c.codes.len() != ids.len() {
                return Err(Error::DimensionMismatch {
                    expected: ids.len(),
                    actual: c.codes.len(),
                });
            }
        }
        Ok(Self { ids, columns })
    }

    /// Build from string columns `(name, values)`.
    pub fn from_columns(ids: Vec<String>, columns: Vec<(String, Vec<String>)>) -> Result<Self> {
        let cols = columns
            .into_iter()
            .map(|(name, values)| FeatureColumn::from_values(name, &values))
            .collect();
        Self::new(ids, cols)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&FeatureColumn> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            columns: self.columns.iter().map(|c| c.select_rows(indices)).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id"];
        header.extend(self.columns.iter().map(|c| c.name.as_str()));
        w.write_record(&header).map_err(csv_write_err)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut record = vec![id.as_str()];
            record.extend(self.columns.iter().map(|c| c.value(i)));
            w.write_record(&record).map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::io("<feature csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_reader<R: Read>(reader: R, source: &str, missing: MissingPolicy) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| csv_read_err(source, e))?,
            None => return Err(Error::EmptyFile(source.to_string())),
        };
        if header.get(0).map(str::trim) != Some("id") {
            return Err(Error::Parse {
                path: source.to_string(),
                line: 1,
                message: "header must start with `id`".into(),
            });
        }
        let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        if let Some(pos) = names.iter().position(String::is_empty) {
            return Err(Error::Parse {
                path: source.to_string(),
                line: 1,
                message: format!("empty column name at position {}", pos + 1),
            });
        }
        let mut ids = Vec::new();
        let mut values: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        let mut seen = HashSet::new();
        for rec in records {
            let rec = rec.map_err(|e| csv_read_err(source, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != names.len() + 1 {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("expected {} columns, found {}", names.len() + 1, rec.len()),
                });
            }
            let id = rec[0].trim().to_string();
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId {
                    path: source.to_string(),
                    line,
                    id,
                });
            }
            for (j, cell) in rec.iter().skip(1).enumerate() {
                let cell = cell.trim();
                let v = if cell.is_empty() {
                    match missing {
                        MissingPolicy::Error => {
                            return Err(Error::MissingValue {
                                path: source.to_string(),
                                line,
                                column: names[j].clone(),
                            })
                        }
                        MissingPolicy::Category => MISSING_CATEGORY.to_string(),
                    }
                } else {
                    cell.to_string()
                };
                values[j].push(v);
            }
            ids.push(id);
        }
        if ids.is_empty() {
            return Err(Error::EmptyFile(source.to_string()));
        }
        Self::from_columns(ids, names.into_iter().zip(values).collect())
    }
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureTable> {
    load_features_with(path, MissingPolicy::Error)
}

pub fn load_features_with(path: impl AsRef<Path>, missing: MissingPolicy) -> Result<FeatureTable> {
    let path = path.as_ref();
    FeatureTable::from_reader(open(path)?, &path.display().to_string(), missing)
}

/// Replace a numeric column with equal-frequency bins labelled `col∈[lo,hi)`
/// (the last bin is closed). Coinciding quantile boundaries collapse, so a
/// constant column ends up with a single category.
pub fn discretize_numeric(table: &FeatureTable, column: &str, nbins: usize) -> Result<FeatureTable> {
    if nbins < 1 {
        return Err(Error::InvalidArgument("nbins must be ≥ 1".into()));
    }
    let col = table.column(column)?;
    let values = (0..table.len())
        .map(|i| {
            let raw = col.value(i);
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    column: column.to_string(),
                    id: table.ids[i].clone(),
                    value: raw.to_string(),
                })
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let mut cuts: Vec<f64> = (1..nbins)
        .map(|j| sorted[j * n / nbins])
        .filter(|&b| b > lo)
        .collect();
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend_from_slice(&cuts);
    edges.push(hi);
    let nb = edges.len() - 1;
    let labels: Vec<String> = (0..nb)
        .map(|b| {
            let close = if b + 1 == nb { ']' } else { ')' };
            format!("{column}∈[{},{}{close}", edges[b], edges[b + 1])
        })
        .collect();
    let binned: Vec<String> = values
        .iter()
        .map(|v| labels[cuts.partition_point(|c| c <= v)].clone())
        .collect();

    let columns = table
        .columns
        .iter()
        .map(|c| {
            if c.name == column {
                FeatureColumn::from_values(column, &binned)
            } else {
                c.clone()
            }
        })
        .collect();
    FeatureTable::new(table.ids.clone(), columns)
}

/// A yes/no question `source == category` over every entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryColumn {
    pub source: String,
    pub category: String,
    /// True when the source column was already `{0,1}` and passed through.
    pub passthrough: bool,
    pub values: Vec<u8>,
}

impl BinaryColumn {
    pub fn name(&self) -> String {
        format!("{}=={}", self.source, self.category)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryFeatureTable {
    ids: Vec<String>,
    columns: Vec<BinaryColumn>,
}

impl BinaryFeatureTable {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[BinaryColumn] {
        &self.columns
    }

    /// Number of binary features, `q`.
    pub fn q(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Recover the original categorical value of `entity` in `source`.
    pub fn decode(&self, entity: usize, source: &str) -> Option<String> {
        let mut cols = self.columns.iter().filter(|c| c.source == source).peekable();
        let first = cols.peek()?;
        if first.passthrough {
            return Some(if first.values[entity] == 1 { "1" } else { "0" }.to_string());
        }
        cols.find(|c| c.values[entity] == 1).map(|c| c.category.clone())
    }
}

/// One binary column per (column, category) pair, categories in lexicographic
/// order. Columns whose categories are exactly `{0, 1}` pass through unchanged.
pub fn binarize(table: &FeatureTable) -> BinaryFeatureTable {
    let mut columns = Vec::new();
    for col in &table.columns {
        if col.categories == ["0", "1"] {
            columns.push(BinaryColumn {
                source: col.name.clone(),
                category: "1".into(),
                passthrough: true,
                values: col.codes.iter().map(|&c| c as u8).collect(),
            });
            continue;
        }
        for (k, cat) in col.categories.iter().enumerate() {
            columns.push(BinaryColumn {
                source: col.name.clone(),
                category: cat.clone(),
                passthrough: false,
                values: col.codes.iter().map(|&c| u8::from(c as usize == k)).collect(),
            });
        }
    }
    BinaryFeatureTable {
        ids: table.ids.clone(),
        columns,
    }
}

/// A partition of entities into `m` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    assignment: Vec<usize>,
    labels: Vec<String>,
    criterion: String,
}

impl Clustering {
    pub fn new(
        assignment: Vec<usize>,
        labels: Vec<String>,
        criterion: impl Into<String>,
    ) -> Result<Self> {
        let m = labels.len();
        if assignment.is_empty() || m == 0 {
            return Err(Error::InvalidArgument("clustering is empty".into()));
        }
        let mut sizes = vec![0usize; m];
        for &a in &assignment {
            if a >= m {
                return Err(Error::InvalidArgument(format!(
                    "cluster index {a} out of range 0..{m}"
                )));
            }
            sizes[a] += 1;
        }
        if let Some(k) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!("cluster {k} is empty")));
        }
        Ok(Self {
            assignment,
            labels,
            criterion: criterion.into(),
        })
    }

    /// Compact arbitrary integer labels into `0..m` by ascending label value.
    pub fn from_raw_labels(raw: &[i64], criterion: impl Into<String>) -> Result<Self> {
        let distinct: Vec<i64> = raw.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let index: HashMap<i64, usize> = distinct.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Self::new(
            raw.iter().map(|v| index[v]).collect(),
            distinct.iter().map(i64::to_string).collect(),
            criterion,
        )
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn criterion(&self) -> &str {
        &self.criterion
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// Row indices of each cluster, in entity order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.m()];
        for (i, &a) in self.assignment.iter().enumerate() {
            members[a].push(i);
        }
        members
    }

    /// Restrict to a subset of entities, dropping clusters that become empty.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let picked: Vec<usize> = indices.iter().map(|&i| self.assignment[i]).collect();
        let used: BTreeSet<usize> = picked.iter().copied().collect();
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        Self::new(
            picked.iter().map(|a| remap[a]).collect(),
            used.iter().map(|&o| self.labels[o].clone()).collect(),
            self.criterion.clone(),
        )
    }

    /// Emit `id,cluster` rows.
    pub fn write_csv<W: Write>(&self, ids: &[String], writer: W) -> Result<()> {
        if ids.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: ids.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "cluster"]).map_err(csv_write_err)?;
        for (id, a) in ids.iter().zip(&self.assignment) {
            w.write_record([id.as_str(), &a.to_string()])
                .map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::io("<clustering csv>", e))?;
        Ok(())
    }

    pub fn save(&self, ids: &[String], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(ids, std::io::BufWriter::new(file))
    }
}

/// Read an `id,cluster` CSV and order it by `ids`. Every id must be present.
pub fn load_clusters(path: impl AsRef<Path>, ids: &[String]) -> Result<Clustering> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(open(path)?);
    let mut by_id = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_read_err(&source, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Parse {
                path: source.clone(),
                line,
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let label: i64 = rec[1].trim().parse().map_err(|_| Error::Parse {
            path: source.clone(),
            line,
            message: format!("cluster `{}` is not an integer", &rec[1]),
        })?;
        let id = rec[0].trim().to_string();
        if by_id.insert(id.clone(), label).is_some() {
            return Err(Error::DuplicateId {
                path: source.clone(),
                line,
                id,
            });
        }
    }
    if by_id.is_empty() {
        return Err(Error::EmptyFile(source));
    }
    let raw = ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| Error::IdMismatch(format!("entity `{id}` missing from {source}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Clustering::from_raw_labels(&raw, format!("clusters file {source}"))
}

/// One cluster per distinct category of `column`; labels are the category names.
pub fn cluster_by_feature(table: &FeatureTable, column: &str) -> Result<Clustering> {
    let col = table.column(column)?;
    Clustering::new(
        col.codes.iter().map(|&c| c as usize).collect(),
        col.categories.clone(),
        format!("feature `{column}`"),
    )
}

/// Restrict both inputs to their common ids, in the embedding file's order.
pub fn align(emb: &EmbeddingSet, feats: &FeatureTable) -> Result<(EmbeddingSet, FeatureTable)> {
    let pos: HashMap<&str, usize> = feats
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut emb_rows = Vec::new();
    let mut feat_rows = Vec::new();
    for (i, id) in emb.ids.iter().enumerate() {
        if let Some(&j) = pos.get(id.as_str()) {
            emb_rows.push(i);
            feat_rows.push(j);
        }
    }
    if emb_rows.is_empty() {
        return Err(Error::IdMismatch(
            "embeddings and features share no ids".into(),
        ));
    }
    Ok((emb.select_rows(&emb_rows), feats.select_rows(&feat_rows)))
}
