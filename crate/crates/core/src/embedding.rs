//! Document metadata, embedding files, and sentence pooling.
//!
//! Two on-disk formats are supported:
//!
//! * **jsonl**: one JSON object per line with `id`, `title`, optional
//!   `domain`/`url`/`raw_text`, and either a pooled `embedding` (array of
//!   numbers) or a `sentences` matrix (array of arrays) that is mean-pooled
//!   on load.
//! * **binary**: magic `FTME`, `u32` version (1), `u64` n, `u64` d, then
//!   n·d little-endian `f32`. Document metadata lives in a sibling jsonl
//!   file named `<path>.meta.jsonl` with the embedding fields omitted.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

pub const BINARY_MAGIC: &[u8; 4] = b"FTME";
pub const BINARY_VERSION: u32 = 1;
const BINARY_HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("record {record}: embedding has {found} entries, expected {expected}")]
    DimensionMismatch {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}: non-finite embedding value")]
    NonFinite { record: usize },
    #[error("duplicate document id {0}")]
    DuplicateId(DocId),
    #[error("record {record}: empty title")]
    EmptyTitle { record: usize },
    #[error("record {record}: zero-length embedding")]
    ZeroDimension { record: usize },
    #[error("empty sentence matrix")]
    EmptySentenceMatrix,
    #[error("dataset has {0} document(s); at least 2 are required")]
    TooFewDocuments(usize),
    #[error("not an embedding file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported binary format version {0}")]
    UnsupportedVersion(u32),
    #[error("binary payload is {found} bytes, expected {expected}")]
    PayloadSize { expected: u64, found: u64 },
    #[error("metadata lists {found} documents but the payload holds {expected}")]
    MetadataCount { expected: usize, found: usize },
}

type Result<T> = std::result::Result<T, EmbeddingError>;

/// Article identifier: an integer or an opaque string.
///
/// Integers order before strings; within a kind the natural order applies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocId {
    Int(i64),
    Str(String),
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocId::Int(v) => write!(f, "{v}"),
            DocId::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for DocId {
    fn from(v: i64) -> Self {
        DocId::Int(v)
    }
}

impl From<&str> for DocId {
    fn from(v: &str) -> Self {
        DocId::Str(v.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<DocId>, title: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            title: title.into(),
            raw_text: None,
            domain: None,
            url: None,
        }
    }
}

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Jsonl,
    Binary,
}

impl EmbeddingFormat {
    /// `.ftme` and `.bin` files are binary; everything else is jsonl.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ftme") | Some("bin") => EmbeddingFormat::Binary,
            _ => EmbeddingFormat::Jsonl,
        }
    }
}

/// Documents with one embedding row each.
///
/// Entries are stored as `f32` (the binary payload width); downstream math
/// widens to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    documents: Vec<Document>,
    values: Vec<f32>,
    dim: usize,
}

impl EmbeddingSet {
    /// Validates ids, titles, shape, and finiteness. Any `n` is accepted
    /// here; the loaders enforce `n >= 2`.
    pub fn new(documents: Vec<Document>, values: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 && !documents.is_empty() {
            return Err(EmbeddingError::ZeroDimension { record: 0 });
        }
        if values.len() != documents.len() * dim {
            let found = if documents.is_empty() {
                values.len()
            } else {
                values.len() / documents.len()
            };
            return Err(EmbeddingError::DimensionMismatch {
                record: 0,
                expected: dim,
                found,
            });
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.title.trim().is_empty() {
                return Err(EmbeddingError::EmptyTitle { record: i });
            }
            if !seen.insert(&doc.id) {
                return Err(EmbeddingError::DuplicateId(doc.id.clone()));
            }
            if values[i * dim..(i + 1) * dim].iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite { record: i });
            }
        }
        Ok(EmbeddingSet {
            documents,
            values,
            dim,
        })
    }

    /// Builds a set from `f64` rows, narrowing each entry to `f32`.
    pub fn from_rows(documents: Vec<Document>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    record: i,
                    expected: dim,
                    found: r.len(),
                });
            }
            values.extend(r.iter().map(|&v| v as f32));
        }
        if documents.len() != rows.len() {
            return Err(EmbeddingError::MetadataCount {
                expected: rows.len(),
                found: documents.len(),
            });
        }
        EmbeddingSet::new(documents, values, dim)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// The embedding rows widened to `f64`.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.len(),
            self.dim,
            self.values.iter().map(|&v| f64::from(v)).collect(),
        )
    }

    /// Widened copy of the listed rows, in order.
    pub fn select_matrix(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend(self.row(i).iter().map(|&v| f64::from(v)));
        }
        Matrix::from_vec(indices.len(), self.dim, data)
    }
}

/// Column-wise arithmetic mean of a sentence matrix.
pub fn mean_pool(sentences: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = sentences.first().ok_or(EmbeddingError::EmptySentenceMatrix)?;
    let dim = first.len();
    let mut sums = vec![0.0; dim];
    for (s, row) in sentences.iter().enumerate() {
        if row.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                record: s,
                expected: dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { record: s });
        }
        for (acc, v) in sums.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let count = sentences.len() as f64;
    Ok(sums.into_iter().map(|s| s / count).collect())
}

#[derive(Serialize, Deserialize)]
struct TextRecord {
    #[serde(flatten)]
    document: Document,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<Vec<f64>>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmbeddingError + '_ {
    move |source| EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Path of the metadata file accompanying a binary embedding file.
pub fn metadata_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.jsonl");
    PathBuf::from(os)
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    let set = match format {
        EmbeddingFormat::Jsonl => read_jsonl(path)?,
        EmbeddingFormat::Binary => read_binary(path)?,
    };
    if set.len() < 2 {
        return Err(EmbeddingError::TooFewDocuments(set.len()));
    }
    Ok(set)
}

pub fn write_embeddings(set: &EmbeddingSet, path: &Path, format: EmbeddingFormat) -> Result<()> {
    if set.is_empty() {
        return Err(EmbeddingError::TooFewDocuments(0));
    }
    match format {
        EmbeddingFormat::Jsonl => write_jsonl(set, path),
        EmbeddingFormat::Binary => write_binary(set, path),
    }
}

fn read_jsonl(path: &Path) -> Result<EmbeddingSet> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut documents = Vec::new();
    let mut values: Vec<f32> = Vec::new();
    let mut dim = None;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TextRecord =
            serde_json::from_str(&line).map_err(|e| EmbeddingError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let record_idx = documents.len();
        let row = match (record.embedding, record.sentences) {
            (Some(e), None) => e,
            (None, Some(s)) => mean_pool(&s).map_err(|e| match e {
                EmbeddingError::EmptySentenceMatrix => EmbeddingError::Malformed {
                    line: line_no,
                    message: "empty sentence matrix".into(),
                },
                EmbeddingError::DimensionMismatch {
                    expected, found, ..
                } => EmbeddingError::Malformed {
                    line: line_no,
                    message: format!("ragged sentence matrix ({found} vs {expected} columns)"),
                },
                _ => EmbeddingError::NonFinite { record: record_idx },
            })?,
            (Some(_), Some(_)) => {
                return Err(EmbeddingError::Malformed {
                    line: line_no,
                    message: "record has both `embedding` and `sentences`".into(),
                })
            }
            (None, None) => {
                return Err(EmbeddingError::Malformed {
                    line: line_no,
                    message: "record has neither `embedding` nor `sentences`".into(),
                })
            }
        };
        let expected = *dim.get_or_insert(row.len());
        if row.is_empty() {
            return Err(EmbeddingError::ZeroDimension { record: record_idx });
        }
        if row.len() != expected {
            return Err(EmbeddingError::DimensionMismatch {
                record: record_idx,
                expected,
                found: row.len(),
            });
        }
        // Out-of-range values overflow to infinity here and are rejected below.
        values.extend(row.iter().map(|&v| v as f32));
        documents.push(record.document);
    }
    EmbeddingSet::new(documents, values, dim.unwrap_or(0))
}

fn write_jsonl(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for (i, doc) in set.documents.iter().enumerate() {
        // f32 -> f64 widening is exact, and serde_json prints the shortest
        // f64 string, so reading it back recovers the same f32 bits.
        let record = TextRecord {
            document: doc.clone(),
            embedding: Some(set.row(i).iter().map(|&v| f64::from(v)).collect()),
            sentences: None,
        };
        serde_json::to_writer(&mut out, &record).map_err(|e| EmbeddingError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn write_binary(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut header = Vec::with_capacity(BINARY_HEADER_LEN);
    header.extend_from_slice(BINARY_MAGIC);
    header.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    header.extend_from_slice(&(set.len() as u64).to_le_bytes());
    header.extend_from_slice(&(set.dim as u64).to_le_bytes());
    out.write_all(&header).map_err(io_err(path))?;
    for v in &set.values {
        out.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;

    let meta = metadata_path(path);
    let file = File::create(&meta).map_err(io_err(&meta))?;
    let mut out = BufWriter::new(file);
    for doc in &set.documents {
        serde_json::to_writer(&mut out, doc).map_err(|e| EmbeddingError::Io {
            path: meta.clone(),
            source: e.into(),
        })?;
        out.write_all(b"\n").map_err(io_err(&meta))?;
    }
    out.flush().map_err(io_err(&meta))
}

fn read_binary(path: &Path) -> Result<EmbeddingSet> {
    let mut file = File::open(path).map_err(io_err(path))?;
    let mut header = [0u8; BINARY_HEADER_LEN];
    file.read_exact(&mut header).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            EmbeddingError::BadMagic
        } else {
            io_err(path)(e)
        }
    })?;
    if &header[0..4] != BINARY_MAGIC {
        return Err(EmbeddingError::BadMagic);
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != BINARY_VERSION {
        return Err(EmbeddingError::UnsupportedVersion(version));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let d = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes"));
    if d == 0 && n > 0 {
        return Err(EmbeddingError::ZeroDimension { record: 0 });
    }
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or(EmbeddingError::PayloadSize {
            expected: u64::MAX,
            found: 0,
        })?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(io_err(path))?;
    if payload.len() as u64 != expected {
        return Err(EmbeddingError::PayloadSize {
            expected,
            found: payload.len() as u64,
        });
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();

    let meta = metadata_path(path);
    let file = File::open(&meta).map_err(io_err(&meta))?;
    let mut documents = Vec::with_capacity(n as usize);
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&meta))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| EmbeddingError::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        documents.push(doc);
    }
    if documents.len() as u64 != n {
        return Err(EmbeddingError::MetadataCount {
            expected: n as usize,
            found: documents.len(),
        });
    }
    EmbeddingSet::new(documents, values, d as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    fn docs(n: usize) -> Vec<Document> {
        (0..n).map(|i| Document::new(i as i64, format!("doc {i}"))).collect()
    }

    #[test]
    fn loads_two_record_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        fs::write(
            &path,
            "{\"id\":1,\"title\":\"a\",\"embedding\":[1,2,3,4]}\n\
             {\"id\":\"x\",\"title\":\"b\",\"embedding\":[0.5,0,0,-1],\"url\":\"u\"}\n",
        )
        .unwrap();
        let set = load_embeddings(&path, EmbeddingFormat::Jsonl).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), 4);
        assert_eq!(set.documents()[1].id, DocId::from("x"));
        assert_eq!(set.documents()[1].url.as_deref(), Some("u"));
        assert_eq!(set.row(1), &[0.5, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        fs::write(
            &path,
            "{\"id\":1,\"title\":\"a\",\"embedding\":[1,2,3,4]}\n\
             {\"id\":2,\"title\":\"b\",\"embedding\":[1,2,3]}\n",
        )
        .unwrap();
        let err = load_embeddings(&path, EmbeddingFormat::Jsonl).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::DimensionMismatch {
                expected: 4,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        let cases = [
            (
                "{\"id\":1,\"title\":\"a\",\"embedding\":[1]}\n{\"id\":1,\"title\":\"b\",\"embedding\":[2]}\n",
                "duplicate",
            ),
            ("{\"id\":1,\"title\":\"a\",\"embedding\":[1]}\n{\"id\":2,\"title\":\"b\",\"embedding\":[1e300]}\n", "finite"),
            ("{\"id\":1,\"title\":\"a\",\"embedding\":[1]}\n{\"id\":2,\"title\":\"\",\"embedding\":[2]}\n", "title"),
            ("{\"id\":1,\"title\":\"a\",\"embedding\":[1]}\nnot json\n", "malformed"),
            ("{\"id\":1,\"title\":\"a\",\"embedding\":[1]}\n", "at least 2"),
            ("{\"id\":1,\"title\":\"a\"}\n", "neither"),
        ];
        for (body, needle) in cases {
            fs::write(&path, body).unwrap();
            let err = load_embeddings(&path, EmbeddingFormat::Jsonl).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: got {err}");
        }
        let missing = dir.path().join("nope.jsonl");
        assert!(matches!(
            load_embeddings(&missing, EmbeddingFormat::Jsonl),
            Err(EmbeddingError::Io { .. })
        ));
    }

    #[test]
    fn sentence_records_are_pooled_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        fs::write(
            &path,
            "{\"id\":1,\"title\":\"a\",\"sentences\":[[1,2],[3,4]]}\n\
             {\"id\":2,\"title\":\"b\",\"embedding\":[0,0]}\n",
        )
        .unwrap();
        let set = load_embeddings(&path, EmbeddingFormat::Jsonl).unwrap();
        assert_eq!(set.row(0), &[2.0, 3.0]);
    }

    #[test]
    fn mean_pool_examples() {
        assert_eq!(
            mean_pool(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            vec![2.0, 3.0]
        );
        let v = vec![0.3, -1.7, 2.25];
        let pooled = mean_pool(&vec![v.clone(); 7]).unwrap();
        for (a, b) in pooled.iter().zip(&v) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert!(matches!(
            mean_pool(&[]),
            Err(EmbeddingError::EmptySentenceMatrix)
        ));
        let doc: Vec<Vec<f64>> = (0..123)
            .map(|s| (0..2048).map(|j| ((s * 31 + j) % 17) as f64).collect())
            .collect();
        assert_eq!(mean_pool(&doc).unwrap().len(), 2048);
    }

    #[test]
    fn binary_rewrite_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..4).map(|j| (i * 4 + j) as f64 * 0.1 - 0.55).collect())
            .collect();
        let set = EmbeddingSet::from_rows(docs(3), &rows).unwrap();
        let a = dir.path().join("a.ftme");
        let b = dir.path().join("b.ftme");
        write_embeddings(&set, &a, EmbeddingFormat::Binary).unwrap();
        let loaded = load_embeddings(&a, EmbeddingFormat::Binary).unwrap();
        assert_eq!(loaded, set);
        write_embeddings(&loaded, &b, EmbeddingFormat::Binary).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(
            fs::read(metadata_path(&a)).unwrap(),
            fs::read(metadata_path(&b)).unwrap()
        );
        let bytes = fs::read(&a).unwrap();
        assert_eq!(&bytes[..4], b"FTME");
        assert_eq!(bytes.len(), 24 + 3 * 4 * 4);
    }

    #[test]
    fn binary_header_errors() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet::from_rows(docs(2), &[vec![1.0], vec![2.0]]).unwrap();
        let p = dir.path().join("a.ftme");
        write_embeddings(&set, &p, EmbeddingFormat::Binary).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_embeddings(&p, EmbeddingFormat::Binary),
            Err(EmbeddingError::PayloadSize { .. })
        ));
        bytes[0] = b'X';
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_embeddings(&p, EmbeddingFormat::Binary),
            Err(EmbeddingError::BadMagic)
        ));
    }

    #[test]
    fn writing_empty_set_fails() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet::new(vec![], vec![], 4).unwrap();
        let p = dir.path().join("e.jsonl");
        assert!(write_embeddings(&set, &p, EmbeddingFormat::Jsonl).is_err());
        assert!(write_embeddings(&set, &p, EmbeddingFormat::Binary).is_err());
    }

    #[test]
    fn format_inferred_from_extension() {
        assert_eq!(
            EmbeddingFormat::from_path(Path::new("corpus.ftme")),
            EmbeddingFormat::Binary
        );
        assert_eq!(
            EmbeddingFormat::from_path(Path::new("corpus.jsonl")),
            EmbeddingFormat::Jsonl
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trips_both_formats(
            rows in (2usize..6, 1usize..5).prop_flat_map(|(n, d)| {
                prop::collection::vec(prop::collection::vec(-1e6f64..1e6, d), n)
            })
        ) {
            let dir = tempfile::tempdir().unwrap();
            let set = EmbeddingSet::from_rows(docs(rows.len()), &rows).unwrap();
            for (name, fmt) in [("r.ftme", EmbeddingFormat::Binary), ("r.jsonl", EmbeddingFormat::Jsonl)] {
                let p = dir.path().join(name);
                write_embeddings(&set, &p, fmt).unwrap();
                let back = load_embeddings(&p, fmt).unwrap();
                prop_assert_eq!(back.documents(), set.documents());
                for (a, b) in back.values().iter().zip(set.values()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }

        #[test]
        fn pooling_ignores_sentence_order(
            rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..8),
            seed in any::<u64>(),
        ) {
            let mut shuffled = rows.clone();
            // deterministic Fisher-Yates from the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = mean_pool(&rows).unwrap();
            let b = mean_pool(&shuffled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }
}
