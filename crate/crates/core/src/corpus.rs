//! Bibliographic record ingestion.
//!
//! Two input formats are accepted:
//!
//! * a tagged-field format in the style of common bibliographic exports:
//!   two-letter tags (`PT`, `AU`, `TI`, `SO`, `DT`, `LA`, `C1`, `UT`),
//!   continuation lines indented by three spaces, `ER` closing a record and
//!   `EF` closing the file;
//! * a JSON-lines format with one object per record.
//!
//! Malformed records never abort a parse. They are dropped and reported in
//! [`ParseOutput::diagnostics`]; only an unreadable stream is fatal.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DocType {
    Article,
    Review,
    Letter,
    /// Any non-citable type; holds the source tag as it appeared.
    Other(String),
}

impl DocType {
    pub fn classify(raw: &str) -> Self {
        let trimmed = raw.trim();
        match trimmed.to_uppercase().as_str() {
            "ARTICLE" => DocType::Article,
            "REVIEW" => DocType::Review,
            "LETTER" => DocType::Letter,
            _ => DocType::Other(trimmed.to_string()),
        }
    }

    pub fn is_citable(&self) -> bool {
        !matches!(self, DocType::Other(_))
    }

    pub fn as_str(&self) -> &str {
        match self {
            DocType::Article => "Article",
            DocType::Review => "Review",
            DocType::Letter => "Letter",
            DocType::Other(tag) => tag,
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub doc_type: DocType,
    /// Uppercase language name.
    pub language: String,
    pub source_title: String,
    /// Address strings in source order, duplicates kept.
    pub raw_addresses: Vec<String>,
    pub author_count: u32,
}

impl Document {
    pub fn is_citable(&self) -> bool {
        self.doc_type.is_citable()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Tagged,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tagged" => Ok(InputFormat::Tagged),
            "jsonl" => Ok(InputFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!(
                "unknown input format `{other}` (expected tagged or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Tagged => "tagged",
            InputFormat::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// A new record started, or the file ended, before `ER`.
    MissingEndTag,
    /// Record closed without a `UT` line (or JSON record without `id`).
    MissingId,
    DuplicateId { id: String },
    /// `ER` seen while no record was open.
    OrphanEndTag,
    InvalidJson { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based line where the offending record started.
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_id: Option<String>,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutput {
    pub documents: Vec<Document>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a whole stream in the given format.
pub fn parse_corpus<R: BufRead>(input: R, format: InputFormat) -> Result<ParseOutput> {
    match format {
        InputFormat::Tagged => parse_tagged(input),
        InputFormat::Jsonl => parse_jsonl(input),
    }
}

fn read_lines<R: BufRead>(mut input: R) -> impl Iterator<Item = Result<String>> {
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    std::iter::from_fn(move || {
        buf.clear();
        match input.read_until(b'\n', &mut buf) {
            Ok(0) => None,
            Ok(_) => {
                line_no += 1;
                if buf.last() == Some(&b'\n') {
                    buf.pop();
                }
                if buf.last() == Some(&b'\r') {
                    buf.pop();
                }
                // A UTF-8 byte-order mark on the first line is not content.
                let bytes = if line_no == 1 && buf.starts_with(&[0xEF, 0xBB, 0xBF]) {
                    &buf[3..]
                } else {
                    &buf[..]
                };
                Some(
                    std::str::from_utf8(bytes)
                        .map(str::to_owned)
                        .map_err(|_| Error::Utf8 { line: line_no }),
                )
            }
            Err(e) => Some(Err(e.into())),
        }
    })
}

#[derive(Debug, Default)]
struct RecordBuilder {
    start_line: usize,
    id: Option<String>,
    doc_type: Option<String>,
    language: Option<String>,
    source: Option<String>,
    authors: Vec<String>,
    addresses: Vec<String>,
    last_tag: Option<[u8; 2]>,
}

impl RecordBuilder {
    fn new(start_line: usize) -> Self {
        RecordBuilder {
            start_line,
            ..Default::default()
        }
    }

    fn push(&mut self, tag: [u8; 2], value: &str) {
        self.last_tag = Some(tag);
        match &tag {
            b"AU" => self.authors.push(value.to_string()),
            b"C1" => self.addresses.push(value.to_string()),
            b"UT" => self.id = Some(value.to_string()),
            b"DT" => self.doc_type = Some(value.to_string()),
            b"LA" => self.language = Some(value.to_string()),
            b"SO" => self.source = Some(value.to_string()),
            // PT, TI and tags outside the recognized set carry nothing we keep.
            _ => {}
        }
    }

    fn extend(&mut self, value: &str) {
        let Some(tag) = self.last_tag else { return };
        let append = |field: &mut Option<String>| {
            if let Some(existing) = field {
                existing.push(' ');
                existing.push_str(value);
            }
        };
        match &tag {
            // Multi-valued tags: every continuation line is one more value.
            b"AU" => self.authors.push(value.to_string()),
            b"C1" => self.addresses.push(value.to_string()),
            b"UT" => append(&mut self.id),
            b"DT" => append(&mut self.doc_type),
            b"LA" => append(&mut self.language),
            b"SO" => append(&mut self.source),
            _ => {}
        }
    }

    fn finish(self) -> std::result::Result<Document, Diagnostic> {
        let id = match self.id.map(|s| s.trim().to_string()) {
            Some(id) if !id.is_empty() => id,
            _ => {
                return Err(Diagnostic {
                    line: self.start_line,
                    record_id: None,
                    kind: DiagnosticKind::MissingId,
                })
            }
        };
        Ok(Document {
            id,
            doc_type: DocType::classify(self.doc_type.as_deref().unwrap_or("")),
            language: self
                .language
                .map(|l| l.trim().to_uppercase())
                .unwrap_or_default(),
            source_title: self.source.map(|s| s.trim().to_string()).unwrap_or_default(),
            raw_addresses: self.addresses,
            author_count: self.authors.len() as u32,
        })
    }
}

fn tag_of(line: &str) -> Option<([u8; 2], &str)> {
    let bytes = line.as_bytes();
    if bytes.len() < 2 {
        return None;
    }
    let tag = [bytes[0], bytes[1]];
    if !tag.iter().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()) {
        return None;
    }
    match bytes.get(2) {
        None => Some((tag, "")),
        Some(b' ') => Some((tag, line[3..].trim_end())),
        Some(_) => None,
    }
}

struct Collector {
    out: ParseOutput,
    seen: HashSet<String>,
}

impl Collector {
    fn new() -> Self {
        Collector {
            out: ParseOutput::default(),
            seen: HashSet::new(),
        }
    }

    fn accept(&mut self, result: std::result::Result<Document, Diagnostic>, line: usize) {
        match result {
            Ok(doc) => {
                if self.seen.insert(doc.id.clone()) {
                    self.out.documents.push(doc);
                } else {
                    self.out.diagnostics.push(Diagnostic {
                        line,
                        record_id: Some(doc.id.clone()),
                        kind: DiagnosticKind::DuplicateId { id: doc.id },
                    });
                }
            }
            Err(diag) => self.out.diagnostics.push(diag),
        }
    }

    fn unterminated(&mut self, record: RecordBuilder) {
        self.out.diagnostics.push(Diagnostic {
            line: record.start_line,
            record_id: record.id.map(|s| s.trim().to_string()),
            kind: DiagnosticKind::MissingEndTag,
        });
    }
}

fn parse_tagged<R: BufRead>(input: R) -> Result<ParseOutput> {
    let mut collector = Collector::new();
    let mut current: Option<RecordBuilder> = None;

    for (idx, line) in read_lines(input).enumerate() {
        let line = line?;
        let line_no = idx + 1;

        if let Some(rest) = line.strip_prefix("   ") {
            if let Some(record) = current.as_mut() {
                record.extend(rest.trim());
            }
            continue;
        }
        let Some((tag, value)) = tag_of(&line) else {
            continue;
        };
        match &tag {
            b"PT" => {
                if let Some(open) = current.take() {
                    collector.unterminated(open);
                }
                let mut record = RecordBuilder::new(line_no);
                record.push(tag, value);
                current = Some(record);
            }
            b"ER" => match current.take() {
                Some(record) => {
                    let start = record.start_line;
                    collector.accept(record.finish(), start);
                }
                None => collector.out.diagnostics.push(Diagnostic {
                    line: line_no,
                    record_id: None,
                    kind: DiagnosticKind::OrphanEndTag,
                }),
            },
            b"EF" => break,
            _ => {
                if let Some(record) = current.as_mut() {
                    record.push(tag, value);
                }
            }
        }
    }
    if let Some(open) = current.take() {
        collector.unterminated(open);
    }
    Ok(collector.out)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    doc_type: String,
    #[serde(default)]
    language: String,
    #[serde(default)]
    source: String,
    #[serde(default)]
    addresses: Vec<String>,
    #[serde(default)]
    author_count: u32,
}

impl From<&Document> for JsonRecord {
    fn from(doc: &Document) -> Self {
        JsonRecord {
            id: Some(doc.id.clone()),
            doc_type: doc.doc_type.as_str().to_string(),
            language: doc.language.clone(),
            source: doc.source_title.clone(),
            addresses: doc.raw_addresses.clone(),
            author_count: doc.author_count,
        }
    }
}

fn parse_jsonl<R: BufRead>(input: R) -> Result<ParseOutput> {
    let mut collector = Collector::new();
    for (idx, line) in read_lines(input).enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                collector.out.diagnostics.push(Diagnostic {
                    line: line_no,
                    record_id: None,
                    kind: DiagnosticKind::InvalidJson {
                        message: e.to_string(),
                    },
                });
                continue;
            }
        };
        let result = match record.id.map(|s| s.trim().to_string()) {
            Some(id) if !id.is_empty() => Ok(Document {
                id,
                doc_type: DocType::classify(&record.doc_type),
                language: record.language.trim().to_uppercase(),
                source_title: record.source,
                raw_addresses: record.addresses,
                author_count: record.author_count,
            }),
            _ => Err(Diagnostic {
                line: line_no,
                record_id: None,
                kind: DiagnosticKind::MissingId,
            }),
        };
        collector.accept(result, line_no);
    }
    Ok(collector.out)
}

/// Writes documents in the JSON-lines format, one object per line.
pub fn write_jsonl<W: Write>(docs: &[Document], mut out: W) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, &JsonRecord::from(doc))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes documents back out in the tagged format.
pub fn write_tagged<W: Write>(docs: &[Document], mut out: W) -> Result<()> {
    writeln!(out, "FN Tagged Export")?;
    writeln!(out, "VR 1.0")?;
    for doc in docs {
        writeln!(out, "PT J")?;
        for i in 0..doc.author_count {
            writeln!(out, "AU Author {}", i + 1)?;
        }
        if !doc.source_title.is_empty() {
            writeln!(out, "SO {}", doc.source_title)?;
        }
        writeln!(out, "DT {}", doc.doc_type)?;
        if !doc.language.is_empty() {
            writeln!(out, "LA {}", doc.language)?;
        }
        for addr in &doc.raw_addresses {
            writeln!(out, "C1 {addr}")?;
        }
        writeln!(out, "UT {}", doc.id)?;
        writeln!(out, "ER")?;
        writeln!(out)?;
    }
    writeln!(out, "EF")?;
    Ok(())
}

/// Keeps articles, reviews and letters.
pub fn filter_citable(docs: Vec<Document>) -> Vec<Document> {
    docs.into_iter().filter(Document::is_citable).collect()
}

/// Drops every document whose id was already seen, keeping the first.
/// Returns the surviving documents and the dropped ids in input order.
pub fn dedup_by_id(docs: Vec<Document>) -> (Vec<Document>, Vec<String>) {
    let mut seen = HashSet::new();
    let mut dropped = Vec::new();
    let kept = docs
        .into_iter()
        .filter(|d| {
            if seen.insert(d.id.clone()) {
                true
            } else {
                dropped.push(d.id.clone());
                false
            }
        })
        .collect();
    (kept, dropped)
}

/// Fails on the first id that occurs twice.
pub fn ensure_unique_ids(docs: &[Document]) -> Result<()> {
    let mut seen = HashSet::with_capacity(docs.len());
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::DuplicateId(d.id.clone()));
        }
    }
    Ok(())
}

/// Raw tallies underlying a [`CorpusSummary`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryCounts {
    pub n_records: u64,
    pub n_articles: u64,
    pub n_reviews: u64,
    pub n_letters: u64,
    pub n_other: u64,
    pub n_citable_with_addresses: u64,
    /// Addresses on citable items.
    pub n_addresses: u64,
    /// Authors on citable items.
    pub n_authors: u64,
    pub n_international: u64,
    pub n_international_addresses: u64,
    pub n_international_authors: u64,
}

impl SummaryCounts {
    pub fn n_citable(&self) -> u64 {
        self.n_articles + self.n_reviews + self.n_letters
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub n_records: u64,
    pub n_articles: u64,
    pub n_reviews: u64,
    pub n_letters: u64,
    pub n_other: u64,
    pub n_citable: u64,
    pub n_citable_with_addresses: u64,
    pub n_addresses: u64,
    pub n_authors: u64,
    pub n_international: u64,
    pub n_international_addresses: u64,
    pub n_international_authors: u64,
    /// `None` when there are no citable items.
    pub pct_international: Option<f64>,
    pub pct_addresses_international: Option<f64>,
    pub pct_authors_international: Option<f64>,
}

impl CorpusSummary {
    pub fn from_counts(c: SummaryCounts) -> Self {
        let n_citable = c.n_citable();
        let guarded = |num, den| {
            if n_citable == 0 {
                None
            } else {
                percent_one_decimal(num, den)
            }
        };
        CorpusSummary {
            n_records: c.n_records,
            n_articles: c.n_articles,
            n_reviews: c.n_reviews,
            n_letters: c.n_letters,
            n_other: c.n_other,
            n_citable,
            n_citable_with_addresses: c.n_citable_with_addresses,
            n_addresses: c.n_addresses,
            n_authors: c.n_authors,
            n_international: c.n_international,
            n_international_addresses: c.n_international_addresses,
            n_international_authors: c.n_international_authors,
            pct_international: guarded(c.n_international, n_citable),
            pct_addresses_international: guarded(c.n_international_addresses, c.n_addresses),
            pct_authors_international: guarded(c.n_international_authors, c.n_authors),
        }
    }
}

/// `100 * num / den` rounded half-up to one decimal, computed in integers.
pub fn percent_one_decimal(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        return None;
    }
    let (num, den) = (num as u128, den as u128);
    let tenths = (2000 * num + den) / (2 * den);
    Some(tenths as f64 / 10.0)
}

/// Summarizes a corpus. `international[i]` flags `docs[i]`; flags on
/// non-citable documents are ignored.
pub fn corpus_summary(docs: &[Document], international: &[bool]) -> Result<CorpusSummary> {
    if docs.len() != international.len() {
        return Err(Error::InvalidArgument(format!(
            "{} documents but {} international flags",
            docs.len(),
            international.len()
        )));
    }
    let mut c = SummaryCounts {
        n_records: docs.len() as u64,
        ..Default::default()
    };
    for (doc, &intl) in docs.iter().zip(international) {
        match doc.doc_type {
            DocType::Article => c.n_articles += 1,
            DocType::Review => c.n_reviews += 1,
            DocType::Letter => c.n_letters += 1,
            DocType::Other(_) => {
                c.n_other += 1;
                continue;
            }
        }
        let n_addr = doc.raw_addresses.len() as u64;
        if n_addr > 0 {
            c.n_citable_with_addresses += 1;
        }
        c.n_addresses += n_addr;
        c.n_authors += doc.author_count as u64;
        if intl {
            c.n_international += 1;
            c.n_international_addresses += n_addr;
            c.n_international_authors += doc.author_count as u64;
        }
    }
    Ok(CorpusSummary::from_counts(c))
}
