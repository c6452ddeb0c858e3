//! Interpretations and the chunked on-disk dataset store.
//!
//! A data file is a sequence of `begin(model(Id)). ... end(model(Id)).`
//! blocks. Loading splits it into chunk files of `G` pre-parsed examples
//! each plus a line-oriented manifest. Streaming reads one chunk at a time,
//! so at most `G` examples are decoded and resident at any instant.

use std::collections::{HashMap, VecDeque};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::parser::{parse_clause_terms, parse_term, ParseError, Pos};
use crate::settings::Settings;
use crate::symbol::Symbol;
use crate::term::{Literal, PredKey, Term};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{path}:{pos}: {msg}")]
    Data {
        path: PathBuf,
        pos: Pos,
        msg: String,
    },
    #[error("example {id}: {msg}")]
    BadExample { id: String, msg: String },
    #[error("dataset {0} contains no examples")]
    Empty(PathBuf),
    #[error("corrupt chunk or manifest {path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Ground facts of one predicate, with a first-argument index.
#[derive(Clone, Debug, Default)]
pub struct FactTable {
    rows: Vec<Box<[Term]>>,
    first_arg: HashMap<Term, Vec<u32>>,
}

impl FactTable {
    fn push(&mut self, args: Vec<Term>) {
        let idx = self.rows.len() as u32;
        if let Some(first) = args.first() {
            self.first_arg.entry(first.clone()).or_default().push(idx);
        }
        self.rows.push(args.into_boxed_slice());
    }

    pub fn rows(&self) -> &[Box<[Term]>] {
        &self.rows
    }

    /// Row indices whose first argument equals `key`.
    pub fn lookup(&self, key: &Term) -> &[u32] {
        self.first_arg.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One example: an identifier, its class label and its ground facts.
#[derive(Clone, Debug)]
pub struct Interpretation {
    pub id: Term,
    pub class: Symbol,
    facts: IndexMap<PredKey, FactTable>,
}

impl PartialEq for Interpretation {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.class == other.class
            && self.facts.len() == other.facts.len()
            && self
                .facts
                .iter()
                .zip(other.facts.iter())
                .all(|((k1, t1), (k2, t2))| k1 == k2 && t1.rows == t2.rows)
    }
}

impl Interpretation {
    /// Build from ground facts. Non-ground facts are rejected.
    pub fn new(id: Term, class: Symbol, facts: Vec<Literal>) -> Result<Self, StoreError> {
        let mut table: IndexMap<PredKey, FactTable> = IndexMap::new();
        for f in facts {
            if !f.is_ground() {
                return Err(StoreError::BadExample {
                    id: id.to_string(),
                    msg: format!("fact {f} is not ground"),
                });
            }
            table.entry(f.key()).or_default().push(f.args);
        }
        Ok(Interpretation {
            id,
            class,
            facts: table,
        })
    }

    pub fn facts(&self, key: PredKey) -> Option<&FactTable> {
        self.facts.get(&key)
    }

    pub(crate) fn table_index(&self, key: &PredKey) -> Option<usize> {
        self.facts.get_index_of(key)
    }

    pub(crate) fn table_at(&self, i: usize) -> &FactTable {
        &self.facts[i]
    }

    pub fn fact_count(&self) -> usize {
        self.facts.values().map(FactTable::len).sum()
    }

    /// All facts in load order.
    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.facts.iter().flat_map(|(key, table)| {
            table.rows.iter().map(move |row| Literal {
                pred: key.0,
                args: row.to_vec(),
                builtin: None,
            })
        })
    }

    pub fn with_id(&self, id: Term) -> Interpretation {
        Interpretation {
            id,
            class: self.class,
            facts: self.facts.clone(),
        }
    }

    /// The `begin ... end` block for this example.
    pub fn to_block(&self) -> String {
        let mut out = format!("begin(model({})).\n", self.id);
        for lit in self.literals() {
            out.push_str("  ");
            out.push_str(&lit.to_string());
            out.push_str(".\n");
        }
        out.push_str(&format!(
            "  {}.\n",
            crate::term::quote_atom(self.class.as_str())
        ));
        out.push_str(&format!("end(model({})).\n", self.id));
        out
    }

    fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.id.to_string().as_bytes());
        h.update(b"|");
        h.update(self.class.as_str().as_bytes());
        for lit in self.literals() {
            h.update(b"|");
            h.update(lit.to_string().as_bytes());
        }
        h.finalize().into()
    }

    /// Digest of the facts and label only, ignoring the identifier.
    pub fn content_digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.class.as_str().as_bytes());
        for lit in self.literals() {
            h.update(b"|");
            h.update(lit.to_string().as_bytes());
        }
        h.finalize().into()
    }
}

/// Order-independent hash of a multiset of examples: digests are summed limb-wise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MultisetHash([u64; 4]);

impl MultisetHash {
    pub fn add(&mut self, digest: &[u8; 32]) {
        for (i, limb) in self.0.iter_mut().enumerate() {
            let bytes: [u8; 8] = digest[i * 8..i * 8 + 8].try_into().unwrap();
            *limb = limb.wrapping_add(u64::from_le_bytes(bytes));
        }
    }

    pub fn hex(&self) -> String {
        self.0.iter().map(|l| format!("{l:016x}")).collect()
    }
}

// ---------------------------------------------------------------------------
// Binary chunk encoding

const CHUNK_MAGIC: &[u8; 8] = b"FOLDTCK1";

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn put_term(buf: &mut Vec<u8>, t: &Term) {
    match t {
        Term::Atom(s) => {
            buf.push(0);
            put_str(buf, s.as_str());
        }
        Term::Int(i) => {
            buf.push(1);
            buf.extend_from_slice(&i.to_le_bytes());
        }
        Term::Float(x) => {
            buf.push(2);
            buf.extend_from_slice(&x.to_bits().to_le_bytes());
        }
        Term::Var(v) => {
            buf.push(3);
            put_str(buf, v.as_str());
        }
        Term::Compound(f, args) => {
            buf.push(4);
            put_str(buf, f.as_str());
            buf.extend_from_slice(&(args.len() as u32).to_le_bytes());
            for a in args.iter() {
                put_term(buf, a);
            }
        }
    }
}

fn encode_example(e: &Interpretation) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 16 * e.fact_count());
    put_term(&mut buf, &e.id);
    put_str(&mut buf, e.class.as_str());
    buf.extend_from_slice(&(e.facts.len() as u32).to_le_bytes());
    for (key, table) in &e.facts {
        put_str(&mut buf, key.0.as_str());
        buf.extend_from_slice(&(key.1 as u32).to_le_bytes());
        buf.extend_from_slice(&(table.rows.len() as u32).to_le_bytes());
        for row in &table.rows {
            for a in row.iter() {
                put_term(&mut buf, a);
            }
        }
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.at + n > self.buf.len() {
            return Err("truncated record".into());
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<&'a str, String> {
        let n = self.u32()? as usize;
        std::str::from_utf8(self.take(n)?).map_err(|e| e.to_string())
    }

    fn term(&mut self) -> Result<Term, String> {
        let tag = self.take(1)?[0];
        Ok(match tag {
            0 => Term::atom(self.str()?),
            1 => Term::Int(self.u64()? as i64),
            2 => Term::Float(f64::from_bits(self.u64()?)),
            3 => Term::var(self.str()?),
            4 => {
                let f = Symbol::intern(self.str()?);
                let n = self.u32()? as usize;
                let args = (0..n).map(|_| self.term()).collect::<Result<Vec<_>, _>>()?;
                Term::Compound(f, args.into())
            }
            other => return Err(format!("unknown term tag {other}")),
        })
    }
}

fn decode_example(bytes: &[u8]) -> Result<Interpretation, String> {
    let mut r = Reader { buf: bytes, at: 0 };
    let id = r.term()?;
    let class = Symbol::intern(r.str()?);
    let npreds = r.u32()? as usize;
    let mut facts = IndexMap::with_capacity(npreds);
    for _ in 0..npreds {
        let pred = Symbol::intern(r.str()?);
        let arity = r.u32()? as usize;
        let nrows = r.u32()? as usize;
        let mut table = FactTable::default();
        for _ in 0..nrows {
            let args = (0..arity)
                .map(|_| r.term())
                .collect::<Result<Vec<_>, _>>()?;
            table.push(args);
        }
        facts.insert((pred, arity), table);
    }
    if r.at != bytes.len() {
        return Err("trailing bytes in record".into());
    }
    Ok(Interpretation { id, class, facts })
}

// ---------------------------------------------------------------------------
// Dataset handle

#[derive(Clone, Debug, PartialEq)]
pub struct ChunkInfo {
    pub index: usize,
    pub file: String,
    pub first_id: Term,
    /// Ordinal (manifest position) of the chunk's first example.
    pub first: usize,
    pub count: usize,
}

/// Instrumentation shared by all streams over one handle.
#[derive(Debug, Default)]
pub struct StreamStats {
    chunk_loads: AtomicU64,
    decoded: AtomicU64,
    resident: AtomicUsize,
    peak: AtomicUsize,
    streams: AtomicU64,
}

impl StreamStats {
    fn acquire(&self, n: usize) {
        let now = self.resident.fetch_add(n, Ordering::SeqCst) + n;
        self.peak.fetch_max(now, Ordering::SeqCst);
    }

    fn release(&self, n: usize) {
        self.resident.fetch_sub(n, Ordering::SeqCst);
    }
}

#[derive(Clone, Debug)]
pub struct DatasetHandle {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub chunks: Vec<ChunkInfo>,
    pub granularity: usize,
    pub total: usize,
    pub classes: Vec<Symbol>,
    pub histogram: Vec<u64>,
    pub fingerprint: String,
    stats: Arc<StreamStats>,
}

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Which examples a stream yields, by ordinal position in the manifest.
#[derive(Clone, Copy)]
pub enum Selector<'s> {
    All,
    Ordinals(&'s dyn Fn(usize) -> bool),
}

impl Selector<'_> {
    fn wants(&self, ordinal: usize) -> bool {
        match self {
            Selector::All => true,
            Selector::Ordinals(f) => f(ordinal),
        }
    }
}

impl DatasetHandle {
    pub fn open(manifest: &Path) -> Result<DatasetHandle, StoreError> {
        let text = fs::read_to_string(manifest).map_err(io_err(manifest))?;
        let corrupt = |msg: String| StoreError::Corrupt {
            path: manifest.to_path_buf(),
            msg,
        };
        let mut lines = text.lines();
        if lines.next() != Some("foldt-dataset v1") {
            return Err(corrupt("missing header".into()));
        }
        let mut granularity = None;
        let mut total = None;
        let mut classes = Vec::new();
        let mut histogram = Vec::new();
        let mut fingerprint = String::new();
        let mut chunks = Vec::new();
        let mut next_first = 0usize;
        for line in lines {
            let (kw, rest) = line.split_once(' ').unwrap_or((line, ""));
            match kw {
                "granularity" => granularity = rest.trim().parse().ok(),
                "total" => total = rest.trim().parse().ok(),
                "classes" => {
                    let t = parse_term(rest).map_err(|e| corrupt(e.to_string()))?;
                    let items = t.as_list().ok_or_else(|| corrupt("bad classes".into()))?;
                    for i in items {
                        match i {
                            Term::Atom(s) => classes.push(*s),
                            _ => return Err(corrupt("bad class label".into())),
                        }
                    }
                }
                "histogram" => {
                    histogram = rest
                        .split_whitespace()
                        .map(|c| c.parse::<u64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| corrupt(e.to_string()))?
                }
                "fingerprint" => fingerprint = rest.trim().to_string(),
                "chunk" => {
                    let mut parts = rest.splitn(3, ' ');
                    let index: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| corrupt(format!("bad chunk line: {line}")))?;
                    let file = parts
                        .next()
                        .ok_or_else(|| corrupt(format!("bad chunk line: {line}")))?
                        .to_string();
                    let tail = parts.next().unwrap_or("");
                    let (id_text, count) = tail
                        .rsplit_once(' ')
                        .ok_or_else(|| corrupt(format!("bad chunk line: {line}")))?;
                    let count: usize = count
                        .parse()
                        .map_err(|_| corrupt(format!("bad chunk count: {line}")))?;
                    let first_id = parse_term(id_text).map_err(|e| corrupt(e.to_string()))?;
                    chunks.push(ChunkInfo {
                        index,
                        file,
                        first_id,
                        first: next_first,
                        count,
                    });
                    next_first += count;
                }
                "" => {}
                other => return Err(corrupt(format!("unknown manifest line {other}"))),
            }
        }
        let granularity = granularity.ok_or_else(|| corrupt("missing granularity".into()))?;
        let total = total.ok_or_else(|| corrupt("missing total".into()))?;
        if next_first != total {
            return Err(corrupt(format!(
                "chunk counts sum to {next_first}, manifest says {total}"
            )));
        }
        if histogram.len() != classes.len() {
            return Err(corrupt("histogram does not match classes".into()));
        }
        Ok(DatasetHandle {
            dir: manifest.parent().unwrap_or(Path::new(".")).to_path_buf(),
            manifest: manifest.to_path_buf(),
            chunks,
            granularity,
            total,
            classes,
            histogram,
            fingerprint,
            stats: Arc::default(),
        })
    }

    /// Stream examples in manifest order, one chunk resident at a time.
    pub fn stream<'h>(&'h self, selector: Selector<'h>) -> ExampleStream<'h> {
        self.stats.streams.fetch_add(1, Ordering::SeqCst);
        ExampleStream {
            handle: self,
            selector,
            next_chunk: 0,
            buffer: VecDeque::new(),
            held: 0,
        }
    }

    /// Load every example; the whole dataset becomes resident.
    pub fn load_all(&self) -> Result<Vec<Interpretation>, StoreError> {
        let mut out = Vec::with_capacity(self.total);
        for item in self.stream(Selector::All) {
            out.push(item?.1);
        }
        Ok(out)
    }

    /// Maximum number of simultaneously resident examples observed so far.
    pub fn peak_resident(&self) -> usize {
        self.stats.peak.load(Ordering::SeqCst)
    }

    pub fn chunk_loads(&self) -> u64 {
        self.stats.chunk_loads.load(Ordering::SeqCst)
    }

    pub fn examples_decoded(&self) -> u64 {
        self.stats.decoded.load(Ordering::SeqCst)
    }

    pub fn streams_started(&self) -> u64 {
        self.stats.streams.load(Ordering::SeqCst)
    }

    /// Reset instrumentation counters (peak, loads, streams).
    pub fn reset_stats(&self) {
        self.stats.chunk_loads.store(0, Ordering::SeqCst);
        self.stats.decoded.store(0, Ordering::SeqCst);
        self.stats
            .peak
            .store(self.stats.resident.load(Ordering::SeqCst), Ordering::SeqCst);
        self.stats.streams.store(0, Ordering::SeqCst);
    }

    /// Order-independent content hash over all examples, recomputed by streaming.
    pub fn content_hash(&self) -> Result<String, StoreError> {
        let mut h = MultisetHash::default();
        for item in self.stream(Selector::All) {
            h.add(&item?.1.digest());
        }
        Ok(h.hex())
    }

    /// Write the same examples into a new store with granularity `g`.
    pub fn rechunk(&self, dir: &Path, g: usize) -> Result<DatasetHandle, StoreError> {
        let mut w = DatasetWriter::create(dir, g, self.classes.clone())?;
        for item in self.stream(Selector::All) {
            w.push(&item?.1)?;
        }
        w.finish()
    }

    fn read_chunk(
        &self,
        chunk: &ChunkInfo,
        selector: &Selector<'_>,
    ) -> Result<Vec<(usize, Interpretation)>, StoreError> {
        let path = self.dir.join(&chunk.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        self.stats.chunk_loads.fetch_add(1, Ordering::SeqCst);
        let corrupt = |msg: String| StoreError::Corrupt {
            path: path.clone(),
            msg,
        };
        if bytes.len() < 8 || &bytes[..8] != CHUNK_MAGIC {
            return Err(corrupt("bad magic".into()));
        }
        let mut at = 8;
        let mut out = Vec::new();
        for k in 0..chunk.count {
            if at + 4 > bytes.len() {
                return Err(corrupt(format!("truncated at record {k}")));
            }
            let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
            at += 4;
            if at + len > bytes.len() {
                return Err(corrupt(format!("truncated at record {k}")));
            }
            let ordinal = chunk.first + k;
            if selector.wants(ordinal) {
                let e = decode_example(&bytes[at..at + len]).map_err(corrupt)?;
                out.push((ordinal, e));
            }
            at += len;
        }
        if at != bytes.len() {
            return Err(corrupt("trailing bytes".into()));
        }
        Ok(out)
    }
}

/// Iterator over `(ordinal, example)` pairs of a dataset.
pub struct ExampleStream<'h> {
    handle: &'h DatasetHandle,
    selector: Selector<'h>,
    next_chunk: usize,
    buffer: VecDeque<(usize, Interpretation)>,
    held: usize,
}

impl ExampleStream<'_> {
    fn release(&mut self) {
        if self.held > 0 {
            self.handle.stats.release(self.held);
            self.held = 0;
        }
    }
}

impl Iterator for ExampleStream<'_> {
    type Item = Result<(usize, Interpretation), StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(item) = self.buffer.pop_front() {
                return Some(Ok(item));
            }
            // the previous chunk is fully consumed
            self.release();
            let chunk = self.handle.chunks.get(self.next_chunk)?;
            self.next_chunk += 1;
            if !(chunk.first..chunk.first + chunk.count).any(|o| self.selector.wants(o)) {
                continue;
            }
            match self.handle.read_chunk(chunk, &self.selector) {
                Ok(items) => {
                    self.held = items.len();
                    self.handle.stats.acquire(self.held);
                    self.handle
                        .stats
                        .decoded
                        .fetch_add(self.held as u64, Ordering::SeqCst);
                    self.buffer = items.into();
                }
                Err(e) => {
                    self.next_chunk = self.handle.chunks.len();
                    return Some(Err(e));
                }
            }
        }
    }
}

impl Drop for ExampleStream<'_> {
    fn drop(&mut self) {
        self.release();
    }
}

/// Single-writer builder for a chunked store.
pub struct DatasetWriter {
    dir: PathBuf,
    granularity: usize,
    classes: Vec<Symbol>,
    histogram: Vec<u64>,
    chunks: Vec<ChunkInfo>,
    pending: Vec<Vec<u8>>,
    pending_first: Option<Term>,
    total: usize,
    hash: MultisetHash,
}

impl DatasetWriter {
    pub fn create(
        dir: &Path,
        granularity: usize,
        classes: Vec<Symbol>,
    ) -> Result<Self, StoreError> {
        assert!(granularity >= 1, "granularity must be positive");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        // clear a previous store in the same directory
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let entry = entry.map_err(io_err(dir))?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if (name.starts_with("chunk-") && name.ends_with(".bin")) || name == MANIFEST_NAME {
                fs::remove_file(entry.path()).map_err(io_err(&entry.path()))?;
            }
        }
        Ok(DatasetWriter {
            dir: dir.to_path_buf(),
            granularity,
            histogram: vec![0; classes.len()],
            classes,
            chunks: Vec::new(),
            pending: Vec::new(),
            pending_first: None,
            total: 0,
            hash: MultisetHash::default(),
        })
    }

    pub fn push(&mut self, e: &Interpretation) -> Result<(), StoreError> {
        let ci = self
            .classes
            .iter()
            .position(|&c| c == e.class)
            .ok_or_else(|| StoreError::BadExample {
                id: e.id.to_string(),
                msg: format!("undeclared class {}", e.class),
            })?;
        self.histogram[ci] += 1;
        self.hash.add(&e.digest());
        if self.pending.is_empty() {
            self.pending_first = Some(e.id.clone());
        }
        self.pending.push(encode_example(e));
        self.total += 1;
        if self.pending.len() == self.granularity {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), StoreError> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let index = self.chunks.len();
        let file = format!("chunk-{index:06}.bin");
        let path = self.dir.join(&file);
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        w.write_all(CHUNK_MAGIC).map_err(io_err(&path))?;
        for rec in &self.pending {
            w.write_all(&(rec.len() as u32).to_le_bytes())
                .map_err(io_err(&path))?;
            w.write_all(rec).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        let count = self.pending.len();
        self.chunks.push(ChunkInfo {
            index,
            file,
            first_id: self.pending_first.take().unwrap(),
            first: self.total - count,
            count,
        });
        self.pending.clear();
        Ok(())
    }

    pub fn finish(mut self) -> Result<DatasetHandle, StoreError> {
        self.flush()?;
        if self.total == 0 {
            return Err(StoreError::Empty(self.dir.clone()));
        }
        let manifest = self.dir.join(MANIFEST_NAME);
        let mut text = String::from("foldt-dataset v1\n");
        text.push_str(&format!("granularity {}\n", self.granularity));
        text.push_str(&format!("total {}\n", self.total));
        let classes = Term::list(self.classes.iter().map(|c| Term::Atom(*c)).collect());
        text.push_str(&format!("classes {classes}\n"));
        let hist: Vec<String> = self.histogram.iter().map(u64::to_string).collect();
        text.push_str(&format!("histogram {}\n", hist.join(" ")));
        text.push_str(&format!("fingerprint {}\n", self.hash.hex()));
        for c in &self.chunks {
            text.push_str(&format!(
                "chunk {} {} {} {}\n",
                c.index, c.file, c.first_id, c.count
            ));
        }
        fs::write(&manifest, text).map_err(io_err(&manifest))?;
        Ok(DatasetHandle {
            dir: self.dir,
            manifest,
            chunks: self.chunks,
            granularity: self.granularity,
            total: self.total,
            classes: self.classes,
            histogram: self.histogram,
            fingerprint: self.hash.hex(),
            stats: Arc::default(),
        })
    }
}

// ---------------------------------------------------------------------------
// Text data files

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Where to write chunks; defaults to `<data file>.store/`.
    pub target_dir: Option<PathBuf>,
    /// Overrides the granularity from the settings.
    pub granularity: Option<usize>,
    /// Skip examples with a missing or ambiguous class instead of failing.
    pub skip_bad_examples: bool,
}

fn model_id(t: &Term, kw: &str) -> Option<Term> {
    match t {
        Term::Compound(f, args) if f.as_str() == kw && args.len() == 1 => match &args[0] {
            Term::Compound(m, inner) if m.as_str() == "model" && inner.len() == 1 => {
                Some(inner[0].clone())
            }
            _ => None,
        },
        _ => None,
    }
}

/// Incremental reader of `begin ... end` blocks from a text data file.
pub struct BlockReader<R: BufRead> {
    reader: R,
    path: PathBuf,
    classes: Vec<Symbol>,
    line_no: usize,
    buf: String,
    buf_line: usize,
    items: VecDeque<(Term, Pos)>,
    open: Option<(Term, Pos, Vec<Literal>)>,
    skip_bad: bool,
    pub skipped: Vec<String>,
}

impl<R: BufRead> BlockReader<R> {
    pub fn new(reader: R, path: &Path, classes: Vec<Symbol>, skip_bad: bool) -> Self {
        BlockReader {
            reader,
            path: path.to_path_buf(),
            classes,
            line_no: 0,
            buf: String::new(),
            buf_line: 1,
            items: VecDeque::new(),
            open: None,
            skip_bad,
            skipped: Vec::new(),
        }
    }

    fn data_err(&self, pos: Pos, msg: impl Into<String>) -> StoreError {
        StoreError::Data {
            path: self.path.clone(),
            pos,
            msg: msg.into(),
        }
    }

    /// Fill `items` with the next batch of complete clauses; false at EOF.
    fn refill(&mut self) -> Result<bool, StoreError> {
        loop {
            let mut line = String::new();
            let n = self
                .reader
                .read_line(&mut line)
                .map_err(io_err(&self.path))?;
            if n == 0 {
                if self.buf.trim().is_empty() {
                    return Ok(false);
                }
                let parsed = parse_clause_terms(&self.buf).map_err(|e| StoreError::Parse {
                    path: self.path.clone(),
                    source: e.offset_lines(self.buf_line - 1),
                })?;
                self.buf.clear();
                self.items.extend(parsed);
                return Ok(!self.items.is_empty());
            }
            self.line_no += 1;
            if self.buf.is_empty() {
                self.buf_line = self.line_no;
            }
            self.buf.push_str(&line);
            let code = line.split('%').next().unwrap_or("").trim_end();
            if !code.ends_with('.') {
                continue;
            }
            match parse_clause_terms(&self.buf) {
                Ok(parsed) => {
                    let offset = self.buf_line - 1;
                    self.items.extend(parsed.into_iter().map(|(t, p)| {
                        (
                            t,
                            Pos {
                                line: p.line + offset,
                                col: p.col,
                            },
                        )
                    }));
                    self.buf.clear();
                    return Ok(true);
                }
                Err(ParseError::UnexpectedEof { .. })
                | Err(ParseError::UnterminatedQuote { .. }) => continue,
                Err(e) => {
                    return Err(StoreError::Parse {
                        path: self.path.clone(),
                        source: e.offset_lines(self.buf_line - 1),
                    })
                }
            }
        }
    }

    fn finish_block(
        &mut self,
        id: Term,
        pos: Pos,
        facts: Vec<Literal>,
    ) -> Result<Option<Interpretation>, StoreError> {
        let mut labels = Vec::new();
        let mut rest = Vec::with_capacity(facts.len());
        for f in facts {
            if f.args.is_empty() && self.classes.contains(&f.pred) {
                labels.push(f.pred);
            } else {
                rest.push(f);
            }
        }
        let problem = match labels.len() {
            1 => None,
            0 => Some("no class fact".to_string()),
            _ => Some(format!(
                "ambiguous class: {}",
                labels
                    .iter()
                    .map(|l| l.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )),
        };
        if let Some(msg) = problem {
            if self.skip_bad {
                log::warn!(
                    "{}:{pos}: skipping example {id}: {msg}",
                    self.path.display()
                );
                self.skipped.push(id.to_string());
                return Ok(None);
            }
            return Err(self.data_err(pos, format!("example {id}: {msg}")));
        }
        Interpretation::new(id, labels[0], rest).map(Some)
    }

    pub fn next_example(&mut self) -> Result<Option<Interpretation>, StoreError> {
        loop {
            let Some((t, pos)) = self.items.pop_front() else {
                if !self.refill()? {
                    if let Some((id, p, _)) = &self.open {
                        return Err(self.data_err(*p, format!("block {id} has no end line")));
                    }
                    return Ok(None);
                }
                continue;
            };
            if let Some(id) = model_id(&t, "begin") {
                if let Some((open_id, _, _)) = &self.open {
                    return Err(
                        self.data_err(pos, format!("begin({id}) inside open block {open_id}"))
                    );
                }
                self.open = Some((id, pos, Vec::new()));
                continue;
            }
            if let Some(id) = model_id(&t, "end") {
                let Some((open_id, open_pos, facts)) = self.open.take() else {
                    return Err(self.data_err(pos, format!("end({id}) without begin")));
                };
                if open_id != id {
                    return Err(self.data_err(
                        pos,
                        format!("end(model({id})) does not match begin(model({open_id}))"),
                    ));
                }
                match self.finish_block(id, open_pos, facts)? {
                    Some(e) => return Ok(Some(e)),
                    None => continue,
                }
            }
            let Some((_, _, facts)) = self.open.as_mut() else {
                return Err(self.data_err(pos, format!("fact {t} outside of a begin/end block")));
            };
            let lit = Literal::from_term(&t).map_err(|m| StoreError::Data {
                path: self.path.clone(),
                pos,
                msg: m,
            })?;
            if !lit.is_ground() || lit.is_builtin() {
                return Err(self.data_err(pos, format!("{lit} is not a ground fact")));
            }
            facts.push(lit);
        }
    }
}

/// Parse a `begin/end` data file into a chunked store.
pub fn load_dataset(
    path: &Path,
    settings: &Settings,
    opts: &LoadOptions,
) -> Result<DatasetHandle, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    let g = opts.granularity.unwrap_or(settings.params.granularity);
    let dir = opts.target_dir.clone().unwrap_or_else(|| {
        let mut p = path.as_os_str().to_owned();
        p.push(".store");
        PathBuf::from(p)
    });
    let mut reader = BlockReader::new(
        BufReader::new(file),
        path,
        settings.classes.clone(),
        opts.skip_bad_examples,
    );
    let mut writer = DatasetWriter::create(&dir, g, settings.classes.clone())?;
    while let Some(e) = reader.next_example()? {
        writer.push(&e)?;
    }
    match writer.finish() {
        Err(StoreError::Empty(_)) => Err(StoreError::Empty(path.to_path_buf())),
        other => other,
    }
}

/// Parse examples from text held in memory.
pub fn parse_examples(text: &str, classes: &[Symbol]) -> Result<Vec<Interpretation>, StoreError> {
    let mut reader = BlockReader::new(
        text.as_bytes(),
        Path::new("<text>"),
        classes.to_vec(),
        false,
    );
    let mut out = Vec::new();
    while let Some(e) = reader.next_example()? {
        out.push(e);
    }
    Ok(out)
}

/// Write examples into a chunked store.
pub fn store_examples(
    dir: &Path,
    granularity: usize,
    classes: &[Symbol],
    examples: &[Interpretation],
) -> Result<DatasetHandle, StoreError> {
    let mut w = DatasetWriter::create(dir, granularity, classes.to_vec())?;
    for e in examples {
        w.push(e)?;
    }
    w.finish()
}
