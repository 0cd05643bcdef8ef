//! Prime-indexed cumulative sums of the solution counts, computed over
//! contiguous prime ranges by a worker pool, with an append-only checkpoint.
//!
//! `S(N)` sums `f(p)` over `p <= N`; `S_I(N)` and `S_II(N)` sum `f_I(p)` and
//! `f_II(p)` over `5 <= p < N`. The primes 2 and 3 enter `S` only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;
use thiserror::Error;

use crate::enumerate::{EnumerateError, Enumerator, Method, MAX_N};
use crate::primes::{primes_in_range, PrimesError};

/// Integers per shard; shard boundaries are multiples of this width.
pub const SHARD_WIDTH: u64 = 10_000;

pub const CHECKPOINT_VERSION: &str = "ESTRAUS-CKPT v1";
pub const RECORD_HEADER: &str = "p,f_ordered,typeI_ordered,typeII_ordered";
pub const SERIES_HEADER: &str = "N,S,S_I,S_II";
pub const PER_PRIME_HEADER: &str = "p,f_ordered,typeI_ordered,typeII_ordered,classified";

#[derive(Debug, Error)]
pub enum SumsError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("invalid grid '{spec}': {reason}")]
    Grid { spec: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt checkpoint {path} at line {line}: {reason}")]
    CorruptCheckpoint {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("malformed sum series at line {line}: {reason}")]
    Series { line: usize, reason: String },
    #[error("sweep interrupted after {completed} new shard(s)")]
    Interrupted { completed: usize },
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Primes(#[from] PrimesError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SumsError + '_ {
    move |source| SumsError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Counts for a single prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerPrimeRecord {
    pub p: u64,
    pub f_ordered: u64,
    /// Zero when `p < 5`.
    pub type_i_ordered: u64,
    /// Zero when `p < 5`.
    pub type_ii_ordered: u64,
}

impl PerPrimeRecord {
    /// False for 2 and 3, where the Type I/II dichotomy does not apply.
    pub fn classified(&self) -> bool {
        self.p >= 5
    }

    fn check(&self) -> Result<(), String> {
        if !self.classified() {
            if self.type_i_ordered != 0 || self.type_ii_ordered != 0 {
                return Err(format!("p = {} carries type counts", self.p));
            }
            return Ok(());
        }
        if self.type_i_ordered + self.type_ii_ordered != self.f_ordered {
            return Err(format!(
                "p = {}: {} + {} != {}",
                self.p, self.type_i_ordered, self.type_ii_ordered, self.f_ordered
            ));
        }
        if !self.type_i_ordered.is_multiple_of(3) || !self.type_ii_ordered.is_multiple_of(3) {
            return Err(format!("p = {}: type counts not divisible by 3", self.p));
        }
        Ok(())
    }
}

/// One grid point of the cumulative series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumRow {
    pub n: u64,
    pub s: u64,
    pub s_i: u64,
    pub s_ii: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SumSeries {
    pub rows: Vec<SumRow>,
}

impl SumSeries {
    pub fn grid(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.n).collect()
    }

    /// Accumulates `records` (sorted by `p`) at each grid point.
    pub fn from_records(records: &[PerPrimeRecord], grid: &[u64]) -> Self {
        let mut rows = Vec::with_capacity(grid.len());
        let (mut s, mut s_i, mut s_ii) = (0u64, 0u64, 0u64);
        // `inclusive` walks p <= N for S; `strict` walks p < N for the type sums.
        let (mut inclusive, mut strict) = (0, 0);
        for &n in grid {
            while inclusive < records.len() && records[inclusive].p <= n {
                s += records[inclusive].f_ordered;
                inclusive += 1;
            }
            while strict < records.len() && records[strict].p < n {
                let r = &records[strict];
                if r.classified() {
                    s_i += r.type_i_ordered / 3;
                    s_ii += r.type_ii_ordered / 3;
                }
                strict += 1;
            }
            rows.push(SumRow { n, s, s_i, s_ii });
        }
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SERIES_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.s, r.s_i, r.s_ii);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SumsError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == SERIES_HEADER => {}
            _ => {
                return Err(SumsError::Series {
                    line: 1,
                    reason: format!("expected header '{SERIES_HEADER}'"),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let err = |reason: String| SumsError::Series {
                line: i + 1,
                reason,
            };
            let fields = parse_u64_fields(line, 4).map_err(err)?;
            let row = SumRow {
                n: fields[0],
                s: fields[1],
                s_i: fields[2],
                s_ii: fields[3],
            };
            if let Some(prev) = rows.last() {
                let prev: &SumRow = prev;
                if row.n <= prev.n || row.s < prev.s || row.s_i < prev.s_i || row.s_ii < prev.s_ii {
                    return Err(err("rows must be increasing in N and nondecreasing".into()));
                }
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }
}

fn parse_u64_fields(line: &str, expected: usize) -> Result<Vec<u64>, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(format!(
            "expected {expected} fields, found {}",
            fields.len()
        ));
    }
    fields
        .iter()
        .map(|f| f.parse::<u64>().map_err(|e| format!("'{f}': {e}")))
        .collect()
}

/// Result of a completed sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    /// Every prime `<= n_max`, increasing.
    pub records: Vec<PerPrimeRecord>,
    pub series: SumSeries,
}

impl Sweep {
    pub fn per_prime_csv(&self) -> String {
        let mut out = String::from(PER_PRIME_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.p,
                r.f_ordered,
                r.type_i_ordered,
                r.type_ii_ordered,
                r.classified()
            );
        }
        out
    }
}

/// A completed prime range `[lo, hi)` and the records of every prime in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointBlock {
    pub lo: u64,
    pub hi: u64,
    pub records: Vec<PerPrimeRecord>,
}

impl CheckpointBlock {
    fn render(&self) -> String {
        let mut out = format!("range {} {}\n{RECORD_HEADER}\n", self.lo, self.hi);
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.p, r.f_ordered, r.type_i_ordered, r.type_ii_ordered
            );
        }
        out
    }
}

/// Checkpoint contents: the enumeration method and completed blocks, sorted
/// by range start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub method: Method,
    pub blocks: Vec<CheckpointBlock>,
}

impl Checkpoint {
    pub fn empty(method: Method) -> Self {
        Self {
            method,
            blocks: Vec::new(),
        }
    }

    fn preamble(method: Method) -> String {
        format!("{CHECKPOINT_VERSION}\nmethod {method}\n")
    }

    /// Parses and validates checkpoint text. `None` for an empty file.
    pub fn parse(text: &str, path: &Path) -> Result<Option<Self>, SumsError> {
        if text.is_empty() {
            return Ok(None);
        }
        let corrupt = |line: usize, reason: String| SumsError::CorruptCheckpoint {
            path: path.to_path_buf(),
            line,
            reason,
        };
        if !text.ends_with('\n') {
            return Err(corrupt(text.lines().count(), "truncated final line".into()));
        }
        let lines: Vec<&str> = text.lines().collect();
        if lines[0] != CHECKPOINT_VERSION {
            return Err(corrupt(
                1,
                format!("expected version line '{CHECKPOINT_VERSION}'"),
            ));
        }
        let method = lines
            .get(1)
            .and_then(|l| l.strip_prefix("method "))
            .ok_or_else(|| corrupt(2, "missing method line".into()))?
            .parse::<Method>()
            .map_err(|e| corrupt(2, e))?;
        let mut blocks: Vec<CheckpointBlock> = Vec::new();
        let mut i = 2;
        while i < lines.len() {
            let (lo, hi) = lines[i]
                .strip_prefix("range ")
                .and_then(|r| r.split_once(' '))
                .and_then(|(a, b)| Some((a.parse::<u64>().ok()?, b.parse::<u64>().ok()?)))
                .ok_or_else(|| {
                    corrupt(
                        i + 1,
                        format!("expected 'range LO HI', found '{}'", lines[i]),
                    )
                })?;
            if lo < 2 || lo >= hi || hi > MAX_N {
                return Err(corrupt(i + 1, format!("invalid range [{lo}, {hi})")));
            }
            if lines.get(i + 1) != Some(&RECORD_HEADER) {
                return Err(corrupt(i + 2, format!("expected header '{RECORD_HEADER}'")));
            }
            i += 2;
            let mut records = Vec::new();
            while i < lines.len() && !lines[i].starts_with("range ") {
                let f = parse_u64_fields(lines[i], 4).map_err(|e| corrupt(i + 1, e))?;
                let record = PerPrimeRecord {
                    p: f[0],
                    f_ordered: f[1],
                    type_i_ordered: f[2],
                    type_ii_ordered: f[3],
                };
                record.check().map_err(|e| corrupt(i + 1, e))?;
                records.push(record);
                i += 1;
            }
            let expected = primes_in_range(lo, hi)?.primes;
            if records.iter().map(|r| r.p).ne(expected.iter().copied()) {
                return Err(corrupt(
                    i,
                    format!("block [{lo}, {hi}) does not list exactly its primes"),
                ));
            }
            blocks.push(CheckpointBlock { lo, hi, records });
        }
        blocks.sort_by_key(|b| b.lo);
        for w in blocks.windows(2) {
            if w[0].hi > w[1].lo {
                return Err(corrupt(
                    0,
                    format!(
                        "ranges [{}, {}) and [{}, {}) overlap",
                        w[0].lo, w[0].hi, w[1].lo, w[1].hi
                    ),
                ));
            }
        }
        Ok(Some(Checkpoint { method, blocks }))
    }

    /// Uncovered parts of `[2, end)`, split at multiples of `width`.
    pub fn pending_shards(&self, end: u64, width: u64) -> Vec<(u64, u64)> {
        let mut gaps = Vec::new();
        let mut cursor = 2;
        for b in &self.blocks {
            if b.lo > cursor {
                gaps.push((cursor, b.lo.min(end)));
            }
            cursor = cursor.max(b.hi);
            if cursor >= end {
                break;
            }
        }
        if cursor < end {
            gaps.push((cursor, end));
        }
        let mut shards = Vec::new();
        for (lo, hi) in gaps {
            if lo >= hi {
                continue;
            }
            let mut start = lo;
            while start < hi {
                let stop = ((start / width + 1) * width).min(hi);
                shards.push((start, stop));
                start = stop;
            }
        }
        shards
    }
}

/// Loads the state to continue from. A missing or empty file yields `None`
/// (start from scratch).
pub fn resume(path: &Path) -> Result<Option<Checkpoint>, SumsError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    Checkpoint::parse(&text, path)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_max: u64,
    /// Increasing, each in `[2, n_max]`. Empty means `[n_max]`.
    pub grid: Vec<u64>,
    pub workers: usize,
    pub checkpoint: Option<PathBuf>,
    pub method: Method,
    pub shard_width: u64,
    /// Stop with [`SumsError::Interrupted`] after this many new shards have
    /// been checkpointed.
    pub stop_after: Option<usize>,
}

impl SweepConfig {
    pub fn new(n_max: u64) -> Self {
        Self {
            n_max,
            grid: Vec::new(),
            workers: 1,
            checkpoint: None,
            method: Method::Divisor,
            shard_width: SHARD_WIDTH,
            stop_after: None,
        }
    }

    fn validate(&self) -> Result<Vec<u64>, SumsError> {
        if self.n_max < 2 || self.n_max >= MAX_N {
            return Err(SumsError::Config(format!(
                "N_max = {} outside [2, 2^31)",
                self.n_max
            )));
        }
        if self.workers == 0 {
            return Err(SumsError::Config("workers must be positive".into()));
        }
        if self.shard_width == 0 {
            return Err(SumsError::Config("shard width must be positive".into()));
        }
        let grid = if self.grid.is_empty() {
            vec![self.n_max]
        } else {
            self.grid.clone()
        };
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SumsError::Config("grid must be strictly increasing".into()));
        }
        if grid[0] < 2 || *grid.last().unwrap() > self.n_max {
            return Err(SumsError::Config(format!(
                "grid values must lie in [2, {}]",
                self.n_max
            )));
        }
        Ok(grid)
    }
}

/// Computes the records of every prime in `[lo, hi)`.
pub fn compute_block(
    engine: &Enumerator,
    method: Method,
    lo: u64,
    hi: u64,
) -> Result<CheckpointBlock, SumsError> {
    let primes = primes_in_range(lo, hi)?.primes;
    let split_at = primes.partition_point(|&p| p < 5);
    let mut records = Vec::with_capacity(primes.len());
    for &p in &primes[..split_at] {
        let count = engine.count_solutions(p, method)?;
        records.push(PerPrimeRecord {
            p,
            f_ordered: count.ordered,
            type_i_ordered: 0,
            type_ii_ordered: 0,
        });
    }
    let classified = &primes[split_at..];
    let splits = match method {
        Method::Divisor => engine.type_counts_batch(classified)?,
        Method::Naive => classified
            .iter()
            .map(|&p| engine.type_counts(p, Method::Naive))
            .collect::<Result<_, _>>()?,
    };
    records.extend(splits.into_iter().map(|s| PerPrimeRecord {
        p: s.p,
        f_ordered: s.ordered(),
        type_i_ordered: s.type_i_ordered,
        type_ii_ordered: s.type_ii_ordered,
    }));
    Ok(CheckpointBlock { lo, hi, records })
}

struct CheckpointWriter {
    path: PathBuf,
    file: File,
}

impl CheckpointWriter {
    fn open(path: &Path, method: Method, fresh: bool) -> Result<Self, SumsError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        if fresh {
            file.set_len(0).map_err(io_err(path))?;
            file.write_all(Checkpoint::preamble(method).as_bytes())
                .and_then(|_| file.flush())
                .map_err(io_err(path))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    fn append(&mut self, block: &CheckpointBlock) -> Result<(), SumsError> {
        self.file
            .write_all(block.render().as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(io_err(&self.path))
    }
}

/// Runs (or continues, when the checkpoint file holds earlier progress) the
/// sweep over all primes `<= n_max`. Output is independent of the worker
/// count and of how the work was split across interrupted runs.
pub fn sweep(config: &SweepConfig) -> Result<Sweep, SumsError> {
    let grid = config.validate()?;
    let end = config.n_max + 1;

    let previous = match &config.checkpoint {
        Some(path) => resume(path)?,
        None => None,
    };
    if let (Some(prev), Some(path)) = (&previous, &config.checkpoint) {
        if prev.method != config.method {
            return Err(SumsError::CorruptCheckpoint {
                path: path.clone(),
                line: 2,
                reason: format!(
                    "checkpoint method {} does not match requested {}",
                    prev.method, config.method
                ),
            });
        }
    }
    let state = previous
        .clone()
        .unwrap_or_else(|| Checkpoint::empty(config.method));
    let mut writer = match &config.checkpoint {
        Some(path) => Some(CheckpointWriter::open(
            path,
            config.method,
            previous.is_none(),
        )?),
        None => None,
    };

    let mut blocks: BTreeMap<u64, CheckpointBlock> =
        state.blocks.iter().map(|b| (b.lo, b.clone())).collect();
    let shards = state.pending_shards(end, config.shard_width);

    let engine = Enumerator::for_max_n(config.n_max);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| SumsError::Config(format!("cannot start worker pool: {e}")))?;
    let stop = AtomicBool::new(false);
    let mut completed = 0usize;
    let mut failure: Option<SumsError> = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        let (engine, stop, shards, pool) = (&engine, &stop, &shards, &pool);
        scope.spawn(move || {
            pool.install(|| {
                shards.par_iter().for_each_with(tx, |tx, &(lo, hi)| {
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    let _ = tx.send(compute_block(engine, config.method, lo, hi));
                });
            });
        });
        // Single aggregator: the only writer of the checkpoint file.
        for result in rx {
            let appended = result.and_then(|block| {
                if let Some(w) = writer.as_mut() {
                    w.append(&block)?;
                }
                blocks.insert(block.lo, block);
                Ok(())
            });
            if let Err(e) = appended {
                failure.get_or_insert(e);
                stop.store(true, Ordering::Relaxed);
                break;
            }
            completed += 1;
            if config.stop_after.is_some_and(|limit| completed >= limit) && completed < shards.len()
            {
                stop.store(true, Ordering::Relaxed);
                break;
            }
        }
    });

    if let Some(e) = failure {
        return Err(e);
    }
    if completed < shards.len() {
        return Err(SumsError::Interrupted { completed });
    }

    let records: Vec<PerPrimeRecord> = blocks
        .into_values()
        .flat_map(|b| b.records)
        .filter(|r| r.p <= config.n_max)
        .collect();
    let series = SumSeries::from_records(&records, &grid);
    Ok(Sweep { records, series })
}

/// Parses `log:LO..HI` (powers of ten `10^LO ..= 10^HI`) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<u64>, SumsError> {
    let err = |reason: &str| SumsError::Grid {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let grid: Vec<u64> = if let Some(range) = spec.strip_prefix("log:") {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| err("expected log:LO..HI"))?;
        let lo: u32 = lo.trim().parse().map_err(|_| err("bad lower exponent"))?;
        let hi: u32 = hi.trim().parse().map_err(|_| err("bad upper exponent"))?;
        if lo > hi || hi > 18 {
            return Err(err("exponents must satisfy LO <= HI <= 18"));
        }
        (lo..=hi).map(|k| 10u64.pow(k)).collect()
    } else {
        spec.split(',')
            .map(|v| v.trim().parse::<u64>().map_err(|_| err("bad integer")))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(err("empty grid"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(err("values must be strictly increasing"));
    }
    Ok(grid)
}
