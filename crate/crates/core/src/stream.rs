//! Stream data model: observations, the sliding window with per-dimension
//! rank indices, subspaces, and CSV ingestion.

use std::collections::VecDeque;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One d-dimensional observation of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    /// 1-based arrival index.
    pub time_index: u64,
    /// Ground-truth outlier flag, if known. Used only for evaluation.
    pub label: Option<bool>,
}

impl Observation {
    pub fn new(values: Vec<f64>, time_index: u64) -> Self {
        Observation {
            values,
            time_index,
            label: None,
        }
    }

    pub fn with_label(values: Vec<f64>, time_index: u64, label: bool) -> Self {
        Observation {
            values,
            time_index,
            label: Some(label),
        }
    }
}

/// A non-empty set of dimension indices, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subspace {
    dims: Vec<usize>,
}

impl Subspace {
    /// Builds a subspace from the given dimensions; duplicates are dropped.
    pub fn new(dims: impl IntoIterator<Item = usize>) -> Self {
        let mut dims: Vec<usize> = dims.into_iter().collect();
        dims.sort_unstable();
        dims.dedup();
        assert!(!dims.is_empty(), "subspace cannot be empty");
        Subspace { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, dim: usize) -> bool {
        self.dims.binary_search(&dim).is_ok()
    }

    pub fn max_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Returns this subspace extended by `dim`.
    pub fn with(&self, dim: usize) -> Self {
        let mut dims = self.dims.clone();
        if let Err(pos) = dims.binary_search(&dim) {
            dims.insert(pos, dim);
        }
        Subspace { dims }
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "}}")
    }
}

/// The per-dimension subspace assignment maintained over time.
///
/// Entry `i` always contains dimension `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceMap {
    entries: Vec<Subspace>,
}

impl SubspaceMap {
    pub fn new(entries: Vec<Subspace>) -> Self {
        for (i, s) in entries.iter().enumerate() {
            assert!(s.contains(i), "map entry {i} must contain dimension {i}");
        }
        SubspaceMap { entries }
    }

    pub fn dims(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, dim: usize) -> &Subspace {
        &self.entries[dim]
    }

    pub fn set(&mut self, dim: usize, subspace: Subspace) {
        assert!(subspace.contains(dim));
        self.entries[dim] = subspace;
    }

    pub fn entries(&self) -> &[Subspace] {
        &self.entries
    }
}

/// Sliding window over the `w` most recent observations, with an incrementally
/// maintained rank index per dimension.
///
/// `rank_index(i)` lists buffer positions (0 = oldest) in ascending order of
/// the column-i value; ties are broken by buffer position, i.e. insertion
/// order. The index after any sequence of pushes equals a stable re-sort of
/// the retained column.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    capacity: usize,
    dims: usize,
    columns: Vec<VecDeque<f64>>,
    times: VecDeque<u64>,
    rank_index: Vec<Vec<u32>>,
}

impl SlidingWindow {
    pub fn new(capacity: usize, dims: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        assert!(dims > 0, "dimensionality must be positive");
        SlidingWindow {
            capacity,
            dims,
            columns: (0..dims).map(|_| VecDeque::with_capacity(capacity + 1)).collect(),
            times: VecDeque::with_capacity(capacity + 1),
            rank_index: (0..dims).map(|_| Vec::with_capacity(capacity + 1)).collect(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.times.len() == self.capacity
    }

    /// Value of dimension `dim` at buffer position `pos` (0 = oldest).
    pub fn value(&self, pos: usize, dim: usize) -> f64 {
        self.columns[dim][pos]
    }

    /// Arrival time of the observation at buffer position `pos`.
    pub fn time(&self, pos: usize) -> u64 {
        self.times[pos]
    }

    /// Buffer positions sorted ascending by the value of `dim`.
    pub fn rank_index(&self, dim: usize) -> &[u32] {
        &self.rank_index[dim]
    }

    /// Appends an observation, evicting the oldest one once full.
    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if obs.values.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: obs.values.len(),
            });
        }
        if let Some((dim, &value)) = obs.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { dim, value });
        }

        if self.is_full() {
            self.times.pop_front();
            for dim in 0..self.dims {
                self.columns[dim].pop_front();
                // Drop the evicted position 0 and shift the rest down.
                let ranks = &mut self.rank_index[dim];
                let mut write = 0;
                for read in 0..ranks.len() {
                    let r = ranks[read];
                    if r != 0 {
                        ranks[write] = r - 1;
                        write += 1;
                    }
                }
                ranks.truncate(write);
            }
        }

        let pos = self.times.len() as u32;
        self.times.push_back(obs.time_index);
        for (dim, &v) in obs.values.iter().enumerate() {
            let column = &mut self.columns[dim];
            column.push_back(v);
            let ranks = &mut self.rank_index[dim];
            // New value sorts after all equal values: its position is the newest.
            let at = ranks.partition_point(|&r| column[r as usize] <= v);
            ranks.insert(at, pos);
        }
        Ok(())
    }

    /// The buffer restricted to `subspace`, row order preserved.
    pub fn project(&self, subspace: &Subspace) -> Result<Vec<Vec<f64>>> {
        if subspace.max_dim() >= self.dims {
            return Err(Error::DimensionOutOfRange {
                dim: subspace.max_dim(),
                d: self.dims,
            });
        }
        let n = self.len();
        let mut rows = Vec::with_capacity(n);
        for pos in 0..n {
            rows.push(subspace.dims().iter().map(|&d| self.columns[d][pos]).collect());
        }
        Ok(rows)
    }

    /// Column `dim` in rank order, i.e. sorted ascending.
    pub fn sorted_column(&self, dim: usize) -> Vec<f64> {
        self.rank_index[dim]
            .iter()
            .map(|&pos| self.columns[dim][pos as usize])
            .collect()
    }
}

/// Streaming CSV reader: header row required, all cells numeric, optional
/// 0/1 label column excluded from the values.
pub struct CsvStream {
    path: PathBuf,
    reader: std::io::Lines<BufReader<File>>,
    header: Vec<String>,
    label_index: Option<usize>,
    next_time: u64,
}

impl CsvStream {
    pub fn open(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let mut reader = BufReader::new(file).lines();
        let header_line = match reader.next() {
            Some(line) => line.map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?,
            None => {
                return Err(Error::Csv {
                    path,
                    row: 0,
                    column: String::new(),
                    message: "missing header row".into(),
                })
            }
        };
        let header: Vec<String> = header_line
            .trim_end_matches(['\r', '\n'])
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let label_index = match label_column {
            Some(name) => Some(
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::UnknownLabelColumn(name.to_string()))?,
            ),
            None => None,
        };
        Ok(CsvStream {
            path,
            reader,
            header,
            label_index,
            next_time: 1,
        })
    }

    /// Column names, label column included.
    pub fn header(&self) -> &[String] {
        &self.header
    }

    /// Number of feature dimensions (header width minus the label column).
    pub fn dims(&self) -> usize {
        self.header.len() - usize::from(self.label_index.is_some())
    }

    fn parse_line(&self, line: &str, row: usize) -> Result<Observation> {
        let cells: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        if cells.len() != self.header.len() {
            return Err(Error::Csv {
                path: self.path.clone(),
                row,
                column: String::new(),
                message: format!("expected {} cells, got {}", self.header.len(), cells.len()),
            });
        }
        let mut values = Vec::with_capacity(self.dims());
        let mut label = None;
        for (col, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            if Some(col) == self.label_index {
                label = Some(match cell {
                    "0" => false,
                    "1" => true,
                    _ => {
                        return Err(Error::Csv {
                            path: self.path.clone(),
                            row,
                            column: self.header[col].clone(),
                            message: format!("label cell {cell:?} is not 0 or 1"),
                        })
                    }
                });
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Csv {
                    path: self.path.clone(),
                    row,
                    column: self.header[col].clone(),
                    message: format!("cell {cell:?} is not numeric"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        path: self.path.clone(),
                        row,
                        column: self.header[col].clone(),
                        message: format!("cell {cell:?} is not finite"),
                    });
                }
                values.push(v);
            }
        }
        Ok(Observation {
            values,
            time_index: self.next_time,
            label,
        })
    }
}

impl Iterator for CsvStream {
    type Item = Result<Observation>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.reader.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(Error::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let row = self.next_time as usize;
            let obs = self.parse_line(&line, row);
            if obs.is_ok() {
                self.next_time += 1;
            }
            return Some(obs);
        }
    }
}

/// Reads a whole CSV file into memory. See [`CsvStream`] for the format.
pub fn read_csv_stream(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Vec<Observation>> {
    CsvStream::open(path, label_column)?.collect()
}
