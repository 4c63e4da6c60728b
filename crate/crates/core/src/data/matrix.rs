use std::io::{BufRead, BufReader, Read, Write};

use super::InteractionSet;
use crate::error::{Error, Result};

/// Binary 0/1 interaction matrix in compressed sparse row layout, with the
/// transposed (per-object) layout kept alongside for object-side sweeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotEncoding {
    #[default]
    Text,
    Binary,
}

const BINARY_MAGIC: &[u8; 8] = b"RGCSR001";

fn compress(n_outer: usize, pairs: impl Iterator<Item = (u32, u32)>, nnz: usize) -> (Vec<usize>, Vec<u32>) {
    let pairs: Vec<(u32, u32)> = pairs.collect();
    let mut ptr = vec![0usize; n_outer + 1];
    for &(a, _) in &pairs {
        ptr[a as usize + 1] += 1;
    }
    for i in 0..n_outer {
        ptr[i + 1] += ptr[i];
    }
    let mut fill = ptr.clone();
    let mut idx = vec![0u32; nnz];
    for &(a, b) in &pairs {
        idx[fill[a as usize]] = b;
        fill[a as usize] += 1;
    }
    for i in 0..n_outer {
        idx[ptr[i]..ptr[i + 1]].sort_unstable();
    }
    (ptr, idx)
}

impl InteractionMatrix {
    fn from_pairs(n_rows: usize, n_cols: usize, pairs: &[(u32, u32)]) -> Self {
        let nnz = pairs.len();
        let (row_ptr, col_idx) = compress(n_rows, pairs.iter().copied(), nnz);
        let (col_ptr, row_idx) = compress(n_cols, pairs.iter().map(|&(x, y)| (y, x)), nnz);
        InteractionMatrix { n_rows, n_cols, row_ptr, col_idx, col_ptr, row_idx }
    }

    /// M, the number of contexts.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// N, the number of objects.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// |D|.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Sorted positive objects I_x of context `x`.
    pub fn row(&self, x: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[x]..self.row_ptr[x + 1]]
    }

    /// Sorted contexts that interacted with object `y`.
    pub fn col(&self, y: usize) -> &[u32] {
        &self.row_idx[self.col_ptr[y]..self.col_ptr[y + 1]]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.row_ptr[x + 1] - self.row_ptr[x]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_rows).map(|x| self.degree(x)).collect()
    }

    pub fn contains(&self, x: usize, y: u32) -> bool {
        self.row(x).binary_search(&y).is_ok()
    }

    pub fn to_set(&self) -> InteractionSet {
        let entries = (0..self.n_rows)
            .flat_map(|x| self.row(x).iter().map(move |&y| (x as u32, y)))
            .collect();
        InteractionSet::new(self.n_rows, self.n_cols, entries).expect("matrix ids are in range")
    }

    /// Text snapshot: header `M N |D|`, then one line per context listing its
    /// sorted object ids (an empty line for a context without positives).
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for x in 0..self.n_rows {
            let row: Vec<String> = self.row(x).iter().map(u32::to_string).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// Binary snapshot: magic, little-endian u64 `M N |D|`, the M+1 row
    /// offsets as u64, then the column indices as u32.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        for v in [self.n_rows, self.n_cols, self.nnz()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for &p in &self.row_ptr {
            w.write_all(&(p as u64).to_le_bytes())?;
        }
        for &c in &self.col_idx {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn write_snapshot<W: Write>(&self, w: W, encoding: SnapshotEncoding) -> Result<()> {
        match encoding {
            SnapshotEncoding::Text => self.write_text(w),
            SnapshotEncoding::Binary => self.write_binary(w),
        }
    }

    /// Reads either snapshot encoding, detected from the leading bytes.
    pub fn read_snapshot<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        if r.fill_buf()?.starts_with(BINARY_MAGIC) {
            Self::read_binary(r)
        } else {
            Self::read_text(r)
        }
    }

    fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse { line, message: msg.to_string() };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(1, "header must be 'M N |D|'")))
            .collect::<Result<_>>()?;
        let [m, n, nnz] = dims[..] else {
            return Err(bad(1, "header must be 'M N |D|'"));
        };
        let mut pairs = Vec::with_capacity(nnz);
        for x in 0..m {
            let line = lines.next().ok_or_else(|| bad(x + 2, "missing context row"))??;
            for t in line.split_whitespace() {
                let y: u32 = t.parse().map_err(|_| bad(x + 2, "bad object id"))?;
                if y as usize >= n {
                    return Err(bad(x + 2, "object id out of range"));
                }
                pairs.push((x as u32, y));
            }
        }
        if pairs.len() != nnz {
            return Err(bad(1, "row contents disagree with |D| in header"));
        }
        Ok(Self::from_pairs(m, n, &pairs))
    }

    fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        let mut u64_buf = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<usize> {
            r.read_exact(&mut u64_buf)?;
            Ok(u64::from_le_bytes(u64_buf) as usize)
        };
        let (m, n, nnz) = (next_u64(&mut r)?, next_u64(&mut r)?, next_u64(&mut r)?);
        let row_ptr = (0..=m).map(|_| next_u64(&mut r)).collect::<Result<Vec<_>>>()?;
        let mut col_idx = Vec::with_capacity(nnz);
        let mut b4 = [0u8; 4];
        for _ in 0..nnz {
            r.read_exact(&mut b4)?;
            col_idx.push(u32::from_le_bytes(b4));
        }
        if row_ptr.last() != Some(&nnz) {
            return Err(Error::Parse { line: 0, message: "row offsets disagree with |D|".into() });
        }
        let mut pairs = Vec::with_capacity(nnz);
        for x in 0..m {
            for &y in &col_idx[row_ptr[x]..row_ptr[x + 1]] {
                if y as usize >= n {
                    return Err(Error::Parse { line: 0, message: "object id out of range".into() });
                }
                pairs.push((x as u32, y));
            }
        }
        Ok(Self::from_pairs(m, n, &pairs))
    }
}

/// Builds the compressed row layout of a training set.
pub fn build_matrix(train: &InteractionSet) -> Result<InteractionMatrix> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(InteractionMatrix::from_pairs(train.n_contexts(), train.n_objects(), train.entries()))
}
