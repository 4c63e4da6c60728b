//! Matrix-factorization model `O = P Qᵀ` and its snapshot file format.

use std::io::{BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Two row-major factor matrices: P (M×K) for contexts and Q (N×K) for objects.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    m: usize,
    n: usize,
    k: usize,
    p: Vec<f64>,
    q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in [-scale, scale].
    Uniform(f64),
    /// Zero-mean normal with standard deviation sigma.
    Gaussian(f64),
}

impl Default for Init {
    fn default() -> Self {
        Init::Uniform(0.01)
    }
}

const BINARY_MAGIC: &[u8; 8] = b"RGFACT01";

impl FactorModel {
    pub fn zeros(m: usize, n: usize, k: usize) -> Self {
        FactorModel { m, n, k, p: vec![0.0; m * k], q: vec![0.0; n * k] }
    }

    pub fn from_parts(m: usize, n: usize, k: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::precondition("embedding dimension K must be >= 1"));
        }
        if p.len() != m * k || q.len() != n * k {
            return Err(Error::dims(format!(
                "factor buffers of length {}/{} do not match {m}x{k} and {n}x{k}",
                p.len(),
                q.len()
            )));
        }
        if let Some(i) = p.iter().chain(&q).position(|v| !v.is_finite()) {
            return Err(Error::InvalidScore { index: i });
        }
        Ok(FactorModel { m, n, k, p, q })
    }

    /// Random initialization; P is drawn before Q from one seeded stream.
    pub fn init(m: usize, n: usize, k: usize, init: Init, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::precondition("embedding dimension K must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |len: usize| -> Result<Vec<f64>> {
            Ok(match init {
                Init::Uniform(s) => (0..len).map(|_| rng.random_range(-s..=s)).collect(),
                Init::Gaussian(sigma) => {
                    let d = Normal::new(0.0, sigma)
                        .map_err(|e| Error::config(format!("bad gaussian init: {e}")))?;
                    (0..len).map(|_| d.sample(&mut rng)).collect()
                }
            })
        };
        let p = draw(m * k)?;
        let q = draw(n * k)?;
        Ok(FactorModel { m, n, k, p, q })
    }

    pub fn n_contexts(&self) -> usize {
        self.m
    }

    pub fn n_objects(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p_mut(&mut self) -> &mut [f64] {
        &mut self.p
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    /// Both factor buffers at once, (P, Q).
    pub fn factors_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.p, &mut self.q)
    }

    pub fn p_row(&self, x: usize) -> &[f64] {
        &self.p[x * self.k..(x + 1) * self.k]
    }

    pub fn q_row(&self, y: usize) -> &[f64] {
        &self.q[y * self.k..(y + 1) * self.k]
    }

    pub fn p_row_mut(&mut self, x: usize) -> &mut [f64] {
        &mut self.p[x * self.k..(x + 1) * self.k]
    }

    pub fn q_row_mut(&mut self, y: usize) -> &mut [f64] {
        &mut self.q[y * self.k..(y + 1) * self.k]
    }

    pub fn score(&self, x: usize, y: usize) -> f64 {
        dot(self.p_row(x), self.q_row(y))
    }

    /// Score row o^{(x)} = P_x Qᵀ.
    pub fn scores(&self, x: usize) -> Vec<f64> {
        let px = self.p_row(x);
        (0..self.n).map(|y| dot(px, self.q_row(y))).collect()
    }

    /// The model of the transposed problem (P and Q swapped).
    pub fn transposed(&self) -> FactorModel {
        FactorModel { m: self.n, n: self.m, k: self.k, p: self.q.clone(), q: self.p.clone() }
    }

    /// ‖P‖²_F + ‖Q‖²_F.
    pub fn squared_norm(&self) -> f64 {
        dot(&self.p, &self.p) + dot(&self.q, &self.q)
    }

    /// Text snapshot: header `M N K`, then M lines of P rows and N lines of Q rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.m, self.n, self.k)?;
        for row in self.p.chunks(self.k).chain(self.q.chunks(self.k)) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        Ok(())
    }

    /// Binary snapshot: magic, little-endian u64 `M N K`, then P and Q as f64 rows.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        for v in [self.m, self.n, self.k] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for v in self.p.iter().chain(&self.q) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads either snapshot encoding, detected from the leading bytes.
    pub fn read_snapshot<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        if r.fill_buf()?.starts_with(BINARY_MAGIC) {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            let mut dims = [0usize; 3];
            for d in &mut dims {
                r.read_exact(&mut buf)?;
                *d = u64::from_le_bytes(buf) as usize;
            }
            let [m, n, k] = dims;
            let mut vals = Vec::with_capacity((m + n) * k);
            for _ in 0..(m + n) * k {
                r.read_exact(&mut buf)?;
                vals.push(f64::from_le_bytes(buf));
            }
            let q = vals.split_off(m * k);
            return FactorModel::from_parts(m, n, k, vals, q);
        }

        let bad = |line: usize, msg: &str| Error::Parse { line, message: msg.to_string() };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(1, "header must be 'M N K'")))
            .collect::<Result<_>>()?;
        let [m, n, k] = dims[..] else {
            return Err(bad(1, "header must be 'M N K'"));
        };
        let mut vals = Vec::with_capacity((m + n) * k);
        for i in 0..m + n {
            let line = lines.next().ok_or_else(|| bad(i + 2, "missing factor row"))??;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(i + 2, "bad number")))
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(bad(i + 2, "row length differs from K"));
            }
            vals.extend(row);
        }
        let q = vals.split_off(m * k);
        FactorModel::from_parts(m, n, k, vals, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = FactorModel::init(5, 4, 3, Init::Uniform(0.01), 7).unwrap();
        let b = FactorModel::init(5, 4, 3, Init::Uniform(0.01), 7).unwrap();
        assert_eq!(a, b);
        assert!(a.p().iter().chain(a.q()).all(|v| v.abs() <= 0.01));
        assert_ne!(a, FactorModel::init(5, 4, 3, Init::Uniform(0.01), 8).unwrap());
        assert!(FactorModel::init(1, 1, 0, Init::default(), 0).is_err());
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let model = FactorModel::init(3, 2, 4, Init::Gaussian(1.0), 1).unwrap();
        let mut text = Vec::new();
        model.write_text(&mut text).unwrap();
        assert_eq!(FactorModel::read_snapshot(&text[..]).unwrap(), model);
        let mut bin = Vec::new();
        model.write_binary(&mut bin).unwrap();
        assert_eq!(FactorModel::read_snapshot(&bin[..]).unwrap(), model);
    }

    #[test]
    fn scores_are_row_products() {
        let model = FactorModel::from_parts(1, 2, 2, vec![1.0, 2.0], vec![3.0, 4.0, -1.0, 0.5]).unwrap();
        assert_eq!(model.scores(0), vec![11.0, 0.0]);
    }
}
