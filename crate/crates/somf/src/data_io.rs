//! Dataset ingestion, synthetic generation, patch extraction and
//! train/test splitting.
//!
//! On-disk formats: a small binary matrix container (column-major f64,
//! bit-exact round trip), CSV with one matrix row per line, and binary PGM
//! (P5) images for patch extraction.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use somf_core::enet_projection;

/// Binary container layout: magic, one version byte, `p` and `n` as 64-bit
/// little-endian unsigned, then `p·n` little-endian f64 values column-major.
const MAGIC: &[u8; 4] = b"DMAT";
const VERSION: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("file truncated: expected {expected} bytes of values, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension overflow: {0} x {1} values do not fit in memory arithmetic")]
    DimOverflow(u64, u64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] somf_core::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

/// Dense p×n data matrix, columns are samples. Always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMatrix {
    pub values: Array2<f64>,
}

impl DatasetMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(DataError::Invalid("matrix must be at least 1x1".into()));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFinite { row: i, col: j });
            }
        }
        Ok(DatasetMatrix { values })
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    /// Optional preprocessing: subtract each column's mean and/or scale
    /// each column to unit l2 norm. Off by default everywhere.
    pub fn preprocess_columns(&mut self, center: bool, normalize: bool) {
        for mut col in self.values.axis_iter_mut(Axis(1)) {
            if center {
                let mean = col.sum() / col.len() as f64;
                col.mapv_inplace(|v| v - mean);
            }
            if normalize {
                let norm = col.dot(&col).sqrt();
                if norm > 0.0 {
                    col.mapv_inplace(|v| v / norm);
                }
            }
        }
    }
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DatasetMatrix> {
    match format {
        MatrixFormat::Binary => load_binary(path),
        MatrixFormat::Csv => load_csv(path),
    }
}

pub fn save_matrix(path: &Path, m: &DatasetMatrix, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Binary => save_binary(path, m),
        MatrixFormat::Csv => save_csv(path, m),
    }
}

fn load_binary(path: &Path) -> Result<DatasetMatrix> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 21];
    reader
        .read_exact(&mut header)
        .map_err(|_| DataError::MalformedHeader("file shorter than the 21-byte header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(DataError::MalformedHeader(format!(
            "bad magic {:?}",
            &header[0..4]
        )));
    }
    if header[4] != VERSION {
        return Err(DataError::MalformedHeader(format!(
            "unsupported version {}",
            header[4]
        )));
    }
    let p = u64::from_le_bytes(header[5..13].try_into().unwrap());
    let n = u64::from_le_bytes(header[13..21].try_into().unwrap());
    if p == 0 || n == 0 {
        return Err(DataError::MalformedHeader("zero dimension".into()));
    }
    let count = p
        .checked_mul(n)
        .and_then(|c| c.checked_mul(8))
        .filter(|&c| c <= isize::MAX as u64)
        .ok_or(DataError::DimOverflow(p, n))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() as u64 != count {
        return Err(DataError::Truncated { expected: count, found: bytes.len() as u64 });
    }
    let (p, n) = (p as usize, n as usize);
    // Stored column-major: value (i, j) at offset j·p + i.
    let mut values = Array2::zeros((p, n));
    for j in 0..n {
        for i in 0..p {
            let off = (j * p + i) * 8;
            let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            if !v.is_finite() {
                return Err(DataError::NonFinite { row: i, col: j });
            }
            values[[i, j]] = v;
        }
    }
    Ok(DatasetMatrix { values })
}

fn save_binary(path: &Path, m: &DatasetMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(m.p() as u64).to_le_bytes())?;
    w.write_all(&(m.n() as u64).to_le_bytes())?;
    for j in 0..m.n() {
        for i in 0..m.p() {
            w.write_all(&m.values[[i, j]].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load_csv(path: &Path) -> Result<DatasetMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| DataError::Parse { line: lineno + 1, msg: e.to_string() })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(DataError::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} cells, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Parse { line: 0, msg: "empty file".into() });
    }
    let p = rows.len();
    let n = rows[0].len();
    let values = Array2::from_shape_fn((p, n), |(i, j)| rows[i][j]);
    DatasetMatrix::new(values)
}

fn save_csv(path: &Path, m: &DatasetMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..m.p() {
        let row: Vec<String> = (0..m.n()).map(|j| format!("{}", m.values[[i, j]])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Binary PGM (P5) grayscale image, values scaled to [0, 1].
pub fn load_pgm(path: &Path) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and '#' comment lines between header tokens.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(DataError::MalformedHeader("unexpected end of PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(&bytes)?;
    if magic != "P5" {
        return Err(DataError::MalformedHeader(format!("expected P5, found {magic}")));
    }
    let width: usize = token(&bytes)?
        .parse()
        .map_err(|_| DataError::MalformedHeader("bad width".into()))?;
    let height: usize = token(&bytes)?
        .parse()
        .map_err(|_| DataError::MalformedHeader("bad height".into()))?;
    let maxval: u32 = token(&bytes)?
        .parse()
        .map_err(|_| DataError::MalformedHeader("bad maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(DataError::MalformedHeader(format!(
            "unsupported maxval {maxval} (8-bit only)"
        )));
    }
    pos += 1; // single whitespace byte after maxval
    let expected = width * height;
    if bytes.len() < pos + expected {
        return Err(DataError::Truncated {
            expected: expected as u64,
            found: (bytes.len().saturating_sub(pos)) as u64,
        });
    }
    let data = &bytes[pos..pos + expected];
    Ok(Array2::from_shape_fn((height, width), |(i, j)| {
        data[i * width + j] as f64 / maxval as f64
    }))
}

/// Parameters of the synthetic low-rank model `X = D·A + σ·noise`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub n: usize,
    pub true_k: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub dict_sparsity: f64,
    #[serde(default)]
    pub code_sparsity: f64,
    #[serde(default)]
    pub nonnegative: bool,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 {
            return Err(DataError::Invalid("p and n must be >= 1".into()));
        }
        if self.true_k == 0 || self.true_k > self.p.min(self.n) {
            return Err(DataError::Invalid("need 1 <= true_k <= min(p, n)".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(DataError::Invalid("noise_sigma must be >= 0".into()));
        }
        for (name, s) in [("dict_sparsity", self.dict_sparsity), ("code_sparsity", self.code_sparsity)] {
            if !(0.0..=1.0).contains(&s) {
                return Err(DataError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Draw the ground-truth factors and the noisy data matrix.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(DatasetMatrix, Array2<f64>, Array2<f64>)> {
    spec.validate()?;
    let mut rng = somf_core::RngStreams::new(spec.seed).stream(somf_core::rng::STREAM_DATA);
    let (p, n, k) = (spec.p, spec.n, spec.true_k);

    let mut d_true = Array2::zeros((p, k));
    for j in 0..k {
        loop {
            let mut col = Array1::from_shape_fn(p, |_| {
                if rng.gen::<f64>() < spec.dict_sparsity {
                    0.0
                } else {
                    let g: f64 = rng.sample(StandardNormal);
                    if spec.nonnegative { g.abs() } else { g }
                }
            });
            if col.iter().any(|&v| v != 0.0) {
                // Unit-l2 atoms; also projected so the columns are feasible
                // in the unit elastic-net ball whatever the mix.
                let norm = col.dot(&col).sqrt();
                col.mapv_inplace(|v| v / norm);
                let proj = enet_projection(col.view(), 1.0, 1.0, spec.nonnegative)?;
                col.assign(&proj);
                d_true.column_mut(j).assign(&col);
                break;
            }
        }
    }

    let a_true = Array2::from_shape_fn((k, n), |_| {
        if rng.gen::<f64>() < spec.code_sparsity {
            0.0
        } else {
            let g: f64 = rng.sample(StandardNormal);
            if spec.nonnegative { g.abs() } else { g }
        }
    });

    let mut x = d_true.dot(&a_true);
    if spec.noise_sigma > 0.0 {
        for v in x.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            let noise = if spec.nonnegative { g.abs() } else { g };
            *v += spec.noise_sigma * noise;
        }
    }
    Ok((DatasetMatrix::new(x)?, d_true, a_true))
}

/// Sliding-window patches: each column is one vectorized h×w patch, corners
/// visited in row-major raster order.
pub fn extract_patches(
    image: ArrayView2<'_, f64>,
    patch: (usize, usize),
    stride: (usize, usize),
) -> Result<DatasetMatrix> {
    let (height, width) = (image.nrows(), image.ncols());
    let (h, w) = patch;
    let (sh, sw) = stride;
    if h == 0 || w == 0 || sh == 0 || sw == 0 {
        return Err(DataError::Invalid("patch and stride must be >= 1".into()));
    }
    if h > height || w > width {
        return Err(DataError::Invalid(format!(
            "patch {h}x{w} does not fit in image {height}x{width}"
        )));
    }
    let rows = (height - h) / sh + 1;
    let cols = (width - w) / sw + 1;
    let n = rows * cols;
    let p = h * w;
    let mut out = Array2::zeros((p, n));
    let mut col = 0;
    for bi in 0..rows {
        for bj in 0..cols {
            let (r0, c0) = (bi * sh, bj * sw);
            for di in 0..h {
                for dj in 0..w {
                    out[[di * w + dj, col]] = image[[r0 + di, c0 + dj]];
                }
            }
            col += 1;
        }
    }
    DatasetMatrix::new(out)
}

/// Disjoint column split by seeded shuffle; the test side gets ⌈n·f⌉
/// columns.
pub fn train_test_split(
    x: &DatasetMatrix,
    test_fraction: f64,
    seed: u64,
) -> Result<(DatasetMatrix, DatasetMatrix)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::Invalid("test_fraction must lie in (0, 1)".into()));
    }
    let n = x.n();
    let n_test = (n as f64 * test_fraction).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(DataError::Invalid(format!(
            "split of {n} columns at fraction {test_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let take = |idx: &[usize]| {
        let mut m = Array2::zeros((x.p(), idx.len()));
        for (c, &i) in idx.iter().enumerate() {
            m.column_mut(c).assign(&x.values.column(i));
        }
        DatasetMatrix { values: m }
    };
    let test = take(&order[..n_test]);
    let train = take(&order[n_test..]);
    Ok((train, test))
}
