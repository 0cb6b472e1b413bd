//! Problem instances: sensing matrices, signals, selections and measurements.
//!
//! # Randomness
//!
//! All generators use `ChaCha20Rng` seeded with `seed_from_u64(seed)`. One
//! seed drives one instance; each generated object reads its own ChaCha
//! stream (see [`Stream`]), so the matrix drawn for a seed does not depend on
//! whether a signal or noise vector was drawn first. Per-trial seeds in
//! campaigns come from [`sub_seed`]. Neither the generator nor the stream
//! layout may change without bumping the report schema version.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::densela::{check_finite, norm2, Mat};
use crate::error::{Error, Result};

/// ChaCha stream ids used for the objects generated from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Matrix = 0,
    Signal = 1,
    Selection = 2,
    Noise = 3,
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed for trial `index` of a campaign with master seed `master`.
///
/// SplitMix64 finalizer applied to `master + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EntryDist {
    /// Standard normal entries.
    #[default]
    Gaussian,
    /// Uniform on the open interval (-1, 1).
    Uniform,
}

impl EntryDist {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryDist::Gaussian => StandardNormal.sample(rng),
            EntryDist::Uniform => loop {
                let v: f64 = rng.gen_range(-1.0..1.0);
                if v != -1.0 {
                    break v;
                }
            },
        }
    }
}

impl fmt::Display for EntryDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryDist::Gaussian => "gaussian",
            EntryDist::Uniform => "uniform",
        })
    }
}

impl FromStr for EntryDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(EntryDist::Gaussian),
            "uniform" => Ok(EntryDist::Uniform),
            other => Err(Error::invalid(format!("unknown distribution {other:?}"))),
        }
    }
}

/// Ordered choice of `picks.len()` distinct rows out of `source_rows`.
///
/// Models both a selection matrix (N < M) and a permutation (N = M).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Selection {
    source_rows: usize,
    picks: Vec<usize>,
}

impl Selection {
    pub fn new(source_rows: usize, picks: Vec<usize>) -> Result<Self> {
        if picks.len() > source_rows {
            return Err(Error::invalid(format!(
                "{} picks out of {source_rows} rows",
                picks.len()
            )));
        }
        let mut seen = vec![false; source_rows];
        for &p in &picks {
            if p >= source_rows {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    bound: source_rows,
                });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid(format!("row {p} picked twice")));
            }
        }
        Ok(Selection { source_rows, picks })
    }

    pub fn identity(m: usize) -> Self {
        Selection {
            source_rows: m,
            picks: (0..m).collect(),
        }
    }

    /// Uniformly random ordered selection of `n` of `m` rows.
    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        if n > m {
            return Err(Error::invalid(format!("cannot pick {n} of {m} rows")));
        }
        let mut rng = rng_for(seed, Stream::Selection);
        let mut all: Vec<usize> = (0..m).collect();
        all.shuffle(&mut rng);
        all.truncate(n);
        Ok(Selection {
            source_rows: m,
            picks: all,
        })
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    pub fn picks(&self) -> &[usize] {
        &self.picks
    }

    pub fn len(&self) -> usize {
        self.picks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }

    pub fn is_permutation(&self) -> bool {
        self.picks.len() == self.source_rows
    }

    /// Selection equal to applying `inner` first and then `self`:
    /// `apply(self.compose(inner), a) == apply(self, apply(inner, a))`.
    pub fn compose(&self, inner: &Selection) -> Result<Selection> {
        if self.source_rows != inner.len() {
            return Err(Error::dim(format!(
                "outer selection expects {} rows, inner yields {}",
                self.source_rows,
                inner.len()
            )));
        }
        Ok(Selection {
            source_rows: inner.source_rows,
            picks: self.picks.iter().map(|&p| inner.picks[p]).collect(),
        })
    }

    /// Inverse of a permutation.
    pub fn inverse(&self) -> Result<Selection> {
        if !self.is_permutation() {
            return Err(Error::invalid("only permutations are invertible"));
        }
        let mut inv = vec![0; self.picks.len()];
        for (i, &p) in self.picks.iter().enumerate() {
            inv[p] = i;
        }
        Ok(Selection {
            source_rows: self.source_rows,
            picks: inv,
        })
    }

    /// Reorders a vector of length N the same way the selection reorders rows.
    pub fn permute_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.source_rows {
            return Err(Error::dim(format!(
                "vector of length {} for {} source rows",
                v.len(),
                self.source_rows
            )));
        }
        Ok(self.picks.iter().map(|&p| v[p]).collect())
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.picks.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses a comma-separated pick list such as `"2,0,1"`.
pub fn parse_picks(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad row index {t:?} in {s:?}")))
        })
        .collect()
}

pub fn gen_matrix(m: usize, k: usize, dist: EntryDist, seed: u64) -> Result<Mat> {
    if m == 0 || k == 0 {
        return Err(Error::dim(format!("cannot generate a {m}x{k} matrix")));
    }
    let mut rng = rng_for(seed, Stream::Matrix);
    let data = (0..m * k).map(|_| dist.sample(&mut rng)).collect();
    Mat::new(m, k, data)
}

/// Random signal with uniformly random direction and 2-norm uniform in
/// `[min_norm, max_norm]`.
pub fn gen_signal(k: usize, min_norm: f64, max_norm: f64, seed: u64) -> Result<Vec<f64>> {
    if k == 0 || !(0.0 < min_norm && min_norm <= max_norm) {
        return Err(Error::invalid(format!(
            "bad signal request k={k}, norms [{min_norm}, {max_norm}]"
        )));
    }
    let mut rng = rng_for(seed, Stream::Signal);
    loop {
        let dir: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm2(&dir);
        if n > 1e-12 {
            let target = rng.gen_range(min_norm..=max_norm);
            return Ok(dir.iter().map(|v| v * target / n).collect());
        }
    }
}

pub fn apply_selection(sel: &Selection, a: &Mat) -> Result<Mat> {
    if sel.source_rows != a.rows() {
        return Err(Error::dim(format!(
            "selection over {} rows applied to a matrix with {} rows",
            sel.source_rows,
            a.rows()
        )));
    }
    a.select_rows(&sel.picks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    #[default]
    None,
    /// I.i.d. gaussian noise rescaled so that `|Bx|^2 / |w|^2 == snr`.
    GaussianSnr { snr: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub a: Mat,
    pub x_true: Vec<f64>,
    pub selection: Selection,
    pub noise: Vec<f64>,
    pub y: Vec<f64>,
}

impl Instance {
    /// The selected sensing matrix `B = S A`.
    pub fn b(&self) -> Mat {
        apply_selection(&self.selection, &self.a).expect("instance is consistent")
    }

    pub fn k(&self) -> usize {
        self.a.cols()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

pub fn measure(
    a: &Mat,
    x: &[f64],
    sel: &Selection,
    noise: NoiseSpec,
    seed: u64,
) -> Result<Instance> {
    if x.len() != a.cols() {
        return Err(Error::dim(format!(
            "signal of length {} for {} columns",
            x.len(),
            a.cols()
        )));
    }
    check_finite(x, "signal")?;
    let b = apply_selection(sel, a)?;
    let clean = b.matvec(x)?;
    let w = match noise {
        NoiseSpec::None => vec![0.0; clean.len()],
        NoiseSpec::GaussianSnr { snr } => {
            if !(snr > 0.0 && snr.is_finite()) {
                return Err(Error::invalid(format!(
                    "snr must be positive and finite, got {snr}"
                )));
            }
            let signal_power: f64 = clean.iter().map(|v| v * v).sum();
            if signal_power == 0.0 {
                return Err(Error::Precondition(
                    "SNR is undefined when the noiseless measurement is zero".into(),
                ));
            }
            gaussian_noise(clean.len(), signal_power, snr, seed)
        }
    };
    let y = clean.iter().zip(&w).map(|(c, n)| c + n).collect();
    Ok(Instance {
        a: a.clone(),
        x_true: x.to_vec(),
        selection: sel.clone(),
        noise: w,
        y,
    })
}

/// Gaussian vector of length `n` scaled to power `signal_power / snr`.
pub(crate) fn gaussian_noise(n: usize, signal_power: f64, snr: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, Stream::Noise);
    let raw: Vec<f64> = loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        if norm2(&v) > 0.0 {
            break v;
        }
    };
    let scale = (signal_power / snr).sqrt() / norm2(&raw);
    raw.iter().map(|v| v * scale).collect()
}

/// Number of ordered selections of `n` out of `m`, `m! / (m - n)!`.
pub fn count_selections(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    ((m - n + 1)..=m).map(|v| v as u128).product()
}

/// Iterator over all ordered selections of `n` of `m` rows, in lexicographic
/// order of the pick lists.
#[derive(Debug, Clone)]
pub struct Selections {
    m: usize,
    current: Option<Vec<usize>>,
}

pub fn enumerate_selections(m: usize, n: usize) -> Result<Selections> {
    if n == 0 || n > m {
        return Err(Error::invalid(format!("cannot enumerate {n} of {m} rows")));
    }
    Ok(Selections {
        m,
        current: Some((0..n).collect()),
    })
}

impl Selections {
    fn advance(&self, cur: &[usize]) -> Option<Vec<usize>> {
        let n = cur.len();
        let mut used = vec![false; self.m];
        for &p in cur {
            used[p] = true;
        }
        for i in (0..n).rev() {
            used[cur[i]] = false;
            if let Some(next) = (cur[i] + 1..self.m).find(|&v| !used[v]) {
                let mut out = cur[..i].to_vec();
                out.push(next);
                used[next] = true;
                out.extend((0..self.m).filter(|&v| !used[v]).take(n - i - 1));
                return Some(out);
            }
        }
        None
    }
}

impl Iterator for Selections {
    type Item = Selection;

    fn next(&mut self) -> Option<Selection> {
        let cur = self.current.take()?;
        self.current = self.advance(&cur);
        Some(Selection {
            source_rows: self.m,
            picks: cur,
        })
    }
}
