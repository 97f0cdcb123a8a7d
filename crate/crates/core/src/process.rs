//! The Flagged-1-Bit process: random length-`n` sequences of
//! (information bit, flag bit) pairs with exactly one flag.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Default largest `n` accepted by [`enumerate_paths`] (n·2ⁿ ≈ 1.05M paths).
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

/// One realization of F1B(n). Times are 1-based: `info_bits[t - 1]` is the
/// information bit at time `t`, and the flag sits at `flag_index`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamplePath {
    info_bits: Vec<i8>,
    flag_index: usize,
}

impl SamplePath {
    pub fn new(info_bits: Vec<i8>, flag_index: usize) -> Result<Self> {
        let n = info_bits.len();
        if n == 0 {
            return Err(Error::InvalidLength(0));
        }
        if flag_index == 0 || flag_index > n {
            return Err(Error::IndexOutOfRange { t: flag_index, n });
        }
        if let Some(bad) = info_bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::InvalidConfig(format!("information bit {bad} is not ±1")));
        }
        Ok(Self {
            info_bits,
            flag_index,
        })
    }

    pub fn len(&self) -> usize {
        self.info_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info_bits.is_empty()
    }

    pub fn info_bits(&self) -> &[i8] {
        &self.info_bits
    }

    pub fn flag_index(&self) -> usize {
        self.flag_index
    }

    /// The flagged information bit.
    pub fn label(&self) -> i8 {
        self.info_bits[self.flag_index - 1]
    }

    /// The path with every information bit negated and the flag kept.
    pub fn negated(&self) -> Self {
        Self {
            info_bits: self.info_bits.iter().map(|b| -b).collect(),
            flag_index: self.flag_index,
        }
    }

    /// Input vector at time `t` (1-based) under `enc`.
    pub fn encode(&self, t: usize, enc: FlagEncoding) -> Result<InputVector> {
        let n = self.len();
        if t == 0 || t > n {
            return Err(Error::IndexOutOfRange { t, n });
        }
        Ok(self.input_at(t, enc))
    }

    /// Unchecked variant of [`encode`](Self::encode) for hot loops.
    #[inline]
    pub(crate) fn input_at(&self, t: usize, enc: FlagEncoding) -> InputVector {
        InputVector {
            x_info: self.info_bits[t - 1] as f64,
            x_flag: enc.flag_value(t == self.flag_index),
        }
    }
}

/// `L=<int>;bits=<+1,-1,...>;label=<+1|-1>`
impl fmt::Display for SamplePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={};bits=", self.flag_index)?;
        for (i, b) in self.info_bits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{:+}", b)?;
        }
        write!(f, ";label={:+}", self.label())
    }
}

impl FromStr for SamplePath {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("malformed path line: {line:?}"));
        let mut flag = None;
        let mut bits = None;
        let mut label = None;
        for field in line.trim().split(';') {
            let (key, value) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "L" => flag = Some(value.parse::<usize>().map_err(|_| bad())?),
                "bits" => {
                    bits = Some(
                        value
                            .split(',')
                            .map(|b| b.parse::<i8>().map_err(|_| bad()))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "label" => label = Some(value.parse::<i8>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let path = SamplePath::new(bits.ok_or_else(bad)?, flag.ok_or_else(bad)?)?;
        if let Some(l) = label {
            if l != path.label() {
                return Err(Error::InvalidConfig(format!(
                    "label {l:+} disagrees with flagged bit {:+}",
                    path.label()
                )));
            }
        }
        Ok(path)
    }
}

/// How the flag bit is rendered as a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FlagEncoding {
    /// Flag is +1, every other time −1.
    #[default]
    Symmetric,
    /// Flag is 1, every other time 0.
    Binary,
}

impl FlagEncoding {
    #[inline]
    pub fn flag_value(self, flagged: bool) -> f64 {
        match (self, flagged) {
            (_, true) => 1.0,
            (FlagEncoding::Symmetric, false) => -1.0,
            (FlagEncoding::Binary, false) => 0.0,
        }
    }
}

impl FromStr for FlagEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "pm1" => Ok(FlagEncoding::Symmetric),
            "binary" | "01" => Ok(FlagEncoding::Binary),
            other => Err(Error::InvalidConfig(format!("unknown flag encoding {other:?}"))),
        }
    }
}

/// Input `X_t`: information component first, flag component second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputVector {
    pub x_info: f64,
    pub x_flag: f64,
}

impl InputVector {
    pub fn new(x_info: f64, x_flag: f64) -> Self {
        Self { x_info, x_flag }
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 2] {
        [self.x_info, self.x_flag]
    }
}

/// Where the flag goes when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "at")]
pub enum FlagPlacement {
    /// Uniform over 1..=n.
    Random,
    /// Always at the given time.
    Fixed(usize),
}

/// Draws one path of F1B(n); a pure function of `(n, seed)`.
pub fn sample_path(n: usize, seed: u64) -> Result<SamplePath> {
    sample_conditioned(n, seed, FlagPlacement::Random, None)
}

/// Draws a path with the flag placed per `placement`; if `label` is given the
/// flagged bit is forced to it and every other bit stays i.i.d. uniform.
pub fn sample_conditioned(
    n: usize,
    seed: u64,
    placement: FlagPlacement,
    label: Option<i8>,
) -> Result<SamplePath> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let mut rng = CounterRng::new(seed);
    let flag_index = match placement {
        FlagPlacement::Random => 1 + rng.below(n as u64) as usize,
        FlagPlacement::Fixed(l) if (1..=n).contains(&l) => l,
        FlagPlacement::Fixed(l) => return Err(Error::IndexOutOfRange { t: l, n }),
    };
    let mut info_bits = Vec::with_capacity(n);
    let mut word = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        info_bits.push(if (word >> (i % 64)) & 1 == 0 { 1 } else { -1 });
    }
    if let Some(y) = label {
        if y != 1 && y != -1 {
            return Err(Error::InvalidConfig(format!("label {y} is not ±1")));
        }
        info_bits[flag_index - 1] = y;
    }
    Ok(SamplePath {
        info_bits,
        flag_index,
    })
}

/// Number of distinct paths of F1B(n), `n·2ⁿ`.
pub fn path_count(n: usize) -> u128 {
    (n as u128) << n.min(120)
}

/// Checks `n` against the enumeration cap and returns the path count.
pub fn check_enumerable(n: usize, cap: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    if n > cap || n > 40 {
        return Err(Error::EnumerationTooLarge {
            n,
            cap,
            required: path_count(n),
        });
    }
    Ok(path_count(n) as u64)
}

/// The `index`-th path in enumeration order: `L` ascending, then the bits as
/// a binary counter with time 1 most significant and 0 ↦ +1.
pub fn path_at(n: usize, index: u64) -> SamplePath {
    let per_flag = 1u64 << n;
    let flag_index = (index / per_flag) as usize + 1;
    let counter = index % per_flag;
    let info_bits = (1..=n)
        .map(|t| if (counter >> (n - t)) & 1 == 0 { 1 } else { -1 })
        .collect();
    SamplePath {
        info_bits,
        flag_index,
    }
}

/// All `n·2ⁿ` paths exactly once, in lexicographic `(L, bits)` order.
pub fn enumerate_paths(n: usize, cap: usize) -> Result<PathEnumerator> {
    let total = check_enumerable(n, cap)?;
    Ok(PathEnumerator { n, next: 0, total })
}

#[derive(Debug, Clone)]
pub struct PathEnumerator {
    n: usize,
    next: u64,
    total: u64,
}

impl Iterator for PathEnumerator {
    type Item = SamplePath;

    fn next(&mut self) -> Option<SamplePath> {
        if self.next >= self.total {
            return None;
        }
        let path = path_at(self.n, self.next);
        self.next += 1;
        Some(path)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PathEnumerator {}
