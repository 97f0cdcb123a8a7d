//! Deterministic certification: worst-case reachable sets of the final state
//! for every flag position, proving zero error without sampling.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cells::{CellParams, CellState};
use crate::constructions::{mechanism_of, vanilla_k2_params, VanillaK2Construction};
use crate::error::{Error, Result};
use crate::process::{FlagEncoding, InputVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertMethod {
    GruInterval,
    VanillaK2Reachability,
}

/// Reachable final states of one class for one flag position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertEntry {
    pub label: i8,
    pub flag_index: usize,
    /// Per-coordinate lower and upper bound of the reachable set.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Exact reachable points when the set is finite, empty otherwise.
    pub points: Vec<Vec<f64>>,
    /// Smallest score for label +1, largest for label −1.
    pub worst_score: f64,
}

impl CertEntry {
    /// Whether a final state lies in the reported set.
    pub fn contains(&self, s: &[f64]) -> bool {
        if !self.points.is_empty() {
            return self.points.iter().any(|p| p.as_slice() == s);
        }
        s.len() == self.lower.len()
            && s.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismCheck {
    pub transitions: usize,
    /// Every explored transition satisfies exactly two mechanism conditions.
    pub exactly_two: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCert {
    pub method: CertMethod,
    pub n: usize,
    pub certified: bool,
    /// Smallest distance of any reachable final score from the wrong side.
    pub certified_margin: f64,
    pub closed_form_margin: f64,
    /// The reachable-set argument does not depend on `n`.
    pub holds_for_all_n: bool,
    /// States reachable for some `n` and flag position (finite sets only).
    pub reachable_points: Vec<Vec<f64>>,
    pub mechanisms: Option<MechanismCheck>,
    pub entries: Vec<CertEntry>,
}

impl IntervalCert {
    pub fn entry(&self, label: i8, flag_index: usize) -> Option<&CertEntry> {
        self.entries.iter().find(|e| e.label == label && e.flag_index == flag_index)
    }
}

/// Interval propagation of the scalar gated construction
/// `s ← A·s + (1−A)·B·x` off the flag, `s ← (1−A)·s + A·B·x` at the flag.
///
/// Starts from `[−|B|, |B|]`, which holds `s0 = 0` and is invariant off the
/// flag, so the positive-class minimum at flag `L` is exactly
/// `|B|·(2·A^{n−L+1} − 1)`. The classifier is `sign(B)` with `γ = 0`.
pub fn certify_gru_interval(gate: f64, scale: f64, n: usize) -> Result<IntervalCert> {
    if !(gate > 0.0 && gate < 1.0) {
        return Err(Error::InvalidGate(gate));
    }
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let a = gate;
    let b = scale.abs();
    let mut entries = Vec::with_capacity(2 * n);
    for label in [1i8, -1] {
        let y = f64::from(label);
        for flag in 1..=n {
            let (mut lo, mut hi) = (-b, b);
            for t in 1..=n {
                if t == flag {
                    (lo, hi) = ((1.0 - a) * lo + a * b * y, (1.0 - a) * hi + a * b * y);
                } else {
                    (lo, hi) = (a * lo - (1.0 - a) * b, a * hi + (1.0 - a) * b);
                }
            }
            let (lower, upper) = if scale < 0.0 { (-hi, -lo) } else { (lo, hi) };
            // score is sign(B)·s, so the worst case is the interval end nearest the wrong side
            let worst_score = if label > 0 { lo } else { hi };
            entries.push(CertEntry {
                label,
                flag_index: flag,
                lower: vec![lower],
                upper: vec![upper],
                points: Vec::new(),
                worst_score,
            });
        }
    }
    let min_pos = entries.iter().filter(|e| e.label > 0).map(|e| e.worst_score).fold(f64::INFINITY, f64::min);
    let max_neg = entries.iter().filter(|e| e.label < 0).map(|e| e.worst_score).fold(f64::NEG_INFINITY, f64::max);
    let closed_form = b * (2.0 * a.powi(n as i32) - 1.0);
    Ok(IntervalCert {
        method: CertMethod::GruInterval,
        n,
        certified: min_pos > 0.0 && max_neg < 0.0,
        certified_margin: min_pos.min(-max_neg),
        closed_form_margin: closed_form,
        holds_for_all_n: false,
        reachable_points: Vec::new(),
        mechanisms: None,
        entries,
    })
}

type Key = [u64; 2];

fn key(s: &[f64]) -> Key {
    [s[0].to_bits(), s[1].to_bits()]
}

fn unkey(k: &Key) -> Vec<f64> {
    vec![f64::from_bits(k[0]), f64::from_bits(k[1])]
}

struct K2Reach<'a> {
    c: &'a VanillaK2Construction,
    params: &'a CellParams,
    transitions: usize,
    all_two: bool,
}

impl K2Reach<'_> {
    fn step(&mut self, s: &Key, x_info: f64, flagged: bool) -> Key {
        let x = InputVector::new(x_info, FlagEncoding::Binary.flag_value(flagged));
        let state = CellState::hidden(unkey(s));
        self.transitions += 1;
        if mechanism_of(self.c, &state, x).len() != 2 {
            self.all_two = false;
        }
        key(self.params.step_unchecked(&state, x).readout())
    }

    fn off_flag(&mut self, set: &BTreeSet<Key>) -> BTreeSet<Key> {
        let mut out = BTreeSet::new();
        for s in set {
            for x in [1.0, -1.0] {
                out.insert(self.step(s, x, false));
            }
        }
        out
    }

    fn at_flag(&mut self, set: &BTreeSet<Key>, label: i8) -> BTreeSet<Key> {
        set.iter().map(|s| self.step(s, f64::from(label), true)).collect()
    }

    /// Smallest superset of `start` closed under off-flag steps, if it
    /// stabilizes within the limits.
    fn closure(&mut self, start: BTreeSet<Key>) -> Option<BTreeSet<Key>> {
        const MAX_LAYERS: usize = 256;
        const MAX_POINTS: usize = 4096;
        let mut all = start.clone();
        let mut frontier = start;
        for _ in 0..MAX_LAYERS {
            let next: BTreeSet<Key> = self.off_flag(&frontier).difference(&all).copied().collect();
            if next.is_empty() {
                return Some(all);
            }
            all.extend(next.iter().copied());
            if all.len() > MAX_POINTS {
                return None;
            }
            frontier = next;
        }
        None
    }
}

/// Exact reachability for the two-dimensional vanilla construction.
///
/// Per flag position the final point set is propagated for the given `n`.
/// Independently, the states reachable before the flag and after it (per
/// label) are closed under off-flag steps; every final state for every `n`
/// and flag position lies in the after-flag closure, so scoring that
/// closure certifies all `n` at once.
pub fn certify_vanilla_k2(c: &VanillaK2Construction, n: usize) -> Result<IntervalCert> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let setup = vanilla_k2_params(c)?;
    let classifier = setup.classifier.clone();
    let score = |k: &Key| {
        let s = unkey(k);
        classifier.beta[0] * s[0] + classifier.beta[1] * s[1] + classifier.gamma
    };
    let mut reach = K2Reach {
        c,
        params: &setup.params,
        transitions: 0,
        all_two: true,
    };
    let start: BTreeSet<Key> = [key(setup.s0.readout())].into();

    let mut entries = Vec::with_capacity(2 * n);
    for label in [1i8, -1] {
        for flag in 1..=n {
            let mut set = start.clone();
            for t in 1..=n {
                set = if t == flag { reach.at_flag(&set, label) } else { reach.off_flag(&set) };
            }
            let points: Vec<Vec<f64>> = set.iter().map(unkey).collect();
            let lower = (0..2).map(|i| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
            let upper = (0..2).map(|i| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
            let scores = set.iter().map(score);
            let worst_score = if label > 0 {
                scores.fold(f64::INFINITY, f64::min)
            } else {
                scores.fold(f64::NEG_INFINITY, f64::max)
            };
            entries.push(CertEntry {
                label,
                flag_index: flag,
                lower,
                upper,
                points,
                worst_score,
            });
        }
    }
    let min_pos = entries.iter().filter(|e| e.label > 0).map(|e| e.worst_score).fold(f64::INFINITY, f64::min);
    let max_neg = entries.iter().filter(|e| e.label < 0).map(|e| e.worst_score).fold(f64::NEG_INFINITY, f64::max);

    let mut reachable = BTreeSet::new();
    let mut all_n = false;
    if let Some(before) = reach.closure(start) {
        reachable.extend(before.iter().copied());
        all_n = true;
        for label in [1i8, -1] {
            let loaded = reach.at_flag(&before, label);
            match reach.closure(loaded) {
                Some(after) => {
                    let ok = if label > 0 {
                        after.iter().all(|k| score(k) > 0.0)
                    } else {
                        after.iter().all(|k| score(k) < 0.0)
                    };
                    all_n &= ok;
                    reachable.extend(after);
                }
                None => all_n = false,
            }
        }
    }
    Ok(IntervalCert {
        method: CertMethod::VanillaK2Reachability,
        n,
        certified: min_pos > 0.0 && max_neg < 0.0,
        certified_margin: min_pos.min(-max_neg),
        closed_form_margin: c.margin(),
        holds_for_all_n: all_n,
        reachable_points: reachable.iter().map(unkey).collect(),
        mechanisms: Some(MechanismCheck {
            transitions: reach.transitions,
            exactly_two: reach.all_two,
        }),
        entries,
    })
}
