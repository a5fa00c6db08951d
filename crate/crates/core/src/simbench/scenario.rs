//! True coefficient functions of the three simulation scenarios.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    I,
    II,
    III,
}

impl ScenarioId {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Some(Self::I),
            "II" | "2" => Some(Self::II),
            "III" | "3" => Some(Self::III),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
        }
    }
}

/// One nonzero piece of a coefficient function.
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub f: fn(f64) -> f64,
}

impl Piece {
    fn closed(lo: f64, hi: f64, f: fn(f64) -> f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
            f,
        }
    }

    /// `(lo, hi]`, the convention of the multi-bump scenarios.
    fn left_open(lo: f64, hi: f64, f: fn(f64) -> f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: true,
            f,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    /// Nonzero pieces of `β*_k`, `k = 0..=q`, sorted by position.
    pub pieces: Vec<Vec<Piece>>,
    pub gamma_true: Vec<f64>,
    pub q: usize,
}

fn s1_left(t: f64) -> f64 {
    2.0 * (1.0 - t) * (2.0 * PI * (t + 0.2)).sin()
}

fn s1_right(t: f64) -> f64 {
    2.0 * t * (2.0 * PI * (t - 0.2)).sin()
}

fn sin10(a: f64, c: f64, t: f64) -> f64 {
    a * (10.0 * PI * (t - c)).sin()
}

fn sin40(a: f64, c: f64, t: f64) -> f64 {
    a * (40.0 * PI * (t - c)).sin()
}

/// `a (t - c)² / h² - a`, a parabola vanishing at `c ± h`.
fn bowl(a: f64, c: f64, h: f64, t: f64) -> f64 {
    a * (t - c).powi(2) / (h * h) - a
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId) -> Self {
        let pieces = match id {
            ScenarioId::I => vec![
                vec![Piece::closed(0.0, 0.3, s1_left), Piece::closed(0.7, 1.0, s1_right)],
                vec![Piece::closed(0.0, 0.3, s1_left)],
                vec![Piece::closed(0.7, 1.0, s1_right)],
            ],
            ScenarioId::II => vec![
                vec![
                    Piece::left_open(0.2, 0.3, |t| sin10(5.0, 0.2, t)),
                    Piece::left_open(0.5, 0.6, |t| sin10(-3.0, 0.5, t)),
                    Piece::left_open(0.7, 0.8, |t| sin10(3.5, 0.7, t)),
                ],
                vec![
                    Piece::left_open(0.2, 0.3, |t| bowl(2.0, 0.25, 0.05, t)),
                    Piece::left_open(0.5, 0.6, |t| sin10(5.0, 0.5, t)),
                ],
                vec![
                    Piece::left_open(0.5, 0.6, |t| sin10(2.5, 0.5, t)),
                    Piece::left_open(0.7, 0.8, |t| bowl(4.0, 0.75, 0.05, t)),
                ],
            ],
            ScenarioId::III => vec![
                vec![
                    Piece::left_open(0.125, 0.15, |t| bowl(4.0, 0.1375, 0.0125, t)),
                    Piece::left_open(0.175, 0.2, |t| sin40(7.0, 0.175, t)),
                    Piece::left_open(0.325, 0.35, |t| sin40(-6.0, 0.325, t)),
                    Piece::left_open(0.6, 0.625, |t| sin40(8.0, 0.6, t)),
                    Piece::left_open(0.7, 0.725, |t| sin40(-10.0, 0.7, t)),
                    Piece::left_open(0.8, 0.825, |t| sin40(5.0, 0.8, t)),
                    Piece::left_open(0.875, 0.9, |t| sin40(-7.0, 0.875, t)),
                ],
                vec![
                    Piece::left_open(0.125, 0.15, |t| sin40(10.0, 0.125, t)),
                    Piece::left_open(0.325, 0.35, |t| sin40(6.0, 0.325, t)),
                    Piece::left_open(0.7, 0.725, |t| bowl(8.0, 0.7125, 0.0125, t)),
                    Piece::left_open(0.875, 0.9, |t| sin40(9.0, 0.875, t)),
                ],
                vec![
                    Piece::left_open(0.175, 0.2, |t| sin40(5.0, 0.175, t)),
                    Piece::left_open(0.6, 0.625, |t| bowl(10.0, 0.6125, 0.0125, t)),
                    Piece::left_open(0.8, 0.825, |t| sin40(7.0, 0.8, t)),
                ],
            ],
        };
        Self {
            id,
            pieces,
            gamma_true: vec![0.5, 0.8],
            q: 2,
        }
    }

    pub fn domain_end(&self) -> f64 {
        1.0
    }

    /// `β*_k(t)`, exactly zero off the pieces.
    pub fn beta(&self, k: usize, t: f64) -> f64 {
        self.pieces[k]
            .iter()
            .find(|p| p.contains(t))
            .map_or(0.0, |p| (p.f)(t))
    }

    pub fn is_null(&self, k: usize, t: f64) -> bool {
        !self.pieces[k].iter().any(|p| p.contains(t))
    }

    /// Maximal subintervals of `[0, 1]` where `β*_k ≡ 0`, as `(lo, hi)` with `lo < hi`.
    pub fn null_regions(&self, k: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for p in &self.pieces[k] {
            if p.lo > cursor {
                out.push((cursor, p.lo));
            }
            cursor = p.hi;
        }
        if cursor < self.domain_end() {
            out.push((cursor, self.domain_end()));
        }
        out
    }

    pub fn nonnull_regions(&self, k: usize) -> Vec<(f64, f64)> {
        self.pieces[k].iter().map(|p| (p.lo, p.hi)).collect()
    }

    /// Every piece endpoint of every `β*_k`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .pieces
            .iter()
            .flatten()
            .flat_map(|p| [p.lo, p.hi])
            .chain([0.0, self.domain_end()])
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// `β*_k(t)` of scenario `id`.
pub fn scenario_beta(id: ScenarioId, k: usize, t: f64) -> Result<f64> {
    let s = ScenarioSpec::new(id);
    if k > s.q {
        return Err(Error::IndexOutOfRange {
            what: "coefficient function",
            index: k,
            len: s.q + 1,
        });
    }
    if !(0.0..=s.domain_end()).contains(&t) {
        return Err(Error::OutOfDomain {
            what: "t",
            value: t,
            lo: 0.0,
            hi: s.domain_end(),
        });
    }
    Ok(s.beta(k, t))
}
