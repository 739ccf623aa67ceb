//! Analytic test functions with known global minima.
//!
//! Ten classic functions, identified as `F1`..`F10` or by lowercase name,
//! each defined for any dimension on a fixed box. The catalog records the
//! box bounds and the known minimum value; `F6` is the one exception whose
//! published minimum refers to the ten-dimensional case.

use crate::linalg::DenseMatrix;
use std::f64::consts::{E, PI};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error("coordinate {value} of point {point} lies outside [{lo}, {hi}]")]
    DomainError {
        point: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("unknown benchmark id {0:?}")]
    UnknownBenchmark(String),
}

/// One catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct BenchmarkSpec {
    /// Identifier `F1`..`F10`.
    pub id: &'static str,
    pub name: &'static str,
    /// Lower grid bound, shared by all dimensions.
    pub lower: f64,
    /// Upper grid bound, shared by all dimensions.
    pub upper: f64,
    /// Known global minimum value (for `F6`, the 10-dimensional value).
    pub known_min: f64,
    formula: fn(&[f64]) -> f64,
}

impl BenchmarkSpec {
    /// Value at a single point; no domain check.
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.formula)(x)
    }

    /// Vectorized evaluation with a domain check per coordinate.
    pub fn evaluate(&self, points: &DenseMatrix) -> Result<Vec<f64>, BenchmarkError> {
        for i in 0..points.rows() {
            for &v in points.row(i) {
                if v < self.lower || v > self.upper {
                    return Err(BenchmarkError::DomainError {
                        point: i,
                        value: v,
                        lo: self.lower,
                        hi: self.upper,
                    });
                }
            }
        }
        Ok((0..points.rows()).map(|i| self.value(points.row(i))).collect())
    }
}

fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let (a, b, c) = (20.0, 0.2, 2.0 * PI);
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
    -a * (-b * sq.sqrt()).exp() - cs.exp() + a + E
}

fn alpine(x: &[f64]) -> f64 {
    x.iter().map(|v| (v * v.sin() + 0.1 * v).abs()).sum()
}

fn brown(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let (a, b) = (w[0] * w[0], w[1] * w[1]);
            a.powf(b + 1.0) + b.powf(a + 1.0)
        })
        .sum()
}

fn exponential(x: &[f64]) -> f64 {
    -(-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
}

fn griewank(x: &[f64]) -> f64 {
    let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product::<f64>();
    s - p + 1.0
}

/// Steepness exponent of the sine wells; the published 10-dimensional
/// minimum corresponds to `m = 10`.
const MICHALEWICZ_M: i32 = 10;

fn michalewicz(x: &[f64]) -> f64 {
    -x.iter()
        .enumerate()
        .map(|(i, v)| v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(2 * MICHALEWICZ_M))
        .sum::<f64>()
}

fn qing(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let t = v * v - (i + 1) as f64;
            t * t
        })
        .sum()
}

fn rastrigin(x: &[f64]) -> f64 {
    let a = 10.0;
    a * x.len() as f64
        + x.iter()
            .map(|v| v * v - a * (2.0 * PI * v).cos())
            .sum::<f64>()
}

fn schaffer(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let s = w[0] * w[0] + w[1] * w[1];
            0.5 + (s.sqrt().sin().powi(2) - 0.5) / (1.0 + 0.001 * s).powi(2)
        })
        .sum()
}

fn schwefel(x: &[f64]) -> f64 {
    418.9829 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

const CATALOG: [BenchmarkSpec; 10] = [
    BenchmarkSpec {
        id: "F1",
        name: "ackley",
        lower: -32.768,
        upper: 32.768,
        known_min: 0.0,
        formula: ackley,
    },
    BenchmarkSpec {
        id: "F2",
        name: "alpine",
        lower: -10.0,
        upper: 10.0,
        known_min: 0.0,
        formula: alpine,
    },
    BenchmarkSpec {
        id: "F3",
        name: "brown",
        lower: -1.0,
        upper: 4.0,
        known_min: 0.0,
        formula: brown,
    },
    BenchmarkSpec {
        id: "F4",
        name: "exponential",
        lower: -1.0,
        upper: 1.0,
        known_min: -1.0,
        formula: exponential,
    },
    BenchmarkSpec {
        id: "F5",
        name: "griewank",
        lower: -600.0,
        upper: 600.0,
        known_min: 0.0,
        formula: griewank,
    },
    BenchmarkSpec {
        id: "F6",
        name: "michalewicz",
        lower: 0.0,
        upper: PI,
        known_min: -9.66015,
        formula: michalewicz,
    },
    BenchmarkSpec {
        id: "F7",
        name: "qing",
        lower: 0.0,
        upper: 500.0,
        known_min: 0.0,
        formula: qing,
    },
    BenchmarkSpec {
        id: "F8",
        name: "rastrigin",
        lower: -5.12,
        upper: 5.12,
        known_min: 0.0,
        formula: rastrigin,
    },
    BenchmarkSpec {
        id: "F9",
        name: "schaffer",
        lower: -100.0,
        upper: 100.0,
        known_min: 0.0,
        formula: schaffer,
    },
    BenchmarkSpec {
        id: "F10",
        name: "schwefel",
        lower: -500.0,
        upper: 500.0,
        known_min: 0.0,
        formula: schwefel,
    },
];

/// All ten benchmarks, in id order.
pub fn catalog() -> Vec<BenchmarkSpec> {
    CATALOG.to_vec()
}

/// Look up a benchmark by id (`"F3"`) or lowercase name (`"brown"`).
pub fn by_name(name: &str) -> Result<BenchmarkSpec, BenchmarkError> {
    let needle = name.to_ascii_lowercase();
    CATALOG
        .iter()
        .find(|b| b.id.eq_ignore_ascii_case(name) || b.name == needle)
        .copied()
        .ok_or_else(|| BenchmarkError::UnknownBenchmark(name.to_string()))
}
