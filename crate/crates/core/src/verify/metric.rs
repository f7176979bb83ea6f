use crate::error::{Error, Result};

/// Distance between two parameter vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    L1,
    #[default]
    L2,
    Linf,
    /// `1 - cosine similarity`.
    Cos,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::L1, Metric::L2, Metric::Linf, Metric::Cos];

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Linf => "linf",
            Metric::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric '{name}'")))
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(
            a.len(),
            b.len(),
            "distance between vectors of different length"
        );
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::L1 => diffs.sum(),
            Metric::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Linf => diffs.fold(0.0, f64::max),
            Metric::Cos => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    return if na == nb { 0.0 } else { 1.0 };
                }
                1.0 - dot / (na.sqrt() * nb.sqrt())
            }
        }
    }

    /// Size of `a` on the scale this metric reports distances in.
    /// For `Cos` distances are already relative, so this is 1.
    pub fn scale(self, a: &[f64]) -> f64 {
        match self {
            Metric::Cos => 1.0,
            m => m.distance(a, &vec![0.0; a.len()]),
        }
    }
}
