use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::verify::VerificationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    Retrain,
    Concat,
    InverseGradient,
    DirectedRegularizer,
}

impl Attack {
    pub const ALL: [Attack; 4] = [
        Attack::Retrain,
        Attack::Concat,
        Attack::InverseGradient,
        Attack::DirectedRegularizer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attack::Retrain => "retrain",
            Attack::Concat => "concat",
            Attack::InverseGradient => "inverse_gradient",
            Attack::DirectedRegularizer => "directed_regularizer",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown attack '{name}'")))
    }
}

/// Work an attack spent. Counters only ever grow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttackCost {
    grad_evals: usize,
    steps: usize,
}

impl AttackCost {
    /// Gradient evaluations, i.e. training-step equivalents.
    pub fn grad_evals(&self) -> usize {
        self.grad_evals
    }

    /// Forward or inverse steps produced.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn add_grad_evals(&mut self, n: usize) {
        self.grad_evals += n;
    }

    pub fn add_steps(&mut self, n: usize) {
        self.steps += n;
    }
}

/// The verifier's decision on one transcript produced by an attack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub label: String,
    pub accepted: bool,
    /// Fail-reason code when rejected.
    pub reason: Option<String>,
}

impl Outcome {
    pub fn from_result(label: &str, res: &VerificationResult) -> Self {
        Self {
            label: label.to_owned(),
            accepted: res.is_success(),
            reason: res.reason.as_ref().map(|r| r.code().to_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpoofReport {
    pub attack: Attack,
    pub outcomes: Vec<Outcome>,
    pub cost: AttackCost,
    /// Scalar diagnostics in the order they were recorded.
    pub metrics: Vec<(String, f64)>,
    pub series: Vec<Series>,
}

impl SpoofReport {
    pub fn new(attack: Attack) -> Self {
        Self {
            attack,
            outcomes: Vec::new(),
            cost: AttackCost::default(),
            metrics: Vec::new(),
            series: Vec::new(),
        }
    }

    /// `success` if any transcript of the attack was accepted.
    pub fn verdict(&self) -> &'static str {
        if self.outcomes.iter().any(|o| o.accepted) {
            "success"
        } else {
            "fail"
        }
    }

    pub fn is_detected(&self) -> bool {
        self.verdict() == "fail"
    }

    pub fn outcome(&self, label: &str) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.label == label)
    }

    pub fn set_metric(&mut self, name: &str, value: f64) {
        match self.metrics.iter_mut().find(|m| m.0 == name) {
            Some(m) => m.1 = value,
            None => self.metrics.push((name.to_owned(), value)),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == name).map(|m| m.1)
    }

    pub fn push_series(&mut self, name: &str, points: Vec<(usize, f64)>) {
        self.series.push(Series {
            name: name.to_owned(),
            points,
        });
    }

    pub fn series(&self, name: &str) -> Option<&[(usize, f64)]> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.points.as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "attack: {}", self.attack.name()).unwrap();
        writeln!(out, "verdict: {}", self.verdict()).unwrap();
        for o in &self.outcomes {
            let status = if o.accepted { "accepted" } else { "rejected" };
            match &o.reason {
                Some(r) => writeln!(out, "outcome {}: {status} ({r})", o.label),
                None => writeln!(out, "outcome {}: {status}", o.label),
            }
            .unwrap();
        }
        writeln!(out, "grad_evals: {}", self.cost.grad_evals).unwrap();
        writeln!(out, "steps: {}", self.cost.steps).unwrap();
        for (name, v) in &self.metrics {
            writeln!(out, "{name}: {v}").unwrap();
        }
        for s in &self.series {
            writeln!(out, "series {}: {} points", s.name, s.points.len()).unwrap();
        }
        out
    }

    /// Long format, `record,name,index,value`; [`SpoofReport::from_csv`]
    /// reads it back exactly.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut rec = |fields: [&str; 4]| {
            w.write_record(fields)
                .map_err(|e| Error::Csv(e.to_string()))
        };
        rec(["record", "name", "index", "value"])?;
        rec(["attack", self.attack.name(), "", ""])?;
        for o in &self.outcomes {
            let accepted = if o.accepted { "1" } else { "0" };
            rec([
                "outcome",
                &o.label,
                accepted,
                o.reason.as_deref().unwrap_or(""),
            ])?;
        }
        rec(["cost", "grad_evals", "", &self.cost.grad_evals.to_string()])?;
        rec(["cost", "steps", "", &self.cost.steps.to_string()])?;
        for (name, v) in &self.metrics {
            rec(["metric", name, "", &v.to_string()])?;
        }
        for s in &self.series {
            if s.points.is_empty() {
                rec(["series", &s.name, "", ""])?;
            }
            for (i, v) in &s.points {
                rec(["series", &s.name, &i.to_string(), &v.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let bad = |line: usize, msg: &str| Error::Csv(format!("record {line}: {msg}"));
        let mut report: Option<SpoofReport> = None;
        for (line, row) in r.records().enumerate() {
            let row = row.map_err(|e| Error::Csv(e.to_string()))?;
            let [kind, name, index, value] = [0, 1, 2, 3].map(|i| row.get(i).unwrap_or(""));
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line, "bad number"));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(line, "bad integer"));
            if kind == "attack" {
                if report.is_some() {
                    return Err(bad(line, "duplicate attack record"));
                }
                report = Some(SpoofReport::new(Attack::from_name(name)?));
                continue;
            }
            let rep = report
                .as_mut()
                .ok_or_else(|| bad(line, "attack record must come first"))?;
            match kind {
                "outcome" => rep.outcomes.push(Outcome {
                    label: name.to_owned(),
                    accepted: index == "1",
                    reason: (!value.is_empty()).then(|| value.to_owned()),
                }),
                "cost" => match name {
                    "grad_evals" => rep.cost.grad_evals = int(value)?,
                    "steps" => rep.cost.steps = int(value)?,
                    _ => return Err(bad(line, "unknown cost counter")),
                },
                "metric" => rep.metrics.push((name.to_owned(), num(value)?)),
                "series" => {
                    let pos = match rep.series.iter().position(|s| s.name == name) {
                        Some(p) => p,
                        None => {
                            rep.push_series(name, Vec::new());
                            rep.series.len() - 1
                        }
                    };
                    if !index.is_empty() {
                        rep.series[pos].points.push((int(index)?, num(value)?));
                    }
                }
                _ => return Err(bad(line, "unknown record kind")),
            }
        }
        report.ok_or_else(|| Error::Csv("no attack record".into()))
    }
}
