//! CSV ingestion, seeded synthetic data, and output totals by group.
//!
//! # Synthetic generator
//!
//! [`generate`] draws from a ChaCha8 stream (`rand_chacha::ChaCha8Rng`,
//! seeded with `seed_from_u64`). For every row, in order: a uniform `f64` for
//! `ln K`, a uniform `f64` for `ln L`, and one standard normal
//! (`rand_distr::StandardNormal`, ziggurat). The normal is drawn even when the
//! noise level is zero so that inputs do not depend on the noise setting.
//! Golden fixtures depend on this exact sequence.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::model::{eval_ces, CesParams, Observation};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RowTags {
    pub industry: Option<String>,
    pub state: Option<String>,
    pub year: Option<i32>,
}

/// Observations with optional per-row tags (`tags.len() == observations.len()`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub tags: Vec<RowTags>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self, DataError> {
        let tags = vec![RowTags::default(); observations.len()];
        Self::with_tags(observations, tags)
    }

    pub fn with_tags(observations: Vec<Observation>, tags: Vec<RowTags>) -> Result<Self, DataError> {
        if observations.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        assert_eq!(observations.len(), tags.len(), "one tag set per observation");
        for (i, o) in observations.iter().enumerate() {
            if let Some(reason) = invalid_observation(o) {
                return Err(DataError::BadRow { row: i + 1, reason });
            }
        }
        Ok(Self { observations, tags })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// CSV with `output,capital,labor` followed by whichever tag columns any
    /// row carries. Numbers use shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let has_industry = self.tags.iter().any(|t| t.industry.is_some());
        let has_state = self.tags.iter().any(|t| t.state.is_some());
        let has_year = self.tags.iter().any(|t| t.year.is_some());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["output", "capital", "labor"];
        if has_industry {
            header.push("industry");
        }
        if has_state {
            header.push("state");
        }
        if has_year {
            header.push("year");
        }
        w.write_record(&header).expect("in-memory write");
        for (o, t) in self.observations.iter().zip(&self.tags) {
            let mut rec = vec![o.output.to_string(), o.capital.to_string(), o.labor.to_string()];
            if has_industry {
                rec.push(t.industry.clone().unwrap_or_default());
            }
            if has_state {
                rec.push(t.state.clone().unwrap_or_default());
            }
            if has_year {
                rec.push(t.year.map(|y| y.to_string()).unwrap_or_default());
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

fn invalid_observation(o: &Observation) -> Option<String> {
    for (name, v) in [("output", o.output), ("capital", o.capital), ("labor", o.labor)] {
        if !(v > 0.0 && v.is_finite()) {
            return Some(format!("{name} must be > 0"));
        }
    }
    None
}

/// Reads a comma-separated document with required columns
/// `output,capital,labor` and optional `industry,state,year`. Row numbers in
/// errors count data rows from 1.
pub fn load_csv(document: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());
    let headers = reader.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| column(name).ok_or_else(|| DataError::MissingColumn(name.to_string()));
    let (c_out, c_cap, c_lab) = (required("output")?, required("capital")?, required("labor")?);
    let (c_ind, c_state, c_year) = (column("industry"), column("state"), column("year"));

    let mut observations = Vec::new();
    let mut tags = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| DataError::BadRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let positive = |c: usize, name: &str| -> Result<f64, DataError> {
            let raw = field(c);
            let v: f64 = raw.parse().map_err(|_| DataError::BadRow {
                row,
                reason: format!("{name} is not a number: `{raw}`"),
            })?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(DataError::BadRow {
                    row,
                    reason: format!("{name} must be > 0"),
                })
            }
        };
        let obs = Observation::new(
            positive(c_out, "output")?,
            positive(c_cap, "capital")?,
            positive(c_lab, "labor")?,
        );
        let text = |c: Option<usize>| c.map(field).filter(|s| !s.is_empty()).map(str::to_string);
        let year = match text(c_year) {
            None => None,
            Some(raw) => Some(raw.parse::<i32>().map_err(|_| DataError::BadRow {
                row,
                reason: format!("year is not an integer: `{raw}`"),
            })?),
        };
        observations.push(obs);
        tags.push(RowTags {
            industry: text(c_ind),
            state: text(c_state),
            year,
        });
    }
    if observations.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    Ok(Dataset { observations, tags })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NoiseKind {
    /// `V = V̂·exp(ε)`
    #[default]
    LogNormal,
    /// `V = V̂ + ε`; rows that end up non-positive are an error.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub true_params: CesParams,
    pub n: usize,
    pub k_range: (f64, f64),
    pub l_range: (f64, f64),
    /// Standard deviation of `ε ~ Normal(0, noise_sigma²)`.
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n == 0 {
            return Err(DataError::InvalidSpec("n must be at least 1".into()));
        }
        for (name, (lo, hi)) in [("k_range", self.k_range), ("l_range", self.l_range)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(DataError::InvalidSpec(format!(
                    "{name} needs 0 < low < high, got ({lo}, {hi})"
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(DataError::InvalidSpec(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    let u: f64 = rng.random();
    (a + u * (b - a)).exp()
}

/// Deterministic synthetic dataset; see the module docs for the draw order.
pub fn generate(spec: &SynthSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut observations = Vec::with_capacity(spec.n);
    for row in 1..=spec.n {
        let capital = log_uniform(&mut rng, spec.k_range);
        let labor = log_uniform(&mut rng, spec.l_range);
        let z: f64 = rng.sample(StandardNormal);
        let eps = spec.noise_sigma * z;
        let clean = eval_ces(&spec.true_params, capital, labor)
            .map_err(|source| DataError::InadmissibleParams { row, source })?;
        let output = match spec.noise_kind {
            NoiseKind::LogNormal => clean * eps.exp(),
            NoiseKind::Additive => clean + eps,
        };
        if !(output > 0.0 && output.is_finite()) {
            return Err(DataError::BadRow {
                row,
                reason: format!("generated output {output} is not positive"),
            });
        }
        observations.push(Observation::new(output, capital, labor));
    }
    Dataset::new(observations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    State,
    Industry,
    StateAndIndustry,
}

impl GroupBy {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            GroupBy::State => &["state"],
            GroupBy::Industry => &["industry"],
            GroupBy::StateAndIndustry => &["state", "industry"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTotal {
    pub key: Vec<String>,
    pub total_output: f64,
}

/// Sums output per group, ordered lexicographically by key.
pub fn aggregate_output(data: &Dataset, by: GroupBy) -> Result<Vec<GroupTotal>, DataError> {
    let mut totals: BTreeMap<Vec<String>, f64> = BTreeMap::new();
    for (i, (obs, tags)) in data.observations.iter().zip(&data.tags).enumerate() {
        let key = by
            .columns()
            .iter()
            .map(|&col| {
                let v = match col {
                    "state" => tags.state.as_ref(),
                    _ => tags.industry.as_ref(),
                };
                v.cloned().ok_or(DataError::MissingTag { row: i + 1, tag: col })
            })
            .collect::<Result<Vec<_>, _>>()?;
        *totals.entry(key).or_insert(0.0) += obs.output;
    }
    Ok(totals
        .into_iter()
        .map(|(key, total_output)| GroupTotal { key, total_output })
        .collect())
}
