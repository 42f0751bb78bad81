//! Cycle logs: capacity and ToF per cycle.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::format::{fmt6, Csv, FlatJson};
use crate::error::{config, validation, Result};
use crate::waveform::pearson_correlation;

const MODULE: &str = "cli";
pub const CYCLE_HEADER: &str = "cycle,capacity_ah,tof_us";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SocTag {
    FullyDischarged,
    Other,
}

impl SocTag {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "fully_discharged" => Some(Self::FullyDischarged),
            "other" => Some(Self::Other),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::FullyDischarged => "fully_discharged",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRecord {
    pub cycle: u64,
    /// Ah
    pub capacity: f64,
    /// s
    pub tof: f64,
    pub soc_tag: Option<SocTag>,
}

/// Parse a cycle log. Rows are checked for positive values and strictly
/// increasing cycle numbers; errors name the offending line.
pub fn parse_cycle_log(text: &str) -> Result<Vec<CycleRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| validation(MODULE, "cycle log is empty"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let tagged = match cols.as_slice() {
        ["cycle", "capacity_ah", "tof_us"] => false,
        ["cycle", "capacity_ah", "tof_us", "soc_tag"] => true,
        _ => {
            return Err(validation(
                MODULE,
                format!("line 1: expected header `{CYCLE_HEADER}[,soc_tag]`, found `{header}`"),
            ))
        }
    };
    let mut out: Vec<CycleRecord> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(validation(
                MODULE,
                format!(
                    "line {n}: expected {} columns, found {}",
                    cols.len(),
                    cells.len()
                ),
            ));
        }
        let cycle: u64 = cells[0]
            .parse()
            .map_err(|_| validation(MODULE, format!("line {n}: bad cycle `{}`", cells[0])))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| validation(MODULE, format!("line {n}: bad {what} `{s}`")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(validation(
                    MODULE,
                    format!("line {n}: {what} must be positive, found {s}"),
                ));
            }
            Ok(v)
        };
        let capacity = num(cells[1], "capacity_ah")?;
        let tof = num(cells[2], "tof_us")? * 1e-6;
        let soc_tag = if tagged {
            Some(SocTag::parse(cells[3]).ok_or_else(|| {
                validation(MODULE, format!("line {n}: unknown soc_tag `{}`", cells[3]))
            })?)
        } else {
            None
        };
        if let Some(prev) = out.last() {
            if cycle <= prev.cycle {
                return Err(validation(
                    MODULE,
                    format!("line {n}: cycle {cycle} does not increase"),
                ));
            }
        }
        out.push(CycleRecord {
            cycle,
            capacity,
            tof,
            soc_tag,
        });
    }
    Ok(out)
}

pub fn ingest_cycle_log(path: &Path) -> Result<Vec<CycleRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config(
            MODULE,
            format!("cannot read cycle log {}: {e}", path.display()),
        )
    })?;
    parse_cycle_log(&text)
}

/// Inverse of [`parse_cycle_log`] at six significant digits.
pub fn emit_cycle_log(records: &[CycleRecord]) -> String {
    let tagged = records.iter().any(|r| r.soc_tag.is_some());
    let mut header = vec!["cycle", "capacity_ah", "tof_us"];
    if tagged {
        header.push("soc_tag");
    }
    let mut csv = Csv::new(&header);
    for r in records {
        let mut cells = vec![r.cycle.to_string(), fmt6(r.capacity), fmt6(r.tof * 1e6)];
        if tagged {
            cells.push(r.soc_tag.unwrap_or(SocTag::Other).name().to_string());
        }
        csv.text_row(&cells);
    }
    csv.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesStats {
    pub min: f64,
    pub max: f64,
    /// Last value relative to the first, percent.
    pub change_pct: f64,
}

fn stats(x: &[f64]) -> SeriesStats {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SeriesStats {
        min,
        max,
        change_pct: 100.0 * (x[x.len() - 1] / x[0] - 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub pcc: f64,
    pub records: usize,
    pub capacity: SeriesStats,
    pub tof: SeriesStats,
}

impl Correlation {
    pub fn to_json(&self, out: &mut FlatJson) {
        out.num("pcc", self.pcc).int("records", self.records as u64);
        for (name, s, k) in [
            ("capacity_ah", self.capacity, 1.0),
            ("tof_us", self.tof, 1e6),
        ] {
            out.num(format!("{name}_min"), s.min * k)
                .num(format!("{name}_max"), s.max * k)
                .num(format!("{name}_change_pct"), s.change_pct);
        }
    }
}

/// Pearson correlation of capacity against ToF, with series summaries.
pub fn correlate(records: &[CycleRecord]) -> Result<Correlation> {
    let cap: Vec<f64> = records.iter().map(|r| r.capacity).collect();
    let tof: Vec<f64> = records.iter().map(|r| r.tof).collect();
    let pcc = pearson_correlation(&cap, &tof)?;
    Ok(Correlation {
        pcc,
        records: records.len(),
        capacity: stats(&cap),
        tof: stats(&tof),
    })
}

/// Synthetic ageing log: capacity falls by `capacity_drop` and ToF rises by
/// `tof_rise` linearly over `cycles`, each with uniform relative noise of
/// half-width `noise`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticLog {
    pub cycles: u64,
    pub seed: u64,
    pub capacity_ah: f64,
    pub tof_us: f64,
    pub capacity_drop: f64,
    pub tof_rise: f64,
    pub noise: f64,
}

impl Default for SyntheticLog {
    fn default() -> Self {
        Self {
            cycles: 500,
            seed: 1,
            capacity_ah: 50.0,
            tof_us: 20.1,
            capacity_drop: 0.124,
            tof_rise: 0.159,
            noise: 0.01,
        }
    }
}

impl SyntheticLog {
    pub fn generate(&self) -> Result<Vec<CycleRecord>> {
        if self.cycles < 2 || !(self.noise >= 0.0 && self.noise < 0.5) {
            return Err(config(
                MODULE,
                "synthetic log needs at least 2 cycles and noise in [0, 0.5)",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let last = (self.cycles - 1) as f64;
        let jitter = |rng: &mut ChaCha8Rng| {
            if self.noise > 0.0 {
                1.0 + rng.gen_range(-self.noise..self.noise)
            } else {
                1.0
            }
        };
        Ok((0..self.cycles)
            .map(|i| {
                let s = i as f64 / last;
                let capacity = self.capacity_ah * (1.0 - self.capacity_drop * s) * jitter(&mut rng);
                let tof = self.tof_us * 1e-6 * (1.0 + self.tof_rise * s) * jitter(&mut rng);
                CycleRecord {
                    cycle: i + 1,
                    capacity,
                    tof,
                    soc_tag: Some(SocTag::FullyDischarged),
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let r = parse_cycle_log("cycle,capacity_ah,tof_us\n1,50,20.1\n2,49.9,20.2\n3,49.7,20.3\n")
            .unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[2].tof - 20.3e-6).abs() < 1e-18);
        assert_eq!(r[0].soc_tag, None);
    }

    #[test]
    fn negative_tof_names_the_line() {
        let e = parse_cycle_log("cycle,capacity_ah,tof_us\n1,50,20.1\n2,49.9,-1\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn bad_header_and_order() {
        assert!(parse_cycle_log("cycle,cap,tof\n1,2,3\n").is_err());
        assert!(parse_cycle_log("cycle,capacity_ah,tof_us\n2,1,1\n2,1,1\n").is_err());
        assert!(parse_cycle_log("cycle,capacity_ah,tof_us,soc_tag\n1,1,1,charged\n").is_err());
    }

    #[test]
    fn synthetic_log_round_trips() {
        let recs = SyntheticLog::default().generate().unwrap();
        assert_eq!(recs.len(), 500);
        let text = emit_cycle_log(&recs);
        let again = emit_cycle_log(&parse_cycle_log(&text).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn synthetic_correlation() {
        let c = correlate(&SyntheticLog::default().generate().unwrap()).unwrap();
        assert!(c.pcc < -0.9, "{}", c.pcc);
        let exact = SyntheticLog {
            noise: 0.0,
            ..Default::default()
        }
        .generate()
        .unwrap();
        assert!((correlate(&exact).unwrap().pcc + 1.0).abs() < 1e-12);
    }
}
