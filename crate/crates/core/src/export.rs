//! CSV writers and readers for states, energy traces, envelopes and
//! envelope comparisons. Floats are written with 17 significant digits.

use std::io::{Read, Write};

use crate::energy::{EnergySample, EnergyTerms, EnergyTrace};
use crate::error::{Error, Result};
use crate::fitting::ComparisonRow;
use crate::sim::SimState;

pub const ENERGY_COLUMNS: [&str; 9] = [
    "t",
    "E",
    "dissipation",
    "lower_bound",
    "term_kin1",
    "term_kin2",
    "term_pot1",
    "term_pot2",
    "term_coupling",
];

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn row<W: Write>(w: &mut csv::Writer<W>, values: impl IntoIterator<Item = f64>) -> Result<()> {
    w.write_record(values.into_iter().map(fmt))?;
    Ok(())
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Header `t, u1_1..u1_N, u2_.., v1_.., v2_..` then one row per state.
pub fn write_states<W: Write>(out: W, states: &[SimState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = states.first().map_or(0, |s| s.u1.len());
    let mut header = vec!["t".to_string()];
    for block in ["u1", "u2", "v1", "v2"] {
        header.extend((1..=n).map(|k| format!("{block}_{k}")));
    }
    w.write_record(&header)?;
    for s in states {
        let values = std::iter::once(s.t).chain(s.fields().into_iter().flat_map(|f| f.0.iter().copied()));
        row(&mut w, values)?;
    }
    flush(w)
}

pub fn write_energy<W: Write>(out: W, trace: &EnergyTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENERGY_COLUMNS)?;
    for s in &trace.samples {
        let t = &s.terms;
        row(&mut w, [s.t, s.energy, s.dissipation, s.lower_bound, t.kin1, t.kin2, t.pot1, t.pot2, t.coupling])?;
    }
    flush(w)
}

/// Reads an energy CSV. Only `t` and `E` are required; missing term
/// columns read as zero.
pub fn read_energy<R: Read>(input: R) -> Result<EnergyTrace> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let index: Vec<Option<usize>> = ENERGY_COLUMNS
        .iter()
        .map(|name| header.iter().position(|h| h.trim() == *name))
        .collect();
    if index[0].is_none() || index[1].is_none() {
        return Err(Error::Csv("energy file needs columns `t` and `E`".into()));
    }
    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let mut v = [0.0; 9];
        for (slot, idx) in v.iter_mut().zip(&index) {
            if let Some(i) = idx {
                let field = record.get(*i).unwrap_or("").trim();
                *slot = field
                    .parse()
                    .map_err(|_| Error::Csv(format!("row {}: cannot parse `{field}`", line + 2)))?;
            }
        }
        samples.push(EnergySample {
            t: v[0],
            energy: v[1],
            dissipation: v[2],
            lower_bound: v[3],
            terms: EnergyTerms {
                kin1: v[4],
                kin2: v[5],
                pot1: v[6],
                pot2: v[7],
                coupling: v[8],
            },
        });
    }
    if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Csv("times must be strictly increasing".into()));
    }
    Ok(EnergyTrace {
        samples,
        fingerprint: String::new(),
    })
}

pub fn write_envelope<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"])?;
    for (t, v) in points {
        row(&mut w, [*t, *v])?;
    }
    flush(w)
}

pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "E", "envelope", "ratio"])?;
    for r in rows {
        row(&mut w, [r.t, r.energy, r.envelope, r.ratio])?;
    }
    flush(w)
}
