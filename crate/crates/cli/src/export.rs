//! CSV writers. Every table starts with a header row.

use std::io::Write;

use eulerband_core::bound::BoundResult;
use eulerband_core::critical::StagnationPoint;
use eulerband_core::flowbox::GridField;
use eulerband_core::spectrum::{BandRow, PseudoPoint};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub x1: f64,
    pub x2: f64,
    pub kind: &'static str,
    pub lambda: f64,
    pub det: f64,
    pub trace: f64,
}

impl From<&StagnationPoint> for CensusRow {
    fn from(p: &StagnationPoint) -> Self {
        Self {
            x1: p.location.x1(),
            x2: p.location.x2(),
            kind: p.kind.label(),
            lambda: p.kind.rate(),
            det: p.jac.det(),
            trace: p.jac.trace(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub bound: f64,
    pub quadrature_n: usize,
}

impl From<&BoundResult> for BoundRow {
    fn from(b: &BoundResult) -> Self {
        Self {
            lambda: b.lambda,
            k: b.k,
            m: b.m,
            numerator: b.numerator,
            denominator: b.denominator,
            bound: b.bound,
            quadrature_n: b.quadrature_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BandCsvRow {
    probe_re: f64,
    probe_im: f64,
    n_max: i32,
    resolvent_norm: f64,
    verdict: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct FieldRow {
    n: usize,
    x1_index: usize,
    x2_index: usize,
    re: f64,
    im: f64,
}

fn write_rows<W: Write, R: Serialize>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io("flushing csv", e))?;
    Ok(())
}

pub fn write_census<W: Write>(out: W, census: &[StagnationPoint]) -> Result<(), CliError> {
    write_rows(
        out,
        &["x1", "x2", "kind", "lambda", "det", "trace"],
        census.iter().map(CensusRow::from),
    )
}

pub fn write_bounds<W: Write>(out: W, bounds: &[BoundResult]) -> Result<(), CliError> {
    write_rows(
        out,
        &[
            "lambda",
            "K",
            "M",
            "numerator",
            "denominator",
            "bound",
            "quadrature_n",
        ],
        bounds.iter().map(BoundRow::from),
    )
}

pub fn write_pseudospectrum<W: Write>(out: W, points: &[PseudoPoint]) -> Result<(), CliError> {
    write_rows(out, &["re", "im", "sigma_min", "resolvent_norm"], points)
}

pub fn write_band<W: Write>(out: W, rows: &[BandRow]) -> Result<(), CliError> {
    write_rows(
        out,
        &["probe_re", "probe_im", "n_max", "resolvent_norm", "verdict"],
        rows.iter().map(|r| BandCsvRow {
            probe_re: r.probe_re,
            probe_im: r.probe_im,
            n_max: r.n_max,
            resolvent_norm: r.resolvent_norm,
            verdict: r.verdict.label(),
        }),
    )
}

/// Every grid value, `x2` rows outermost.
pub fn write_field<W: Write>(out: W, f: &GridField) -> Result<(), CliError> {
    let n = f.n();
    write_rows(
        out,
        &["n", "x1_index", "x2_index", "re", "im"],
        f.values().iter().enumerate().map(|(idx, v)| FieldRow {
            n,
            x1_index: idx % n,
            x2_index: idx / n,
            re: v.re,
            im: v.im,
        }),
    )
}
