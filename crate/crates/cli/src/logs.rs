//! CSV formats: the run log written by `simulate` and the twist log read by
//! `calibrate` and `pe-audit`. Floats are written with 17 significant
//! digits, so a write-read cycle reproduces them exactly.

use std::io::{Read, Write};
use std::path::Path;

use coopkin_core::rigidmotion::Twist;
use coopkin_core::sim::SimRecord;
use coopkin_core::{Vec3, Vec4, Vec6};

use crate::error::{CliError, CliResult};

pub fn run_log_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for (name, n) in [("x", 6), ("xd", 6), ("e", 6), ("edot", 6), ("etah", 4), ("rhoh", 3)] {
        h.extend((0..n).map(|k| format!("{name}{k}")));
    }
    h.extend(
        ["theta_err", "u1_norm", "u2_norm", "pe_lambda_min", "V", "g_norm", "pe_flag", "degen_flag"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

pub const TWIST_LOG_HEADER: [&str; 13] =
    ["t", "v1x", "v1y", "v1z", "w1x", "w1y", "w1z", "v2x", "v2y", "v2z", "w2x", "w2y", "w2z"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// The run-log columns of one record, in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLogRow {
    pub t: f64,
    pub x: Vec6,
    pub x_d: Vec6,
    pub e: Vec6,
    pub edot: Vec6,
    pub eta_hat: Vec4,
    pub rho_hat: Vec3,
    pub theta_err: f64,
    pub u1_norm: f64,
    pub u2_norm: f64,
    pub pe_lambda_min: f64,
    pub v: f64,
    pub g_norm: f64,
    pub pe_flag: bool,
    pub degen_flag: bool,
}

impl From<&SimRecord> for RunLogRow {
    fn from(r: &SimRecord) -> Self {
        Self {
            t: r.t,
            x: r.x,
            x_d: r.x_d,
            e: r.e,
            edot: r.edot,
            eta_hat: r.eta_hat,
            rho_hat: r.rho_hat,
            theta_err: r.theta_err,
            u1_norm: r.u1_norm,
            u2_norm: r.u2_norm,
            pe_lambda_min: r.pe_lambda_min,
            v: r.v,
            g_norm: r.g_norm,
            pe_flag: r.pe_flag,
            degen_flag: r.degen_flag,
        }
    }
}

impl RunLogRow {
    fn fields(&self) -> Vec<String> {
        let mut f = vec![fmt_f64(self.t)];
        for block in [self.x.as_slice(), self.x_d.as_slice(), self.e.as_slice(), self.edot.as_slice()] {
            f.extend(block.iter().map(|v| fmt_f64(*v)));
        }
        f.extend(self.eta_hat.iter().map(|v| fmt_f64(*v)));
        f.extend(self.rho_hat.iter().map(|v| fmt_f64(*v)));
        for v in [self.theta_err, self.u1_norm, self.u2_norm, self.pe_lambda_min, self.v, self.g_norm] {
            f.push(fmt_f64(v));
        }
        f.push(flag(self.pe_flag));
        f.push(flag(self.degen_flag));
        f
    }

    fn parse(fields: &[f64]) -> Self {
        let block6 = |i: usize| Vec6::from_column_slice(&fields[i..i + 6]);
        Self {
            t: fields[0],
            x: block6(1),
            x_d: block6(7),
            e: block6(13),
            edot: block6(19),
            eta_hat: Vec4::from_column_slice(&fields[25..29]),
            rho_hat: Vec3::from_column_slice(&fields[29..32]),
            theta_err: fields[32],
            u1_norm: fields[33],
            u2_norm: fields[34],
            pe_lambda_min: fields[35],
            v: fields[36],
            g_norm: fields[37],
            pe_flag: fields[38] != 0.0,
            degen_flag: fields[39] != 0.0,
        }
    }
}

pub fn write_run_log<W: Write>(out: W, records: &[SimRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(run_log_header())?;
    for r in records {
        w.write_record(RunLogRow::from(r).fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_twist_log<W: Write>(out: W, rows: &[TwistSample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TWIST_LOG_HEADER)?;
    for s in rows {
        let mut f = vec![fmt_f64(s.t)];
        for tw in [&s.twist1, &s.twist2] {
            f.extend(tw.linear.iter().chain(tw.angular.iter()).map(|v| fmt_f64(*v)));
        }
        w.write_record(f)?;
    }
    w.flush()?;
    Ok(())
}

/// One timestamped pair of grasp twists.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistSample {
    pub t: f64,
    pub twist1: Twist,
    pub twist2: Twist,
}

impl From<&SimRecord> for TwistSample {
    fn from(r: &SimRecord) -> Self {
        Self { t: r.t, twist1: Twist::from_vector6(&r.twist1), twist2: Twist::from_vector6(&r.twist2) }
    }
}

/// Reads a CSV with exactly `header`, returning numeric rows. Errors carry
/// the 1-based line number.
fn read_numeric<R: Read>(input: R, header: &[&str], path: &Path) -> CliResult<Vec<(u64, Vec<f64>)>> {
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let found = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if found.is_empty() {
        return Err(bad("empty file".into()));
    }
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(bad(format!("line 1: expected header `{}`", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(bad(format!("line {line}: expected {} fields, found {}", header.len(), rec.len())));
        }
        let mut vals = Vec::with_capacity(rec.len());
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {line}: column `{}` is not a number: `{field}`", header[k])))?;
            if !v.is_finite() {
                return Err(bad(format!("line {line}: column `{}` is not finite", header[k])));
            }
            vals.push(v);
        }
        rows.push((line, vals));
    }
    Ok(rows)
}

fn check_increasing(rows: &[(u64, Vec<f64>)], path: &Path) -> CliResult<()> {
    for w in rows.windows(2) {
        if !(w[1].1[0] > w[0].1[0]) {
            return Err(CliError::Input {
                path: path.to_path_buf(),
                message: format!("line {}: time is not strictly increasing", w[1].0),
            });
        }
    }
    Ok(())
}

pub fn read_twist_log<R: Read>(input: R, path: &Path) -> CliResult<Vec<TwistSample>> {
    let rows = read_numeric(input, &TWIST_LOG_HEADER, path)?;
    if rows.is_empty() {
        return Err(CliError::Input { path: path.to_path_buf(), message: "log has no samples".into() });
    }
    check_increasing(&rows, path)?;
    Ok(rows
        .into_iter()
        .map(|(_, v)| TwistSample {
            t: v[0],
            twist1: Twist::new(Vec3::new(v[1], v[2], v[3]), Vec3::new(v[4], v[5], v[6])),
            twist2: Twist::new(Vec3::new(v[7], v[8], v[9]), Vec3::new(v[10], v[11], v[12])),
        })
        .collect())
}

pub fn read_run_log<R: Read>(input: R, path: &Path) -> CliResult<Vec<RunLogRow>> {
    let header = run_log_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = read_numeric(input, &header, path)?;
    check_increasing(&rows, path)?;
    Ok(rows.into_iter().map(|(_, v)| RunLogRow::parse(&v)).collect())
}

pub fn read_twist_log_file(path: &Path) -> CliResult<Vec<TwistSample>> {
    let f = std::fs::File::open(path)
        .map_err(|e| CliError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    read_twist_log(std::io::BufReader::new(f), path)
}
