//! Text file formats: profile, scan and ground-state CSV with `#` metadata
//! headers, and versioned JSON documents.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::GroundStateTrace;
use crate::integrator::Trajectory;
use crate::ode::{lyapunov_h, lyapunov_hv, scaled};
use crate::params::Params;
use crate::pruefer::PrueferTrace;
use crate::scalar::Real;
use crate::shooting::ScanRow;

/// Version tag of every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

pub const PROFILE_COLUMNS: &str = "rho,u,du,v,w,theta,H,Hv";
pub const SCAN_COLUMNS: &str = "c,u1,zeros,theta,hv_floor";
pub const GROUND_STATE_COLUMNS: &str = "r,Q,dQ,V,E";

/// Ordered `key: value` header lines.
pub type Metadata = Vec<(String, String)>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow<T> {
    pub rho: T,
    pub u: T,
    pub du: T,
    pub v: T,
    pub w: T,
    /// Lifted Pruefer angle, `NaN` when no trace was attached.
    pub theta: T,
    pub h: T,
    pub hv: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFile<T> {
    pub metadata: Metadata,
    pub rows: Vec<ProfileRow<T>>,
}

/// Tabulates a trajectory in `rho` units with its diagnostics.
pub fn profile_rows<T: Real>(
    prm: &Params<T>,
    traj: &Trajectory<T>,
    trace: Option<&PrueferTrace<T>>,
) -> Vec<ProfileRow<T>> {
    traj.samples
        .iter()
        .map(|s| {
            let st = s.state(traj.chart);
            let (v, _) = scaled(prm, st);
            let theta = trace.and_then(|t| t.theta_at(st.rho).ok()).unwrap_or_else(T::nan);
            let h = if st.rho < T::one() { lyapunov_h(prm, st) } else { T::nan() };
            ProfileRow { rho: st.rho, u: st.u, du: st.du, v, w: v - T::one(), theta, h, hv: lyapunov_hv(prm, st) }
        })
        .collect()
}

/// 17 significant digits.
pub fn fmt_num<T: Real>(x: T) -> String {
    format!("{x:.16e}")
}

fn parse_num<T: Real>(s: &str, line: usize) -> Result<T> {
    let t = s.trim();
    T::from_str_radix(t, 10).map_err(|_| Error::Parse { line, msg: format!("invalid number {t:?}") })
}

fn write_header(out: &mut String, title: &str, metadata: &Metadata, columns: &str) {
    let _ = writeln!(out, "# {title}");
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(columns);
    out.push('\n');
}

/// Splits a CSV body into header metadata and numbered data lines.
fn split_body<'a>(text: &'a str, title: &str, columns: &str) -> Result<(Metadata, Vec<(usize, &'a str)>)> {
    let mut metadata = Vec::new();
    let mut data = Vec::new();
    let mut seen_columns = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim_end();
        if let Some(rest) = l.strip_prefix('#') {
            let rest = rest.trim();
            if seen_columns {
                return Err(Error::Parse { line, msg: "comment after the column header".into() });
            }
            if line == 1 {
                if rest != title {
                    return Err(Error::Parse { line, msg: format!("expected title {title:?}, found {rest:?}") });
                }
                continue;
            }
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse { line, msg: format!("metadata line without ':' ({rest:?})") })?;
            metadata.push((k.trim().to_string(), v.trim().to_string()));
        } else if !seen_columns {
            if l != columns {
                return Err(Error::Parse { line, msg: format!("expected columns {columns:?}, found {l:?}") });
            }
            seen_columns = true;
        } else if !l.is_empty() {
            data.push((line, l));
        }
    }
    if !seen_columns {
        return Err(Error::Parse { line: text.lines().count().max(1), msg: "missing column header".into() });
    }
    Ok((metadata, data))
}

fn fields<const K: usize>(l: &str, line: usize) -> Result<[&str; K]> {
    let parts: Vec<&str> = l.split(',').collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| Error::Parse { line, msg: format!("expected {K} fields, found {}", p.len()) })
}

impl<T: Real> ProfileFile<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_header(&mut out, "selfsim profile", &self.metadata, PROFILE_COLUMNS);
        for r in &self.rows {
            let vals = [r.rho, r.u, r.du, r.v, r.w, r.theta, r.h, r.hv].map(fmt_num);
            out.push_str(&vals.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (metadata, data) = split_body(text, "selfsim profile", PROFILE_COLUMNS)?;
        let rows = data
            .into_iter()
            .map(|(line, l)| {
                let f = fields::<8>(l, line)?;
                let n = |i: usize| parse_num::<T>(f[i], line);
                Ok(ProfileRow {
                    rho: n(0)?,
                    u: n(1)?,
                    du: n(2)?,
                    v: n(3)?,
                    w: n(4)?,
                    theta: n(5)?,
                    h: n(6)?,
                    hv: n(7)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileFile { metadata, rows })
    }
}

pub fn write_profile<T: Real>(file: &ProfileFile<T>, path: &Path) -> Result<()> {
    fs::write(path, file.to_csv())?;
    Ok(())
}

pub fn read_profile<T: Real>(path: &Path) -> Result<ProfileFile<T>> {
    ProfileFile::from_csv(&fs::read_to_string(path)?)
}

pub fn scan_to_csv<T: Real>(metadata: &Metadata, rows: &[ScanRow<T>]) -> String {
    let mut out = String::new();
    write_header(&mut out, "selfsim scan", metadata, SCAN_COLUMNS);
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(r.c),
            fmt_num(r.u1),
            r.zeros,
            fmt_num(r.theta),
            fmt_num(r.hv_floor)
        );
    }
    out
}

/// Parses a scan table; rows with a negative zero count are read back as failed.
pub fn scan_from_csv<T: Real>(text: &str) -> Result<(Metadata, Vec<ScanRow<T>>)> {
    let (metadata, data) = split_body(text, "selfsim scan", SCAN_COLUMNS)?;
    let rows = data
        .into_iter()
        .map(|(line, l)| {
            let f = fields::<5>(l, line)?;
            let zeros: i64 =
                f[2].trim().parse().map_err(|_| Error::Parse { line, msg: format!("invalid count {:?}", f[2]) })?;
            Ok(ScanRow {
                c: parse_num(f[0], line)?,
                u1: parse_num(f[1], line)?,
                zeros,
                theta: parse_num(f[3], line)?,
                hv_floor: parse_num(f[4], line)?,
                failed: zeros < 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((metadata, rows))
}

pub fn ground_state_to_csv<T: Real>(metadata: &Metadata, trace: &GroundStateTrace<T>) -> String {
    let mut out = String::new();
    write_header(&mut out, "selfsim ground-state", metadata, GROUND_STATE_COLUMNS);
    for s in &trace.samples {
        out.push_str(&[s.r, s.q, s.dq, s.v, s.e].map(fmt_num).join(","));
        out.push('\n');
    }
    out
}

/// A JSON document: `schema`, the body's own fields, and a `metadata` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<B, M> {
    pub schema: u32,
    #[serde(flatten)]
    pub body: B,
    pub metadata: M,
}

impl<B, M> Document<B, M> {
    pub fn new(body: B, metadata: M) -> Self {
        Document { schema: SCHEMA_VERSION, body, metadata }
    }
}

pub fn to_json<B: Serialize, M: Serialize>(doc: &Document<B, M>) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<B: DeserializeOwned, M: DeserializeOwned>(text: &str) -> Result<Document<B, M>> {
    let doc: Document<B, M> = serde_json::from_str(text)?;
    if doc.schema != SCHEMA_VERSION {
        return Err(Error::domain(format!("unsupported schema {}", doc.schema)));
    }
    Ok(doc)
}
