//! Feature vector persistence: wide CSV, a compact binary cache and the
//! catalog JSON export.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{catalog, FeatureError, FeatureVector, Mode, Status, CATALOG_SIZE};

const MAGIC: &[u8; 8] = b"NSFEAT01";

fn status_code(s: Status) -> u8 {
    match s {
        Status::Ok => 0,
        Status::Sentinel => 1,
        Status::Skipped => 2,
    }
}

fn status_from(c: u8) -> Result<Status, FeatureError> {
    match c {
        0 => Ok(Status::Ok),
        1 => Ok(Status::Sentinel),
        2 => Ok(Status::Skipped),
        other => Err(FeatureError::Format(format!("status code {other}"))),
    }
}

fn mode_str(m: Mode) -> &'static str {
    match m {
        Mode::Full => "full",
        Mode::Fast => "fast",
    }
}

/// Wide CSV: `recording_id, mode, <feature names...>, flagged`. The last
/// column lists sentinel-replaced ids separated by `;`.
pub fn write_csv<W: Write>(out: W, vectors: &[FeatureVector]) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["recording_id".to_string(), "mode".to_string()];
    header.extend(catalog().into_iter().map(|s| s.name));
    header.push("flagged".into());
    w.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.recording_id.clone(), mode_str(v.mode).to_string()];
        row.extend(v.values.iter().zip(&v.status).map(|(x, s)| match s {
            Status::Skipped => String::new(),
            _ => format!("{x:?}"),
        }));
        row.push(v.flagged().map(|i| i.to_string()).collect::<Vec<_>>().join(";"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() != CATALOG_SIZE + 3 {
        return Err(FeatureError::Format(format!("{} columns (expected {})", header.len(), CATALOG_SIZE + 3)));
    }
    for (i, spec) in catalog().iter().enumerate() {
        if header[i + 2] != spec.name {
            return Err(FeatureError::Format(format!("column {} is '{}', expected '{}'", i + 2, &header[i + 2], spec.name)));
        }
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mode: Mode = rec[1].parse().map_err(FeatureError::Format)?;
        let flagged: Vec<usize> = rec[CATALOG_SIZE + 2]
            .split(';')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| FeatureError::Format(format!("flag '{t}'"))))
            .collect::<Result<_, _>>()?;
        let mut values = Vec::with_capacity(CATALOG_SIZE);
        let mut status = Vec::with_capacity(CATALOG_SIZE);
        for i in 0..CATALOG_SIZE {
            let cell = &rec[i + 2];
            if cell.is_empty() {
                values.push(catalog::spec(i).sentinel);
                status.push(Status::Skipped);
            } else {
                values.push(cell.parse().map_err(|_| FeatureError::Format(format!("value '{cell}'")))?);
                status.push(if flagged.contains(&i) { Status::Sentinel } else { Status::Ok });
            }
        }
        out.push(FeatureVector { recording_id: rec[0].to_string(), mode, values, status, timings_ms: BTreeMap::new() });
    }
    Ok(out)
}

/// Binary cache: magic, count, then per vector the id, mode, statuses and
/// little-endian values. Timings are not stored.
pub fn write_binary<W: Write>(mut out: W, vectors: &[FeatureVector]) -> Result<(), FeatureError> {
    out.write_all(MAGIC)?;
    out.write_all(&(CATALOG_SIZE as u32).to_le_bytes())?;
    out.write_all(&(vectors.len() as u32).to_le_bytes())?;
    for v in vectors {
        let id = v.recording_id.as_bytes();
        out.write_all(&(id.len() as u32).to_le_bytes())?;
        out.write_all(id)?;
        out.write_all(&[matches!(v.mode, Mode::Fast) as u8])?;
        out.write_all(&v.status.iter().map(|s| status_code(*s)).collect::<Vec<_>>())?;
        for x in &v.values {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], FeatureError> {
        let s = buf.get(pos..pos + n).ok_or_else(|| FeatureError::Format("truncated feature cache".into()))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != MAGIC {
        return Err(FeatureError::Format("not a feature cache".into()));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
    let width = u32_at(take(4)?);
    if width != CATALOG_SIZE {
        return Err(FeatureError::Format(format!("cache width {width} (expected {CATALOG_SIZE})")));
    }
    let count = u32_at(take(4)?);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n = u32_at(take(4)?);
        let recording_id = String::from_utf8(take(n)?.to_vec()).map_err(|e| FeatureError::Format(e.to_string()))?;
        let mode = if take(1)?[0] == 1 { Mode::Fast } else { Mode::Full };
        let status = take(width)?.iter().map(|c| status_from(*c)).collect::<Result<Vec<_>, _>>()?;
        let values = take(8 * width)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        out.push(FeatureVector { recording_id, mode, values, status, timings_ms: BTreeMap::new() });
    }
    Ok(out)
}

pub fn catalog_json() -> String {
    serde_json::to_string_pretty(&catalog()).expect("catalog serializes")
}

pub fn save(path: &Path, vectors: &[FeatureVector]) -> Result<(), FeatureError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_csv(f, vectors),
        _ => write_binary(f, vectors),
    }
}

pub fn load(path: &Path) -> Result<Vec<FeatureVector>, FeatureError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv(f),
        _ => read_binary(f),
    }
}
