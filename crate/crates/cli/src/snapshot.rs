//! `YMF1` field snapshots.
//!
//! Layout: the 4-byte magic, a little-endian u32 header length, a UTF-8 JSON
//! header, then the payload as little-endian f64. The payload holds the real
//! nodes only, x fastest, ordered by component (lexicographic multi-index)
//! and then by algebra coefficient.

use serde::{Deserialize, Serialize};
use std::path::Path;
use ymflow_core::{apply_boundary, BoundaryKind, GridSpec, GroupId, KForm, LieAlgebraSpec};

pub const MAGIC: &[u8; 4] = b"YMF1";

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:?}")]
    BadMagic(Vec<u8>),
    #[error("file truncated: {missing} bytes missing from the {part}")]
    Truncated { part: &'static str, missing: usize },
    #[error("payload has {extra} trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("refusing to write non-finite value at payload index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub nodes: [usize; 3],
    pub extents: [f64; 3],
    pub spacings: [f64; 3],
    pub group: String,
    pub degree: usize,
    pub t: f64,
    /// Boundary kind used to fill the ghost layer, if any.
    pub boundary: Option<String>,
    pub endianness: String,
}

pub fn group_name(g: GroupId) -> &'static str {
    match g {
        GroupId::U1 => "u1",
        GroupId::SU2 => "su2",
    }
}

pub fn parse_group(s: &str) -> Option<LieAlgebraSpec> {
    match s {
        "u1" => Some(LieAlgebraSpec::u1()),
        "su2" => Some(LieAlgebraSpec::su2()),
        _ => None,
    }
}

pub fn parse_boundary(s: &str) -> Option<BoundaryKind> {
    match s {
        "dirichlet" => Some(BoundaryKind::Dirichlet),
        "neumann" => Some(BoundaryKind::Neumann),
        "marini" => Some(BoundaryKind::Marini),
        _ => None,
    }
}

fn payload(field: &KForm) -> Vec<f64> {
    let g = field.grid;
    let mut out = Vec::with_capacity(field.n_comp() * field.dim() * g.real_len());
    for c in 0..field.n_comp() {
        for q in 0..field.dim() {
            g.for_each_real(|i, j, k| out.push(field.at(c, g.idx(i as isize, j as isize, k as isize))[q]));
        }
    }
    out
}

pub fn encode(field: &KForm, t: f64) -> Result<Vec<u8>, SnapshotError> {
    let values = payload(field);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SnapshotError::NonFinite(i));
    }
    let g = field.grid;
    let header = Header {
        nodes: g.nodes,
        extents: g.extents,
        spacings: g.spacings(),
        group: group_name(field.alg.group_id).to_string(),
        degree: field.degree,
        t,
        boundary: field.ghosts().map(|b| b.name().to_string()),
        endianness: "little".to_string(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| SnapshotError::Header(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + json.len() + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], at: usize, n: usize, part: &'static str) -> Result<&'a [u8], SnapshotError> {
    let have = bytes.len().saturating_sub(at);
    if have < n {
        return Err(SnapshotError::Truncated { part, missing: n - have });
    }
    Ok(&bytes[at..at + n])
}

pub fn decode(bytes: &[u8]) -> Result<(KForm, f64), SnapshotError> {
    let magic = take(bytes, 0, 4, "magic")?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic.to_vec()));
    }
    let len = u32::from_le_bytes(take(bytes, 4, 4, "header length")?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(take(bytes, 8, len, "header")?)
        .map_err(|e| SnapshotError::Header(e.to_string()))?;
    if header.endianness != "little" {
        return Err(SnapshotError::Header(format!("endianness {:?}", header.endianness)));
    }
    let alg = parse_group(&header.group).ok_or_else(|| SnapshotError::Header(format!("group {:?}", header.group)))?;
    if header.degree > 3 {
        return Err(SnapshotError::Header(format!("degree {}", header.degree)));
    }
    let grid = GridSpec::new(header.extents, header.nodes).map_err(|e| SnapshotError::Header(e.to_string()))?;
    let boundary = match &header.boundary {
        None => None,
        Some(s) => Some(parse_boundary(s).ok_or_else(|| SnapshotError::Header(format!("boundary {:?}", s)))?),
    };
    let mut field = KForm::zeros(header.degree, grid, alg);
    let n = field.n_comp() * field.dim() * grid.real_len();
    let start = 8 + len;
    let body = take(bytes, start, 8 * n, "payload")?;
    if bytes.len() > start + 8 * n {
        return Err(SnapshotError::TrailingBytes { extra: bytes.len() - start - 8 * n });
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for c in 0..field.n_comp() {
        for q in 0..field.dim() {
            grid.for_each_real(|i, j, k| {
                let node = grid.idx(i as isize, j as isize, k as isize);
                field.at_mut(c, node)[q] = values.next().unwrap();
            });
        }
    }
    if let Some(b) = boundary {
        apply_boundary(&mut field, b.into());
    }
    Ok((field, header.t))
}

pub fn write(path: &Path, field: &KForm, t: f64) -> Result<(), SnapshotError> {
    std::fs::write(path, encode(field, t)?)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(KForm, f64), SnapshotError> {
    decode(&std::fs::read(path)?)
}
