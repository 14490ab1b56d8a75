//! Binary embedding file formats.
//!
//! `EMB1`: magic, u32 version (1), u32 dim, u64 count, then count x dim
//! little-endian f32 row-major. Row ids live in a sidecar text file with the
//! same stem and extension `.ids`, one id per line.
//!
//! `TOK1`: magic, u32 version (1), u32 dim, then per document: u32 id length,
//! id bytes, u32 token count, token count x dim f32.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const TOK_MAGIC: &[u8; 4] = b"TOK1";
pub const FORMAT_VERSION: u32 = 1;

/// Sidecar id file for an `EMB1` path.
pub fn ids_path(emb_path: &Path) -> PathBuf {
    emb_path.with_extension("ids")
}

pub(crate) struct RawMatrix {
    pub dim: usize,
    pub ids: Vec<String>,
    pub data: Vec<f32>,
}

pub(crate) struct RawTokens {
    pub dim: usize,
    pub docs: Vec<(String, usize, Vec<f32>)>,
}

fn fmt_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {msg}", path.display()))
}

fn read_u32<R: Read>(r: &mut R, path: &Path, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| fmt_err(path, format!("truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, path: &Path, what: &str) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(|_| fmt_err(path, format!("payload ends inside {what}")))?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn expect_eof<R: Read>(r: &mut R, path: &Path) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(fmt_err(path, "trailing bytes after declared payload")),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn check_finite(row: &[f32], label: &str, path: &Path) -> Result<()> {
    if let Some(pos) = row.iter().position(|v| !v.is_finite()) {
        return Err(fmt_err(path, format!("{label} has a non-finite value at column {pos}")));
    }
    Ok(())
}

pub(crate) fn read_emb(path: &Path) -> Result<RawMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| fmt_err(path, "file too short for magic"))?;
    if &magic != EMB_MAGIC {
        return Err(fmt_err(path, "bad magic, expected EMB1"));
    }
    let version = read_u32(&mut r, path, "version")?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(path, format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r, path, "dim")? as usize;
    let mut count_bytes = [0u8; 8];
    r.read_exact(&mut count_bytes).map_err(|_| fmt_err(path, "truncated while reading count"))?;
    let count = u64::from_le_bytes(count_bytes) as usize;
    if dim == 0 {
        return Err(fmt_err(path, "dimension is zero"));
    }
    let mut data = Vec::with_capacity(count.saturating_mul(dim).min(1 << 28));
    for row in 0..count {
        let values = read_f32s(&mut r, dim, path, &format!("row {row} (header declares {count} rows)"))?;
        check_finite(&values, &format!("row {row}"), path)?;
        data.extend_from_slice(&values);
    }
    expect_eof(&mut r, path)?;

    let ids_file = ids_path(path);
    let ids_reader = File::open(&ids_file).map_err(|e| Error::io(&ids_file, e))?;
    let mut ids = Vec::with_capacity(count);
    for line in BufReader::new(ids_reader).lines() {
        let line = line.map_err(|e| Error::io(&ids_file, e))?;
        let id = line.strip_suffix('\r').unwrap_or(&line);
        if !id.is_empty() {
            ids.push(id.to_string());
        }
    }
    if ids.len() != count {
        return Err(fmt_err(
            path,
            format!("header declares {count} rows but {} lists {} ids", ids_file.display(), ids.len()),
        ));
    }
    Ok(RawMatrix { dim, ids, data })
}

pub(crate) fn write_emb(path: &Path, dim: usize, ids: &[String], data: &[f32]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let body = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(EMB_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(dim as u32).to_le_bytes())?;
        w.write_all(&(ids.len() as u64).to_le_bytes())?;
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    };
    body(&mut w).map_err(|e| Error::io(path, e))?;
    let ids_file = ids_path(path);
    crate::tsv::write_file(&ids_file, |w| {
        for id in ids {
            writeln!(w, "{id}")?;
        }
        Ok(())
    })
}

pub(crate) fn read_tok(path: &Path) -> Result<RawTokens> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| fmt_err(path, "file too short for magic"))?;
    if &magic != TOK_MAGIC {
        return Err(fmt_err(path, "bad magic, expected TOK1"));
    }
    let version = read_u32(&mut r, path, "version")?;
    if version != FORMAT_VERSION {
        return Err(fmt_err(path, format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r, path, "dim")? as usize;
    if dim == 0 {
        return Err(fmt_err(path, "dimension is zero"));
    }
    let mut docs = Vec::new();
    loop {
        let mut len_bytes = [0u8; 4];
        match r.read(&mut len_bytes[..1]) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => return Err(Error::io(path, e)),
        }
        r.read_exact(&mut len_bytes[1..]).map_err(|_| fmt_err(path, "truncated id length"))?;
        let id_len = u32::from_le_bytes(len_bytes) as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(|_| fmt_err(path, "truncated id"))?;
        let id = String::from_utf8(id).map_err(|_| fmt_err(path, "id is not UTF-8"))?;
        let n_tokens = read_u32(&mut r, path, "token count")? as usize;
        if n_tokens == 0 {
            return Err(fmt_err(path, format!("document {id} has zero tokens")));
        }
        let data = read_f32s(&mut r, n_tokens * dim, path, &format!("tokens of {id}"))?;
        check_finite(&data, &format!("document {id}"), path)?;
        docs.push((id, n_tokens, data));
    }
    Ok(RawTokens { dim, docs })
}

pub(crate) fn write_tok<'a, I>(path: &Path, dim: usize, docs: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, usize, &'a [f32])>,
{
    crate::tsv::write_file(path, |w| {
        w.write_all(TOK_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(dim as u32).to_le_bytes())?;
        for (id, n, data) in docs {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(&(n as u32).to_le_bytes())?;
            for v in data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })
}
