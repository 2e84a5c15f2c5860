//! Binary fingerprint files.
//!
//! Layout: `ZPFP`, one version byte, a little-endian `u32` length followed
//! by that many bytes of UTF-8 `key=value` metadata lines, then `dim * dim`
//! little-endian `f64` values in row-major order.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{Fingerprint, FingerprintError, FingerprintMeta, Result};

pub const MAGIC: &[u8; 4] = b"ZPFP";
pub const VERSION: u8 = 1;
const HEADER: usize = 4 + 1 + 4;

fn meta_text(meta: &FingerprintMeta) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "version={}", meta.version);
    let _ = writeln!(s, "dim={}", meta.dim);
    let _ = writeln!(s, "n={}", meta.n);
    let _ = writeln!(s, "m={}", meta.m);
    let _ = writeln!(s, "t={}", meta.t);
    let _ = writeln!(s, "alpha={:?}", meta.alpha);
    let _ = writeln!(s, "n_used={}", meta.n_used);
    let _ = writeln!(s, "embedder={}", meta.embedder);
    let _ = writeln!(s, "query_hash={}", meta.query_hash);
    let _ = writeln!(s, "model={}", meta.model);
    let _ = writeln!(s, "created_unix={}", meta.created_unix);
    s
}

fn parse_meta(text: &str) -> Result<FingerprintMeta> {
    let mut fields = std::collections::HashMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FingerprintError::Metadata(format!("line without `=`: {line:?}")))?;
        fields.insert(k, v);
    }
    fn get<'a>(f: &std::collections::HashMap<&str, &'a str>, key: &str) -> Result<&'a str> {
        f.get(key)
            .copied()
            .ok_or_else(|| FingerprintError::Metadata(format!("missing key `{key}`")))
    }
    fn num<T: std::str::FromStr>(f: &std::collections::HashMap<&str, &str>, key: &str) -> Result<T> {
        let v = get(f, key)?;
        v.parse()
            .map_err(|_| FingerprintError::Metadata(format!("bad value for `{key}`: {v:?}")))
    }
    Ok(FingerprintMeta {
        version: num(&fields, "version")?,
        dim: num(&fields, "dim")?,
        n: num(&fields, "n")?,
        m: num(&fields, "m")?,
        t: num(&fields, "t")?,
        alpha: num(&fields, "alpha")?,
        n_used: num(&fields, "n_used")?,
        embedder: get(&fields, "embedder")?.to_string(),
        query_hash: get(&fields, "query_hash")?.to_string(),
        model: get(&fields, "model")?.to_string(),
        created_unix: num(&fields, "created_unix")?,
    })
}

/// Encode a fingerprint to bytes.
pub fn write_fingerprint(fp: &Fingerprint) -> Vec<u8> {
    let meta = meta_text(&fp.meta);
    let d = fp.dim();
    let mut out = Vec::with_capacity(HEADER + meta.len() + 8 * d * d);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    for r in 0..d {
        for c in 0..d {
            out.extend_from_slice(&fp.jacobian[(r, c)].to_le_bytes());
        }
    }
    out
}

/// Decode bytes produced by [`write_fingerprint`].
pub fn read_fingerprint(bytes: &[u8]) -> Result<Fingerprint> {
    let actual = bytes.len();
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) {
            FingerprintError::Truncated { expected: HEADER, actual }
        } else {
            FingerprintError::BadMagic
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(FingerprintError::BadMagic);
    }
    if actual < HEADER {
        return Err(FingerprintError::Truncated { expected: HEADER, actual });
    }
    if bytes[4] != VERSION {
        return Err(FingerprintError::UnsupportedVersion(bytes[4]));
    }
    let meta_len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let meta_end = HEADER + meta_len;
    if actual < meta_end {
        return Err(FingerprintError::Truncated { expected: meta_end, actual });
    }
    let text = std::str::from_utf8(&bytes[HEADER..meta_end])
        .map_err(|e| FingerprintError::Metadata(format!("not UTF-8: {e}")))?;
    let meta = parse_meta(text)?;
    if meta.version != VERSION {
        return Err(FingerprintError::SizeMismatch(format!(
            "header version {VERSION}, metadata version {}",
            meta.version
        )));
    }
    let d = meta.dim;
    let expected = d
        .checked_mul(d)
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(meta_end))
        .ok_or_else(|| FingerprintError::SizeMismatch(format!("dim={d} is too large")))?;
    if actual < expected {
        return Err(FingerprintError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(FingerprintError::SizeMismatch(format!(
            "dim={d} implies {expected} bytes, file has {actual}"
        )));
    }
    let payload = &bytes[meta_end..];
    let jacobian = DMatrix::from_fn(d, d, |r, c| {
        let at = 8 * (r * d + c);
        f64::from_le_bytes(payload[at..at + 8].try_into().expect("8 bytes"))
    });
    Fingerprint::new(jacobian, meta)
}

pub fn save_fingerprint(fp: &Fingerprint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_fingerprint(fp)).map_err(|source| FingerprintError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_fingerprint(path: impl AsRef<Path>) -> Result<Fingerprint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| FingerprintError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_fingerprint(&bytes)
}
