//! Per-participant text embedding files (`<id>.emb.f32le`).
//!
//! Layout: 8-byte magic `SEVFEMB1`, `u32` little-endian dimension, then `dim`
//! little-endian `f32` values.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};

pub const TEXT_DIM: usize = 768;
pub const EMB_MAGIC: &[u8; 8] = b"SEVFEMB1";
pub const EMB_EXT: &str = "emb.f32le";

#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedding {
    pub vector: Vec<f64>,
    pub present: bool,
}

impl TextEmbedding {
    pub fn absent() -> Self {
        Self {
            vector: vec![0.0; TEXT_DIM],
            present: false,
        }
    }
}

pub fn embedding_file_name(id: &str) -> String {
    format!("{id}.{EMB_EXT}")
}

pub fn encode_embedding(vector: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * vector.len());
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&(vector.len() as u32).to_le_bytes());
    for v in vector {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_embedding(bytes: &[u8]) -> Result<Vec<f32>> {
    if bytes.len() < 12 || &bytes[..8] != EMB_MAGIC {
        return Err(Error::Data("embedding file: bad magic".into()));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() != 12 + 4 * dim {
        return Err(Error::Data(format!(
            "embedding file: {} bytes does not match dim {dim}",
            bytes.len()
        )));
    }
    Ok(bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Write `<outdir>/<id>.emb.f32le` and return its path.
pub fn write_embedding_file(id: &str, vector: &[f32], outdir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let path = outdir.join(embedding_file_name(id));
    fs::write(&path, encode_embedding(vector)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_embedding_file(path: &Path) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embedding(&bytes)
}

/// Load a 768-D embedding; missing, malformed or wrong-dimension files yield the absent vector.
pub fn safe_text_embedding(path: Option<&Path>) -> TextEmbedding {
    let Some(path) = path else {
        return TextEmbedding::absent();
    };
    match read_embedding_file(path) {
        Ok(v) if v.len() == TEXT_DIM => TextEmbedding {
            vector: v.into_iter().map(f64::from).collect(),
            present: true,
        },
        Ok(v) => {
            warn!("embedding {} has dim {}, expected {TEXT_DIM}", path.display(), v.len());
            TextEmbedding::absent()
        }
        Err(e) => {
            warn!("embedding {}: {e}", path.display());
            TextEmbedding::absent()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_size_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let v: Vec<f32> = (0..TEXT_DIM).map(|i| (i as f32).sin() * 1e-3).collect();
        let p = write_embedding_file("301", &v, dir.path()).unwrap();
        assert_eq!(p.file_name().unwrap(), "301.emb.f32le");
        assert_eq!(fs::metadata(&p).unwrap().len(), 3084);
        let back = read_embedding_file(&p).unwrap();
        assert_eq!(
            v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            back.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_embedding_payload() {
        let bytes = encode_embedding(&[0.0; TEXT_DIM]);
        assert!(bytes[12..].iter().all(|&b| b == 0));
    }

    #[test]
    fn malformed_is_rejected() {
        assert!(decode_embedding(b"SEVFEMB1\x02\0\0\0\0\0\0\0").is_err());
        assert!(decode_embedding(b"NOTMAGIC\0\0\0\0").is_err());
        assert!(!safe_text_embedding(Some(Path::new("/nope.emb.f32le"))).present);
    }
}
