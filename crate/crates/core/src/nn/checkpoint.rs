//! Checkpoint file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "GZSN" | u16 version | u32 record count
//! per record: u16 name length | UTF-8 name | u8 dtype (0 = f32) | u8 rank
//!             | u32 dims[rank] | payload f32, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"GZSN";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 0;

pub fn save_checkpoint(records: &[(String, Tensor)], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    for (name, tensor) in records {
        let name_bytes = name.as_bytes();
        w.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
        w.write_all(name_bytes)?;
        w.write_all(&[DTYPE_F32, tensor.rank() as u8])?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::CkptTruncated(what.to_string()))
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::CkptMagic);
    }
    let mut b2 = [0u8; 2];
    read_exact(&mut r, &mut b2, "version")?;
    let version = u16::from_le_bytes(b2);
    if version != VERSION {
        return Err(Error::CkptVersion { found: version, supported: VERSION });
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "record count")?;
    let count = u32::from_le_bytes(b4) as usize;

    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        read_exact(&mut r, &mut b2, "name length")?;
        let name_len = u16::from_le_bytes(b2) as usize;
        let mut name_buf = vec![0u8; name_len];
        read_exact(&mut r, &mut name_buf, "name")?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| Error::CkptTruncated(format!("record {i} name not UTF-8")))?;
        let mut b1 = [0u8; 1];
        read_exact(&mut r, &mut b1, "dtype")?;
        if b1[0] != DTYPE_F32 {
            return Err(Error::CkptTruncated(format!("record {name}: unsupported dtype {}", b1[0])));
        }
        read_exact(&mut r, &mut b1, "rank")?;
        let rank = b1[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            read_exact(&mut r, &mut b4, "dims")?;
            shape.push(u32::from_le_bytes(b4) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = vec![0.0f32; n];
        for v in &mut data {
            read_exact(&mut r, &mut b4, &format!("payload of {name}"))?;
            *v = f32::from_le_bytes(b4);
        }
        records.push((name, Tensor::new(shape, data)?));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn roundtrip_is_bit_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let records = vec![
            ("encoder.conv1.weight".to_string(), Tensor::rand_uniform(&[4, 3, 2, 2], -1.0, 1.0, &mut rng)),
            ("encoder.conv1.bias".to_string(), Tensor::rand_uniform(&[4], -1.0, 1.0, &mut rng)),
            ("meta".to_string(), Tensor::new(vec![3], vec![32.0, 3.0, 100.0]).unwrap()),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.gzsn");
        save_checkpoint(&records, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.len(), records.len());
        for ((na, ta), (nb, tb)) in records.iter().zip(&loaded) {
            assert_eq!(na, nb);
            assert_eq!(ta.shape(), tb.shape());
            // bitwise, not just approximate
            for (x, y) in ta.data().iter().zip(tb.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn corrupted_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.gzsn");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::CkptMagic)));
    }

    #[test]
    fn future_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v2.gzsn");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&2u16.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CkptVersion { found: 2, .. })
        ));
    }

    #[test]
    fn truncated_payload_is_reported() {
        let records = vec![("p".to_string(), Tensor::zeros(&[8]))];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.gzsn");
        save_checkpoint(&records, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::CkptTruncated(_))));
    }
}
