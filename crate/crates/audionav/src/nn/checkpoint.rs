//! Versioned named-tensor container.
//!
//! Layout (all integers little-endian):
//! `"ANAVTNSR" | version u32 | seed u64 | count u32`, then per tensor:
//! `name_len u32 | name utf8 | dtype u8 | ndim u32 | dims u64... | payload`.
//! Payloads are raw little-endian scalars; round-trips are bit-exact.

use std::io::{Read, Write};

use super::array::{Array, Scalar};
use super::params::ParameterSet;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"ANAVTNSR";
const VERSION: u32 = 1;

pub fn save_tensors<T: Scalar, W: Write>(w: &mut W, params: &ParameterSet<T>) -> Result<()> {
    let ioerr = |e: std::io::Error| Error::Checkpoint(format!("write failed: {e}"));
    w.write_all(MAGIC).map_err(ioerr)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(ioerr)?;
    w.write_all(&params.seed().to_le_bytes()).map_err(ioerr)?;
    w.write_all(&(params.len() as u32).to_le_bytes()).map_err(ioerr)?;
    for (name, value) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(ioerr)?;
        w.write_all(name.as_bytes()).map_err(ioerr)?;
        w.write_all(&[T::DTYPE.tag()]).map_err(ioerr)?;
        w.write_all(&(value.shape().len() as u32).to_le_bytes()).map_err(ioerr)?;
        for &d in value.shape() {
            w.write_all(&(d as u64).to_le_bytes()).map_err(ioerr)?;
        }
        match T::DTYPE {
            super::array::Dtype::F32 => {
                for &v in value.data() {
                    w.write_all(&(v.as_f64() as f32).to_le_bytes()).map_err(ioerr)?;
                }
            }
            super::array::Dtype::F64 => {
                for &v in value.data() {
                    w.write_all(&v.as_f64().to_le_bytes()).map_err(ioerr)?;
                }
            }
        }
    }
    Ok(())
}

pub fn load_tensors<T: Scalar, R: Read>(r: &mut R) -> Result<ParameterSet<T>> {
    let ioerr = |e: std::io::Error| Error::Checkpoint(format!("read failed: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(ioerr)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic; not a tensor container".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let seed = read_u64(r)?;
    let count = read_u32(r)?;
    let mut params = ParameterSet::new(seed);
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(ioerr)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?;
        let mut dtype = [0u8; 1];
        r.read_exact(&mut dtype).map_err(ioerr)?;
        if dtype[0] != T::DTYPE.tag() {
            return Err(Error::Checkpoint(format!(
                "tensor {name}: dtype tag {} does not match requested precision",
                dtype[0]
            )));
        }
        let ndim = read_u32(r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u64(r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        match T::DTYPE {
            super::array::Dtype::F32 => {
                let mut buf = [0u8; 4];
                for _ in 0..numel {
                    r.read_exact(&mut buf).map_err(ioerr)?;
                    data.push(T::from_f64(f32::from_le_bytes(buf) as f64));
                }
            }
            super::array::Dtype::F64 => {
                let mut buf = [0u8; 8];
                for _ in 0..numel {
                    r.read_exact(&mut buf).map_err(ioerr)?;
                    data.push(T::from_f64(f64::from_le_bytes(buf)));
                }
            }
        }
        params.insert(name, Array::from_vec(&shape, data));
    }
    Ok(params)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::Checkpoint(format!("read failed: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::Checkpoint(format!("read failed: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{self, Domain};
    use rand::Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = seed::rng(5, Domain::ParamInit, 0);
        let mut params = ParameterSet::<f32>::new(77);
        params.insert("a.w", Array::from_vec(&[3, 2], (0..6).map(|_| rng.gen()).collect()));
        params.insert("a.b", Array::from_vec(&[3], vec![f32::MIN_POSITIVE, -0.0, 1e30]));
        params.insert("gru.h", Array::zeros(&[4, 4]));

        let mut buf = Vec::new();
        save_tensors(&mut buf, &params).unwrap();
        let loaded = load_tensors::<f32, _>(&mut buf.as_slice()).unwrap();

        assert_eq!(loaded.seed(), 77);
        assert_eq!(loaded.len(), params.len());
        for ((n1, a1), (n2, a2)) in params.iter().zip(loaded.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(a1.shape(), a2.shape());
            for (x, y) in a1.data().iter().zip(a2.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_garbage_and_wrong_dtype() {
        assert!(load_tensors::<f32, _>(&mut &b"not a checkpoint"[..]).is_err());
        let mut params = ParameterSet::<f64>::new(0);
        params.insert("x", Array::scalar(1.0f64));
        let mut buf = Vec::new();
        save_tensors(&mut buf, &params).unwrap();
        assert!(load_tensors::<f32, _>(&mut buf.as_slice()).is_err());
    }
}
