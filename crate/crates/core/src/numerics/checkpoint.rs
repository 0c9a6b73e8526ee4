//! Binary parameter checkpoints.
//!
//! Layout (all little-endian): magic `PXNN`, `u32` version, `u32` layer count,
//! one `u32` per layer size, then for each layer the row-major weights followed
//! by the biases, every value as `f64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics::mlp::{Activation, MlpNetwork};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"PXNN";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<T: Scalar, W: Write>(net: &MlpNetwork<T>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let sizes = net.layer_sizes();
    w.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for &s in sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    // The flat parameter layout already matches the on-disk order.
    for p in net.params() {
        w.write_all(&p.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

/// The activation is not stored in the file and must be supplied by the caller.
pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R, activation: Activation) -> Result<MlpNetwork<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config("not a PXNN checkpoint"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::config(format!("unsupported checkpoint version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    if n > 1 << 16 {
        return Err(Error::config("implausible layer count in checkpoint"));
    }
    let sizes = (0..n).map(|_| read_u32(&mut r).map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
    let mut net = MlpNetwork::<T>::zeros(&sizes, activation)?;
    let mut buf = [0u8; 8];
    for p in net.params_mut() {
        r.read_exact(&mut buf)?;
        *p = T::lit(f64::from_le_bytes(buf));
    }
    Ok(net)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
