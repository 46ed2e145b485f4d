//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  8 bytes   "GOLUNET1"
//! hlen   u64       length of the JSON header
//! header hlen      {"layers": [...], "running": [...], "mode": "..."}
//! count  u64       number of parameters
//! params count×f64
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LayerSpec, MicroNet, Mode, RunningStats};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GOLUNET1";

#[derive(Serialize, Deserialize)]
struct Header {
    layers: Vec<LayerSpec>,
    running: Vec<Option<RunningStats>>,
    mode: Mode,
}

pub fn save_checkpoint(net: &MicroNet, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode_checkpoint(net)?)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MicroNet> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}

pub fn encode_checkpoint(net: &MicroNet) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        layers: net.layers().to_vec(),
        running: net.running_stats().to_vec(),
        mode: net.mode(),
    })?;
    let mut out = Vec::with_capacity(24 + header.len() + 8 * net.param_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(net.param_count() as u64).to_le_bytes());
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Data("checkpoint is truncated".into()));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn take_u64(bytes: &mut &[u8]) -> Result<usize> {
    let b = take(bytes, 8)?;
    Ok(u64::from_le_bytes(b.try_into().expect("eight bytes")) as usize)
}

pub fn decode_checkpoint(mut bytes: &[u8]) -> Result<MicroNet> {
    let cur = &mut bytes;
    if take(cur, 8)? != CHECKPOINT_MAGIC {
        return Err(Error::Data("not a checkpoint: bad magic".into()));
    }
    let hlen = take_u64(cur)?;
    let header: Header = serde_json::from_slice(take(cur, hlen)?)?;
    let count = take_u64(cur)?;
    let raw = take(cur, count.checked_mul(8).ok_or_else(|| Error::Data("bad parameter count".into()))?)?;
    if !cur.is_empty() {
        return Err(Error::Data("trailing bytes after parameters".into()));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    let mut net = MicroNet::new(header.layers, 0)?;
    net.replace_state(params, header.running)?;
    net.set_mode(header.mode);
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::tensor::Tensor;

    #[test]
    fn round_trip_is_exact() {
        let layers = vec![
            LayerSpec::conv3x3(1, 2),
            LayerSpec::batchnorm(2),
            LayerSpec::act(ActivationKind::Golu),
            LayerSpec::dense(18, 2),
        ];
        let mut net = MicroNet::new(layers, 8).unwrap();
        net.forward(&Tensor::new(vec![2, 1, 3, 3], (0..18).map(|v| v as f64 * 0.1).collect()).unwrap())
            .unwrap();
        let back = decode_checkpoint(&encode_checkpoint(&net).unwrap()).unwrap();
        assert_eq!(back.params(), net.params());
        assert_eq!(back.running_stats(), net.running_stats());
        assert_eq!(back.layers(), net.layers());
    }

    #[test]
    fn corrupt_input_is_a_data_error() {
        let net = MicroNet::mlp(&[2, 2], ActivationKind::Relu, 0).unwrap();
        let bytes = encode_checkpoint(&net).unwrap();
        assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 1]), Err(Error::Data(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Data(_))));
    }
}
