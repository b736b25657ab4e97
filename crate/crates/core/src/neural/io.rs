//! Model file format.
//!
//! Little-endian layout: magic `ZGGPMDL1`, one architecture tag byte
//! (0 = attention, 1 = conv), the config fields as u32 in declaration
//! order, then every parameter tensor as (u16 name length, name bytes,
//! u8 rank, u32 dims..., f32 values...). Values are always stored at
//! 32-bit precision regardless of the in-memory scalar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{
    attention, conv, Architecture, AttentionNetConfig, ConvNetConfig, NeuralError, ParamSet,
    PositionalMode, Tensor, ValueNet,
};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 8] = b"ZGGPMDL1";

pub fn save_model<S: Scalar>(net: &ValueNet<S>, path: &Path) -> Result<(), NeuralError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ValueNet<f32>, NeuralError> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}

pub fn write_model<S: Scalar, W: Write>(net: &ValueNet<S>, w: &mut W) -> Result<(), NeuralError> {
    w.write_all(MODEL_MAGIC)?;
    match net.arch() {
        Architecture::Attention(cfg) => {
            w.write_all(&[0u8])?;
            let mode = match cfg.positional_mode {
                PositionalMode::Sinusoidal => 0u32,
                PositionalMode::Learned => 1u32,
            };
            for v in [
                cfg.embed_dim as u32,
                cfg.heads as u32,
                cfg.layers as u32,
                cfg.ff_dim as u32,
                mode,
                cfg.feature_dim as u32,
                cfg.max_tiles as u32,
            ] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Architecture::Conv(cfg) => {
            w.write_all(&[1u8])?;
            for v in [
                cfg.channels as u32,
                cfg.conv_layers as u32,
                cfg.kernel as u32,
                cfg.grid.0 as u32,
                cfg.grid.1 as u32,
                cfg.feature_dim as u32,
            ] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    for (name, tensor) in net.params().iter() {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u16).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&[tensor.shape().len() as u8])?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &v in tensor.values() {
            w.write_all(&v.to_f32_lossy().to_le_bytes())?;
        }
    }
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> NeuralError {
    NeuralError::CorruptModel(msg.into())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), NeuralError> {
    r.read_exact(buf)
        .map_err(|_| corrupt(format!("truncated while reading {what}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, NeuralError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_model<R: Read>(r: &mut R) -> Result<ValueNet<f32>, NeuralError> {
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let mut tag = [0u8; 1];
    read_exact(r, &mut tag, "architecture tag")?;
    let arch = match tag[0] {
        0 => {
            let embed_dim = read_u32(r, "embed_dim")? as usize;
            let heads = read_u32(r, "heads")? as usize;
            let layers = read_u32(r, "layers")? as usize;
            let ff_dim = read_u32(r, "ff_dim")? as usize;
            let positional_mode = match read_u32(r, "positional_mode")? {
                0 => PositionalMode::Sinusoidal,
                1 => PositionalMode::Learned,
                other => return Err(corrupt(format!("bad positional mode {other}"))),
            };
            let feature_dim = read_u32(r, "feature_dim")? as usize;
            let max_tiles = read_u32(r, "max_tiles")? as usize;
            Architecture::Attention(AttentionNetConfig {
                embed_dim,
                heads,
                layers,
                ff_dim,
                positional_mode,
                feature_dim,
                max_tiles,
            })
        }
        1 => {
            let channels = read_u32(r, "channels")? as usize;
            let conv_layers = read_u32(r, "conv_layers")? as usize;
            let kernel = read_u32(r, "kernel")? as usize;
            let grid_h = read_u32(r, "grid height")? as usize;
            let grid_w = read_u32(r, "grid width")? as usize;
            let feature_dim = read_u32(r, "feature_dim")? as usize;
            Architecture::Conv(ConvNetConfig {
                channels,
                conv_layers,
                kernel,
                grid: (grid_h, grid_w),
                feature_dim,
            })
        }
        other => return Err(corrupt(format!("unknown architecture tag {other}"))),
    };
    arch.validate()
        .map_err(|e| corrupt(format!("invalid stored config: {e}")))?;

    let schema = match &arch {
        Architecture::Attention(cfg) => attention::schema(cfg),
        Architecture::Conv(cfg) => conv::schema(cfg),
    };
    let mut params: ParamSet<f32> = ParamSet::from_schema(&schema);
    #[allow(clippy::needless_range_loop)]
    for i in 0..schema.len() {
        let mut len2 = [0u8; 2];
        read_exact(r, &mut len2, "tensor name length")?;
        let name_len = u16::from_le_bytes(len2) as usize;
        let mut name = vec![0u8; name_len];
        read_exact(r, &mut name, "tensor name")?;
        let name = String::from_utf8(name).map_err(|_| corrupt("tensor name is not utf-8"))?;
        if name != schema[i].name {
            return Err(corrupt(format!(
                "expected tensor `{}`, found `{name}`",
                schema[i].name
            )));
        }
        let mut rank = [0u8; 1];
        read_exact(r, &mut rank, "tensor rank")?;
        let mut dims = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            dims.push(read_u32(r, "tensor dim")? as usize);
        }
        if dims != schema[i].shape {
            return Err(corrupt(format!(
                "tensor `{name}` has shape {dims:?}, expected {:?}",
                schema[i].shape
            )));
        }
        let count: usize = dims.iter().product();
        let mut values = vec![0f32; count];
        for v in values.iter_mut() {
            let mut b = [0u8; 4];
            read_exact(r, &mut b, "tensor values")?;
            *v = f32::from_le_bytes(b);
        }
        *params.get_mut(i) = Tensor::from_values(dims, values);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(corrupt("trailing bytes after final tensor"));
    }
    ValueNet::from_parts(arch, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::GameId;
    use crate::neural::NetPreset;

    fn sample_net() -> ValueNet<f32> {
        let spec = GameId::TicTacToe.spec();
        let cfg = AttentionNetConfig::for_game(&spec, NetPreset::Small, PositionalMode::Learned);
        ValueNet::new(Architecture::Attention(cfg), 42).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = sample_net();
        let mut bytes = Vec::new();
        write_model(&net, &mut bytes).unwrap();
        let back = read_model(&mut bytes.as_slice()).unwrap();
        assert_eq!(net.arch(), back.arch());
        for ((na, ta), (nb, tb)) in net.params().iter().zip(back.params().iter()) {
            assert_eq!(na, nb);
            assert_eq!(ta.values(), tb.values());
        }

        // Serialize again: identical bytes.
        let mut bytes2 = Vec::new();
        write_model(&back, &mut bytes2).unwrap();
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let net = sample_net();
        let mut bytes = Vec::new();
        write_model(&net, &mut bytes).unwrap();
        for cut in [3usize, 9, 20, bytes.len() - 1] {
            let err = read_model(&mut &bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, NeuralError::CorruptModel(_)),
                "cut {cut}: {err}"
            );
        }
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let net = sample_net();
        let mut bytes = Vec::new();
        write_model(&net, &mut bytes).unwrap();
        bytes[0] = b'Q';
        assert!(matches!(
            read_model(&mut bytes.as_slice()),
            Err(NeuralError::CorruptModel(_))
        ));
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let net = sample_net();
        let mut bytes = Vec::new();
        write_model(&net, &mut bytes).unwrap();
        bytes.push(0);
        assert!(matches!(
            read_model(&mut bytes.as_slice()),
            Err(NeuralError::CorruptModel(_))
        ));
    }
}
