use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::network::{Activation, Decoder, DecoderConfig};
use super::train::LatentLibrary;
use crate::sampling::{read_u32, read_u64};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"UDFD";
const VERSION: u32 = 1;

/// A trained decoder with its shape latents.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub decoder: Decoder,
    pub latents: LatentLibrary,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let c = self.decoder.config();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for v in [c.latent_dim, c.layers, c.width, c.fourier_octaves] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        let (code, beta) = match c.activation {
            Activation::Relu => (0u32, 0.0f64),
            Activation::Softplus { beta } => (1, beta),
        };
        w.write_all(&code.to_le_bytes())?;
        w.write_all(&beta.to_le_bytes())?;
        let params = self.decoder.parameters();
        w.write_all(&(params.len() as u64).to_le_bytes())?;
        for p in params {
            w.write_all(&(p as f32).to_le_bytes())?;
        }
        w.write_all(&(self.latents.len() as u32).to_le_bytes())?;
        for (name, z) in &self.latents.entries {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            for v in z {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a UDFD checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = read_u32(&mut r)? as usize;
        }
        let code = read_u32(&mut r)?;
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        let beta = f64::from_le_bytes(b);
        let activation = match code {
            0 => Activation::Relu,
            1 => Activation::Softplus { beta },
            _ => return Err(Error::Format(format!("unknown activation code {code}"))),
        };
        let config = DecoderConfig {
            latent_dim: dims[0],
            layers: dims[1],
            width: dims[2],
            fourier_octaves: dims[3],
            activation,
        };
        config.validate()?;
        let n = read_u64(&mut r)? as usize;
        if n != config.parameter_count() {
            return Err(Error::Format(format!(
                "checkpoint holds {n} parameters, configuration needs {}",
                config.parameter_count()
            )));
        }
        let params = read_f32s(&mut r, n)?;
        let decoder = Decoder::from_parameters(config, &params)?;
        let count = read_u32(&mut r)? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("latent name is not UTF-8".into()))?;
            entries.push((name, read_f32s(&mut r, config.latent_dim)?));
        }
        Ok(Self {
            decoder,
            latents: LatentLibrary { entries },
        })
    }
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 4];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f32::from_le_bytes(b) as f64);
    }
    Ok(out)
}
