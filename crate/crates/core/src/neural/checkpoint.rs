//! Parameter files: one line of JSON describing the tensors, then the raw
//! values as little-endian f64 in tensor order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mlp, Parameters};
use crate::error::{Error, Result};

const FORMAT: &str = "currl-params";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn new(name: impl Into<String>, shape: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            shape,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamHeader {
    pub format: String,
    pub version: u32,
    pub layer_dims: Vec<usize>,
    pub tensors: Vec<TensorSpec>,
}

impl ParamHeader {
    pub fn new(layer_dims: Vec<usize>, tensors: Vec<TensorSpec>) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            layer_dims,
            tensors,
        }
    }

    /// Header for a bare MLP.
    pub fn for_mlp(net: &Mlp) -> Self {
        Self::new(net.layer_dims(), mlp_tensor_specs(net, ""))
    }
}

pub(crate) fn mlp_tensor_specs(net: &Mlp, prefix: &str) -> Vec<TensorSpec> {
    net.layer_dims()
        .windows(2)
        .enumerate()
        .flat_map(|(i, w)| {
            [
                TensorSpec::new(format!("{prefix}layer{i}.weight"), vec![w[1], w[0]]),
                TensorSpec::new(format!("{prefix}layer{i}.bias"), vec![w[1]]),
            ]
        })
        .collect()
}

pub fn write_params(path: &Path, header: &ParamHeader, tensors: &[&[f64]]) -> Result<()> {
    if header.tensors.len() != tensors.len()
        || header
            .tensors
            .iter()
            .zip(tensors)
            .any(|(s, t)| s.len() != t.len())
    {
        return Err(Error::Internal(format!(
            "parameter header does not describe the tensors written to {}",
            path.display()
        )));
    }
    let mut buf = serde_json::to_vec(header)?;
    buf.push(b'\n');
    for t in tensors {
        for v in t.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_params(path: &Path) -> Result<(ParamHeader, Vec<Vec<f64>>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = Vec::new();
    reader
        .read_until(b'\n', &mut line)
        .map_err(|e| Error::io(path, e))?;
    let header: ParamHeader = serde_json::from_slice(&line)?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported parameter file {} v{}",
            path.display(),
            header.format,
            header.version
        )));
    }
    let mut body = Vec::new();
    reader
        .read_to_end(&mut body)
        .map_err(|e| Error::io(path, e))?;
    let expected: usize = header.tensors.iter().map(TensorSpec::len).sum();
    if body.len() != expected * 8 {
        return Err(Error::Data(format!(
            "{}: expected {} values, found {} bytes",
            path.display(),
            expected,
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let tensors = header
        .tensors
        .iter()
        .map(|s| values.by_ref().take(s.len()).collect())
        .collect();
    Ok((header, tensors))
}

impl Mlp {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_params(path, &ParamHeader::for_mlp(self), &self.tensors())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, tensors) = read_params(path)?;
        let mut net = Mlp::zeros(&header.layer_dims)?;
        net.assign_tensors(&header, tensors, "")?;
        Ok(net)
    }

    /// Fills parameters from named tensors produced by [`read_params`].
    pub(crate) fn assign_tensors(
        &mut self,
        header: &ParamHeader,
        tensors: Vec<Vec<f64>>,
        prefix: &str,
    ) -> Result<()> {
        let specs = mlp_tensor_specs(self, prefix);
        let mut found = 0;
        let mut dst = self.tensors_mut();
        for (spec, values) in header.tensors.iter().zip(tensors) {
            if let Some(i) = specs.iter().position(|s| s == spec) {
                dst[i].copy_from_slice(&values);
                found += 1;
            }
        }
        if found != specs.len() {
            return Err(Error::Data(format!(
                "parameter file is missing {} network tensors",
                specs.len() - found
            )));
        }
        Ok(())
    }
}
