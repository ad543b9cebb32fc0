use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Party/input/output arities of a Bell scenario.
///
/// Composite indices are mixed-radix with the first party most significant,
/// and behavior vectors are laid out as `z * num_c + c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub parties: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl Scenario {
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(Error::Domain(format!(
                "arity lists must be nonempty and equal length ({} vs {})",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.iter().chain(outputs.iter()).any(|&k| k == 0) {
            return Err(Error::Domain("all arities must be at least 1".into()));
        }
        Ok(Scenario { parties: inputs.len(), inputs, outputs })
    }

    /// `parties` parties, each with `m` inputs and `k` outputs.
    pub fn uniform(parties: usize, m: usize, k: usize) -> Result<Self> {
        Self::new(vec![m; parties], vec![k; parties])
    }

    pub fn bipartite() -> Self {
        Self::uniform(2, 2, 2).unwrap()
    }

    pub fn tripartite() -> Self {
        Self::uniform(3, 2, 2).unwrap()
    }

    /// Binary inputs and outputs with two or three parties.
    pub fn is_supported(&self) -> bool {
        (self.parties == 2 || self.parties == 3)
            && self.inputs.iter().all(|&m| m == 2)
            && self.outputs.iter().all(|&k| k == 2)
    }

    pub fn require_supported(&self) -> Result<()> {
        if self.is_supported() {
            Ok(())
        } else {
            Err(Error::Unsupported(self.id()))
        }
    }

    pub fn id(&self) -> String {
        if self.inputs.iter().all(|&m| m == self.inputs[0]) && self.outputs.iter().all(|&k| k == self.outputs[0]) {
            format!("{}-{}-{}", self.parties, self.inputs[0], self.outputs[0])
        } else {
            format!("in{:?}-out{:?}", self.inputs, self.outputs)
        }
    }

    pub fn num_c(&self) -> usize {
        self.outputs.iter().product()
    }

    pub fn num_z(&self) -> usize {
        self.inputs.iter().product()
    }

    /// Length of a full behavior vector, `|C|·|Z|`.
    pub fn len(&self) -> usize {
        self.num_c() * self.num_z()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, c: usize, z: usize) -> usize {
        z * self.num_c() + c
    }

    /// Inverse of [`Scenario::index`].
    #[inline]
    pub fn split(&self, i: usize) -> (usize, usize) {
        (i % self.num_c(), i / self.num_c())
    }

    pub fn decode_c(&self, c: usize) -> Vec<usize> {
        decode(c, &self.outputs)
    }

    pub fn decode_z(&self, z: usize) -> Vec<usize> {
        decode(z, &self.inputs)
    }

    pub fn encode_c(&self, parts: &[usize]) -> Result<usize> {
        encode(parts, &self.outputs)
    }

    pub fn encode_z(&self, parts: &[usize]) -> Result<usize> {
        encode(parts, &self.inputs)
    }
}

fn decode(mut v: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for i in (0..radix.len()).rev() {
        out[i] = v % radix[i];
        v /= radix[i];
    }
    out
}

fn encode(parts: &[usize], radix: &[usize]) -> Result<usize> {
    if parts.len() != radix.len() {
        return Err(Error::DimensionMismatch { expected: radix.len(), got: parts.len() });
    }
    let mut v = 0;
    for (p, r) in parts.iter().zip(radix) {
        if p >= r {
            return Err(Error::Domain(format!("index {p} out of range {r}")));
        }
        v = v * r + p;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_radix_first_party_most_significant() {
        let s = Scenario::tripartite();
        assert_eq!(s.num_c(), 8);
        assert_eq!(s.len(), 64);
        assert_eq!(s.encode_c(&[1, 0, 0]).unwrap(), 4);
        assert_eq!(s.decode_z(6), vec![1, 1, 0]);
        for i in 0..s.len() {
            let (c, z) = s.split(i);
            assert_eq!(s.index(c, z), i);
        }
    }

    #[test]
    fn rejects_bad_arity() {
        assert!(Scenario::new(vec![2, 0], vec![2, 2]).is_err());
        assert!(Scenario::new(vec![2], vec![2, 2]).is_err());
        assert!(!Scenario::uniform(2, 3, 2).unwrap().is_supported());
    }
}
