//! Dense row-major tensor of real scalars.
//!
//! The one value type for images, feature maps, logits, masks, parameters
//! and gradients. Shapes are dynamic; the layer kernels in [`crate::nn`]
//! interpret rank-4 tensors as `[batch, channel, height, width]` and rank-2
//! tensors as `[batch, feature]`.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    /// Invariant: `shape.iter().product() == data.len()`.
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(
            expected,
            data.len(),
            "shape {:?} expects {} elements, got {}",
            shape,
            expected,
            data.len()
        );
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape,
            data: vec![F::zero(); n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: F) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self::zeros(other.shape.clone())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    /// Exact payload size in bytes under the wire format (8-byte reals,
    /// header excluded).
    pub fn serialized_byte_size(&self) -> u64 {
        8 * self.data.len() as u64
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Interpret as `[batch, channel, height, width]`.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [b, c, h, w] => Ok((b, c, h, w)),
            _ => Err(CoreError::ShapeMismatch {
                expected: "[batch, channel, height, width]".into(),
                got: format!("{:?}", self.shape),
            }),
        }
    }

    pub fn reshaped(mut self, shape: Vec<usize>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(expected, self.data.len(), "reshape preserves element count");
        self.shape = shape;
        self
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn scale(&self, s: F) -> Self {
        self.map(|v| v * s)
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(CoreError::ShapeMismatch {
                expected: format!("{:?}", self.shape),
                got: format!("{:?}", other.shape),
            });
        }
        Ok(())
    }

    /// Concatenate along the batch axis (axis 0). All trailing dims must agree.
    pub fn concat_batch(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| CoreError::InvalidConfig("concat of zero tensors".into()))?;
        let tail = &first.shape[1..];
        let mut batch = 0;
        for p in parts {
            if &p.shape[1..] != tail {
                return Err(CoreError::ShapeMismatch {
                    expected: format!("[_, {:?}]", tail),
                    got: format!("{:?}", p.shape),
                });
            }
            batch += p.shape[0];
        }
        let mut shape = first.shape.clone();
        shape[0] = batch;
        let mut data = Vec::with_capacity(shape.iter().product());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Self { shape, data })
    }

    /// Rows `[start, start+count)` of the batch axis.
    pub fn slice_batch(&self, start: usize, count: usize) -> Self {
        let row: usize = self.shape[1..].iter().product();
        assert!(start + count <= self.shape[0], "batch slice out of range");
        let mut shape = self.shape.clone();
        shape[0] = count;
        Self {
            shape,
            data: self.data[start * row..(start + count) * row].to_vec(),
        }
    }

    /// Concatenate rank-4 tensors along the channel axis.
    pub fn concat_channels(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| CoreError::InvalidConfig("concat of zero tensors".into()))?;
        let (b, _, h, w) = first.dims4()?;
        let mut channels = 0;
        for p in parts {
            let (pb, pc, ph, pw) = p.dims4()?;
            if (pb, ph, pw) != (b, h, w) {
                return Err(CoreError::ShapeMismatch {
                    expected: format!("[{}, _, {}, {}]", b, h, w),
                    got: format!("{:?}", p.shape),
                });
            }
            channels += pc;
        }
        let mut out = Self::zeros(vec![b, channels, h, w]);
        let plane = h * w;
        for bi in 0..b {
            let mut co = 0;
            for p in parts {
                let pc = p.shape[1];
                let src = &p.data[bi * pc * plane..(bi + 1) * pc * plane];
                let dst = &mut out.data[(bi * channels + co) * plane..(bi * channels + co + pc) * plane];
                dst.copy_from_slice(src);
                co += pc;
            }
        }
        Ok(out)
    }

    /// Elementwise mean of equally shaped tensors.
    pub fn mean_of(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| CoreError::InvalidConfig("mean of zero tensors".into()))?;
        let mut out = Self::zeros(first.shape.clone());
        for p in parts {
            first.check_same_shape(p)?;
            for (o, &v) in out.data.iter_mut().zip(&p.data) {
                *o = *o + v;
            }
        }
        let inv = F::one() / F::of(parts.len() as f64);
        for o in out.data.iter_mut() {
            *o = *o * inv;
        }
        Ok(out)
    }

    /// Mean over `blocks` equal channel blocks of a rank-4 tensor:
    /// `[B, blocks*C, H, W] -> [B, C, H, W]`.
    pub fn channel_block_mean(&self, blocks: usize) -> Result<Self> {
        let (b, c_total, h, w) = self.dims4()?;
        if blocks == 0 || c_total % blocks != 0 {
            return Err(CoreError::ShapeMismatch {
                expected: format!("channel count divisible by {}", blocks),
                got: format!("{}", c_total),
            });
        }
        let c = c_total / blocks;
        let plane = h * w;
        let mut out = Self::zeros(vec![b, c, h, w]);
        let inv = F::one() / F::of(blocks as f64);
        for bi in 0..b {
            for k in 0..blocks {
                for ci in 0..c {
                    let src = (bi * c_total + k * c + ci) * plane;
                    let dst = (bi * c + ci) * plane;
                    for p in 0..plane {
                        out.data[dst + p] = out.data[dst + p] + self.data[src + p];
                    }
                }
            }
        }
        for v in out.data.iter_mut() {
            *v = *v * inv;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type T = Tensor<f64>;

    #[test]
    fn payload_bytes_count_elements() {
        assert_eq!(T::zeros(vec![2, 2]).serialized_byte_size(), 32);
        assert_eq!(T::zeros(vec![8, 8, 8]).serialized_byte_size(), 4096);
    }

    #[test]
    #[should_panic(expected = "expects 4 elements")]
    fn constructor_rejects_bad_length() {
        T::new(vec![2, 2], vec![0.0; 3]);
    }

    #[test]
    fn concat_batch_then_slice_round_trips() {
        let a = T::new(vec![1, 2], vec![1.0, 2.0]);
        let b = T::new(vec![2, 2], vec![3.0, 4.0, 5.0, 6.0]);
        let cat = T::concat_batch(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), &[3, 2]);
        assert_eq!(cat.slice_batch(0, 1), a);
        assert_eq!(cat.slice_batch(1, 2), b);
    }

    #[test]
    fn channel_block_mean_averages_blocks() {
        // [1, 2*1, 1, 2]: blocks [1,2] and [5,8] -> mean [3,5]
        let t = T::new(vec![1, 2, 1, 2], vec![1.0, 2.0, 5.0, 8.0]);
        let m = t.channel_block_mean(2).unwrap();
        assert_eq!(m.shape(), &[1, 1, 1, 2]);
        assert_eq!(m.data(), &[3.0, 5.0]);
    }

    #[test]
    fn concat_channels_interleaves_per_sample() {
        let a = T::new(vec![2, 1, 1, 1], vec![1.0, 2.0]);
        let b = T::new(vec![2, 1, 1, 1], vec![10.0, 20.0]);
        let cat = T::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), &[2, 2, 1, 1]);
        assert_eq!(cat.data(), &[1.0, 10.0, 2.0, 20.0]);
    }

    #[test]
    fn mean_of_is_elementwise() {
        let a = T::new(vec![2], vec![1.0, 3.0]);
        let b = T::new(vec![2], vec![3.0, 5.0]);
        let m = T::mean_of(&[&a, &b]).unwrap();
        assert_eq!(m.data(), &[2.0, 4.0]);
    }
}
