use serde::{Deserialize, Serialize};

use super::features::LeafFeatureSet;
use crate::error::{Error, Result};
use crate::neural::{EncoderArch, Tensor, EMBEDDING_WIDTH};

/// Bumped whenever the branch order below changes.
pub const BRANCH_ORDER_VERSION: u32 = 1;
pub const FUSED_WIDTH: usize = 7 * EMBEDDING_WIDTH;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Color,
    Vein,
    XyProjection,
    Shape,
    Texture,
    ColorStats,
    Fourier,
}

pub const BRANCHES: [Branch; 7] = [
    Branch::Color,
    Branch::Vein,
    Branch::XyProjection,
    Branch::Shape,
    Branch::Texture,
    Branch::ColorStats,
    Branch::Fourier,
];

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Color => "color",
            Branch::Vein => "vein",
            Branch::XyProjection => "xy-projection",
            Branch::Shape => "shape",
            Branch::Texture => "texture",
            Branch::ColorStats => "color-stats",
            Branch::Fourier => "fourier",
        }
    }

    pub fn position(self) -> usize {
        BRANCHES.iter().position(|&b| b == self).unwrap()
    }

    /// Encoder architecture for this branch given one sample's input.
    pub fn arch(self, sample: &Tensor) -> Result<EncoderArch> {
        let s = sample.shape();
        match self {
            Branch::Color | Branch::Vein => {
                if s.len() != 3 || s[1] != s[2] {
                    return Err(Error::InvalidArgument(format!("{} input must be [c, s, s], got {s:?}", self.name())));
                }
                EncoderArch::conv2d(s[0], s[1])
            }
            Branch::XyProjection => EncoderArch::conv1d(sample.len()),
            _ => Ok(EncoderArch::dense(sample.len())),
        }
    }

    /// Encoder input tensor for one leaf.
    pub fn input(self, f: &LeafFeatureSet) -> Tensor {
        let vector = |v: &[f64]| Tensor::new(vec![v.len()], v.to_vec()).expect("length matches");
        match self {
            Branch::Color => f.color_image.clone(),
            Branch::Vein => f.vein_image.clone(),
            Branch::XyProjection => {
                Tensor::new(vec![1, 1, f.projection.len()], f.projection.clone()).expect("length matches")
            }
            Branch::Shape => vector(&f.shape),
            Branch::Texture => vector(&f.texture),
            Branch::ColorStats => vector(&f.color_stats),
            Branch::Fourier => vector(&f.fourier),
        }
    }
}

/// `color,vein,...` as stamped into feature files.
pub fn branch_order_stamp() -> String {
    BRANCHES.map(Branch::name).join(",")
}

/// Concatenate seven embeddings in branch order.
pub fn fuse(embeddings: &[Vec<f64>]) -> Result<Vec<f64>> {
    if embeddings.len() != BRANCHES.len() {
        return Err(Error::Shape {
            context: "fuse",
            expected: vec![BRANCHES.len()],
            actual: vec![embeddings.len()],
        });
    }
    let mut out = Vec::with_capacity(FUSED_WIDTH);
    for e in embeddings {
        if e.len() != EMBEDDING_WIDTH {
            return Err(Error::Shape {
                context: "fuse",
                expected: vec![EMBEDDING_WIDTH],
                actual: vec![e.len()],
            });
        }
        out.extend_from_slice(e);
    }
    Ok(out)
}

/// Slice of the fused vector that belongs to `branch`.
pub fn branch_slice(fused: &[f64], branch: Branch) -> &[f64] {
    let i = branch.position() * EMBEDDING_WIDTH;
    &fused[i..i + EMBEDDING_WIDTH]
}
