//! Small CPU neural-network stack with manual backpropagation, used to train
//! the per-branch encoders.

mod encoder;
pub mod layers;
mod tensor;
mod train;

pub use encoder::{
    plan_pools, EncoderArch, EncoderKind, EncoderModel, Network, CONV1D_BLOCKS, CONV2D_BLOCKS,
    EMBEDDING_WIDTH,
};
pub use layers::{softmax, softmax_cross_entropy, Layer, LayerSpec, Mode};
pub use tensor::Tensor;
pub use train::{train_encoder, EpochRecord, LabeledSet, TrainConfig, TrainHistory};
