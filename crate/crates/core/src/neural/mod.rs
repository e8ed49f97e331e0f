//! The four-channel encoder-decoder and its training machinery, built
//! on an internal reverse-mode differentiation tape.

pub mod decode;
pub mod gradcheck;
pub mod model;
pub mod params;
pub mod tape;
pub mod tensor;
pub mod train;

pub use decode::{greedy_decode, DecodedOutput, StepAttention};
pub use gradcheck::{gradcheck, tiny_config, GradCheckReport};
pub use model::{
    attend, bind, decode_step, encode_api_channel, encode_channels, encode_sequence,
    example_loss, fuse, initial_state, BoundModel, ChannelEncodings, EncoderOutput, Mode,
};
pub use params::{
    expected_param_count, init_params, load_params, save_params, CellKind, ModelConfig,
    ModelParams,
};
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;
pub use train::{evaluate_loss, train, EpochStats, TrainHistory};
