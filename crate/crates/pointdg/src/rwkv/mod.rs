//! RWKV block machinery: Q-Shift, the bidirectional WKV kernel, and the
//! spatial/channel mixing sublayers.

pub mod biwkv;
pub mod mix;
pub mod shift;

pub use biwkv::{bi_wkv_linear, bi_wkv_node, bi_wkv_quadratic};
pub use mix::{channel_mix, layer_norm, spatial_mix, ChannelMixParams, SpatialMixParams};
pub use shift::{q_shift, shift_gather, DEFAULT_OFFSETS};
