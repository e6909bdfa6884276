//! Componentwise α-LDP channel: smooth clipping of the contrast derivatives on
//! the θ-grid followed by independent Laplace noise.

mod budget;
mod channel;
mod clip;
mod export;
mod laplace;
mod ldp;

pub use budget::{effective_privacy, PrivacyBudget};
pub use channel::{
    clip_exceedance_rate, laplace_scale, privatize, privatize_aggregate, ChannelParams, NoiseMode,
    PublicAggregate, PublicPanel,
};
pub use clip::{smooth_cutoff, smooth_cutoff_peak, ClipKind, ClipProfile};
pub use export::{read_aggregate_csv, write_aggregate_csv, write_public_panel, PublicHeader};
pub use laplace::{laplace, laplace_sum, laplace_sum_tail_bound};
pub use ldp::{
    extremal_views, log_density_ratio, verify_ldp, verify_ldp_views, worst_log_ratio, Transition,
};
