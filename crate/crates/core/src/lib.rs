//! B-localizability of a cellular-connected UAV.
//!
//! A UAV hovers at a fixed altitude somewhere in the central cell of a
//! two-tier hexagonal network and listens for localization signals from the
//! base stations. It can be localized with a technique that needs `B`
//! anchors when the `B` strongest sites all reach it with SINR above a
//! threshold. This crate estimates the probability of that event by Monte
//! Carlo over UAV placement, air-to-ground LOS state, shadowing and
//! interferer activity.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod localizability;
pub mod sinr;

pub use channel::{ChannelParams, LinkState};
pub use error::{Error, Result};
pub use experiment::{ExperimentSpec, Overrides};
pub use geometry::{build_hex_layout, NetworkLayout, Site, UavPosition};
pub use localizability::{
    estimate_pb, required_processing_gain, Estimate, GainOutcome, LocalizabilityCurve, SimConfig, SnapshotSet,
};
pub use sinr::{RadioParams, RankedSnapshot};
