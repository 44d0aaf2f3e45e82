//! Teleoperation over HTTP and WebSocket.
//!
//! A session holds a pose and base position for one platform. Submitted
//! commands are resolved at once against the pose the session will have once
//! everything already queued has played, then played out in order at a fixed
//! tick. Every tick publishes a state message with forward kinematics of the
//! current pose.

mod api;
mod catalog;
mod session;

pub use api::{router, serve, AppState, ServiceError};
pub use catalog::{catalog, platform_info, Catalog, DirectionInfo, EntryInfo, JointInfo, LinkInfo, PlatformInfo};
pub use session::{
    spawn_ticker, CommandResponse, HistoryEntry, LineResolution, Loaded, Resolution, ServiceConfig, Session,
    StateMessage, WireError,
};

/// Version tag carried by every wire message.
pub const WIRE_VERSION: u32 = 1;
