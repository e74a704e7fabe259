//! Uniform access to CRS backends.
//!
//! External CRSs speak a small JSON-over-HTTP protocol (see [`protocol`]);
//! built-in stubs (`stub:echo`, `stub:popular`, `stub:keyword`) answer
//! in-process from a bundled movie catalog.

pub mod catalog;
mod client;
pub mod protocol;
pub mod stub;

pub use catalog::Catalog;
pub use client::{Gateway, GatewayError, DEFAULT_TIMEOUT};
pub use protocol::{ContextTurn, CrsReply, CrsRequest, CrsResponse};
pub use stub::{register_stub, StubKind};
