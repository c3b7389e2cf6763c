//! Message schema, wire format, the in-path proxy and the transports that
//! carry frames between the two robots.

pub mod codec;
pub mod proxy;
pub mod transport;
pub mod wire;

pub use codec::{DecodedSignals, SignalCodec};
pub use proxy::{MitmProxy, ProxyError};
pub use transport::{LatencyModel, LatestReceiver, Link, LoopbackLink, UdpLink};
pub use wire::{deserialize, serialize, ChannelMessage, Direction, Payload, WireError};
