//! UADP network messages carried directly over Ethernet.
//!
//! ## Wire Format
//!
//! All multi-byte integers are little-endian. With every optional header
//! present the header block is exactly 32 bytes:
//!
//! | Part       | Layout |
//! |------------|--------|
//! | Mandatory  | `[version:1][flags:1][publisher_id:8][dataset_class:1]` |
//! | Group      | `[message_number:2][sequence_number:2]` |
//! | Payload    | `[writer_count:1][writer_id:2]*writer_count` |
//! | Extended   | `[timestamp_ns:8]` |
//! | Reserved   | `[0:6]` |
//! | DataSet    | `([type_tag:1][value:8])*` until end of message |
//!
//! The Ethernet encapsulation adds 22 bytes (destination, source, 802.1Q tag,
//! EtherType `0xb62c`, FCS) and the physical layer another 20 (preamble and
//! inter-frame gap).

mod endpoint;
mod frame;
mod message;

pub use endpoint::{Endpoint, MacAddr};
pub use frame::{build_frame, frame_sizes, Frame, FrameSizes, ETHERTYPE_UADP, MAX_LINK_BYTES};
pub use message::{
    decode_network_message, encode_network_message, DataSetField, ExtendedHeader, GroupHeader,
    HeaderFlags, NetworkMessage, PayloadHeader, FIELD_BYTES, HEADER_BYTES, INT64_TYPE_TAG,
    PROTOCOL_VERSION,
};

use thiserror::Error;

/// Errors raised while encoding, decoding or framing UADP messages.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UadpError {
    #[error("link frame of {link_bytes} bytes exceeds the {max} byte limit")]
    Oversize { link_bytes: usize, max: usize },
    #[error("buffer truncated: needed {needed} bytes, got {available}")]
    Truncated { needed: usize, available: usize },
    #[error("unknown protocol version {0}")]
    UnknownVersion(u8),
    #[error("flags 0x{flags:02x} inconsistent with message: {reason}")]
    FlagMismatch { flags: u8, reason: &'static str },
    #[error("variable count must be at least 1")]
    NoVariables,
    #[error("invalid endpoint url `{url}`: {reason}")]
    Endpoint { url: String, reason: String },
}
