use super::UadpError;

pub const PROTOCOL_VERSION: u8 = 1;
/// Header size when every optional header is present with a single writer.
pub const HEADER_BYTES: usize = 32;
/// One DataSet field: a type tag followed by an 8 byte integer.
pub const FIELD_BYTES: usize = 9;
/// Built-in type id of Int64.
pub const INT64_TYPE_TAG: u8 = 8;

const MANDATORY_BYTES: usize = 11;
const GROUP_BYTES: usize = 4;
const EXTENDED_BYTES: usize = 8;
const RESERVED_BYTES: usize = 6;

/// Presence bits of the optional headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HeaderFlags(u8);

impl HeaderFlags {
    pub const GROUP_HEADER: u8 = 0b0000_0001;
    pub const PAYLOAD_HEADER: u8 = 0b0000_0010;
    pub const EXTENDED_HEADER: u8 = 0b0000_0100;
    /// Reserved for the security header; never set by this codec.
    pub const SECURITY: u8 = 0b0000_1000;
    const KNOWN: u8 = Self::GROUP_HEADER | Self::PAYLOAD_HEADER | Self::EXTENDED_HEADER;

    pub const fn from_bits(bits: u8) -> Self {
        Self(bits)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn contains(self, bit: u8) -> bool {
        self.0 & bit == bit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupHeader {
    pub message_number: u16,
    pub sequence_number: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadHeader {
    pub writer_ids: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtendedHeader {
    pub timestamp_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataSetField {
    pub type_tag: u8,
    pub value: i64,
}

impl DataSetField {
    pub const fn int64(value: i64) -> Self {
        Self {
            type_tag: INT64_TYPE_TAG,
            value,
        }
    }
}

/// The unit published every cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkMessage {
    pub protocol_version: u8,
    pub flags: HeaderFlags,
    pub publisher_id: u64,
    pub dataset_class: u8,
    pub group_header: Option<GroupHeader>,
    pub payload_header: Option<PayloadHeader>,
    pub extended_header: Option<ExtendedHeader>,
    pub payload: Vec<DataSetField>,
}

impl NetworkMessage {
    /// Message with every optional header present, as used in the experiments.
    pub fn experiment(
        publisher_id: u64,
        writer_id: u16,
        sequence_number: u16,
        timestamp_ns: u64,
        values: &[i64],
    ) -> Self {
        Self {
            protocol_version: PROTOCOL_VERSION,
            flags: HeaderFlags::from_bits(HeaderFlags::KNOWN),
            publisher_id,
            dataset_class: 0,
            group_header: Some(GroupHeader {
                message_number: 1,
                sequence_number,
            }),
            payload_header: Some(PayloadHeader {
                writer_ids: vec![writer_id],
            }),
            extended_header: Some(ExtendedHeader { timestamp_ns }),
            payload: values.iter().copied().map(DataSetField::int64).collect(),
        }
    }

    /// Flags implied by which optional headers are present.
    pub fn implied_flags(&self) -> HeaderFlags {
        let mut bits = 0;
        if self.group_header.is_some() {
            bits |= HeaderFlags::GROUP_HEADER;
        }
        if self.payload_header.is_some() {
            bits |= HeaderFlags::PAYLOAD_HEADER;
        }
        if self.extended_header.is_some() {
            bits |= HeaderFlags::EXTENDED_HEADER;
        }
        HeaderFlags(bits)
    }

    pub fn encoded_len(&self) -> usize {
        let mut len = MANDATORY_BYTES + RESERVED_BYTES;
        if self.group_header.is_some() {
            len += GROUP_BYTES;
        }
        if let Some(p) = &self.payload_header {
            len += 1 + 2 * p.writer_ids.len();
        }
        if self.extended_header.is_some() {
            len += EXTENDED_BYTES;
        }
        len + FIELD_BYTES * self.payload.len()
    }
}

/// Serializes a message. Fails when the flags disagree with the present
/// headers or when the Ethernet frame would exceed 1522 bytes.
pub fn encode_network_message(msg: &NetworkMessage) -> Result<Vec<u8>, UadpError> {
    if msg.flags != msg.implied_flags() {
        return Err(UadpError::FlagMismatch {
            flags: msg.flags.bits(),
            reason: "flags do not match the present optional headers",
        });
    }
    if let Some(p) = &msg.payload_header {
        if p.writer_ids.len() > u8::MAX as usize {
            return Err(UadpError::FlagMismatch {
                flags: msg.flags.bits(),
                reason: "more than 255 writer ids",
            });
        }
    }
    let len = msg.encoded_len();
    let link_bytes = len + super::frame::LINK_OVERHEAD;
    if link_bytes > super::MAX_LINK_BYTES {
        return Err(UadpError::Oversize {
            link_bytes,
            max: super::MAX_LINK_BYTES,
        });
    }

    let mut buf = Vec::with_capacity(len);
    buf.push(msg.protocol_version);
    buf.push(msg.flags.bits());
    buf.extend_from_slice(&msg.publisher_id.to_le_bytes());
    buf.push(msg.dataset_class);
    if let Some(g) = msg.group_header {
        buf.extend_from_slice(&g.message_number.to_le_bytes());
        buf.extend_from_slice(&g.sequence_number.to_le_bytes());
    }
    if let Some(p) = &msg.payload_header {
        buf.push(p.writer_ids.len() as u8);
        for id in &p.writer_ids {
            buf.extend_from_slice(&id.to_le_bytes());
        }
    }
    if let Some(e) = msg.extended_header {
        buf.extend_from_slice(&e.timestamp_ns.to_le_bytes());
    }
    buf.extend_from_slice(&[0u8; RESERVED_BYTES]);
    for field in &msg.payload {
        buf.push(field.type_tag);
        buf.extend_from_slice(&field.value.to_le_bytes());
    }
    debug_assert_eq!(buf.len(), len);
    Ok(buf)
}

struct Reader<'a> {
    buf: &'a [u8],
    cursor: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], UadpError> {
        let end = self.cursor + n;
        if end > self.buf.len() {
            return Err(UadpError::Truncated {
                needed: end,
                available: self.buf.len(),
            });
        }
        let s = &self.buf[self.cursor..end];
        self.cursor = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, UadpError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, UadpError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u64(&mut self) -> Result<u64, UadpError> {
        let mut arr = [0u8; 8];
        arr.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(arr))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.cursor
    }
}

/// Inverse of [`encode_network_message`].
pub fn decode_network_message(bytes: &[u8]) -> Result<NetworkMessage, UadpError> {
    let mut r = Reader {
        buf: bytes,
        cursor: 0,
    };
    let protocol_version = r.u8()?;
    if protocol_version != PROTOCOL_VERSION {
        return Err(UadpError::UnknownVersion(protocol_version));
    }
    let flags = HeaderFlags(r.u8()?);
    if flags.bits() & !HeaderFlags::KNOWN != 0 {
        return Err(UadpError::FlagMismatch {
            flags: flags.bits(),
            reason: "reserved or security bits set",
        });
    }
    let publisher_id = r.u64()?;
    let dataset_class = r.u8()?;
    let group_header = if flags.contains(HeaderFlags::GROUP_HEADER) {
        Some(GroupHeader {
            message_number: r.u16()?,
            sequence_number: r.u16()?,
        })
    } else {
        None
    };
    let payload_header = if flags.contains(HeaderFlags::PAYLOAD_HEADER) {
        let count = r.u8()? as usize;
        let mut writer_ids = Vec::with_capacity(count);
        for _ in 0..count {
            writer_ids.push(r.u16()?);
        }
        Some(PayloadHeader { writer_ids })
    } else {
        None
    };
    let extended_header = if flags.contains(HeaderFlags::EXTENDED_HEADER) {
        Some(ExtendedHeader {
            timestamp_ns: r.u64()?,
        })
    } else {
        None
    };
    r.take(RESERVED_BYTES)?;
    let partial = r.remaining() % FIELD_BYTES;
    if partial != 0 {
        return Err(UadpError::Truncated {
            needed: bytes.len() + FIELD_BYTES - partial,
            available: bytes.len(),
        });
    }
    let mut payload = Vec::with_capacity(r.remaining() / FIELD_BYTES);
    while r.remaining() > 0 {
        let type_tag = r.u8()?;
        let value = r.u64()? as i64;
        payload.push(DataSetField { type_tag, value });
    }
    Ok(NetworkMessage {
        protocol_version,
        flags,
        publisher_id,
        dataset_class,
        group_header,
        payload_header,
        extended_header,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_fields() -> NetworkMessage {
        NetworkMessage::experiment(0x2342, 1, 7, 1_000_400_000, &[10, -20, 30])
    }

    #[test]
    fn experiment_profile_is_32_plus_9n() {
        for n in [1usize, 3, 12, 30, 65, 136, 163] {
            let values: Vec<i64> = (0..n as i64).collect();
            let msg = NetworkMessage::experiment(1, 1, 0, 0, &values);
            let bytes = encode_network_message(&msg).unwrap();
            assert_eq!(bytes.len(), HEADER_BYTES + FIELD_BYTES * n);
        }
    }

    #[test]
    fn three_fields_is_59_bytes() {
        assert_eq!(encode_network_message(&three_fields()).unwrap().len(), 59);
    }

    #[test]
    fn oversize_rejected() {
        let values = vec![0i64; 164];
        let msg = NetworkMessage::experiment(1, 1, 0, 0, &values);
        assert_eq!(
            encode_network_message(&msg),
            Err(UadpError::Oversize {
                link_bytes: 1530,
                max: 1522
            })
        );
    }

    #[test]
    fn inconsistent_flags_rejected() {
        let mut msg = three_fields();
        msg.extended_header = None;
        assert!(matches!(
            encode_network_message(&msg),
            Err(UadpError::FlagMismatch { .. })
        ));
    }

    #[test]
    fn truncated_buffer() {
        let bytes = encode_network_message(&three_fields()).unwrap();
        assert!(matches!(
            decode_network_message(&bytes[..10]),
            Err(UadpError::Truncated { .. })
        ));
    }

    #[test]
    fn unknown_version() {
        let mut bytes = encode_network_message(&three_fields()).unwrap();
        bytes[0] = 2;
        assert_eq!(
            decode_network_message(&bytes),
            Err(UadpError::UnknownVersion(2))
        );
    }

    #[test]
    fn partial_field_is_truncation() {
        let mut bytes = encode_network_message(&three_fields()).unwrap();
        bytes.pop();
        assert_eq!(
            decode_network_message(&bytes),
            Err(UadpError::Truncated {
                needed: 59,
                available: 58
            })
        );
    }

    #[test]
    fn security_bit_rejected() {
        let mut bytes = encode_network_message(&three_fields()).unwrap();
        bytes[1] |= HeaderFlags::SECURITY;
        assert!(decode_network_message(&bytes).is_err());
    }

    #[test]
    fn minimal_message_roundtrips() {
        let msg = NetworkMessage {
            protocol_version: PROTOCOL_VERSION,
            flags: HeaderFlags::default(),
            publisher_id: u64::MAX,
            dataset_class: 3,
            group_header: None,
            payload_header: None,
            extended_header: None,
            payload: vec![],
        };
        let bytes = encode_network_message(&msg).unwrap();
        assert_eq!(bytes.len(), 17);
        assert_eq!(decode_network_message(&bytes).unwrap(), msg);
    }
}
