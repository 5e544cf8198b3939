use super::message::{encode_network_message, FIELD_BYTES, HEADER_BYTES};
use super::{Endpoint, MacAddr, NetworkMessage, UadpError};

pub const ETHERTYPE_UADP: u16 = 0xb62c;
const TPID_8021Q: u16 = 0x8100;
/// Largest VLAN-tagged Ethernet frame.
pub const MAX_LINK_BYTES: usize = 1522;
/// Ethernet header 14 + VLAN tag 4 + FCS 4.
pub(crate) const LINK_OVERHEAD: usize = 22;
/// Preamble/SFD 8 + inter-frame gap 12.
const PHYSICAL_OVERHEAD: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSizes {
    pub uadp_bytes: usize,
    pub link_bytes: usize,
    pub physical_bytes: usize,
}

impl FrameSizes {
    pub fn for_uadp(uadp_bytes: usize) -> Result<Self, UadpError> {
        let link_bytes = uadp_bytes + LINK_OVERHEAD;
        if link_bytes > MAX_LINK_BYTES {
            return Err(UadpError::Oversize {
                link_bytes,
                max: MAX_LINK_BYTES,
            });
        }
        Ok(Self {
            uadp_bytes,
            link_bytes,
            physical_bytes: link_bytes + PHYSICAL_OVERHEAD,
        })
    }
}

/// Sizes of the experiment frame carrying `n_vars` integers.
pub fn frame_sizes(n_vars: usize) -> Result<FrameSizes, UadpError> {
    if n_vars == 0 {
        return Err(UadpError::NoVariables);
    }
    FrameSizes::for_uadp(HEADER_BYTES + FIELD_BYTES * n_vars)
}

/// A VLAN tagged Ethernet frame carrying one encoded UADP message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub dst: MacAddr,
    pub src: MacAddr,
    pub pcp: u8,
    pub vlan_id: u16,
    pub ethertype: u16,
    pub payload: Vec<u8>,
    pub sizes: FrameSizes,
}

impl Frame {
    /// On-wire bytes from destination MAC through FCS.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.sizes.link_bytes);
        out.extend_from_slice(&self.dst.0);
        out.extend_from_slice(&self.src.0);
        out.extend_from_slice(&TPID_8021Q.to_be_bytes());
        let tci = (u16::from(self.pcp) << 13) | (self.vlan_id & 0x0fff);
        out.extend_from_slice(&tci.to_be_bytes());
        out.extend_from_slice(&self.ethertype.to_be_bytes());
        out.extend_from_slice(&self.payload);
        let fcs = crc32fast::hash(&out);
        out.extend_from_slice(&fcs.to_le_bytes());
        out
    }
}

/// Encodes `msg` and wraps it for `dst`. A missing VLAN id yields a
/// priority-tagged frame (VID 0) so the PCP is still carried.
pub fn build_frame(msg: &NetworkMessage, src: MacAddr, dst: &Endpoint) -> Result<Frame, UadpError> {
    let payload = encode_network_message(msg)?;
    let sizes = FrameSizes::for_uadp(payload.len())?;
    Ok(Frame {
        dst: dst.mac,
        src,
        pcp: dst.pcp(),
        vlan_id: dst.vlan_id.unwrap_or(0),
        ethertype: ETHERTYPE_UADP,
        payload,
        sizes,
    })
}
