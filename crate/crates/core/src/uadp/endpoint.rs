use std::fmt;
use std::str::FromStr;

use super::UadpError;

const SCHEME: &str = "opc.eth://";
const MAX_VLAN_ID: u16 = 4094;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    pub const fn new(bytes: [u8; 6]) -> Self {
        Self(bytes)
    }

    pub const fn is_multicast(&self) -> bool {
        self.0[0] & 0x01 != 0
    }
}

/// Uppercase, hyphen separated.
impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02X}-{:02X}-{:02X}-{:02X}-{:02X}-{:02X}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl FromStr for MacAddr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(':') {
            return Err("MAC bytes must be separated by hyphens".into());
        }
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 6 {
            return Err(format!("expected 6 MAC bytes, found {}", parts.len()));
        }
        let mut out = [0u8; 6];
        for (slot, part) in out.iter_mut().zip(&parts) {
            if part.len() != 2 {
                return Err(format!("bad MAC byte `{part}`"));
            }
            *slot = u8::from_str_radix(part, 16).map_err(|_| format!("bad MAC byte `{part}`"))?;
        }
        Ok(Self(out))
    }
}

/// `opc.eth://host[:VLAN ID[.VLAN priority]]` with a MAC address host.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoint {
    pub mac: MacAddr,
    pub vlan_id: Option<u16>,
    pcp: Option<u8>,
}

impl Endpoint {
    pub fn new(mac: MacAddr, vlan_id: Option<u16>, pcp: Option<u8>) -> Result<Self, String> {
        if let Some(v) = vlan_id {
            if v > MAX_VLAN_ID {
                return Err(format!("VLAN id {v} exceeds {MAX_VLAN_ID}"));
            }
        }
        if let Some(p) = pcp {
            if p > 7 {
                return Err(format!("VLAN priority {p} exceeds 7"));
            }
            if vlan_id.is_none() {
                return Err("VLAN priority given without VLAN id".into());
            }
        }
        Ok(Self { mac, vlan_id, pcp })
    }

    /// Priority code point; 0 when absent.
    pub fn pcp(&self) -> u8 {
        self.pcp.unwrap_or(0)
    }

    pub fn explicit_pcp(&self) -> Option<u8> {
        self.pcp
    }

    pub fn parse(url: &str) -> Result<Self, UadpError> {
        let err = |reason: String| UadpError::Endpoint {
            url: url.to_string(),
            reason,
        };
        let rest = url
            .strip_prefix(SCHEME)
            .ok_or_else(|| err(format!("missing `{SCHEME}` scheme")))?;
        let (host, vlan_part) = match rest.split_once(':') {
            Some((h, v)) => (h, Some(v)),
            None => (rest, None),
        };
        let mac: MacAddr = host.parse().map_err(err)?;
        let (vlan_id, pcp) = match vlan_part {
            None => (None, None),
            Some(v) => {
                let (id, prio) = match v.split_once('.') {
                    Some((id, p)) => (id, Some(p)),
                    None => (v, None),
                };
                let id: u16 = id
                    .parse()
                    .map_err(|_| err(format!("bad VLAN id `{id}`")))?;
                let prio = prio
                    .map(|p| {
                        p.parse::<u8>()
                            .map_err(|_| err(format!("bad VLAN priority `{p}`")))
                    })
                    .transpose()?;
                (Some(id), prio)
            }
        };
        Self::new(mac, vlan_id, pcp).map_err(err)
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{SCHEME}{}", self.mac)?;
        if let Some(v) = self.vlan_id {
            write!(f, ":{v}")?;
            if let Some(p) = self.pcp {
                write!(f, ".{p}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Endpoint {
    type Err = UadpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}
