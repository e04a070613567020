use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a convolution reaches the systolic array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub enum Method {
    /// Decomposed 1x1 tiles streamed from HWCN vector memories.
    #[serde(rename = "channel-first")]
    ChannelFirstImplicit,
    /// On-the-fly channel-last lowering from a multi-banked SRAM.
    #[serde(rename = "channel-last")]
    ChannelLastImplicit,
    /// Lowered matrix materialized in DRAM, then a plain GEMM.
    #[serde(rename = "explicit")]
    ExplicitIm2col,
    /// GEMM over the lowered dimensions with lowering for free.
    #[serde(rename = "gemm")]
    PlainGemm,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::ChannelFirstImplicit,
        Method::ChannelLastImplicit,
        Method::ExplicitIm2col,
        Method::PlainGemm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ChannelFirstImplicit => "channel-first",
            Method::ChannelLastImplicit => "channel-last",
            Method::ExplicitIm2col => "explicit",
            Method::PlainGemm => "gemm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "channel-first" | "cf" | "channelfirstimplicit" => Ok(Method::ChannelFirstImplicit),
            "channel-last" | "cl" | "channellastimplicit" => Ok(Method::ChannelLastImplicit),
            "explicit" | "explicit-im2col" | "explicitim2col" => Ok(Method::ExplicitIm2col),
            "gemm" | "plain-gemm" | "plaingemm" => Ok(Method::PlainGemm),
            other => Err(Error::InvalidSpec(format!(
                "unknown method {other:?} (expected channel-first, channel-last, explicit or gemm)"
            ))),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}
