use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Learning architecture whose footprint is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Centralized learning in a data center after raw-data upload.
    #[serde(rename = "CL")]
    Cl,
    /// Federated averaging through a parameter server.
    #[serde(rename = "FL")]
    Fl,
    /// Serverless federated learning driven by neighbor consensus.
    #[serde(rename = "CFL")]
    Cfl,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Cl, Scheme::Fl, Scheme::Cfl];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Cl => "CL",
            Scheme::Fl => "FL",
            Scheme::Cfl => "CFL",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScheme(pub String);

impl fmt::Display for UnknownScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown scheme `{}` (expected CL, FL or CFL)", self.0)
    }
}

impl std::error::Error for UnknownScheme {}

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CL" => Ok(Scheme::Cl),
            "FL" => Ok(Scheme::Fl),
            "CFL" => Ok(Scheme::Cfl),
            _ => Err(UnknownScheme(s.to_string())),
        }
    }
}
