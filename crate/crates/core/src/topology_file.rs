//! JSON topology files.
//!
//! ```json
//! {"kind": "overlay", "rng": {"algorithm": "chacha8", "seed": 1},
//!  "code_params": {...}, "network": {"failed_node": 0, ..., "bandwidth": [[...]]}}
//! {"kind": "fattree", "rng": {...}, "tiers": {...}, "code_params": {...},
//!  "roles": {...}, "network": {"k": 4, "hosts": [...], "links": [...]}}
//! ```
//!
//! Bandwidth matrix rows are provider candidates in list order. Fat-tree
//! files may omit `code_params` and `roles`; they are then supplied when a
//! selection is run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BandwidthDistribution, CodeParams, FatTreeNetwork, FatTreeRoles, OverlayNetwork,
    TierDistributions,
};

/// Generator and seed a file was drawn with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngInfo {
    pub algorithm: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TopologyFile {
    Overlay {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rng: Option<RngInfo>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distribution: Option<BandwidthDistribution>,
        code_params: CodeParams,
        network: OverlayNetwork,
    },
    Fattree {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rng: Option<RngInfo>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tiers: Option<TierDistributions>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        code_params: Option<CodeParams>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        roles: Option<FatTreeRoles>,
        network: FatTreeNetwork,
    },
}

impl TopologyFile {
    pub fn kind(&self) -> &'static str {
        match self {
            TopologyFile::Overlay { .. } => "overlay",
            TopologyFile::Fattree { .. } => "fattree",
        }
    }

    /// Cross-checks the embedded parts against each other.
    pub fn validate(&self) -> Result<()> {
        match self {
            TopologyFile::Overlay {
                code_params,
                network,
                ..
            } => network.check_code(code_params),
            TopologyFile::Fattree {
                code_params,
                roles,
                network,
                ..
            } => {
                if let Some(code) = code_params {
                    if code.n_total() != network.host_count() {
                        return Err(Error::param(format!(
                            "code N = {} but the fat-tree has {} hosts",
                            code.n_total(),
                            network.host_count()
                        )));
                    }
                    if let Some(roles) = roles {
                        roles.validate(network, code)?;
                        if roles.providers.len() != code.n() - 1 {
                            return Err(Error::param("roles disagree with n"));
                        }
                    }
                } else if roles.is_some() {
                    return Err(Error::param("fat-tree roles require code_params"));
                }
                Ok(())
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TopologyFile = serde_json::from_str(s)?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        TopologyFile::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_fattree, fattree_roles, gen_overlay};
    use crate::seed::RNG_ALGORITHM;

    #[test]
    fn overlay_file_roundtrip() {
        let code = CodeParams::new(20, 6, 2, 3, 100.0).unwrap();
        let dist = BandwidthDistribution::new(10.0, 120.0).unwrap();
        let file = TopologyFile::Overlay {
            rng: Some(RngInfo {
                algorithm: RNG_ALGORITHM.into(),
                seed: 4,
            }),
            distribution: Some(dist),
            code_params: code,
            network: gen_overlay(&code, &dist, 4),
        };
        let json = file.to_json().unwrap();
        assert!(json.contains("\"kind\": \"overlay\""));
        assert_eq!(TopologyFile::from_json(&json).unwrap(), file);
    }

    #[test]
    fn overlay_file_rejects_wrong_sizes() {
        let code = CodeParams::new(20, 6, 2, 3, 100.0).unwrap();
        let other = CodeParams::new(21, 6, 2, 3, 100.0).unwrap();
        let dist = BandwidthDistribution::new(10.0, 120.0).unwrap();
        let file = TopologyFile::Overlay {
            rng: None,
            distribution: None,
            code_params: other,
            network: gen_overlay(&code, &dist, 4),
        };
        assert!(TopologyFile::from_json(&file.to_json().unwrap()).is_err());
    }

    #[test]
    fn fattree_file_roundtrip() {
        let tiers = TierDistributions::default();
        let net = build_fattree(4, &tiers, 2).unwrap();
        let code = CodeParams::new(16, 6, 2, 3, 100.0).unwrap();
        let roles = fattree_roles(&net, &code, 2).unwrap();
        let file = TopologyFile::Fattree {
            rng: None,
            tiers: Some(tiers),
            code_params: Some(code),
            roles: Some(roles),
            network: net,
        };
        assert_eq!(
            TopologyFile::from_json(&file.to_json().unwrap()).unwrap(),
            file
        );
    }

    #[test]
    fn fattree_roles_need_matching_code() {
        let net = FatTreeNetwork::uniform(4, 1.0).unwrap();
        let code = CodeParams::new(20, 6, 2, 3, 100.0).unwrap();
        let file = TopologyFile::Fattree {
            rng: None,
            tiers: None,
            code_params: Some(code),
            roles: None,
            network: net,
        };
        assert!(file.validate().is_err());
    }
}
