use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use storescan_core::RuleSet;

use crate::ScanError;

/// Reads a rules file. Sections missing from the file keep their defaults;
/// an empty file yields the default rule set.
pub fn load_ruleset(path: &Path) -> Result<RuleSet, ScanError> {
    let text = fs::read_to_string(path).map_err(|e| ScanError::io(path, e))?;
    RuleSet::parse(&text).map_err(|source| ScanError::Rules {
        path: path.into(),
        source,
    })
}

/// `sha256:<hex>` of the canonical text form of `rules`.
pub fn rules_digest(rules: &RuleSet) -> String {
    let digest = Sha256::digest(rules.to_text().as_bytes());
    format!("sha256:{}", hex::encode(digest))
}
