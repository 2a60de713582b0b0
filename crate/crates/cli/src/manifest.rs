//! Run manifests: everything needed to reproduce a run's outputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

/// Version of the output file layouts.
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Independent streams split from the master seed. Serialized as decimal
/// strings since TOML integers are signed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Seeds {
    #[serde(serialize_with = "as_string")]
    pub master: u64,
    #[serde(serialize_with = "as_string")]
    pub synthesis: u64,
    #[serde(serialize_with = "as_string")]
    pub mobility: u64,
    #[serde(serialize_with = "as_string")]
    pub replicates: u64,
    #[serde(serialize_with = "as_string")]
    pub verify: u64,
}

fn as_string<S: serde::Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        let s = metapop::experiments::replicate_seeds(master, 4);
        Seeds {
            master,
            synthesis: s[0],
            mobility: s[1],
            replicates: s[2],
            verify: s[3],
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub format_version: u32,
    pub library_version: &'static str,
    pub cli_version: &'static str,
    pub subcommand: &'a str,
    pub config_file: String,
    pub config_sha256: String,
    pub seeds: Seeds,
    /// Input file name to SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// The configuration with every default filled in.
    pub resolved_config: &'a RunConfig,
}

/// Hashes every input file referenced by the configuration.
pub fn input_hashes(config: &RunConfig) -> Result<BTreeMap<String, String>, CliError> {
    let net = &config.network;
    let files = [
        &net.nodes,
        &net.edges,
        &net.intersections,
        &net.cells,
        &config.mobility.file,
        &config.compare.as_ref().map(|c| c.reference.clone()),
    ];
    let mut out = BTreeMap::new();
    for path in files.into_iter().flatten() {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        out.insert(path.display().to_string(), sha256_hex(&bytes));
    }
    Ok(out)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest<'_>) -> Result<(), CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(manifest).map_err(|e| CliError::Output {
        path: path.clone(),
        source: std::io::Error::other(e),
    })?;
    std::fs::write(&path, text).map_err(|source| CliError::Output { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = Seeds::from_master(42);
        assert_eq!(a, Seeds::from_master(42));
        let mut all = vec![a.synthesis, a.mobility, a.replicates, a.verify];
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 4);
        assert_ne!(a.mobility, Seeds::from_master(43).mobility);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
