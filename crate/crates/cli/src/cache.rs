//! On-disk cache of built posets, keyed by the scenario content hash.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use specsheaf_core::{ContextPoset, PosetJson, Scenario};

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    scenario_hash: String,
    poset_key: String,
    poset: PosetJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
    Stale,
}

pub fn entry_path(dir: &Path, scenario: &Scenario) -> PathBuf {
    dir.join(format!("poset-{}.json", scenario.poset_key()))
}

/// The scenario's poset, from the cache when a valid entry exists.
pub fn load_or_build(scenario: &Scenario, dir: Option<&Path>) -> anyhow::Result<(ContextPoset, CacheStatus)> {
    let Some(dir) = dir else {
        return Ok((scenario.build_poset()?, CacheStatus::Disabled));
    };
    let path = entry_path(dir, scenario);
    let mut status = CacheStatus::Miss;
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<Entry>(&text) {
            Ok(entry) if entry.scenario_hash == scenario.hash() && entry.poset_key == scenario.poset_key() => {
                if let Ok(poset) = ContextPoset::from_json(&entry.poset, scenario.tolerances(), scenario.caps()) {
                    return Ok((poset, CacheStatus::Hit));
                }
                status = CacheStatus::Stale;
            }
            _ => status = CacheStatus::Stale,
        }
    }
    let poset = scenario.build_poset()?;
    store(dir, &path, scenario, &poset)?;
    Ok((poset, status))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial entry.
fn store(dir: &Path, path: &Path, scenario: &Scenario, poset: &ContextPoset) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let entry = Entry {
        scenario_hash: scenario.hash().to_string(),
        poset_key: scenario.poset_key(),
        poset: poset.to_json(),
    };
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("poset"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string(&entry)?.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
