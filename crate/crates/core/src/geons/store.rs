//! The object-schema database: one file, loaded whole, written atomically.
//!
//! Each object type owns the set of canonical scheme encodings observed for
//! it (one per distinct view) and the cumulative set of geon descriptors
//! across those schemes. The on-disk format is canonical JSON (sorted keys),
//! so a load-save cycle is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{scheme_canonical_form, GeonDescriptor, GeonError, GeonScheme, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InsertOutcome {
    Added,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredScheme {
    pub canonical: String,
    pub viewpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SchemaRecord {
    pub schemes: Vec<StoredScheme>,
    pub cumulative_geons: BTreeSet<GeonDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    types: BTreeMap<String, SchemaRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaStore {
    records: BTreeMap<String, SchemaRecord>,
}

impl SchemaStore {
    pub fn new() -> Self {
        SchemaStore::default()
    }

    pub fn records(&self) -> &BTreeMap<String, SchemaRecord> {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Inserts a scheme under an object type. `Added` iff no stored scheme
    /// for that key matches; cumulative geons grow either way.
    pub fn insert(&mut self, object_key: &str, scheme: &GeonScheme) -> Result<InsertOutcome> {
        let canonical = scheme_canonical_form(scheme)?.into_string();
        let record = self.records.entry(object_key.to_string()).or_default();
        record
            .cumulative_geons
            .extend(scheme.members.iter().copied());
        if record.schemes.iter().any(|s| s.canonical == canonical) {
            return Ok(InsertOutcome::Duplicate);
        }
        record.schemes.push(StoredScheme {
            canonical,
            viewpoint: scheme.viewpoint.clone(),
        });
        Ok(InsertOutcome::Added)
    }

    /// All object types owning a scheme matching the given one; an empty
    /// list means the object is unknown.
    pub fn lookup(&self, scheme: &GeonScheme) -> Result<Vec<String>> {
        let canonical = scheme_canonical_form(scheme)?.into_string();
        Ok(self.lookup_canonical(&canonical))
    }

    pub fn lookup_canonical(&self, canonical: &str) -> Vec<String> {
        self.records
            .iter()
            .filter(|(_, rec)| rec.schemes.iter().any(|s| s.canonical == canonical))
            .map(|(key, _)| key.clone())
            .collect()
    }

    /// Folds another store's records into this one. Types whose scheme sets
    /// intersect an existing type are merged into it; otherwise a fresh
    /// `t<N>` key is minted.
    pub fn merge(&mut self, other: &SchemaStore) {
        for (_, rec) in other.records.iter() {
            let existing = rec
                .schemes
                .iter()
                .flat_map(|s| self.lookup_canonical(&s.canonical))
                .min();
            let key = existing.unwrap_or_else(|| self.mint_key());
            let target = self.records.entry(key).or_default();
            for s in &rec.schemes {
                if !target.schemes.iter().any(|t| t.canonical == s.canonical) {
                    target.schemes.push(s.clone());
                }
            }
            target
                .cumulative_geons
                .extend(rec.cumulative_geons.iter().copied());
        }
    }

    fn mint_key(&self) -> String {
        let mut n = self.records.len() + 1;
        loop {
            let key = format!("t{n}");
            if !self.records.contains_key(&key) {
                return key;
            }
            n += 1;
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: StoreFile =
            serde_json::from_str(&text).map_err(|e| GeonError::StoreFormat(e.to_string()))?;
        if file.version != 1 {
            return Err(GeonError::StoreFormat(format!(
                "unsupported store version {}",
                file.version
            )));
        }
        Ok(SchemaStore {
            records: file.types,
        })
    }

    /// Canonical JSON, written to a temp file then renamed into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = StoreFile {
            version: 1,
            types: self.records.clone(),
        };
        let value =
            serde_json::to_value(&file).map_err(|e| GeonError::StoreFormat(e.to_string()))?;
        let text = serde_json::to_string(&value)
            .map_err(|e| GeonError::StoreFormat(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text.as_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::GeonInstance;
    use super::*;

    fn scheme(ids: &[(u32, u16)], dx: f64) -> GeonScheme {
        let geons: Vec<GeonInstance> = ids
            .iter()
            .enumerate()
            .map(|(i, &(instance_id, class))| GeonInstance {
                instance_id,
                class,
                position: [dx * i as f64, 0.0, 0.0],
                scale: [1.0; 3],
                noise: 0.0,
                parent_object: 1,
            })
            .collect();
        GeonScheme::from_instances(&geons, 0.05, None)
    }

    #[test]
    fn insert_then_duplicate() {
        let mut store = SchemaStore::new();
        let s = scheme(&[(0, 1), (1, 9)], 1.0);
        assert_eq!(store.insert("mug", &s).unwrap(), InsertOutcome::Added);
        assert_eq!(store.insert("mug", &s).unwrap(), InsertOutcome::Duplicate);

        // A relabeled variant of the same arrangement is also a duplicate.
        let relabeled = scheme(&[(7, 1), (9, 9)], 1.0);
        assert_eq!(
            store.insert("mug", &relabeled).unwrap(),
            InsertOutcome::Duplicate
        );
        // Its geon descriptors still accumulate.
        assert_eq!(store.records()["mug"].cumulative_geons.len(), 4);
    }

    #[test]
    fn lookup_finds_owning_types() {
        let mut store = SchemaStore::new();
        let s = scheme(&[(0, 1), (1, 9)], 1.0);
        assert!(store.lookup(&s).unwrap().is_empty());
        store.insert("mug", &s).unwrap();
        assert_eq!(store.lookup(&s).unwrap(), vec!["mug".to_string()]);

        // Two types sharing a partial-view scheme are both returned.
        store.insert("jug", &s).unwrap();
        assert_eq!(
            store.lookup(&s).unwrap(),
            vec!["jug".to_string(), "mug".to_string()]
        );
    }

    #[test]
    fn save_load_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let mut store = SchemaStore::new();
        store.insert("mug", &scheme(&[(0, 1), (1, 9)], 1.0)).unwrap();
        store.insert("post", &scheme(&[(4, 9)], 1.0)).unwrap();
        store.save(&path).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();
        let loaded = SchemaStore::load(&path).unwrap();
        assert_eq!(loaded, store);
        loaded.save(&path).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn merge_unifies_matching_types() {
        let mut main = SchemaStore::new();
        let shape = scheme(&[(0, 1), (1, 9)], 1.0);
        main.insert("t1", &shape).unwrap();

        let mut episode = SchemaStore::new();
        episode.insert("t1", &scheme(&[(5, 1), (6, 9)], 1.0)).unwrap();
        episode.insert("t2", &scheme(&[(7, 2)], 1.0)).unwrap();

        main.merge(&episode);
        // The matching type folded into the existing key; the new one got a
        // fresh key.
        assert_eq!(main.len(), 2);
        assert!(main.records().contains_key("t1"));
        assert_eq!(main.lookup(&shape).unwrap(), vec!["t1".to_string()]);
    }
}
