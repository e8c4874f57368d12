//! Built-in domain ontologies and ontology file loading.

use std::path::Path;

use darank_core::Ontology;

use crate::error::DarankError;

pub const BUILTIN: [(&str, &str); 3] = [
    ("viggo", include_str!("../ontologies/viggo.toml")),
    ("laptop", include_str!("../ontologies/laptop.toml")),
    ("tv", include_str!("../ontologies/tv.toml")),
];

pub fn parse_ontology(text: &str) -> Result<Ontology, String> {
    let o: Ontology = toml::from_str(text).map_err(|e| e.to_string())?;
    o.validate().map_err(|e| e.to_string())
}

pub fn builtin(domain: &str) -> Option<Ontology> {
    BUILTIN
        .iter()
        .find(|(name, _)| *name == domain)
        .map(|(name, text)| parse_ontology(text).unwrap_or_else(|e| panic!("built-in ontology `{name}`: {e}")))
}

/// Loads a TOML ontology file.
pub fn load(path: &Path) -> Result<Ontology, DarankError> {
    let text = std::fs::read_to_string(path).map_err(|e| DarankError::io(path, e))?;
    parse_ontology(&text).map_err(|message| DarankError::Format { path: path.to_path_buf(), message })
}

/// A built-in domain name or a path to an ontology file.
pub fn resolve(domain_or_path: &str) -> Result<Ontology, DarankError> {
    match builtin(domain_or_path) {
        Some(o) => Ok(o),
        None if Path::new(domain_or_path).is_file() => load(Path::new(domain_or_path)),
        None => Err(DarankError::Config(format!("unknown domain `{domain_or_path}`"))),
    }
}
