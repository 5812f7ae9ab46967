//! `key = value` run configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Values given on
//! the command line take precedence over the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use soc_core::SocError;

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "precision",
    "head",
    "arch",
    "epochs",
    "batch_size",
    "lr",
    "eval_fraction",
    "min_count",
    "max_examples",
    "embed_dim",
    "freeze_embeddings",
    "addr",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, (String, usize)>,
    source: String,
}

impl FileConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, SocError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SocError::format(source, i + 1, "expected key = value"))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(SocError::format(source, i + 1, format!("unknown key {key:?}")));
            }
            if values
                .insert(key.to_string(), (value.trim().to_string(), i + 1))
                .is_some()
            {
                return Err(SocError::format(source, i + 1, format!("duplicate key {key:?}")));
            }
        }
        Ok(Self {
            values,
            source: source.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, SocError> {
        let text = std::fs::read_to_string(path).map_err(|e| SocError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, SocError>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key} missing from KNOWN_KEYS");
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| SocError::format(&self.source, *line, format!("{key}: {e}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let cfg = FileConfig::parse("# run\nepochs = 3\n\nlr=0.01\nhead = tanh\n", "t").unwrap();
        assert_eq!(cfg.get::<usize>("epochs").unwrap(), Some(3));
        assert_eq!(cfg.get::<f64>("lr").unwrap(), Some(0.01));
        assert_eq!(cfg.get::<String>("head").unwrap().as_deref(), Some("tanh"));
        assert_eq!(cfg.get::<u64>("seed").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_duplicate_and_bad_values() {
        assert!(FileConfig::parse("colour = red\n", "t").is_err());
        assert!(FileConfig::parse("epochs = 1\nepochs = 2\n", "t").is_err());
        assert!(FileConfig::parse("epochs\n", "t").is_err());
        let cfg = FileConfig::parse("epochs = many\n", "t").unwrap();
        match cfg.get::<usize>("epochs") {
            Err(SocError::Format { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
