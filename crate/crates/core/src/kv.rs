//! Minimal `name = value` configuration text with bracketed sections.
//!
//! Lines starting with `#` are comments. Keys before the first section
//! header belong to the global section (empty name).

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("section [{section}]: missing key `{key}`")]
    MissingKey { section: String, key: String },
    #[error("section [{section}]: key `{key}` (line {line}): cannot parse `{value}`")]
    BadValue {
        section: String,
        key: String,
        value: String,
        line: usize,
    },
    #[error("section [{section}]: unknown key `{key}` (line {line})")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: BTreeMap<String, Entry>,
}

impl Section {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| ConfigError::BadValue {
                section: self.name.clone(),
                key: key.to_string(),
                value: e.value.clone(),
                line: e.line,
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Rejects any key not in `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), ConfigError> {
        for (k, e) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey {
                    section: self.name.clone(),
                    key: k.clone(),
                    line: e.line,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub global: Section,
    /// Named sections in file order.
    pub sections: Vec<Section>,
}

pub fn parse(text: &str) -> Result<Document, ConfigError> {
    let mut doc = Document::default();
    let mut current: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty section name".into(),
                });
            }
            if doc.sections.iter().any(|s| s.name == name)
                || current.as_ref().is_some_and(|s| s.name == name)
            {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate section [{name}]"),
                });
            }
            if let Some(done) = current.take() {
                doc.sections.push(done);
            }
            current = Some(Section {
                name: name.to_string(),
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `name = value`, got `{trimmed}`"),
        })?;
        let key = key.trim();
        // trailing comments
        let value = value.split('#').next().unwrap_or("").trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key".into(),
            });
        }
        let target = current.as_mut().unwrap_or(&mut doc.global);
        if target.entries.contains_key(key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        target.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    if let Some(done) = current.take() {
        doc.sections.push(done);
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_and_sections() {
        let doc = parse("# hi\nhorizon = 50\n\n[firm.0]\nrho_t = 0.5 # comment\n[firm.1]\nrho_t=1\n")
            .unwrap();
        assert_eq!(doc.global.require::<f64>("horizon").unwrap(), 50.0);
        assert_eq!(doc.sections.len(), 2);
        assert_eq!(doc.sections[0].name, "firm.0");
        assert_eq!(doc.sections[0].require::<f64>("rho_t").unwrap(), 0.5);
        assert_eq!(doc.sections[1].require::<f64>("rho_t").unwrap(), 1.0);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse("a = 1\nbogus line\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let doc = parse("a = x\n").unwrap();
        let err = doc.global.require::<f64>("a").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { line: 1, .. }));
    }

    #[test]
    fn rejects_duplicates_and_unknown_keys() {
        assert!(parse("a = 1\na = 2\n").is_err());
        assert!(parse("[s]\n[s]\n").is_err());
        let doc = parse("a = 1\nb = 2\n").unwrap();
        assert!(doc.global.check_keys(&["a"]).is_err());
        assert!(doc.global.check_keys(&["a", "b"]).is_ok());
    }
}
