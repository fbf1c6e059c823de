use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::document::ModelKind;

pub const SCHEME: &str = "has://";

/// `has://<repo>/<kind>/<name>@<version>`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelUri {
    pub repo: String,
    pub kind: ModelKind,
    pub name: String,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("MALFORMED_URI: `{text}`: {reason}")]
pub struct UriError {
    pub text: String,
    pub reason: String,
}

impl UriError {
    pub fn code(&self) -> &'static str {
        "MALFORMED_URI"
    }
}

/// Checks a repository or entry name: non-empty, no path separators or
/// `@`, no whitespace, not `.`/`..`.
pub fn check_name(name: &str) -> Result<(), String> {
    if name.is_empty() {
        return Err("empty name".into());
    }
    if name == "." || name == ".." || name.starts_with('.') {
        return Err(format!("name `{name}` may not start with `.`"));
    }
    if let Some(c) = name
        .chars()
        .find(|c| matches!(c, '/' | '\\' | '@') || c.is_whitespace() || c.is_control())
    {
        return Err(format!("name `{name}` contains `{}`", c.escape_default()));
    }
    Ok(())
}

impl ModelUri {
    pub fn new(repo: &str, kind: ModelKind, name: &str, version: u32) -> Self {
        ModelUri {
            repo: repo.to_owned(),
            kind,
            name: name.to_owned(),
            version,
        }
    }

    pub fn parse(text: &str) -> Result<ModelUri, UriError> {
        let fail = |reason: &str| UriError {
            text: text.to_owned(),
            reason: reason.to_owned(),
        };
        let rest = text.strip_prefix(SCHEME).ok_or_else(|| fail("scheme must be `has://`"))?;
        let (path, version) = rest.rsplit_once('@').ok_or_else(|| fail("missing `@<version>`"))?;
        if version.is_empty() || !version.bytes().all(|b| b.is_ascii_digit()) {
            return Err(fail("version must be a positive integer"));
        }
        let version: u32 = version.parse().map_err(|_| fail("version out of range"))?;
        if version == 0 {
            return Err(fail("version must be a positive integer"));
        }
        let parts: Vec<&str> = path.split('/').collect();
        let [repo, kind, name] = parts[..] else {
            return Err(fail("expected `<repo>/<kind>/<name>`"));
        };
        check_name(repo).map_err(|r| fail(&r))?;
        check_name(name).map_err(|r| fail(&r))?;
        let kind: ModelKind = kind.parse().map_err(|_| fail(&format!("unknown kind `{kind}`")))?;
        if !kind.is_storable() {
            return Err(fail(&format!("kind `{kind}` is not addressable")));
        }
        Ok(ModelUri {
            repo: repo.to_owned(),
            kind,
            name: name.to_owned(),
            version,
        })
    }
}

impl fmt::Display for ModelUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{SCHEME}{}/{}/{}@{}", self.repo, self.kind, self.name, self.version)
    }
}

impl FromStr for ModelUri {
    type Err = UriError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelUri::parse(s)
    }
}

impl Serialize for ModelUri {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelUri {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ModelUri::parse(&text).map_err(serde::de::Error::custom)
    }
}
