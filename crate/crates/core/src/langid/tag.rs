use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LangIdError;

/// Three-letter lowercase ISO 639-3 code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageCode([u8; 3]);

impl LanguageCode {
    pub fn parse(s: &str) -> Result<Self, LangIdError> {
        let b = s.as_bytes();
        if b.len() == 3 && b.iter().all(u8::is_ascii_lowercase) {
            Ok(Self([b[0], b[1], b[2]]))
        } else {
            Err(LangIdError::InvalidCode(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        // constructed from ascii only
        std::str::from_utf8(&self.0).expect("ascii code")
    }
}

/// Four-letter titlecase ISO 15924 code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScriptCode([u8; 4]);

impl ScriptCode {
    pub fn parse(s: &str) -> Result<Self, LangIdError> {
        let b = s.as_bytes();
        if b.len() == 4 && b[0].is_ascii_uppercase() && b[1..].iter().all(u8::is_ascii_lowercase)
        {
            Ok(Self([b[0], b[1], b[2], b[3]]))
        } else {
            Err(LangIdError::InvalidScript(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("ascii code")
    }

    /// Case-insensitive parse: `latn`, `LATN` and `Latn` all give `Latn`.
    pub fn parse_loose(s: &str) -> Result<Self, LangIdError> {
        let mut chars = s.chars();
        let titled: String = match chars.next() {
            Some(first) => first
                .to_uppercase()
                .chain(chars.flat_map(char::to_lowercase))
                .collect(),
            None => String::new(),
        };
        Self::parse(&titled)
    }
}

/// Canonical `<iso639-3>_<iso15924>` identity, e.g. `eng_Latn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageTag {
    pub language: LanguageCode,
    pub script: ScriptCode,
}

impl LanguageTag {
    pub fn new(language: LanguageCode, script: ScriptCode) -> Self {
        Self { language, script }
    }

    /// Parses the canonical rendering. Only checks the shape; table membership
    /// is checked by [`super::IsoTable::check_tag`].
    pub fn parse(s: &str) -> Result<Self, LangIdError> {
        let (lang, script) = s
            .split_once('_')
            .ok_or_else(|| LangIdError::InvalidTag(s.to_string()))?;
        let language = LanguageCode::parse(lang).map_err(|_| LangIdError::InvalidTag(s.into()))?;
        let script = ScriptCode::parse(script).map_err(|_| LangIdError::InvalidTag(s.into()))?;
        Ok(Self { language, script })
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ScriptCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.language, self.script)
    }
}

impl FromStr for LanguageTag {
    type Err = LangIdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl FromStr for LanguageCode {
    type Err = LangIdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl FromStr for ScriptCode {
    type Err = LangIdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(LanguageCode);
string_serde!(ScriptCode);
string_serde!(LanguageTag);
