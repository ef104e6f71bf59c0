//! The ISO 639-3 code table and its lookup indices.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{LangIdError, LanguageCode, LanguageTag, ScriptCode};

const BUNDLED_ISO639_3: &str = include_str!("../../data/iso639-3.tsv");
const BUNDLED_ISO15924: &str = include_str!("../../data/iso15924.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    Individual,
    Macrolanguage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoRow {
    pub iso639_3: LanguageCode,
    pub iso639_2b: Option<String>,
    pub iso639_2t: Option<String>,
    pub iso639_1: Option<String>,
    pub reference_name: String,
    pub alternate_names: Vec<String>,
    pub scope: Scope,
    pub macro_parent: Option<LanguageCode>,
}

impl IsoRow {
    /// The four code columns that are present for this row.
    pub fn codes(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.iso639_3.as_str())
            .chain(self.iso639_2b.as_deref())
            .chain(self.iso639_2t.as_deref())
            .chain(self.iso639_1.as_deref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.reference_name.as_str())
            .chain(self.alternate_names.iter().map(String::as_str))
    }
}

/// A searchable name: case-folded form plus its word tokens.
#[derive(Debug, Clone)]
pub(crate) struct NameEntry {
    pub folded: Vec<char>,
    pub tokens: Vec<Vec<char>>,
    pub row: usize,
}

#[derive(Debug)]
pub struct IsoTable {
    rows: Vec<IsoRow>,
    by_code: HashMap<String, usize>,
    by_name: HashMap<String, Vec<usize>>,
    members: HashMap<LanguageCode, Vec<LanguageCode>>,
    pub(crate) names: Vec<NameEntry>,
    scripts: BTreeSet<ScriptCode>,
}

/// Lowercase, treat `-`/`_`/whitespace as one separator, trim.
pub fn fold_label(s: &str) -> String {
    let lowered: String = s
        .chars()
        .map(|c| if c == '-' || c == '_' { ' ' } else { c })
        .flat_map(char::to_lowercase)
        .collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn name_tokens(folded: &str) -> Vec<Vec<char>> {
    folded
        .split(|c: char| c.is_whitespace() || matches!(c, ',' | '(' | ')' | '/'))
        .filter(|t| !t.is_empty())
        .map(|t| t.chars().collect())
        .collect()
}

fn opt(field: &str) -> Option<String> {
    let f = field.trim();
    (!f.is_empty()).then(|| f.to_string())
}

impl IsoTable {
    /// The table shipped with the crate, parsed once per process.
    pub fn bundled() -> &'static IsoTable {
        static TABLE: OnceLock<IsoTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            IsoTable::from_tsv(BUNDLED_ISO639_3, BUNDLED_ISO15924).expect("bundled ISO table")
        })
    }

    /// Parses the language TSV (`iso639_3 iso639_2B iso639_2T iso639_1 scope
    /// macro_parent reference_name alt_names`) and the script TSV (`code numeric name`).
    /// Lines starting with `#` and the header row are skipped.
    pub fn from_tsv(languages: &str, scripts: &str) -> Result<Self, LangIdError> {
        let mut rows = Vec::new();
        for (idx, line) in languages.lines().enumerate() {
            let line_no = idx + 1;
            if line.starts_with('#') || line.trim().is_empty() || line.starts_with("iso639_3\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 8 {
                return Err(LangIdError::TableFormat {
                    line: line_no,
                    reason: format!("expected 8 columns, found {}", cols.len()),
                });
            }
            let bad = |reason: String| LangIdError::TableFormat { line: line_no, reason };
            let iso639_3 = LanguageCode::parse(cols[0]).map_err(|e| bad(e.to_string()))?;
            let scope = match cols[4] {
                "I" | "Individual" => Scope::Individual,
                "M" | "Macrolanguage" => Scope::Macrolanguage,
                other => return Err(bad(format!("unknown scope {other:?}"))),
            };
            let macro_parent = match opt(cols[5]) {
                Some(p) => Some(LanguageCode::parse(&p).map_err(|e| bad(e.to_string()))?),
                None => None,
            };
            rows.push(IsoRow {
                iso639_3,
                iso639_2b: opt(cols[1]),
                iso639_2t: opt(cols[2]),
                iso639_1: opt(cols[3]),
                scope,
                macro_parent,
                reference_name: cols[6].trim().to_string(),
                alternate_names: cols[7]
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }

        let mut by_code = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            for code in row.codes() {
                if let Some(prev) = by_code.insert(code.to_ascii_lowercase(), i) {
                    if prev != i {
                        return Err(LangIdError::TableIntegrity(format!(
                            "code {code} used by {} and {}",
                            rows[prev].iso639_3, row.iso639_3
                        )));
                    }
                }
            }
        }

        let mut members: HashMap<LanguageCode, Vec<LanguageCode>> = HashMap::new();
        for row in &rows {
            if let Some(parent) = row.macro_parent {
                let ok = by_code
                    .get(parent.as_str())
                    .map(|&i| rows[i].scope == Scope::Macrolanguage && rows[i].iso639_3 == parent)
                    .unwrap_or(false);
                if !ok {
                    return Err(LangIdError::TableIntegrity(format!(
                        "{} names {parent} as macrolanguage but it is not one",
                        row.iso639_3
                    )));
                }
                members.entry(parent).or_default().push(row.iso639_3);
            }
        }

        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        let mut names = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for name in row.names() {
                let folded = fold_label(name);
                if folded.is_empty() {
                    continue;
                }
                let hits = by_name.entry(folded.clone()).or_default();
                if !hits.contains(&i) {
                    hits.push(i);
                }
                names.push(NameEntry {
                    tokens: name_tokens(&folded),
                    folded: folded.chars().collect(),
                    row: i,
                });
            }
        }

        let mut script_set = BTreeSet::new();
        for line in scripts.lines() {
            if line.starts_with('#') || line.starts_with("code\t") || line.trim().is_empty() {
                continue;
            }
            let code = line.split('\t').next().unwrap_or_default();
            script_set.insert(ScriptCode::parse(code)?);
        }

        Ok(Self { rows, by_code, by_name, members, names, scripts: script_set })
    }

    pub fn rows(&self) -> &[IsoRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row for any of the four code forms, case-insensitive.
    pub fn by_code(&self, code: &str) -> Option<&IsoRow> {
        self.by_code.get(&code.to_ascii_lowercase()).map(|&i| &self.rows[i])
    }

    pub(crate) fn row_index_by_code(&self, code: &str) -> Option<usize> {
        self.by_code.get(&code.to_ascii_lowercase()).copied()
    }

    pub(crate) fn rows_by_folded_name(&self, folded: &str) -> &[usize] {
        self.by_name.get(folded).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get(&self, code: LanguageCode) -> Option<&IsoRow> {
        self.by_code(code.as_str()).filter(|r| r.iso639_3 == code)
    }

    pub fn contains(&self, code: LanguageCode) -> bool {
        self.get(code).is_some()
    }

    /// Individual languages listed under a macrolanguage (empty for individuals).
    pub fn members(&self, macro_code: LanguageCode) -> &[LanguageCode] {
        self.members.get(&macro_code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_known_script(&self, script: ScriptCode) -> bool {
        self.scripts.contains(&script)
    }

    /// Checks that a tag's language exists in the table.
    pub fn check_tag(&self, tag: LanguageTag) -> Result<LanguageTag, LangIdError> {
        if self.contains(tag.language) {
            Ok(tag)
        } else {
            Err(LangIdError::UnknownCode(tag.language.to_string()))
        }
    }

    pub fn reference_name(&self, code: LanguageCode) -> Option<&str> {
        self.get(code).map(|r| r.reference_name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let t = IsoTable::bundled();
        assert!(t.len() > 7000);
        let zho = t.by_code("zh").unwrap();
        assert_eq!(zho.iso639_3.as_str(), "zho");
        assert_eq!(zho.scope, Scope::Macrolanguage);
        assert_eq!(t.by_code("CHI").unwrap().iso639_3.as_str(), "zho");
        let cmn = LanguageCode::parse("cmn").unwrap();
        assert!(t.members(LanguageCode::parse("zho").unwrap()).contains(&cmn));
        assert_eq!(t.get(cmn).unwrap().macro_parent.unwrap().as_str(), "zho");
    }

    #[test]
    fn fold_treats_separators_alike() {
        assert_eq!(fold_label("  Mandarin_Chinese "), "mandarin chinese");
        assert_eq!(fold_label("Mandarin-CHINESE"), "mandarin chinese");
        assert_eq!(fold_label("a  -  b"), "a b");
    }

    #[test]
    fn rejects_dangling_macro_parent() {
        let langs = "aaa\t\t\t\tI\tzzz\tFoo\t\n";
        let err = IsoTable::from_tsv(langs, "").unwrap_err();
        assert!(matches!(err, LangIdError::TableIntegrity(_)));
    }

    #[test]
    fn rejects_duplicate_codes() {
        let langs = "aaa\t\t\t\tI\t\tFoo\t\naab\t\t\taaa\tI\t\tBar\t\n";
        assert!(matches!(
            IsoTable::from_tsv(langs, "").unwrap_err(),
            LangIdError::TableIntegrity(_)
        ));
    }

    #[test]
    fn rejects_short_rows() {
        let err = IsoTable::from_tsv("aaa\tI\n", "").unwrap_err();
        assert!(matches!(err, LangIdError::TableFormat { line: 1, .. }));
    }

    #[test]
    fn knows_han_variants() {
        let t = IsoTable::bundled();
        for s in ["Hans", "Hant", "Hani", "Latn", "Cyrl"] {
            assert!(t.is_known_script(ScriptCode::parse(s).unwrap()), "{s}");
        }
        assert!(!t.is_known_script(ScriptCode::parse("Abcd").unwrap()));
    }
}
