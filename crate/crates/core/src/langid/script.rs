use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unicode_script::{Script, UnicodeScript};

use super::{LangIdError, ScriptCode};

pub const DEFAULT_SAMPLE_SIZE: usize = 100;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptDetection {
    pub script: ScriptCode,
    /// Share of counted characters in the winning script.
    pub confidence: f64,
}

/// Indices of the lines a detection run looks at, in ascending order.
pub fn sample_line_indices(n_lines: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    if n_lines <= sample_size {
        return (0..n_lines).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n_lines, sample_size).into_vec();
    idx.sort_unstable();
    idx
}

/// Per-script character counts, ignoring Common, Inherited and Unknown.
pub fn script_histogram<'a, I>(lines: I) -> BTreeMap<ScriptCode, usize>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts = BTreeMap::new();
    for line in lines {
        for c in line.chars() {
            let script = c.script();
            if matches!(script, Script::Common | Script::Inherited | Script::Unknown) {
                continue;
            }
            let code = ScriptCode::parse(script.short_name()).expect("unicode short names are ISO 15924");
            *counts.entry(code).or_insert(0) += 1;
        }
    }
    counts
}

/// Majority Unicode script over a seeded sample of up to `sample_size` lines.
///
/// Han text reports `Hani`; the simplified/traditional split is not visible in
/// the script property and must come from a descriptor override.
pub fn detect_script<S: AsRef<str>>(
    lines: &[S],
    sample_size: usize,
    seed: u64,
) -> Result<ScriptDetection, LangIdError> {
    if lines.iter().all(|l| l.as_ref().trim().is_empty()) {
        return Err(LangIdError::NoLines);
    }
    let picked = sample_line_indices(lines.len(), sample_size.max(1), seed);
    let counts = script_histogram(picked.iter().map(|&i| lines[i].as_ref()));
    let total: usize = counts.values().sum();
    // BTreeMap iteration is code-ordered, so ties go to the smaller code.
    let (script, n) = counts
        .iter()
        .fold(None::<(ScriptCode, usize)>, |best, (&s, &n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((s, n)),
        })
        .ok_or(LangIdError::NoScriptEvidence)?;
    Ok(ScriptDetection { script, confidence: n as f64 / total as f64 })
}
