use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AlignmentMode, BenchmarkDescriptor, RegistryError, TaskKind};
use crate::langid::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Direction {
    pub source: LanguageTag,
    pub target: LanguageTag,
}

impl Direction {
    pub fn new(source: LanguageTag, target: LanguageTag) -> Result<Self, RegistryError> {
        if source == target {
            return Err(RegistryError::DegenerateDirection(source));
        }
        Ok(Self { source, target })
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionMode {
    AnyToPivot,
    PivotToAny,
    #[default]
    Both,
}

impl DirectionMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "any-to-pivot" => Some(Self::AnyToPivot),
            "pivot-to-any" => Some(Self::PivotToAny),
            "both" => Some(Self::Both),
            _ => None,
        }
    }
}

/// Pivot-centric directions for a translation benchmark.
///
/// Multi-aligned benchmarks pair the pivot with every other aligned tag, in
/// canonical tag order; `Both` is any-to-pivot followed by pivot-to-any.
/// Pairwise benchmarks only yield their declared pairs that touch the pivot.
pub fn enumerate_directions(
    desc: &BenchmarkDescriptor,
    pivot: LanguageTag,
    mode: DirectionMode,
) -> Result<Vec<Direction>, RegistryError> {
    if desc.task_kind != TaskKind::Translation {
        return Err(RegistryError::NotATranslationBenchmark(desc.id.clone()));
    }
    let tags = desc.aligned_tags();
    if !tags.contains(&pivot) {
        return Err(RegistryError::PivotNotInBenchmark { benchmark: desc.id.clone(), pivot });
    }

    let (into_pivot, from_pivot): (Vec<Direction>, Vec<Direction>) = match desc.alignment_mode {
        AlignmentMode::Pairwise => {
            let declared = declared_directions(desc);
            let mut into: Vec<Direction> =
                declared.iter().copied().filter(|d| d.target == pivot).collect();
            let mut from: Vec<Direction> =
                declared.iter().copied().filter(|d| d.source == pivot).collect();
            into.sort_by_key(|d| d.source.to_string());
            from.sort_by_key(|d| d.target.to_string());
            (into, from)
        }
        _ => {
            let others: Vec<LanguageTag> = tags.into_iter().filter(|t| *t != pivot).collect();
            (
                others.iter().map(|&x| Direction { source: x, target: pivot }).collect(),
                others.iter().map(|&x| Direction { source: pivot, target: x }).collect(),
            )
        }
    };

    Ok(match mode {
        DirectionMode::AnyToPivot => into_pivot,
        DirectionMode::PivotToAny => from_pivot,
        DirectionMode::Both => into_pivot.into_iter().chain(from_pivot).collect(),
    })
}

/// Aligned directed pairs declared by a pairwise benchmark, in file order.
/// Pairs with an unaligned side are skipped.
pub fn declared_directions(desc: &BenchmarkDescriptor) -> Vec<Direction> {
    desc.pairs
        .iter()
        .filter_map(|(s, t)| {
            let (s, t) = (desc.lang_dict.get(s)?, desc.lang_dict.get(t)?);
            Direction::new(*s, *t).ok()
        })
        .collect()
}
