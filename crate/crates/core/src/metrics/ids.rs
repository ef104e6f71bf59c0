use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::registry::TaskKind;

/// Every metric a benchmark descriptor may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Bleu,
    Chrf,
    ChrfPlusPlus,
    ChrfGender,
    Rouge,
    Accuracy,
    MacroF1,
    SpanF1,
    TokenAccuracy,
    SelfBleu,
    Nll,
    /// Scored outside this tool and merged back by sample index.
    Comet,
}

pub const ALL_METRICS: &[MetricId] = &[
    MetricId::Bleu,
    MetricId::Chrf,
    MetricId::ChrfPlusPlus,
    MetricId::ChrfGender,
    MetricId::Rouge,
    MetricId::Accuracy,
    MetricId::MacroF1,
    MetricId::SpanF1,
    MetricId::TokenAccuracy,
    MetricId::SelfBleu,
    MetricId::Nll,
    MetricId::Comet,
];

impl MetricId {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Bleu => "bleu",
            MetricId::Chrf => "chrf",
            MetricId::ChrfPlusPlus => "chrf++",
            MetricId::ChrfGender => "chrf_gender",
            MetricId::Rouge => "rouge",
            MetricId::Accuracy => "accuracy",
            MetricId::MacroF1 => "macro_f1",
            MetricId::SpanF1 => "span_f1",
            MetricId::TokenAccuracy => "token_accuracy",
            MetricId::SelfBleu => "self_bleu",
            MetricId::Nll => "nll",
            MetricId::Comet => "comet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ALL_METRICS.iter().copied().find(|m| m.as_str() == s)
    }

    pub fn is_external(&self) -> bool {
        matches!(self, MetricId::Comet)
    }

    pub fn applies_to(&self, task: TaskKind) -> bool {
        use MetricId::*;
        use TaskKind::*;
        match self {
            Bleu | Chrf | ChrfPlusPlus => {
                matches!(task, Translation | Summarization | OpenGeneration)
            }
            ChrfGender | Comet => task == Translation,
            Rouge => matches!(task, Summarization | OpenGeneration),
            SelfBleu => task == OpenGeneration,
            Accuracy => matches!(task, Classification | Comprehension),
            MacroF1 => task == Classification,
            SpanF1 | TokenAccuracy => task == TokenClassification,
            Nll => task == Intrinsic,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MetricId::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown metric {s:?}")))
    }
}
