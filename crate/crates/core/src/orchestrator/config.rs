use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::inference::{plan_nll_windows, ClientConfig, Clock, DEFAULT_STRIDE, DEFAULT_WINDOW};
use crate::langid::LanguageTag;
use crate::promptlib::PromptStrategy;
use crate::registry::DirectionMode;

pub const ALL: &str = "all";

/// Everything a run needs. Relative paths are resolved against `base_dir`
/// (the config file's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub registry_dir: PathBuf,
    pub prompt_dir: PathBuf,
    /// Benchmark ids, or `["all"]`.
    pub benchmarks: Vec<String>,
    /// Query codes or tags, or `["all"]`.
    pub langs: Vec<String>,
    pub prompt_strategy: PromptStrategy,
    pub pivot: Option<LanguageTag>,
    pub direction_mode: DirectionMode,
    pub n_shot: usize,
    pub sample_limit: Option<usize>,
    pub parallelism: usize,
    pub store_details: bool,
    pub backend_url: String,
    pub translator_url: Option<String>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub max_new_tokens: usize,
    pub clock: Clock,
    pub nll_window: usize,
    pub nll_stride: usize,
    pub bleu_tokenizer: String,
    pub timeout_secs: u64,
    pub retries: u32,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            registry_dir: PathBuf::from("benchmarks"),
            prompt_dir: PathBuf::from("prompts"),
            benchmarks: vec![ALL.to_string()],
            langs: vec![ALL.to_string()],
            prompt_strategy: PromptStrategy::multi(),
            pivot: None,
            direction_mode: DirectionMode::Both,
            n_shot: 0,
            sample_limit: None,
            parallelism: 1,
            store_details: false,
            backend_url: "http://127.0.0.1:8000".to_string(),
            translator_url: None,
            seed: 42,
            output_dir: PathBuf::from("results"),
            max_new_tokens: 128,
            clock: Clock::Wall,
            nll_window: DEFAULT_WINDOW,
            nll_stride: DEFAULT_STRIDE,
            bleu_tokenizer: "13a".to_string(),
            timeout_secs: 120,
            retries: 2,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub benchmarks: Option<Vec<String>>,
    pub langs: Option<Vec<String>>,
    pub prompt_strategy: Option<PromptStrategy>,
    pub pivot: Option<LanguageTag>,
    pub direction_mode: Option<DirectionMode>,
    pub n_shot: Option<usize>,
    pub sample_limit: Option<usize>,
    pub parallelism: Option<usize>,
    pub store_details: bool,
    pub backend_url: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub clock: Option<Clock>,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, OrchestratorError> {
        let mut c: RunConfig =
            serde_json::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, OrchestratorError> {
        let text = fs::read_to_string(path)
            .map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::from_json(&text, &base)
    }

    /// Applies, in increasing precedence, the backend URL environment
    /// variable and then command-line overrides.
    pub fn apply(&mut self, o: Overrides, env_backend_url: Option<String>) {
        if let Some(url) = env_backend_url.filter(|u| !u.is_empty()) {
            self.backend_url = url;
        }
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = o.$field {
                    self.$field = v;
                }
            };
        }
        set!(benchmarks);
        set!(langs);
        set!(prompt_strategy);
        set!(direction_mode);
        set!(n_shot);
        set!(parallelism);
        set!(backend_url);
        set!(seed);
        set!(clock);
        if let Some(p) = o.pivot {
            self.pivot = Some(p);
        }
        if let Some(n) = o.sample_limit {
            self.sample_limit = Some(n);
        }
        if let Some(d) = o.output_dir {
            // command-line paths are relative to the working directory
            self.output_dir = d;
            if self.output_dir.is_relative() {
                self.output_dir = std::env::current_dir().unwrap_or_default().join(&self.output_dir);
            }
        }
        self.store_details |= o.store_details;
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: &str| Err(OrchestratorError::Config(m.to_string()));
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if self.benchmarks.is_empty() || self.langs.is_empty() {
            return bad("benchmarks and langs must not be empty");
        }
        self.prompt_strategy.validate().map_err(|e| OrchestratorError::Config(e.to_string()))?;
        plan_nll_windows(1, self.nll_window, self.nll_stride)
            .map_err(|e| OrchestratorError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) }
    }

    pub fn client_config(&self) -> ClientConfig {
        let mut c = ClientConfig::new(&self.backend_url);
        c.timeout = Duration::from_secs(self.timeout_secs);
        c.retries = self.retries;
        c.clock = self.clock;
        c
    }

    /// The settings that determine results, for the summary. Parallelism,
    /// paths to outputs and the backend address are left out so summaries
    /// compare equal across machines and worker counts.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            for k in ["parallelism", "output_dir", "backend_url", "translator_url", "timeout_secs", "retries"] {
                m.remove(k);
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut c = RunConfig::from_json(r#"{"benchmarks": ["a"], "backend_url": "http://file"}"#, Path::new("/cfg")).unwrap();
        assert_eq!(c.langs, vec!["all"]);
        assert_eq!(c.resolve(Path::new("benchmarks")), PathBuf::from("/cfg/benchmarks"));
        c.apply(Overrides::default(), Some("http://env".into()));
        assert_eq!(c.backend_url, "http://env");
        c.apply(Overrides { backend_url: Some("http://cli".into()), n_shot: Some(3), ..Default::default() }, Some("http://env".into()));
        assert_eq!(c.backend_url, "http://cli");
        assert_eq!(c.n_shot, 3);
        assert!(c.validate().is_ok());
        let echo = c.echo();
        assert!(echo.get("backend_url").is_none() && echo.get("parallelism").is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_json(r#"{"benchmark": ["a"]}"#, Path::new(".")).is_err());
        let c = RunConfig { parallelism: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { nll_stride: 2048, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
