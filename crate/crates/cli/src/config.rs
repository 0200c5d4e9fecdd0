use std::path::{Path, PathBuf};

use blendkg_core::llm::{GatewayMode, ProviderKind};
use blendkg_core::prompt::Preset;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Settings as read from a config file. Every field is optional; the API
/// key is deliberately not among them.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub skg_url: Option<String>,
    pub llm_base_url: Option<String>,
    pub llm_provider: Option<String>,
    pub model_id: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub recordings: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub template_version: Option<String>,
    pub default_preset: Option<String>,
    pub parallelism: Option<usize>,
    pub mode: Option<String>,
}

impl FileConfig {
    /// Reads a TOML file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| {
            let hint = if text.contains("api_key") {
                "; the API key is read from LLM_API_KEY only"
            } else {
                ""
            };
            CliError::Usage(format!("{}: {e}{hint}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.cache_dir, &mut cfg.recordings, &mut cfg.templates_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Values given on the command line or through the environment; these win
/// over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub skg_url: Option<String>,
    pub llm_base_url: Option<String>,
    pub llm_provider: Option<String>,
    pub model_id: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub recordings: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub template_version: Option<String>,
    pub default_preset: Option<String>,
    pub parallelism: Option<usize>,
    pub mode: Option<String>,
}

/// Fully resolved application settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppConfig {
    pub skg_url: Option<String>,
    pub llm_base_url: Option<String>,
    pub llm_provider: ProviderKind,
    pub model_id: Option<String>,
    pub cache_dir: PathBuf,
    pub recordings: PathBuf,
    pub templates_dir: Option<PathBuf>,
    pub template_version: String,
    pub default_preset: Preset,
    pub parallelism: usize,
    pub mode: GatewayMode,
}

impl AppConfig {
    pub fn resolve(file: FileConfig, over: Overrides) -> Result<Self, CliError> {
        let usage = CliError::Usage;
        let provider = over.llm_provider.or(file.llm_provider).unwrap_or_else(|| "openai".into());
        let preset = over.default_preset.or(file.default_preset).unwrap_or_else(|| "LAG".into());
        let mode = over.mode.or(file.mode).unwrap_or_else(|| "live".into());
        let parallelism = over.parallelism.or(file.parallelism).unwrap_or(1);
        if parallelism == 0 {
            return Err(usage("parallelism must be at least 1".into()));
        }
        Ok(Self {
            skg_url: over.skg_url.or(file.skg_url),
            llm_base_url: over.llm_base_url.or(file.llm_base_url),
            llm_provider: provider.parse().map_err(usage)?,
            model_id: over.model_id.or(file.model_id),
            cache_dir: over.cache_dir.or(file.cache_dir).unwrap_or_else(|| PathBuf::from(".blendkg/skg_cache")),
            recordings: over
                .recordings
                .or(file.recordings)
                .unwrap_or_else(|| PathBuf::from(".blendkg/recordings.json")),
            templates_dir: over.templates_dir.or(file.templates_dir),
            template_version: over.template_version.or(file.template_version).unwrap_or_else(|| "v1".into()),
            default_preset: preset.parse().map_err(usage)?,
            parallelism,
            mode: mode.parse().map_err(usage)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = FileConfig {
            skg_url: Some("http://file".into()),
            parallelism: Some(2),
            mode: Some("replay".into()),
            ..FileConfig::default()
        };
        let over = Overrides {
            skg_url: Some("http://flag".into()),
            ..Overrides::default()
        };
        let cfg = AppConfig::resolve(file, over).unwrap();
        assert_eq!(cfg.skg_url.as_deref(), Some("http://flag"));
        assert_eq!(cfg.parallelism, 2);
        assert_eq!(cfg.mode, GatewayMode::Replay);
        assert_eq!(cfg.default_preset, Preset::Lag);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let over = Overrides {
            mode: Some("sometimes".into()),
            ..Overrides::default()
        };
        assert!(matches!(AppConfig::resolve(FileConfig::default(), over), Err(CliError::Usage(_))));
    }

    #[test]
    fn api_key_is_not_a_config_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "api_key = \"sk-123\"\n").unwrap();
        match FileConfig::load(&path) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("LLM_API_KEY")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn file_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "cache_dir = \"cache\"\nrecordings = \"/abs/r.json\"\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.cache_dir.unwrap(), dir.path().join("cache"));
        assert_eq!(cfg.recordings.unwrap(), PathBuf::from("/abs/r.json"));
    }
}
