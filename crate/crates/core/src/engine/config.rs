use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::acoustics::AcousticParams;
use crate::glottis::{GlottalMode, GlottisParams};
use crate::tongue::DynamicsParams;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "VTFORGE_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("reading config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Hz
    pub audio_rate: u32,
    /// Hz; must divide `audio_rate`.
    pub control_rate: u32,
    /// Tongue dynamics steps per control tick, warm-started.
    pub tongue_substeps: usize,
    /// Applied to the tube output before any clipping.
    pub render_gain: f64,
    /// Live sessions soft-clip with tanh; offline renders never do.
    pub live: bool,
    pub glottis: GlottisParams,
    /// `audio_rate` here is ignored in favour of the engine rate.
    pub acoustics: AcousticParams,
    pub dynamics: DynamicsParams,
    pub tongue_model: Option<PathBuf>,
    pub tract: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            audio_rate: 44_100,
            control_rate: 100,
            tongue_substeps: 40,
            render_gain: 1.0,
            live: false,
            glottis: GlottisParams::default(),
            acoustics: AcousticParams::default(),
            dynamics: DynamicsParams::default(),
            tongue_model: None,
            tract: None,
        }
    }
}

/// Every key accepted by [`EngineConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "audio_rate",
    "control_rate",
    "tongue.substeps",
    "tongue.model",
    "tract.outline",
    "render_gain",
    "live",
    "glottis.mode",
    "glottis.f0",
    "glottis.amplitude",
    "glottis.oq",
    "glottis.sq",
    "glottis.ps",
    "acoustics.c",
    "acoustics.loss",
    "acoustics.r_lip",
];

impl EngineConfig {
    /// Samples per control tick.
    pub fn block_size(&self) -> usize {
        (self.audio_rate / self.control_rate) as usize
    }

    pub fn acoustic_params(&self) -> AcousticParams {
        AcousticParams {
            audio_rate: self.audio_rate as f64,
            ..self.acoustics
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.audio_rate == 0 || self.control_rate == 0 {
            return bad("rates must be positive".into());
        }
        if !self.audio_rate.is_multiple_of(self.control_rate) {
            return bad(format!(
                "audio rate {} is not a multiple of control rate {}",
                self.audio_rate, self.control_rate
            ));
        }
        if self.tongue_substeps == 0 {
            return bad("tongue.substeps must be at least 1".into());
        }
        if !self.render_gain.is_finite() {
            return bad("render_gain must be finite".into());
        }
        self.glottis
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.acoustic_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Applies one `key = value` setting. Relative paths resolve against
    /// `base` when given.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let num = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<u32>().map_err(|_| bad());
        let path = || {
            let p = PathBuf::from(value);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key {
            "audio_rate" => self.audio_rate = int()?,
            "control_rate" => self.control_rate = int()?,
            "tongue.substeps" => self.tongue_substeps = int()? as usize,
            "tongue.model" => self.tongue_model = Some(path()),
            "tract.outline" => self.tract = Some(path()),
            "render_gain" => self.render_gain = num()?,
            "live" => self.live = value.parse().map_err(|_| bad())?,
            "glottis.mode" => self.glottis.mode = GlottalMode::from_name(value).ok_or_else(bad)?,
            "glottis.f0" => self.glottis.rosenberg.f0 = num()?,
            "glottis.amplitude" => self.glottis.rosenberg.amplitude = num()?,
            "glottis.oq" => self.glottis.rosenberg.open_quotient = num()?,
            "glottis.sq" => self.glottis.rosenberg.speed_quotient = num()?,
            "glottis.ps" => self.glottis.two_mass.ps = num()?,
            "acoustics.c" => self.acoustics.c = num()?,
            "acoustics.loss" => self.acoustics.loss = num()?,
            "acoustics.r_lip" => self.acoustics.r_lip = num()?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file on top of `self`. `#` starts a
    /// comment.
    pub fn apply_text(&mut self, text: &str, base: Option<&Path>) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim(), base)
                .map_err(|e| ConfigError::Syntax {
                    line: i + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text, path.parent())
    }

    /// Defaults, then the file named by [`CONFIG_ENV`] if set, then `path`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = EngineConfig::default();
        if let Some(env) = std::env::var_os(CONFIG_ENV) {
            cfg.apply_file(Path::new(&env))?;
        }
        if let Some(p) = path {
            cfg.apply_file(p)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`EngineConfig::apply_text`] for every key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("audio_rate", self.audio_rate.to_string());
        put("control_rate", self.control_rate.to_string());
        put("tongue.substeps", self.tongue_substeps.to_string());
        if let Some(p) = &self.tongue_model {
            put("tongue.model", p.display().to_string());
        }
        if let Some(p) = &self.tract {
            put("tract.outline", p.display().to_string());
        }
        put("render_gain", self.render_gain.to_string());
        put("live", self.live.to_string());
        put("glottis.mode", self.glottis.mode.name().to_string());
        put("glottis.f0", self.glottis.rosenberg.f0.to_string());
        put(
            "glottis.amplitude",
            self.glottis.rosenberg.amplitude.to_string(),
        );
        put(
            "glottis.oq",
            self.glottis.rosenberg.open_quotient.to_string(),
        );
        put(
            "glottis.sq",
            self.glottis.rosenberg.speed_quotient.to_string(),
        );
        put("glottis.ps", self.glottis.two_mass.ps.to_string());
        put("acoustics.c", self.acoustics.c.to_string());
        put("acoustics.loss", self.acoustics.loss.to_string());
        put("acoustics.r_lip", self.acoustics.r_lip.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.block_size(), 441);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = EngineConfig::default();
        cfg.apply_text(
            "# comment\nglottis.mode = two-mass\nglottis.f0 = 95.5 # trailing\n\
             acoustics.loss=0.001\ntract.outline = shapes/t.txt\n",
            Some(Path::new("/cfg")),
        )
        .unwrap();
        assert_eq!(cfg.glottis.mode, GlottalMode::TwoMass);
        assert_eq!(cfg.glottis.rosenberg.f0, 95.5);
        assert_eq!(cfg.acoustics.loss, 0.001);
        assert_eq!(cfg.tract.as_deref(), Some(Path::new("/cfg/shapes/t.txt")));
        let mut again = EngineConfig::default();
        again.apply_text(&cfg.to_text(), None).unwrap();
        assert_eq!(again, cfg);
        for key in CONFIG_KEYS {
            assert!(
                cfg.to_text().contains(key) || key.contains("model"),
                "{key}"
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = EngineConfig::default();
        assert!(matches!(
            cfg.apply_text("glottis.f0 = fast", None),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(cfg.apply_text("\n\nnope = 1", None).is_err());
        assert!(cfg.apply_text("just words", None).is_err());
        cfg.control_rate = 101;
        assert!(cfg.validate().is_err());
    }
}
