use super::{parse_config, ExperimentConfig, Result, RunError};

pub const PRESET_NAMES: [&str; 4] = ["fig3a", "fig3b", "fig3c", "table3"];

/// A bundled configuration by name. Each one lists its assumptions in
/// `notes`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "fig3a" => include_str!("../../presets/fig3a.json"),
        "fig3b" => include_str!("../../presets/fig3b.json"),
        "fig3c" => include_str!("../../presets/fig3c.json"),
        "table3" => include_str!("../../presets/table3.json"),
        _ => {
            return Err(RunError::config(
                "preset",
                format!("unknown preset `{name}` (expected one of {})", PRESET_NAMES.join(", ")),
            ))
        }
    };
    parse_config(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::RunMode;

    #[test]
    fn all_presets_parse() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!c.notes.is_empty(), "{name}");
        }
        assert!(matches!(preset("table3").unwrap().mode().unwrap(), RunMode::Learn { .. }));
        assert!(preset("fig9").is_err());
    }
}
