//! Shipped level corpus.
//!
//! Levels are plain JSON documents in the same format `LevelConfig::from_json`
//! reads, so a larger corpus can be supplied from disk.
//!
//! - `level_1`: one dish, one blending step.
//! - `level_2`: adds a two-step soup that mixes an intermediate with rice in a pot.
//! - `level_3`: two two-step dishes over four tool kinds, including a three-item mixture.

use super::LevelConfig;

const LEVEL_1: &str = include_str!("../../data/levels/level_1.json");
const LEVEL_2: &str = include_str!("../../data/levels/level_2.json");
const LEVEL_3: &str = include_str!("../../data/levels/level_3.json");

pub fn builtin_ids() -> &'static [&'static str] {
    &["level_1", "level_2", "level_3"]
}

pub fn builtin(id: &str) -> Option<LevelConfig> {
    let text = match id {
        "level_1" => LEVEL_1,
        "level_2" => LEVEL_2,
        "level_3" => LEVEL_3,
        _ => return None,
    };
    Some(LevelConfig::from_json(text).expect("shipped levels are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_shipped_levels_load() {
        for id in builtin_ids() {
            let level = builtin(id).unwrap();
            assert_eq!(level.level_id, *id);
            assert_eq!(level.max_steps, 60);
        }
        assert!(builtin("level_99").is_none());
    }
}
