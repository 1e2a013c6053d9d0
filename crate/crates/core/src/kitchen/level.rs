use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{KitchenError, Multiset};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocationKind {
    Storage,
    ServingTable,
    Tool { tool: String },
}

impl LocationKind {
    pub fn tool_kind(&self) -> Option<&str> {
        match self {
            LocationKind::Tool { tool } => Some(tool),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: LocationKind,
    /// Items present when the episode starts.
    #[serde(default, skip_serializing_if = "Multiset::is_empty")]
    pub contents: Multiset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeStep {
    pub tool: String,
    pub inputs: Multiset,
    pub output: String,
    #[serde(default = "default_cook_steps")]
    pub cook_steps: u32,
}

fn default_cook_steps() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub dish: String,
    pub steps: Vec<RecipeStep>,
}

impl Recipe {
    /// Index of the step whose output is `item`.
    pub fn producer_of(&self, item: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.output == item)
    }

    /// Inputs that no step of this recipe produces; these come from storage.
    pub fn raw_ingredients(&self) -> Multiset {
        let mut raw = Multiset::new();
        for step in &self.steps {
            for item in step.inputs.items() {
                if self.producer_of(item).is_none() {
                    raw.add(item);
                }
            }
        }
        raw
    }

    pub fn last_step(&self) -> usize {
        self.steps.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderSchedule {
    #[serde(default = "default_spawn_interval")]
    pub spawn_interval: u32,
    #[serde(default = "default_lifetime")]
    pub lifetime: u32,
    pub dish_pool: Vec<String>,
}

fn default_spawn_interval() -> u32 {
    12
}

fn default_lifetime() -> u32 {
    10
}

fn default_max_steps() -> u32 {
    60
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelConfig {
    pub level_id: String,
    pub locations: Vec<LocationSpec>,
    pub recipes: Vec<Recipe>,
    pub order_schedule: OrderSchedule,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
}

impl LevelConfig {
    pub fn from_json(text: &str) -> Result<Self, KitchenError> {
        let level: LevelConfig =
            serde_json::from_str(text).map_err(|e| KitchenError::MalformedConfig(e.to_string()))?;
        level.validate()?;
        Ok(level)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("level serializes")
    }

    pub fn recipe(&self, dish: &str) -> Option<&Recipe> {
        self.recipes.iter().find(|r| r.dish == dish)
    }

    pub fn location_index(&self, id: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.id == id)
    }

    /// Where ingredients for new orders are delivered: the first storage.
    pub fn restock_location(&self) -> usize {
        self.locations
            .iter()
            .position(|l| l.kind == LocationKind::Storage)
            .expect("validated level has a storage")
    }

    /// Where agents start: the first serving table.
    pub fn start_location(&self) -> usize {
        self.locations
            .iter()
            .position(|l| l.kind == LocationKind::ServingTable)
            .expect("validated level has a serving table")
    }

    pub fn validate(&self) -> Result<(), KitchenError> {
        let bad = |msg: String| Err(KitchenError::MalformedConfig(msg));
        if self.level_id.trim().is_empty() {
            return bad("level_id is empty".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        let mut ids = BTreeSet::new();
        for loc in &self.locations {
            if loc.id.is_empty() || loc.id.contains([',', '(', ')', ' ']) {
                return bad(format!("location id {:?} is not a plain identifier", loc.id));
            }
            if !ids.insert(loc.id.as_str()) {
                return bad(format!("duplicate location id {}", loc.id));
            }
        }
        if !self.locations.iter().any(|l| l.kind == LocationKind::Storage) {
            return bad("level needs at least one storage".into());
        }
        if !self.locations.iter().any(|l| l.kind == LocationKind::ServingTable) {
            return bad("level needs at least one serving table".into());
        }
        let tools: BTreeSet<&str> = self.locations.iter().filter_map(|l| l.kind.tool_kind()).collect();
        let mut dishes = BTreeSet::new();
        for recipe in &self.recipes {
            if !dishes.insert(recipe.dish.as_str()) {
                return bad(format!("duplicate recipe for {}", recipe.dish));
            }
            let Some(last) = recipe.steps.last() else {
                return bad(format!("recipe {} has no steps", recipe.dish));
            };
            if last.output != recipe.dish {
                return bad(format!("recipe {} ends in {}", recipe.dish, last.output));
            }
            for (k, step) in recipe.steps.iter().enumerate() {
                if step.cook_steps == 0 {
                    return bad(format!("{} step {k} has zero cook steps", recipe.dish));
                }
                if step.inputs.is_empty() {
                    return bad(format!("{} step {k} has no inputs", recipe.dish));
                }
                if !tools.contains(step.tool.as_str()) {
                    return bad(format!("{} step {k} needs a {} but the level has none", recipe.dish, step.tool));
                }
                for item in step.inputs.distinct() {
                    if let Some(producer) = recipe.producer_of(item) {
                        if producer >= k {
                            return bad(format!("{} step {k} consumes {item} before it is made", recipe.dish));
                        }
                    }
                }
            }
        }
        let schedule = &self.order_schedule;
        if schedule.spawn_interval == 0 || schedule.lifetime == 0 {
            return bad("spawn_interval and lifetime must be positive".into());
        }
        if schedule.dish_pool.is_empty() {
            return bad("dish_pool is empty".into());
        }
        if let Some(d) = schedule.dish_pool.iter().find(|d| !dishes.contains(d.as_str())) {
            return bad(format!("dish_pool names {d}, which has no recipe"));
        }
        Ok(())
    }
}
