use std::fmt::Write;

use sha2::{Digest, Sha256};

use super::KitchenState;

/// Text observation handed to every policy. The layout is fixed so that the
/// same state always renders to the same bytes.
pub fn render_observation(state: &KitchenState) -> String {
    let mut out = String::new();
    let level = state.level();
    out.push_str("Game Configuration\n");
    let _ = writeln!(out, "Current Game Level: {}", level.level_id);
    out.push_str("Current Dishes:\n");
    for order in state.orders() {
        let _ = writeln!(out, "  Name: {}", order.dish);
        let _ = writeln!(out, "  Lifetime: {}", order.lifetime);
    }
    let _ = writeln!(out, "Current Game Step: {}", state.step_index());
    let _ = writeln!(out, "Maximum Game Steps: {}", level.max_steps);

    out.push_str("\nAgent State\n");
    for agent in state.agents() {
        let _ = writeln!(out, "at({}, {})", agent.id, state.locations()[agent.at].id);
        let _ = writeln!(out, "hold({}, {})", agent.id, agent.holding.as_deref().unwrap_or("None"));
    }

    out.push_str("\nKitchen State\n");
    for loc in state.locations() {
        let contents = if loc.contents.is_empty() {
            "None".to_string()
        } else {
            loc.contents.items().collect::<Vec<_>>().join(", ")
        };
        let _ = writeln!(out, "inside({}, {contents})", loc.id);
        if let Some(p) = &loc.processing {
            let _ = writeln!(out, "cooking({}, {}, {})", loc.id, p.output_item, p.remaining_steps);
        }
    }

    out.push_str("\nAccomplished Tasks\n");
    if state.accomplished().is_empty() {
        out.push_str("None\n");
    }
    for dish in state.accomplished() {
        let _ = writeln!(out, "{dish}");
    }
    out
}

/// Lowercase hex SHA-256 of the rendered observation.
pub fn observation_hash(state: &KitchenState) -> String {
    let digest = Sha256::digest(render_observation(state).as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::super::{levels, load_level};
    use super::*;

    #[test]
    fn fresh_level_one_rendering() {
        let s = load_level(&levels::builtin("level_1").unwrap(), 2, 3).unwrap();
        let text = render_observation(&s);
        let expected = "\
Game Configuration
Current Game Level: level_1
Current Dishes:
  Name: salmonMeatcake
  Lifetime: 10
Current Game Step: 0
Maximum Game Steps: 60

Agent State
at(agent0, servingtable0)
hold(agent0, None)
at(agent1, servingtable0)
hold(agent1, None)

Kitchen State
inside(storage0, salmon)
inside(servingtable0, None)
inside(blender0, None)
inside(blender1, None)

Accomplished Tasks
None
";
        assert_eq!(text, expected);
        assert_eq!(observation_hash(&s), observation_hash(&s.clone()));
        assert_eq!(observation_hash(&s).len(), 64);
    }
}
