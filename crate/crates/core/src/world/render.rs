use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{bearing_degrees, signed_gap, ObjectState, WorldState};

/// Text standing in for one camera image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewText {
    pub index: usize,
    pub orientation: u16,
    pub text: String,
}

impl WorldState {
    /// One rendering per rotation increment, starting at the current heading.
    /// The world itself is not rotated, so the heading is unchanged afterwards.
    pub fn render_views(&self) -> Vec<ViewText> {
        let total = self.sensor.view_count();
        self.sensor
            .orientations_from(self.agent.orientation)
            .enumerate()
            .map(|(index, orientation)| ViewText {
                index,
                orientation,
                text: self.render_view(index, total, orientation),
            })
            .collect()
    }

    fn render_view(&self, index: usize, total: usize, orientation: u16) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "view {} of {}, heading {} degrees", index + 1, total, orientation);
        let held = self.agent.holding.as_deref();
        let visible: Vec<&ObjectState> = self
            .visible_objects_at(orientation)
            .iter()
            .filter(|id| Some(id.as_str()) != held)
            .map(|id| &self.objects[id])
            .collect();
        if visible.is_empty() {
            out.push_str("no objects visible\n");
        }
        for obj in visible {
            let _ = writeln!(out, "- {}", self.describe(obj, orientation));
        }
        if let Some(held) = held {
            let _ = writeln!(out, "holding: {}", self.describe_state(&self.objects[held]).trim_start_matches(", "));
        }
        out
    }

    fn describe(&self, obj: &ObjectState, orientation: u16) -> String {
        let at = self.position_of(&obj.id).unwrap_or(obj.pos);
        let dx = at.x - self.agent.pos.x;
        let dy = at.y - self.agent.pos.y;
        let bearing = if dx == 0 && dy == 0 {
            "here"
        } else {
            let gap = signed_gap(bearing_degrees(dx, dy), orientation as f64);
            let third = self.sensor.fov as f64 / 6.0;
            if gap > third {
                "left"
            } else if gap < -third {
                "right"
            } else {
                "ahead"
            }
        };
        let distance = at.chebyshev(self.agent.pos);
        let band = if distance <= self.sensor.reach_distance {
            "within reach"
        } else if distance * 2 <= self.sensor.view_distance {
            "near"
        } else {
            "far"
        };
        format!("{} ({}): {}, {}{}", obj.id, obj.class, bearing, band, self.describe_state(obj))
    }

    fn describe_state(&self, obj: &ObjectState) -> String {
        let mut parts = Vec::new();
        if obj.openable {
            parts.push(if obj.is_open { "open".to_string() } else { "closed".to_string() });
        }
        if obj.toggleable {
            parts.push(if obj.is_on { "on".to_string() } else { "off".to_string() });
        }
        if let Some(fill) = &obj.fill {
            parts.push(format!("filled with {fill}"));
        }
        if let Some(link) = &obj.parent {
            parts.push(format!("{} {}", link.relation.as_str(), link.id));
        }
        let head = if self.agent.holding.as_deref() == Some(obj.id.as_str()) {
            format!("{} ({})", obj.id, obj.class)
        } else {
            String::new()
        };
        let tail: String = parts.iter().map(|p| format!(", {p}")).collect();
        format!("{head}{tail}")
    }
}

#[cfg(test)]
mod tests {
    use crate::world::load_scene;

    const KITCHEN: &str = "\
object counter class=counter pos=3,0 receptacle
object mug class=mug parent=on:counter pickupable
object fridge class=fridge pos=0,4 openable receptacle sealed_container
agent pos=0,0 facing=0
";

    #[test]
    fn four_views_with_default_sensor() {
        let w = load_scene(KITCHEN).unwrap();
        let views = w.render_views();
        assert_eq!(views.len(), 4);
        assert_eq!(views.iter().map(|v| v.orientation).collect::<Vec<_>>(), vec![0, 90, 180, 270]);
        assert!(views[0].text.contains("mug (mug): ahead, near, on counter"), "{}", views[0].text);
        assert!(views[1].text.contains("fridge (fridge): ahead, near, closed"), "{}", views[1].text);
    }

    #[test]
    fn empty_sector_says_so() {
        let w = load_scene(KITCHEN).unwrap();
        let views = w.render_views();
        assert!(views[2].text.contains("no objects visible"));
        assert!(views[3].text.contains("no objects visible"));
    }

    #[test]
    fn rendering_is_deterministic_and_non_mutating() {
        let w = load_scene(KITCHEN).unwrap();
        let before = w.clone();
        let a = w.render_views();
        let b = w.render_views();
        assert_eq!(a, b);
        assert_eq!(w, before);
    }
}
