//! Deterministic grid-world household simulator.
//!
//! Objects sit on integer cells, may be nested `in`/`on` receptacles and
//! carry a handful of affordance flags. The agent has a single forward
//! sensor sector and can hold one object. Distances are Chebyshev.

mod actions;
mod eval;
mod render;
mod scene;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use actions::{ActionKind, ActionResult, DeviceEffect, DeviceRule, FailureReason, DEVICE_RULES};
pub use eval::UnknownPredicate;
pub use render::ViewText;
pub use scene::{load_scene, load_scene_with, SceneError};

/// Classes that can hold a substance.
pub const CONTAINER_CLASSES: &[&str] = &["mug", "cup", "bowl", "pot", "kettle", "glass", "bottle", "pan", "coffee_mug"];

/// Receptacle classes that take objects `in` rather than `on`.
pub const ENCLOSING_CLASSES: &[&str] =
    &["fridge", "sink", "microwave", "cabinet", "drawer", "box", "bin", "basin", "bowl", "pot", "garbage_can"];

pub fn is_container_class(class: &str) -> bool {
    CONTAINER_CLASSES.contains(&class)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub x: i32,
    pub y: i32,
}

impl GridPos {
    pub const fn new(x: i32, y: i32) -> Self {
        GridPos { x, y }
    }

    pub fn chebyshev(self, other: GridPos) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    In,
    On,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::In => "in",
            Relation::On => "on",
        }
    }

    pub fn for_receptacle_class(class: &str) -> Relation {
        if ENCLOSING_CLASSES.contains(&class) {
            Relation::In
        } else {
            Relation::On
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParentLink {
    pub relation: Relation,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    pub class: String,
    /// Own cell; ignored while held or nested, see [`WorldState::position_of`].
    pub pos: GridPos,
    pub pickupable: bool,
    pub openable: bool,
    pub is_open: bool,
    pub toggleable: bool,
    pub is_on: bool,
    pub receptacle: bool,
    pub sealed_container: bool,
    pub fill: Option<String>,
    pub parent: Option<ParentLink>,
}

impl ObjectState {
    pub fn new(id: &str, class: &str, pos: GridPos) -> Self {
        ObjectState {
            id: id.to_string(),
            class: class.to_string(),
            pos,
            pickupable: false,
            openable: false,
            is_open: false,
            toggleable: false,
            is_on: false,
            receptacle: false,
            sealed_container: false,
            fill: None,
            parent: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub pos: GridPos,
    /// Degrees, a multiple of the sensor's rotation increment.
    pub orientation: u16,
    pub holding: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub rotation_increment: u16,
    pub fov: u16,
    pub view_distance: i32,
    pub reach_distance: i32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { rotation_increment: 90, fov: 90, view_distance: 8, reach_distance: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SensorError {
    #[error("rotation increment must be a positive divisor of 360, got {0}")]
    Increment(u16),
    #[error("field of view must be in 1..=360, got {0}")]
    Fov(u16),
    #[error("distances must be non-negative")]
    Distance,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if self.rotation_increment == 0 || 360 % self.rotation_increment != 0 {
            return Err(SensorError::Increment(self.rotation_increment));
        }
        if self.fov == 0 || self.fov > 360 {
            return Err(SensorError::Fov(self.fov));
        }
        if self.view_distance < 0 || self.reach_distance < 0 {
            return Err(SensorError::Distance);
        }
        Ok(())
    }

    pub fn view_count(&self) -> usize {
        (360 / self.rotation_increment) as usize
    }

    /// Orientations visited by a full rotation starting at `start`.
    pub fn orientations_from(&self, start: u16) -> impl Iterator<Item = u16> + '_ {
        (0..self.view_count()).map(move |k| ((start as usize + k * self.rotation_increment as usize) % 360) as u16)
    }
}

/// Ground-truth state of one trial's world.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    objects: BTreeMap<String, ObjectState>,
    agent: AgentState,
    sensor: SensorConfig,
}

impl WorldState {
    pub fn objects(&self) -> impl Iterator<Item = &ObjectState> {
        self.objects.values()
    }

    pub fn object(&self, id: &str) -> Option<&ObjectState> {
        self.objects.get(id)
    }

    pub fn agent(&self) -> &AgentState {
        &self.agent
    }

    pub fn sensor(&self) -> &SensorConfig {
        &self.sensor
    }

    /// Sorted, de-duplicated object classes present in the scene.
    pub fn object_classes(&self) -> Vec<String> {
        self.objects.values().map(|o| o.class.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Replaces the sensor; the agent's orientation must stay on the new increment grid.
    pub fn set_sensor(&mut self, sensor: SensorConfig) -> Result<(), SensorError> {
        sensor.validate()?;
        if !self.agent.orientation.is_multiple_of(sensor.rotation_increment) {
            return Err(SensorError::Increment(sensor.rotation_increment));
        }
        self.sensor = sensor;
        Ok(())
    }

    /// Moves the agent without any checks. Held objects travel along.
    pub fn set_agent_pose(&mut self, pos: GridPos, orientation: u16) {
        self.agent.pos = pos;
        self.agent.orientation = orientation % 360;
    }

    /// Effective cell: held objects are at the agent, nested objects at their outermost parent.
    pub fn position_of(&self, id: &str) -> Option<GridPos> {
        let mut current = self.objects.get(id)?;
        if self.agent.holding.as_deref() == Some(id) {
            return Some(self.agent.pos);
        }
        let mut guard = 0;
        while let Some(link) = &current.parent {
            current = self.objects.get(&link.id)?;
            guard += 1;
            if guard > self.objects.len() {
                return None;
            }
        }
        if self.agent.holding.as_deref() == Some(current.id.as_str()) {
            return Some(self.agent.pos);
        }
        Some(current.pos)
    }

    pub fn distance_to(&self, id: &str) -> Option<i32> {
        self.position_of(id).map(|p| p.chebyshev(self.agent.pos))
    }

    /// True if some ancestor reached through an `in` link is a closed sealed container.
    pub fn is_sealed_away(&self, id: &str) -> bool {
        let mut current = match self.objects.get(id) {
            Some(o) => o,
            None => return false,
        };
        let mut guard = 0;
        while let Some(link) = &current.parent {
            let Some(parent) = self.objects.get(&link.id) else { return false };
            if link.relation == Relation::In && parent.sealed_container && !parent.is_open {
                return true;
            }
            current = parent;
            guard += 1;
            if guard > self.objects.len() {
                return false;
            }
        }
        false
    }

    fn in_sector(&self, at: GridPos, orientation: u16) -> bool {
        let dx = at.x - self.agent.pos.x;
        let dy = at.y - self.agent.pos.y;
        if dx == 0 && dy == 0 {
            return true;
        }
        angular_gap(bearing_degrees(dx, dy), orientation as f64) <= self.sensor.fov as f64 / 2.0 + 1e-9
    }

    fn visible_from(&self, id: &str, orientation: u16) -> bool {
        if self.agent.holding.as_deref() == Some(id) {
            return true;
        }
        let Some(at) = self.position_of(id) else { return false };
        at.chebyshev(self.agent.pos) <= self.sensor.view_distance
            && self.in_sector(at, orientation)
            && !self.is_sealed_away(id)
    }

    pub fn is_visible(&self, id: &str) -> bool {
        self.visible_from(id, self.agent.orientation)
    }

    /// Ids inside the current sensor sector and range, not sealed away; the held object always counts.
    pub fn visible_objects(&self) -> BTreeSet<String> {
        self.visible_objects_at(self.agent.orientation)
    }

    pub fn visible_objects_at(&self, orientation: u16) -> BTreeSet<String> {
        self.objects.keys().filter(|id| self.visible_from(id, orientation)).cloned().collect()
    }

    /// Resolves an object reference: exact id first, then class (visible, then nearest, then lowest id).
    pub fn resolve(&self, reference: &str) -> Option<&str> {
        let reference = reference.trim();
        if let Some(obj) = self.objects.get(reference) {
            return Some(obj.id.as_str());
        }
        self.objects
            .values()
            .filter(|o| o.class.eq_ignore_ascii_case(reference) || o.id.eq_ignore_ascii_case(reference))
            .min_by_key(|o| (!self.is_visible(&o.id), self.distance_to(&o.id).unwrap_or(i32::MAX), o.id.clone()))
            .map(|o| o.id.as_str())
    }

    /// Every object a reference could denote: the exact id, or all objects of that class.
    pub fn resolve_all(&self, reference: &str) -> Vec<&ObjectState> {
        let reference = reference.trim();
        if let Some(obj) = self.objects.get(reference) {
            return vec![obj];
        }
        self.objects
            .values()
            .filter(|o| o.class.eq_ignore_ascii_case(reference) || o.id.eq_ignore_ascii_case(reference))
            .collect()
    }

    /// Objects whose direct parent is `id` with the given relation.
    pub fn children_of(&self, id: &str, relation: Option<Relation>) -> Vec<&ObjectState> {
        self.objects
            .values()
            .filter(|o| o.parent.as_ref().is_some_and(|l| l.id == id && relation.is_none_or(|r| l.relation == r)))
            .collect()
    }

    /// True if `ancestor` is reachable from `id` through parent links (or is `id`).
    pub fn is_within(&self, id: &str, ancestor: &str) -> bool {
        let mut current = Some(id);
        let mut guard = 0;
        while let Some(cur) = current {
            if cur == ancestor {
                return true;
            }
            current = self.objects.get(cur).and_then(|o| o.parent.as_ref()).map(|l| l.id.as_str());
            guard += 1;
            if guard > self.objects.len() + 1 {
                return false;
            }
        }
        false
    }

    /// The sink a faucet feeds: its `on` parent if that is a sink, else the nearest sink.
    pub fn paired_sink(&self, faucet_id: &str) -> Option<&str> {
        let faucet = self.objects.get(faucet_id)?;
        if let Some(link) = &faucet.parent {
            if self.objects.get(&link.id).is_some_and(|p| p.class == "sink") {
                return Some(link.id.as_str());
            }
        }
        let at = self.position_of(faucet_id)?;
        self.objects
            .values()
            .filter(|o| o.class == "sink")
            .filter_map(|o| self.position_of(&o.id).map(|p| (p.chebyshev(at), o.id.as_str())))
            .min()
            .map(|(_, id)| id)
    }

    pub(crate) fn object_mut(&mut self, id: &str) -> Option<&mut ObjectState> {
        self.objects.get_mut(id)
    }
}

/// Bearing in degrees, counter-clockwise from +x, in `[0, 360)`.
pub(crate) fn bearing_degrees(dx: i32, dy: i32) -> f64 {
    let deg = (dy as f64).atan2(dx as f64).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}

pub(crate) fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Signed gap `a - b` in `(-180, 180]`; positive means counter-clockwise (to the left).
pub(crate) fn signed_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(text: &str) -> WorldState {
        load_scene(text).unwrap()
    }

    #[test]
    fn mug_ahead_is_visible_and_behind_is_not() {
        let w = world("object mug class=mug pos=3,0 pickupable\nagent pos=0,0 facing=0\n");
        assert!(w.visible_objects().contains("mug"));
        let w = world("object mug class=mug pos=-3,0 pickupable\nagent pos=0,0 facing=0\n");
        assert!(!w.visible_objects().contains("mug"));
    }

    #[test]
    fn range_limits_visibility() {
        let w = world("object mug class=mug pos=9,0\nagent pos=0,0 facing=0\n");
        assert!(!w.is_visible("mug"));
        let w = world("object mug class=mug pos=8,8\nagent pos=0,0 facing=0\n");
        assert!(w.is_visible("mug"), "diagonal at the sector edge counts");
    }

    #[test]
    fn sealed_contents_follow_the_door() {
        let text = "object fridge class=fridge pos=3,0 openable receptacle sealed_container\n\
                    object apple class=apple pos=3,0 pickupable parent=in:fridge\n\
                    agent pos=0,0 facing=0\n";
        let mut w = world(text);
        assert!(w.is_visible("fridge"));
        assert!(!w.is_visible("apple"));
        w.object_mut("fridge").unwrap().is_open = true;
        assert!(w.is_visible("apple"));
    }

    /// Enumerates all four orientations; the union must be every in-range
    /// object that is not sealed inside a closed container.
    #[test]
    fn visibility_union_over_orientations() {
        let text = "object fridge class=fridge pos=0,4 openable receptacle sealed_container\n\
                    object apple class=apple pos=0,4 pickupable parent=in:fridge\n\
                    object counter class=counter pos=3,1 receptacle\n\
                    object mug class=mug pos=3,1 pickupable parent=on:counter\n\
                    object table class=table pos=-4,-4 receptacle\n\
                    object shelf class=shelf pos=0,-12 receptacle\n\
                    agent pos=0,0 facing=0\n";
        let mut w = world(text);
        for open in [false, true] {
            w.object_mut("fridge").unwrap().is_open = open;
            let union: BTreeSet<String> = [0u16, 90, 180, 270].iter().flat_map(|&o| w.visible_objects_at(o)).collect();
            let mut expected: BTreeSet<String> =
                ["counter", "fridge", "mug", "table"].iter().map(|s| s.to_string()).collect();
            if open {
                expected.insert("apple".into());
            }
            assert_eq!(union, expected, "open={open}");
        }
    }

    #[test]
    fn resolve_prefers_id_then_visible_class_member() {
        let text = "object cup_far class=cup pos=6,0\nobject cup_near class=cup pos=-1,0\nagent pos=0,0 facing=0\n";
        let w = world(text);
        assert_eq!(w.resolve("cup_near"), Some("cup_near"));
        // cup_near is closer but behind the agent
        assert_eq!(w.resolve("cup"), Some("cup_far"));
        assert_eq!(w.resolve("unicorn"), None);
    }

    #[test]
    fn sensor_validation() {
        assert!(SensorConfig { rotation_increment: 70, ..Default::default() }.validate().is_err());
        assert_eq!(SensorConfig::default().view_count(), 4);
        assert_eq!(SensorConfig::default().orientations_from(270).collect::<Vec<_>>(), vec![270, 0, 90, 180]);
    }
}
