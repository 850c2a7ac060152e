use serde::{Deserialize, Serialize};

use super::{angular_gap, bearing_degrees, is_container_class, GridPos, ParentLink, Relation, WorldState};
use crate::bt::Attributes;
use crate::fault::{GeneralErrorKind, GeneralErrorReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    NavigateTo,
    ScanRoom,
    Grab,
    Place,
    Open,
    Close,
    ToggleOn,
    ToggleOff,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::NavigateTo,
        ActionKind::ScanRoom,
        ActionKind::Grab,
        ActionKind::Place,
        ActionKind::Open,
        ActionKind::Close,
        ActionKind::ToggleOn,
        ActionKind::ToggleOff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::NavigateTo => "Navigate_To",
            ActionKind::ScanRoom => "ScanRoom",
            ActionKind::Grab => "Grab",
            ActionKind::Place => "Place",
            ActionKind::Open => "Open",
            ActionKind::Close => "Close",
            ActionKind::ToggleOn => "ToggleOn",
            ActionKind::ToggleOff => "ToggleOff",
        }
    }

    /// Case and underscore insensitive: `navigate_to`, `NavigateTo` and `Navigate_To` all match.
    pub fn parse(name: &str) -> Option<ActionKind> {
        let squash = |s: &str| {
            s.chars().filter(|c| *c != '_' && *c != '-' && !c.is_whitespace()).collect::<String>().to_ascii_lowercase()
        };
        let wanted = squash(name);
        ActionKind::ALL.into_iter().find(|k| squash(k.name()) == wanted)
    }

    /// Actions that need the target within reach.
    pub fn is_physical(self) -> bool {
        !matches!(self, ActionKind::NavigateTo | ActionKind::ScanRoom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureReason {
    UnknownAction(String),
    MissingTarget,
    HandOccupied,
    HandEmpty,
    NotPickupable,
    NotOpenable,
    AlreadyOpen,
    AlreadyClosed,
    NotReceptacle,
    ReceptacleClosed,
    InvalidPlacement,
    NotToggleable,
    AlreadyOn,
    AlreadyOff,
    TargetNotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionResult {
    Success,
    Failure(FailureReason),
    Error(GeneralErrorReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceEffect {
    /// Fill every container `in` the paired sink.
    FillPairedSinkContents(&'static str),
    /// Fill every container `in` or `on` the device itself.
    FillContainersOnDevice(&'static str),
}

/// Fires once when a device of `device_class` is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceRule {
    pub device_class: &'static str,
    pub effect: DeviceEffect,
}

pub const DEVICE_RULES: &[DeviceRule] = &[
    DeviceRule { device_class: "faucet", effect: DeviceEffect::FillPairedSinkContents("water") },
    DeviceRule { device_class: "coffee_machine", effect: DeviceEffect::FillContainersOnDevice("coffee") },
];

impl WorldState {
    /// Runs one action. On anything but `Success` the world is left untouched.
    ///
    /// Checks run in a fixed order: target exists, target visible, target in
    /// reach (physical actions only), then action-specific failures.
    pub fn execute_action(&mut self, name: &str, attributes: &Attributes) -> ActionResult {
        let Some(kind) = ActionKind::parse(name) else {
            return ActionResult::Failure(FailureReason::UnknownAction(name.to_string()));
        };
        let reference = match kind {
            ActionKind::Place => attributes.get("receptacle").or_else(|| attributes.target()),
            _ => attributes.target(),
        }
        .map(str::trim)
        .filter(|s| !s.is_empty());

        let target = match (kind, reference) {
            (ActionKind::ScanRoom, None) => return self.scan_for(None),
            (_, None) => return ActionResult::Failure(FailureReason::MissingTarget),
            (_, Some(reference)) => match self.resolve(reference) {
                Some(id) => id.to_string(),
                None => {
                    return ActionResult::Error(GeneralErrorReport::new(
                        GeneralErrorKind::DoesNotExist,
                        kind.name(),
                        reference,
                    ))
                }
            },
        };

        if kind == ActionKind::ScanRoom {
            return self.scan_for(Some(&target));
        }
        if !self.is_visible(&target) {
            return ActionResult::Error(GeneralErrorReport::new(GeneralErrorKind::NotVisible, kind.name(), &target));
        }
        if kind.is_physical() && self.distance_to(&target).unwrap_or(i32::MAX) > self.sensor.reach_distance {
            return ActionResult::Error(GeneralErrorReport::new(GeneralErrorKind::NotClose, kind.name(), &target));
        }

        let outcome = match kind {
            ActionKind::NavigateTo => self.navigate(&target),
            ActionKind::Grab => self.grab(&target),
            ActionKind::Place => self.place(&target),
            ActionKind::Open => self.set_open(&target, true),
            ActionKind::Close => self.set_open(&target, false),
            ActionKind::ToggleOn => self.set_power(&target, true),
            ActionKind::ToggleOff => self.set_power(&target, false),
            ActionKind::ScanRoom => unreachable!(),
        };
        match outcome {
            Ok(()) => ActionResult::Success,
            Err(reason) => ActionResult::Failure(reason),
        }
    }

    fn scan_for(&mut self, target: Option<&str>) -> ActionResult {
        let Some(target) = target else {
            // a full turn ends where it started
            return ActionResult::Success;
        };
        let start = self.agent.orientation;
        let found = self.sensor.orientations_from(start).find(|&o| self.visible_from(target, o));
        match found {
            Some(orientation) => {
                self.agent.orientation = orientation;
                ActionResult::Success
            }
            None => ActionResult::Failure(FailureReason::TargetNotFound),
        }
    }

    fn navigate(&mut self, target: &str) -> Result<(), FailureReason> {
        let goal = self.position_of(target).expect("resolved target has a position");
        let reach = self.sensor.reach_distance;
        if goal.chebyshev(self.agent.pos) > reach {
            self.agent.pos = approach_cell(goal, self.agent.pos, reach);
        }
        let dx = goal.x - self.agent.pos.x;
        let dy = goal.y - self.agent.pos.y;
        if dx != 0 || dy != 0 {
            let bearing = bearing_degrees(dx, dy);
            let best = self
                .sensor
                .orientations_from(0)
                .min_by(|a, b| {
                    angular_gap(bearing, *a as f64)
                        .partial_cmp(&angular_gap(bearing, *b as f64))
                        .unwrap()
                        .then(a.cmp(b))
                })
                .unwrap_or(0);
            self.agent.orientation = best;
        }
        Ok(())
    }

    fn grab(&mut self, target: &str) -> Result<(), FailureReason> {
        if self.agent.holding.is_some() {
            return Err(FailureReason::HandOccupied);
        }
        if !self.objects[target].pickupable {
            return Err(FailureReason::NotPickupable);
        }
        let obj = self.object_mut(target).unwrap();
        obj.parent = None;
        self.agent.holding = Some(target.to_string());
        Ok(())
    }

    fn place(&mut self, receptacle: &str) -> Result<(), FailureReason> {
        let Some(held) = self.agent.holding.clone() else {
            return Err(FailureReason::HandEmpty);
        };
        let dest = &self.objects[receptacle];
        if !dest.receptacle {
            return Err(FailureReason::NotReceptacle);
        }
        if dest.openable && !dest.is_open {
            return Err(FailureReason::ReceptacleClosed);
        }
        if self.is_within(receptacle, &held) {
            return Err(FailureReason::InvalidPlacement);
        }
        let relation = Relation::for_receptacle_class(&dest.class);
        let at = self.position_of(receptacle).unwrap_or(self.agent.pos);
        let obj = self.object_mut(&held).unwrap();
        obj.parent = Some(ParentLink { relation, id: receptacle.to_string() });
        obj.pos = at;
        self.agent.holding = None;
        Ok(())
    }

    fn set_open(&mut self, target: &str, open: bool) -> Result<(), FailureReason> {
        let obj = self.object_mut(target).unwrap();
        if !obj.openable {
            return Err(FailureReason::NotOpenable);
        }
        match (obj.is_open, open) {
            (true, true) => Err(FailureReason::AlreadyOpen),
            (false, false) => Err(FailureReason::AlreadyClosed),
            _ => {
                obj.is_open = open;
                Ok(())
            }
        }
    }

    fn set_power(&mut self, target: &str, on: bool) -> Result<(), FailureReason> {
        let obj = self.object_mut(target).unwrap();
        if !obj.toggleable {
            return Err(FailureReason::NotToggleable);
        }
        match (obj.is_on, on) {
            (true, true) => Err(FailureReason::AlreadyOn),
            (false, false) => Err(FailureReason::AlreadyOff),
            _ => {
                obj.is_on = on;
                if on {
                    self.fire_device_rules(target);
                }
                Ok(())
            }
        }
    }

    fn fire_device_rules(&mut self, device: &str) {
        let class = self.objects[device].class.clone();
        for rule in DEVICE_RULES.iter().filter(|r| r.device_class == class) {
            let (substance, filled): (&str, Vec<String>) = match rule.effect {
                DeviceEffect::FillPairedSinkContents(substance) => {
                    let ids = match self.paired_sink(device) {
                        Some(sink) => self.children_of(sink, Some(Relation::In)).iter().map(|o| o.id.clone()).collect(),
                        None => Vec::new(),
                    };
                    (substance, ids)
                }
                DeviceEffect::FillContainersOnDevice(substance) => {
                    (substance, self.children_of(device, None).iter().map(|o| o.id.clone()).collect())
                }
            };
            for id in filled {
                let obj = self.object_mut(&id).unwrap();
                if is_container_class(&obj.class) {
                    obj.fill = Some(substance.to_string());
                }
            }
        }
    }
}

/// Cell at distance `reach` from `goal` closest to `from` (Chebyshev, then
/// squared Euclidean, then coordinates).
fn approach_cell(goal: GridPos, from: GridPos, reach: i32) -> GridPos {
    if reach == 0 {
        return goal;
    }
    let mut best: Option<(i32, i64, GridPos)> = None;
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            if dx.abs().max(dy.abs()) != reach {
                continue;
            }
            let cell = GridPos::new(goal.x + dx, goal.y + dy);
            let ex = (cell.x - from.x) as i64;
            let ey = (cell.y - from.y) as i64;
            let key = (cell.chebyshev(from), ex * ex + ey * ey, cell);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    best.map(|b| b.2).unwrap_or(goal)
}
