//! Line-oriented scene files.
//!
//! ```text
//! # comment
//! object <id> class=<c> [pos=<x>,<y>] [flag ...] [fill=<s>] [parent=in|on:<id>]
//! agent pos=<x>,<y> facing=<deg>
//! ```
//!
//! Flags: `pickupable openable is_open toggleable is_on receptacle sealed_container`.
//! `pos` may be omitted for nested objects, which then sit at their parent's cell.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{is_container_class, AgentState, GridPos, ObjectState, ParentLink, Relation, SensorConfig, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("scene line {line}: {message}")]
pub struct SceneError {
    /// 1-based; 0 for whole-scene problems.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> SceneError {
    SceneError { line, message: message.into() }
}

pub fn load_scene(text: &str) -> Result<WorldState, SceneError> {
    load_scene_with(text, SensorConfig::default())
}

pub fn load_scene_with(text: &str, sensor: SensorConfig) -> Result<WorldState, SceneError> {
    sensor.validate().map_err(|e| err(0, e.to_string()))?;

    let mut objects: BTreeMap<String, ObjectState> = BTreeMap::new();
    let mut declared_pos: BTreeMap<String, bool> = BTreeMap::new();
    let mut lines_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut agent: Option<AgentState> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("object") => {
                let id = tokens.next().ok_or_else(|| err(line_no, "object record without an id"))?;
                if id.contains('=') {
                    return Err(err(line_no, format!("expected an object id, found `{id}`")));
                }
                if objects.contains_key(id) {
                    return Err(err(line_no, format!("duplicate object id `{id}`")));
                }
                let (obj, has_pos) = parse_object(id, tokens, line_no)?;
                declared_pos.insert(id.to_string(), has_pos);
                lines_of.insert(id.to_string(), line_no);
                objects.insert(id.to_string(), obj);
            }
            Some("agent") => {
                if agent.is_some() {
                    return Err(err(line_no, "more than one agent record"));
                }
                agent = Some(parse_agent(tokens, line_no, &sensor)?);
            }
            Some(other) => return Err(err(line_no, format!("unknown record `{other}`"))),
            None => unreachable!(),
        }
    }

    let agent = agent.ok_or_else(|| err(0, "missing agent record"))?;

    for obj in objects.values() {
        let line = lines_of[&obj.id];
        if let Some(link) = &obj.parent {
            let parent = objects
                .get(&link.id)
                .ok_or_else(|| err(line, format!("`{}` has unknown parent `{}`", obj.id, link.id)))?;
            if link.relation == Relation::In && !parent.receptacle {
                return Err(err(line, format!("`{}` is in `{}`, which is not a receptacle", obj.id, parent.id)));
            }
        } else if !declared_pos[&obj.id] {
            return Err(err(line, format!("`{}` needs pos= unless it has a parent", obj.id)));
        }
    }

    check_acyclic(&objects, &lines_of)?;

    // nested objects inherit their root's cell; an explicit pos must agree with it
    let roots: Vec<(String, GridPos)> = objects
        .keys()
        .map(|id| {
            let mut cur = &objects[id];
            while let Some(link) = &cur.parent {
                cur = &objects[&link.id];
            }
            (id.clone(), cur.pos)
        })
        .collect();
    for (id, root_pos) in roots {
        let obj = objects.get_mut(&id).unwrap();
        if obj.parent.is_some() {
            if declared_pos[&id] && obj.pos != root_pos {
                return Err(err(
                    lines_of[&id],
                    format!("`{id}` declares pos={} but its container is at {}", obj.pos, root_pos),
                ));
            }
            obj.pos = root_pos;
        }
    }

    Ok(WorldState { objects, agent, sensor })
}

fn parse_pos(value: &str, line: usize) -> Result<GridPos, SceneError> {
    let (x, y) = value.split_once(',').ok_or_else(|| err(line, format!("bad pos `{value}`, expected x,y")))?;
    let parse = |s: &str| s.trim().parse::<i32>().map_err(|_| err(line, format!("bad coordinate `{s}`")));
    Ok(GridPos::new(parse(x)?, parse(y)?))
}

fn parse_object<'a>(
    id: &str,
    tokens: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<(ObjectState, bool), SceneError> {
    let mut obj = ObjectState::new(id, "", GridPos::new(0, 0));
    let mut has_pos = false;
    for token in tokens {
        match token.split_once('=') {
            Some(("class", v)) => obj.class = v.to_string(),
            Some(("pos", v)) => {
                obj.pos = parse_pos(v, line)?;
                has_pos = true;
            }
            Some(("fill", v)) => obj.fill = Some(v.to_string()),
            Some(("parent", v)) => {
                let (rel, pid) = v
                    .split_once(':')
                    .ok_or_else(|| err(line, format!("bad parent `{v}`, expected in:<id> or on:<id>")))?;
                let relation = match rel {
                    "in" => Relation::In,
                    "on" => Relation::On,
                    other => return Err(err(line, format!("unknown relation `{other}`"))),
                };
                if pid.is_empty() || pid == id {
                    return Err(err(line, format!("bad parent id `{pid}`")));
                }
                obj.parent = Some(ParentLink { relation, id: pid.to_string() });
            }
            Some((key, _)) => return Err(err(line, format!("unknown field `{key}`"))),
            None => match token {
                "pickupable" => obj.pickupable = true,
                "openable" => obj.openable = true,
                "is_open" => obj.is_open = true,
                "toggleable" => obj.toggleable = true,
                "is_on" => obj.is_on = true,
                "receptacle" => obj.receptacle = true,
                "sealed_container" => obj.sealed_container = true,
                other => return Err(err(line, format!("unknown flag `{other}`"))),
            },
        }
    }
    if obj.class.is_empty() {
        return Err(err(line, format!("object `{id}` has no class=")));
    }
    if obj.is_open && !obj.openable {
        return Err(err(line, format!("`{id}` is_open but not openable")));
    }
    if obj.is_on && !obj.toggleable {
        return Err(err(line, format!("`{id}` is_on but not toggleable")));
    }
    if obj.fill.is_some() && !is_container_class(&obj.class) {
        return Err(err(line, format!("`{id}` has fill= but class `{}` is not a container", obj.class)));
    }
    Ok((obj, has_pos))
}

fn parse_agent<'a>(
    tokens: impl Iterator<Item = &'a str>,
    line: usize,
    sensor: &SensorConfig,
) -> Result<AgentState, SceneError> {
    let mut pos = None;
    let mut facing = None;
    for token in tokens {
        match token.split_once('=') {
            Some(("pos", v)) => pos = Some(parse_pos(v, line)?),
            Some(("facing", v)) => {
                let deg: u16 = v.parse().map_err(|_| err(line, format!("bad facing `{v}`")))?;
                if deg >= 360 || !deg.is_multiple_of(sensor.rotation_increment) {
                    return Err(err(
                        line,
                        format!("facing {deg} is not a multiple of {} below 360", sensor.rotation_increment),
                    ));
                }
                facing = Some(deg);
            }
            _ => return Err(err(line, format!("unknown agent field `{token}`"))),
        }
    }
    Ok(AgentState {
        pos: pos.ok_or_else(|| err(line, "agent needs pos="))?,
        orientation: facing.ok_or_else(|| err(line, "agent needs facing="))?,
        holding: None,
    })
}

fn check_acyclic(
    objects: &BTreeMap<String, ObjectState>,
    lines_of: &BTreeMap<String, usize>,
) -> Result<(), SceneError> {
    for start in objects.keys() {
        let mut cur = start.as_str();
        for _ in 0..=objects.len() {
            match objects[cur].parent.as_ref() {
                Some(link) => cur = link.id.as_str(),
                None => break,
            }
            if cur == start {
                return Err(err(lines_of[start], format!("containment cycle through `{start}`")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const KITCHEN: &str = "\
# small kitchen
object table class=table pos=-3,0 receptacle
object fridge class=fridge pos=0,4 openable receptacle sealed_container
object apple class=apple pos=3,0 pickupable
agent pos=0,0 facing=0
";

    #[test]
    fn loads_fixture_kitchen() {
        let w = load_scene(KITCHEN).unwrap();
        assert_eq!(w.objects().count(), 3);
        assert_eq!(w.agent().pos, GridPos::new(0, 0));
        assert!(!w.object("fridge").unwrap().is_open);
    }

    #[test]
    fn in_parent_needs_receptacle() {
        let text = "object fridge class=fridge pos=0,4 openable\nobject apple class=apple parent=in:fridge\nagent pos=0,0 facing=0\n";
        let e = load_scene(text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("not a receptacle"));
    }

    #[test]
    fn object_in_closed_fridge_loads_hidden() {
        let text = "object fridge class=fridge pos=3,0 openable receptacle sealed_container\nobject apple class=apple parent=in:fridge pickupable\nagent pos=0,0 facing=0\n";
        let w = load_scene(text).unwrap();
        assert_eq!(w.position_of("apple"), Some(GridPos::new(3, 0)));
        assert!(!w.visible_objects().contains("apple"));
    }

    #[test]
    fn rejects_invalid_scenes() {
        let cases = [
            ("object a class=x pos=0,0\nobject a class=y pos=1,1\nagent pos=0,0 facing=0", 2, "duplicate"),
            ("object a class=x pos=0,0 is_open\nagent pos=0,0 facing=0", 1, "not openable"),
            ("object a class=x pos=0,0 is_on\nagent pos=0,0 facing=0", 1, "not toggleable"),
            ("object a class=apple pos=0,0 fill=water\nagent pos=0,0 facing=0", 1, "not a container"),
            ("object a class=x pos=0,0 sparkly\nagent pos=0,0 facing=0", 1, "unknown flag"),
            ("object a class=x pos=0,0", 0, "missing agent"),
            ("object a class=x pos=0,0\nagent pos=0,0 facing=45", 2, "multiple"),
            ("object a class=x\nagent pos=0,0 facing=0", 1, "needs pos"),
            ("object a class=x parent=on:b receptacle\nobject b class=y parent=on:a receptacle\nagent pos=0,0 facing=0", 1, "cycle"),
            ("object a class=x parent=on:zz\nagent pos=0,0 facing=0", 1, "unknown parent"),
            ("object t class=table pos=0,0 receptacle\nobject a class=x pos=5,5 parent=on:t\nagent pos=0,0 facing=0", 2, "container is at"),
            ("thing a\nagent pos=0,0 facing=0", 1, "unknown record"),
        ];
        for (text, line, needle) in cases {
            let e = load_scene(text).unwrap_err();
            assert_eq!(e.line, line, "{text}: {e}");
            assert!(e.message.contains(needle), "{text}: {e}");
        }
    }
}
