use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{InstrumentError, ItemId, Level};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Where a dragged object was released, as reported by the client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropZone {
    BasketRed,
    BasketYellow,
    Grass,
    Tree,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneRegion {
    pub zone: DropZone,
    pub min: Point,
    pub max: Point,
}

impl ZoneRegion {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
        )
    }
}

/// How objects of a group behave in the scenery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectRole {
    Apple,
    Leaf,
    Basket,
    Decor,
}

/// Drag levels place apples by hand; the catch level drops apples and leaves
/// onto a movable basket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelMode {
    Drag,
    Catch,
}

/// A homogeneous group of scenery objects; one instance per home position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectGroup {
    pub item: ItemId,
    pub role: ObjectRole,
    #[serde(default)]
    pub draggable: bool,
    /// Basket zone that accepts this apple colour.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basket: Option<DropZone>,
    pub homes: Vec<Point>,
}

/// Object instance id of the form `<item>#<n>`, numbered from 1 within its group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InstanceId {
    item: ItemId,
    index: u32,
}

impl InstanceId {
    pub fn new(item: ItemId, index: u32) -> Self {
        Self { item, index }
    }

    pub fn item(&self) -> &ItemId {
        &self.item
    }

    pub fn index(&self) -> u32 {
        self.index
    }
}

impl FromStr for InstanceId {
    type Err = InstrumentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InstrumentError::InvalidInstance(s.to_owned());
        let (item, index) = s.split_once('#').ok_or_else(bad)?;
        let index: u32 = index.parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(Self::new(item.parse().map_err(|_| bad())?, index))
    }
}

impl TryFrom<String> for InstanceId {
    type Error = InstrumentError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<InstanceId> for String {
    fn from(value: InstanceId) -> Self {
        value.to_string()
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.item, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: InstanceId,
    pub role: ObjectRole,
    pub draggable: bool,
    pub basket: Option<DropZone>,
    pub home: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenery {
    pub level: Level,
    pub mode: LevelMode,
    /// Checked in declaration order; the first region containing a point wins.
    pub zones: Vec<ZoneRegion>,
    pub objects: Vec<ObjectGroup>,
}

impl Scenery {
    pub fn instances(&self) -> impl Iterator<Item = Instance> + '_ {
        self.objects.iter().flat_map(|group| {
            group.homes.iter().enumerate().map(move |(i, home)| Instance {
                id: InstanceId::new(group.item.clone(), i as u32 + 1),
                role: group.role,
                draggable: group.draggable,
                basket: group.basket,
                home: *home,
            })
        })
    }

    pub fn instance(&self, id: &InstanceId) -> Option<Instance> {
        let group = self.objects.iter().find(|g| &g.item == id.item())?;
        let home = group.homes.get(id.index() as usize - 1)?;
        Some(Instance {
            id: id.clone(),
            role: group.role,
            draggable: group.draggable,
            basket: group.basket,
            home: *home,
        })
    }

    pub fn region(&self, zone: DropZone) -> Option<&ZoneRegion> {
        self.zones.iter().find(|z| z.zone == zone)
    }

    /// The zone a release point falls into.
    pub fn resolve_zone(&self, p: Point) -> DropZone {
        self.zones
            .iter()
            .find(|z| z.contains(p))
            .map_or(DropZone::Other, |z| z.zone)
    }

    pub fn apple_count(&self) -> usize {
        self.instances().filter(|i| i.role == ObjectRole::Apple).count()
    }

    pub(crate) fn validate(&self, registry: &std::collections::BTreeSet<ItemId>) -> Result<(), InstrumentError> {
        let level = self.level;
        let mut seen = std::collections::BTreeSet::new();
        for group in &self.objects {
            if !registry.contains(&group.item) {
                return Err(InstrumentError::UnknownItem {
                    item: group.item.to_string(),
                    context: format!("scenery {level}"),
                });
            }
            if !seen.insert(&group.item) {
                return Err(InstrumentError::Scenery {
                    level,
                    reason: format!("object group {} declared twice", group.item),
                });
            }
            if group.homes.is_empty() {
                return Err(InstrumentError::Scenery {
                    level,
                    reason: format!("object group {} has no instances", group.item),
                });
            }
            if group.role == ObjectRole::Apple && self.mode == LevelMode::Drag {
                let basket = group.basket.ok_or_else(|| InstrumentError::Scenery {
                    level,
                    reason: format!("apple group {} names no basket", group.item),
                })?;
                if self.region(basket).is_none() {
                    return Err(InstrumentError::Scenery {
                        level,
                        reason: format!("basket zone {basket:?} for {} is not laid out", group.item),
                    });
                }
            }
        }
        if self.apple_count() == 0 {
            return Err(InstrumentError::Scenery {
                level,
                reason: "no apples".into(),
            });
        }
        for region in &self.zones {
            if region.zone == DropZone::Other {
                return Err(InstrumentError::Scenery {
                    level,
                    reason: "`other` is the fallback zone and cannot be laid out".into(),
                });
            }
            if region.min.x > region.max.x || region.min.y > region.max.y {
                return Err(InstrumentError::Scenery {
                    level,
                    reason: format!("zone {:?} has inverted bounds", region.zone),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_ids_round_trip_through_text() {
        let id: InstanceId = "apple_red#2".parse().unwrap();
        assert_eq!(id.item().as_str(), "apple_red");
        assert_eq!(id.index(), 2);
        assert_eq!(id.to_string(), "apple_red#2");
        assert!("apple_red#0".parse::<InstanceId>().is_err());
        assert!("apple_red".parse::<InstanceId>().is_err());
    }
}
