use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instrument::{DropZone, InstanceId, ItemId, Level, LevelMode, ObjectRole, Scenery};

use super::events::EventBody;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceStatus {
    OnTree,
    InBasket,
    Spoiled,
    Falling,
    Caught,
    /// A leaf that reached the grass at the catch level.
    Grounded,
}

impl InstanceStatus {
    fn is_resolved(self) -> bool {
        !matches!(self, InstanceStatus::OnTree | InstanceStatus::Falling)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    Placed { instance: InstanceId },
    Spoiled { instance: InstanceId },
    ReturnedHome { instance: InstanceId },
    Rejected { instance: InstanceId, zone: DropZone },
    Caught { instance: InstanceId },
    Landed { instance: InstanceId },
    BasketMoved { instance: InstanceId },
    ScoreChanged { score: u32 },
    LevelResolved { level: Level },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("unknown instance {0} in this scenery")]
    UnknownInstance(InstanceId),
    #[error("immobile instance {0}")]
    ImmobileInstance(InstanceId),
    #[error("{instance} was already resolved")]
    AlreadyResolved { instance: InstanceId },
    #[error("reported zone {reported:?} but drop point lies in {resolved:?}")]
    ZoneMismatch { reported: DropZone, resolved: DropZone },
    #[error("{0} is already completed")]
    LevelAlreadyCompleted(Level),
    #[error("{0} events are only legal at the catch level")]
    CatchOutsideCatchLevel(&'static str),
    #[error("{0} cannot be dragged at the catch level")]
    DragAtCatchLevel(InstanceId),
    #[error("{0} is not a gameplay event")]
    NotGameplay(&'static str),
}

/// Live state of one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub level: Level,
    /// Status of every apple and leaf instance.
    pub instances: BTreeMap<InstanceId, InstanceStatus>,
    pub score: u32,
    pub completed: bool,
}

/// Fresh state for a level: drag-level apples hang on the tree, catch-level
/// apples and leaves are falling; the score starts at zero.
pub fn init_level(scenery: &Scenery) -> GameState {
    let home = match scenery.mode {
        LevelMode::Drag => InstanceStatus::OnTree,
        LevelMode::Catch => InstanceStatus::Falling,
    };
    let instances = scenery
        .instances()
        .filter(|i| matches!(i.role, ObjectRole::Apple | ObjectRole::Leaf))
        .map(|i| (i.id, home))
        .collect();
    GameState {
        level: scenery.level,
        instances,
        score: 0,
        completed: false,
    }
}

impl GameState {
    pub fn count(&self, status: InstanceStatus) -> usize {
        self.instances.values().filter(|s| **s == status).count()
    }

    /// Instance count per item across all statuses.
    pub fn class_counts(&self) -> BTreeMap<ItemId, usize> {
        let mut out = BTreeMap::new();
        for id in self.instances.keys() {
            *out.entry(id.item().clone()).or_insert(0) += 1;
        }
        out
    }

    /// Every tracked object is accounted for, and the score equals the number
    /// of apples in the basket (drag levels) or caught apples (catch level).
    pub fn invariants_hold(&self, scenery: &Scenery) -> bool {
        let mut expected = BTreeMap::new();
        for inst in scenery.instances() {
            if matches!(inst.role, ObjectRole::Apple | ObjectRole::Leaf) {
                *expected.entry(inst.id.item().clone()).or_insert(0usize) += 1;
            }
        }
        if self.class_counts() != expected {
            return false;
        }
        let scored = match scenery.mode {
            LevelMode::Drag => self.count(InstanceStatus::InBasket),
            LevelMode::Catch => self
                .instances
                .iter()
                .filter(|(id, s)| {
                    **s == InstanceStatus::Caught
                        && scenery.instance(id).is_some_and(|i| i.role == ObjectRole::Apple)
                })
                .count(),
        };
        scored == self.score as usize
    }

    /// Drag levels end once every apple is in a basket or spoiled; the catch
    /// level ends once every falling apple and leaf has been caught or landed.
    fn resolved(&self, scenery: &Scenery) -> bool {
        self.instances.iter().all(|(id, status)| {
            status.is_resolved()
                || (scenery.mode == LevelMode::Drag
                    && scenery.instance(id).is_some_and(|i| i.role != ObjectRole::Apple))
        })
    }
}

/// Applies one gameplay event (drag, catch or miss) to a level.
pub fn apply_event(
    scenery: &Scenery,
    state: &GameState,
    body: &EventBody,
) -> Result<(GameState, Vec<Effect>), RuleError> {
    if state.completed {
        return Err(RuleError::LevelAlreadyCompleted(state.level));
    }
    let mut next = state.clone();
    let mut effects = Vec::new();
    match (scenery.mode, body) {
        (LevelMode::Drag, EventBody::Drag { instance, to, zone, .. }) => {
            let inst = scenery
                .instance(instance)
                .ok_or_else(|| RuleError::UnknownInstance(instance.clone()))?;
            let status = next.instances.get(instance).copied();
            if !inst.draggable || status != Some(InstanceStatus::OnTree) {
                return Err(RuleError::ImmobileInstance(instance.clone()));
            }
            let resolved = scenery.resolve_zone(*to);
            if resolved != *zone {
                return Err(RuleError::ZoneMismatch {
                    reported: *zone,
                    resolved,
                });
            }
            let id = instance.clone();
            match zone {
                DropZone::BasketRed | DropZone::BasketYellow if inst.basket == Some(*zone) => {
                    next.instances.insert(id.clone(), InstanceStatus::InBasket);
                    next.score += 1;
                    effects.push(Effect::Placed { instance: id });
                    effects.push(Effect::ScoreChanged { score: next.score });
                }
                DropZone::BasketRed | DropZone::BasketYellow => {
                    effects.push(Effect::Rejected {
                        instance: id,
                        zone: *zone,
                    });
                }
                DropZone::Grass => {
                    next.instances.insert(id.clone(), InstanceStatus::Spoiled);
                    effects.push(Effect::Spoiled { instance: id });
                }
                DropZone::Tree | DropZone::Other => {
                    effects.push(Effect::ReturnedHome { instance: id });
                }
            }
        }
        (LevelMode::Catch, EventBody::Drag { instance, .. }) => {
            let inst = scenery
                .instance(instance)
                .ok_or_else(|| RuleError::UnknownInstance(instance.clone()))?;
            if inst.role != ObjectRole::Basket || !inst.draggable {
                return Err(RuleError::DragAtCatchLevel(instance.clone()));
            }
            effects.push(Effect::BasketMoved {
                instance: instance.clone(),
            });
        }
        (LevelMode::Catch, EventBody::Catch { instance } | EventBody::Miss { instance }) => {
            let inst = scenery
                .instance(instance)
                .ok_or_else(|| RuleError::UnknownInstance(instance.clone()))?;
            match next.instances.get(instance) {
                Some(InstanceStatus::Falling) => {}
                Some(_) => {
                    return Err(RuleError::AlreadyResolved {
                        instance: instance.clone(),
                    })
                }
                None => return Err(RuleError::UnknownInstance(instance.clone())),
            }
            let id = instance.clone();
            let caught = matches!(body, EventBody::Catch { .. });
            match (inst.role, caught) {
                (ObjectRole::Apple, true) => {
                    next.instances.insert(id.clone(), InstanceStatus::Caught);
                    next.score += 1;
                    effects.push(Effect::Caught { instance: id });
                    effects.push(Effect::ScoreChanged { score: next.score });
                }
                (ObjectRole::Apple, false) => {
                    next.instances.insert(id.clone(), InstanceStatus::Spoiled);
                    effects.push(Effect::Spoiled { instance: id });
                }
                (_, true) => {
                    next.instances.insert(id.clone(), InstanceStatus::Caught);
                    effects.push(Effect::Caught { instance: id });
                }
                (_, false) => {
                    next.instances.insert(id.clone(), InstanceStatus::Grounded);
                    effects.push(Effect::Landed { instance: id });
                }
            }
        }
        (LevelMode::Drag, EventBody::Catch { .. }) => {
            return Err(RuleError::CatchOutsideCatchLevel("catch"))
        }
        (LevelMode::Drag, EventBody::Miss { .. }) => {
            return Err(RuleError::CatchOutsideCatchLevel("miss"))
        }
        (_, other) => return Err(RuleError::NotGameplay(other.kind_name())),
    }

    if next.resolved(scenery) {
        next.completed = true;
        effects.push(Effect::LevelResolved { level: next.level });
    }
    Ok((next, effects))
}
