use chrono::Duration;

use crate::instrument::{Cell, Choice, DropZone, InstanceId, InstrumentConfig, Level, LevelMode, ObjectRole, Point, Scenery};
use crate::scoring::Selection;
use crate::time::Timestamp;

use super::events::{EventBody, GameEvent, SessionId};

/// Builds well-formed event logs: assigns gapless seqs and monotone timestamps.
pub struct LogBuilder<'c> {
    config: &'c InstrumentConfig,
    session_id: SessionId,
    seq: u64,
    at: Timestamp,
    step: Duration,
    events: Vec<GameEvent>,
}

impl<'c> LogBuilder<'c> {
    pub fn new(config: &'c InstrumentConfig, session_id: SessionId, start: Timestamp) -> Self {
        Self {
            config,
            session_id,
            seq: 0,
            at: start,
            step: Duration::milliseconds(750),
            events: Vec::new(),
        }
    }

    /// Continues an existing log after `last_seq`.
    pub fn resume(mut self, last_seq: u64) -> Self {
        self.seq = last_seq;
        self
    }

    pub fn now(&self) -> Timestamp {
        self.at
    }

    pub fn wait(&mut self, millis: i64) -> &mut Self {
        self.at += Duration::milliseconds(millis);
        self
    }

    pub fn push(&mut self, body: EventBody) -> &mut Self {
        self.seq += 1;
        self.at += self.step;
        self.events
            .push(GameEvent::new(self.session_id.clone(), self.seq, self.at, body));
        self
    }

    pub fn session_started(&mut self) -> &mut Self {
        self.push(EventBody::SessionStarted {})
    }

    pub fn level_started(&mut self, level: Level) -> &mut Self {
        self.push(EventBody::LevelStarted { level })
    }

    pub fn level_completed(&mut self, level: Level) -> &mut Self {
        self.push(EventBody::LevelCompleted { level })
    }

    /// Drags an instance from its home into the middle of `zone`
    /// (or to an empty spot for [`DropZone::Other`]).
    pub fn drag(&mut self, level: Level, instance: &InstanceId, zone: DropZone) -> &mut Self {
        let scenery = self.config.scenery(level);
        let to = drop_point(scenery, zone);
        let from = scenery.instance(instance).map_or(to, |i| i.home);
        self.push(EventBody::Drag {
            instance: instance.clone(),
            from,
            to,
            zone,
        })
    }

    pub fn catch(&mut self, instance: &InstanceId) -> &mut Self {
        self.push(EventBody::Catch {
            instance: instance.clone(),
        })
    }

    pub fn miss(&mut self, instance: &InstanceId) -> &mut Self {
        self.push(EventBody::Miss {
            instance: instance.clone(),
        })
    }

    pub fn show(&mut self, cell: Cell) -> &mut Self {
        self.push(EventBody::QuestionShown {
            question: cell.question,
            level: cell.level,
        })
    }

    pub fn submit(&mut self, cell: Cell, chosen: impl IntoIterator<Item = Choice>) -> &mut Self {
        let selection = Selection::submitted(cell, chosen, self.at + self.step);
        self.push(EventBody::QuestionSubmitted { selection })
    }

    /// Plays a level to completion: every apple into its basket (drag levels)
    /// or caught (catch level), with leaves caught too.
    pub fn play_level_cleanly(&mut self, level: Level) -> &mut Self {
        let scenery = self.config.scenery(level);
        let instances: Vec<_> = scenery.instances().collect();
        self.level_started(level);
        for inst in instances {
            match (scenery.mode, inst.role) {
                (LevelMode::Drag, ObjectRole::Apple) => {
                    let zone = inst.basket.unwrap_or(DropZone::Grass);
                    self.drag(level, &inst.id, zone);
                }
                (LevelMode::Catch, ObjectRole::Apple | ObjectRole::Leaf) => {
                    self.catch(&inst.id);
                }
                _ => {}
            }
        }
        self.level_completed(level)
    }

    /// Shows and answers Q1..Q4 of a level with exactly the target sets.
    pub fn answer_level_with_targets(&mut self, level: Level) -> &mut Self {
        for question in crate::instrument::Question::ALL {
            let cell = Cell::new(question, level);
            let targets: Vec<Choice> = self.config.spec(cell).targets().iter().cloned().collect();
            self.show(cell).submit(cell, targets);
        }
        self
    }

    /// A complete session answered perfectly.
    pub fn perfect_session(&mut self) -> &mut Self {
        self.session_started();
        for level in Level::ALL {
            self.play_level_cleanly(level).answer_level_with_targets(level);
        }
        self
    }

    pub fn events(&self) -> &[GameEvent] {
        &self.events
    }

    pub fn finish(self) -> Vec<GameEvent> {
        self.events
    }
}

/// A point inside `zone`, or a point outside every laid-out zone for `Other`.
pub fn drop_point(scenery: &Scenery, zone: DropZone) -> Point {
    if let Some(region) = scenery.region(zone) {
        return region.center();
    }
    (0..100)
        .flat_map(|i| (0..100).map(move |j| Point::new(i as f64 * 10.0, j as f64 * 10.0)))
        .find(|p| scenery.resolve_zone(*p) == DropZone::Other)
        .unwrap_or(Point::new(-1.0, -1.0))
}
