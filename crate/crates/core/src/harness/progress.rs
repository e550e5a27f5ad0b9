//! Per-task progress at the truncation depth.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::codec;
use crate::network::NetworkState;
use crate::rational::ONE;

use super::w_at;

pub const PROGRESS_LABEL: &str = "diagnostic, not a proof of the limit lemma";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TaskStatus {
    /// Task 0 is never serviced.
    Inert,
    Fired {
        first_stage: u64,
        last_stage: u64,
    },
    Pending {
        reason: String,
    },
    /// Every counter this task holds has run out.
    Discarded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskProgress {
    pub task: u64,
    pub w: u64,
    #[serde(flatten)]
    pub status: TaskStatus,
    pub edges: u64,
    /// Nodes at or past `w` with a delay strictly between 0 and 1 and no edge.
    pub outstanding: u64,
    /// Nodes at or past `w` whose delay is 1.
    pub discarded: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub label: String,
    pub tasks: Vec<TaskProgress>,
}

pub fn task_progress(state: &NetworkState) -> ProgressReport {
    let depth = state.depth as u64;
    let mut tasks = Vec::new();
    for i in 0..=codec::max_task_through(depth) {
        let w = w_at(state, i, state.stage);
        let stages: Vec<u64> = state.edges().iter().filter(|e| e.task == i).map(|e| e.stage_added).collect();
        let (mut outstanding, mut discarded) = (0u64, 0u64);
        let mut level = w;
        while level <= depth.min(state.stage) {
            if codec::task(level) == i {
                for (v, d) in state.delay_row(level as usize).iter().enumerate() {
                    if d.is_one() {
                        discarded += 1;
                    } else if d.is_positive() && *d < ONE {
                        let node = crate::bits::BitString::from_value(level as usize, v as u64);
                        if state.edges().starting_at(&node).next().is_none() {
                            outstanding += 1;
                        }
                    }
                }
            }
            level += 1;
        }
        let status = if i == 0 {
            TaskStatus::Inert
        } else if let (Some(&first), Some(&last)) = (stages.iter().min(), stages.iter().max()) {
            TaskStatus::Fired { first_stage: first, last_stage: last }
        } else if outstanding > 0 {
            TaskStatus::Pending { reason: format!("predicate never satisfied by depth {}", depth) }
        } else if discarded > 0 {
            TaskStatus::Discarded
        } else if w > depth {
            TaskStatus::Pending { reason: format!("w = {} lies beyond depth {}", w, depth) }
        } else {
            TaskStatus::Pending { reason: format!("not activated by stage {}", state.stage) }
        };
        tasks.push(TaskProgress { task: i, w, status, edges: stages.len() as u64, outstanding, discarded });
    }
    ProgressReport { label: PROGRESS_LABEL.into(), tasks }
}
