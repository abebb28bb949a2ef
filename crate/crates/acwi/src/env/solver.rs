//! Scripted solvability checker.
//!
//! Breadth-first search over full environment states, expanding with the real
//! [`GridState::step`] dynamics so the check cannot drift from the actual
//! rules. Used by tests to certify that every generated layout is solvable
//! within its step limit, and by debugging tools to print reference
//! solutions.

use std::collections::{HashSet, VecDeque};

use super::{Action, GridState};

/// Actions worth searching over; `Done` is a no-op everywhere.
const SEARCH_ACTIONS: [Action; 6] = [
    Action::Left,
    Action::Right,
    Action::Forward,
    Action::Pickup,
    Action::Drop,
    Action::Toggle,
];

/// Canonical encoding of the solver-relevant parts of a state: agent pose,
/// carried object, and full grid contents. Step counters are excluded — BFS
/// depth already orders states by steps taken.
fn encode(state: &GridState) -> Vec<u8> {
    let mut out = Vec::with_capacity(state.cells.len() * 3 + 8);
    out.push(state.agent_pos.0 as u8);
    out.push(state.agent_pos.1 as u8);
    out.push(state.agent_dir);
    match state.carrying {
        None => out.extend_from_slice(&[255, 255]),
        Some((object, color)) => out.extend_from_slice(&[object.id(), color.id()]),
    }
    for cell in &state.cells {
        out.push(cell.object.id());
        out.push(cell.color.id());
        out.push(cell.door_state.map_or(255, |d| d.id()));
    }
    out
}

/// Find the shortest action sequence that completes the episode, or `None`
/// if no solution exists within `node_limit` expanded states.
///
/// The returned plan, replayed from a clone of `start`, terminates with a
/// positive reward in `plan.len()` steps.
pub fn solve(start: &GridState, node_limit: usize) -> Option<Vec<Action>> {
    assert!(!start.finished, "solve needs an unfinished episode");

    // Search ignores the step limit: plans are validated against
    // `max_steps` by the caller (and are far shorter in practice).
    let mut root = start.clone();
    root.step_count = 0;
    root.max_steps = u32::MAX;

    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    seen.insert(encode(&root));
    // Nodes own their state plus a back-pointer for plan reconstruction.
    let mut nodes: Vec<(Option<(usize, Action)>, GridState)> = vec![(None, root)];
    let mut queue: VecDeque<usize> = VecDeque::from([0]);

    while let Some(idx) = queue.pop_front() {
        if nodes.len() > node_limit {
            return None;
        }
        for action in SEARCH_ACTIONS {
            let mut next = nodes[idx].1.clone();
            let result = next.step(action).expect("unfinished state");
            if result.terminated {
                // Reconstruct the plan back to the root.
                let mut plan = vec![action];
                let mut at = idx;
                while let (Some((parent, a)), _) = &nodes[at] {
                    plan.push(*a);
                    at = *parent;
                }
                plan.reverse();
                return Some(plan);
            }
            if seen.insert(encode(&next)) {
                nodes.push((Some((idx, action)), next));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    None
}
