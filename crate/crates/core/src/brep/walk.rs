use serde::{Deserialize, Serialize};

use super::{BrepError, ChainComplex};

/// One transition of a topological walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Next,
    Parent,
    Mate,
    OwnerFace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entity {
    CoEdge(usize),
    Loop(usize),
    Face(usize),
}

impl Entity {
    pub fn id(self) -> usize {
        match self {
            Entity::CoEdge(i) | Entity::Loop(i) | Entity::Face(i) => i,
        }
    }
}

/// Applies a sequence of transitions starting from a coedge.
///
/// `next` and `mate` act on coedges, `parent` maps a coedge to its loop and
/// `owner_face` maps a loop (or directly a coedge) to its face, so the
/// "face of the mate of the next coedge" walk is `[Next, Mate, OwnerFace]`.
pub fn topo_walk(c: &ChainComplex, start_coedge: usize, path: &[Step]) -> Result<Entity, BrepError> {
    if start_coedge >= c.coedges.len() {
        return Err(BrepError::Walk(format!("start coedge {start_coedge} out of range")));
    }
    let mut cur = Entity::CoEdge(start_coedge);
    for (i, step) in path.iter().enumerate() {
        cur = match (cur, step) {
            (Entity::CoEdge(e), Step::Next) => Entity::CoEdge(c.next[e]),
            (Entity::CoEdge(e), Step::Mate) => Entity::CoEdge(c.mate[e]),
            (Entity::CoEdge(e), Step::Parent) => Entity::Loop(c.parent[e]),
            (Entity::CoEdge(e), Step::OwnerFace) => Entity::Face(c.owner_face(e)),
            (Entity::Loop(l), Step::OwnerFace) => Entity::Face(c.loops[l].face),
            (ent, step) => {
                return Err(BrepError::Walk(format!("step {i} ({step:?}) is not applicable to {ent:?}")));
            }
        };
    }
    Ok(cur)
}
