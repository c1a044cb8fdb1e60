//! Back-substitution of advanced leaves until every leaf is retarded.
//!
//! A leaf with shift `>= 0` is split by attaching its class's branch
//! expansion. When the expansion carries a new m-node, each new advanced
//! leaf under it is deleted if some p-node on its root path (excluding the
//! leaf) has the same class mod `3^k` and a shift `<=` the leaf's. The
//! comparison is non-strict: equal shifts must delete, otherwise the
//! elimination of k = 3, 4 does not terminate at the known sizes.
//!
//! The final tree does not depend on the order in which leaves are split;
//! [`SplitOrder`] exists so that this can be checked.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::collatz::{classes, class_count};
use crate::error::{Error, Result};
use crate::shift::ExponentShift;
use crate::tree::{step_of, IneqTree, NodeId, NodeKind, System};

/// Default cap on the number of splits for one tree.
pub const DEFAULT_SPLIT_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitOrder {
    /// All advanced leaves at one depth before any deeper one.
    #[default]
    Bfs,
    /// Most recently created advanced leaf first.
    Dfs,
}

impl FromStr for SplitOrder {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bfs" => Ok(SplitOrder::Bfs),
            "dfs" => Ok(SplitOrder::Dfs),
            other => Err(format!("unknown order '{other}' (expected bfs or dfs)")),
        }
    }
}

impl fmt::Display for SplitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitOrder::Bfs => "bfs",
            SplitOrder::Dfs => "dfs",
        })
    }
}

/// Result of splitting one leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub p_child: NodeId,
    pub m_node: Option<NodeId>,
}

/// Splits an advanced leaf in place. No deletion is applied.
pub fn split_leaf(tree: &mut IneqTree, leaf: NodeId) -> Result<Split> {
    if leaf >= tree.arena_len() {
        return Err(Error::NotSplittable(leaf, "no such node"));
    }
    let node = tree.node(leaf);
    if node.kind != NodeKind::P {
        return Err(Error::NotSplittable(leaf, "not a p-node"));
    }
    if !node.children.is_empty() {
        return Err(Error::NotSplittable(leaf, "not a leaf"));
    }
    if !node.shift.is_advanced() {
        return Err(Error::NotSplittable(leaf, "retarded term"));
    }
    let m_node = tree.expand(leaf)?;
    let p_child = tree.node(leaf).children[0];
    Ok(Split { p_child, m_node })
}

/// Applies the deletion rule to the children of a freshly created m-node and
/// returns the ids of the deleted leaves.
pub fn apply_deletion(tree: &mut IneqTree, m_node: NodeId) -> Result<Vec<NodeId>> {
    let node = tree.node(m_node);
    if node.kind != NodeKind::M {
        return Err(Error::MalformedTree(format!("node {m_node} is not an m-node")));
    }
    let mut doomed = Vec::new();
    for &child in &node.children {
        let leaf = tree.node(child);
        if !leaf.shift.is_advanced() {
            continue;
        }
        let dominated = tree.ancestors(child).any(|a| {
            let anc = tree.node(a);
            anc.kind == NodeKind::P && anc.class == leaf.class && anc.shift <= leaf.shift
        });
        if dominated {
            doomed.push(child);
        }
    }
    if doomed.len() == node.children.len() {
        return Err(Error::EmptyMinimum(m_node));
    }
    tree.detach_children(m_node, &doomed);
    Ok(doomed)
}

/// Splits advanced leaves until none remain, with the default split cap.
pub fn eliminate(tree: &IneqTree, order: SplitOrder) -> Result<IneqTree> {
    eliminate_with_cap(tree, order, DEFAULT_SPLIT_CAP)
}

pub fn eliminate_with_cap(tree: &IneqTree, order: SplitOrder, cap: u64) -> Result<IneqTree> {
    let mut tree = tree.clone();
    // the base expansion is itself a split, so its minima are subject to deletion
    for m in tree.m_nodes() {
        let fresh = tree
            .node(m)
            .children
            .iter()
            .all(|&c| tree.node(c).children.is_empty());
        if fresh {
            apply_deletion(&mut tree, m)?;
        }
    }
    let mut work: VecDeque<NodeId> = tree
        .leaves()
        .into_iter()
        .filter(|&l| tree.node(l).shift.is_advanced())
        .collect();
    let mut splits = 0u64;
    loop {
        let next = match order {
            SplitOrder::Bfs => work.pop_front(),
            SplitOrder::Dfs => work.pop_back(),
        };
        let Some(leaf) = next else { break };
        splits += 1;
        if splits > cap {
            return Err(Error::IterationLimit(cap));
        }
        let split = split_leaf(&mut tree, leaf)?;
        if tree.node(split.p_child).shift.is_advanced() {
            work.push_back(split.p_child);
        }
        if let Some(m) = split.m_node {
            apply_deletion(&mut tree, m)?;
            for &c in &tree.node(m).children {
                if tree.node(c).shift.is_advanced() {
                    work.push_back(c);
                }
            }
        }
    }
    Ok(tree.compact())
}

/// Size statistics of one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TreeStats {
    /// Largest number of m-nodes on a root-to-leaf path.
    pub depth: u64,
    /// Number of leaves.
    pub literals: u64,
}

pub fn stats(tree: &IneqTree) -> TreeStats {
    let mut out = TreeStats::default();
    let mut stack = vec![(tree.root(), 0u64)];
    while let Some((id, depth)) = stack.pop() {
        let node = tree.node(id);
        let depth = depth + u64::from(node.kind == NodeKind::M);
        if node.children.is_empty() {
            out.literals += 1;
            out.depth = out.depth.max(depth);
        }
        stack.extend(node.children.iter().map(|&c| (c, depth)));
    }
    out
}

/// The eliminated system together with per-tree statistics.
#[derive(Debug, Clone)]
pub struct EliminatedSystem {
    pub system: System,
    /// `(class, stats)` for every tree that was eliminated (classes 8 mod 9).
    pub stats: Vec<(u64, TreeStats)>,
}

impl EliminatedSystem {
    /// Largest expansion among eliminated trees, by literal count.
    pub fn max_stats(&self) -> TreeStats {
        self.stats
            .iter()
            .map(|&(_, s)| s)
            .max_by_key(|s| (s.literals, s.depth))
            .unwrap_or_default()
    }

    /// Componentwise maxima of depth and literals.
    pub fn max_depth_and_literals(&self) -> TreeStats {
        self.stats.iter().fold(TreeStats::default(), |acc, &(_, s)| TreeStats {
            depth: acc.depth.max(s.depth),
            literals: acc.literals.max(s.literals),
        })
    }
}

/// Eliminates every tree with advanced terms; other trees pass through.
pub fn eliminate_system(system: &System, order: SplitOrder, cap: u64) -> Result<EliminatedSystem> {
    let results: Vec<(IneqTree, Option<TreeStats>)> = system
        .trees
        .par_iter()
        .map(|t| {
            let advanced = t.leaves().iter().any(|&l| t.node(l).shift.is_advanced());
            if advanced {
                let el = eliminate_with_cap(t, order, cap)?;
                let s = stats(&el);
                Ok((el, Some(s)))
            } else {
                Ok((t.clone(), None))
            }
        })
        .collect::<Result<_>>()?;
    let mut trees = Vec::with_capacity(results.len());
    let mut all_stats = Vec::new();
    for (t, s) in results {
        if let Some(s) = s {
            all_stats.push((t.root_class(), s));
        }
        trees.push(t);
    }
    Ok(EliminatedSystem {
        system: System {
            k: system.k,
            trees,
        },
        stats: all_stats,
    })
}

/// Builds and eliminates the system at level `k`.
pub fn eliminate_level(k: u32, order: SplitOrder) -> Result<EliminatedSystem> {
    let base = crate::tree::build_system(k)?;
    eliminate_system(&base, order, DEFAULT_SPLIT_CAP)
}

/// Outcome of a streaming count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamReport {
    pub class: u64,
    /// Deepest m-nesting seen so far.
    pub depth: u64,
    /// Leaves counted so far.
    pub literals: u64,
    /// Whether the whole tree was traversed.
    pub complete: bool,
    /// Minima whose three lifts were all deleted (none occur for k <= 4).
    pub empty_minima: u64,
}

/// Counts the eliminated tree of class `m` depth-first without storing it.
///
/// Only the current root path is kept: per class, the smallest shift of a
/// p-node on the path, with an undo log. Stops once `max_literals` leaves
/// have been counted.
///
/// Unlike [`eliminate`], a minimum that loses all three children is not an
/// error here; it is tallied in [`StreamReport::empty_minima`] and contributes
/// no leaves.
pub fn stream_stats(k: u32, m: u64, max_literals: u64) -> Result<StreamReport> {
    let n = class_count(k);
    let mut min_on_path: Vec<Option<ExponentShift>> = vec![None; n];
    enum Frame {
        Visit { class: u64, shift: ExponentShift, depth: u64 },
        Restore { idx: usize, prev: Option<ExponentShift> },
    }
    let mut report = StreamReport {
        class: m,
        depth: 0,
        literals: 0,
        complete: false,
        empty_minima: 0,
    };
    let mut stack = vec![Frame::Visit {
        class: m,
        shift: ExponentShift::ZERO,
        depth: 0,
    }];
    while let Some(frame) = stack.pop() {
        let (class, shift, depth) = match frame {
            Frame::Restore { idx, prev } => {
                min_on_path[idx] = prev;
                continue;
            }
            Frame::Visit { class, shift, depth } => (class, shift, depth),
        };
        if !shift.is_advanced() {
            report.literals += 1;
            report.depth = report.depth.max(depth);
            if report.literals >= max_literals {
                return Ok(report);
            }
            continue;
        }
        let idx = ((class - 2) / 3) as usize;
        let prev = min_on_path[idx];
        stack.push(Frame::Restore { idx, prev });
        if prev.is_none_or(|p| shift < p) {
            min_on_path[idx] = Some(shift);
        }
        let step = step_of(k, class)?;
        if let Some((_, members, delta)) = step.min {
            let mshift = shift + delta;
            let mut survivors = 0;
            for &member in members.iter().rev() {
                let midx = ((member - 2) / 3) as usize;
                let dominated = mshift.is_advanced()
                    && min_on_path[midx].is_some_and(|p| p <= mshift);
                if !dominated {
                    survivors += 1;
                    stack.push(Frame::Visit {
                        class: member,
                        shift: mshift,
                        depth: depth + 1,
                    });
                }
            }
            if survivors == 0 {
                // every lift dominated: the minimum can never be attained
                report.empty_minima += 1;
            }
        }
        stack.push(Frame::Visit {
            class: step.successor,
            shift: shift + ExponentShift::SUCCESSOR,
            depth,
        });
    }
    report.complete = true;
    Ok(report)
}

/// Streaming counts for every class `8 mod 9` at level `k`.
pub fn stream_level(k: u32, max_literals: u64) -> Result<Vec<StreamReport>> {
    classes(k)
        .filter(|m| m % 9 == 8)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| stream_stats(k, m, max_literals))
        .collect()
}
