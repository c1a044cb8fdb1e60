//! Rooted labelled trees encoding one difference inequality each, and the
//! base system built from the three branch shapes.
//!
//! A p-node stands for a term `phi_k^m(y + beta)`; an m-node for a minimum
//! over the three lifts of a class mod `3^(k-1)`. A tree reads as: the root's
//! function is bounded below by the sum of its children, where an m-node
//! contributes the minimum of its children.
//!
//! Children are kept in canonical order: the direct p-child first, then the
//! m-node; an m-node's children by lift index.
//!
//! # Text form
//!
//! One tree per line as an s-expression:
//!
//! ```text
//! (tree 2 (p 8 0 0 (p 5 -2 0) (m 2 -1 1 (p 2 -1 1) (p 5 -1 1))))
//! ```
//!
//! `(p m p q ...)` is a p-node of class `m` mod `3^k` with shift `p + q*alpha`;
//! `(m b p q ...)` is an m-node over the lifts of `b` mod `3^(k-1)`.

use std::fmt::{self, Write as _};

use crate::collatz::{classes, classify_branch, Branch, ResidueClass};
use crate::error::{Error, Result};
use crate::shift::ExponentShift;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    P,
    M,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub kind: NodeKind,
    /// Class mod `3^k` for p-nodes, mod `3^(k-1)` for m-nodes.
    pub class: u64,
    pub shift: ExponentShift,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// An inequality tree stored as an arena; node 0 is the root.
///
/// Nodes detached by deletion stay in the arena but are unreachable from the
/// root; [`IneqTree::compact`] drops them and renumbers in preorder.
#[derive(Debug, Clone)]
pub struct IneqTree {
    k: u32,
    nodes: Vec<TreeNode>,
}

/// Branch step of a class: successor class and, for D1/D3, the lift base and
/// the shift increment of the minimum.
pub(crate) struct Step {
    pub successor: u64,
    pub min: Option<(u64, [u64; 3], ExponentShift)>,
}

pub(crate) fn step_of(k: u32, m: u64) -> Result<Step> {
    let info = classify_branch(ResidueClass::new(k, m)?)?;
    let min = info.lift.map(|lift| {
        let shift = match info.branch {
            Branch::D1 => ExponentShift::D1_MIN,
            Branch::D3 => ExponentShift::D3_MIN,
            Branch::D2 => unreachable!("D2 has no minimum"),
        };
        (lift.base, lift.members, shift)
    });
    Ok(Step {
        successor: info.successor,
        min,
    })
}

impl IneqTree {
    pub(crate) fn with_root(k: u32, class: u64) -> Self {
        Self {
            k,
            nodes: vec![TreeNode {
                kind: NodeKind::P,
                class,
                shift: ExponentShift::ZERO,
                parent: None,
                children: Vec::new(),
            }],
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn root_class(&self) -> u64 {
        self.nodes[0].class
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    /// Arena size, including detached nodes.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn add_child(
        &mut self,
        parent: NodeId,
        kind: NodeKind,
        class: u64,
        shift: ExponentShift,
    ) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            kind,
            class,
            shift,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub(crate) fn detach_children(&mut self, parent: NodeId, remove: &[NodeId]) {
        self.nodes[parent].children.retain(|c| !remove.contains(c));
    }

    /// Attaches the branch expansion of p-node `at`: the successor p-child
    /// and, for D1/D3 classes, an m-node with its three lift leaves. Returns
    /// the new m-node if one was created.
    pub(crate) fn expand(&mut self, at: NodeId) -> Result<Option<NodeId>> {
        let (class, shift) = (self.nodes[at].class, self.nodes[at].shift);
        let step = step_of(self.k, class)?;
        self.add_child(
            at,
            NodeKind::P,
            step.successor,
            shift + ExponentShift::SUCCESSOR,
        );
        Ok(step.min.map(|(base, members, delta)| {
            let mshift = shift + delta;
            let mnode = self.add_child(at, NodeKind::M, base, mshift);
            for member in members {
                self.add_child(mnode, NodeKind::P, member, mshift);
            }
            mnode
        }))
    }

    /// Reachable node ids in canonical preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].children.is_empty())
            .collect()
    }

    /// m-nodes in canonical preorder; their position is the auxiliary index.
    pub fn m_nodes(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].kind == NodeKind::M)
            .collect()
    }

    /// Ancestors of `id` from its parent up to the root.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.nodes[id].parent, move |&n| self.nodes[n].parent)
    }

    /// Rebuilds the arena with only reachable nodes, numbered in preorder.
    pub fn compact(&self) -> IneqTree {
        let order = self.preorder();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let n = &self.nodes[old];
                TreeNode {
                    kind: n.kind,
                    class: n.class,
                    shift: n.shift,
                    parent: n.parent.map(|p| remap[p]),
                    children: n.children.iter().map(|&c| remap[c]).collect(),
                }
            })
            .collect();
        IneqTree { k: self.k, nodes }
    }

    /// Canonical text form (see module docs).
    pub fn to_text(&self) -> String {
        let mut out = format!("(tree {} ", self.k);
        self.write_node(0, &mut out);
        out.push(')');
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        // iterative to survive deep trees
        enum Item {
            Open(NodeId),
            Close,
        }
        let mut stack = vec![Item::Open(id)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Close => out.push(')'),
                Item::Open(n) => {
                    let node = &self.nodes[n];
                    let tag = match node.kind {
                        NodeKind::P => 'p',
                        NodeKind::M => 'm',
                    };
                    let _ = write!(
                        out,
                        "({tag} {} {} {}",
                        node.class, node.shift.p, node.shift.q
                    );
                    stack.push(Item::Close);
                    for &c in node.children.iter().rev() {
                        stack.push(Item::Open(c));
                    }
                }
            }
            if let Some(Item::Open(_)) = stack.last() {
                out.push(' ');
            }
        }
    }

    /// Parses the canonical text form of one tree.
    pub fn from_text(text: &str) -> Result<IneqTree> {
        parse_tree(text, 1)
    }

    /// Checks the structural invariants of a tree at level `k`.
    pub fn validate(&self) -> Result<()> {
        let root = &self.nodes[0];
        if root.kind != NodeKind::P || root.shift != ExponentShift::ZERO {
            return Err(Error::MalformedTree("root must be a p-node at shift 0".into()));
        }
        ResidueClass::new(self.k, root.class)
            .map_err(|e| Error::MalformedTree(e.to_string()))?;
        for id in self.preorder() {
            let node = &self.nodes[id];
            match node.kind {
                NodeKind::P => {
                    let ps = node
                        .children
                        .iter()
                        .filter(|&&c| self.nodes[c].kind == NodeKind::P)
                        .count();
                    let ms = node.children.len() - ps;
                    if ps > 1 || ms > 1 {
                        return Err(Error::MalformedTree(format!(
                            "p-node {id} has {ps} p-children and {ms} m-children"
                        )));
                    }
                }
                NodeKind::M => {
                    if node.children.is_empty() || node.children.len() > 3 {
                        return Err(Error::MalformedTree(format!(
                            "m-node {id} has {} children",
                            node.children.len()
                        )));
                    }
                    let step = crate::collatz::pow3(self.k - 1);
                    for &c in &node.children {
                        let child = &self.nodes[c];
                        if child.kind != NodeKind::P
                            || child.shift != node.shift
                            || child.class % step != node.class
                        {
                            return Err(Error::MalformedTree(format!(
                                "child {c} does not match m-node {id}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether two trees have the same shape and labels in canonical order.
    pub fn same_structure(&self, other: &IneqTree) -> bool {
        self.k == other.k && self.to_text() == other.to_text()
    }
}

impl fmt::Display for IneqTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Base tree of class `m` at level `k`: root `(m, 0)`, successor p-child at
/// shift `-2`, and for D1/D3 an m-node over the lifts.
pub fn build_base_tree(k: u32, m: u64) -> Result<IneqTree> {
    if k < 2 {
        return Err(Error::InvalidLevel(k, 2));
    }
    ResidueClass::new(k, m)?;
    let mut tree = IneqTree::with_root(k, m);
    tree.expand(0)?;
    Ok(tree)
}

/// One tree per class of `[3^k]`, in increasing class order.
#[derive(Debug, Clone)]
pub struct System {
    pub k: u32,
    pub trees: Vec<IneqTree>,
}

impl System {
    pub fn tree_for(&self, m: u64) -> Option<&IneqTree> {
        let idx = ((m.checked_sub(2)?) / 3) as usize;
        self.trees.get(idx).filter(|t| t.root_class() == m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.trees {
            out.push_str(&t.to_text());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<System> {
        let mut trees = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            trees.push(parse_tree(line, i + 1)?);
        }
        let k = trees
            .first()
            .map(|t| t.k)
            .ok_or_else(|| Error::Parse { line: 1, msg: "empty system".into() })?;
        Ok(System { k, trees })
    }
}

pub fn build_system(k: u32) -> Result<System> {
    let trees = classes(k)
        .map(|m| build_base_tree(k, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(System { k, trees })
}

fn parse_tree(text: &str, line: usize) -> Result<IneqTree> {
    let err = |msg: String| Error::Parse { line, msg };
    let tokens = tokenize(text);
    let mut pos = 0usize;
    let expect = |pos: &mut usize, want: &str| -> Result<()> {
        match tokens.get(*pos) {
            Some(t) if *t == want => {
                *pos += 1;
                Ok(())
            }
            other => Err(err(format!("expected '{want}', found {other:?}"))),
        }
    };
    let int = |pos: &mut usize| -> Result<i64> {
        let t = tokens
            .get(*pos)
            .ok_or_else(|| err("unexpected end of input".into()))?;
        *pos += 1;
        t.parse::<i64>()
            .map_err(|_| err(format!("expected an integer, found '{t}'")))
    };

    expect(&mut pos, "(")?;
    expect(&mut pos, "tree")?;
    let k = int(&mut pos)?;
    let k = u32::try_from(k).map_err(|_| err(format!("bad level {k}")))?;
    let mut tree: Option<IneqTree> = None;
    // stack of open node ids
    let mut open: Vec<NodeId> = Vec::new();
    loop {
        match tokens.get(pos).copied() {
            Some("(") => {
                pos += 1;
                let kind = match tokens.get(pos).copied() {
                    Some("p") => NodeKind::P,
                    Some("m") => NodeKind::M,
                    other => return Err(err(format!("expected node tag, found {other:?}"))),
                };
                pos += 1;
                let class = int(&mut pos)?;
                let class =
                    u64::try_from(class).map_err(|_| err(format!("negative class {class}")))?;
                let shift = ExponentShift::new(int(&mut pos)?, int(&mut pos)?);
                let id = match (&mut tree, open.last()) {
                    (None, _) => {
                        if kind != NodeKind::P {
                            return Err(err("root must be a p-node".into()));
                        }
                        let mut t = IneqTree::with_root(k, class);
                        t.nodes[0].shift = shift;
                        tree = Some(t);
                        0
                    }
                    (Some(t), Some(&parent)) => t.add_child(parent, kind, class, shift),
                    (Some(_), None) => return Err(err("more than one root".into())),
                };
                open.push(id);
            }
            Some(")") => {
                pos += 1;
                if open.pop().is_none() {
                    break;
                }
            }
            Some(t) => return Err(err(format!("unexpected token '{t}'"))),
            None => return Err(err("unexpected end of input".into())),
        }
    }
    if pos != tokens.len() {
        return Err(err("trailing input after tree".into()));
    }
    let tree = tree.ok_or_else(|| err("tree has no root".into()))?;
    tree.validate().map_err(|e| err(e.to_string()))?;
    Ok(tree)
}

fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | ')' => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
                out.push(&text[i..i + 1]);
            }
            c if c.is_whitespace() => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
            }
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}
