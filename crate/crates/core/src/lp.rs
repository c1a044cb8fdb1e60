//! Parametric linear programs in `lambda`.
//!
//! A constraint `lhs * lambda^b0 <= sum rhs_i * lambda^b_i` keeps its
//! exponents as exact [`ExponentShift`]s; numbers only appear when a
//! consumer evaluates coefficients with a chosen rounding direction.
//!
//! Two families are built:
//!
//! * the direct form (`Nt`): one constraint per class from its branch, plus
//!   three lift constraints `cprev[m] <= c[m + j*3^(k-1)]` per class mod
//!   `3^(k-1)`;
//! * the tree form, one constraint per leaf of each inequality tree, from the
//!   base system (`Base`) or the eliminated one (`El`).
//!
//! # Text form
//!
//! ```text
//! # lp family=NT k=2
//! minimize Cmax
//! 1 <= c[2] <= Cmax
//! (c[2], 0, 0) <= (c[8], -2, 0) + (cprev[2], -2, 1)
//! ```
//!
//! Terms are `(variable, p, q)` standing for `variable * lambda^(p + q*alpha)`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::collatz::{class_count, classes, pow3};
use crate::eliminate::{eliminate_level, SplitOrder};
use crate::error::{Error, Result};
use crate::shift::ExponentShift;
use crate::tree::{build_system, step_of, IneqTree, NodeId, NodeKind, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Family {
    #[default]
    Nt,
    El,
    Base,
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nt" => Ok(Family::Nt),
            "el" => Ok(Family::El),
            "base" => Ok(Family::Base),
            other => Err(format!("unknown family '{other}' (expected nt, el or base)")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Nt => "NT",
            Family::El => "EL",
            Family::Base => "BASE",
        })
    }
}

/// A program variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LpVar {
    /// `c[m]`, one per class mod `3^k`.
    Principal(u64),
    /// `cprev[m]`, one per class mod `3^(k-1)` (direct form only).
    Previous(u64),
    /// `a[t:i]`, the `i`-th m-node (1-based, preorder) of the tree rooted at class `t`.
    Aux { tree: u64, index: usize },
    /// `Cmax`.
    Objective,
}

impl fmt::Display for LpVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpVar::Principal(m) => write!(f, "c[{m}]"),
            LpVar::Previous(m) => write!(f, "cprev[{m}]"),
            LpVar::Aux { tree, index } => write!(f, "a[{tree}:{index}]"),
            LpVar::Objective => f.write_str("Cmax"),
        }
    }
}

impl FromStr for LpVar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "Cmax" {
            return Ok(LpVar::Objective);
        }
        let bad = || format!("bad variable name '{s}'");
        let open = s.find('[').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(']').ok_or_else(bad)?;
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        match &s[..open] {
            "c" => Ok(LpVar::Principal(num(inner)?)),
            "cprev" => Ok(LpVar::Previous(num(inner)?)),
            "a" => {
                let (t, i) = inner.split_once(':').ok_or_else(bad)?;
                Ok(LpVar::Aux {
                    tree: num(t)?,
                    index: num(i)? as usize,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// `var * lambda^shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Term {
    pub var: LpVar,
    pub shift: ExponentShift,
}

impl Term {
    pub fn new(var: LpVar, shift: ExponentShift) -> Self {
        Self { var, shift }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.var, self.shift.p, self.shift.q)
    }
}

/// `lhs <= sum(rhs)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpConstraint {
    pub lhs: Term,
    pub rhs: Vec<Term>,
}

impl fmt::Display for LpConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <=", self.lhs)?;
        for (i, t) in self.rhs.iter().enumerate() {
            if i > 0 {
                f.write_str(" +")?;
            }
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

/// Minimize `Cmax` subject to `1 <= c[m] <= Cmax` and the constraints.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub k: u32,
    pub family: Family,
    /// Principal variables first (class order), then auxiliaries, then `Cmax`.
    pub variables: Vec<LpVar>,
    pub constraints: Vec<LpConstraint>,
}

impl LinearProgram {
    pub fn principal_classes(&self) -> impl Iterator<Item = u64> + '_ {
        self.variables.iter().filter_map(|v| match v {
            LpVar::Principal(m) => Some(*m),
            _ => None,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# lp family={} k={}\nminimize Cmax\n", self.family, self.k);
        for m in self.principal_classes() {
            let _ = writeln!(out, "1 <= c[{m}] <= Cmax");
        }
        for c in &self.constraints {
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

fn check_level(k: u32) -> Result<()> {
    if !(2..=20).contains(&k) {
        return Err(Error::InvalidLevel(k, 2));
    }
    Ok(())
}

/// The direct form at level `k`.
pub fn build_lp_nt(k: u32) -> Result<LinearProgram> {
    check_level(k)?;
    let mut constraints = Vec::with_capacity(class_count(k) * 2);
    for m in classes(k) {
        let step = step_of(k, m)?;
        let mut rhs = vec![Term::new(LpVar::Principal(step.successor), ExponentShift::SUCCESSOR)];
        if let Some((base, _, shift)) = step.min {
            rhs.push(Term::new(LpVar::Previous(base), shift));
        }
        constraints.push(LpConstraint {
            lhs: Term::new(LpVar::Principal(m), ExponentShift::ZERO),
            rhs,
        });
    }
    let step = pow3(k - 1);
    for b in classes(k - 1) {
        for j in 0..3 {
            constraints.push(LpConstraint {
                lhs: Term::new(LpVar::Previous(b), ExponentShift::ZERO),
                rhs: vec![Term::new(LpVar::Principal(b + j * step), ExponentShift::ZERO)],
            });
        }
    }
    let mut variables: Vec<LpVar> = classes(k).map(LpVar::Principal).collect();
    variables.extend(classes(k - 1).map(LpVar::Previous));
    variables.push(LpVar::Objective);
    Ok(LinearProgram {
        k,
        family: Family::Nt,
        variables,
        constraints,
    })
}

/// One constraint per leaf of `tree`, in preorder of the leaves.
///
/// A leaf whose root path has no m-node bounds the root's `c`; any other
/// leaf bounds the auxiliary of the last m-node above it. The right side is
/// the leaf's own term plus every m-node hanging off a p-node on the segment
/// between that top node and the leaf.
pub fn build_lp_from_tree(tree: &IneqTree) -> Result<Vec<LpConstraint>> {
    let root_class = tree.root_class();
    let order = tree.preorder();
    let mut aux_index = vec![0usize; tree.arena_len()];
    let mut next = 0;
    for &id in &order {
        if tree.node(id).kind == NodeKind::M {
            next += 1;
            aux_index[id] = next;
        }
    }
    let aux = |id: NodeId| LpVar::Aux {
        tree: root_class,
        index: aux_index[id],
    };
    let mut out = Vec::new();
    for &leaf in &order {
        let node = tree.node(leaf);
        if !node.children.is_empty() {
            continue;
        }
        if node.kind == NodeKind::M {
            return Err(Error::MalformedTree(format!("leaf {leaf} is an m-node")));
        }
        // p-nodes from the leaf's parent up to, excluding, the top node
        let mut segment: Vec<NodeId> = Vec::new();
        let mut top = None;
        for a in tree.ancestors(leaf) {
            if tree.node(a).kind == NodeKind::M {
                top = Some(a);
                break;
            }
            segment.push(a);
        }
        let lhs = match top {
            Some(v) => Term::new(aux(v), tree.node(v).shift),
            None => Term::new(LpVar::Principal(root_class), ExponentShift::ZERO),
        };
        let mut rhs = vec![Term::new(LpVar::Principal(node.class), node.shift)];
        // top-down along the segment
        for &p in segment.iter().rev() {
            for &c in &tree.node(p).children {
                let child = tree.node(c);
                if child.kind == NodeKind::M {
                    rhs.push(Term::new(aux(c), child.shift));
                }
            }
        }
        out.push(LpConstraint { lhs, rhs });
    }
    Ok(out)
}

/// The tree form of a whole system; `family` only labels the program.
pub fn build_lp_from_system(system: &System, family: Family) -> Result<LinearProgram> {
    let k = system.k;
    let per_tree: Vec<(Vec<LpConstraint>, usize)> = system
        .trees
        .par_iter()
        .map(|t| Ok((build_lp_from_tree(t)?, t.m_nodes().len())))
        .collect::<Result<_>>()?;
    let mut variables: Vec<LpVar> = system.trees.iter().map(|t| LpVar::Principal(t.root_class())).collect();
    let mut constraints = Vec::new();
    for (tree, (cs, n_aux)) in system.trees.iter().zip(per_tree) {
        variables.extend((1..=n_aux).map(|index| LpVar::Aux {
            tree: tree.root_class(),
            index,
        }));
        constraints.extend(cs);
    }
    variables.push(LpVar::Objective);
    Ok(LinearProgram {
        k,
        family,
        variables,
        constraints,
    })
}

/// The tree form of the eliminated system at level `k`.
pub fn build_lp_el(k: u32) -> Result<LinearProgram> {
    check_level(k)?;
    let el = eliminate_level(k, SplitOrder::Bfs)?;
    build_lp_from_system(&el.system, Family::El)
}

/// The tree form of the base system at level `k`.
pub fn build_lp_base(k: u32) -> Result<LinearProgram> {
    check_level(k)?;
    build_lp_from_system(&build_system(k)?, Family::Base)
}

/// Builds the program of the given family.
pub fn build_lp(k: u32, family: Family) -> Result<LinearProgram> {
    match family {
        Family::Nt => build_lp_nt(k),
        Family::El => build_lp_el(k),
        Family::Base => build_lp_base(k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::build_base_tree;

    fn s(p: i64, q: i64) -> ExponentShift {
        ExponentShift::new(p, q)
    }

    fn c(m: u64, p: i64, q: i64) -> Term {
        Term::new(LpVar::Principal(m), s(p, q))
    }

    fn a(tree: u64, index: usize, p: i64, q: i64) -> Term {
        Term::new(LpVar::Aux { tree, index }, s(p, q))
    }

    #[test]
    fn nt_branch_constraints_k2() {
        let lp = build_lp_nt(2).unwrap();
        let find = |m| {
            lp.constraints
                .iter()
                .find(|c| c.lhs.var == LpVar::Principal(m))
                .unwrap()
                .clone()
        };
        assert_eq!(find(5).rhs, vec![c(2, -2, 0)]);
        assert_eq!(
            find(2).rhs,
            vec![c(8, -2, 0), Term::new(LpVar::Previous(2), s(-2, 1))]
        );
        assert_eq!(
            find(8).rhs,
            vec![c(5, -2, 0), Term::new(LpVar::Previous(2), s(-1, 1))]
        );
        let lifts: Vec<_> = lp
            .constraints
            .iter()
            .filter(|c| c.lhs.var == LpVar::Previous(2))
            .map(|c| c.rhs[0].var)
            .collect();
        assert_eq!(
            lifts,
            vec![LpVar::Principal(2), LpVar::Principal(5), LpVar::Principal(8)]
        );
    }

    #[test]
    fn nt_shapes() {
        for c in &build_lp_nt(3).unwrap().constraints {
            assert_eq!(c.lhs.shift, ExponentShift::ZERO);
        }
        let lp = build_lp_nt(3).unwrap();
        let count = |f: fn(&LpVar) -> bool| lp.variables.iter().filter(|v| f(v)).count();
        assert_eq!(count(|v| matches!(v, LpVar::Principal(_))), 9);
        assert_eq!(count(|v| matches!(v, LpVar::Previous(_))), 3);
        assert_eq!(count(|v| matches!(v, LpVar::Objective)), 1);
        assert_eq!(lp.constraints.len(), 9 + 9);
        assert!(build_lp_nt(1).is_err());
    }

    #[test]
    fn one_constraint_per_leaf() {
        for k in 2..=3 {
            let el = eliminate_level(k, SplitOrder::Bfs).unwrap();
            for t in &el.system.trees {
                let cs = build_lp_from_tree(t).unwrap();
                assert_eq!(cs.len(), t.leaves().len());
                // every auxiliary is bounded by at least one constraint
                for i in 1..=t.m_nodes().len() {
                    let var = LpVar::Aux {
                        tree: t.root_class(),
                        index: i,
                    };
                    assert!(cs.iter().any(|c| c.lhs.var == var));
                }
            }
        }
    }

    #[test]
    fn eliminated_k2_matches_worked_example() {
        let lp = build_lp_el(2).unwrap();
        assert_eq!(lp.constraints.len(), 13);
        let of_tree = |m: u64| -> Vec<LpConstraint> {
            let t = build_base_tree(2, m).unwrap();
            let t = crate::eliminate::eliminate(&t, SplitOrder::Bfs).unwrap();
            build_lp_from_tree(&t).unwrap()
        };
        let t8 = of_tree(8);
        let leaf = |cs: &[LpConstraint], lhs: Term, rhs: Vec<Term>| {
            assert!(
                cs.contains(&LpConstraint { lhs, rhs: rhs.clone() }),
                "missing {lhs} <= {rhs:?}"
            );
        };
        leaf(&t8, c(8, 0, 0), vec![c(5, -2, 0), a(8, 1, -1, 1)]);
        leaf(&t8, a(8, 1, -1, 1), vec![c(8, -3, 1), a(8, 2, -3, 2)]);
        leaf(&t8, a(8, 1, -1, 1), vec![c(2, -3, 1)]);
        leaf(&t8, a(8, 2, -3, 2), vec![c(8, -5, 2), a(8, 3, -5, 3)]);
        leaf(&t8, a(8, 2, -3, 2), vec![c(2, -5, 2)]);
        for m in [2, 5, 8] {
            leaf(&t8, a(8, 3, -5, 3), vec![c(m, -5, 3)]);
        }
        assert_eq!(t8.len(), 8);
        assert_eq!(of_tree(5), vec![LpConstraint { lhs: c(5, 0, 0), rhs: vec![c(2, -2, 0)] }]);
        let t2 = of_tree(2);
        assert_eq!(t2.len(), 4);
        leaf(&t2, c(2, 0, 0), vec![c(8, -2, 0), a(2, 1, -2, 1)]);
    }

    #[test]
    fn text_emission() {
        let text = build_lp_nt(2).unwrap().to_text();
        assert!(text.starts_with("# lp family=NT k=2\nminimize Cmax\n1 <= c[2] <= Cmax\n"));
        assert!(text.contains("(c[2], 0, 0) <= (c[8], -2, 0) + (cprev[2], -2, 1)\n"));
        assert!(text.contains("(cprev[2], 0, 0) <= (c[8], 0, 0)\n"));
        let el = build_lp_el(2).unwrap().to_text();
        assert!(el.contains("(a[8:1], -1, 1) <= (c[8], -3, 1) + (a[8:2], -3, 2)\n"));
    }

    #[test]
    fn variable_names_round_trip() {
        for v in [
            LpVar::Principal(26),
            LpVar::Previous(8),
            LpVar::Aux { tree: 8, index: 3 },
            LpVar::Objective,
        ] {
            assert_eq!(v.to_string().parse::<LpVar>().unwrap(), v);
        }
        assert!("b[2]".parse::<LpVar>().is_err());
        assert!("c[x]".parse::<LpVar>().is_err());
    }

    #[test]
    fn m_node_leaf_is_rejected() {
        let t = IneqTree::from_text("(tree 2 (p 2 0 0 (p 8 -2 0) (m 2 -2 1 (p 2 -2 1))))").unwrap();
        assert_eq!(build_lp_from_tree(&t).unwrap().len(), 2);
        let mut bad = IneqTree::with_root(2, 2);
        bad.add_child(0, NodeKind::M, 2, s(-2, 1));
        assert!(matches!(build_lp_from_tree(&bad), Err(Error::MalformedTree(_))));
    }
}
