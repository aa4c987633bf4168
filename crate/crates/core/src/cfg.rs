//! Statement-level control-flow graphs and complexity metrics.
//!
//! One graph covers a whole program. Every function or method body is a
//! separate unit with its own entry and exit node; executable top-level code
//! forms one more unit. `P` in `E - N + 2P` is the number of units.
//!
//! Conditions are opaque: `a and b` is one decision, not two. Exception flow
//! is modelled by a single edge from a `try` node to each of its handlers.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::syntax::{count_loc, Node, NodeKind, OtherKind, Slot, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CfgNodeKind {
    Entry,
    Exit,
    Statement,
    Branch,
    LoopHeader,
    TryEntry,
    Handler,
    MatchDispatch,
    MatchArm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CfgNode {
    pub id: usize,
    pub unit: usize,
    pub kind: CfgNodeKind,
    pub line: Option<u32>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CfgUnit {
    pub name: String,
    pub entry: usize,
    pub exit: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ControlFlowGraph {
    nodes: Vec<CfgNode>,
    edges: BTreeSet<(usize, usize)>,
    units: Vec<CfgUnit>,
}

impl ControlFlowGraph {
    pub fn nodes(&self) -> &[CfgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn units(&self) -> &[CfgUnit] {
        &self.units
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `P`: function and method bodies plus executable top-level code.
    pub fn function_count(&self) -> usize {
        self.units.len()
    }

    pub fn successors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .range((id, 0)..=(id, usize::MAX))
            .map(|&(_, to)| to)
    }

    /// Nodes not on any entry-to-exit path of their unit.
    pub fn unreachable_nodes(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut forward = vec![false; n];
        let mut backward = vec![false; n];
        let mut preds = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            preds[b].push(a);
        }
        for unit in &self.units {
            let mut queue = VecDeque::from([unit.entry]);
            forward[unit.entry] = true;
            while let Some(v) = queue.pop_front() {
                for s in self.successors(v) {
                    if !forward[s] {
                        forward[s] = true;
                        queue.push_back(s);
                    }
                }
            }
            let mut queue = VecDeque::from([unit.exit]);
            backward[unit.exit] = true;
            while let Some(v) = queue.pop_front() {
                for &p in &preds[v] {
                    if !backward[p] {
                        backward[p] = true;
                        queue.push_back(p);
                    }
                }
            }
        }
        (0..n).filter(|&i| !(forward[i] && backward[i])).collect()
    }

    /// Graphviz rendering; node ids follow construction order and are stable across runs.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfg {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (u, unit) in self.units.iter().enumerate() {
            let _ = writeln!(
                out,
                "  subgraph cluster_{u} {{\n    label=\"{}\";",
                escape(&unit.name)
            );
            for node in self.nodes.iter().filter(|n| n.unit == u) {
                let line = node.line.map(|l| format!("{l}: ")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "    n{} [label=\"{}{}\"];",
                    node.id,
                    line,
                    escape(&node.label)
                );
            }
            out.push_str("  }\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Default)]
struct Builder<'t> {
    graph: ControlFlowGraph,
    pending: VecDeque<&'t Node>,
}

struct LoopFrame {
    header: usize,
    breaks: Vec<usize>,
}

struct UnitCtx {
    index: usize,
    exit: usize,
    loops: Vec<LoopFrame>,
}

pub fn build_cfg(tree: &SyntaxTree) -> ControlFlowGraph {
    let mut builder = Builder::default();
    let top: Vec<&Node> = tree.statements().collect();
    if top.iter().any(|s| !is_declarative(s)) {
        builder.unit("<module>", &top);
    } else {
        for stmt in &top {
            builder.harvest_functions(stmt);
        }
    }
    while let Some(func) = builder.pending.pop_front() {
        let body: Vec<&Node> = func.block(Slot::Body).collect();
        let name = func.detail.clone().unwrap_or_default();
        builder.unit(&name, &body);
    }
    builder.graph
}

/// Statements that only bind names when the module is loaded.
fn is_declarative(stmt: &Node) -> bool {
    match stmt.kind {
        NodeKind::FunctionDef => true,
        NodeKind::Other(OtherKind::Import | OtherKind::Docstring) => true,
        NodeKind::Other(OtherKind::Class) => stmt.block(Slot::Body).all(|s| !has_control_flow(s)),
        _ => false,
    }
}

fn has_control_flow(node: &Node) -> bool {
    match node.kind {
        NodeKind::FunctionDef => false,
        NodeKind::If | NodeKind::For | NodeKind::While | NodeKind::Match | NodeKind::Try => true,
        _ => node.children.iter().any(has_control_flow),
    }
}

impl<'t> Builder<'t> {
    fn harvest_functions(&mut self, stmt: &'t Node) {
        match stmt.kind {
            NodeKind::FunctionDef => self.pending.push_back(stmt),
            NodeKind::Other(OtherKind::Class) => {
                for s in stmt.block(Slot::Body) {
                    self.harvest_functions(s);
                }
            }
            _ => {}
        }
    }

    fn add(&mut self, unit: usize, kind: CfgNodeKind, line: Option<u32>, label: String) -> usize {
        let id = self.graph.nodes.len();
        self.graph.nodes.push(CfgNode {
            id,
            unit,
            kind,
            line,
            label,
        });
        id
    }

    fn link(&mut self, from: &[usize], to: usize) {
        for &f in from {
            self.graph.edges.insert((f, to));
        }
    }

    fn unit(&mut self, name: &str, body: &[&'t Node]) {
        let index = self.graph.units.len();
        let entry = self.add(index, CfgNodeKind::Entry, None, format!("entry {name}"));
        let exit = self.add(index, CfgNodeKind::Exit, None, format!("exit {name}"));
        self.graph.units.push(CfgUnit {
            name: name.to_string(),
            entry,
            exit,
        });
        let mut ctx = UnitCtx {
            index,
            exit,
            loops: Vec::new(),
        };
        let ends = self.block(body.iter().copied(), vec![entry], &mut ctx);
        self.link(&ends, exit);
    }

    fn block<I>(&mut self, stmts: I, mut preds: Vec<usize>, ctx: &mut UnitCtx) -> Vec<usize>
    where
        I: IntoIterator<Item = &'t Node>,
    {
        for stmt in stmts {
            preds = self.stmt(stmt, preds, ctx);
        }
        preds
    }

    fn stmt(&mut self, stmt: &'t Node, preds: Vec<usize>, ctx: &mut UnitCtx) -> Vec<usize> {
        let line = Some(stmt.lines.start);
        let kind = match stmt.kind {
            NodeKind::If => CfgNodeKind::Branch,
            NodeKind::For | NodeKind::While => CfgNodeKind::LoopHeader,
            NodeKind::Try => CfgNodeKind::TryEntry,
            NodeKind::Match => CfgNodeKind::MatchDispatch,
            _ => CfgNodeKind::Statement,
        };
        let label = statement_label(stmt);
        let id = self.add(ctx.index, kind, line, label);
        self.link(&preds, id);

        match stmt.kind {
            NodeKind::If => {
                let mut ends = self.block(stmt.block(Slot::Body), vec![id], ctx);
                if stmt.block(Slot::OrElse).next().is_some() {
                    ends.extend(self.block(stmt.block(Slot::OrElse), vec![id], ctx));
                } else {
                    ends.push(id);
                }
                ends
            }
            NodeKind::For | NodeKind::While => {
                ctx.loops.push(LoopFrame {
                    header: id,
                    breaks: Vec::new(),
                });
                let body_ends = self.block(stmt.block(Slot::Body), vec![id], ctx);
                self.link(&body_ends, id);
                let frame = ctx.loops.pop().expect("loop frame pushed above");
                let mut ends = self.block(stmt.block(Slot::OrElse), vec![id], ctx);
                ends.extend(frame.breaks);
                ends
            }
            NodeKind::Try => {
                let mut ends = self.block(stmt.block(Slot::Body), vec![id], ctx);
                ends = self.block(stmt.block(Slot::OrElse), ends, ctx);
                for handler in stmt.block(Slot::Handler) {
                    let h = self.add(
                        ctx.index,
                        CfgNodeKind::Handler,
                        Some(handler.lines.start),
                        "except".to_string(),
                    );
                    self.link(&[id], h);
                    ends.extend(self.block(handler.block(Slot::Body), vec![h], ctx));
                }
                self.block(stmt.block(Slot::Finally), ends, ctx)
            }
            NodeKind::Match => {
                let mut ends = Vec::new();
                let mut exhaustive = false;
                for case in stmt
                    .block(Slot::Body)
                    .filter(|c| c.kind == NodeKind::MatchCase)
                {
                    let arm = self.add(
                        ctx.index,
                        CfgNodeKind::MatchArm,
                        Some(case.lines.start),
                        "case".to_string(),
                    );
                    self.link(&[id], arm);
                    ends.extend(self.block(case.block(Slot::Body), vec![arm], ctx));
                    exhaustive |= case.irrefutable;
                }
                if !exhaustive {
                    ends.push(id);
                }
                ends
            }
            NodeKind::Return | NodeKind::Other(OtherKind::Raise) => {
                self.link(&[id], ctx.exit);
                Vec::new()
            }
            NodeKind::Other(OtherKind::Break) => match ctx.loops.last_mut() {
                Some(frame) => {
                    frame.breaks.push(id);
                    Vec::new()
                }
                None => vec![id],
            },
            NodeKind::Other(OtherKind::Continue) => match ctx.loops.last() {
                Some(frame) => {
                    let header = frame.header;
                    self.link(&[id], header);
                    Vec::new()
                }
                None => vec![id],
            },
            NodeKind::Other(OtherKind::With | OtherKind::Class) => {
                self.block(stmt.block(Slot::Body), vec![id], ctx)
            }
            NodeKind::FunctionDef => {
                self.pending.push_back(stmt);
                vec![id]
            }
            _ => vec![id],
        }
    }
}

fn statement_label(stmt: &Node) -> String {
    let base = match stmt.kind {
        NodeKind::Other(kind) => format!("{kind:?}").to_lowercase(),
        kind => format!("{kind:?}").to_lowercase(),
    };
    match &stmt.detail {
        Some(d) => format!("{base} {d}"),
        None => base,
    }
}

/// `E - N + 2P`.
pub fn cyclomatic_complexity(cfg: &ControlFlowGraph) -> u32 {
    let value = cfg.edge_count() as i64 - cfg.node_count() as i64 + 2 * cfg.function_count() as i64;
    u32::try_from(value).expect("every unit is connected, so E - N + 2P >= 0")
}

/// Structural cognitive complexity.
///
/// | construct                      | increment          |
/// |--------------------------------|--------------------|
/// | `if`, `for`, `while`           | 1 + nesting depth  |
/// | `except` handler               | 1 + nesting depth  |
/// | each `case` after the first    | 1 + nesting depth  |
/// | `elif`, `else` (of an `if`)    | 1                  |
///
/// Bodies of those constructs sit one level deeper. Function bodies restart at
/// depth 0; `try`, `with` and class bodies do not add depth.
pub fn cognitive_complexity(tree: &SyntaxTree) -> u32 {
    tree.root.children.iter().map(|c| cognitive(c, 0)).sum()
}

fn cognitive(node: &Node, depth: u32) -> u32 {
    match node.kind {
        NodeKind::FunctionDef => node.children.iter().map(|c| cognitive(c, 0)).sum(),
        NodeKind::If => 1 + depth + if_chain(node, depth),
        NodeKind::For | NodeKind::While => {
            1 + depth
                + node
                    .children
                    .iter()
                    .map(|c| cognitive(c, depth + 1))
                    .sum::<u32>()
        }
        NodeKind::ExceptHandler => {
            1 + depth
                + node
                    .children
                    .iter()
                    .map(|c| cognitive(c, depth + 1))
                    .sum::<u32>()
        }
        NodeKind::Match => {
            let mut total = 0;
            let mut arms = 0;
            for child in &node.children {
                if child.kind == NodeKind::MatchCase {
                    if arms > 0 {
                        total += 1 + depth;
                    }
                    arms += 1;
                    total += child
                        .children
                        .iter()
                        .map(|c| cognitive(c, depth + 1))
                        .sum::<u32>();
                } else {
                    total += cognitive(child, depth);
                }
            }
            total
        }
        _ => node.children.iter().map(|c| cognitive(c, depth)).sum(),
    }
}

/// Everything below an `if` or `elif` node, excluding its own increment.
fn if_chain(node: &Node, depth: u32) -> u32 {
    let mut total: u32 = node
        .children
        .iter()
        .filter(|c| c.slot != Slot::OrElse)
        .map(|c| cognitive(c, depth + 1))
        .sum();
    let orelse: Vec<&Node> = node.block(Slot::OrElse).collect();
    match orelse.as_slice() {
        [] => {}
        [elif] if elif.kind == NodeKind::If && elif.elif => total += 1 + if_chain(elif, depth),
        block => total += 1 + block.iter().map(|c| cognitive(c, depth + 1)).sum::<u32>(),
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComplexityProfile {
    pub loc: u32,
    pub cyclomatic: u32,
    pub cognitive: u32,
}

pub fn complexity_profile(tree: &SyntaxTree, source: &str) -> ComplexityProfile {
    ComplexityProfile {
        loc: count_loc(source) as u32,
        cyclomatic: cyclomatic_complexity(&build_cfg(tree)),
        cognitive: cognitive_complexity(tree),
    }
}
