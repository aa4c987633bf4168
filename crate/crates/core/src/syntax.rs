//! Normalized syntax trees for subject programs.
//!
//! The raw Python AST comes from `rustpython-parser`; this module folds it
//! into a small tree that only distinguishes the construct kinds the analyses
//! care about. Everything else becomes [`NodeKind::Other`], but nested
//! supported constructs are always surfaced as children.

use std::collections::BTreeMap;
use std::fmt;

use rustpython_parser::ast::{self, Expr, Pattern, Ranged, Stmt};
use rustpython_parser::Parse;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

/// Preorder index of a node inside its tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

/// Inclusive 1-based line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LineRange {
    pub start: u32,
    pub end: u32,
}

impl LineRange {
    pub fn contains(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }

    pub fn encloses(&self, other: &LineRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    fn union(self, other: LineRange) -> LineRange {
        LineRange {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

/// Statement and expression shapes that have no dedicated kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OtherKind {
    Class,
    Import,
    Pass,
    Break,
    Continue,
    Raise,
    With,
    Delete,
    Assert,
    Global,
    Docstring,
    Lambda,
    Comprehension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Module,
    FunctionDef,
    If,
    For,
    While,
    Match,
    MatchCase,
    Try,
    ExceptHandler,
    Call,
    Return,
    Assign,
    Expr,
    Other(OtherKind),
}

impl NodeKind {
    pub fn is_loop(self) -> bool {
        matches!(self, NodeKind::For | NodeKind::While)
    }
}

/// Position of a child inside its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Slot {
    /// Expression-level content: conditions, iterables, call arguments.
    Header,
    /// Main statement block (the protected block for `try`).
    Body,
    /// `else`/`elif` of an `if`, `else` of a loop or `try`.
    OrElse,
    /// Exception handlers of a `try`.
    Handler,
    Finally,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub slot: Slot,
    /// Function name, callee, or class name where meaningful.
    pub detail: Option<String>,
    pub lines: LineRange,
    /// `If` produced by an `elif` clause.
    pub elif: bool,
    /// `MatchCase` whose pattern always matches (`case _:` or a bare capture, no guard).
    pub irrefutable: bool,
    pub children: Vec<Node>,
}

impl Node {
    fn new(kind: NodeKind, slot: Slot, lines: LineRange) -> Self {
        Node {
            id: NodeId(0),
            kind,
            slot,
            detail: None,
            lines,
            elif: false,
            irrefutable: false,
            children: Vec::new(),
        }
    }

    /// Statement children in the given slot, in source order.
    pub fn block(&self, slot: Slot) -> impl Iterator<Item = &Node> {
        self.children.iter().filter(move |c| c.slot == slot)
    }

    /// Preorder traversal including `self`.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    fn finish(&mut self, next_id: &mut usize) {
        self.id = NodeId(*next_id);
        *next_id += 1;
        for child in &mut self.children {
            child.finish(next_id);
            self.lines = self.lines.union(child.lines);
        }
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a Node>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntaxTree {
    pub root: Node,
}

impl SyntaxTree {
    pub fn nodes(&self) -> Walk<'_> {
        self.root.walk()
    }

    pub fn line_map(&self) -> BTreeMap<NodeId, LineRange> {
        self.nodes().map(|n| (n.id, n.lines)).collect()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes().filter(|n| n.kind == kind).count()
    }

    /// Top-level statements of the module.
    pub fn statements(&self) -> impl Iterator<Item = &Node> {
        self.root.block(Slot::Body)
    }
}

impl fmt::Display for SyntaxTree {
    /// Indented outline, one node per line. Handy for debugging fixtures.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(node: &Node, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{:indent$}{:?}", "", node.kind, indent = depth * 2)?;
            if let Some(detail) = &node.detail {
                write!(f, " {detail}")?;
            }
            if node.elif {
                write!(f, " (elif)")?;
            }
            writeln!(f, " [{}-{}]", node.lines.start, node.lines.end)?;
            node.children.iter().try_for_each(|c| go(c, depth + 1, f))
        }
        go(&self.root, 0, f)
    }
}

/// Byte offset to line/column lookup.
struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(source: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(source.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    fn line_col(&self, offset: usize) -> (u32, u32) {
        let line = self.starts.partition_point(|&s| s <= offset).max(1);
        let col = offset - self.starts[line - 1];
        (line as u32, col as u32 + 1)
    }

    fn lines(&self, range: ast::text_size::TextRange) -> LineRange {
        let start = usize::from(range.start());
        let end = usize::from(range.end()).max(start + 1) - 1;
        LineRange {
            start: self.line_col(start).0,
            end: self.line_col(end).0,
        }
    }
}

struct Lowering<'s> {
    source: &'s str,
    index: LineIndex,
}

/// Parses a subject program into a normalized tree.
pub fn parse_program(source: &str) -> Result<SyntaxTree, ParseError> {
    let index = LineIndex::new(source);
    let suite = ast::Suite::parse(source, "<subject>").map_err(|e| {
        let (line, column) = index.line_col(usize::from(e.offset).min(source.len()));
        ParseError {
            line,
            column,
            message: e.error.to_string(),
        }
    })?;
    let lowering = Lowering { source, index };

    let last_line = lowering.index.starts.len() as u32;
    let mut root = Node::new(
        NodeKind::Module,
        Slot::Body,
        LineRange {
            start: 1,
            end: last_line.max(1),
        },
    );
    for stmt in &suite {
        root.children.push(lowering.stmt(stmt, Slot::Body));
    }
    if let (Some(first), Some(last)) = (root.children.first(), root.children.last()) {
        root.lines = LineRange {
            start: first.lines.start.min(1),
            end: last.lines.end,
        };
    } else {
        root.lines = LineRange { start: 1, end: 1 };
    }
    let mut next = 0;
    root.finish(&mut next);
    Ok(SyntaxTree { root })
}

impl Lowering<'_> {
    fn node(&self, kind: NodeKind, slot: Slot, range: ast::text_size::TextRange) -> Node {
        Node::new(kind, slot, self.index.lines(range))
    }

    fn block(&self, node: &mut Node, stmts: &[Stmt], slot: Slot) {
        for stmt in stmts {
            node.children.push(self.stmt(stmt, slot));
        }
    }

    fn header(&self, node: &mut Node, expr: &Expr) {
        self.expr(expr, &mut node.children);
    }

    fn stmt(&self, stmt: &Stmt, slot: Slot) -> Node {
        let range = stmt.range();
        match stmt {
            Stmt::FunctionDef(f) => self.function(
                slot,
                range,
                f.name.as_str(),
                &f.decorator_list,
                &f.args,
                &f.body,
            ),
            Stmt::AsyncFunctionDef(f) => self.function(
                slot,
                range,
                f.name.as_str(),
                &f.decorator_list,
                &f.args,
                &f.body,
            ),
            Stmt::ClassDef(c) => {
                let mut node = self.node(NodeKind::Other(OtherKind::Class), slot, range);
                node.detail = Some(c.name.to_string());
                for e in c.decorator_list.iter().chain(&c.bases) {
                    self.header(&mut node, e);
                }
                for k in &c.keywords {
                    self.header(&mut node, &k.value);
                }
                self.block(&mut node, &c.body, Slot::Body);
                node
            }
            Stmt::Return(r) => {
                let mut node = self.node(NodeKind::Return, slot, range);
                if let Some(v) = &r.value {
                    self.header(&mut node, v);
                }
                node
            }
            Stmt::Delete(d) => {
                let mut node = self.node(NodeKind::Other(OtherKind::Delete), slot, range);
                d.targets.iter().for_each(|t| self.header(&mut node, t));
                node
            }
            Stmt::Assign(a) => {
                let mut node = self.node(NodeKind::Assign, slot, range);
                a.targets.iter().for_each(|t| self.header(&mut node, t));
                self.header(&mut node, &a.value);
                node
            }
            Stmt::TypeAlias(t) => {
                let mut node = self.node(NodeKind::Assign, slot, range);
                self.header(&mut node, &t.value);
                node
            }
            Stmt::AugAssign(a) => {
                let mut node = self.node(NodeKind::Assign, slot, range);
                self.header(&mut node, &a.target);
                self.header(&mut node, &a.value);
                node
            }
            Stmt::AnnAssign(a) => {
                let mut node = self.node(NodeKind::Assign, slot, range);
                self.header(&mut node, &a.target);
                if let Some(v) = &a.value {
                    self.header(&mut node, v);
                }
                node
            }
            Stmt::For(f) => self.for_loop(slot, range, &f.target, &f.iter, &f.body, &f.orelse),
            Stmt::AsyncFor(f) => self.for_loop(slot, range, &f.target, &f.iter, &f.body, &f.orelse),
            Stmt::While(w) => {
                let mut node = self.node(NodeKind::While, slot, range);
                self.header(&mut node, &w.test);
                self.block(&mut node, &w.body, Slot::Body);
                self.block(&mut node, &w.orelse, Slot::OrElse);
                node
            }
            Stmt::If(i) => {
                let mut node = self.node(NodeKind::If, slot, range);
                let start = usize::from(range.start());
                node.elif = self.source[start..].starts_with("elif");
                self.header(&mut node, &i.test);
                self.block(&mut node, &i.body, Slot::Body);
                self.block(&mut node, &i.orelse, Slot::OrElse);
                node
            }
            Stmt::With(w) => self.with(slot, range, &w.items, &w.body),
            Stmt::AsyncWith(w) => self.with(slot, range, &w.items, &w.body),
            Stmt::Match(m) => {
                let mut node = self.node(NodeKind::Match, slot, range);
                self.header(&mut node, &m.subject);
                for case in &m.cases {
                    let mut arm = self.node(NodeKind::MatchCase, Slot::Body, case.pattern.range());
                    arm.irrefutable = case.guard.is_none() && pattern_is_irrefutable(&case.pattern);
                    if let Some(guard) = &case.guard {
                        self.header(&mut arm, guard);
                    }
                    self.block(&mut arm, &case.body, Slot::Body);
                    node.children.push(arm);
                }
                node
            }
            Stmt::Raise(r) => {
                let mut node = self.node(NodeKind::Other(OtherKind::Raise), slot, range);
                if let Some(e) = &r.exc {
                    self.header(&mut node, e);
                }
                node
            }
            Stmt::Try(t) => {
                self.try_stmt(slot, range, &t.body, &t.handlers, &t.orelse, &t.finalbody)
            }
            Stmt::TryStar(t) => {
                self.try_stmt(slot, range, &t.body, &t.handlers, &t.orelse, &t.finalbody)
            }
            Stmt::Assert(a) => {
                let mut node = self.node(NodeKind::Other(OtherKind::Assert), slot, range);
                self.header(&mut node, &a.test);
                node
            }
            Stmt::Import(_) | Stmt::ImportFrom(_) => {
                self.node(NodeKind::Other(OtherKind::Import), slot, range)
            }
            Stmt::Global(_) | Stmt::Nonlocal(_) => {
                self.node(NodeKind::Other(OtherKind::Global), slot, range)
            }
            Stmt::Expr(e) => {
                if let Expr::Constant(c) = e.value.as_ref() {
                    if matches!(c.value, ast::Constant::Str(_)) {
                        return self.node(NodeKind::Other(OtherKind::Docstring), slot, range);
                    }
                }
                let mut node = self.node(NodeKind::Expr, slot, range);
                self.header(&mut node, &e.value);
                node
            }
            Stmt::Pass(_) => self.node(NodeKind::Other(OtherKind::Pass), slot, range),
            Stmt::Break(_) => self.node(NodeKind::Other(OtherKind::Break), slot, range),
            Stmt::Continue(_) => self.node(NodeKind::Other(OtherKind::Continue), slot, range),
        }
    }

    fn function(
        &self,
        slot: Slot,
        range: ast::text_size::TextRange,
        name: &str,
        decorators: &[Expr],
        args: &ast::Arguments,
        body: &[Stmt],
    ) -> Node {
        let mut node = self.node(NodeKind::FunctionDef, slot, range);
        node.detail = Some(name.to_string());
        for d in decorators {
            self.header(&mut node, d);
        }
        let defaults = args
            .posonlyargs
            .iter()
            .chain(&args.args)
            .chain(&args.kwonlyargs)
            .filter_map(|a| a.default.as_deref());
        for d in defaults {
            self.header(&mut node, d);
        }
        self.block(&mut node, body, Slot::Body);
        node
    }

    fn for_loop(
        &self,
        slot: Slot,
        range: ast::text_size::TextRange,
        target: &Expr,
        iter: &Expr,
        body: &[Stmt],
        orelse: &[Stmt],
    ) -> Node {
        let mut node = self.node(NodeKind::For, slot, range);
        self.header(&mut node, target);
        self.header(&mut node, iter);
        self.block(&mut node, body, Slot::Body);
        self.block(&mut node, orelse, Slot::OrElse);
        node
    }

    fn with(
        &self,
        slot: Slot,
        range: ast::text_size::TextRange,
        items: &[ast::WithItem],
        body: &[Stmt],
    ) -> Node {
        let mut node = self.node(NodeKind::Other(OtherKind::With), slot, range);
        for item in items {
            self.header(&mut node, &item.context_expr);
        }
        self.block(&mut node, body, Slot::Body);
        node
    }

    fn try_stmt(
        &self,
        slot: Slot,
        range: ast::text_size::TextRange,
        body: &[Stmt],
        handlers: &[ast::ExceptHandler],
        orelse: &[Stmt],
        finalbody: &[Stmt],
    ) -> Node {
        let mut node = self.node(NodeKind::Try, slot, range);
        self.block(&mut node, body, Slot::Body);
        for handler in handlers {
            let ast::ExceptHandler::ExceptHandler(h) = handler;
            let mut child = self.node(NodeKind::ExceptHandler, Slot::Handler, h.range);
            if let Some(ty) = &h.type_ {
                self.header(&mut child, ty);
            }
            self.block(&mut child, &h.body, Slot::Body);
            node.children.push(child);
        }
        self.block(&mut node, orelse, Slot::OrElse);
        self.block(&mut node, finalbody, Slot::Finally);
        node
    }

    /// Collects the supported nodes an expression contains.
    fn expr(&self, expr: &Expr, out: &mut Vec<Node>) {
        match expr {
            Expr::Call(c) => {
                let mut node = self.node(NodeKind::Call, Slot::Header, c.range);
                node.detail = Some(callee_name(&c.func));
                self.expr(&c.func, &mut node.children);
                for a in &c.args {
                    self.expr(a, &mut node.children);
                }
                for k in &c.keywords {
                    self.expr(&k.value, &mut node.children);
                }
                out.push(node);
            }
            Expr::Lambda(l) => {
                let mut node = self.node(NodeKind::Other(OtherKind::Lambda), Slot::Header, l.range);
                self.expr(&l.body, &mut node.children);
                out.push(node);
            }
            Expr::ListComp(c) => self.comprehension(c.range, &[&c.elt], &c.generators, out),
            Expr::SetComp(c) => self.comprehension(c.range, &[&c.elt], &c.generators, out),
            Expr::GeneratorExp(c) => self.comprehension(c.range, &[&c.elt], &c.generators, out),
            Expr::DictComp(c) => {
                self.comprehension(c.range, &[&c.key, &c.value], &c.generators, out)
            }
            Expr::BoolOp(e) => e.values.iter().for_each(|v| self.expr(v, out)),
            Expr::NamedExpr(e) => {
                self.expr(&e.target, out);
                self.expr(&e.value, out);
            }
            Expr::BinOp(e) => {
                self.expr(&e.left, out);
                self.expr(&e.right, out);
            }
            Expr::UnaryOp(e) => self.expr(&e.operand, out),
            Expr::IfExp(e) => {
                self.expr(&e.test, out);
                self.expr(&e.body, out);
                self.expr(&e.orelse, out);
            }
            Expr::Dict(e) => {
                e.keys.iter().flatten().for_each(|k| self.expr(k, out));
                e.values.iter().for_each(|v| self.expr(v, out));
            }
            Expr::Set(e) => e.elts.iter().for_each(|v| self.expr(v, out)),
            Expr::List(e) => e.elts.iter().for_each(|v| self.expr(v, out)),
            Expr::Tuple(e) => e.elts.iter().for_each(|v| self.expr(v, out)),
            Expr::Await(e) => self.expr(&e.value, out),
            Expr::Yield(e) => {
                if let Some(v) = &e.value {
                    self.expr(v, out);
                }
            }
            Expr::YieldFrom(e) => self.expr(&e.value, out),
            Expr::Compare(e) => {
                self.expr(&e.left, out);
                e.comparators.iter().for_each(|v| self.expr(v, out));
            }
            Expr::FormattedValue(e) => self.expr(&e.value, out),
            Expr::JoinedStr(e) => e.values.iter().for_each(|v| self.expr(v, out)),
            Expr::Attribute(e) => self.expr(&e.value, out),
            Expr::Subscript(e) => {
                self.expr(&e.value, out);
                self.expr(&e.slice, out);
            }
            Expr::Starred(e) => self.expr(&e.value, out),
            Expr::Slice(e) => {
                for part in [&e.lower, &e.upper, &e.step].into_iter().flatten() {
                    self.expr(part, out);
                }
            }
            Expr::Constant(_) | Expr::Name(_) => {}
        }
    }

    fn comprehension(
        &self,
        range: ast::text_size::TextRange,
        elts: &[&Expr],
        generators: &[ast::Comprehension],
        out: &mut Vec<Node>,
    ) {
        let mut node = self.node(
            NodeKind::Other(OtherKind::Comprehension),
            Slot::Header,
            range,
        );
        for e in elts {
            self.expr(e, &mut node.children);
        }
        for g in generators {
            self.expr(&g.iter, &mut node.children);
            g.ifs.iter().for_each(|i| self.expr(i, &mut node.children));
        }
        out.push(node);
    }
}

fn callee_name(func: &Expr) -> String {
    match func {
        Expr::Name(n) => n.id.to_string(),
        Expr::Attribute(a) => match a.value.as_ref() {
            Expr::Name(_) | Expr::Attribute(_) => format!("{}.{}", callee_name(&a.value), a.attr),
            _ => format!("<expr>.{}", a.attr),
        },
        _ => "<expr>".to_string(),
    }
}

fn pattern_is_irrefutable(pattern: &Pattern) -> bool {
    match pattern {
        Pattern::MatchAs(p) => p.pattern.as_deref().is_none_or(pattern_is_irrefutable),
        Pattern::MatchOr(p) => p.patterns.iter().any(pattern_is_irrefutable),
        _ => false,
    }
}

/// Counts lines that are neither blank nor comment-only.
pub fn count_loc(source: &str) -> usize {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LISTING: &str = "n = int(input())
l = int(input())
diff = []
for i in range(1, n + 1):
    value = l + i - 1
    if value < 0:
        value = -1 * value
    diff.append(value)
min_index = diff.index(min(diff))
print(min_index)
";

    #[test]
    fn listing_has_one_for_with_an_if_inside() {
        let tree = parse_program(LISTING).unwrap();
        assert_eq!(tree.count(NodeKind::For), 1);
        assert_eq!(tree.count(NodeKind::If), 1);
        let for_node = tree.nodes().find(|n| n.kind == NodeKind::For).unwrap();
        assert_eq!(for_node.lines, LineRange { start: 4, end: 8 });
        let body: Vec<_> = for_node.block(Slot::Body).map(|n| n.kind).collect();
        assert_eq!(body, vec![NodeKind::Assign, NodeKind::If, NodeKind::Expr]);
    }

    #[test]
    fn single_assignment() {
        let tree = parse_program("x = 1").unwrap();
        let kinds: Vec<_> = tree.statements().map(|n| n.kind).collect();
        assert_eq!(kinds, vec![NodeKind::Assign]);
        assert_eq!(tree.root.kind, NodeKind::Module);
    }

    #[test]
    fn unbalanced_parenthesis_is_an_error() {
        let err = parse_program("print((1\n").unwrap_err();
        assert!(err.line >= 1);
        assert!(!err.message.is_empty());
    }

    #[test]
    fn error_position_points_into_source() {
        let err = parse_program("x = 1\ny = (2 +\n").unwrap_err();
        assert!(err.line >= 2, "{err}");
    }

    #[test]
    fn elif_is_marked_and_chained() {
        let src = "if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    if c:\n        x = 3\n";
        let tree = parse_program(src).unwrap();
        let ifs: Vec<_> = tree.nodes().filter(|n| n.kind == NodeKind::If).collect();
        assert_eq!(ifs.len(), 3);
        assert!(!ifs[0].elif);
        assert!(ifs[1].elif);
        assert_eq!(ifs[1].slot, Slot::OrElse);
        assert!(!ifs[2].elif);
    }

    #[test]
    fn class_methods_are_function_defs() {
        let src = "class A:\n    def f(self):\n        return 1\n    def g(self):\n        pass\n";
        let tree = parse_program(src).unwrap();
        assert_eq!(tree.count(NodeKind::FunctionDef), 2);
        assert_eq!(tree.count(NodeKind::Other(OtherKind::Class)), 1);
    }

    #[test]
    fn unsupported_constructs_still_surface_nested_calls() {
        let src = "with open('f') as fh:\n    data = [int(x) for x in fh if check(x)]\nsq = lambda v: pow(v, 2)\n";
        let tree = parse_program(src).unwrap();
        let calls: Vec<_> = tree
            .nodes()
            .filter(|n| n.kind == NodeKind::Call)
            .filter_map(|n| n.detail.clone())
            .collect();
        assert_eq!(calls, vec!["open", "int", "check", "pow"]);
        assert_eq!(tree.count(NodeKind::Other(OtherKind::Comprehension)), 1);
        assert_eq!(tree.count(NodeKind::Other(OtherKind::Lambda)), 1);
    }

    #[test]
    fn match_cases_record_irrefutability() {
        let src = "match p:\n    case (0, 0):\n        pass\n    case x if x:\n        pass\n    case _:\n        pass\n";
        let tree = parse_program(src).unwrap();
        let arms: Vec<_> = tree
            .nodes()
            .filter(|n| n.kind == NodeKind::MatchCase)
            .map(|n| n.irrefutable)
            .collect();
        assert_eq!(arms, vec![false, false, true]);
    }

    #[test]
    fn try_children_are_slotted() {
        let src = "try:\n    a()\nexcept E:\n    b()\nelse:\n    c()\nfinally:\n    d()\n";
        let tree = parse_program(src).unwrap();
        let t = tree.statements().next().unwrap();
        assert_eq!(t.block(Slot::Body).count(), 1);
        assert_eq!(t.block(Slot::Handler).count(), 1);
        assert_eq!(t.block(Slot::OrElse).count(), 1);
        assert_eq!(t.block(Slot::Finally).count(), 1);
    }

    #[test]
    fn child_ranges_nest_in_parents() {
        let tree = parse_program(LISTING).unwrap();
        fn check(node: &Node) {
            for c in &node.children {
                assert!(
                    node.lines.encloses(&c.lines),
                    "{:?} !⊇ {:?}",
                    node.lines,
                    c.lines
                );
                check(c);
            }
        }
        check(&tree.root);
    }

    #[test]
    fn ids_are_preorder() {
        let tree = parse_program(LISTING).unwrap();
        let ids: Vec<_> = tree.nodes().map(|n| n.id.0).collect();
        assert_eq!(ids, (0..ids.len()).collect::<Vec<_>>());
    }

    #[test]
    fn loc_examples() {
        assert_eq!(count_loc(LISTING), 10);
        assert_eq!(count_loc(""), 0);
        assert_eq!(count_loc("# c\n\nx=1\n"), 1);
        assert_eq!(count_loc("def f():\n    # inner\n    return 1\n"), 2);
    }

    #[test]
    fn empty_module_parses() {
        let tree = parse_program("").unwrap();
        assert_eq!(tree.statements().count(), 0);
    }
}
