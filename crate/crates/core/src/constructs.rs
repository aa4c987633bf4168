//! Construct labels for subject programs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::syntax::{Node, NodeKind, Slot, SyntaxTree};

/// Declaration order is the display order used by reports (B, F, I, M, NI, NL, T, W).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstructTag {
    Basic,
    For,
    If,
    Match,
    NestedIfs,
    NestedLoops,
    Try,
    While,
}

impl ConstructTag {
    pub const ALL: [ConstructTag; 8] = [
        ConstructTag::Basic,
        ConstructTag::For,
        ConstructTag::If,
        ConstructTag::Match,
        ConstructTag::NestedIfs,
        ConstructTag::NestedLoops,
        ConstructTag::Try,
        ConstructTag::While,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            ConstructTag::Basic => "B",
            ConstructTag::For => "F",
            ConstructTag::If => "I",
            ConstructTag::Match => "M",
            ConstructTag::NestedIfs => "NI",
            ConstructTag::NestedLoops => "NL",
            ConstructTag::Try => "T",
            ConstructTag::While => "W",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstructTag::Basic => "Basic",
            ConstructTag::For => "For",
            ConstructTag::If => "If",
            ConstructTag::Match => "Match",
            ConstructTag::NestedIfs => "NestedIfs",
            ConstructTag::NestedLoops => "NestedLoops",
            ConstructTag::Try => "Try",
            ConstructTag::While => "While",
        }
    }
}

impl fmt::Display for ConstructTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstructTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstructTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s) || t.abbreviation() == s)
            .ok_or_else(|| format!("unknown construct tag `{s}`"))
    }
}

/// Non-empty label set; `Basic` appears only on its own.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ConstructTags(BTreeSet<ConstructTag>);

impl ConstructTags {
    /// Builds a tag set from the structural labels found; an empty set becomes `{Basic}`.
    pub fn from_found(found: impl IntoIterator<Item = ConstructTag>) -> Self {
        let mut tags: BTreeSet<_> = found
            .into_iter()
            .filter(|t| *t != ConstructTag::Basic)
            .collect();
        if tags.is_empty() {
            tags.insert(ConstructTag::Basic);
        }
        ConstructTags(tags)
    }

    pub fn contains(&self, tag: ConstructTag) -> bool {
        self.0.contains(&tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = ConstructTag> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks the set-level invariants.
    pub fn is_well_formed(&self) -> bool {
        let has = |t| self.0.contains(&t);
        !self.0.is_empty()
            && (has(ConstructTag::Basic) == (self.0.len() == 1 && has(ConstructTag::Basic)))
            && (!has(ConstructTag::NestedLoops)
                || has(ConstructTag::For)
                || has(ConstructTag::While))
            && (!has(ConstructTag::NestedIfs) || has(ConstructTag::If))
    }
}

impl fmt::Display for ConstructTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.0.iter().map(|t| t.name()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

#[derive(Clone, Copy, Default)]
struct Nesting {
    loops: u32,
    ifs: u32,
}

pub fn tag_constructs(tree: &SyntaxTree) -> ConstructTags {
    let mut found = BTreeSet::new();
    visit(&tree.root, Nesting::default(), &mut found);
    ConstructTags::from_found(found)
}

fn visit(node: &Node, nesting: Nesting, found: &mut BTreeSet<ConstructTag>) {
    let mut inner = nesting;
    match node.kind {
        NodeKind::FunctionDef => inner = Nesting::default(),
        NodeKind::For | NodeKind::While => {
            found.insert(if node.kind == NodeKind::For {
                ConstructTag::For
            } else {
                ConstructTag::While
            });
            if nesting.loops > 0 {
                found.insert(ConstructTag::NestedLoops);
            }
            inner.loops += 1;
        }
        NodeKind::If => {
            found.insert(ConstructTag::If);
            // An elif continues its parent's chain: it sits at the chain's
            // depth, so only a fresh `if` under an open chain counts.
            if !node.elif && nesting.ifs > 0 {
                found.insert(ConstructTag::NestedIfs);
            }
            inner.ifs += 1;
            for child in &node.children {
                let depth =
                    if child.kind == NodeKind::If && child.elif && child.slot == Slot::OrElse {
                        nesting
                    } else {
                        inner
                    };
                visit(child, depth, found);
            }
            return;
        }
        NodeKind::Match => {
            found.insert(ConstructTag::Match);
        }
        NodeKind::Try => {
            found.insert(ConstructTag::Try);
        }
        _ => {}
    }
    for child in &node.children {
        visit(child, inner, found);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;
    use proptest::prelude::*;
    use ConstructTag::*;

    fn tags(src: &str) -> Vec<ConstructTag> {
        tag_constructs(&parse_program(src).unwrap())
            .iter()
            .collect()
    }

    #[test]
    fn listing_tags_for_and_if() {
        let src = "n = int(input())\nl = int(input())\ndiff = []\nfor i in range(1, n + 1):\n    value = l + i - 1\n    if value < 0:\n        value = -1 * value\n    diff.append(value)\nmin_index = diff.index(min(diff))\nprint(min_index)\n";
        assert_eq!(tags(src), vec![For, If]);
    }

    #[test]
    fn straight_line_is_basic() {
        assert_eq!(tags("x = 1"), vec![Basic]);
        assert_eq!(tags(""), vec![Basic]);
    }

    #[test]
    fn for_inside_while_nests() {
        let src = "i = 0\nwhile i < 3:\n    for j in range(i):\n        print(j)\n    i += 1\n";
        assert_eq!(tags(src), vec![For, NestedLoops, While]);
    }

    #[test]
    fn elif_chain_is_not_nested() {
        let src = "if a:\n    x = 1\nelif b:\n    x = 2\nelif c:\n    x = 3\nelse:\n    x = 4\n";
        assert_eq!(tags(src), vec![If]);
    }

    #[test]
    fn if_in_else_block_is_nested() {
        let src = "if a:\n    x = 1\nelse:\n    if b:\n        x = 2\n";
        assert_eq!(tags(src), vec![If, NestedIfs]);
    }

    #[test]
    fn if_inside_elif_body_is_nested() {
        let src = "if a:\n    x = 1\nelif b:\n    if c:\n        x = 2\n";
        assert_eq!(tags(src), vec![If, NestedIfs]);
    }

    #[test]
    fn if_inside_for_is_not_nested() {
        assert_eq!(
            tags("for i in x:\n    if i:\n        pass\n"),
            vec![For, If]
        );
    }

    #[test]
    fn if_through_loop_still_nests() {
        let src = "if a:\n    for i in x:\n        if i:\n            pass\n";
        assert_eq!(tags(src), vec![For, If, NestedIfs]);
    }

    #[test]
    fn nesting_stops_at_function_boundaries() {
        let src = "for i in range(3):\n    def f():\n        for j in range(2):\n            pass\n    f()\n";
        assert_eq!(tags(src), vec![For]);
    }

    #[test]
    fn match_and_try() {
        let src = "match x:\n    case 1:\n        pass\ntry:\n    pass\nexcept E:\n    pass\n";
        assert_eq!(tags(src), vec![Match, Try]);
    }

    #[test]
    fn abbreviations_round_trip() {
        for tag in ConstructTag::ALL {
            assert_eq!(tag.abbreviation().parse::<ConstructTag>().unwrap(), tag);
            assert_eq!(tag.name().parse::<ConstructTag>().unwrap(), tag);
        }
    }

    /// Small random structured programs, rendered with a random indent width.
    fn program() -> impl Strategy<Value = (Vec<String>, usize)> {
        let leaf = prop_oneof![
            Just(vec!["x = 1".to_string()]),
            Just(vec!["print(x)".to_string()]),
        ];
        let stmt = leaf.prop_recursive(4, 24, 3, |inner| {
            let block = prop::collection::vec(inner, 1..3).prop_map(|b| b.concat());
            prop_oneof![(0u8..5, block.clone(), block).prop_map(|(k, a, b)| {
                let mut out = Vec::new();
                let indent =
                    |v: &Vec<String>| v.iter().map(|l| format!("\t{l}")).collect::<Vec<_>>();
                match k {
                    0 => {
                        out.push("if x:".into());
                        out.extend(indent(&a));
                        out.push("else:".into());
                        out.extend(indent(&b));
                    }
                    1 => {
                        out.push("for i in y:".into());
                        out.extend(indent(&a));
                    }
                    2 => {
                        out.push("while x:".into());
                        out.extend(indent(&a));
                    }
                    3 => {
                        out.push("try:".into());
                        out.extend(indent(&a));
                        out.push("except E:".into());
                        out.extend(indent(&b));
                    }
                    _ => {
                        out.push("match x:".into());
                        out.push("\tcase 1:".into());
                        out.extend(indent(&indent(&a)));
                    }
                }
                out
            }),]
        });
        (
            prop::collection::vec(stmt, 1..4).prop_map(|v| v.concat()),
            1usize..5,
        )
    }

    fn render(lines: &[String], width: usize, rename: bool) -> String {
        let pad = " ".repeat(width);
        let mut out = String::new();
        for line in lines {
            let mut l = line.replace('\t', &pad);
            if rename {
                l = rename_word(&rename_word(&l, "x", "renamed_x"), "i", "idx");
            }
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    fn rename_word(line: &str, from: &str, to: &str) -> String {
        let ident = |c: char| c.is_alphanumeric() || c == '_';
        let mut out = String::new();
        let mut word = String::new();
        for c in line.chars().chain(std::iter::once(' ')) {
            if ident(c) {
                word.push(c);
                continue;
            }
            out.push_str(if word == from { to } else { &word });
            word.clear();
            out.push(c);
        }
        out.pop();
        out
    }

    proptest! {
        #[test]
        fn tag_sets_are_well_formed((lines, width) in program()) {
            let src = render(&lines, width, false);
            let tags = tag_constructs(&parse_program(&src).unwrap());
            prop_assert!(tags.is_well_formed(), "{} -> {}", src, tags);
        }

        #[test]
        fn tags_ignore_renaming_and_indentation((lines, width) in program()) {
            let a = tag_constructs(&parse_program(&render(&lines, width, false)).unwrap());
            let b = tag_constructs(&parse_program(&render(&lines, 4, true)).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
