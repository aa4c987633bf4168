#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;

pub fn fixtures_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// A generated program plus the counts an independent oracle expects.
#[derive(Debug, Clone)]
pub struct Synth {
    pub source: String,
    /// Branch points: ifs, elifs, loops, handlers, and match dispatch fan-out.
    pub decisions: u32,
    /// Structures that take a nesting penalty: plain ifs, loops, handlers, extra arms.
    pub nestable: u32,
    pub units: u32,
}

struct Block {
    lines: Vec<String>,
    decisions: u32,
    nestable: u32,
}

impl Block {
    fn new() -> Self {
        Block {
            lines: Vec::new(),
            decisions: 0,
            nestable: 0,
        }
    }

    fn absorb(&mut self, other: Block, indent: bool) {
        let pad = if indent { "    " } else { "" };
        self.lines
            .extend(other.lines.into_iter().map(|l| format!("{pad}{l}")));
        self.decisions += other.decisions;
        self.nestable += other.nestable;
    }

    fn line(&mut self, l: impl Into<String>) {
        self.lines.push(l.into());
    }
}

const LEAVES: &[&str] = &[
    "x = 1",
    "print(x)",
    "y = [v for v in x if v]",
    "n += 1",
    "pass",
    "f(x)",
    "z = (lambda q: q + 1)(x)",
];

fn block<R: Rng>(rng: &mut R, depth: u32) -> Block {
    let mut out = Block::new();
    for _ in 0..rng.gen_range(1..=3) {
        let s = stmt(rng, depth);
        out.absorb(s, false);
    }
    out
}

fn stmt<R: Rng>(rng: &mut R, depth: u32) -> Block {
    let mut out = Block::new();
    let choice = if depth >= 4 { 0 } else { rng.gen_range(0..8) };
    match choice {
        0 | 1 => out.line(LEAVES[rng.gen_range(0..LEAVES.len())]),
        2 => {
            out.line("if x > 1:");
            out.absorb(block(rng, depth + 1), true);
            out.decisions += 1;
            out.nestable += 1;
            for k in 0..rng.gen_range(0..=2) {
                out.line(format!("elif x == {k}:"));
                out.absorb(block(rng, depth + 1), true);
                out.decisions += 1;
            }
            if rng.gen_bool(0.5) {
                out.line("else:");
                out.absorb(block(rng, depth + 1), true);
            }
        }
        3 => {
            out.line(format!("for i{depth} in range(3):"));
            out.absorb(block(rng, depth + 1), true);
            out.decisions += 1;
            out.nestable += 1;
            if rng.gen_bool(0.2) {
                out.line("else:");
                out.absorb(block(rng, depth + 1), true);
            }
        }
        4 => {
            out.line("while x < 3:");
            out.absorb(block(rng, depth + 1), true);
            out.decisions += 1;
            out.nestable += 1;
        }
        5 => {
            out.line("try:");
            out.absorb(block(rng, depth + 1), true);
            let handlers = rng.gen_range(1..=3);
            for h in 0..handlers {
                out.line(format!("except E{h}:"));
                out.absorb(block(rng, depth + 1), true);
            }
            out.decisions += handlers;
            out.nestable += handlers;
            if rng.gen_bool(0.3) {
                out.line("else:");
                out.absorb(block(rng, depth + 1), true);
            }
            if rng.gen_bool(0.3) {
                out.line("finally:");
                out.absorb(block(rng, depth + 1), true);
            }
        }
        6 => {
            out.line("match x:");
            let arms = rng.gen_range(1..=3u32);
            let exhaustive = rng.gen_bool(0.5);
            for a in 0..arms {
                let pattern = if exhaustive && a == arms - 1 {
                    "_".to_string()
                } else {
                    a.to_string()
                };
                let mut arm = Block::new();
                arm.line(format!("case {pattern}:"));
                arm.absorb(block(rng, depth + 1), true);
                out.absorb(arm, true);
            }
            // Without a catch-all arm the subject can also match nothing.
            out.decisions += arms - 1 + u32::from(!exhaustive);
            out.nestable += arms - 1;
        }
        _ => {
            out.line("with ctx():");
            out.absorb(block(rng, depth + 1), true);
        }
    }
    out
}

/// A structured program without short-circuit conditions, `break`, `continue` or `return`.
/// With `in_function` the body sits in a function that the top level calls once.
pub fn random_program<R: Rng>(rng: &mut R, in_function: bool) -> Synth {
    let body = block(rng, 0);
    let mut source = String::new();
    if in_function {
        source.push_str("def f(x):\n");
        for l in &body.lines {
            source.push_str("    ");
            source.push_str(l);
            source.push('\n');
        }
        source.push_str("f(1)\n");
    } else {
        for l in &body.lines {
            source.push_str(l);
            source.push('\n');
        }
    }
    Synth {
        source,
        decisions: body.decisions,
        nestable: body.nestable,
        units: if in_function { 2 } else { 1 },
    }
}

/// Wraps the entire program in one more loop.
pub fn wrap_in_loop(source: &str) -> String {
    let mut out = String::from("for wrap in range(2):\n");
    for l in source.lines() {
        out.push_str("    ");
        out.push_str(l);
        out.push('\n');
    }
    out
}
