//! Graphviz DOT renderings. Every node and every edge is written on its own
//! line, in a fixed order, so outputs are byte-stable and easy to count.

use std::fmt::Write;

use gridsight::{Case, CsmGraph, SpanningTreeCertificate, TreeSplit};

/// A rendered graph with its node and edge counts.
pub struct Dot {
    pub text: String,
    pub nodes: usize,
    pub edges: usize,
}

struct Writer {
    text: String,
    nodes: usize,
    edges: usize,
}

impl Writer {
    fn new(header: &str) -> Self {
        Writer {
            text: format!("{header} {{\n"),
            nodes: 0,
            edges: 0,
        }
    }

    fn line(&mut self, s: &str) {
        let _ = writeln!(self.text, "  {s}");
    }

    fn node(&mut self, id: &str, attrs: &str) {
        let _ = writeln!(self.text, "  \"{id}\" [{attrs}];");
        self.nodes += 1;
    }

    fn edge(&mut self, a: &str, b: &str, attrs: &str) {
        let _ = writeln!(self.text, "  \"{a}\" -- \"{b}\" [{attrs}];");
        self.edges += 1;
    }

    fn finish(mut self) -> Dot {
        self.text.push_str("}\n");
        Dot {
            text: self.text,
            nodes: self.nodes,
            edges: self.edges,
        }
    }
}

/// Critical sets on the left rank, measurements on the right, one edge per
/// membership.
pub fn csm(case: &Case, g: &CsmGraph) -> Dot {
    let mut w = Writer::new("graph csm");
    w.line("rankdir=LR;");
    w.line("subgraph left { rank=same;");
    for &owner in g.graph.left() {
        let id = format!("C:{}", case.label(owner));
        w.node(
            &id,
            &format!("label=\"C^{}\", shape=box", case.label(owner)),
        );
    }
    w.line("}");
    w.line("subgraph right { rank=same;");
    for &m in g.graph.right() {
        let id = format!("M:{}", case.label(m));
        w.node(&id, &format!("label=\"{}\", shape=ellipse", case.label(m)));
    }
    w.line("}");
    for (l, &owner) in g.graph.left().iter().enumerate() {
        for &r in g.graph.neighbors(l) {
            let matched = g.baseline.partner_of_left(l) == Some(r);
            let style = if matched { "style=bold" } else { "style=solid" };
            w.edge(
                &format!("C:{}", case.label(owner)),
                &format!("M:{}", case.label(g.graph.right()[r])),
                style,
            );
        }
    }
    w.finish()
}

fn bus_label(case: &Case, bus: gridsight::BusId) -> String {
    match case.injection_at(bus) {
        Some(m) => format!("{bus}\\n{}", case.label(m)),
        None => bus.to_string(),
    }
}

fn line_label(case: &Case, line: gridsight::LineId) -> String {
    match case.flow_on(line) {
        Some(m) => format!("L{line} {}", case.label(m)),
        None => format!("L{line}"),
    }
}

/// Buses and lines; tree branches are bold when a certificate is given.
pub fn network(case: &Case, cert: Option<&SpanningTreeCertificate>) -> Dot {
    let mut w = Writer::new("graph network");
    for bus in case.buses() {
        w.node(
            &format!("B{}", bus.id),
            &format!("label=\"{}\"", bus_label(case, bus.id)),
        );
    }
    for line in case.lines() {
        let in_tree = cert.is_some_and(|c| c.branches.contains(&line.id));
        let style = if in_tree { "bold" } else { "dashed" };
        w.edge(
            &format!("B{}", line.from),
            &format!("B{}", line.to),
            &format!("label=\"{}\", style={style}", line_label(case, line.id)),
        );
    }
    w.finish()
}

/// The network with both sides of a tree split marked; cut lines are red.
pub fn split(case: &Case, split: &TreeSplit) -> Dot {
    let mut w = Writer::new("graph split");
    for (name, side, colour) in [
        ("n1", &split.n1, "lightblue"),
        ("n2", &split.n2, "lightyellow"),
    ] {
        w.line(&format!("subgraph cluster_{name} {{ label=\"{name}\";"));
        for &bus in side {
            w.node(
                &format!("B{bus}"),
                &format!(
                    "label=\"{}\", style=filled, fillcolor={colour}",
                    bus_label(case, bus)
                ),
            );
        }
        w.line("}");
    }
    for line in case.lines() {
        let style = if line.id == split.cut_branch {
            "color=red, style=bold"
        } else if split.cut_lines.contains(&line.id) {
            "color=red"
        } else if split.b1.contains(&line.id) || split.b2.contains(&line.id) {
            "style=bold"
        } else {
            "style=dashed"
        };
        w.edge(
            &format!("B{}", line.from),
            &format!("B{}", line.to),
            &format!("label=\"{}\", {style}", line_label(case, line.id)),
        );
    }
    w.finish()
}
