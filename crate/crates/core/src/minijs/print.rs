use super::ast::{Node, NodeKind};

/// Renders an AST back to MiniJS source. Compound expressions are fully
/// parenthesized, so `parse(print(ast))` has the same shape as `ast`.
pub fn print(ast: &Node) -> String {
    let mut out = String::new();
    stmt(ast, &mut out);
    out
}

fn stmts(nodes: &[Node], out: &mut String) {
    for n in nodes {
        stmt(n, out);
        out.push('\n');
    }
}

fn stmt(n: &Node, out: &mut String) {
    match &n.kind {
        NodeKind::Program => stmts(&n.children, out),
        NodeKind::Block => {
            out.push_str("{\n");
            stmts(&n.children, out);
            out.push('}');
        }
        NodeKind::VarDecl(kind) => {
            out.push_str(kind.as_str());
            out.push(' ');
            for (i, d) in n.children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let NodeKind::Declarator(name) = &d.kind {
                    out.push_str(name);
                }
                if let Some(init) = d.children.first() {
                    out.push_str(" = ");
                    expr(init, out);
                }
            }
            out.push(';');
        }
        NodeKind::FunctionDecl { name, params } => {
            out.push_str("function ");
            out.push_str(name);
            params_list(params, out);
            out.push(' ');
            stmt(&n.children[0], out);
        }
        NodeKind::If => {
            out.push_str("if (");
            expr(&n.children[0], out);
            out.push_str(") ");
            stmt(&n.children[1], out);
            if let Some(alt) = n.children.get(2) {
                out.push_str(" else ");
                stmt(alt, out);
            }
        }
        NodeKind::Return => {
            out.push_str("return");
            if let Some(a) = n.children.first() {
                out.push(' ');
                expr(a, out);
            }
            out.push(';');
        }
        NodeKind::ExprStmt => {
            out.push('(');
            expr(&n.children[0], out);
            out.push_str(");");
        }
        _ => {
            out.push('(');
            expr(n, out);
            out.push_str(");");
        }
    }
}

fn params_list(params: &[String], out: &mut String) {
    out.push('(');
    out.push_str(&params.join(", "));
    out.push(')');
}

fn list(items: &[Node], out: &mut String) {
    for (i, c) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(c, out);
    }
}

fn expr(n: &Node, out: &mut String) {
    match &n.kind {
        NodeKind::Identifier(name) => out.push_str(name),
        NodeKind::StringLit(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"))
        }
        NodeKind::NumberLit(v) => out.push_str(&format!("{v}")),
        NodeKind::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        NodeKind::NullLit => out.push_str("null"),
        NodeKind::Assign => {
            out.push('(');
            expr(&n.children[0], out);
            out.push_str(" = ");
            expr(&n.children[1], out);
            out.push(')');
        }
        NodeKind::Sequence => {
            out.push('(');
            list(&n.children, out);
            out.push(')');
        }
        NodeKind::Conditional => {
            out.push('(');
            expr(&n.children[0], out);
            out.push_str(" ? ");
            expr(&n.children[1], out);
            out.push_str(" : ");
            expr(&n.children[2], out);
            out.push(')');
        }
        NodeKind::Logical(op) => bin(n, op.as_str(), out),
        NodeKind::Binary(op) => bin(n, op.as_str(), out),
        NodeKind::Unary(op) => {
            out.push('(');
            out.push_str(op.as_str());
            expr(&n.children[0], out);
            out.push(')');
        }
        NodeKind::Call => {
            expr(&n.children[0], out);
            out.push('(');
            list(&n.children[1..], out);
            out.push(')');
        }
        NodeKind::Member { computed } => {
            expr(&n.children[0], out);
            if *computed {
                out.push('[');
                expr(&n.children[1], out);
                out.push(']');
            } else {
                out.push('.');
                expr(&n.children[1], out);
            }
        }
        NodeKind::ObjectLit => {
            out.push_str("({");
            for (i, p) in n.children.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let NodeKind::Property(key) = &p.kind {
                    out.push_str(&serde_json::to_string(key).expect("key serializes"));
                }
                out.push_str(": ");
                expr(&p.children[0], out);
            }
            out.push_str("})");
        }
        NodeKind::ArrayLit => {
            out.push('[');
            list(&n.children, out);
            out.push(']');
        }
        NodeKind::FunctionExpr { name, params } => {
            out.push_str("(function");
            if let Some(name) = name {
                out.push(' ');
                out.push_str(name);
            }
            params_list(params, out);
            out.push(' ');
            stmt(&n.children[0], out);
            out.push(')');
        }
        NodeKind::ArrowExpr { params } => {
            out.push('(');
            params_list(params, out);
            out.push_str(" => ");
            let body = &n.children[0];
            if body.kind == NodeKind::Block {
                stmt(body, out);
            } else {
                out.push('(');
                expr(body, out);
                out.push(')');
            }
            out.push(')');
        }
        // statements never appear in expression position
        _ => stmt(n, out),
    }
}

fn bin(n: &Node, op: &str, out: &mut String) {
    out.push('(');
    expr(&n.children[0], out);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    expr(&n.children[1], out);
    out.push(')');
}
