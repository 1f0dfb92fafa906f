use super::SourceSpan;

/// Pre-order index of a node within its `Program`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeclKind {
    Var,
    Let,
    Const,
}

impl DeclKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeclKind::Var => "var",
            DeclKind::Let => "let",
            DeclKind::Const => "const",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicalOp {
    And,
    Or,
}

impl LogicalOp {
    pub fn as_str(self) -> &'static str {
        match self {
            LogicalOp::And => "&&",
            LogicalOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Eq,
    NotEq,
    StrictEq,
    StrictNotEq,
    In,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Gt,
    LtEq,
    GtEq,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryOp::Eq => "==",
            BinaryOp::NotEq => "!=",
            BinaryOp::StrictEq => "===",
            BinaryOp::StrictNotEq => "!==",
            BinaryOp::In => "in",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::LtEq => "<=",
            BinaryOp::GtEq => ">=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::StrictEq | BinaryOp::StrictNotEq
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
    TypeOf,
    Void,
}

impl UnaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnaryOp::Not => "!",
            UnaryOp::Neg => "-",
            UnaryOp::TypeOf => "typeof ",
            UnaryOp::Void => "void ",
        }
    }
}

/// Node kinds and the layout of their `children`.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// statements
    Program,
    /// declarators
    VarDecl(DeclKind),
    /// `[init]` or `[]`
    Declarator(String),
    /// `[Block]`
    FunctionDecl { name: String, params: Vec<String> },
    /// statements
    Block,
    /// `[test, consequent]` or `[test, consequent, alternate]`
    If,
    /// `[]` or `[argument]`
    Return,
    /// `[expression]`
    ExprStmt,
    /// `[target, value]`
    Assign,
    /// two or more expressions
    Sequence,
    /// `[test, consequent, alternate]`
    Conditional,
    Logical(LogicalOp),
    Binary(BinaryOp),
    /// `[operand]`
    Unary(UnaryOp),
    /// `[callee, args...]`
    Call,
    /// `[object, property]`; a non-computed property is an `Identifier`.
    Member { computed: bool },
    /// Also used for `this`.
    Identifier(String),
    /// `Property` nodes
    ObjectLit,
    /// `[value]`
    Property(String),
    ArrayLit,
    /// `[Block]`
    FunctionExpr {
        name: Option<String>,
        params: Vec<String>,
    },
    /// `[Block]` or `[expression]`
    ArrowExpr { params: Vec<String> },
    StringLit(String),
    NumberLit(f64),
    BoolLit(bool),
    NullLit,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub span: SourceSpan,
    pub children: Vec<Node>,
}

impl Node {
    pub fn is_function(&self) -> bool {
        matches!(
            self.kind,
            NodeKind::FunctionDecl { .. } | NodeKind::FunctionExpr { .. } | NodeKind::ArrowExpr { .. }
        )
    }

    pub fn function_params(&self) -> Option<&[String]> {
        match &self.kind {
            NodeKind::FunctionDecl { params, .. }
            | NodeKind::FunctionExpr { params, .. }
            | NodeKind::ArrowExpr { params } => Some(params),
            _ => None,
        }
    }

    pub fn identifier(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Identifier(n) => Some(n),
            _ => None,
        }
    }

    pub fn string_value(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::StringLit(s) => Some(s),
            _ => None,
        }
    }

    /// Property name of a member expression when statically known
    /// (`a.b` or `a["b"]`).
    pub fn member_property(&self) -> Option<&str> {
        match self.kind {
            NodeKind::Member { computed: false } => self.children[1].identifier(),
            NodeKind::Member { computed: true } => self.children[1].string_value(),
            _ => None,
        }
    }

    /// Dotted access path for identifiers and static member chains, e.g.
    /// `wx.login`, `b.a` for `b["a"]`, `this.data.server`.
    pub fn access_path(&self) -> Option<String> {
        match &self.kind {
            NodeKind::Identifier(n) => Some(n.clone()),
            NodeKind::Member { .. } => {
                let prop = self.member_property()?;
                let base = self.children[0].access_path()?;
                Some(format!("{base}.{prop}"))
            }
            _ => None,
        }
    }

    /// Callee path used for call sites; unresolvable heads render as `?`.
    pub fn callee_path(&self) -> String {
        match &self.kind {
            NodeKind::Identifier(n) => n.clone(),
            NodeKind::Member { .. } => {
                let base = self.children[0].callee_path();
                match self.member_property() {
                    Some(p) => format!("{base}.{p}"),
                    None => format!("{base}[?]"),
                }
            }
            NodeKind::Call => format!("{}()", self.children[0].callee_path()),
            _ => "?".to_string(),
        }
    }

    /// Structural equality ignoring spans and ids.
    pub fn same_shape(&self, other: &Node) -> bool {
        self.kind == other.kind
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_shape(b))
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(Node::count).sum::<usize>()
    }
}

/// Pre-order traversal; `visitor` receives each node and its ancestors
/// (outermost first).
pub fn walk<'a, F>(ast: &'a Node, visitor: &mut F)
where
    F: FnMut(&'a Node, &[&'a Node]),
{
    fn go<'a, F>(node: &'a Node, stack: &mut Vec<&'a Node>, visitor: &mut F)
    where
        F: FnMut(&'a Node, &[&'a Node]),
    {
        visitor(node, stack);
        stack.push(node);
        for c in &node.children {
            go(c, stack, visitor);
        }
        stack.pop();
    }
    let mut stack = Vec::new();
    go(ast, &mut stack, visitor);
}

/// Operands of a logical/comparison expression tree, left to right. Logical,
/// binary, unary and conditional operators are interior nodes; everything
/// else (members, identifiers, literals, calls) is a leaf.
pub fn expression_leaves(expr: &Node) -> Vec<&Node> {
    let mut out = Vec::new();
    fn go<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
        match n.kind {
            NodeKind::Logical(_)
            | NodeKind::Binary(_)
            | NodeKind::Unary(_)
            | NodeKind::Conditional
            | NodeKind::Sequence => n.children.iter().for_each(|c| go(c, out)),
            _ => out.push(n),
        }
    }
    go(expr, &mut out);
    out
}
