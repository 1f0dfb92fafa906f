//! Backward slicing and successor tracking over MiniJS ASTs.
//!
//! Every function (and the module top level) gets a [`FunctionSummary`]
//! listing what it declares and what it calls. [`PackageFlow::resolve`]
//! walks an expression back to the literal values that flow into it, and
//! [`PackageFlow::successors`] follows what runs after a call returns:
//! later elements of a comma sequence, `.then(fn)` continuations and the
//! `success`/`fail`/`complete` callbacks of the call's option object.
//!
//! Resolution is intraprocedural. An identifier that is not declared in its
//! file may resolve to a top-level declaration of another file of the same
//! package; such results are flagged as cross-file.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::minijs::{walk, BinaryOp, Node, NodeId, NodeKind, SourceSpan, UnaryOp};

pub const DEFAULT_SUCCESSOR_DEPTH: usize = 8;
const MAX_RESOLVE_DEPTH: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Num(f64),
    Bool(bool),
    Null,
}

impl Literal {
    pub fn truthy(&self) -> bool {
        match self {
            Literal::Str(s) => !s.is_empty(),
            Literal::Num(n) => *n != 0.0 && !n.is_nan(),
            Literal::Bool(b) => *b,
            Literal::Null => false,
        }
    }

    /// JavaScript `ToString` for the values MiniJS literals can produce.
    pub fn js_string(&self) -> String {
        match self {
            Literal::Str(s) => s.clone(),
            Literal::Num(n) => js_number_string(*n),
            Literal::Bool(b) => b.to_string(),
            Literal::Null => "null".into(),
        }
    }
}

fn js_number_string(n: f64) -> String {
    if n.is_nan() {
        "NaN".into()
    } else if n.is_infinite() {
        if n > 0.0 { "Infinity" } else { "-Infinity" }.into()
    } else if n == n.trunc() && n.abs() < 1e21 {
        format!("{}", n as i128)
    } else {
        format!("{n}")
    }
}

/// Result of backward resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum AbstractValue {
    Const(Literal),
    /// Object literal after folding property writes, last write wins.
    ObjectShape(BTreeMap<String, AbstractValue>),
    List(Vec<AbstractValue>),
    Function { file: usize, node: NodeId },
    /// Unknown value reached through a free global or a parameter, kept as
    /// its access path (`wx.login`, `t.referrerInfo`).
    Ref(String),
    Unknown,
}

impl AbstractValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AbstractValue::Const(Literal::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AbstractValue::Const(Literal::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn get(&self, key: &str) -> Option<&AbstractValue> {
        match self {
            AbstractValue::ObjectShape(m) => m.get(key),
            _ => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, AbstractValue::Unknown | AbstractValue::Ref(_))
    }

    pub fn ref_path(&self) -> Option<&str> {
        match self {
            AbstractValue::Ref(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for AbstractValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractValue::Const(Literal::Str(s)) => write!(f, "{s:?}"),
            AbstractValue::Const(l) => write!(f, "{}", l.js_string()),
            AbstractValue::ObjectShape(m) => {
                write!(f, "{{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                write!(f, "}}")
            }
            AbstractValue::List(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
            AbstractValue::Function { .. } => write!(f, "<function>"),
            AbstractValue::Ref(p) => write!(f, "<{p}>"),
            AbstractValue::Unknown => write!(f, "<unknown>"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Declaration<'a> {
    /// A `var`/`let`/`const` declarator (the first one, if repeated).
    Var(&'a Node),
    Function(&'a Node),
    Param { function: &'a Node, index: usize },
}

impl Declaration<'_> {
    pub fn node(&self) -> &Node {
        match self {
            Declaration::Var(n) | Declaration::Function(n) => n,
            Declaration::Param { function, .. } => function,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CallSite<'a> {
    pub file: usize,
    pub node: &'a Node,
    /// Syntactic callee path, e.g. `wx.login`, `t.data.server.addService`.
    pub callee: String,
    pub span: SourceSpan,
}

impl<'a> CallSite<'a> {
    fn new(file: usize, node: &'a Node) -> Self {
        CallSite {
            file,
            node,
            callee: node.children[0].callee_path(),
            span: node.span.clone(),
        }
    }

    pub fn args(&self) -> &'a [Node] {
        &self.node.children[1..]
    }

    /// Last segment of the callee path.
    pub fn method(&self) -> &str {
        self.callee.rsplit('.').next().unwrap_or(&self.callee)
    }
}

#[derive(Debug)]
pub struct FunctionSummary<'a> {
    /// The function node, or the `Program` for the top level.
    pub function: &'a Node,
    pub parent: Option<usize>,
    pub declared_vars: BTreeMap<String, Declaration<'a>>,
    pub call_sites: Vec<CallSite<'a>>,
}

/// One summary per function scope plus one for the top level (index 0).
pub fn summarize(ast: &Node) -> Vec<FunctionSummary<'_>> {
    FileFlow::new(ast, 0).summaries
}

#[derive(Debug, Clone)]
struct Write<'a> {
    /// `hi` of the write; it takes effect for uses at or after this offset.
    end: u32,
    path: Vec<String>,
    value: &'a Node,
    straight: bool,
    nested: bool,
}

pub struct FileFlow<'a> {
    pub ast: &'a Node,
    pub summaries: Vec<FunctionSummary<'a>>,
    file: usize,
    nodes: Vec<&'a Node>,
    parent: Vec<Option<NodeId>>,
    /// Innermost scope of each node; a function node belongs to its outer scope.
    scope_of: Vec<usize>,
    scope_by_fn: HashMap<NodeId, usize>,
    writes: HashMap<(usize, String), Vec<Write<'a>>>,
    /// Bindings whose object may also be reachable some other way: stored
    /// into a container, read out of one, or copied across scopes.
    escaped: HashSet<(usize, String)>,
    /// Bindings written through a property key that is not static.
    wild: HashSet<(usize, String)>,
    /// Some write may mutate an object through a path other than its own
    /// binding; shared objects cannot be trusted then.
    foreign_writes: bool,
}

impl<'a> FileFlow<'a> {
    pub fn new(ast: &'a Node, file: usize) -> Self {
        let n = ast.count();
        let mut nodes: Vec<&'a Node> = Vec::with_capacity(n);
        let mut parent = vec![None; n];
        let mut scope_of = vec![0usize; n];
        let mut summaries = vec![FunctionSummary {
            function: ast,
            parent: None,
            declared_vars: BTreeMap::new(),
            call_sites: Vec::new(),
        }];
        let mut scope_by_fn = HashMap::new();
        scope_by_fn.insert(ast.id, 0);

        walk(ast, &mut |node: &'a Node, anc: &[&'a Node]| {
            debug_assert_eq!(node.id.0 as usize, nodes.len());
            nodes.push(node);
            if let Some(p) = anc.last() {
                parent[node.id.0 as usize] = Some(p.id);
            }
            // innermost enclosing function strictly above this node
            let outer = anc
                .iter()
                .rev()
                .find(|a| a.is_function())
                .map(|f| scope_by_fn[&f.id])
                .unwrap_or(0);
            scope_of[node.id.0 as usize] = outer;
            if node.is_function() {
                let idx = summaries.len();
                summaries.push(FunctionSummary {
                    function: node,
                    parent: Some(outer),
                    declared_vars: BTreeMap::new(),
                    call_sites: Vec::new(),
                });
                scope_by_fn.insert(node.id, idx);
            }
        });

        let mut flow = FileFlow {
            ast,
            summaries,
            file,
            nodes,
            parent,
            scope_of,
            scope_by_fn,
            writes: HashMap::new(),
            escaped: HashSet::new(),
            wild: HashSet::new(),
            foreign_writes: false,
        };
        flow.collect_declarations();
        flow.collect_writes();
        flow
    }

    fn collect_declarations(&mut self) {
        for idx in 0..self.nodes.len() {
            let node = self.nodes[idx];
            let scope = self.scope_of[idx];
            match &node.kind {
                NodeKind::Declarator(name) => {
                    self.summaries[scope]
                        .declared_vars
                        .entry(name.clone())
                        .or_insert(Declaration::Var(node));
                }
                NodeKind::FunctionDecl { name, params } => {
                    self.summaries[scope]
                        .declared_vars
                        .entry(name.clone())
                        .or_insert(Declaration::Function(node));
                    self.declare_params(node, params);
                }
                NodeKind::FunctionExpr { name, params } => {
                    if let Some(name) = name {
                        let own = self.scope_by_fn[&node.id];
                        self.summaries[own]
                            .declared_vars
                            .entry(name.clone())
                            .or_insert(Declaration::Function(node));
                    }
                    self.declare_params(node, params);
                }
                NodeKind::ArrowExpr { params } => self.declare_params(node, params),
                NodeKind::Call => {
                    let site = CallSite::new(self.file, node);
                    self.summaries[scope].call_sites.push(site);
                }
                _ => {}
            }
        }
    }

    fn declare_params(&mut self, function: &'a Node, params: &[String]) {
        let own = self.scope_by_fn[&function.id];
        for (index, p) in params.iter().enumerate() {
            self.summaries[own]
                .declared_vars
                .insert(p.clone(), Declaration::Param { function, index });
        }
    }

    fn collect_writes(&mut self) {
        for idx in 0..self.nodes.len() {
            let node = self.nodes[idx];
            let scope = self.scope_of[idx];
            let (name, path, value) = match &node.kind {
                NodeKind::Declarator(name) => match node.children.first() {
                    Some(init) => (name.clone(), Vec::new(), init),
                    None => continue,
                },
                NodeKind::Assign => {
                    let Some((root, path)) = write_target(&node.children[0]) else {
                        if let Some(root) = member_root(&node.children[0]) {
                            if let Some(b) = self.lookup_scope(root, scope) {
                                self.wild.insert((b, root.to_string()));
                            }
                        }
                        continue;
                    };
                    (root, path, &node.children[1])
                }
                _ => continue,
            };
            let Some(binding) = self.lookup_scope(&name, scope) else {
                continue;
            };
            let write = Write {
                end: node.span.hi,
                path,
                value,
                straight: binding == scope && self.is_top_of_scope(node, binding),
                nested: binding != scope,
            };
            self.writes.entry((binding, name)).or_default().push(write);
        }
        for list in self.writes.values_mut() {
            list.sort_by_key(|w| w.end);
        }
        self.collect_escapes();
    }

    fn collect_escapes(&mut self) {
        let mut escaped = HashSet::new();
        // bindings holding an object that some container may also hold
        let mut derived = HashSet::new();
        for idx in 0..self.nodes.len() {
            let node = self.nodes[idx];
            let Some(name) = node.identifier() else { continue };
            let Some(parent) = self.parent[idx].map(|p| self.nodes[p.0 as usize]) else {
                continue;
            };
            let is_value = |i: usize| parent.children.get(i).is_some_and(|c| std::ptr::eq(c, node));
            let stored = match parent.kind {
                NodeKind::Property(_) | NodeKind::ArrayLit => true,
                NodeKind::Assign => {
                    is_value(1)
                        && (matches!(parent.children[0].kind, NodeKind::Member { .. })
                            || write_target(&parent.children[0]).is_some_and(|(target, _)| {
                                self.lookup_scope(&target, self.scope_of[idx])
                                    != self.lookup_scope(name, self.scope_of[idx])
                            }))
                }
                NodeKind::Declarator(_) => self.scope_of[idx] != self.lookup_scope(name, self.scope_of[idx]).unwrap_or(usize::MAX),
                _ => false,
            };
            if stored {
                if let Some(b) = self.lookup_scope(name, self.scope_of[idx]) {
                    escaped.insert((b, name.to_string()));
                }
                // the receiving side of a cross-scope copy is a second handle
                if let NodeKind::Declarator(target) = &parent.kind {
                    derived.insert((self.scope_of[idx], target.clone()));
                }
            }
        }
        for (key, ws) in &self.writes {
            let fresh = |v: &Node| {
                matches!(
                    v.kind,
                    NodeKind::ObjectLit
                        | NodeKind::ArrayLit
                        | NodeKind::Identifier(_)
                        | NodeKind::StringLit(_)
                        | NodeKind::NumberLit(_)
                        | NodeKind::BoolLit(_)
                        | NodeKind::NullLit
                        | NodeKind::FunctionExpr { .. }
                        | NodeKind::ArrowExpr { .. }
                )
            };
            if ws.iter().any(|w| w.path.is_empty() && !fresh(w.value)) {
                derived.insert(key.clone());
            }
        }
        // `this.a.b = v` may reach any object stored on `this`
        let this_deep = self.nodes.iter().any(|n| {
            matches!(n.kind, NodeKind::Assign)
                && member_depth(&n.children[0]) >= 2
                && n.children[0].access_path().is_none_or(|p| p.starts_with("this."))
        });
        self.foreign_writes = this_deep
            || !self.wild.is_empty()
            || self.writes.iter().any(|(key, ws)| {
                ws.iter().any(|w| {
                    w.path.len() >= 2
                        || (!w.path.is_empty() && derived.contains(key))
                })
            });
        escaped.extend(derived);
        self.escaped = escaped;
    }

    /// Whether a declarator or assignment runs unconditionally as a
    /// statement directly in the body of `scope`.
    fn is_top_of_scope(&self, node: &Node, scope: usize) -> bool {
        let body = self.scope_body(scope);
        let mut cur = node.id;
        loop {
            let Some(p) = self.parent[cur.0 as usize] else {
                return false;
            };
            let pn = self.nodes[p.0 as usize];
            match pn.kind {
                NodeKind::VarDecl(_) | NodeKind::ExprStmt | NodeKind::Sequence => cur = p,
                _ => {
                    return std::ptr::eq(pn, body)
                        && matches!(
                            self.nodes[cur.0 as usize].kind,
                            NodeKind::VarDecl(_) | NodeKind::ExprStmt
                        )
                }
            }
        }
    }

    fn scope_body(&self, scope: usize) -> &'a Node {
        let f = self.summaries[scope].function;
        match f.kind {
            NodeKind::Program => f,
            _ => &f.children[0],
        }
    }

    fn lookup_scope(&self, name: &str, mut scope: usize) -> Option<usize> {
        loop {
            if self.summaries[scope].declared_vars.contains_key(name) {
                return Some(scope);
            }
            scope = self.summaries[scope].parent?;
        }
    }

    pub fn node(&self, id: NodeId) -> &'a Node {
        self.nodes[id.0 as usize]
    }

    pub fn parent_of(&self, node: &Node) -> Option<&'a Node> {
        self.parent[node.id.0 as usize].map(|p| self.node(p))
    }

    /// Scope index of the innermost function containing `node`.
    pub fn scope_of(&self, node: &Node) -> usize {
        self.scope_of[node.id.0 as usize]
    }

    pub fn call_sites(&self) -> impl Iterator<Item = &CallSite<'a>> {
        let mut all: Vec<&CallSite<'a>> =
            self.summaries.iter().flat_map(|s| s.call_sites.iter()).collect();
        all.sort_by_key(|c| c.node.id);
        all.into_iter()
    }
}

fn forget_objects(v: &mut AbstractValue) {
    if matches!(v, AbstractValue::ObjectShape(_) | AbstractValue::List(_)) {
        *v = AbstractValue::Unknown;
    }
}

fn class_is_wild(ff: &FileFlow<'_>, scope: usize, class: &[String]) -> bool {
    class.iter().any(|m| ff.wild.contains(&(scope, m.clone())))
}

fn member_depth(target: &Node) -> usize {
    match target.kind {
        NodeKind::Member { .. } => 1 + member_depth(&target.children[0]),
        _ => 0,
    }
}

/// Root identifier of a member chain, whatever its keys.
fn member_root(target: &Node) -> Option<&str> {
    match &target.kind {
        NodeKind::Identifier(n) if n != "this" => Some(n),
        NodeKind::Member { .. } => member_root(&target.children[0]),
        _ => None,
    }
}

/// Root variable and property path of an assignment target such as
/// `a`, `a.x`, `a["x"].y`.
fn write_target(target: &Node) -> Option<(String, Vec<String>)> {
    match &target.kind {
        NodeKind::Identifier(n) if n != "this" => Some((n.clone(), Vec::new())),
        NodeKind::Member { .. } => {
            let prop = target.member_property()?.to_string();
            let (root, mut path) = write_target(&target.children[0])?;
            path.push(prop);
            Some((root, path))
        }
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct SuccessorChain<'a> {
    pub origin: CallSite<'a>,
    pub successors: Vec<CallSite<'a>>,
    /// Set when the depth limit cut the search short.
    pub truncated: bool,
}

impl SuccessorChain<'_> {
    pub fn contains_callee(&self, pred: impl Fn(&str) -> bool) -> bool {
        self.successors.iter().any(|s| pred(&s.callee))
    }
}

/// All files of one package.
pub struct PackageFlow<'a> {
    pub files: Vec<FileFlow<'a>>,
    /// Top-level names per file, for cross-file lookups.
    globals: HashMap<String, Vec<usize>>,
    pub successor_depth: usize,
}

struct Ctx {
    depth: usize,
    cross_file: bool,
}

impl<'a> PackageFlow<'a> {
    pub fn new(asts: &[&'a Node]) -> Self {
        let files: Vec<FileFlow<'a>> = asts
            .iter()
            .enumerate()
            .map(|(i, ast)| FileFlow::new(ast, i))
            .collect();
        let mut globals: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, f) in files.iter().enumerate() {
            for name in f.summaries[0].declared_vars.keys() {
                globals.entry(name.clone()).or_default().push(i);
            }
        }
        PackageFlow {
            files,
            globals,
            successor_depth: DEFAULT_SUCCESSOR_DEPTH,
        }
    }

    pub fn single(ast: &'a Node) -> Self {
        Self::new(&[ast])
    }

    pub fn resolve(&self, file: usize, expr: &'a Node) -> AbstractValue {
        self.resolve_traced(file, expr).0
    }

    /// Resolves `expr`, also reporting whether a cross-file hop was needed.
    pub fn resolve_traced(&self, file: usize, expr: &'a Node) -> (AbstractValue, bool) {
        let mut ctx = Ctx {
            depth: 0,
            cross_file: false,
        };
        let v = self.eval(file, expr, &mut ctx);
        (v, ctx.cross_file)
    }

    fn eval(&self, file: usize, e: &'a Node, ctx: &mut Ctx) -> AbstractValue {
        if ctx.depth > MAX_RESOLVE_DEPTH {
            return AbstractValue::Unknown;
        }
        ctx.depth += 1;
        let v = self.eval_inner(file, e, ctx);
        ctx.depth -= 1;
        v
    }

    fn eval_inner(&self, file: usize, e: &'a Node, ctx: &mut Ctx) -> AbstractValue {
        use AbstractValue as V;
        match &e.kind {
            NodeKind::StringLit(s) => V::Const(Literal::Str(s.clone())),
            NodeKind::NumberLit(n) => V::Const(Literal::Num(*n)),
            NodeKind::BoolLit(b) => V::Const(Literal::Bool(*b)),
            NodeKind::NullLit => V::Const(Literal::Null),
            NodeKind::ObjectLit => {
                let mut m = BTreeMap::new();
                for p in &e.children {
                    if let NodeKind::Property(k) = &p.kind {
                        let v = self.eval_stored(file, &p.children[0], ctx);
                        m.insert(k.clone(), v);
                    }
                }
                V::ObjectShape(m)
            }
            NodeKind::ArrayLit => V::List(
                e.children
                    .iter()
                    .map(|c| self.eval_stored(file, c, ctx))
                    .collect(),
            ),
            NodeKind::FunctionExpr { .. } | NodeKind::ArrowExpr { .. } => V::Function {
                file,
                node: e.id,
            },
            NodeKind::Identifier(name) => self.eval_ident(file, e, name, ctx),
            NodeKind::Member { .. } => {
                let key = match e.member_property() {
                    Some(k) => Some(k.to_string()),
                    None => match self.eval(file, &e.children[1], ctx) {
                        V::Const(l @ (Literal::Str(_) | Literal::Num(_))) => Some(l.js_string()),
                        _ => None,
                    },
                };
                let Some(key) = key else { return V::Unknown };
                match self.eval(file, &e.children[0], ctx) {
                    V::ObjectShape(m) => m.get(&key).cloned().unwrap_or(V::Unknown),
                    V::List(items) => key
                        .parse::<usize>()
                        .ok()
                        .and_then(|i| items.get(i).cloned())
                        .unwrap_or(V::Unknown),
                    V::Ref(p) => V::Ref(format!("{p}.{key}")),
                    _ => V::Unknown,
                }
            }
            NodeKind::Unary(op) => match (op, self.eval(file, &e.children[0], ctx)) {
                (UnaryOp::Not, V::Const(l)) => V::Const(Literal::Bool(!l.truthy())),
                (UnaryOp::Neg, V::Const(Literal::Num(n))) => V::Const(Literal::Num(-n)),
                (UnaryOp::TypeOf, V::Const(l)) => V::Const(Literal::Str(
                    match l {
                        Literal::Str(_) => "string",
                        Literal::Num(_) => "number",
                        Literal::Bool(_) => "boolean",
                        Literal::Null => "object",
                    }
                    .into(),
                )),
                _ => V::Unknown,
            },
            NodeKind::Binary(BinaryOp::Add) => {
                let l = self.eval(file, &e.children[0], ctx);
                let r = self.eval(file, &e.children[1], ctx);
                match (l, r) {
                    (V::Const(Literal::Num(a)), V::Const(Literal::Num(b))) => {
                        V::Const(Literal::Num(a + b))
                    }
                    (V::Const(a @ Literal::Str(_)), V::Const(b))
                    | (V::Const(a), V::Const(b @ Literal::Str(_))) => V::Const(Literal::Str(
                        format!("{}{}", a.js_string(), b.js_string()),
                    )),
                    _ => V::Unknown,
                }
            }
            NodeKind::Assign => self.eval(file, &e.children[1], ctx),
            NodeKind::Sequence => match e.children.last() {
                Some(last) => self.eval(file, last, ctx),
                None => V::Unknown,
            },
            _ => V::Unknown,
        }
    }

    fn eval_ident(&self, file: usize, use_node: &'a Node, name: &str, ctx: &mut Ctx) -> AbstractValue {
        if name == "this" {
            return AbstractValue::Ref("this".into());
        }
        if name == "undefined" {
            return AbstractValue::Unknown;
        }
        let ff = &self.files[file];
        let use_scope = ff.scope_of(use_node);
        if let Some(scope) = ff.lookup_scope(name, use_scope) {
            let cutoff = if scope == use_scope {
                use_node.span.lo
            } else {
                u32::MAX
            };
            return self.eval_binding(file, scope, name, cutoff, ctx);
        }
        // Top-level declaration in exactly one other file.
        match self.globals.get(name).map(Vec::as_slice) {
            Some([other]) if *other != file => {
                ctx.cross_file = true;
                self.eval_binding(*other, 0, name, u32::MAX, ctx)
            }
            Some([_]) | None => AbstractValue::Ref(name.to_string()),
            Some(_) => AbstractValue::Unknown,
        }
    }

    fn eval_binding(
        &self,
        file: usize,
        scope: usize,
        name: &str,
        cutoff: u32,
        ctx: &mut Ctx,
    ) -> AbstractValue {
        use AbstractValue as V;
        let ff = &self.files[file];
        match ff.summaries[scope].declared_vars.get(name) {
            Some(Declaration::Param { .. }) => {
                // parameters are externally produced, unless reassigned
                if ff.writes.contains_key(&(scope, name.to_string())) {
                    return V::Unknown;
                }
                return V::Ref(name.to_string());
            }
            Some(Declaration::Function(f)) => {
                if ff.writes.contains_key(&(scope, name.to_string())) {
                    return V::Unknown;
                }
                return V::Function { file, node: f.id };
            }
            Some(Declaration::Var(_)) => {}
            None => return V::Unknown,
        }
        let empty = Vec::new();
        let own = ff.writes.get(&(scope, name.to_string())).unwrap_or(&empty);
        let direct: Vec<&Write<'a>> = own.iter().filter(|w| w.path.is_empty()).collect();

        // Any reassignment that may run out of order makes the binding unknown.
        if direct
            .iter()
            .any(|w| w.nested || (!w.straight && w.end <= cutoff))
        {
            return V::Unknown;
        }
        let Some(last) = direct.iter().rev().find(|w| w.end <= cutoff) else {
            return V::Unknown;
        };
        let mut value = self.eval(file, last.value, ctx);
        if !matches!(value, V::ObjectShape(_) | V::List(_)) {
            return value;
        }
        if class_is_wild(ff, scope, &self.alias_class(file, scope, name)) {
            return V::Unknown;
        }

        let class = self.alias_class(file, scope, name);
        if class.len() > 1
            && class.iter().any(|m| {
                ff.writes
                    .get(&(scope, m.clone()))
                    .map(|ws| ws.iter().filter(|w| w.path.is_empty()).count() > 1)
                    .unwrap_or(false)
            })
        {
            return V::Unknown;
        }
        let mut prop_writes: Vec<&Write<'a>> = class
            .iter()
            .filter_map(|m| ff.writes.get(&(scope, m.clone())))
            .flatten()
            .filter(|w| !w.path.is_empty())
            .filter(|w| w.nested || (w.end > last.end && w.end <= cutoff))
            .collect();
        prop_writes.sort_by_key(|w| w.end);
        for w in prop_writes {
            let v = if w.straight && !w.nested {
                self.eval_stored(file, w.value, ctx)
            } else {
                V::Unknown
            };
            set_path(&mut value, &w.path, v);
        }
        if ff.foreign_writes {
            if class.iter().any(|m| ff.escaped.contains(&(scope, m.clone()))) {
                return V::Unknown;
            }
            // objects nested inside may be shared with other bindings
            match &mut value {
                V::ObjectShape(m) => m.values_mut().for_each(forget_objects),
                V::List(items) => items.iter_mut().for_each(forget_objects),
                _ => {}
            }
        }
        value
    }

    /// A value being stored into a container. Objects are references, so a
    /// binding's object stored here must not change afterwards for the
    /// snapshot to stay accurate.
    fn eval_stored(&self, file: usize, e: &'a Node, ctx: &mut Ctx) -> AbstractValue {
        let v = self.eval(file, e, ctx);
        if !matches!(v, AbstractValue::ObjectShape(_) | AbstractValue::List(_)) {
            return v;
        }
        let ff = &self.files[file];
        match &e.kind {
            NodeKind::Identifier(name) => {
                let Some(scope) = ff.lookup_scope(name, ff.scope_of(e)) else {
                    return AbstractValue::Unknown;
                };
                let mutated = self.alias_class(file, scope, name).iter().any(|m| {
                    ff.wild.contains(&(scope, m.clone()))
                        || ff
                            .writes
                            .get(&(scope, m.clone()))
                            .is_some_and(|ws| ws.iter().any(|w| !w.path.is_empty()))
                });
                if mutated {
                    AbstractValue::Unknown
                } else {
                    v
                }
            }
            NodeKind::ObjectLit | NodeKind::ArrayLit => v,
            _ if ff.foreign_writes => AbstractValue::Unknown,
            _ => v,
        }
    }

    /// Variables of `scope` connected to `name` by plain `x = y` copies.
    fn alias_class(&self, file: usize, scope: usize, name: &str) -> Vec<String> {
        let ff = &self.files[file];
        let mut edges: Vec<(String, String)> = Vec::new();
        for ((s, var), ws) in &ff.writes {
            if *s != scope {
                continue;
            }
            for w in ws.iter().filter(|w| w.path.is_empty()) {
                if let Some(src) = w.value.identifier() {
                    if ff.lookup_scope(src, ff.scope_of(w.value)) == Some(scope) {
                        edges.push((var.clone(), src.to_string()));
                    }
                }
            }
        }
        let mut class = vec![name.to_string()];
        let mut seen: HashSet<String> = class.iter().cloned().collect();
        let mut i = 0;
        while i < class.len() {
            let cur = class[i].clone();
            for (a, b) in &edges {
                for (x, y) in [(a, b), (b, a)] {
                    if *x == cur && seen.insert(y.clone()) {
                        class.push(y.clone());
                    }
                }
            }
            i += 1;
        }
        class
    }

    // ---- calls ----

    pub fn call_sites(&self) -> impl Iterator<Item = &CallSite<'a>> {
        self.files.iter().flat_map(|f| f.call_sites())
    }

    /// Call sites whose callee matches `pattern` (`*` matches any run of
    /// characters), either syntactically or after resolving aliases.
    pub fn find_calls(&self, pattern: &str) -> Vec<CallSite<'a>> {
        self.call_sites()
            .filter(|c| {
                glob_match(pattern, &c.callee)
                    || self
                        .resolve(c.file, &c.node.children[0])
                        .ref_path()
                        .is_some_and(|p| glob_match(pattern, p))
            })
            .cloned()
            .collect()
    }

    /// Callee path after alias resolution, falling back to the syntactic one.
    pub fn resolved_callee(&self, call: &CallSite<'a>) -> String {
        match self.resolve(call.file, &call.node.children[0]) {
            AbstractValue::Ref(p) => p,
            _ => call.callee.clone(),
        }
    }

    pub fn successors(&self, file: usize, call: &'a Node) -> SuccessorChain<'a> {
        let origin = CallSite::new(file, call);
        let mut out: Vec<CallSite<'a>> = Vec::new();
        let mut seen: HashSet<(usize, NodeId)> = HashSet::new();
        seen.insert((file, call.id));
        let mut visited_fns: HashSet<(usize, NodeId)> = HashSet::new();
        let mut truncated = false;
        let mut work = vec![(file, call, 0usize)];
        while let Some((f, c, depth)) = work.pop() {
            for (sf, s, hop) in self.direct_successors(f, c, &mut visited_fns) {
                let d = depth + hop;
                if d > self.successor_depth {
                    truncated = true;
                    continue;
                }
                if seen.insert((sf, s.id)) {
                    out.push(CallSite::new(sf, s));
                    work.push((sf, s, d));
                }
            }
        }
        out.sort_by_key(|c| (c.file, c.node.id));
        SuccessorChain {
            origin,
            successors: out,
            truncated,
        }
    }

    /// Calls reachable from `call` through the three continuation forms,
    /// with the nesting depth each one adds.
    fn direct_successors(
        &self,
        file: usize,
        call: &'a Node,
        visited_fns: &mut HashSet<(usize, NodeId)>,
    ) -> Vec<(usize, &'a Node, usize)> {
        let ff = &self.files[file];
        let mut out = Vec::new();

        // (a) later elements of the enclosing comma sequence
        let mut cur = call;
        while let Some(p) = ff.parent_of(cur) {
            match p.kind {
                NodeKind::Sequence => {
                    let after = p.children.iter().skip_while(|c| c.id != cur.id).skip(1);
                    for item in after {
                        out.extend(calls_within(item).into_iter().map(|n| (file, n, 0)));
                    }
                    break;
                }
                NodeKind::Member { .. }
                | NodeKind::Call
                | NodeKind::Assign
                | NodeKind::Logical(_)
                | NodeKind::Binary(_)
                | NodeKind::Unary(_)
                | NodeKind::Conditional => cur = p,
                _ => break,
            }
        }

        // (b) `.then(fn)` continuations, including chained ones
        let mut link = call;
        while let Some(member) = ff.parent_of(link) {
            let is_then = matches!(member.kind, NodeKind::Member { .. })
                && member.member_property() == Some("then")
                && member.children[0].id == link.id;
            let Some(then_call) = ff.parent_of(member).filter(|g| {
                is_then && g.kind == NodeKind::Call && g.children[0].id == member.id
            }) else {
                break;
            };
            for arg in &then_call.children[1..] {
                self.function_calls(file, arg, visited_fns, &mut out);
            }
            link = then_call;
        }

        // (c) success / fail / complete callbacks
        for arg in &call.children[1..] {
            if let AbstractValue::ObjectShape(m) = self.resolve(file, arg) {
                for key in ["success", "fail", "complete"] {
                    if let Some(AbstractValue::Function { file: ffi, node }) = m.get(key) {
                        let fnode = self.files[*ffi].node(*node);
                        self.push_function_body(*ffi, fnode, visited_fns, &mut out);
                    }
                }
            }
        }
        out
    }

    fn function_calls(
        &self,
        file: usize,
        arg: &'a Node,
        visited_fns: &mut HashSet<(usize, NodeId)>,
        out: &mut Vec<(usize, &'a Node, usize)>,
    ) {
        if let AbstractValue::Function { file: ffi, node } = self.resolve(file, arg) {
            let fnode = self.files[ffi].node(node);
            self.push_function_body(ffi, fnode, visited_fns, out);
        }
    }

    fn push_function_body(
        &self,
        file: usize,
        function: &'a Node,
        visited_fns: &mut HashSet<(usize, NodeId)>,
        out: &mut Vec<(usize, &'a Node, usize)>,
    ) {
        if !visited_fns.insert((file, function.id)) {
            return;
        }
        out.extend(
            calls_within(&function.children[0])
                .into_iter()
                .map(|n| (file, n, 1)),
        );
    }

    /// Calls lexically inside the body of a function node.
    pub fn calls_in_function(&self, function: &'a Node) -> Vec<&'a Node> {
        match function.children.first() {
            Some(body) if function.is_function() => calls_within(body),
            _ => Vec::new(),
        }
    }
}

/// Every call node inside `node` (inclusive), pre-order.
pub fn calls_within(node: &Node) -> Vec<&Node> {
    let mut out = Vec::new();
    walk(node, &mut |n, _| {
        if n.kind == NodeKind::Call {
            out.push(n);
        }
    });
    out
}

/// Every string literal in the program, in source order.
pub fn collect_strings(ast: &Node) -> Vec<(String, SourceSpan)> {
    let mut out = Vec::new();
    walk(ast, &mut |n, _| {
        if let NodeKind::StringLit(s) = &n.kind {
            out.push((s.clone(), n.span.clone()));
        }
    });
    out
}

/// Call sites of a single program matching `pattern`.
pub fn find_calls<'a>(ast: &'a Node, pattern: &str) -> Vec<CallSite<'a>> {
    PackageFlow::single(ast).find_calls(pattern)
}

/// `*` matches any (possibly empty) run of characters.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p = pattern.as_bytes();
    let t = text.as_bytes();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == b'*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == b'*' {
        pi += 1;
    }
    pi == p.len()
}

fn set_path(target: &mut AbstractValue, path: &[String], v: AbstractValue) {
    let AbstractValue::ObjectShape(m) = target else {
        return;
    };
    match path {
        [] => {}
        [last] => {
            m.insert(last.clone(), v);
        }
        [first, rest @ ..] => match m.get_mut(first) {
            Some(inner @ AbstractValue::ObjectShape(_)) => set_path(inner, rest, v),
            Some(other) => *other = AbstractValue::Unknown,
            None => {
                m.insert(first.clone(), AbstractValue::Unknown);
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minijs::parse;

    fn first_call_arg<'a>(flow: &PackageFlow<'a>, pattern: &str) -> AbstractValue {
        let c = flow.find_calls(pattern).into_iter().next().expect("call");
        flow.resolve(c.file, &c.args()[0])
    }

    #[test]
    fn summaries_per_scope() {
        let ast = parse("var a = 1; function f() { var bleservice = {}; addService(bleservice); }", "t.js").unwrap();
        let s = summarize(&ast);
        assert_eq!(s.len(), 2);
        assert!(s[0].declared_vars.contains_key("a"));
        assert!(s[0].declared_vars.contains_key("f"));
        assert!(s[1].declared_vars.contains_key("bleservice"));
        assert_eq!(s[1].call_sites.len(), 1);
        assert_eq!(s[1].call_sites[0].callee, "addService");
        assert_eq!(s[1].parent, Some(0));

        let empty = parse("", "t.js").unwrap();
        let s = summarize(&empty);
        assert_eq!(s.len(), 1);
        assert!(s[0].declared_vars.is_empty() && s[0].call_sites.is_empty());
    }

    fn use_of(src: &str) -> AbstractValue {
        let ast = parse(src, "t.js").unwrap();
        let flow = PackageFlow::single(&ast);
        first_call_arg(&flow, "use")
    }

    #[test]
    fn shared_objects() {
        // a container holds a reference, not a copy
        let v = use_of("var a = {x: 1}; var c = {k: a}; a.x = 2; use(c);");
        assert_eq!(v.get("k"), Some(&AbstractValue::Unknown));
        let v = use_of("var a = {x: 1}; var c = {k: a}; use(c);");
        assert_eq!(v.get("k").and_then(|k| k.get("x")), Some(&AbstractValue::Const(Literal::Num(1.0))));
        // mutation through the container
        let v = use_of("var a = {x: 1}; var c = {k: a}; c.k.x = 2; use(a);");
        assert_eq!(v, AbstractValue::Unknown);
        // mutation through a handle read out of a container
        let v = use_of("var c = {k: {x: 1}}; var h = c.k; h.x = 2; use(c);");
        assert_eq!(v.get("k"), Some(&AbstractValue::Unknown));
        // self reference
        let v = use_of("var a = {}; a.k = \"\"; a.k = a; use(a);");
        assert_eq!(v.get("k"), Some(&AbstractValue::Unknown));
        // unknown computed key
        assert_eq!(use_of("var a = {x: 1}; a[k] = 2; use(a);"), AbstractValue::Unknown);
        // cross-scope copy
        let v = use_of("var a = {x: 1}; function f() { var b = a; b.x = 2; } use(a);");
        assert_eq!(v, AbstractValue::Unknown);
    }

    #[test]
    fn literal_and_detached_object() {
        let ast = parse(
            "var s = {uuid: 'x'}; s.readEncryptionRequired = !1; s.writeEncryptionRequired = false; srv.addService(s);",
            "t.js",
        )
        .unwrap();
        let flow = PackageFlow::single(&ast);
        let v = first_call_arg(&flow, "*.addService");
        assert_eq!(v.get("readEncryptionRequired").and_then(|v| v.as_bool()), Some(false));
        assert_eq!(v.get("writeEncryptionRequired").and_then(|v| v.as_bool()), Some(false));
        assert_eq!(v.get("uuid").and_then(|v| v.as_str()), Some("x"));
    }

    #[test]
    fn branch_assignment_is_unknown() {
        let ast = parse(
            "var f; if (c) { f = true; } else { f = false; } use(f);",
            "t.js",
        )
        .unwrap();
        let flow = PackageFlow::single(&ast);
        assert_eq!(first_call_arg(&flow, "use"), AbstractValue::Unknown);
    }

    #[test]
    fn later_writes_do_not_apply_to_earlier_uses() {
        let ast = parse("var a = 1; use(a); a = 2; use2(a);", "t.js").unwrap();
        let flow = PackageFlow::single(&ast);
        assert_eq!(first_call_arg(&flow, "use"), AbstractValue::Const(Literal::Num(1.0)));
        assert_eq!(first_call_arg(&flow, "use2"), AbstractValue::Const(Literal::Num(2.0)));
    }

    #[test]
    fn aliases_share_property_writes() {
        let ast = parse("var o = {x: 1}; var p = o; p.x = 2; use(o.x);", "t.js").unwrap();
        let flow = PackageFlow::single(&ast);
        assert_eq!(first_call_arg(&flow, "use"), AbstractValue::Const(Literal::Num(2.0)));
    }

    #[test]
    fn aliased_callee() {
        let ast = parse("var w = wx; w.login();", "t.js").unwrap();
        let calls = find_calls(&ast, "wx.login");
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].callee, "w.login");
        assert!(find_calls(&ast, "wx.request").is_empty());
    }

    #[test]
    fn successor_forms() {
        let ast = parse(
            "wx.login({success: function (r) { wx.request({url: u}); }});",
            "t.js",
        )
        .unwrap();
        let flow = PackageFlow::single(&ast);
        let login = flow.find_calls("wx.login")[0].node;
        let chain = flow.successors(0, login);
        assert!(chain.contains_callee(|c| c == "wx.request"));

        let ast = parse("f(), g();", "t.js").unwrap();
        let flow = PackageFlow::single(&ast);
        let f = flow.find_calls("f")[0].node;
        let chain = flow.successors(0, f);
        assert_eq!(chain.successors.len(), 1);
        assert_eq!(chain.successors[0].callee, "g");

        let ast = parse("wx.login();", "t.js").unwrap();
        let flow = PackageFlow::single(&ast);
        let chain = flow.successors(0, flow.find_calls("wx.login")[0].node);
        assert!(chain.successors.is_empty() && !chain.truncated);
    }

    #[test]
    fn then_and_detached_callbacks() {
        let ast = parse(
            "function onOk(r) { wx.request({url: '/a'}); }\n\
             var opts = {success: onOk};\n\
             wx.getWeRunData(opts);\n\
             p().then(function (x) { a(); }).then(b => c());",
            "t.js",
        )
        .unwrap();
        let flow = PackageFlow::single(&ast);
        let run = flow.find_calls("wx.getWeRunData")[0].node;
        assert!(flow.successors(0, run).contains_callee(|c| c == "wx.request"));
        let p = flow.find_calls("p")[0].node;
        let names: Vec<_> = flow
            .successors(0, p)
            .successors
            .iter()
            .map(|c| c.callee.clone())
            .collect();
        assert_eq!(names, ["a", "c"]);
    }

    #[test]
    fn depth_limit_truncates() {
        let mut src = String::from("c0({success: f1});\n");
        for i in 1..=12 {
            src.push_str(&format!("function f{i}() {{ c{i}({{success: f{}}}); }}\n", i + 1));
        }
        src.push_str("function f13() { z(); }\n");
        let ast = parse(&src, "t.js").unwrap();
        let flow = PackageFlow::single(&ast);
        let c0 = flow.find_calls("c0")[0].node;
        let chain = flow.successors(0, c0);
        assert!(chain.truncated);
        assert!(chain.contains_callee(|c| c == "c8"));
        assert!(!chain.contains_callee(|c| c == "c9"));
        assert!(!chain.contains_callee(|c| c == "z"));

        let mut flow = PackageFlow::single(&ast);
        flow.successor_depth = 20;
        let chain = flow.successors(0, c0);
        assert!(!chain.truncated && chain.contains_callee(|c| c == "z"));
    }

    #[test]
    fn cross_file_lookup_is_flagged() {
        let a = parse("var cfg = {readEncryptionRequired: false};", "a.js").unwrap();
        let b = parse("srv.addService(cfg);", "b.js").unwrap();
        let flow = PackageFlow::new(&[&a, &b]);
        let c = flow.find_calls("*.addService").remove(0);
        let (v, hop) = flow.resolve_traced(c.file, &c.args()[0]);
        assert!(hop);
        assert_eq!(v.get("readEncryptionRequired").and_then(|v| v.as_bool()), Some(false));
    }

    #[test]
    fn strings_in_order() {
        let ast = parse("a('x', 'y'); b('x');", "t.js").unwrap();
        let s: Vec<_> = collect_strings(&ast).into_iter().map(|(v, _)| v).collect();
        assert_eq!(s, ["x", "y", "x"]);
        assert!(collect_strings(&parse("a(1);", "t.js").unwrap()).is_empty());
    }

    #[test]
    fn glob() {
        assert!(glob_match("*.addService", "t.data.server.addService"));
        assert!(!glob_match("*.addService", "addService"));
        assert!(glob_match("wx.login", "wx.login"));
        assert!(!glob_match("wx.login", "wx.loginx"));
    }
}
