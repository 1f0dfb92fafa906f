use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use coffeescan_core::detectors::{classify_url, DetectorConfig, UrlClass};
use coffeescan_core::flow::{AbstractValue, Literal, PackageFlow};
use coffeescan_core::forge::{forge, ForgeSpec};
use coffeescan_core::minijs::{parse, print, tokenize, walk, Node, NodeKind, KEYWORDS};
use coffeescan_core::pkg::{pack, unpack, FileEntry, Package};
use coffeescan_core::scan::{scan_package, ScanOptions};

// ---- package container ----

fn entry_list() -> impl Strategy<Value = Vec<FileEntry>> {
    let path = prop::collection::vec("[a-zA-Z0-9_.-]{1,8}", 1..4)
        .prop_map(|segs| segs.join("/"))
        .prop_filter("no dot segments", |p| p.split('/').all(|s| s != ".." && s != "."));
    prop::collection::vec((path, prop::collection::vec(any::<u8>(), 0..64)), 0..6).prop_map(|v| {
        let mut seen = BTreeSet::new();
        v.into_iter()
            .filter(|(p, _)| seen.insert(p.clone()))
            .map(|(p, d)| FileEntry::new(p, d))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pkg_roundtrip_bit_exact(entries in entry_list()) {
        let bytes = pack(&entries).unwrap();
        let back = unpack(&bytes).unwrap();
        prop_assert_eq!(&back.entries, &entries);
        prop_assert_eq!(pack(&back.entries).unwrap(), bytes);
    }
}

proptest! {
    #[test]
    fn pkg_pack_injective(a in entry_list(), b in entry_list()) {
        if a != b {
            prop_assert_ne!(pack(&a).unwrap(), pack(&b).unwrap());
        }
    }
}

#[test]
fn every_truncation_of_three_file_package_errors() {
    let entries = vec![
        FileEntry::new("app.js", "App({});\n"),
        FileEntry::new("app.json", "{\"pages\":[\"pages/index/index\"]}"),
        FileEntry::new("pages/index/index.js", "Page({data: {}});\n"),
    ];
    let bytes = pack(&entries).unwrap();
    for n in 0..bytes.len() {
        assert!(unpack(&bytes[..n]).is_err(), "prefix of {n} bytes parsed");
    }
    assert_eq!(unpack(&bytes).unwrap().entries, entries);
}

// ---- lexer ----

fn token_piece() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z_$][a-zA-Z0-9_$]{0,6}"
            .prop_filter("not a keyword", |s| !KEYWORDS.contains(&s.as_str())),
        prop::sample::select(KEYWORDS[..11].to_vec()).prop_map(str::to_string),
        (0u32..100000).prop_map(|n| n.to_string()),
        (0u32..1000, 1u32..1000).prop_map(|(a, b)| format!("{a}.{b}")),
        "[a-z0-9 _/:?=&.-]{0,10}".prop_map(|s| format!("\"{s}\"")),
        "[a-z0-9 ]{0,6}".prop_map(|s| format!("'{s}\\n'")),
        prop::sample::select(vec![
            "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "=>", "{", "}", "(", ")", "[",
            "]", ";", ",", ".", "?", ":", "=", "!", "+", "-", "*", "/", "%", "<", ">",
        ])
        .prop_map(str::to_string),
    ]
}

fn trivia() -> impl Strategy<Value = String> {
    prop::sample::select(vec![" ", "\n", "\t", " /* note */ ", " // line\n", "\r\n  "])
        .prop_map(str::to_string)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn tokenize_keeps_every_non_trivia_char(
        parts in prop::collection::vec((token_piece(), trivia()), 0..40)
    ) {
        let source: String = parts.iter().map(|(t, w)| format!("{t}{w}")).collect();
        let expected: String = parts.iter().map(|(t, _)| t.as_str()).collect();
        let tokens = tokenize(&source, "t.js").unwrap();
        prop_assert_eq!(tokens.len(), parts.len());
        let rebuilt: String = tokens.iter().map(|t| t.text.as_str()).collect();
        prop_assert_eq!(rebuilt, expected);
        for t in &tokens {
            prop_assert_eq!(&source[t.span.lo as usize..t.span.hi as usize], t.text.as_str());
        }
    }
}

// ---- parser / printer ----

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "t", "that", "wx", "res", "data", "x1", "_y", "$z"])
        .prop_map(str::to_string)
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        ident(),
        Just("this".to_string()),
        (0u32..1000).prop_map(|n| n.to_string()),
        (0u32..100, 1u32..100).prop_map(|(a, b)| format!("{a}.{b}")),
        "[a-z/ ]{0,6}".prop_map(|s| format!("\"{s}\"")),
        prop::sample::select(vec!["true", "false", "null", "!0", "!1"]).prop_map(str::to_string),
    ];
    leaf.prop_recursive(4, 40, 4, |inner| {
        let op = prop::sample::select(vec![
            "&&", "||", "==", "!=", "===", "!==", "in", "+", "-", "*", "<", ">", "<=", ">=",
        ]);
        let stmts = prop::collection::vec(inner.clone().prop_map(|e| format!("{e};")), 0..3)
            .prop_map(|v| v.join(" "));
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(a, o, b)| format!("({a} {o} {b})")),
            inner.clone().prop_map(|a| format!("(!{a})")),
            inner.clone().prop_map(|a| format!("(typeof {a})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, c)| format!("({a} ? {b} : {c})")),
            (inner.clone(), ident()).prop_map(|(a, p)| format!("({a}).{p}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})[{b}]")),
            (ident(), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(f, args)| format!("{f}({})", args.join(", "))),
            prop::collection::vec((ident(), inner.clone(), any::<bool>()), 0..3).prop_map(|ps| {
                let mut seen = BTreeSet::new();
                let body: Vec<String> = ps
                    .into_iter()
                    .filter(|(k, _, _)| seen.insert(k.clone()))
                    .map(|(k, v, q)| if q { format!("\"{k}\": {v}") } else { format!("{k}: {v}") })
                    .collect();
                format!("({{{}}})", body.join(", "))
            }),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| format!("[{}]", v.join(", "))),
            (ident(), stmts.clone()).prop_map(|(p, s)| format!("(function ({p}) {{ {s} }})")),
            (ident(), inner.clone()).prop_map(|(p, e)| format!("(({p}) => {e})")),
            (ident(), stmts).prop_map(|(p, s)| format!("({p} => {{ {s} }})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}, {b})")),
            (ident(), inner.clone()).prop_map(|(x, e)| format!("({x} = {e})")),
            (ident(), ident(), inner.clone()).prop_map(|(x, p, e)| format!("({x}.{p} = {e})")),
        ]
    })
}

fn statement() -> impl Strategy<Value = String> {
    let simple = prop_oneof![
        (prop::sample::select(vec!["var", "let", "const"]), ident(), expr())
            .prop_map(|(k, x, e)| format!("{k} {x} = {e};")),
        expr().prop_map(|e| format!("{e};")),
        expr().prop_map(|e| format!("return {e};")),
    ];
    simple.prop_recursive(2, 12, 3, |inner| {
        let block = prop::collection::vec(inner.clone(), 0..3).prop_map(|v| v.join("\n"));
        prop_oneof![
            (expr(), block.clone()).prop_map(|(c, b)| format!("if ({c}) {{\n{b}\n}}")),
            (expr(), block.clone(), block.clone())
                .prop_map(|(c, a, b)| format!("if ({c}) {{\n{a}\n}} else {{\n{b}\n}}")),
            (ident(), ident(), block.clone())
                .prop_map(|(f, p, b)| format!("function {f}({p}) {{\n{b}\n}}")),
            block.prop_map(|b| format!("{{\n{b}\n}}")),
        ]
    })
}

fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(statement(), 0..6).prop_map(|v| v.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn parse_print_roundtrip(src in program()) {
        let ast = parse(&src, "p.js").unwrap();
        let printed = print(&ast);
        let again = parse(&printed, "p.js").unwrap();
        prop_assert!(ast.same_shape(&again), "printed:\n{}", printed);
        prop_assert_eq!(print(&again), printed);
    }

    #[test]
    fn child_spans_nest(src in program()) {
        let ast = parse(&src, "p.js").unwrap();
        let len = src.len() as u32;
        let mut bad = Vec::new();
        walk(&ast, &mut |n: &Node, stack: &[&Node]| {
            let s = &n.span;
            if s.lo > s.hi || s.hi > len || (s.start_line, s.start_col) > (s.end_line, s.end_col) {
                bad.push(format!("{:?} {:?}", n.kind, s));
            }
            if let Some(parent) = stack.last() {
                if !parent.span.contains(s) {
                    bad.push(format!("{:?} escapes {:?}", n.kind, parent.kind));
                }
            }
        });
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }
}

// ---- resolve against a reference evaluator ----

#[derive(Debug, Clone)]
enum Lit {
    Str(String),
    Num(u32),
    Bool(bool),
    Null,
}

impl Lit {
    fn src(&self) -> String {
        match self {
            Lit::Str(s) => format!("\"{s}\""),
            Lit::Num(n) => n.to_string(),
            Lit::Bool(b) => b.to_string(),
            Lit::Null => "null".into(),
        }
    }

    fn literal(&self) -> Literal {
        match self {
            Lit::Str(s) => Literal::Str(s.clone()),
            Lit::Num(n) => Literal::Num(*n as f64),
            Lit::Bool(b) => Literal::Bool(*b),
            Lit::Null => Literal::Null,
        }
    }
}

#[derive(Debug, Clone)]
enum Ex {
    Lit(Lit),
    /// `ext()`: a value nobody can know.
    Opaque,
    Var(usize),
    Obj(Vec<(usize, Ex)>),
    Prop(usize, usize),
}

#[derive(Debug, Clone)]
enum St {
    Decl(Ex),
    SetProp(usize, usize, Ex),
    Reassign(usize, Ex),
}

const KEYS: [&str; 3] = ["k0", "k1", "k2"];

fn var(i: usize) -> String {
    format!("v{i}")
}

impl Ex {
    fn src(&self) -> String {
        match self {
            Ex::Lit(l) => l.src(),
            Ex::Opaque => "ext()".into(),
            Ex::Var(i) => var(*i),
            Ex::Obj(ps) => {
                let mut seen = BTreeSet::new();
                let body: Vec<String> = ps
                    .iter()
                    .filter(|(k, _)| seen.insert(*k))
                    .map(|(k, e)| format!("{}: {}", KEYS[*k], e.src()))
                    .collect();
                format!("{{{}}}", body.join(", "))
            }
            Ex::Prop(i, k) => format!("{}.{}", var(*i), KEYS[*k]),
        }
    }

    fn literal_count(&self) -> usize {
        match self {
            Ex::Lit(_) => 1,
            Ex::Obj(ps) => ps.iter().map(|(_, e)| e.literal_count()).sum(),
            _ => 0,
        }
    }

    /// Replaces the `n`th literal (pre-order) with `ext()`; returns how many
    /// literals were skipped when `n` lies beyond this expression.
    fn make_opaque(&mut self, n: usize) -> Result<(), usize> {
        match self {
            Ex::Lit(_) if n == 0 => {
                *self = Ex::Opaque;
                Ok(())
            }
            Ex::Lit(_) => Err(1),
            Ex::Obj(ps) => {
                let mut seen = 0;
                for (_, e) in ps {
                    match e.make_opaque(n - seen) {
                        Ok(()) => return Ok(()),
                        Err(k) => seen += k,
                    }
                }
                Err(seen)
            }
            _ => Err(0),
        }
    }
}

/// A statement list where every variable reference points at an earlier
/// declaration.
fn straight_line() -> impl Strategy<Value = Vec<St>> {
    let lit = prop_oneof![
        "[a-z]{0,4}".prop_map(Lit::Str),
        (0u32..50).prop_map(Lit::Num),
        any::<bool>().prop_map(Lit::Bool),
        Just(Lit::Null),
    ];
    let raw_ex = prop_oneof![
        4 => lit.clone().prop_map(Ex::Lit),
        1 => Just(Ex::Opaque),
        2 => any::<usize>().prop_map(Ex::Var),
        2 => prop::collection::vec((0usize..3, lit.prop_map(Ex::Lit)), 0..3).prop_map(Ex::Obj),
        2 => (any::<usize>(), 0usize..3).prop_map(|(i, k)| Ex::Prop(i, k)),
    ];
    let raw_st = prop_oneof![
        3 => raw_ex.clone().prop_map(St::Decl),
        2 => (any::<usize>(), 0usize..3, raw_ex.clone()).prop_map(|(i, k, e)| St::SetProp(i, k, e)),
        1 => (any::<usize>(), raw_ex).prop_map(|(i, e)| St::Reassign(i, e)),
    ];
    prop::collection::vec(raw_st, 1..14).prop_map(|raw| {
        let mut decls = 0usize;
        let fix = |e: Ex, decls: usize| match e {
            Ex::Var(_) | Ex::Prop(..) if decls == 0 => Ex::Opaque,
            Ex::Var(i) => Ex::Var(i % decls),
            Ex::Prop(i, k) => Ex::Prop(i % decls, k),
            e => e,
        };
        let mut out = Vec::new();
        for st in raw {
            match st {
                St::Decl(e) => {
                    out.push(St::Decl(fix(e, decls)));
                    decls += 1;
                }
                St::SetProp(i, k, e) if decls > 0 => out.push(St::SetProp(i % decls, k, fix(e, decls))),
                St::Reassign(i, e) if decls > 0 => out.push(St::Reassign(i % decls, fix(e, decls))),
                _ => {}
            }
        }
        out
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Lit(Literal),
    Obj(usize),
    Undefined,
    Opaque,
}

struct Reference {
    vars: Vec<Val>,
    heap: Vec<BTreeMap<String, Val>>,
}

impl Reference {
    fn eval(&mut self, e: &Ex) -> Val {
        match e {
            Ex::Lit(l) => Val::Lit(l.literal()),
            Ex::Opaque => Val::Opaque,
            Ex::Var(i) => self.vars[*i].clone(),
            Ex::Obj(ps) => {
                let mut m = BTreeMap::new();
                let mut seen = BTreeSet::new();
                for (k, v) in ps {
                    if seen.insert(*k) {
                        let v = self.eval(v);
                        m.insert(KEYS[*k].to_string(), v);
                    }
                }
                self.heap.push(m);
                Val::Obj(self.heap.len() - 1)
            }
            Ex::Prop(i, k) => self.get(&self.vars[*i].clone(), KEYS[*k]),
        }
    }

    fn get(&self, v: &Val, key: &str) -> Val {
        match v {
            Val::Obj(h) => self.heap[*h].get(key).cloned().unwrap_or(Val::Undefined),
            Val::Lit(_) => Val::Undefined,
            // reading from null/undefined throws; from opaque values nobody knows
            _ => Val::Opaque,
        }
    }

    /// Runs the program; `None` when it would throw.
    fn run(prog: &[St]) -> Option<Reference> {
        let mut r = Reference {
            vars: Vec::new(),
            heap: Vec::new(),
        };
        for st in prog {
            match st {
                St::Decl(e) => {
                    if let Ex::Prop(i, _) = e {
                        if matches!(r.vars[*i], Val::Lit(Literal::Null) | Val::Undefined) {
                            return None;
                        }
                    }
                    let v = r.eval(e);
                    r.vars.push(v);
                }
                St::SetProp(i, k, e) => {
                    let v = r.eval(e);
                    match r.vars[*i].clone() {
                        Val::Obj(h) => {
                            r.heap[h].insert(KEYS[*k].to_string(), v);
                        }
                        Val::Lit(Literal::Null) | Val::Undefined => return None,
                        _ => {}
                    }
                }
                St::Reassign(i, e) => {
                    if let Ex::Prop(j, _) = e {
                        if matches!(r.vars[*j], Val::Lit(Literal::Null) | Val::Undefined) {
                            return None;
                        }
                    }
                    r.vars[*i] = r.eval(e);
                }
            }
        }
        Some(r)
    }
}

fn render(prog: &[St]) -> String {
    let mut src = String::new();
    let mut decls = 0;
    for st in prog {
        match st {
            St::Decl(e) => {
                src.push_str(&format!("var {} = {};\n", var(decls), e.src()));
                decls += 1;
            }
            St::SetProp(i, k, e) => src.push_str(&format!("{}.{} = {};\n", var(*i), KEYS[*k], e.src())),
            St::Reassign(i, e) => src.push_str(&format!("{} = {};\n", var(*i), e.src())),
        }
    }
    for i in 0..decls {
        src.push_str(&format!("use({});\n", var(i)));
    }
    src
}

/// Resolved values of every `use(...)` argument, in order.
fn resolve_uses(src: &str) -> Vec<AbstractValue> {
    let ast = parse(src, "r.js").unwrap();
    let flow = PackageFlow::single(&ast);
    let mut args = Vec::new();
    walk(&ast, &mut |n: &Node, _: &[&Node]| {
        if matches!(n.kind, NodeKind::Call) && n.children[0].identifier() == Some("use") {
            args.push(&n.children[1]);
        }
    });
    args.into_iter().map(|a| flow.resolve(0, a)).collect()
}

/// Every Const inside `abs` agrees with the concrete value.
fn agrees(abs: &AbstractValue, val: &Val, r: &Reference) -> Result<(), String> {
    match abs {
        AbstractValue::Const(l) => match val {
            Val::Lit(v) if v == l => Ok(()),
            other => Err(format!("resolved {l:?}, actual {other:?}")),
        },
        AbstractValue::ObjectShape(m) => {
            let Val::Obj(_) = val else {
                return Err(format!("resolved object, actual {val:?}"));
            };
            for (k, sub) in m {
                agrees(sub, &r.get(val, k), r)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn consts(abs: &AbstractValue, prefix: String, out: &mut BTreeMap<String, Literal>) {
    match abs {
        AbstractValue::Const(l) => {
            out.insert(prefix, l.clone());
        }
        AbstractValue::ObjectShape(m) => {
            for (k, v) in m {
                consts(v, format!("{prefix}.{k}"), out);
            }
        }
        _ => {}
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn resolved_consts_match_execution(prog in straight_line()) {
        let Some(reference) = Reference::run(&prog) else { return Ok(()) };
        let src = render(&prog);
        for (i, abs) in resolve_uses(&src).iter().enumerate() {
            if let Err(e) = agrees(abs, &reference.vars[i], &reference) {
                prop_assert!(false, "v{}: {}\n{}", i, e, src);
            }
        }
    }

    #[test]
    fn opaque_literal_only_loses_consts(prog in straight_line(), pick in any::<prop::sample::Index>()) {
        let expr_of = |st: &St| match st {
            St::Decl(e) | St::SetProp(_, _, e) | St::Reassign(_, e) => e.clone(),
        };
        let total: usize = prog.iter().map(|st| expr_of(st).literal_count()).sum();
        if total == 0 {
            return Ok(());
        }
        let mut n = pick.index(total);
        let mut mutated = prog.clone();
        for st in &mut mutated {
            let (St::Decl(e) | St::SetProp(_, _, e) | St::Reassign(_, e)) = st;
            match e.make_opaque(n) {
                Ok(()) => break,
                Err(k) => n -= k,
            }
        }
        let before = resolve_uses(&render(&prog));
        let after = resolve_uses(&render(&mutated));
        for (b, a) in before.iter().zip(&after) {
            let (mut cb, mut ca) = (BTreeMap::new(), BTreeMap::new());
            consts(b, String::new(), &mut cb);
            consts(a, String::new(), &mut ca);
            for (path, lit) in &ca {
                prop_assert_eq!(cb.get(path), Some(lit), "{} became a new Const", path);
            }
        }
    }
}

// ---- successor chains ----

#[derive(Debug, Clone)]
enum Cb {
    Call(String, Vec<(&'static str, Vec<Cb>)>),
}

fn callback_tree() -> impl Strategy<Value = Cb> {
    let name = "c[0-9]{1,3}".prop_map(String::from);
    let leaf = name.clone().prop_map(|n| Cb::Call(n, Vec::new()));
    leaf.prop_recursive(4, 30, 3, move |inner| {
        let slot = prop::sample::select(vec!["success", "fail", "complete"]);
        (
            name.clone(),
            prop::collection::vec((slot, prop::collection::vec(inner, 0..3)), 0..3),
        )
            .prop_map(|(n, slots)| {
                let mut seen = BTreeSet::new();
                let slots = slots.into_iter().filter(|(s, _)| seen.insert(*s)).collect();
                Cb::Call(n, slots)
            })
    })
}

impl Cb {
    fn src(&self, arrow: bool) -> String {
        let Cb::Call(name, slots) = self;
        if slots.is_empty() {
            return format!("{name}()");
        }
        let props: Vec<String> = slots
            .iter()
            .map(|(slot, body)| {
                let stmts: String = body.iter().map(|c| format!("{}; ", c.src(!arrow))).collect();
                if arrow {
                    format!("{slot}: r => {{ {stmts}}}")
                } else {
                    format!("{slot}: function (r) {{ {stmts}}}")
                }
            })
            .collect();
        format!("{name}({{{}}})", props.join(", "))
    }
}

/// Calls lexically inside the success/fail/complete function values of the
/// origin's object arguments.
fn callback_calls(origin: &Node) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for arg in &origin.children[1..] {
        if !matches!(arg.kind, NodeKind::ObjectLit) {
            continue;
        }
        for prop in &arg.children {
            let NodeKind::Property(key) = &prop.kind else { continue };
            if !["success", "fail", "complete"].contains(&key.as_str()) || !prop.children[0].is_function() {
                continue;
            }
            walk(&prop.children[0], &mut |n: &Node, _: &[&Node]| {
                if matches!(n.kind, NodeKind::Call) {
                    out.insert(n.id.0);
                }
            });
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn successors_cover_callback_bodies(tree in callback_tree(), arrow in any::<bool>()) {
        let src = format!("{};\n", tree.src(arrow));
        let ast = parse(&src, "s.js").unwrap();
        let origin = &ast.children[0].children[0];
        let flow = PackageFlow::single(&ast);
        let chain = flow.successors(0, origin);
        prop_assert!(!chain.truncated);
        let got: BTreeSet<u32> = chain.successors.iter().map(|c| c.node.id.0).collect();
        let want = callback_calls(origin);
        prop_assert!(want.is_subset(&got), "missing {:?}\n{}", want.difference(&got).collect::<Vec<_>>(), src);
        prop_assert_eq!(got.len(), chain.successors.len(), "duplicate successors");
    }
}

// ---- detectors ----

fn dead_function() -> impl Strategy<Value = String> {
    (
        1u32..1000,
        prop::collection::vec(
            prop_oneof![
                "[a-z]{1,6}".prop_map(|s| format!("var {s}1 = \"{s}\";")),
                (0u32..100).prop_map(|n| format!("var n = {n} + 1;")),
                "[a-z]{1,6}".prop_map(|s| format!("console.log(\"{s}\");")),
                Just("if (!this.ready) { return null; }".to_string()),
                Just("var o = {ok: true, list: [1, 2, 3]};".to_string()),
            ],
            0..5,
        ),
    )
        .prop_map(|(n, body)| format!("\nfunction __dead{n}(p) {{\n  {}\n}}\n", body.join("\n  ")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn dead_code_leaves_findings_unchanged(
        seed in 0u64..10_000,
        dead in dead_function(),
        file_pick in any::<prop::sample::Index>(),
    ) {
        let corpus = forge(&ForgeSpec { seed, clean: 1, planted: 1, ..Default::default() });
        let opts = ScanOptions::default();
        for p in &corpus.packages {
            let before = scan_package(&p.name, &Package::new(p.entries.clone()).unwrap(), &opts);
            let mut entries = p.entries.clone();
            let js: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].path.ends_with(".js")).collect();
            let i = js[file_pick.index(js.len())];
            let mut data = entries[i].data.clone();
            data.extend_from_slice(dead.as_bytes());
            entries[i] = FileEntry::new(entries[i].path.clone(), data);
            let after = scan_package(&p.name, &Package::new(entries).unwrap(), &opts);
            prop_assert_eq!(&before.findings, &after.findings);
        }
    }
}

proptest! {
    #[test]
    fn classify_url_is_total_and_pure(s in ".{0,60}") {
        let cfg = DetectorConfig::default();
        let a = classify_url(&s, &cfg);
        let b = classify_url(&s, &DetectorConfig::default());
        prop_assert_eq!(a, b);
        prop_assert!(matches!(a, UrlClass::Duplication | UrlClass::Getter | UrlClass::None));
    }
}
