use super::{Confidence, Detector, DetectorConfig, Finding, PackageView, Span};
use crate::flow::{AbstractValue, PackageFlow};
use crate::minijs::{walk, BinaryOp, Node, NodeKind};

fn path_ends_with(path: &str, suffix: &str) -> bool {
    path == suffix || path.ends_with(&format!(".{suffix}"))
}

/// Whether `node` denotes `…<suffix>`, syntactically or through aliases.
fn refers_to<'a>(flow: &PackageFlow<'a>, file: usize, node: &'a Node, suffix: &str) -> bool {
    node.access_path().is_some_and(|p| path_ends_with(&p, suffix))
        || flow
            .resolve(file, node)
            .ref_path()
            .is_some_and(|p| path_ends_with(p, suffix))
}

/// Values an operand can evaluate to, looking through `?:`, `&&`/`||`,
/// assignments and comma sequences.
fn operand_candidates(n: &Node) -> Vec<&Node> {
    match n.kind {
        NodeKind::Conditional => {
            let mut v = operand_candidates(&n.children[1]);
            v.extend(operand_candidates(&n.children[2]));
            v
        }
        NodeKind::Logical(_) => {
            let mut v = operand_candidates(&n.children[0]);
            v.extend(operand_candidates(&n.children[1]));
            v
        }
        NodeKind::Assign => operand_candidates(&n.children[1]),
        NodeKind::Sequence => n.children.last().map(operand_candidates).unwrap_or_default(),
        _ => vec![n],
    }
}

#[derive(Default)]
struct CheckKind {
    strong: bool,
    weak: Option<String>,
}

impl CheckKind {
    fn note(&mut self, value: &AbstractValue, is_appid: &dyn Fn(&str) -> bool) {
        match value {
            AbstractValue::Const(l) if is_appid(&l.js_string()) => self.strong = true,
            AbstractValue::ObjectShape(m) if m.keys().any(|k| is_appid(k)) => self.strong = true,
            AbstractValue::List(items)
                if items.iter().any(|i| i.as_str().is_some_and(is_appid)) =>
            {
                self.strong = true
            }
            other => {
                self.weak.get_or_insert_with(|| other.to_string());
            }
        }
    }
}

/// Cross-app launch data used without checking which mini-app sent it.
pub fn detect_cross_app(view: &PackageView<'_>, cfg: &DetectorConfig) -> Vec<Finding> {
    let flow = view.flow;
    let mut reads: Vec<(usize, &Node)> = Vec::new();
    let mut check = CheckKind::default();
    let appid_re = cfg.appid_regex().ok();
    let is_appid = |s: &str| appid_re.as_ref().is_some_and(|r| r.is_match(s));
    for (fi, pf) in view.files.iter().enumerate() {
        walk(&pf.ast, &mut |n, _| match &n.kind {
            NodeKind::Member { .. } if n.member_property() == Some("extraData") => {
                if refers_to(flow, fi, n, "referrerInfo.extraData") {
                    reads.push((fi, n));
                }
            }
            NodeKind::Binary(op) if op.is_equality() => {
                let l = operand_candidates(&n.children[0]);
                let r = operand_candidates(&n.children[1]);
                for (ids, others) in [(&l, &r), (&r, &l)] {
                    if ids.iter().any(|c| refers_to(flow, fi, c, "referrerInfo.appId")) {
                        for o in others.iter() {
                            check.note(&flow.resolve(fi, o), &is_appid);
                        }
                    }
                }
            }
            NodeKind::Binary(BinaryOp::In) => {
                let l = operand_candidates(&n.children[0]);
                if l.iter().any(|c| refers_to(flow, fi, c, "referrerInfo.appId")) {
                    check.note(&flow.resolve(fi, &n.children[1]), &is_appid);
                }
            }
            _ => {}
        });
    }
    let Some((fi, node)) = reads.first() else {
        return Vec::new();
    };
    if check.strong {
        return Vec::new();
    }
    let (confidence, evidence) = match check.weak {
        Some(v) => (
            Confidence::Medium,
            format!("referrerInfo.extraData read; appId only compared with {v}"),
        ),
        None => (
            Confidence::High,
            "referrerInfo.extraData read with no referrerInfo.appId check".to_string(),
        ),
    };
    vec![Finding::new(
        Detector::MissingCrossAppCheck,
        view.path(*fi),
        Span::from(&node.span),
        evidence,
        confidence,
    )]
}

/// Private share messages enabled without any authPrivateMessage call.
pub fn detect_private_share(view: &PackageView<'_>) -> Vec<Finding> {
    let flow = view.flow;
    let authed = !flow.find_calls("authPrivateMessage").is_empty()
        || !flow.find_calls("*.authPrivateMessage").is_empty();
    if authed {
        return Vec::new();
    }
    let mut calls = flow.find_calls("updateShareMenu");
    calls.extend(flow.find_calls("*.updateShareMenu"));
    calls.sort_by_key(|c| (c.file, c.node.id));
    calls.dedup_by_key(|c| (c.file, c.node.id));

    let mut out = Vec::new();
    for call in calls {
        let Some(arg) = call.args().first() else {
            continue;
        };
        let (value, hop) = flow.resolve_traced(call.file, arg);
        let flag = match &value {
            AbstractValue::ObjectShape(m) => m.get("isPrivateMessage").cloned(),
            _ => Some(AbstractValue::Unknown),
        };
        let confidence = match flag {
            Some(AbstractValue::Const(l)) if l.truthy() => Confidence::High,
            Some(AbstractValue::Const(_)) | None => continue,
            Some(_) => Confidence::Low,
        };
        let confidence = if hop { confidence.lowered() } else { confidence };
        out.push(Finding::new(
            Detector::MissingPrivateShareCheck,
            view.path(call.file),
            Span::from(&call.span),
            format!("{}({value}) with no authPrivateMessage call", call.callee),
            confidence,
        ));
    }
    out
}
