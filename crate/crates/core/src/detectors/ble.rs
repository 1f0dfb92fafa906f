use super::{Confidence, Detector, Finding, PackageView, Span};
use crate::flow::AbstractValue;

const FLAGS: [&str; 2] = ["readEncryptionRequired", "writeEncryptionRequired"];

/// Collects every value stored under `key` anywhere in the shape.
fn find_key<'v>(v: &'v AbstractValue, key: &str, out: &mut Vec<&'v AbstractValue>) {
    match v {
        AbstractValue::ObjectShape(m) => {
            for (k, inner) in m {
                if k == key {
                    out.push(inner);
                } else {
                    find_key(inner, key, out);
                }
            }
        }
        AbstractValue::List(items) => items.iter().for_each(|i| find_key(i, key, out)),
        _ => {}
    }
}

/// Peripheral services registered without read/write encryption.
pub fn detect_ble(view: &PackageView<'_>) -> Vec<Finding> {
    let flow = view.flow;
    let mut calls = flow.find_calls("addService");
    calls.extend(flow.find_calls("*.addService"));
    calls.sort_by_key(|c| (c.file, c.node.id));
    calls.dedup_by_key(|c| (c.file, c.node.id));

    let mut out = Vec::new();
    for call in calls {
        let Some(arg) = call.args().first() else {
            continue;
        };
        let (value, hop) = flow.resolve_traced(call.file, arg);
        let confidence = if !matches!(value, AbstractValue::ObjectShape(_)) {
            Some(Confidence::Low)
        } else {
            let mut found = Vec::new();
            let mut absent = false;
            for flag in FLAGS {
                let before = found.len();
                find_key(&value, flag, &mut found);
                absent |= found.len() == before;
            }
            let disabled = found
                .iter()
                .any(|v| matches!(v, AbstractValue::Const(l) if !l.truthy()));
            let unknown = found
                .iter()
                .any(|v| !matches!(v, AbstractValue::Const(_)));
            if disabled {
                Some(Confidence::High)
            } else if unknown {
                Some(Confidence::Low)
            } else if absent {
                Some(Confidence::Medium)
            } else {
                None
            }
        };
        if let Some(c) = confidence {
            let c = if hop { c.lowered() } else { c };
            out.push(Finding::new(
                Detector::BleMisconfig,
                view.path(call.file),
                Span::from(&call.span),
                format!("{}({value})", call.callee),
                c,
            ));
        }
    }
    out
}
