use super::{
    classify_url, secret_candidates, Confidence, Detector, DetectorConfig, Finding, PackageView,
    Span, UrlClass,
};
use crate::flow::{collect_strings, AbstractValue, CallSite, PackageFlow};
use crate::minijs::{walk, Node, NodeKind};

/// Names of encrypted-data APIs that arrive through a page event handler
/// rather than a `wx.*` call.
const HANDLER_APIS: [&str; 1] = ["getPhoneNumber"];

/// URL strings that look like session-key endpoints.
pub fn detect_session_key_urls(view: &PackageView<'_>, cfg: &DetectorConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    for pf in view.files {
        for (s, span) in collect_strings(&pf.ast) {
            if !s.contains('/') || s.chars().any(char::is_whitespace) {
                continue;
            }
            // a full code-to-session URL with an embedded secret is
            // reported as a leaked secret instead
            if (s.contains("jscode2session") || s.contains("secret="))
                && !secret_candidates(&s, cfg).is_empty()
            {
                continue;
            }
            let (confidence, kind) = match classify_url(&s, cfg) {
                UrlClass::Duplication => (Confidence::High, "duplicates the code-to-session API"),
                UrlClass::Getter => (Confidence::Medium, "session key getter"),
                UrlClass::None => continue,
            };
            out.push(Finding::new(
                Detector::SessionKeyUrl,
                pf.path.clone(),
                Span::from(&span),
                format!("{s:?}: {kind}"),
                confidence,
            ));
        }
    }
    out
}

fn reaches_network(flow: &PackageFlow<'_>, cfg: &DetectorConfig, calls: &[CallSite<'_>]) -> bool {
    calls
        .iter()
        .any(|c| cfg.is_network_api(&c.callee) || cfg.is_network_api(&flow.resolved_callee(c)))
}

/// Encrypted-data APIs whose results never reach a network call, in a
/// package that does send its login code to a back-end.
pub fn detect_session_key_network(view: &PackageView<'_>, cfg: &DetectorConfig) -> Vec<Finding> {
    let flow = view.flow;
    let sends_login = flow.find_calls("wx.login").iter().any(|login| {
        let chain = flow.successors(login.file, login.node);
        reaches_network(flow, cfg, &chain.successors)
    });
    if !sends_login {
        return Vec::new();
    }

    let mut out = Vec::new();
    let call_apis = cfg
        .encrypted_data_apis
        .iter()
        .filter(|a| !HANDLER_APIS.contains(&a.as_str()));
    let mut targets: Vec<CallSite<'_>> = call_apis
        .flat_map(|api| flow.find_calls(&format!("*.{api}")))
        .collect();
    targets.sort_by_key(|c| (c.file, c.node.id));
    targets.dedup_by_key(|c| (c.file, c.node.id));
    for call in targets {
        let chain = flow.successors(call.file, call.node);
        if reaches_network(flow, cfg, &chain.successors) {
            continue;
        }
        let confidence = if chain.truncated { Confidence::Low } else { Confidence::Medium };
        out.push(Finding::new(
            Detector::SessionKeyMissingNetwork,
            view.path(call.file),
            Span::from(&call.span),
            format!(
                "{} result never sent to a network API (next calls: {})",
                call.callee,
                callee_list(&chain.successors)
            ),
            confidence,
        ));
    }

    let handler_names: Vec<String> = HANDLER_APIS
        .iter()
        .filter(|h| cfg.encrypted_data_apis.contains(**h))
        .map(|h| h.to_lowercase())
        .collect();
    for (fi, pf) in view.files.iter().enumerate() {
        let mut handlers: Vec<(&Node, &Node)> = Vec::new();
        walk(&pf.ast, &mut |n, _| {
            if let NodeKind::Property(key) = &n.kind {
                let key = key.to_lowercase();
                if handler_names.iter().any(|h| key.ends_with(h.as_str())) {
                    handlers.push((n, &n.children[0]));
                }
            }
        });
        for (prop, value) in handlers {
            let AbstractValue::Function { file, node } = flow.resolve(fi, value) else {
                continue;
            };
            let function = flow.files[file].node(node);
            let mut calls: Vec<CallSite<'_>> = Vec::new();
            let mut truncated = false;
            for c in flow.calls_in_function(function) {
                let chain = flow.successors(file, c);
                truncated |= chain.truncated;
                calls.push(chain.origin);
                calls.extend(chain.successors);
            }
            if reaches_network(flow, cfg, &calls) {
                continue;
            }
            let confidence = if truncated { Confidence::Low } else { Confidence::Medium };
            let NodeKind::Property(key) = &prop.kind else { unreachable!() };
            out.push(Finding::new(
                Detector::SessionKeyMissingNetwork,
                pf.path.clone(),
                Span::from(&prop.span),
                format!(
                    "handler {key} never sends its encrypted data (calls: {})",
                    callee_list(&calls)
                ),
                confidence,
            ));
        }
    }
    out
}

fn callee_list(calls: &[CallSite<'_>]) -> String {
    if calls.is_empty() {
        return "none".into();
    }
    calls.iter().map(|c| c.callee.as_str()).collect::<Vec<_>>().join(", ")
}

/// Both session-key heuristics.
pub fn detect_session_key(view: &PackageView<'_>, cfg: &DetectorConfig) -> Vec<Finding> {
    let mut out = detect_session_key_urls(view, cfg);
    out.extend(detect_session_key_network(view, cfg));
    out
}
