use std::collections::BTreeMap;

use regex::Regex;

use super::{Confidence, Detector, DetectorConfig, Finding, Span};
use crate::pkg::Package;

/// One secret-shaped run found in raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretMatch {
    pub secret: String,
    /// Byte range in the scanned text.
    pub start: usize,
    pub end: usize,
    pub in_url: bool,
}

/// Matches of `re` that are not part of a longer run of the same shape:
/// a match is dropped when the pattern also matches the same-width window
/// shifted one character to the left or right.
fn bounded_matches(re: &Regex, text: &str) -> Vec<(usize, usize)> {
    let anchored = Regex::new(&format!("^(?:{})$", re.as_str())).expect("anchoring keeps regex valid");
    let prev_char = |i: usize| text[..i].chars().next_back().map(|c| c.len_utf8());
    let next_char = |i: usize| text[i..].chars().next().map(|c| c.len_utf8());
    re.find_iter(text)
        .filter(|m| {
            let (s, e) = (m.start(), m.end());
            let left = match (prev_char(s), prev_char(e)) {
                (Some(a), Some(b)) => anchored.is_match(&text[s - a..e - b]),
                _ => false,
            };
            let right = match (next_char(s), next_char(e)) {
                (Some(a), Some(b)) => anchored.is_match(&text[s + a..e + b]),
                _ => false,
            };
            !left && !right
        })
        .map(|m| (m.start(), m.end()))
        .collect()
}

/// The quoted string around byte range `start..end` on its line, or the
/// whitespace-delimited word around it when it is not inside quotes.
fn enclosing_string(text: &str, start: usize, end: usize) -> &str {
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[end..].find('\n').map_or(text.len(), |i| end + i);
    let before = &text[line_start..start];
    let after = &text[end..line_end];
    for q in ['"', '\''] {
        if let (Some(l), Some(r)) = (before.rfind(q), after.find(q)) {
            return &text[line_start + l + 1..end + r];
        }
    }
    let l = before.rfind(char::is_whitespace).map_or(0, |i| i + 1);
    let r = after.find(char::is_whitespace).unwrap_or(after.len());
    &text[line_start + l..end + r]
}

/// Every bounded secret-shaped run in `text`, classified by context.
pub fn secret_candidates(text: &str, cfg: &DetectorConfig) -> Vec<SecretMatch> {
    let Ok(re) = cfg.active_secret_regex() else {
        return Vec::new();
    };
    bounded_matches(&re, text)
        .into_iter()
        .map(|(start, end)| {
            let ctx = enclosing_string(text, start, end);
            SecretMatch {
                secret: text[start..end].to_string(),
                start,
                end,
                in_url: ctx.contains("jscode2session") || ctx.contains("secret="),
            }
        })
        .collect()
}

fn span_of(text: &str, start: usize, end: usize) -> Span {
    let pos = |i: usize| {
        let line = text[..i].matches('\n').count() as u32 + 1;
        let line_start = text[..i].rfind('\n').map_or(0, |p| p + 1);
        (line, text[line_start..i].chars().count() as u32 + 1)
    };
    let (line, col) = pos(start);
    let (end_line, end_col) = pos(end);
    Span {
        line,
        col,
        end_line,
        end_col,
    }
}

/// Scans the raw text of every entry. One finding per distinct secret and
/// file; an occurrence inside a code-to-session or `secret=` URL wins over
/// a bare one.
pub fn detect_appsecret(pkg: &Package, cfg: &DetectorConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    for entry in &pkg.entries {
        let text = entry.text();
        let mut per_secret: BTreeMap<String, SecretMatch> = BTreeMap::new();
        for m in secret_candidates(&text, cfg) {
            match per_secret.get(&m.secret) {
                Some(prev) if prev.in_url || !m.in_url => {}
                _ => {
                    per_secret.insert(m.secret.clone(), m);
                }
            }
        }
        for m in per_secret.into_values() {
            let (detector, evidence) = if m.in_url {
                (
                    Detector::AppSecretInUrl,
                    format!("secret in URL: {}", enclosing_string(&text, m.start, m.end)),
                )
            } else {
                (Detector::AppSecretString, format!("secret-shaped string {}", m.secret))
            };
            let mut f = Finding::new(
                detector,
                entry.path.clone(),
                span_of(&text, m.start, m.end),
                evidence,
                Confidence::Medium,
            );
            f.candidate_secret = Some(m.secret);
            out.push(f);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pkg::FileEntry;

    fn scan(src: &str) -> Vec<Finding> {
        let pkg = Package::new(vec![FileEntry::new("a.js", src)]).unwrap();
        detect_appsecret(&pkg, &DetectorConfig::default())
    }

    #[test]
    fn bare_secret() {
        let f = scan(r#"var s = "0123456789abcdef0123456789abcdef";"#);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].detector, Detector::AppSecretString);
        assert_eq!(f[0].candidate_secret.as_deref(), Some("0123456789abcdef0123456789abcdef"));
        assert_eq!((f[0].span.line, f[0].span.col, f[0].span.end_col), (1, 10, 42));
    }

    #[test]
    fn secret_in_url() {
        let f = scan(
            "var u = 'https://api.weixin.qq.com/sns/jscode2session?appid=wx0123456789abcdef&secret=0123456789abcdef0123456789abcdef&js_code=';",
        );
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].detector, Detector::AppSecretInUrl);
    }

    #[test]
    fn boundaries() {
        assert!(scan(&"a".repeat(31)).is_empty());
        assert!(scan(&"a".repeat(33)).is_empty());
        assert!(scan(&"ab".repeat(32)).is_empty());
        assert!(scan(&format!("x{}y", "0".repeat(32))).len() == 1);
        // sha1-sized hashes are not secrets
        assert!(scan("'da39a3ee5e6b4b0d3255bfef95601890afd80709'").is_empty());
    }

    #[test]
    fn one_finding_per_secret() {
        let s = "0123456789abcdef0123456789abcdef";
        let f = scan(&format!("var a = '{s}';\nvar b = '{s}';\nvar c = '{}';", s.replace('0', "9")));
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn alt_regex() {
        let cfg = DetectorConfig::baidu();
        let text = "client_secret=AbCdEfGhIjKlMnOpQrStUvWxYz012345&x";
        let m = secret_candidates(text, &cfg);
        assert_eq!(m.len(), 1);
        assert!(m[0].in_url);
        assert!(secret_candidates(text, &DetectorConfig::default()).is_empty());
    }
}
