use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DetectorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UrlClass {
    /// Mirrors the platform's code-to-session endpoint.
    Duplication,
    /// A self-made endpoint that hands the session key to the client.
    Getter,
    None,
}

impl UrlClass {
    pub fn letter(self) -> Option<char> {
        match self {
            UrlClass::Duplication => Some('D'),
            UrlClass::Getter => Some('G'),
            UrlClass::None => None,
        }
    }
}

/// Splits on non-alphanumerics and camelCase boundaries, then cuts each
/// lowercase run into dictionary words, longest match first. Characters no
/// dictionary word covers are kept together as one residue word.
pub fn word_segment(s: &str, dictionary: &BTreeSet<String>) -> Vec<String> {
    let max_len = dictionary.iter().map(|w| w.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for part in camel_parts(s) {
        let run = part.to_lowercase();
        let chars: Vec<char> = run.chars().collect();
        let mut residue = String::new();
        let mut i = 0;
        while i < chars.len() {
            let longest = (1..=max_len.min(chars.len() - i))
                .rev()
                .map(|n| chars[i..i + n].iter().collect::<String>())
                .find(|cand| dictionary.contains(cand));
            match longest {
                Some(word) => {
                    if !residue.is_empty() {
                        out.push(std::mem::take(&mut residue));
                    }
                    i += word.chars().count();
                    out.push(word);
                }
                None => {
                    residue.push(chars[i]);
                    i += 1;
                }
            }
        }
        if !residue.is_empty() {
            out.push(residue);
        }
    }
    out
}

fn camel_parts(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for token in s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let chars: Vec<char> = token.chars().collect();
        let mut cur = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let boundary = i > 0 && c.is_uppercase() && {
                let prev = chars[i - 1];
                let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower)
            };
            if boundary && !cur.is_empty() {
                parts.push(std::mem::take(&mut cur));
            }
            cur.push(c);
        }
        if !cur.is_empty() {
            parts.push(cur);
        }
    }
    parts
}

/// Classifies a URL-like string as a session-key endpoint.
pub fn classify_url(s: &str, cfg: &DetectorConfig) -> UrlClass {
    let lower = s.to_lowercase();
    if lower.contains("jscode2session")
        || lower.contains("code2session")
        || lower.contains("api.weixin.qq.com")
    {
        return UrlClass::Duplication;
    }
    let (path, query) = match s.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (s, None),
    };
    let path = path.split('#').next().unwrap_or(path);
    let mut pieces: Vec<&str> = vec![path.rsplit('/').next().unwrap_or(path)];
    if let Some(q) = query {
        for pair in q.split('&') {
            pieces.push(pair.split_once('=').map_or(pair, |(_, v)| v));
        }
    }
    let getter = pieces.iter().any(|piece| {
        let words: BTreeSet<String> = word_segment(piece, &cfg.url_keyword_dictionary)
            .into_iter()
            .collect();
        let has = |w: &str| words.contains(w);
        has("session") && (has("key") || has("get") || has("new"))
    });
    if getter {
        UrlClass::Getter
    } else {
        UrlClass::None
    }
}
