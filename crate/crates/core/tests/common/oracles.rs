//! Reference implementations written from the definitions, kept apart from
//! the library code they check.

use std::collections::{BTreeMap, HashSet};

use regex::Regex;

/// Visible body text by regular expressions: chrome elements and comments are
/// dropped, every tag becomes a space, entities are decoded.
pub fn body_text(html: &str) -> String {
    let body = Regex::new(r"(?is)<body[^>]*>(.*)</body>").unwrap();
    let mut s = body.captures(html).map(|c| c[1].to_string()).unwrap_or_else(|| html.to_string());
    s = Regex::new(r"(?s)<!--.*?-->").unwrap().replace_all(&s, " ").into_owned();
    for tag in ["script", "style", "nav", "footer", "noscript", "template"] {
        let re = Regex::new(&format!(r"(?is)<{tag}\b[^>]*>.*?</{tag}>")).unwrap();
        s = re.replace_all(&s, " ").into_owned();
    }
    s = Regex::new(r"(?s)<[^>]*>").unwrap().replace_all(&s, " ").into_owned();
    for (entity, ch) in [("&gt;", ">"), ("&lt;", "<"), ("&quot;", "\""), ("&#39;", "'"), ("&copy;", "\u{a9}"), ("&nbsp;", " "), ("&amp;", "&")] {
        s = s.replace(entity, ch);
    }
    s
}

pub fn without_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

pub fn token_multiset(s: &str) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in s.split_whitespace() {
        *m.entry(t.to_string()).or_insert(0) += 1;
    }
    m
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Every candidate scored, filtered strictly above the threshold, ordered by
/// score then id, cut at k.
pub fn search(query: &[f64], items: &[(String, Vec<f64>)], threshold: f64, k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = items
        .iter()
        .map(|(id, v)| (id.clone(), cosine(query, v)))
        .filter(|(_, s)| *s > threshold)
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn first_occurrences(retrieved: &[String], k: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, r) in retrieved.iter().enumerate() {
        if i >= k {
            break;
        }
        if seen.insert(r.clone()) {
            out.push(r.clone());
        } else {
            out.push(String::new());
        }
    }
    out
}

pub fn precision(retrieved: &[String], relevant: &HashSet<String>, k: usize) -> f64 {
    let hits = first_occurrences(retrieved, k).iter().filter(|r| relevant.contains(*r)).count();
    hits as f64 / k as f64
}

pub fn recall(retrieved: &[String], relevant: &HashSet<String>, k: usize) -> f64 {
    let hits = first_occurrences(retrieved, k).iter().filter(|r| relevant.contains(*r)).count();
    hits as f64 / relevant.len() as f64
}

/// Mean over relevant ranks of precision at that rank, divided by min(|rel|, k).
pub fn average_precision(retrieved: &[String], relevant: &HashSet<String>, k: usize) -> f64 {
    let top = first_occurrences(retrieved, k);
    let mut total = 0.0;
    for i in 0..top.len() {
        if relevant.contains(&top[i]) {
            let hits_so_far = top[..=i].iter().filter(|r| relevant.contains(*r)).count();
            total += hits_so_far as f64 / (i + 1) as f64;
        }
    }
    total / relevant.len().min(k) as f64
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
