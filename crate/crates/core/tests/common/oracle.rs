//! Deliberately naive reference implementations. Written without looking at
//! the library's internals: string n-gram keys, full DP tables, full sorts.

use std::collections::BTreeMap;

use hintsmith::embedding::EmbeddingTable;
use hintsmith::store::ExampleRecord;
use rust_stemmers::{Algorithm, Stemmer};

pub fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn grams(t: &[String], n: usize) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    if t.len() >= n {
        for i in 0..=t.len() - n {
            *m.entry(t[i..i + n].join(" ")).or_insert(0) += 1;
        }
    }
    m
}

pub fn bleu(c: &str, r: &str, n: usize) -> f64 {
    let (c, r) = (tokens(c), tokens(r));
    if c.is_empty() {
        return 0.0;
    }
    let mut precisions = Vec::new();
    for k in 1..=n {
        let cg = grams(&c, k);
        let rg = grams(&r, k);
        let total: usize = cg.values().sum();
        if total == 0 {
            return 0.0;
        }
        let mut hit = 0;
        for (g, cnt) in &cg {
            hit += (*cnt).min(*rg.get(g).unwrap_or(&0));
        }
        precisions.push(hit as f64 / total as f64);
    }
    if precisions.contains(&0.0) {
        return 0.0;
    }
    let geo = (precisions.iter().map(|p| p.ln()).sum::<f64>() / n as f64).exp();
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    geo * bp.min(1.0)
}

pub fn meteor(c: &str, r: &str) -> f64 {
    let (c, r) = (tokens(c), tokens(r));
    let stemmer = Stemmer::create(Algorithm::English);
    let mut ref_taken = vec![false; r.len()];
    let mut link: Vec<Option<usize>> = vec![None; c.len()];
    for stage in 0..2 {
        for i in 0..c.len() {
            if link[i].is_some() {
                continue;
            }
            for j in 0..r.len() {
                let same = if stage == 0 {
                    c[i] == r[j]
                } else {
                    stemmer.stem(&c[i]) == stemmer.stem(&r[j])
                };
                if !ref_taken[j] && same {
                    ref_taken[j] = true;
                    link[i] = Some(j);
                    break;
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = link.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(i, j) in &pairs {
        match prev {
            Some((pi, pj)) if i == pi + 1 && j == pj + 1 => {}
            _ => chunks += 1,
        }
        prev = Some((i, j));
    }
    let p = m as f64 / c.len() as f64;
    let rc = m as f64 / r.len() as f64;
    let f = 10.0 * p * rc / (rc + 9.0 * p);
    let frag = chunks as f64 / m as f64;
    f * (1.0 - 0.5 * frag * frag * frag)
}

pub fn rouge_l(c: &str, r: &str) -> f64 {
    let (c, r) = (tokens(c), tokens(r));
    let mut t = vec![vec![0usize; r.len() + 1]; c.len() + 1];
    for i in 1..=c.len() {
        for j in 1..=r.len() {
            t[i][j] = if c[i - 1] == r[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    let lcs = t[c.len()][r.len()] as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / c.len() as f64;
    let rc = lcs / r.len() as f64;
    let b2 = 1.2f64 * 1.2;
    (1.0 + b2) * p * rc / (rc + b2 * p)
}

fn cos_map(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    for (g, x) in a {
        if let Some(y) = b.get(g) {
            dot += x * y;
        }
    }
    dot / (na * nb)
}

pub fn cider(cands: &[String], refs: &[String]) -> Vec<f64> {
    let ct: Vec<_> = cands.iter().map(|s| tokens(s)).collect();
    let rt: Vec<_> = refs.iter().map(|s| tokens(s)).collect();
    let n_docs = refs.len() as f64;
    let mut out = vec![0.0; cands.len()];
    for n in 1..=4 {
        let cg: Vec<_> = ct.iter().map(|t| grams(t, n)).collect();
        let rg: Vec<_> = rt.iter().map(|t| grams(t, n)).collect();
        let idf = |g: &str| {
            let df = rg.iter().filter(|m| m.contains_key(g)).count().max(1);
            (n_docs / df as f64).ln()
        };
        let mut all_zero = true;
        for m in cg.iter().chain(rg.iter()) {
            for g in m.keys() {
                if idf(g).abs() > 0.0 {
                    all_zero = false;
                }
            }
        }
        let vec_of = |m: &BTreeMap<String, usize>| -> BTreeMap<String, f64> {
            m.iter()
                .map(|(g, &k)| (g.clone(), if all_zero { k as f64 } else { k as f64 * idf(g) }))
                .collect()
        };
        for i in 0..cands.len() {
            out[i] += cos_map(&vec_of(&cg[i]), &vec_of(&rg[i])) / 4.0;
        }
    }
    out
}

pub fn embed(text: &str, table: &EmbeddingTable) -> Vec<f64> {
    let mut acc = vec![0.0; table.dimension()];
    let mut n = 0;
    for t in tokens(text) {
        if let Some(v) = table.get(&t) {
            for d in 0..acc.len() {
                acc[d] += v[d];
            }
            n += 1;
        }
    }
    if n > 0 {
        for x in acc.iter_mut() {
            *x /= n as f64;
        }
    }
    acc
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Scores every record and fully sorts: score descending, then id ascending.
pub fn top_k(query: &str, records: &[ExampleRecord], table: &EmbeddingTable, k: usize) -> Vec<(String, f64)> {
    let q = embed(query, table);
    let mut all: Vec<(String, f64)> = records
        .iter()
        .map(|r| {
            let mut text = r.input_label.clone();
            for l in &r.nearby_labels {
                text = text + " " + l;
            }
            (r.record_id.clone(), cos(&q, &embed(&text, table)))
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}
