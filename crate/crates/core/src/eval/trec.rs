use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{LsrError, Result};
use crate::io::write_atomic;

/// Relevance judgments: query id → doc id → grade.
pub type Qrels = BTreeMap<String, BTreeMap<String, u32>>;

/// Ranked lists per query; position `i` holds rank `i + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    pub rankings: BTreeMap<String, Vec<(String, f64)>>,
    pub tag: String,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        RunFile {
            rankings: BTreeMap::new(),
            tag: tag.into(),
        }
    }

    pub fn insert(&mut self, qid: impl Into<String>, ranking: Vec<(String, f64)>) {
        self.rankings.insert(qid.into(), ranking);
    }

    pub fn get(&self, qid: &str) -> &[(String, f64)] {
        self.rankings.get(qid).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn parse_err(path: &str, line: usize, reason: impl Into<String>) -> LsrError {
    LsrError::Parse {
        path: path.to_owned(),
        line,
        reason: reason.into(),
    }
}

/// Parses `qid Q0 docid rank score tag` lines.
pub fn parse_run(text: &str, source: &str) -> Result<RunFile> {
    let mut run = RunFile::default();
    for (n, line) in text.lines().enumerate() {
        let n = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(parse_err(source, n, format!("expected 6 fields, found {}", f.len())));
        }
        let rank: usize = f[3].parse().map_err(|_| parse_err(source, n, "rank is not an integer"))?;
        let score: f64 = f[4].parse().map_err(|_| parse_err(source, n, "score is not a number"))?;
        if !score.is_finite() {
            return Err(parse_err(source, n, "score is not finite"));
        }
        let list = run.rankings.entry(f[0].to_owned()).or_default();
        if rank != list.len() + 1 {
            return Err(parse_err(source, n, format!("rank {rank} where {} expected", list.len() + 1)));
        }
        if list.last().is_some_and(|&(_, prev)| score > prev) {
            return Err(parse_err(source, n, "score increases down the ranking"));
        }
        list.push((f[2].to_owned(), score));
        run.tag = f[5].to_owned();
    }
    Ok(run)
}

/// Parses `qid 0 docid grade` lines.
pub fn parse_qrels(text: &str, source: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (n, line) in text.lines().enumerate() {
        let n = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(source, n, format!("expected 4 fields, found {}", f.len())));
        }
        let grade: i64 = f[3].parse().map_err(|_| parse_err(source, n, "grade is not an integer"))?;
        if grade < 0 {
            return Err(parse_err(source, n, "negative grade"));
        }
        qrels
            .entry(f[0].to_owned())
            .or_default()
            .insert(f[2].to_owned(), grade as u32);
    }
    Ok(qrels)
}

pub fn format_run(run: &RunFile) -> String {
    let mut out = String::new();
    let tag = if run.tag.is_empty() { "lsr" } else { run.tag.as_str() };
    for (qid, list) in &run.rankings {
        for (i, (doc, score)) in list.iter().enumerate() {
            // `{}` prints the shortest representation that round-trips.
            writeln!(out, "{qid} Q0 {doc} {} {score} {tag}", i + 1).unwrap();
        }
    }
    out
}

pub fn read_run(path: &Path) -> Result<RunFile> {
    let text = std::fs::read_to_string(path).map_err(|e| LsrError::io(path, e))?;
    parse_run(&text, &path.display().to_string())
}

pub fn write_run(run: &RunFile, path: &Path) -> Result<()> {
    write_atomic(path, format_run(run).as_bytes())
}

pub fn read_qrels(path: &Path) -> Result<Qrels> {
    let text = std::fs::read_to_string(path).map_err(|e| LsrError::io(path, e))?;
    parse_qrels(&text, &path.display().to_string())
}

pub fn format_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (qid, docs) in qrels {
        for (doc, grade) in docs {
            writeln!(out, "{qid} 0 {doc} {grade}").unwrap();
        }
    }
    out
}

pub fn write_qrels(qrels: &Qrels, path: &Path) -> Result<()> {
    write_atomic(path, format_qrels(qrels).as_bytes())
}
