//! Adapters from public benchmark layouts to [`NewsRecord`].

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use walkdir::WalkDir;

use super::{Comment, Label, LoadReport, NewsRecord};
use crate::error::{Error, Result};

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Twitter `created_at` ("Wed Jan 07 11:07:51 +0000 2015") or reddit epoch fields.
fn post_timestamp(post: &Value) -> Option<i64> {
    if let Some(s) = post.get("created_at").and_then(Value::as_str) {
        return chrono::DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y")
            .ok()
            .map(|t| t.timestamp());
    }
    let data = post.get("data").unwrap_or(post);
    ["created_utc", "created"]
        .iter()
        .find_map(|k| data.get(*k).and_then(Value::as_f64))
        .map(|t| t as i64)
}

fn post_text(post: &Value) -> Option<String> {
    for key in ["full_text", "text"] {
        if let Some(s) = post.get(key).and_then(Value::as_str) {
            return Some(s.to_string());
        }
    }
    // Reddit source posts nest the submission under data.children[0].data.
    let data = post
        .pointer("/data/children/0/data")
        .or_else(|| post.get("data"))?;
    let parts: Vec<&str> = ["title", "selftext", "body"]
        .iter()
        .filter_map(|k| data.get(*k).and_then(Value::as_str))
        .filter(|s| !s.trim().is_empty())
        .collect();
    (!parts.is_empty()).then(|| parts.join(" "))
}

fn rumoureval_labels(root: &Path) -> Result<HashMap<String, Option<Label>>> {
    let mut labels = HashMap::new();
    for entry in WalkDir::new(root).into_iter().filter_map(|e| e.ok()) {
        let name = entry.file_name().to_string_lossy();
        if !(name.contains("key") && name.ends_with(".json")) {
            continue;
        }
        let json = read_json(entry.path())?;
        if let Some(map) = json.get("subtaskbenglish").and_then(Value::as_object) {
            for (id, verdict) in map {
                let label = match verdict.as_str() {
                    Some("false") => Some(Label::Fake),
                    Some("true") => Some(Label::True),
                    _ => None,
                };
                labels.insert(id.clone(), label);
            }
        }
    }
    Ok(labels)
}

/// Loads the RumourEval-2019 thread layout: `<thread>/source-tweet/*.json`
/// plus `<thread>/replies/*.json`, labels from any `*key*.json` file
/// (`subtaskbenglish`). "unverified" threads load unlabeled.
pub(super) fn load_rumoureval19(root: &Path) -> Result<LoadReport> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "expected a directory"),
        ));
    }
    let labels = rumoureval_labels(root)?;
    let mut threads: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_dir() && e.file_name() == "source-tweet")
        .filter_map(|e| e.path().parent().map(Path::to_path_buf))
        .collect();
    threads.sort();

    let mut report = LoadReport::default();
    for thread in threads {
        let id = thread
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let source = json_files(&thread.join("source-tweet"))
            .into_iter()
            .next()
            .and_then(|p| read_json(&p).ok());
        let Some(news_text) = source.as_ref().and_then(post_text) else {
            report.skipped_records += 1;
            continue;
        };
        if news_text.trim().is_empty() {
            report.skipped_records += 1;
            continue;
        }
        let mut comments = Vec::new();
        for (order, path) in json_files(&thread.join("replies")).iter().enumerate() {
            let Ok(post) = read_json(path) else {
                report.dropped_comments += 1;
                continue;
            };
            match (post_text(&post), post_timestamp(&post)) {
                (Some(text), Some(ts)) => comments.push(Comment {
                    text,
                    timestamp: ts,
                    source_order: order,
                }),
                _ => report.dropped_comments += 1,
            }
        }
        let total = comments.len();
        let label = labels.get(&id).copied().flatten();
        let record = NewsRecord::new(id, news_text, comments, label);
        report.dropped_comments += total - record.comments.len();
        report.records.push(record);
    }
    Ok(report)
}

fn json_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

/// Loads the Weibo-2016 layout: `Weibo.txt` with lines
/// `eid:<id>\tlabel:<0|1>\t...` and `Weibo/<id>.json` holding the post array
/// (source post first, each post with `text` and epoch `t`).
pub(super) fn load_weibo16(root: &Path) -> Result<LoadReport> {
    let index_path = root.join("Weibo.txt");
    let index = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let mut report = LoadReport::default();
    for line in index.lines().filter(|l| !l.trim().is_empty()) {
        let mut eid = None;
        let mut label = None;
        for field in line.split_whitespace() {
            if let Some(v) = field.strip_prefix("eid:") {
                eid = Some(v.to_string());
            } else if let Some(v) = field.strip_prefix("label:") {
                label = v.parse::<usize>().ok().and_then(Label::from_index);
            }
        }
        let Some(eid) = eid else {
            report.skipped_records += 1;
            continue;
        };
        let posts = match read_json(&root.join("Weibo").join(format!("{eid}.json"))) {
            Ok(Value::Array(posts)) if !posts.is_empty() => posts,
            _ => {
                report.skipped_records += 1;
                continue;
            }
        };
        let source_idx = posts
            .iter()
            .position(|p| p.get("parent").is_some_and(Value::is_null))
            .unwrap_or(0);
        let news_text = posts[source_idx]
            .get("text")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        if news_text.trim().is_empty() {
            report.skipped_records += 1;
            continue;
        }
        let mut comments = Vec::new();
        for (order, post) in posts.iter().enumerate().filter(|(i, _)| *i != source_idx) {
            let text = post.get("text").and_then(Value::as_str);
            let ts = post.get("t").and_then(Value::as_i64);
            match (text, ts) {
                (Some(text), Some(ts)) => comments.push(Comment {
                    text: text.to_string(),
                    timestamp: ts,
                    source_order: order,
                }),
                _ => report.dropped_comments += 1,
            }
        }
        let total = comments.len();
        let record = NewsRecord::new(eid, news_text, comments, label);
        report.dropped_comments += total - record.comments.len();
        report.records.push(record);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rumoureval_thread_layout() {
        let dir = tempfile::tempdir().unwrap();
        let thread = dir.path().join("twitter-english/charliehebdo/552783");
        fs::create_dir_all(thread.join("source-tweet")).unwrap();
        fs::create_dir_all(thread.join("replies")).unwrap();
        fs::write(
            thread.join("source-tweet/552783.json"),
            r#"{"text":"Breaking news","created_at":"Wed Jan 07 11:06:08 +0000 2015"}"#,
        )
        .unwrap();
        fs::write(
            thread.join("replies/2.json"),
            r#"{"text":"later","created_at":"Wed Jan 07 12:00:00 +0000 2015"}"#,
        )
        .unwrap();
        fs::write(
            thread.join("replies/1.json"),
            r#"{"text":"earlier","created_at":"Wed Jan 07 11:30:00 +0000 2015"}"#,
        )
        .unwrap();
        fs::write(
            dir.path().join("train-key.json"),
            r#"{"subtaskaenglish":{},"subtaskbenglish":{"552783":"false"}}"#,
        )
        .unwrap();
        let report = load_rumoureval19(dir.path()).unwrap();
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert_eq!(r.id, "552783");
        assert_eq!(r.label, Some(Label::Fake));
        assert_eq!(r.comments[0].text, "earlier");
        assert_eq!(r.comments[1].text, "later");
    }

    #[test]
    fn weibo_layout() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("Weibo")).unwrap();
        fs::write(dir.path().join("Weibo.txt"), "eid:42\tlabel:1\t1 2 3\n").unwrap();
        fs::write(
            dir.path().join("Weibo/42.json"),
            r#"[{"text":"源微博","t":100,"parent":null},{"text":"评论二","t":300},{"text":"评论一","t":200}]"#,
        )
        .unwrap();
        let report = load_weibo16(dir.path()).unwrap();
        let r = &report.records[0];
        assert_eq!(r.label, Some(Label::Fake));
        assert_eq!(r.news_text, "源微博");
        assert_eq!(r.comments[0].text, "评论一");
    }
}
