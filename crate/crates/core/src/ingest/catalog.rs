use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{IngestError, LogFormat, RawLogRecord, SessionTrace};

/// One behavior type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub behavior_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect_target: Option<String>,
    /// Labels that always appear together with this one in a request group.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

/// The set of behavior types, in a fixed order used by every index-based
/// structure downstream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl BehaviorCatalog {
    /// A catalog of bare labels, sorted.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<String> = labels.into_iter().map(normalize_label).collect();
        Self {
            entries: set
                .into_iter()
                .map(|behavior_type| CatalogEntry {
                    behavior_type,
                    method: None,
                    path: None,
                    redirect_target: None,
                    aliases: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.behavior_type.clone()).collect()
    }

    pub fn index_of(&self, behavior_type: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.behavior_type == behavior_type)
    }

    pub fn get(&self, behavior_type: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.behavior_type == behavior_type)
    }

    /// Maps a raw or normalized label (canonical or alias) to its behavior type.
    pub fn resolve(&self, label: &str) -> Option<&str> {
        let label = normalize_label(label);
        self.entries
            .iter()
            .find(|e| e.behavior_type == label || e.aliases.contains(&label))
            .map(|e| e.behavior_type.as_str())
    }

    /// Finds the behavior registered for a method and concrete path.
    pub fn resolve_request(&self, method: &str, path: &str) -> Option<&str> {
        let template = path_template(path);
        self.entries
            .iter()
            .find(|e| {
                e.method
                    .as_deref()
                    .is_some_and(|m| m.eq_ignore_ascii_case(method))
                    && e.path.as_deref() == Some(template.as_str())
            })
            .map(|e| e.behavior_type.as_str())
    }

    pub fn redirect_target(&self, behavior_type: &str) -> Option<&str> {
        self.get(behavior_type).and_then(|e| e.redirect_target.as_deref())
    }

    /// Declares that `source` is always redirected to `target`.
    pub fn set_redirect(&mut self, source: &str, target: &str) -> Result<(), IngestError> {
        let target = normalize_label(target);
        if self.index_of(&target).is_none() {
            return Err(IngestError::UnknownBehavior(target));
        }
        let source = normalize_label(source);
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.behavior_type == source)
            .ok_or(IngestError::UnknownBehavior(source))?;
        entry.redirect_target = Some(target);
        Ok(())
    }
}

/// Lower-cases a behavior label and joins words with underscores, so
/// "setting currency" and "setting_currency" name the same behavior.
pub fn normalize_label(label: &str) -> String {
    label
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join("_")
}

/// Replaces identifier-like path segments with `{id}` and drops the query.
pub(crate) fn path_template(path: &str) -> String {
    let path = path.split(['?', '#']).next().unwrap_or("");
    path.split('/')
        .map(|seg| {
            let numeric = !seg.is_empty() && seg.chars().all(|c| c.is_ascii_digit());
            let id_like = seg.len() >= 8
                && seg.chars().all(|c| c.is_ascii_hexdigit() || c == '-')
                && seg.chars().any(|c| c.is_ascii_digit());
            if numeric || id_like {
                "{id}"
            } else {
                seg
            }
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// Request groups keyed by (session, request id); records in timestamp order.
pub(crate) fn request_groups(records: &[RawLogRecord]) -> BTreeMap<(&str, &str), Vec<&RawLogRecord>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&RawLogRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.session_id.as_str(), r.request_id.as_str()))
            .or_default()
            .push(r);
    }
    // stable: records of one instant keep their log order
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.timestamp);
    }
    groups
}

pub(crate) fn is_template_message(message: &str, format: &LogFormat) -> bool {
    message == format.started_message || message == format.complete_message
}

/// Behavior label for a method and path when the logs carry no message label.
pub(crate) fn template_label(method: &str, path: &str) -> String {
    format!("{} {}", method.to_uppercase(), path_template(path))
}

/// Builds the behavior catalog from request groups.
///
/// Labels come from the messages between the started and complete lines, or
/// from the method and path template when a group has none. Labels that occur
/// in exactly the same request groups are aliases of one behavior; the label
/// that usually comes first in the group is kept as the canonical name.
pub fn derive_catalog(records: &[RawLogRecord], format: &LogFormat) -> Result<BehaviorCatalog, IngestError> {
    let groups = request_groups(records);
    let mut occurrences: BTreeMap<String, usize> = BTreeMap::new();
    let mut first_count: BTreeMap<String, usize> = BTreeMap::new();
    let mut pair_count: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut templates: BTreeMap<String, BTreeMap<(String, String), usize>> = BTreeMap::new();
    let mut group_labels: Vec<Vec<String>> = Vec::new();

    for group in groups.values() {
        let mut labels: Vec<String> = Vec::new();
        for r in group {
            if is_template_message(&r.message, format) {
                continue;
            }
            let l = normalize_label(&r.message);
            if !l.is_empty() && !labels.contains(&l) {
                labels.push(l);
            }
        }
        let request = group
            .iter()
            .find_map(|r| Some((r.http_method.clone()?, r.http_path.clone()?)));
        if labels.is_empty() {
            if let Some((m, p)) = &request {
                labels.push(template_label(m, p));
            }
        }
        if labels.is_empty() {
            continue;
        }
        for l in &labels {
            *occurrences.entry(l.clone()).or_default() += 1;
            if let Some((m, p)) = &request {
                *templates
                    .entry(l.clone())
                    .or_default()
                    .entry((m.to_uppercase(), path_template(p)))
                    .or_default() += 1;
            }
        }
        for (i, a) in labels.iter().enumerate() {
            for b in &labels[i + 1..] {
                let key = if a < b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                };
                *pair_count.entry(key).or_default() += 1;
            }
        }
        group_labels.push(labels);
    }
    if occurrences.is_empty() {
        return Err(IngestError::EmptyCatalog {
            records: records.len(),
        });
    }

    // union-find over alias pairs
    let labels: Vec<String> = occurrences.keys().cloned().collect();
    let idx = |l: &str| labels.binary_search_by(|x| x.as_str().cmp(l)).unwrap();
    let mut parent: Vec<usize> = (0..labels.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for ((a, b), n) in &pair_count {
        if *n == occurrences[a] && *n == occurrences[b] {
            let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        let root = find(&mut parent, i);
        classes.entry(root).or_default().push(l.clone());
    }
    for labels in &group_labels {
        // which member of each class is listed first in this group
        let mut seen = BTreeSet::new();
        for l in labels {
            let root = find(&mut parent, idx(l));
            if seen.insert(root) {
                *first_count.entry(l.clone()).or_default() += 1;
            }
        }
    }

    let mut entries: Vec<CatalogEntry> = classes
        .into_values()
        .map(|members| {
            let canonical = members
                .iter()
                .max_by(|a, b| {
                    let fa = first_count.get(*a).copied().unwrap_or(0);
                    let fb = first_count.get(*b).copied().unwrap_or(0);
                    fa.cmp(&fb).then_with(|| b.cmp(a))
                })
                .cloned()
                .unwrap();
            let template = members
                .iter()
                .filter_map(|m| templates.get(m))
                .flat_map(|t| t.iter())
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .map(|(k, _)| k.clone());
            CatalogEntry {
                aliases: members.iter().filter(|m| **m != canonical).cloned().collect(),
                behavior_type: canonical,
                method: template.as_ref().map(|t| t.0.clone()),
                path: template.map(|t| t.1),
                redirect_target: None,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.behavior_type.cmp(&b.behavior_type));
    Ok(BehaviorCatalog { entries })
}

const REDIRECT_STATUSES: [u16; 4] = [301, 302, 303, 307];

/// Finds behaviors whose responses are redirects that are immediately followed
/// by the same next behavior.
///
/// A source qualifies when every occurrence answered with a redirect status and
/// at least 90% of them are followed, within `immediate_gap_s` seconds, by one
/// common target.
pub fn detect_redirects(traces: &[SessionTrace], immediate_gap_s: f64) -> Vec<(String, String)> {
    let mut total: BTreeMap<&str, usize> = BTreeMap::new();
    let mut non_redirect: BTreeSet<&str> = BTreeSet::new();
    let mut followers: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for t in traces {
        for (i, e) in t.events.iter().enumerate() {
            let a = e.behavior_type.as_str();
            *total.entry(a).or_default() += 1;
            if !e.status.is_some_and(|s| REDIRECT_STATUSES.contains(&s)) {
                non_redirect.insert(a);
                continue;
            }
            if let (Some(next), Some(gap)) = (t.events.get(i + 1), t.think_gaps.get(i)) {
                if *gap <= immediate_gap_s {
                    *followers
                        .entry(a)
                        .or_default()
                        .entry(next.behavior_type.as_str())
                        .or_default() += 1;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (a, n) in total {
        if non_redirect.contains(a) {
            continue;
        }
        let Some((b, k)) = followers
            .get(a)
            .and_then(|f| f.iter().max_by(|x, y| x.1.cmp(y.1).then_with(|| y.0.cmp(x.0))))
        else {
            continue;
        };
        if *b != a && (*k as f64) >= 0.9 * n as f64 {
            out.push((a.to_string(), b.to_string()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::BehaviorEvent;

    fn rec(ts: i64, session: &str, req: &str, msg: &str) -> RawLogRecord {
        RawLogRecord {
            timestamp: ts,
            session_id: session.into(),
            request_id: req.into(),
            message: msg.into(),
            http_method: None,
            http_path: None,
            http_status: None,
            extra: Default::default(),
        }
    }

    fn group(out: &mut Vec<RawLogRecord>, ts: i64, session: &str, req: &str, labels: &[&str]) {
        out.push(rec(ts, session, req, "request started"));
        for (i, l) in labels.iter().enumerate() {
            out.push(rec(ts + 1 + i as i64, session, req, l));
        }
        out.push(rec(ts + 10, session, req, "request complete"));
    }

    #[test]
    fn six_shop_behaviors() {
        let labels = [
            "home",
            "setting currency",
            "serving product page",
            "view user cart",
            "adding to cart",
            "placing order",
        ];
        let mut records = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let extra: &[&str] = if *l == "placing order" {
                &[l, "order placed"]
            } else {
                &[l]
            };
            group(&mut records, 100 * i as i64 + 1, "s", &format!("r{i}"), extra);
        }
        let cat = derive_catalog(&records, &LogFormat::default()).unwrap();
        assert_eq!(cat.len(), 6);
        assert_eq!(cat.resolve("order placed"), Some("placing_order"));
        assert_eq!(
            cat.get("placing_order").unwrap().aliases,
            vec!["order_placed".to_string()]
        );
        assert!(cat.index_of("setting_currency").is_some());
    }

    #[test]
    fn single_type() {
        let mut records = Vec::new();
        for i in 0..5 {
            group(&mut records, 100 * i + 1, "s", &format!("r{i}"), &["home"]);
        }
        assert_eq!(derive_catalog(&records, &LogFormat::default()).unwrap().len(), 1);
    }

    #[test]
    fn alias_detection_needs_full_cooccurrence() {
        let mut records = Vec::new();
        for i in 0..100 {
            group(
                &mut records,
                100 * i + 1,
                "s",
                &format!("r{i}"),
                &["placing order", "order placed"],
            );
        }
        let cat = derive_catalog(&records, &LogFormat::default()).unwrap();
        assert_eq!(cat.labels(), vec!["placing_order"]);

        // one lone occurrence breaks the alias relation
        group(&mut records, 100_000, "s", "lone", &["order placed"]);
        let cat = derive_catalog(&records, &LogFormat::default()).unwrap();
        assert_eq!(cat.len(), 2);
    }

    #[test]
    fn no_labels_is_an_error() {
        let records = vec![
            rec(1, "s", "r", "request started"),
            rec(2, "s", "r", "request complete"),
        ];
        assert!(matches!(
            derive_catalog(&records, &LogFormat::default()),
            Err(IngestError::EmptyCatalog { .. })
        ));
    }

    #[test]
    fn template_labels_when_messages_absent() {
        let mut r1 = rec(1, "s", "r", "request started");
        r1.http_method = Some("get".into());
        r1.http_path = Some("/product/12345?x=1".into());
        let records = vec![r1, rec(2, "s", "r", "request complete")];
        let cat = derive_catalog(&records, &LogFormat::default()).unwrap();
        assert_eq!(cat.labels(), vec!["GET /product/{id}"]);
        assert_eq!(
            cat.resolve_request("GET", "/product/999"),
            Some("GET /product/{id}")
        );
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_label("Setting  Currency"), "setting_currency");
        assert_eq!(normalize_label("view_user-cart"), "view_user_cart");
        assert_eq!(path_template("/a/0f3c9a11-22/b"), "/a/{id}/b");
    }

    #[test]
    fn redirect_heuristic() {
        let ev = |l: &str, s: i64, status| BehaviorEvent {
            behavior_type: l.into(),
            start_ts: s,
            complete_ts: s + 1_000_000,
            redirected_from: None,
            status: Some(status),
        };
        let (t, _) = SessionTrace::from_events(
            "s",
            vec![
                ev("home", 0, 200),
                ev("setting_currency", 5_000_000_000, 302),
                ev("home", 5_002_000_000, 200),
                ev("view_user_cart", 9_000_000_000, 200),
            ],
        );
        assert_eq!(
            detect_redirects(&[t], 0.5),
            vec![("setting_currency".to_string(), "home".to_string())]
        );
    }
}
