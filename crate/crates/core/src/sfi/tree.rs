use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{labels, match_identity, PartIdentity, SfiError, SfiPath};

/// One folder of the tree. Children are implied by the path keys of the
/// owning [`SfiTree`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Parts filed here, each with the names of the documents expected for it.
    #[serde(with = "crate::serde_util::pairs")]
    parts: BTreeMap<PartIdentity, BTreeSet<String>>,
}

impl TreeNode {
    pub fn parts(&self) -> impl Iterator<Item = &PartIdentity> {
        self.parts.keys()
    }

    pub fn documents_of(&self, part: &PartIdentity) -> Option<&BTreeSet<String>> {
        self.parts.get(part)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registration {
    Added,
    AlreadyPresent,
}

/// The folder hierarchy of SFI main groups, groups and sub-groups with the
/// parts registered in it. Folders exist only where something was
/// registered (plus their ancestors); the root always exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfiTree {
    #[serde(with = "crate::serde_util::pairs")]
    nodes: BTreeMap<SfiPath, TreeNode>,
}

impl Default for SfiTree {
    fn default() -> Self {
        Self::new()
    }
}

impl SfiTree {
    pub fn new() -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(SfiPath::root(), TreeNode::default());
        Self { nodes }
    }

    /// Creates the folder and every missing ancestor.
    pub fn materialize(&mut self, path: SfiPath) {
        for p in path.ancestors_or_self() {
            self.nodes.entry(p).or_default();
        }
    }

    pub fn node(&self, path: &SfiPath) -> Option<&TreeNode> {
        self.nodes.get(path)
    }

    pub fn paths(&self) -> impl Iterator<Item = &SfiPath> {
        self.nodes.keys()
    }

    pub fn children(&self, path: &SfiPath) -> impl Iterator<Item = &SfiPath> + '_ {
        let path = *path;
        self.nodes
            .keys()
            .filter(move |p| p.parent() == Some(path))
    }

    /// Every registered part in tree order.
    pub fn parts(&self) -> impl Iterator<Item = &PartIdentity> {
        self.nodes.values().flat_map(|n| n.parts.keys())
    }

    pub fn part_count(&self) -> usize {
        self.nodes.values().map(|n| n.parts.len()).sum()
    }

    pub fn parts_in_subtree<'a>(
        &'a self,
        scope: &'a SfiPath,
    ) -> impl Iterator<Item = &'a PartIdentity> + 'a {
        self.nodes
            .iter()
            .filter(move |(p, _)| scope.is_ancestor_or_self(p))
            .flat_map(|(_, n)| n.parts.keys())
    }

    pub fn contains(&self, part: &PartIdentity) -> bool {
        self.nodes
            .get(&part.path())
            .is_some_and(|n| n.parts.contains_key(part))
    }

    /// Finds a registered part with the same identity.
    pub fn find_match(&self, part: &PartIdentity) -> Option<&PartIdentity> {
        self.nodes
            .get(&part.path())?
            .parts
            .keys()
            .find(|p| match_identity(p, part))
    }

    /// Registers a part at the folder of its code, materializing folders as
    /// needed. Re-registering an identical part is a no-op. A different part
    /// with the same name anywhere in the subtree scope (ancestors or
    /// descendants of the target folder) is rejected.
    pub fn register_part(&mut self, part: PartIdentity) -> Result<Registration, SfiError> {
        if part.name.is_empty() {
            return Err(SfiError::EmptyName);
        }
        if self.contains(&part) {
            return Ok(Registration::AlreadyPresent);
        }
        let target = part.path();
        if let Some((scope, existing)) = self.name_conflict(&part) {
            return Err(SfiError::DuplicateNameInSubtree {
                name: part.name.clone(),
                existing: Box::new(existing.clone()),
                scope,
            });
        }
        self.materialize(target);
        self.nodes
            .get_mut(&target)
            .expect("materialized")
            .parts
            .insert(part, BTreeSet::new());
        Ok(Registration::Added)
    }

    fn name_conflict(&self, part: &PartIdentity) -> Option<(SfiPath, &PartIdentity)> {
        let target = part.path();
        self.nodes
            .iter()
            .filter(|(p, _)| p.is_ancestor_or_self(&target) || target.is_ancestor_or_self(p))
            .flat_map(|(p, n)| n.parts.keys().map(move |q| (*p, q)))
            .find(|(_, q)| q.name == part.name && *q != part)
            .map(|(p, q)| {
                let scope = if p.is_ancestor_or_self(&target) { p } else { target };
                (scope, q)
            })
    }

    /// Records that `doc_name` is expected for an already registered part.
    pub fn add_document(&mut self, part: &PartIdentity, doc_name: &str) -> Result<(), SfiError> {
        if doc_name.is_empty() {
            return Err(SfiError::EmptyName);
        }
        let docs = self
            .nodes
            .get_mut(&part.path())
            .and_then(|n| n.parts.get_mut(part))
            .ok_or_else(|| SfiError::UnknownPart(Box::new(part.clone())))?;
        docs.insert(doc_name.to_owned());
        Ok(())
    }

    /// All `(part, document name)` pairs in tree order.
    pub fn documents(&self) -> impl Iterator<Item = (&PartIdentity, &str)> {
        self.nodes.values().flat_map(|n| {
            n.parts
                .iter()
                .flat_map(|(p, docs)| docs.iter().map(move |d| (p, d.as_str())))
        })
    }

    /// Re-checks the structural invariants; used on trees that arrive from
    /// outside (templates, deserialized snapshots).
    pub fn validate(&self) -> Result<(), SfiError> {
        if !self.nodes.contains_key(&SfiPath::root()) {
            return Err(SfiError::InconsistentTree("missing root".into()));
        }
        for (path, node) in &self.nodes {
            if let Some(parent) = path.parent() {
                if !self.nodes.contains_key(&parent) {
                    return Err(SfiError::InconsistentTree(format!(
                        "folder {path} has no parent folder"
                    )));
                }
            }
            for part in node.parts.keys() {
                if part.path() != *path {
                    return Err(SfiError::InconsistentTree(format!(
                        "part {part} filed under {path}"
                    )));
                }
            }
        }
        let mut rebuilt = SfiTree::new();
        for part in self.parts() {
            rebuilt.register_part(part.clone())?;
        }
        Ok(())
    }

    /// Line-oriented dump, one `path<TAB>kind<TAB>payload` record per line,
    /// in tree order. Kinds are `node` (payload: label), `part` (payload:
    /// `code|name|supplier`) and `doc` (payload: `code|name|supplier|doc`).
    pub fn to_lines(&self) -> String {
        self.to_lines_with(|_, _| None)
    }

    /// Like [`SfiTree::to_lines`], appending an extra `|annotation` field to
    /// document records where `annotate` returns one.
    pub fn to_lines_with(
        &self,
        annotate: impl Fn(&PartIdentity, &str) -> Option<String>,
    ) -> String {
        let mut out = String::new();
        for (path, node) in &self.nodes {
            let folder = path.folder_form();
            let label = labels::label_for(path).unwrap_or("");
            out.push_str(&format!("{folder}\tnode\t{}\n", escape(label)));
            for (part, docs) in &node.parts {
                let ident = part_payload(part);
                out.push_str(&format!("{folder}\tpart\t{ident}\n"));
                for doc in docs {
                    let mut payload = format!("{ident}|{}", escape(doc));
                    if let Some(note) = annotate(part, doc) {
                        payload.push('|');
                        payload.push_str(&escape(&note));
                    }
                    out.push_str(&format!("{folder}\tdoc\t{payload}\n"));
                }
            }
        }
        out
    }

    /// Parses the output of [`SfiTree::to_lines`]. Annotations are ignored.
    pub fn from_lines(text: &str) -> Result<Self, SfiError> {
        let mut tree = SfiTree::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |reason: &str| SfiError::BadTreeLine {
                line: line_no,
                reason: reason.to_owned(),
            };
            if line.is_empty() {
                continue;
            }
            let mut cols = line.splitn(3, '\t');
            let (Some(path), Some(kind), Some(payload)) = (cols.next(), cols.next(), cols.next())
            else {
                return Err(bad("expected three tab-separated columns"));
            };
            let path: SfiPath = path.parse()?;
            match kind {
                "node" => tree.materialize(path),
                "part" | "doc" => {
                    let fields = split_escaped(payload);
                    if fields.len() < 3 {
                        return Err(bad("part payload needs code|name|supplier"));
                    }
                    let part = PartIdentity::parse(&fields[0], &fields[1], &fields[2])?;
                    if part.path() != path {
                        return Err(bad("part code does not match folder"));
                    }
                    tree.register_part(part.clone())?;
                    if kind == "doc" {
                        let doc = fields.get(3).ok_or_else(|| bad("doc record lacks name"))?;
                        tree.add_document(&part, doc)?;
                    }
                }
                other => return Err(bad(&format!("unknown record kind {other:?}"))),
            }
        }
        Ok(tree)
    }
}

fn part_payload(part: &PartIdentity) -> String {
    format!(
        "{}|{}|{}",
        part.sfi,
        escape(&part.name),
        escape(part.supplier_id.as_str())
    )
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for ch in field.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn split_escaped(payload: &str) -> Vec<String> {
    let mut fields = vec![String::new()];
    let mut chars = payload.chars();
    while let Some(ch) = chars.next() {
        match ch {
            '\\' => match chars.next() {
                Some('t') => fields.last_mut().unwrap().push('\t'),
                Some('n') => fields.last_mut().unwrap().push('\n'),
                Some('r') => fields.last_mut().unwrap().push('\r'),
                Some(c) => fields.last_mut().unwrap().push(c),
                None => fields.last_mut().unwrap().push('\\'),
            },
            '|' => fields.push(String::new()),
            c => fields.last_mut().unwrap().push(c),
        }
    }
    fields
}
