use std::collections::{BTreeSet, HashSet};

use super::prefix::PrefixMap;
use super::term::{Term, Triple};

/// A set of triples plus the prefixes used to print them.
///
/// Terms are always stored expanded, so two graphs with the same triples
/// compare equal regardless of how their documents spelled the IRIs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    prefixes: PrefixMap,
}

impl Graph {
    pub fn new(prefixes: PrefixMap) -> Self {
        Self {
            triples: BTreeSet::new(),
            prefixes,
        }
    }

    pub fn with_default_prefixes() -> Self {
        Self::new(PrefixMap::defaults())
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn prefixes_mut(&mut self) -> &mut PrefixMap {
        &mut self.prefixes
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn remove(&mut self, triple: &Triple) -> bool {
        self.triples.remove(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    /// All triples matching the bound positions, in sorted order.
    pub fn matching(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<&Triple> {
        self.triples
            .iter()
            .filter(|t| {
                s.is_none_or(|s| &t.subject == s)
                    && p.is_none_or(|p| &t.predicate == p)
                    && o.is_none_or(|o| &t.object == o)
            })
            .collect()
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects<'a>(&'a self, subject: &'a Term, predicate: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| &t.subject == subject && &t.predicate == predicate)
            .map(|t| &t.object)
    }

    /// Subjects of `(?, predicate, object)`.
    pub fn subjects<'a>(&'a self, predicate: &'a Term, object: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.triples
            .iter()
            .filter(move |t| &t.predicate == predicate && &t.object == object)
            .map(|t| &t.subject)
    }

    pub fn blank_labels(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            for term in [&t.subject, &t.object] {
                if let Term::Blank(l) = term {
                    out.insert(l.as_str());
                }
            }
        }
        out
    }

    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.triples.is_subset(&other.triples)
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter);
    }
}

/// Union of two graphs.
///
/// `base` keeps its prefixes and blank labels. Extension prefixes that
/// clash with a different base binding are re-bound under a fresh name,
/// and extension blank labels already used by `base` are renamed
/// `bmerge0`, `bmerge1`, ... in sorted label order.
pub fn merge(base: &Graph, extension: &Graph) -> Graph {
    let mut out = base.clone();

    for (prefix, namespace) in extension.prefixes.iter() {
        match out.prefixes.get(prefix) {
            Some(existing) if existing == namespace => {}
            None => {
                out.prefixes.insert(prefix, namespace);
            }
            Some(_) => {
                if out.prefixes.contains_namespace(namespace) {
                    continue;
                }
                let fresh = (1..)
                    .map(|i| format!("{prefix}{i}"))
                    .find(|p| out.prefixes.get(p).is_none())
                    .expect("unbounded counter");
                out.prefixes.insert(fresh, namespace);
            }
        }
    }

    let base_labels: HashSet<&str> = base.blank_labels().into_iter().collect();
    let ext_labels = extension.blank_labels();
    let mut taken: HashSet<String> = base_labels.iter().map(|s| s.to_string()).collect();
    taken.extend(ext_labels.iter().map(|s| s.to_string()));
    let mut counter = 0usize;
    let mut renames = std::collections::HashMap::new();
    for label in ext_labels.iter().filter(|l| base_labels.contains(*l)) {
        let fresh = loop {
            let candidate = format!("bmerge{counter}");
            counter += 1;
            if !taken.contains(&candidate) {
                break candidate;
            }
        };
        taken.insert(fresh.clone());
        renames.insert(label.to_string(), fresh);
    }

    let rename = |term: &Term| -> Term {
        match term {
            Term::Blank(l) => Term::Blank(renames.get(l).cloned().unwrap_or_else(|| l.clone())),
            other => other.clone(),
        }
    };
    for t in &extension.triples {
        out.triples.insert(Triple {
            subject: rename(&t.subject),
            predicate: t.predicate.clone(),
            object: rename(&t.object),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, o: &str) -> Triple {
        Triple::iris(&format!("http://x/{s}"), "http://x/p", &format!("http://x/{o}")).unwrap()
    }

    fn graph(triples: &[Triple]) -> Graph {
        let mut g = Graph::with_default_prefixes();
        g.extend(triples.iter().cloned());
        g
    }

    #[test]
    fn set_semantics() {
        let mut g = Graph::default();
        assert!(g.insert(t("a", "b")));
        assert!(!g.insert(t("a", "b")));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn merge_identity_and_union() {
        let a = graph(&[t("a", "b"), t("c", "d"), t("e", "f")]);
        assert_eq!(merge(&a, &Graph::default()).triples(), a.triples());
        let b = graph(&[t("1", "2"), t("3", "4"), t("5", "6"), t("7", "8")]);
        assert_eq!(merge(&a, &b).len(), 7);
        let c = graph(&[t("a", "b"), t("z", "z")]);
        assert_eq!(merge(&a, &c).len(), a.len() + c.len() - 1);
    }

    #[test]
    fn merge_renames_clashing_blanks() {
        let p = Term::iri("http://x/p").unwrap();
        let mut a = Graph::default();
        a.insert(Triple::new(Term::blank("b0"), p.clone(), Term::blank("b1")).unwrap());
        let mut b = Graph::default();
        b.insert(Triple::new(Term::blank("b0"), p.clone(), Term::blank("other")).unwrap());
        let m = merge(&a, &b);
        assert_eq!(m.len(), 2);
        assert!(m.contains(&Triple::new(Term::blank("bmerge0"), p.clone(), Term::blank("other")).unwrap()));
        assert!(m.contains(&Triple::new(Term::blank("b0"), p, Term::blank("b1")).unwrap()));
    }

    #[test]
    fn merge_prefix_conflict_keeps_base() {
        let mut a = Graph::new(PrefixMap::empty());
        a.prefixes_mut().insert("x", "http://one/");
        let mut b = Graph::new(PrefixMap::empty());
        b.prefixes_mut().insert("x", "http://two/");
        b.prefixes_mut().insert("y", "http://three/");
        let m = merge(&a, &b);
        assert_eq!(m.prefixes().get("x"), Some("http://one/"));
        assert_eq!(m.prefixes().get("x1"), Some("http://two/"));
        assert_eq!(m.prefixes().get("y"), Some("http://three/"));
    }

    #[test]
    fn matching_patterns() {
        let g = graph(&[t("a", "b"), t("a", "c"), t("d", "b")]);
        assert!(Graph::default().matching(None, None, None).is_empty());
        assert_eq!(g.matching(None, None, None).len(), 3);
        let a = Term::iri("http://x/a").unwrap();
        let b = Term::iri("http://x/b").unwrap();
        assert_eq!(g.matching(Some(&a), None, None).len(), 2);
        assert_eq!(g.matching(None, None, Some(&b)).len(), 2);
        let exact = t("a", "b");
        assert_eq!(
            g.matching(Some(&exact.subject), Some(&exact.predicate), Some(&exact.object)),
            vec![&exact]
        );
    }
}
