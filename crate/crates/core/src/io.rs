//! Edge-list and label-file ingestion.
//!
//! Edge lists are UTF-8, one whitespace-separated pair per line, `#` comment
//! lines skipped. Node ids are 1-based unless a `# base: 0` header comment is
//! present (or [`EdgeListOptions::zero_based`] is set). Label files hold one
//! token per line; tokens map to blocks in order of first appearance.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVector};

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListOptions {
    /// Treat the list as directed and set `Y_ij = max(Y_ij, Y_ji)`.
    pub symmetrize: bool,
    /// Force 0-based ids regardless of header comments.
    pub zero_based: bool,
}

/// Result of loading an edge list.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Lines with identical endpoints, dropped.
    pub self_loops: usize,
    /// Lines repeating an edge already seen (reciprocal pairs are not counted
    /// under symmetrization).
    pub duplicates: usize,
}

fn base_directive(comment: &str) -> Option<usize> {
    let rest = comment.trim_start_matches('#').trim();
    let rest = rest.strip_prefix("base")?;
    let value = rest.trim_start_matches([':', '=', ' ', '\t']).trim();
    match value {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn pair_tokens(line_no: usize, line: &str) -> Result<(&str, &str)> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Parse {
            line: line_no,
            message: format!("expected two node ids, got {line:?}"),
        }),
    }
}

/// Loads an integer edge list over `n` nodes.
pub fn load_edge_list(text: &str, n: usize, options: EdgeListOptions) -> Result<LoadedGraph> {
    let mut base = if options.zero_based { 0 } else { 1 };
    if !options.zero_based {
        if let Some(b) = text
            .lines()
            .map(str::trim)
            .filter(|l| l.starts_with('#'))
            .find_map(base_directive)
        {
            base = b;
        }
    }

    let mut pairs = Vec::new();
    for (line_no, line) in data_lines(text) {
        let (a, b) = pair_tokens(line_no, line)?;
        let parse = |tok: &str| -> Result<usize> {
            let id: usize = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid node id {tok:?}"),
            })?;
            if id < base || id - base >= n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("node id {id} outside [{base}, {}]", n + base - 1),
                });
            }
            Ok(id - base)
        };
        pairs.push((parse(a)?, parse(b)?));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("edge list has no edges"));
    }
    Ok(collect_pairs(n, pairs, options.symmetrize))
}

fn collect_pairs(n: usize, pairs: Vec<(usize, usize)>, symmetrize: bool) -> LoadedGraph {
    let mut graph = Graph::empty(n);
    let mut seen = std::collections::HashSet::new();
    let mut self_loops = 0;
    let mut duplicates = 0;
    for (i, j) in pairs {
        if i == j {
            self_loops += 1;
            continue;
        }
        let key = if symmetrize { (i, j) } else { (i.min(j), i.max(j)) };
        if !seen.insert(key) {
            duplicates += 1;
        }
        graph.set(i, j, true);
    }
    LoadedGraph {
        graph,
        self_loops,
        duplicates,
    }
}

/// Edge list keyed by arbitrary string vertex names.
#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub loaded: LoadedGraph,
    /// `names[id]` is the vertex name of dense id `id`, in first-appearance order.
    pub names: Vec<String>,
}

impl NamedGraph {
    /// `id name` lines with 1-based ids.
    pub fn id_map(&self) -> String {
        self.names
            .iter()
            .enumerate()
            .map(|(i, name)| format!("{} {}\n", i + 1, name))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Loads an edge list whose vertices are arbitrary tokens.
pub fn load_named_edge_list(text: &str, symmetrize: bool) -> Result<NamedGraph> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut pairs = Vec::new();
    for (line_no, line) in data_lines(text) {
        let (a, b) = pair_tokens(line_no, line)?;
        let mut id = |tok: &str| {
            *ids.entry(tok.to_string()).or_insert_with(|| {
                names.push(tok.to_string());
                names.len() - 1
            })
        };
        let (i, j) = (id(a), id(b));
        pairs.push((i, j));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("edge list has no edges"));
    }
    let loaded = collect_pairs(names.len(), pairs, symmetrize);
    Ok(NamedGraph { loaded, names })
}

/// Loads one label token per line; `n` is the number of lines.
pub fn load_label_file(text: &str) -> Result<LabelVector> {
    let tokens: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyInput("label file has no labels"));
    }
    Ok(map_tokens(tokens))
}

/// Loads `n` label tokens, one per line.
pub fn load_labels(text: &str, n: usize) -> Result<LabelVector> {
    let labels = load_label_file(text)?;
    if labels.len() != n {
        return Err(Error::LabelCount {
            expected: n,
            found: labels.len(),
        });
    }
    Ok(labels)
}

/// Loads `name label` lines aligned to the ids of a [`NamedGraph`].
pub fn load_named_labels(text: &str, graph: &NamedGraph) -> Result<LabelVector> {
    let mut slots: Vec<Option<&str>> = vec![None; graph.names.len()];
    let lookup: HashMap<&str, usize> = graph
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    for (line_no, line) in data_lines(text) {
        let (name, label) = pair_tokens(line_no, line)?;
        let Some(&id) = lookup.get(name) else {
            log::warn!("line {line_no}: vertex {name:?} has no edges, ignored");
            continue;
        };
        slots[id] = Some(label);
    }
    let found = slots.iter().filter(|s| s.is_some()).count();
    if found != slots.len() {
        return Err(Error::LabelCount {
            expected: slots.len(),
            found,
        });
    }
    Ok(map_tokens(slots.into_iter().map(Option::unwrap).collect()))
}

fn map_tokens(tokens: Vec<&str>) -> LabelVector {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let labels = tokens
        .iter()
        .map(|t| {
            let next = index.len();
            *index.entry(t).or_insert(next)
        })
        .collect();
    LabelVector::new(labels, index.len().max(1)).expect("labels are dense by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::community_stats;

    #[test]
    fn path_graph() {
        let g = load_edge_list("1 2\n2 3", 3, EdgeListOptions::default())
            .unwrap()
            .graph;
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && !g.has_edge(0, 2));
    }

    #[test]
    fn reciprocal_pair_symmetrizes_to_single_edge() {
        let opts = EdgeListOptions {
            symmetrize: true,
            ..Default::default()
        };
        let loaded = load_edge_list("1 2\n2 1", 2, opts).unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.duplicates, 0);
        let plain = load_edge_list("1 2\n2 1", 2, EdgeListOptions::default()).unwrap();
        assert_eq!(plain.duplicates, 1);
        assert_eq!(plain.graph, loaded.graph);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let loaded = load_edge_list("1 1\n1 2", 2, EdgeListOptions::default()).unwrap();
        assert!(loaded.graph.has_edge(0, 1));
        assert_eq!(loaded.self_loops, 1);
    }

    #[test]
    fn comments_and_zero_based_header() {
        let text = "# a comment\n# base: 0\n0 1\n\n1 2\n";
        let g = load_edge_list(text, 3, EdgeListOptions::default())
            .unwrap()
            .graph;
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
    }

    #[test]
    fn out_of_range_reports_line() {
        let err = load_edge_list("1 2\n# c\n2 9\n", 3, EdgeListOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_edge_list("0 1", 3, EdgeListOptions::default()).is_err());
        assert!(load_edge_list("1 x", 3, EdgeListOptions::default()).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            load_edge_list("# nothing\n", 3, EdgeListOptions::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn labels_first_appearance() {
        let l = load_labels("M\nF\nM", 3).unwrap();
        assert_eq!(l.as_slice(), &[0, 1, 0]);
        assert_eq!(l.k(), 2);
        let l = load_labels("a\na\na", 3).unwrap();
        assert_eq!(l.k(), 1);
        assert!(matches!(
            load_labels("a\nb", 3),
            Err(Error::LabelCount { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn two_sex_labels() {
        let text: String = (0..27)
            .map(|i| if i % 2 == 0 { "female\n" } else { "male\n" })
            .collect();
        let stats = community_stats(&load_labels(&text, 27).unwrap());
        let mut sizes = stats.block_sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![13, 14]);
    }

    #[test]
    fn named_vertices() {
        let named = load_named_edge_list("alice bob\nbob carol\ncarol carol\n", false).unwrap();
        assert_eq!(named.names, vec!["alice", "bob", "carol"]);
        assert_eq!(named.loaded.self_loops, 1);
        assert!(named.loaded.graph.has_edge(1, 2));
        assert_eq!(named.id_map(), "1 alice\n2 bob\n3 carol\n");
        let labels = load_named_labels("carol x\nalice y\nbob y\n", &named).unwrap();
        assert_eq!(labels.as_slice(), &[0, 0, 1]);
        assert!(load_named_labels("carol x\n", &named).is_err());
    }
}
