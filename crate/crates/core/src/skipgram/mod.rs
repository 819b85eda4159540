//! Node embeddings: second-order random walks, skip-gram with per-node
//! negative caches, and node classification.

mod classify;
mod train;
mod walk;

use std::path::Path;

use rustc_hash::FxHashMap;

use crate::data::Vocab;
use crate::{fsio, Error, Result};

pub use classify::{
    classify_nodes, logistic_ovr, NodeClassReport, CLASSIFIER_LAMBDA, CLASSIFIER_STEPS,
};
pub use train::{pair_loss_grad, train_skipgram, NodeCache, NodeEmbeddings};
pub use walk::{generate_walks, transition_probs, WalkConfig};

/// Undirected graph with optional node labels.
#[derive(Debug, Clone)]
pub struct Graph {
    pub nodes: Vocab,
    /// Sorted, deduplicated, symmetric, without self-loops.
    pub adj: Vec<Vec<usize>>,
    pub labels: Vec<Option<usize>>,
    pub classes: Vocab,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(Option::is_some)
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Build from named edges and optional `(node, class)` pairs. Nodes get
    /// ids in order of first appearance; labelled nodes with no edges become
    /// isolated nodes.
    pub fn from_named(edges: &[(String, String)], labels: &[(String, String)]) -> Result<Graph> {
        Self::build(&[], edges, labels)
    }

    fn build(
        preorder: &[&str],
        edges: &[(String, String)],
        labels: &[(String, String)],
    ) -> Result<Graph> {
        let mut nodes = Vocab::default();
        for n in preorder {
            nodes.intern(n);
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let ia = nodes.intern(a).expect("open vocab");
            let ib = nodes.intern(b).expect("open vocab");
            pairs.push((ia, ib));
        }
        let mut classes = Vocab::default();
        let mut assigned: FxHashMap<usize, usize> = FxHashMap::default();
        for (n, c) in labels {
            let id = nodes.intern(n).expect("open vocab");
            let cls = classes.intern(c).expect("open vocab");
            if let Some(&prev) = assigned.get(&id) {
                if prev != cls {
                    return Err(Error::Config(format!(
                        "node {n:?} labelled both {:?} and {c:?}",
                        classes.name(prev)
                    )));
                }
            }
            assigned.insert(id, cls);
        }
        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in pairs {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        let mut lab = vec![None; n];
        for (id, c) in assigned {
            lab[id] = Some(c);
        }
        Ok(Graph {
            nodes,
            adj,
            labels: lab,
            classes,
        })
    }

    /// Unnamed graph on nodes `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        Graph {
            nodes: Vocab::from_names((0..n).map(|i| i.to_string())),
            adj,
            labels: vec![None; n],
            classes: Vocab::default(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<Option<usize>>, classes: usize) -> Graph {
        assert_eq!(labels.len(), self.node_count());
        self.labels = labels;
        self.classes = Vocab::from_names((0..classes).map(|c| c.to_string()));
        self
    }

    /// Edge list plus optional label file.
    pub fn load(edges: &Path, labels: Option<&Path>) -> Result<Graph> {
        let e = parse_edge_list(&fsio::read_to_string(edges)?, &edges.display().to_string())?;
        let l = match labels {
            Some(p) => parse_label_file(&fsio::read_to_string(p)?, &p.display().to_string())?,
            None => Vec::new(),
        };
        Graph::from_named(&e, &l)
    }

    /// The `.content` / `.cites` pair used by the citation datasets.
    pub fn load_citation(content: &Path, cites: &Path) -> Result<Graph> {
        let l = parse_citation_content(
            &fsio::read_to_string(content)?,
            &content.display().to_string(),
        )?;
        let e = parse_edge_list(&fsio::read_to_string(cites)?, &cites.display().to_string())?;
        // ids follow the content file
        let order: Vec<&str> = l.iter().map(|(n, _)| n.as_str()).collect();
        Graph::build(&order, &e, &l)
    }
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == '\t' || c == ' ')
        .filter(|s| !s.is_empty())
        .collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// `src<TAB>dst` lines.
pub fn parse_edge_list(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        match fields(line)[..] {
            [a, b] => out.push((a.to_string(), b.to_string())),
            _ => {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("expected two fields, got {line:?}"),
                ))
            }
        }
    }
    Ok(out)
}

/// `node<TAB>class` lines.
pub fn parse_label_file(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        match fields(line)[..] {
            [a, c] => out.push((a.to_string(), c.to_string())),
            _ => {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("expected node and class, got {line:?}"),
                ))
            }
        }
    }
    Ok(out)
}

/// `paper_id feature... class` lines; features are ignored.
pub fn parse_citation_content(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        let f = fields(line);
        if f.len() < 2 {
            return Err(Error::parse(
                origin,
                n,
                format!("expected id, features and class, got {line:?}"),
            ));
        }
        out.push((f[0].to_string(), f[f.len() - 1].to_string()));
    }
    Ok(out)
}

/// Whitespace-separated `node v1 ... vd` lines, the embedding output format.
pub fn parse_embedding_text(text: &str, origin: &str) -> Result<(Vec<String>, Vec<Vec<f32>>)> {
    let mut names = Vec::new();
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for (n, line) in data_lines(text) {
        let f = fields(line);
        if f.len() < 2 {
            return Err(Error::parse(
                origin,
                n,
                "expected a node name and at least one value",
            ));
        }
        let row = f[1..]
            .iter()
            .map(|s| s.parse::<f32>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f32>>>()
            .ok_or_else(|| Error::parse(origin, n, "non-numeric or non-finite value"))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("expected {} values, got {}", first.len(), row.len()),
                ));
            }
        }
        names.push(f[0].to_string());
        rows.push(row);
    }
    Ok((names, rows))
}

/// One walk per line as whitespace-separated node names known to `nodes`.
pub fn parse_corpus(text: &str, origin: &str, nodes: &Vocab) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        let walk = fields(line)
            .iter()
            .map(|name| {
                nodes
                    .id(name)
                    .ok_or_else(|| Error::parse(origin, n, format!("unknown node {name:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        out.push(walk);
    }
    Ok(out)
}

/// Inverse of [`parse_corpus`].
pub fn corpus_to_text(corpus: &[Vec<usize>], nodes: &Vocab) -> String {
    let mut s = String::new();
    for walk in corpus {
        for (i, &x) in walk.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(nodes.name(x));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_is_symmetric_without_loops() {
        let e: Vec<(String, String)> = [("a", "b"), ("b", "a"), ("c", "c"), ("b", "c")]
            .iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        let g = Graph::from_named(&e, &[("d".into(), "k".into())]).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.adj, vec![vec![1], vec![0, 2], vec![1], vec![]]);
        assert_eq!(g.labels[3], Some(0));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn corpus_round_trip() {
        let nodes = Vocab::from_names(["a", "b", "c"].map(String::from));
        let c = vec![vec![0, 1, 2], vec![2]];
        assert_eq!(
            parse_corpus(&corpus_to_text(&c, &nodes), "c", &nodes).unwrap(),
            c
        );
        assert!(parse_corpus("a z\n", "c", &nodes).is_err());
    }

    #[test]
    fn conflicting_labels_rejected() {
        let l = vec![
            ("a".to_string(), "x".to_string()),
            ("a".to_string(), "y".to_string()),
        ];
        assert!(Graph::from_named(&[], &l).is_err());
    }

    #[test]
    fn parsers_report_line_numbers() {
        assert!(parse_edge_list("a\tb\n\nc\n", "e")
            .unwrap_err()
            .to_string()
            .contains("e:3"));
        assert_eq!(
            parse_citation_content("31336\t0\t1\tNeural_Networks\n", "c").unwrap(),
            vec![("31336".into(), "Neural_Networks".into())]
        );
        let (n, r) = parse_embedding_text("a 1 2\nb 3 4\n", "x").unwrap();
        assert_eq!((n.len(), r[1][1]), (2, 4.0));
        assert!(parse_embedding_text("a 1 2\nb 3\n", "x").is_err());
    }

    #[test]
    fn numeric_graph_keeps_indices() {
        let g = Graph::from_edges(4, &[(2, 0), (0, 3)]);
        assert_eq!(g.adj, vec![vec![2, 3], vec![], vec![0], vec![0]]);
    }
}
