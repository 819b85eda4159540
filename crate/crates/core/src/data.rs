//! Knowledge-graph datasets: triple files, index dictionaries, relation
//! statistics and small synthetic graphs for oracle tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::{fsio, rng, Error, Result};

/// One fact `(head, relation, tail)` with integer indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triplet {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triplet {
            head,
            relation,
            tail,
        }
    }

    pub fn with_head(self, head: usize) -> Self {
        Triplet { head, ..self }
    }

    pub fn with_tail(self, tail: usize) -> Self {
        Triplet { tail, ..self }
    }
}

/// Column layout of a triple file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnOrder {
    /// `head<TAB>relation<TAB>tail`
    #[default]
    Hrt,
    /// `head<TAB>tail<TAB>relation`, as in the original FB15K distribution.
    Htr,
}

impl FromStr for ColumnOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hrt" => Ok(ColumnOrder::Hrt),
            "htr" => Ok(ColumnOrder::Htr),
            other => Err(Error::Config(format!(
                "unknown column order {other:?} (expected hrt or htr)"
            ))),
        }
    }
}

impl std::fmt::Display for ColumnOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ColumnOrder::Hrt => "hrt",
            ColumnOrder::Htr => "htr",
        })
    }
}

/// Split one line of a triple file into `(head, relation, tail)` names.
///
/// Returns `Ok(None)` for blank lines. Trailing `\r` is ignored.
pub fn parse_triple_line(
    line: &str,
    order: ColumnOrder,
) -> std::result::Result<Option<[&str; 3]>, String> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let mut fields = line.split('\t');
    let (a, b, c) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
        (Some(a), Some(b), Some(c), None) => (a, b, c),
        _ => {
            let n = line.split('\t').count();
            return Err(format!("expected 3 tab-separated fields, found {n}"));
        }
    };
    for f in [a, b, c] {
        if f.is_empty() {
            return Err("empty field".to_string());
        }
    }
    Ok(Some(match order {
        ColumnOrder::Hrt => [a, b, c],
        ColumnOrder::Htr => [a, c, b],
    }))
}

/// Parse a `name<TAB>id` dictionary. Ids must form the range `0..n` exactly once.
pub fn parse_dictionary(text: &str, origin: &str) -> Result<Vocab> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (name, id) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(origin, i + 1, "expected name<TAB>id"))?;
        if name.is_empty() {
            return Err(Error::parse(origin, i + 1, "empty name"));
        }
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad id {id:?}")))?;
        pairs.push((name.to_string(), id, i + 1));
    }
    let n = pairs.len();
    let mut names: Vec<Option<String>> = vec![None; n];
    let mut index = FxHashMap::default();
    for (name, id, line) in pairs {
        if id >= n {
            return Err(Error::parse(
                origin,
                line,
                format!("id {id} out of range 0..{n}"),
            ));
        }
        if names[id].is_some() {
            return Err(Error::parse(origin, line, format!("duplicate id {id}")));
        }
        if index.insert(name.clone(), id).is_some() {
            return Err(Error::parse(
                origin,
                line,
                format!("duplicate name {name:?}"),
            ));
        }
        names[id] = Some(name);
    }
    Ok(Vocab {
        names: names.into_iter().map(|n| n.unwrap_or_default()).collect(),
        index,
        frozen: true,
    })
}

/// Bidirectional name/index dictionary.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    names: Vec<String>,
    index: FxHashMap<String, usize>,
    frozen: bool,
}

impl Vocab {
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        let mut v = Vocab::default();
        for n in names {
            v.intern(&n);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index of `name`, assigning the next free index on first sight. A vocab
    /// loaded from a dictionary file is frozen and returns `None` for unknown names.
    pub fn intern(&mut self, name: &str) -> Option<usize> {
        if let Some(&id) = self.index.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Some(id)
    }

    pub fn to_dictionary(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{n}\t{i}");
        }
        out
    }
}

/// An indexed knowledge graph with its three splits.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    pub entities: Vocab,
    pub relations: Vocab,
    pub train: Vec<Triplet>,
    pub valid: Vec<Triplet>,
    pub test: Vec<Triplet>,
    true_set: FxHashSet<Triplet>,
    train_set: FxHashSet<Triplet>,
    known_tails: FxHashMap<(usize, usize), Vec<usize>>,
    known_heads: FxHashMap<(usize, usize), Vec<usize>>,
    /// Entities that occur in valid/test but never in train.
    pub unseen_entities: usize,
    /// Relations that occur in valid/test but never in train.
    pub unseen_relations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

impl KnowledgeGraph {
    /// Build from already-indexed splits. Vocabularies must cover every index.
    pub fn from_splits(
        entities: Vocab,
        relations: Vocab,
        train: Vec<Triplet>,
        valid: Vec<Triplet>,
        test: Vec<Triplet>,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyTrain);
        }
        let (ne, nr) = (entities.len(), relations.len());
        for t in train.iter().chain(&valid).chain(&test) {
            if t.head >= ne || t.tail >= ne || t.relation >= nr {
                return Err(Error::Dimension(format!(
                    "triplet {t:?} out of range for |E|={ne}, |R|={nr}"
                )));
            }
        }
        let train_set: FxHashSet<Triplet> = train.iter().copied().collect();
        let mut true_set = train_set.clone();
        true_set.extend(valid.iter().copied());
        true_set.extend(test.iter().copied());

        let mut known_tails: FxHashMap<(usize, usize), Vec<usize>> = FxHashMap::default();
        let mut known_heads: FxHashMap<(usize, usize), Vec<usize>> = FxHashMap::default();
        for t in &true_set {
            known_tails
                .entry((t.head, t.relation))
                .or_default()
                .push(t.tail);
            known_heads
                .entry((t.relation, t.tail))
                .or_default()
                .push(t.head);
        }
        for v in known_tails.values_mut().chain(known_heads.values_mut()) {
            v.sort_unstable();
        }

        let mut seen_e = vec![false; ne];
        let mut seen_r = vec![false; nr];
        for t in &train {
            seen_e[t.head] = true;
            seen_e[t.tail] = true;
            seen_r[t.relation] = true;
        }
        let mut unseen_e = FxHashSet::default();
        let mut unseen_r = FxHashSet::default();
        for t in valid.iter().chain(&test) {
            for e in [t.head, t.tail] {
                if !seen_e[e] {
                    unseen_e.insert(e);
                }
            }
            if !seen_r[t.relation] {
                unseen_r.insert(t.relation);
            }
        }
        let overlap = valid
            .iter()
            .chain(&test)
            .filter(|t| train_set.contains(t))
            .count();
        if overlap > 0 {
            log::warn!("{overlap} valid/test triplets also appear in train");
        }

        Ok(KnowledgeGraph {
            entities,
            relations,
            train,
            valid,
            test,
            true_set,
            train_set,
            known_tails,
            known_heads,
            unseen_entities: unseen_e.len(),
            unseen_relations: unseen_r.len(),
        })
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn split(&self, split: Split) -> &[Triplet] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Membership in train ∪ valid ∪ test.
    pub fn is_true(&self, t: &Triplet) -> bool {
        self.true_set.contains(t)
    }

    pub fn in_train(&self, t: &Triplet) -> bool {
        self.train_set.contains(t)
    }

    pub fn true_set_len(&self) -> usize {
        self.true_set.len()
    }

    /// Sorted tails `t` with `(head, relation, t)` in any split.
    pub fn known_tails(&self, head: usize, relation: usize) -> &[usize] {
        self.known_tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Sorted heads `h` with `(h, relation, tail)` in any split.
    pub fn known_heads(&self, relation: usize, tail: usize) -> &[usize] {
        self.known_heads
            .get(&(relation, tail))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Render a split back to `head<TAB>relation<TAB>tail` text with names.
    pub fn split_to_text(&self, split: Split) -> String {
        let mut out = String::new();
        for t in self.split(split) {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                self.entities.name(t.head),
                self.relations.name(t.relation),
                self.entities.name(t.tail)
            );
        }
        out
    }

    /// Write `train.txt`, `valid.txt`, `test.txt` into `dir`.
    pub fn write_splits(&self, dir: &Path) -> Result<()> {
        for (split, name) in [
            (Split::Train, "train.txt"),
            (Split::Valid, "valid.txt"),
            (Split::Test, "test.txt"),
        ] {
            fsio::write_atomic_str(&dir.join(name), &self.split_to_text(split))?;
        }
        Ok(())
    }

    /// Write `entity2id.txt` and `relation2id.txt` into `dir`.
    pub fn write_dictionaries(&self, dir: &Path) -> Result<()> {
        fsio::write_atomic_str(&dir.join("entity2id.txt"), &self.entities.to_dictionary())?;
        fsio::write_atomic_str(
            &dir.join("relation2id.txt"),
            &self.relations.to_dictionary(),
        )
    }
}

/// Paths of a dataset on disk.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub train: PathBuf,
    pub valid: PathBuf,
    pub test: PathBuf,
    pub entity_dict: Option<PathBuf>,
    pub relation_dict: Option<PathBuf>,
}

impl DatasetPaths {
    /// `train.txt`, `valid.txt` and `test.txt` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            train: dir.join("train.txt"),
            valid: dir.join("valid.txt"),
            test: dir.join("test.txt"),
            entity_dict: None,
            relation_dict: None,
        }
    }
}

fn index_split(
    text: &str,
    origin: &str,
    order: ColumnOrder,
    entities: &mut Vocab,
    relations: &mut Vocab,
) -> Result<Vec<Triplet>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let names = parse_triple_line(line, order).map_err(|m| Error::parse(origin, i + 1, m))?;
        let Some([h, r, t]) = names else { continue };
        let unknown = |kind: &str, n: &str| {
            Error::parse(origin, i + 1, format!("{kind} {n:?} not in dictionary"))
        };
        let head = entities.intern(h).ok_or_else(|| unknown("entity", h))?;
        let relation = relations.intern(r).ok_or_else(|| unknown("relation", r))?;
        let tail = entities.intern(t).ok_or_else(|| unknown("entity", t))?;
        out.push(Triplet {
            head,
            relation,
            tail,
        });
    }
    Ok(out)
}

/// Index in-memory split texts. Indices are assigned in order of first
/// appearance over train, then valid, then test.
pub fn index_texts(
    train: &str,
    valid: &str,
    test: &str,
    order: ColumnOrder,
    dictionaries: Option<(Vocab, Vocab)>,
) -> Result<KnowledgeGraph> {
    let (mut entities, mut relations) = dictionaries.unwrap_or_default();
    let train = index_split(train, "train", order, &mut entities, &mut relations)?;
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let valid = index_split(valid, "valid", order, &mut entities, &mut relations)?;
    let test = index_split(test, "test", order, &mut entities, &mut relations)?;
    KnowledgeGraph::from_splits(entities, relations, train, valid, test)
}

/// Load a dataset from its three triple files.
pub fn load_dataset(paths: &DatasetPaths, order: ColumnOrder) -> Result<KnowledgeGraph> {
    let dictionaries = match (&paths.entity_dict, &paths.relation_dict) {
        (Some(e), Some(r)) => Some((
            parse_dictionary(&fsio::read_to_string(e)?, &e.display().to_string())?,
            parse_dictionary(&fsio::read_to_string(r)?, &r.display().to_string())?,
        )),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "entity and relation dictionaries must be given together".into(),
            ))
        }
    };
    let (mut entities, mut relations) = dictionaries.unwrap_or_default();
    let mut splits = Vec::with_capacity(3);
    for p in [&paths.train, &paths.valid, &paths.test] {
        let text = fsio::read_to_string(p)?;
        splits.push(index_split(
            &text,
            &p.display().to_string(),
            order,
            &mut entities,
            &mut relations,
        )?);
    }
    let test = splits.pop().unwrap_or_default();
    let valid = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let kg = KnowledgeGraph::from_splits(entities, relations, train, valid, test)?;
    if kg.unseen_entities > 0 || kg.unseen_relations > 0 {
        log::info!(
            "{} entities and {} relations appear only in valid/test",
            kg.unseen_entities,
            kg.unseen_relations
        );
    }
    Ok(kg)
}

/// Per-relation corruption statistics used by Bernoulli side selection.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationStats {
    /// Mean number of tails per distinct head.
    pub tph: Vec<f64>,
    /// Mean number of heads per distinct tail.
    pub hpt: Vec<f64>,
    /// Probability of corrupting the head: `tph / (tph + hpt)`.
    pub head_replace_prob: Vec<f64>,
    /// Relations with no training triplet; their probability defaults to 0.5.
    pub defaulted: Vec<bool>,
}

impl RelationStats {
    pub fn tail_replace_prob(&self, relation: usize) -> f64 {
        1.0 - self.head_replace_prob[relation]
    }

    /// Fair-coin statistics: every relation replaces the head with probability 0.5.
    pub fn uniform(relation_count: usize) -> Self {
        RelationStats {
            tph: vec![1.0; relation_count],
            hpt: vec![1.0; relation_count],
            head_replace_prob: vec![0.5; relation_count],
            defaulted: vec![false; relation_count],
        }
    }
}

pub fn relation_stats(kg: &KnowledgeGraph) -> RelationStats {
    let nr = kg.relation_count();
    let mut counts = vec![0usize; nr];
    let mut heads: Vec<FxHashSet<usize>> = vec![FxHashSet::default(); nr];
    let mut tails: Vec<FxHashSet<usize>> = vec![FxHashSet::default(); nr];
    for t in &kg.train {
        counts[t.relation] += 1;
        heads[t.relation].insert(t.head);
        tails[t.relation].insert(t.tail);
    }
    let mut stats = RelationStats {
        tph: vec![0.0; nr],
        hpt: vec![0.0; nr],
        head_replace_prob: vec![0.5; nr],
        defaulted: vec![false; nr],
    };
    for r in 0..nr {
        if counts[r] == 0 {
            stats.defaulted[r] = true;
            continue;
        }
        let tph = counts[r] as f64 / heads[r].len() as f64;
        let hpt = counts[r] as f64 / tails[r].len() as f64;
        stats.tph[r] = tph;
        stats.hpt[r] = hpt;
        stats.head_replace_prob[r] = tph / (tph + hpt);
    }
    stats
}

/// A random graph of distinct triplets, split 80/10/10 (valid and test get
/// `num_triplets / 10` each, train the rest).
pub fn generate_synthetic(
    num_entities: usize,
    num_relations: usize,
    num_triplets: usize,
    seed: u64,
) -> Result<KnowledgeGraph> {
    let capacity = num_entities
        .checked_mul(num_entities)
        .and_then(|x| x.checked_mul(num_relations))
        .ok_or_else(|| Error::Infeasible("graph size overflows".into()))?;
    if num_triplets > capacity {
        return Err(Error::Infeasible(format!(
            "{num_triplets} triplets requested but only {capacity} exist for |E|={num_entities}, |R|={num_relations}"
        )));
    }
    if num_triplets == 0 {
        return Err(Error::EmptyTrain);
    }
    let mut rng = rng::stream(seed, &[0x5A17]);
    let mut picked: Vec<Triplet> = Vec::with_capacity(num_triplets);
    if num_triplets * 2 > capacity {
        // dense request: partial Fisher-Yates over the full enumeration
        let mut all: Vec<usize> = (0..capacity).collect();
        for i in 0..num_triplets {
            let j = rng.gen_range(i..capacity);
            all.swap(i, j);
        }
        for &code in &all[..num_triplets] {
            let head = code / (num_relations * num_entities);
            let rest = code % (num_relations * num_entities);
            picked.push(Triplet::new(head, rest / num_entities, rest % num_entities));
        }
    } else {
        let mut seen = FxHashSet::default();
        while picked.len() < num_triplets {
            let t = Triplet::new(
                rng.gen_range(0..num_entities),
                rng.gen_range(0..num_relations),
                rng.gen_range(0..num_entities),
            );
            if seen.insert(t) {
                picked.push(t);
            }
        }
    }
    let n_holdout = num_triplets / 10;
    let test = picked.split_off(num_triplets - n_holdout);
    let valid = picked.split_off(num_triplets - 2 * n_holdout);
    let entities = Vocab::from_names((0..num_entities).map(|i| format!("e{i}")));
    let relations = Vocab::from_names((0..num_relations).map(|i| format!("r{i}")));
    KnowledgeGraph::from_splits(entities, relations, picked, valid, test)
}

/// Convenience for tests and fixtures: index named triplets given as
/// `(head, relation, tail)` string tuples, all in the train split.
pub fn from_named_train(triples: &[(&str, &str, &str)]) -> Result<KnowledgeGraph> {
    let mut entities = Vocab::default();
    let mut relations = Vocab::default();
    let mut train = Vec::new();
    for (h, r, t) in triples {
        let head = entities.intern(h).expect("unfrozen");
        let relation = relations.intern(r).expect("unfrozen");
        let tail = entities.intern(t).expect("unfrozen");
        train.push(Triplet::new(head, relation, tail));
    }
    KnowledgeGraph::from_splits(entities, relations, train, vec![], vec![])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_line_kept_in_train_but_not_true_set() {
        let kg = index_texts(
            "a\tr\tb\na\tr\tb\nb\tr\tc\n",
            "",
            "",
            ColumnOrder::Hrt,
            None,
        )
        .unwrap();
        assert_eq!(kg.train.len(), 3);
        assert_eq!(kg.true_set_len(), 2);
    }

    #[test]
    fn empty_train_is_an_error() {
        let err = index_texts("", "a\tr\tb\n", "", ColumnOrder::Hrt, None).unwrap_err();
        assert_eq!(err.to_string(), "no training triplets");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err =
            index_texts("a\tr\tb\nbroken line\n", "", "", ColumnOrder::Hrt, None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn indices_follow_first_appearance() {
        let kg = index_texts(
            "x\tr1\ty\ny\tr2\tz\n",
            "w\tr1\tx\n",
            "",
            ColumnOrder::Hrt,
            None,
        )
        .unwrap();
        assert_eq!(kg.entities.names(), &["x", "y", "z", "w"]);
        assert_eq!(kg.relations.names(), &["r1", "r2"]);
        assert_eq!(kg.unseen_entities, 1);
    }

    #[test]
    fn htr_order_swaps_columns() {
        let kg = index_texts("a\tb\tr\n", "", "", ColumnOrder::Htr, None).unwrap();
        assert_eq!(kg.relations.names(), &["r"]);
        assert_eq!(kg.train[0], Triplet::new(0, 0, 1));
    }

    #[test]
    fn frozen_dictionary_rejects_unknown_names() {
        let e = parse_dictionary("a\t0\nb\t1\n", "e").unwrap();
        let r = parse_dictionary("r\t0\n", "r").unwrap();
        let kg = index_texts(
            "b\tr\ta\n",
            "",
            "",
            ColumnOrder::Hrt,
            Some((e.clone(), r.clone())),
        )
        .unwrap();
        assert_eq!(kg.train[0], Triplet::new(1, 0, 0));
        assert!(index_texts("c\tr\ta\n", "", "", ColumnOrder::Hrt, Some((e, r))).is_err());
    }

    #[test]
    fn dictionary_validation() {
        assert!(parse_dictionary("a\t0\nb\t0\n", "x").is_err());
        assert!(parse_dictionary("a\t1\n", "x").is_err());
        assert!(parse_dictionary("a\t0\na\t1\n", "x").is_err());
        assert!(parse_dictionary("a 0\n", "x").is_err());
    }

    #[test]
    fn relation_stats_fixture() {
        let kg = from_named_train(&[("a", "r", "b"), ("a", "r", "c"), ("d", "r", "b")]).unwrap();
        let s = relation_stats(&kg);
        assert!((s.tph[0] - 1.5).abs() < 1e-12);
        assert!((s.hpt[0] - 1.5).abs() < 1e-12);
        assert!((s.head_replace_prob[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn relation_stats_one_to_many() {
        // tph = 3, hpt = 1
        let kg = from_named_train(&[("a", "r", "b"), ("a", "r", "c"), ("a", "r", "d")]).unwrap();
        let s = relation_stats(&kg);
        assert_eq!(s.tph[0], 3.0);
        assert_eq!(s.hpt[0], 1.0);
        assert_eq!(s.head_replace_prob[0], 0.75);
    }

    #[test]
    fn relation_stats_one_to_one_and_absent() {
        let mut rel = Vocab::default();
        rel.intern("r");
        rel.intern("unused");
        let ent = Vocab::from_names(["a", "b", "c", "d"].map(String::from));
        let kg = KnowledgeGraph::from_splits(
            ent,
            rel,
            vec![Triplet::new(0, 0, 1), Triplet::new(2, 0, 3)],
            vec![],
            vec![],
        )
        .unwrap();
        let s = relation_stats(&kg);
        assert_eq!(s.head_replace_prob[0], 0.5);
        assert!(!s.defaulted[0]);
        assert_eq!(s.head_replace_prob[1], 0.5);
        assert!(s.defaulted[1]);
    }

    #[test]
    fn synthetic_determinism_and_errors() {
        let a = generate_synthetic(4, 1, 8, 1).unwrap();
        let b = generate_synthetic(4, 1, 8, 1).unwrap();
        assert_eq!(a.train, b.train);
        assert!(matches!(
            generate_synthetic(2, 1, 5, 1),
            Err(Error::Infeasible(_))
        ));
        let c = generate_synthetic(20, 3, 100, 7).unwrap();
        assert_eq!((c.train.len(), c.valid.len(), c.test.len()), (80, 10, 10));
        assert_eq!(c.true_set_len(), 100);
    }

    #[test]
    fn true_set_matches_linear_scan() {
        let kg = generate_synthetic(6, 2, 30, 3).unwrap();
        for h in 0..6 {
            for r in 0..2 {
                for t in 0..6 {
                    let trip = Triplet::new(h, r, t);
                    let scan = kg
                        .train
                        .iter()
                        .chain(&kg.valid)
                        .chain(&kg.test)
                        .any(|x| *x == trip);
                    assert_eq!(kg.is_true(&trip), scan);
                }
            }
        }
    }

    #[test]
    fn text_round_trip_preserves_indices() {
        let kg = generate_synthetic(30, 4, 120, 11).unwrap();
        let again = index_texts(
            &kg.split_to_text(Split::Train),
            &kg.split_to_text(Split::Valid),
            &kg.split_to_text(Split::Test),
            ColumnOrder::Hrt,
            Some((
                parse_dictionary(&kg.entities.to_dictionary(), "e").unwrap(),
                parse_dictionary(&kg.relations.to_dictionary(), "r").unwrap(),
            )),
        )
        .unwrap();
        assert_eq!(kg.train, again.train);
        assert_eq!(kg.valid, again.valid);
        assert_eq!(kg.test, again.test);
    }
}
