//! Query-driven pruning of the candidate scene graph.
//!
//! Objects are matched against the query lexically (aliases as whole token
//! runs) and then semantically (embedding cosine). The match count decides
//! which subgraph survives. Relations are then ranked per head with query
//! relevance as the primary key and center distance as the secondary key,
//! truncated to `k`, and inverse / repeated pair edges are dropped.

mod lexicon;
mod vectors;

use std::collections::{BTreeMap, BTreeSet, HashSet};

pub use lexicon::{
    find_phrase, tokenize, LexiconError, RelationLexicon, Stopwords, SynonymLexicon,
};
pub use vectors::{VectorError, WordVectorTable};

use crate::config::{DedupScope, PipelineConfig};
use crate::types::{ObjectInstance, Relation, RelationLabel, SceneGraph};

/// Everything the matcher consults besides the query itself.
#[derive(Debug, Clone, Default)]
pub struct FilterResources {
    pub synonyms: SynonymLexicon,
    pub relations: RelationLexicon,
    pub vectors: WordVectorTable,
    pub stopwords: Stopwords,
}

fn alias_tokens(aliases: &[String]) -> Vec<Vec<String>> {
    aliases.iter().map(|a| tokenize(a)).collect()
}

/// Indices of objects the query mentions, lexically or semantically.
pub fn match_objects(
    query: &str,
    objects: &[ObjectInstance],
    res: &FilterResources,
    tau_query_obj: f64,
) -> BTreeSet<usize> {
    let q = tokenize(query);
    let content = res.stopwords.content_tokens(&q);
    let mut verdicts: BTreeMap<&str, bool> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for (i, obj) in objects.iter().enumerate() {
        let hit = *verdicts.entry(obj.class_label.as_str()).or_insert_with(|| {
            let aliases = alias_tokens(&res.synonyms.aliases(&obj.class_label));
            if aliases.iter().any(|a| find_phrase(&q, a).is_some()) {
                return true;
            }
            let alias_words: Vec<&str> = aliases
                .iter()
                .flatten()
                .map(String::as_str)
                .filter(|t| !res.stopwords.contains(t))
                .collect();
            res.vectors
                .max_cosine(content.iter().copied(), &alias_words)
                .is_some_and(|c| c > tau_query_obj)
        });
        if hit {
            out.insert(i);
        }
    }
    out
}

/// Relation labels the query asks about.
///
/// Trigger phrases are matched as whole token runs first. Labels without a
/// lexical hit are then compared semantically: query content tokens not
/// already consumed by a lexical trigger against each phrase's head token.
pub fn extract_relation_terms(
    query: &str,
    res: &FilterResources,
    tau: f64,
) -> BTreeSet<RelationLabel> {
    let q = tokenize(query);
    let mut found = BTreeSet::new();
    let mut consumed: HashSet<usize> = HashSet::new();
    for label in RelationLabel::ALL {
        for phrase in res.relations.triggers(label) {
            let p = tokenize(phrase);
            if let Some(start) = find_phrase(&q, &p) {
                found.insert(label);
                consumed.extend(start..start + p.len());
            }
        }
    }
    if res.vectors.is_empty() {
        return found;
    }
    let free: Vec<&str> = q
        .iter()
        .enumerate()
        .filter(|(i, t)| !consumed.contains(i) && !res.stopwords.contains(t))
        .map(|(_, t)| t.as_str())
        .collect();
    for label in RelationLabel::ALL {
        if found.contains(&label) {
            continue;
        }
        let heads: Vec<String> = res
            .relations
            .triggers(label)
            .iter()
            .filter_map(|p| tokenize(p).into_iter().find(|t| !res.stopwords.contains(t)))
            .collect();
        let heads: Vec<&str> = heads.iter().map(String::as_str).collect();
        if res
            .vectors
            .max_cosine(free.iter().copied(), &heads)
            .is_some_and(|c| c > tau)
        {
            found.insert(label);
        }
    }
    found
}

/// Apply the 0 / 1 / many rule. Returns the kept object indices (ascending)
/// and the kept relations in their original order.
pub fn select_subgraph(
    object_count: usize,
    relations: &[Relation],
    relevant: &BTreeSet<usize>,
) -> (Vec<usize>, Vec<Relation>) {
    match relevant.len() {
        0 => ((0..object_count).collect(), relations.to_vec()),
        1 => {
            let only = *relevant.iter().next().expect("one element");
            let edges: Vec<Relation> = relations
                .iter()
                .filter(|r| r.head == only)
                .cloned()
                .collect();
            let mut kept: BTreeSet<usize> = edges.iter().map(|r| r.tail).collect();
            kept.insert(only);
            (kept.into_iter().collect(), edges)
        }
        _ => (
            relevant.iter().copied().collect(),
            relations
                .iter()
                .filter(|r| relevant.contains(&r.head) && relevant.contains(&r.tail))
                .cloned()
                .collect(),
        ),
    }
}

/// Keep the `k` best relations of every head. Heads are emitted in
/// ascending index order, each group in rank order: query-relevant first,
/// then by center distance, ontology order and tail index.
pub fn rank_and_prune(
    relations: &[Relation],
    query_labels: &BTreeSet<RelationLabel>,
    k: usize,
) -> Vec<Relation> {
    let mut groups: BTreeMap<usize, Vec<Relation>> = BTreeMap::new();
    for r in relations {
        let mut r = r.clone();
        r.relevance_rank = if query_labels.contains(&r.label) {
            0
        } else {
            1
        };
        groups.entry(r.head).or_default().push(r);
    }
    let mut out = Vec::with_capacity(relations.len());
    for (_, mut group) in groups {
        group.sort_by(|a, b| {
            a.relevance_rank
                .cmp(&b.relevance_rank)
                .then(a.center_distance.total_cmp(&b.center_distance))
                .then(a.label.cmp(&b.label))
                .then(a.tail.cmp(&b.tail))
        });
        group.truncate(k);
        out.extend(group);
    }
    out
}

/// Keep the first edge seen for each unordered object pair (or pair and
/// relation group, under [`DedupScope::PairAndGroup`]).
pub fn deduplicate(relations: &[Relation], scope: DedupScope) -> Vec<Relation> {
    let mut seen = HashSet::new();
    relations
        .iter()
        .filter(|r| {
            let group = match scope {
                DedupScope::Pair => None,
                DedupScope::PairAndGroup => Some(r.label.group()),
            };
            seen.insert((r.unordered_pair(), group))
        })
        .cloned()
        .collect()
}

/// What the query matched, kept for reporting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryMatch {
    pub relevant_objects: BTreeSet<usize>,
    pub relation_terms: BTreeSet<RelationLabel>,
}

/// Full filtering stage. Surviving objects keep their relative order and
/// relation endpoints are re-indexed into the surviving list.
pub fn filter_scene_graph(
    objects: Vec<ObjectInstance>,
    relations: &[Relation],
    query: &str,
    res: &FilterResources,
    cfg: &PipelineConfig,
) -> (SceneGraph, QueryMatch) {
    let relevant = match_objects(query, &objects, res, cfg.tau_query_obj);
    let terms = extract_relation_terms(query, res, cfg.tau_query_obj);
    let (kept, edges) = select_subgraph(objects.len(), relations, &relevant);
    let ranked = rank_and_prune(&edges, &terms, cfg.k);
    let deduped = deduplicate(&ranked, cfg.dedup_scope);

    let remap: BTreeMap<usize, usize> = kept
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let relations = deduped
        .into_iter()
        .map(|mut r| {
            r.head = remap[&r.head];
            r.tail = remap[&r.tail];
            r
        })
        .collect();
    let kept_set: BTreeSet<usize> = kept.iter().copied().collect();
    let objects = objects
        .into_iter()
        .enumerate()
        .filter(|(i, _)| kept_set.contains(i))
        .map(|(_, o)| o)
        .collect();
    (
        SceneGraph { objects, relations },
        QueryMatch {
            relevant_objects: relevant,
            relation_terms: terms,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn obj(class: &str) -> ObjectInstance {
        ObjectInstance::new(class, 0.9, BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap())
    }

    fn rel(h: usize, label: RelationLabel, t: usize, d: f64) -> Relation {
        Relation::new(h, t, label, d)
    }

    fn triples(rs: &[Relation]) -> Vec<(usize, RelationLabel, usize)> {
        rs.iter().map(|r| (r.head, r.label, r.tail)).collect()
    }

    #[test]
    fn figure_scenario_objects_and_terms() {
        let res = FilterResources::default();
        let objects = [obj("potted plant"), obj("oven"), obj("refrigerator")];
        let q = "Is the potted plant below the oven?";
        assert_eq!(
            match_objects(q, &objects, &res, 0.5),
            BTreeSet::from([0, 1])
        );
        assert_eq!(
            extract_relation_terms(q, &res, 0.5),
            BTreeSet::from([RelationLabel::Below])
        );
    }

    #[test]
    fn no_object_words_matches_nothing() {
        let res = FilterResources::default();
        let objects = [obj("potted plant"), obj("oven")];
        assert!(match_objects("What is happening here?", &objects, &res, 0.99).is_empty());
        assert!(extract_relation_terms("What color is the car?", &res, 0.5).is_empty());
    }

    #[test]
    fn semantic_match_through_vectors() {
        let mut res = FilterResources {
            synonyms: SynonymLexicon::empty(),
            ..Default::default()
        };
        res.vectors.insert("sofa", vec![0.3, 0.4, 0.0]).unwrap();
        res.vectors.insert("couch", vec![0.3, 0.4, 0.0]).unwrap();
        let objects = [obj("couch"), obj("lamp")];
        assert_eq!(
            match_objects("sofa", &objects, &res, 0.5),
            BTreeSet::from([0])
        );
        // Raising the threshold past 1 removes the semantic match.
        assert!(match_objects("sofa", &objects, &res, 1.0).is_empty());
    }

    #[test]
    fn relation_synonym_trigger() {
        let res = FilterResources::default();
        assert_eq!(
            extract_relation_terms("the cup beneath the shelf", &res, 0.5),
            BTreeSet::from([RelationLabel::Below])
        );
    }

    #[test]
    fn relation_semantic_fallback_skips_consumed_tokens() {
        let mut res = FilterResources::default();
        res.vectors.insert("left", vec![1.0, 0.2]).unwrap();
        res.vectors.insert("right", vec![1.0, 0.25]).unwrap();
        res.vectors.insert("beside", vec![0.0, 1.0]).unwrap();
        res.vectors.insert("alongside", vec![0.05, 1.0]).unwrap();
        let terms = extract_relation_terms("is the cup left of the plate", &res, 0.5);
        assert_eq!(terms, BTreeSet::from([RelationLabel::LeftOf]));
        let terms = extract_relation_terms("is the cup alongside the plate", &res, 0.5);
        assert_eq!(terms, BTreeSet::from([RelationLabel::Near]));
    }

    #[test]
    fn subgraph_many_one_none() {
        use RelationLabel::*;
        // 0 plant, 1 oven, 2 fridge, 3 sink
        let rels = vec![
            rel(0, Below, 1, 10.0),
            rel(1, Above, 0, 10.0),
            rel(0, LeftOf, 2, 10.0),
            rel(2, RightOf, 0, 10.0),
            rel(1, LeftOf, 3, 10.0),
            rel(2, Near, 1, 10.0),
        ];
        let (o, e) = select_subgraph(4, &rels, &BTreeSet::from([0, 1]));
        assert_eq!(o, vec![0, 1]);
        assert_eq!(triples(&e), vec![(0, Below, 1), (1, Above, 0)]);

        let (o, e) = select_subgraph(4, &rels, &BTreeSet::from([1]));
        assert_eq!(o, vec![0, 1, 3]);
        assert_eq!(triples(&e), vec![(1, Above, 0), (1, LeftOf, 3)]);

        let (o, e) = select_subgraph(4, &rels, &BTreeSet::new());
        assert_eq!(o, vec![0, 1, 2, 3]);
        assert_eq!(e, rels);
    }

    #[test]
    fn single_relevant_oven_keeps_outgoing_only() {
        use RelationLabel::*;
        // 0 oven, 1 sink, 2 fridge
        let rels = vec![rel(0, LeftOf, 1, 5.0), rel(2, RightOf, 0, 5.0)];
        let (o, e) = select_subgraph(3, &rels, &BTreeSet::from([0]));
        assert_eq!(o, vec![0, 1]);
        assert_eq!(triples(&e), vec![(0, LeftOf, 1)]);
    }

    #[test]
    fn relevance_beats_distance() {
        use RelationLabel::*;
        let rels = vec![
            rel(0, Above, 1, 10.0),
            rel(0, LeftOf, 2, 20.0),
            rel(0, Near, 3, 30.0),
            rel(0, InFrontOf, 4, 40.0),
            rel(0, Behind, 5, 90.0),
        ];
        let out = rank_and_prune(&rels, &BTreeSet::from([Behind]), 3);
        assert_eq!(
            triples(&out),
            vec![(0, Behind, 5), (0, Above, 1), (0, LeftOf, 2)]
        );
        assert_eq!(out[0].relevance_rank, 0);
        assert_eq!(out[1].relevance_rank, 1);

        let plain = rank_and_prune(&rels, &BTreeSet::new(), 3);
        assert_eq!(
            triples(&plain),
            vec![(0, Above, 1), (0, LeftOf, 2), (0, Near, 3)]
        );
        assert_eq!(rank_and_prune(&rels, &BTreeSet::new(), 10).len(), 5);
    }

    #[test]
    fn rank_ties_use_ontology_then_tail() {
        use RelationLabel::*;
        let rels = vec![
            rel(0, Behind, 2, 5.0),
            rel(0, Above, 2, 5.0),
            rel(0, Above, 1, 5.0),
        ];
        let out = rank_and_prune(&rels, &BTreeSet::new(), 3);
        assert_eq!(
            triples(&out),
            vec![(0, Above, 1), (0, Above, 2), (0, Behind, 2)]
        );
    }

    #[test]
    fn dedup_cases() {
        use RelationLabel::*;
        let inverse = vec![rel(0, Above, 1, 1.0), rel(1, Below, 0, 1.0)];
        assert_eq!(
            triples(&deduplicate(&inverse, DedupScope::Pair)),
            vec![(0, Above, 1)]
        );
        let same_pair = vec![rel(0, Above, 1, 1.0), rel(0, InFrontOf, 1, 1.0)];
        assert_eq!(
            triples(&deduplicate(&same_pair, DedupScope::Pair)),
            vec![(0, Above, 1)]
        );
        assert_eq!(deduplicate(&same_pair, DedupScope::PairAndGroup).len(), 2);
        let disjoint = vec![rel(0, Above, 1, 1.0), rel(2, Near, 3, 1.0)];
        assert_eq!(deduplicate(&disjoint, DedupScope::Pair), disjoint);
    }

    #[test]
    fn full_stage_reindexes() {
        use RelationLabel::*;
        let objects = vec![obj("potted plant"), obj("oven"), obj("refrigerator")];
        let rels = vec![
            rel(0, Below, 1, 10.0),
            rel(0, LeftOf, 2, 10.0),
            rel(1, Above, 0, 10.0),
            rel(2, RightOf, 0, 10.0),
        ];
        let (sg, m) = filter_scene_graph(
            objects,
            &rels,
            "Is the potted plant below the oven?",
            &FilterResources::default(),
            &PipelineConfig::default(),
        );
        assert_eq!(m.relevant_objects, BTreeSet::from([0, 1]));
        let classes: Vec<&str> = sg.objects.iter().map(|o| o.class_label.as_str()).collect();
        assert_eq!(classes, vec!["potted plant", "oven"]);
        assert_eq!(triples(&sg.relations), vec![(0, Below, 1)]);
    }
}
