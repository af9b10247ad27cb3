// SPDX-License-Identifier: Apache-2.0

//! Test batches: sets of paths measurable under one clock period because
//! no flip-flop launches or captures more than one of them.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::timing::{EdgeId, ExclusionSet, NodeId, TimingGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestBatch {
    pub index: usize,
    pub edges: Vec<EdgeId>,
}

/// Occupancy of one batch under construction.
struct Slots<'a> {
    graph: &'a TimingGraph,
    exclusions: &'a ExclusionSet,
    sources: HashSet<NodeId>,
    sinks: HashSet<NodeId>,
    edges: Vec<EdgeId>,
}

impl<'a> Slots<'a> {
    fn new(graph: &'a TimingGraph, exclusions: &'a ExclusionSet) -> Self {
        Self {
            graph,
            exclusions,
            sources: HashSet::new(),
            sinks: HashSet::new(),
            edges: Vec::new(),
        }
    }

    fn from_batch(graph: &'a TimingGraph, exclusions: &'a ExclusionSet, batch: &TestBatch) -> Self {
        let mut s = Self::new(graph, exclusions);
        for &e in &batch.edges {
            s.push(e);
        }
        s
    }

    fn accepts(&self, e: EdgeId) -> bool {
        let edge = self.graph.edge(e);
        !self.sources.contains(&edge.src)
            && !self.sinks.contains(&edge.dst)
            && !self.edges.contains(&e)
            && (self.exclusions.is_empty() || self.edges.iter().all(|&o| !self.exclusions.contains(e, o)))
    }

    fn push(&mut self, e: EdgeId) {
        let edge = self.graph.edge(e);
        self.sources.insert(edge.src);
        self.sinks.insert(edge.dst);
        self.edges.push(e);
    }
}

/// Largest in- or out-degree among the endpoints of `paths`; no batching
/// can use fewer batches.
pub fn degree_lower_bound(paths: &[EdgeId], graph: &TimingGraph) -> usize {
    let mut out_deg: HashMap<NodeId, usize> = HashMap::new();
    let mut in_deg: HashMap<NodeId, usize> = HashMap::new();
    for &e in paths.iter().collect::<BTreeSet<_>>() {
        let edge = graph.edge(e);
        *out_deg.entry(edge.src).or_default() += 1;
        *in_deg.entry(edge.dst).or_default() += 1;
    }
    out_deg.values().chain(in_deg.values()).copied().max().unwrap_or(0)
}

/// Whether `batch` respects the degree and exclusion rules.
pub fn batch_is_valid(batch: &TestBatch, graph: &TimingGraph) -> bool {
    let excl = graph.exclusion_set();
    let mut s = Slots::new(graph, &excl);
    for &e in &batch.edges {
        if !s.accepts(e) {
            return false;
        }
        s.push(e);
    }
    true
}

/// Greedy chain growing. Each batch repeatedly seeds a chain with the
/// lowest-id unplaced path it can accept, then extends the chain forward
/// from its sink and backward from its source while the degree and
/// exclusion rules allow.
pub fn form_batches(tested: &[EdgeId], graph: &TimingGraph) -> Vec<TestBatch> {
    let excl = graph.exclusion_set();
    let mut unplaced: BTreeSet<EdgeId> = tested.iter().copied().collect();
    let mut by_src: HashMap<NodeId, Vec<EdgeId>> = HashMap::new();
    let mut by_dst: HashMap<NodeId, Vec<EdgeId>> = HashMap::new();
    for &e in &unplaced {
        by_src.entry(graph.edge(e).src).or_default().push(e);
        by_dst.entry(graph.edge(e).dst).or_default().push(e);
    }
    let mut batches = Vec::new();
    while !unplaced.is_empty() {
        let mut slots = Slots::new(graph, &excl);
        while let Some(seed) = unplaced.iter().copied().find(|&e| slots.accepts(e)) {
            unplaced.remove(&seed);
            slots.push(seed);
            let mut head = graph.edge(seed).dst;
            while let Some(next) = by_src
                .get(&head)
                .and_then(|c| c.iter().copied().find(|e| unplaced.contains(e) && slots.accepts(*e)))
            {
                unplaced.remove(&next);
                slots.push(next);
                head = graph.edge(next).dst;
            }
            let mut tail = graph.edge(seed).src;
            while let Some(prev) = by_dst
                .get(&tail)
                .and_then(|c| c.iter().copied().find(|e| unplaced.contains(e) && slots.accepts(*e)))
            {
                unplaced.remove(&prev);
                slots.push(prev);
                tail = graph.edge(prev).src;
            }
        }
        batches.push(TestBatch {
            index: batches.len(),
            edges: slots.edges,
        });
    }
    batches
}

/// Inserts untested paths, largest `σ'` first (ties by lower id), into the
/// first batch that can take them. Returns the new batches and the
/// inserted paths in insertion order; paths no batch accepts are left out.
pub fn fill_empty_slots(
    batches: &[TestBatch],
    candidates: &[(EdgeId, f64)],
    graph: &TimingGraph,
) -> (Vec<TestBatch>, Vec<EdgeId>) {
    let excl = graph.exclusion_set();
    let mut order: Vec<(EdgeId, f64)> = candidates.to_vec();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut slots: Vec<Slots> = batches.iter().map(|b| Slots::from_batch(graph, &excl, b)).collect();
    let mut inserted = Vec::new();
    for (e, _) in order {
        if let Some(s) = slots.iter_mut().find(|s| s.accepts(e)) {
            s.push(e);
            inserted.push(e);
        }
    }
    let out = slots
        .into_iter()
        .enumerate()
        .map(|(index, s)| TestBatch { index, edges: s.edges })
        .collect();
    (out, inserted)
}
