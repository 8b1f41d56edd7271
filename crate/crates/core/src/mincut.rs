//! The subterm graph of a term set and minimum vertex cuts.
//!
//! Vertex cuts are computed by unit-capacity max flow (Dinic) on the
//! vertex-split graph. The flow is decomposed into vertex-disjoint paths and
//! the cut is read off the residual graph, giving a certificate that can be
//! checked independently with [`verify_certificate`].

use std::collections::VecDeque;

use serde::Serialize;

use crate::term::{restrict_to_variables, subterm_closure, SubtermIndex, Term, TermError, TermSet};

/// The graph with one vertex per subterm and an edge from each direct
/// subterm to its superterm.
#[derive(Debug, Clone)]
pub struct TermDag {
    index: SubtermIndex,
    edges: Vec<(usize, usize)>,
    sources: Vec<usize>,
    targets: Vec<usize>,
    succ: Vec<Vec<usize>>,
}

impl TermDag {
    pub fn index(&self) -> &SubtermIndex {
        &self.index
    }

    pub fn vertex_count(&self) -> usize {
        self.index.len()
    }

    pub fn vertex(&self, v: usize) -> &Term {
        self.index.get(v)
    }

    /// Deduplicated `(direct subterm, superterm)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Variable vertices, in subterm order.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Distinct vertices of the terms, in order of first appearance.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.index.get(v).is_var()
    }

    pub fn is_target(&self, v: usize) -> bool {
        self.targets.contains(&v)
    }
}

pub fn build_dag(ts: &TermSet) -> TermDag {
    let index = subterm_closure(ts);
    let n = index.len();
    let mut succ = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for v in 0..n {
        for &u in index.direct_subterms(v) {
            if !succ[u].contains(&v) {
                succ[u].push(v);
                edges.push((u, v));
            }
        }
    }
    let sources = index.variable_vertices().collect();
    let mut targets = Vec::new();
    for &t in index.term_vertices() {
        if !targets.contains(&t) {
            targets.push(t);
        }
    }
    TermDag {
        index,
        edges,
        sources,
        targets,
        succ,
    }
}

/// A minimum vertex cut together with a matching family of disjoint paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutCertificate {
    pub value: usize,
    /// Cut vertices, ascending.
    pub cut: Vec<usize>,
    /// Vertex-disjoint source-to-target paths, each listed from its variable.
    pub paths: Vec<Vec<usize>>,
}

const INF: u32 = u32::MAX / 2;

struct FlowEdge {
    to: usize,
    cap: u32,
}

struct Dinic {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u32) -> usize {
        let id = self.edges.len();
        self.edges.push(FlowEdge { to, cap });
        self.edges.push(FlowEdge { to: from, cap: 0 });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let FlowEdge { to, cap } = self.edges[e];
                if cap > 0 && self.level[to] < 0 {
                    self.level[to] = self.level[v] + 1;
                    queue.push_back(to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: u32) -> u32 {
        if v == t {
            return pushed;
        }
        while self.iter[v] < self.adj[v].len() {
            let e = self.adj[v][self.iter[v]];
            let FlowEdge { to, cap } = self.edges[e];
            if cap > 0 && self.level[to] == self.level[v] + 1 {
                let d = self.dfs(to, t, pushed.min(cap));
                if d > 0 {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u32 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, INF);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Minimum vertex cut separating the variables from the terms.
pub fn min_cut(dag: &TermDag) -> CutCertificate {
    let n = dag.vertex_count();
    let vin = |v: usize| 2 * v;
    let vout = |v: usize| 2 * v + 1;
    let s = 2 * n;
    let t = 2 * n + 1;
    let mut g = Dinic::new(2 * n + 2);

    let mut split = Vec::with_capacity(n);
    for v in 0..n {
        split.push(g.add_edge(vin(v), vout(v), 1));
    }
    let mut adjacency = Vec::new();
    for &(u, v) in dag.edges() {
        adjacency.push((g.add_edge(vout(u), vin(v), INF), u, v));
    }
    for &v in dag.sources() {
        g.add_edge(s, vin(v), INF);
    }
    for &v in dag.targets() {
        g.add_edge(vout(v), t, INF);
    }

    let value = g.max_flow(s, t) as usize;

    // residual reachability from the super-source
    let mut seen = vec![false; 2 * n + 2];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        for &e in &g.adj[x] {
            let FlowEdge { to, cap } = g.edges[e];
            if cap > 0 && !seen[to] {
                seen[to] = true;
                queue.push_back(to);
            }
        }
    }
    let cut: Vec<usize> = (0..n).filter(|&v| seen[vin(v)] && !seen[vout(v)]).collect();

    // flow decomposition: a vertex carries flow iff its split edge is saturated
    let carries = |v: usize| g.edges[split[v]].cap == 0;
    let mut next = vec![None; n];
    for &(e, u, v) in &adjacency {
        // flow on an infinite edge equals the capacity of its reverse edge
        if g.edges[e ^ 1].cap > 0 {
            next[u] = Some(v);
        }
    }
    let mut paths = Vec::with_capacity(value);
    for &src in dag.sources() {
        if !carries(src) {
            continue;
        }
        let mut path = vec![src];
        let mut v = src;
        while let Some(w) = next[v] {
            path.push(w);
            v = w;
        }
        paths.push(path);
    }

    CutCertificate { value, cut, paths }
}

/// Min-cut of the set restricted to `keep`. The constant `0` is never a source, so it never lies on
/// a path and never enters the cut.
pub fn min_cut_wrt(ts: &TermSet, keep: &[String]) -> Result<(TermDag, CutCertificate), TermError> {
    let restricted = restrict_to_variables(ts, keep)?;
    let dag = build_dag(&restricted);
    let cert = min_cut(&dag);
    Ok((dag, cert))
}

pub fn min_cut_value(ts: &TermSet) -> usize {
    min_cut(&build_dag(ts)).value
}

/// True if removing the marked vertices leaves no path from a variable to a
/// term (a vertex in both sets counts as a path of length zero).
pub fn is_vertex_cut(dag: &TermDag, removed: &[bool]) -> bool {
    let n = dag.vertex_count();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = dag.sources().iter().copied().filter(|&v| !removed[v]).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in dag.successors(v) {
            if !removed[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    dag.targets().iter().all(|&t| !seen[t])
}

/// Result of an independent certificate check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub problems: Vec<String>,
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-check every certificate invariant by direct traversal of the DAG.
pub fn verify_certificate(dag: &TermDag, cert: &CutCertificate) -> Verification {
    let n = dag.vertex_count();
    let mut problems = Vec::new();

    if cert.cut.len() != cert.value {
        problems.push(format!(
            "cut has {} vertices but value is {}",
            cert.cut.len(),
            cert.value
        ));
    }
    if cert.paths.len() != cert.value {
        problems.push(format!(
            "{} paths listed but value is {}",
            cert.paths.len(),
            cert.value
        ));
    }
    if let Some(&v) = cert.cut.iter().find(|&&v| v >= n) {
        problems.push(format!("cut vertex {v} out of range"));
        return Verification { problems };
    }
    let mut in_cut = vec![false; n];
    for &v in &cert.cut {
        if in_cut[v] {
            problems.push(format!("cut vertex {v} listed twice"));
        }
        in_cut[v] = true;
    }

    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, path) in cert.paths.iter().enumerate() {
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            problems.push(format!("path {i} is empty"));
            continue;
        };
        if path.iter().any(|&v| v >= n) {
            problems.push(format!("path {i} has a vertex out of range"));
            continue;
        }
        if !dag.is_source(first) {
            problems.push(format!("path {i} does not start at a variable"));
        }
        if !dag.is_target(last) {
            problems.push(format!("path {i} does not end at a term"));
        }
        for w in path.windows(2) {
            if !dag.successors(w[0]).contains(&w[1]) {
                problems.push(format!("path {i} uses a non-edge {} -> {}", w[0], w[1]));
            }
        }
        for &v in path {
            match owner[v] {
                Some(j) => problems.push(format!("paths {j} and {i} share vertex {v}")),
                None => owner[v] = Some(i),
            }
        }
        let hits = path.iter().filter(|&&v| in_cut[v]).count();
        if hits != 1 {
            problems.push(format!("path {i} contains {hits} cut vertices"));
        }
    }

    if !is_vertex_cut(dag, &in_cut) {
        problems.push("removing the cut leaves a variable-to-term path".to_string());
    }
    Verification { problems }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term_set;

    fn ts(src: &str) -> TermSet {
        parse_term_set(src).unwrap()
    }

    const SHARED_RELAY: &str = "term h(f(x, y), g(z, w), f(y, x))\nterm m(g(z, w), f(y, x))\n\
                          term g(f(x, y), g(z, w))\nterm f(g(z, w), f(y, x))";

    fn check(src: &str) -> CutCertificate {
        let dag = build_dag(&ts(src));
        let cert = min_cut(&dag);
        let v = verify_certificate(&dag, &cert);
        assert!(v.is_valid(), "{:?}", v.problems);
        cert
    }

    fn brute_force(dag: &TermDag) -> usize {
        let n = dag.vertex_count();
        (0u32..1 << n)
            .filter(|mask| {
                let removed: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                is_vertex_cut(dag, &removed)
            })
            .map(u32::count_ones)
            .min()
            .unwrap() as usize
    }

    #[test]
    fn shared_relay() {
        let dag = build_dag(&ts(SHARED_RELAY));
        assert_eq!(dag.vertex_count(), 11);
        assert_eq!(dag.sources().len(), 4);
        assert_eq!(dag.targets().len(), 4);
        assert_eq!(check(SHARED_RELAY).value, 3);
        assert_eq!(brute_force(&dag), 3);
    }

    #[test]
    fn shared_relay_restricted() {
        let (dag, cert) = min_cut_wrt(&ts(SHARED_RELAY), &["w".into(), "z".into()]).unwrap();
        assert_eq!(cert.value, 1);
        assert_eq!(dag.vertex(cert.cut[0]).to_string(), "g(z, w)");
        assert!(verify_certificate(&dag, &cert).is_valid());
    }

    #[test]
    fn directed_cut_directed() {
        let src = "term h(g(f(z), y), x)\nterm l(f(z))\nterm l(z)";
        let dag = build_dag(&ts(src));
        // seven listed vertices plus the target l(z)
        assert_eq!(dag.vertex_count(), 8);
        let cert = check(src);
        assert_eq!(cert.value, 2);
        assert_eq!(cert.paths.len(), 2);
    }

    #[test]
    fn case_study_paths() {
        let cert = check("term f(x,y)\nterm f(x,z)\nterm f(w,y)\nterm f(w,z)");
        assert_eq!(cert.value, 4);
        assert!(cert.paths.iter().all(|p| p.len() == 2));
    }

    #[test]
    fn variable_term_is_a_length_zero_path() {
        let cert = check("term x");
        assert_eq!(cert.value, 1);
        assert_eq!(cert.paths, vec![vec![0]]);
        assert_eq!(cert.cut, vec![0]);
        assert_eq!(check("term x\nterm f(x, y)\nterm y").value, 2);
    }

    #[test]
    fn restriction_to_nothing_has_value_zero() {
        let (_, cert) = min_cut_wrt(&ts(SHARED_RELAY), &[]).unwrap();
        assert_eq!(cert.value, 0);
        assert!(cert.paths.is_empty());
        let (_, cert) = min_cut_wrt(
            &ts("term f(x,y)\nterm f(x,z)\nterm f(w,y)\nterm f(w,z)"),
            &["x".into()],
        )
        .unwrap();
        assert_eq!(cert.value, 1);
    }

    #[test]
    fn verifier_rejects_bad_certificates() {
        let dag = build_dag(&ts(SHARED_RELAY));
        let good = min_cut(&dag);

        let mut overlapping = good.clone();
        overlapping.paths[1] = overlapping.paths[0].clone();
        assert!(!verify_certificate(&dag, &overlapping).is_valid());

        let mut leaky = good.clone();
        leaky.cut.pop();
        leaky.value -= 1;
        leaky.paths.pop();
        assert!(!verify_certificate(&dag, &leaky).is_valid());
    }
}
