use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Edge,
    Cloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowNode {
    pub name: String,
    pub placement: Placement,
}

/// Logical processing chain mapped onto edge and cloud placements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowGraph {
    pub nodes: Vec<WorkflowNode>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    /// Latency budget in seconds per node.
    #[serde(default)]
    pub qos: BTreeMap<String, f64>,
}

impl WorkflowGraph {
    /// `edge:enhance -> cloud:generate`.
    pub fn canonical() -> Self {
        WorkflowGraph {
            nodes: vec![
                WorkflowNode {
                    name: "enhance".into(),
                    placement: Placement::Edge,
                },
                WorkflowNode {
                    name: "generate".into(),
                    placement: Placement::Cloud,
                },
            ],
            edges: vec![("enhance".into(), "generate".into())],
            qos: BTreeMap::new(),
        }
    }
}

impl Default for WorkflowGraph {
    fn default() -> Self {
        Self::canonical()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorkflowViolation {
    DuplicateNode(String),
    UnknownNode(String),
    /// Nodes on one cycle, in traversal order.
    Cycle(Vec<String>),
    /// A cloud node reachable from an entry point without passing through
    /// any edge node.
    CloudPrecedesEdge(String),
    InvalidBudget(String),
}

impl fmt::Display for WorkflowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkflowViolation::DuplicateNode(n) => write!(f, "duplicate node: {n}"),
            WorkflowViolation::UnknownNode(n) => write!(f, "unknown node: {n}"),
            WorkflowViolation::Cycle(path) => write!(f, "cycle: {}", path.join(" -> ")),
            WorkflowViolation::CloudPrecedesEdge(n) => write!(f, "cloud precedes edge: {n}"),
            WorkflowViolation::InvalidBudget(n) => write!(f, "invalid qos budget: {n}"),
        }
    }
}

/// Checks acyclicity and that every path into a cloud node passes an edge
/// node first. Violations are returned as data.
pub fn validate_workflow(g: &WorkflowGraph) -> Result<(), Vec<WorkflowViolation>> {
    let mut violations = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in g.nodes.iter().enumerate() {
        if index.insert(n.name.as_str(), i).is_some() {
            violations.push(WorkflowViolation::DuplicateNode(n.name.clone()));
        }
    }
    let mut succ = vec![Vec::new(); g.nodes.len()];
    let mut pred = vec![Vec::new(); g.nodes.len()];
    for (a, b) in &g.edges {
        match (index.get(a.as_str()), index.get(b.as_str())) {
            (Some(&x), Some(&y)) => {
                succ[x].push(y);
                pred[y].push(x);
            }
            (None, _) => violations.push(WorkflowViolation::UnknownNode(a.clone())),
            (_, None) => violations.push(WorkflowViolation::UnknownNode(b.clone())),
        }
    }
    for (name, budget) in &g.qos {
        if !index.contains_key(name.as_str()) {
            violations.push(WorkflowViolation::UnknownNode(name.clone()));
        } else if !(budget.is_finite() && *budget >= 0.0) {
            violations.push(WorkflowViolation::InvalidBudget(name.clone()));
        }
    }

    match topo_order(&succ) {
        Err(cycle) => violations.push(WorkflowViolation::Cycle(
            cycle.into_iter().map(|i| g.nodes[i].name.clone()).collect(),
        )),
        Ok(order) => {
            // unguarded[n]: some entry path reaches n without an edge node
            let mut unguarded = vec![false; g.nodes.len()];
            for &n in &order {
                let is_cloud = g.nodes[n].placement == Placement::Cloud;
                unguarded[n] =
                    is_cloud && (pred[n].is_empty() || pred[n].iter().any(|&p| unguarded[p]));
            }
            for (i, n) in g.nodes.iter().enumerate() {
                // report only where the unguarded path first enters the cloud
                if unguarded[i] && pred[i].iter().all(|&p| !unguarded[p]) {
                    violations.push(WorkflowViolation::CloudPrecedesEdge(n.name.clone()));
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Kahn's algorithm; on failure returns one cycle.
fn topo_order(succ: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &t in &succ[i] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.push(t);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk forward inside the leftover subgraph until a node repeats.
    let start = (0..n).find(|&i| indeg[i] > 0).expect("leftover node");
    let mut seen = HashMap::new();
    let mut path = Vec::new();
    let mut cur = start;
    loop {
        if let Some(&at) = seen.get(&cur) {
            let mut cycle: Vec<usize> = path[at..].to_vec();
            cycle.push(cur);
            return Err(cycle);
        }
        seen.insert(cur, path.len());
        path.push(cur);
        cur = *succ[cur]
            .iter()
            .find(|&&t| indeg[t] > 0)
            .expect("leftover node has a leftover successor");
    }
}
