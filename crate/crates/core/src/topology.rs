//! Device coupling graphs and hop distances.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNREACHABLE: u32 = u32::MAX;

const SYCAMORE54: &str = include_str!("../data/sycamore54.json");
const MONTREAL27: &str = include_str!("../data/montreal27.json");
const ASPEN16: &str = include_str!("../data/aspen16.json");

/// Undirected hardware graph with its all-pairs hop-count matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceTopology {
    pub name: String,
    pub m: usize,
    pub edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    pub dist: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    m: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    version: Option<u32>,
    #[serde(default)]
    coords: Option<Vec<[usize; 2]>>,
}

impl DeviceTopology {
    pub fn new(name: impl Into<String>, m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("device needs at least one qubit".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::QubitOutOfRange { index: a.max(b), n: m });
            }
            if a == b {
                return Err(Error::Invalid(format!("self-loop on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for nb in &mut adj {
            nb.sort_unstable();
        }
        let dist = all_pairs_distances(&edges, m);
        let topo = DeviceTopology { name: name.into(), m, edges, adj, dist };
        let comps = topo.components();
        if comps.len() > 1 {
            return Err(Error::Disconnected(comps));
        }
        Ok(topo)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TopologyFile = serde_json::from_str(text)?;
        let edges: Vec<_> = f.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(f.name.unwrap_or_else(|| "custom".into()), f.m, &edges)
    }

    pub fn to_json(&self) -> String {
        let f = TopologyFile {
            m: self.m,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            name: Some(self.name.clone()),
            version: None,
            coords: None,
        };
        serde_json::to_string(&f).expect("topology serializes")
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adj[q].len()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.dist[a][b] == 1
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.dist[a][b]
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().flatten().copied().filter(|&d| d != UNREACHABLE).max().unwrap_or(0)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.m];
        let mut comps = Vec::new();
        for s in 0..self.m {
            if seen[s] {
                continue;
            }
            let mut comp: Vec<usize> = (0..self.m).filter(|&t| self.dist[s][t] != UNREACHABLE).collect();
            comp.sort_unstable();
            for &t in &comp {
                seen[t] = true;
            }
            comps.push(comp);
        }
        comps
    }
}

/// Floyd-Warshall over unit edge weights. Unreachable pairs hold [`UNREACHABLE`].
pub fn all_pairs_distances(edges: &[(usize, usize)], m: usize) -> Vec<Vec<u32>> {
    let mut d = vec![vec![UNREACHABLE; m]; m];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        if a != b {
            d[a][b] = 1;
            d[b][a] = 1;
        }
    }
    for k in 0..m {
        for i in 0..m {
            let dik = d[i][k];
            if dik == UNREACHABLE {
                continue;
            }
            for j in 0..m {
                let dkj = d[k][j];
                if dkj != UNREACHABLE && dik + dkj < d[i][j] {
                    d[i][j] = dik + dkj;
                }
            }
        }
    }
    d
}

/// Distances that must cover every node; fails with the component list otherwise.
pub fn connected_distances(edges: &[(usize, usize)], m: usize) -> Result<Vec<Vec<u32>>> {
    DeviceTopology::new("graph", m, edges).map(|t| t.dist)
}

pub fn make_grid(rows: usize, cols: usize) -> Result<DeviceTopology> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(Error::Invalid(format!("grid {rows}x{cols} needs at least two qubits")));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let q = r * cols + c;
            if c + 1 < cols {
                edges.push((q, q + 1));
            }
            if r + 1 < rows {
                edges.push((q, q + cols));
            }
        }
    }
    DeviceTopology::new(format!("grid:{rows}x{cols}"), rows * cols, &edges)
}

pub fn make_line(n: usize) -> Result<DeviceTopology> {
    let mut t = make_grid(1, n)?;
    t.name = format!("line:{n}");
    Ok(t)
}

pub fn make_complete(n: usize) -> Result<DeviceTopology> {
    if n < 2 {
        return Err(Error::Invalid("complete graph needs at least two qubits".into()));
    }
    let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    DeviceTopology::new(format!("all2all:{n}"), n, &edges)
}

fn parse_dim(s: &str, name: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::UnknownPreset(name.to_string()))
}

/// Named devices: `sycamore54`, `montreal27`, `aspen16`, `grid:RxC`, `line:N`, `all2all:N`.
pub fn preset(name: &str) -> Result<DeviceTopology> {
    let lower = name.trim().to_ascii_lowercase();
    let with_name = |json: &str| -> Result<DeviceTopology> {
        let mut t = DeviceTopology::from_json(json)?;
        t.name = lower.clone();
        Ok(t)
    };
    match lower.as_str() {
        "sycamore54" | "sycamore" => with_name(SYCAMORE54),
        "montreal27" | "montreal" => with_name(MONTREAL27),
        "aspen16" | "aspen" => with_name(ASPEN16),
        _ => {
            if let Some(spec) = lower.strip_prefix("grid:") {
                let (r, c) = spec.split_once('x').ok_or_else(|| Error::UnknownPreset(name.into()))?;
                make_grid(parse_dim(r, name)?, parse_dim(c, name)?)
            } else if let Some(spec) = lower.strip_prefix("line:") {
                make_line(parse_dim(spec, name)?)
            } else if let Some(spec) = lower.strip_prefix("all2all:") {
                make_complete(parse_dim(spec, name)?)
            } else {
                Err(Error::UnknownPreset(name.into()))
            }
        }
    }
}

/// Smallest near-square grid with at least `n` qubits: `floor(sqrt n)` rows.
pub fn auto_grid(n: usize) -> Result<DeviceTopology> {
    let rows = ((n as f64).sqrt().floor() as usize).max(1);
    make_grid(rows, n.div_ceil(rows))
}

/// A preset, or one of the bare names `grid`, `line`, `all2all` sized for `n` qubits.
pub fn topology_for(name: &str, n: usize) -> Result<DeviceTopology> {
    match name.trim().to_ascii_lowercase().as_str() {
        "grid" => auto_grid(n),
        "line" => make_line(n),
        "all2all" => make_complete(n),
        _ => preset(name),
    }
}
