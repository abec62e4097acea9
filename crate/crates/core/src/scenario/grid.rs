//! Radial low-voltage grid: node, line and transformer tables.
//!
//! A grid lives in a directory holding `nodes.csv`, `lines.csv` and
//! `transformer.csv`; the column layout is described in `docs/grid-format.md`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::building::BuildingStock;
use super::ScenarioError;

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub id: String,
    pub nominal_voltage_v: f64,
    pub buildings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    pub length_m: f64,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    pub rated_current_a: f64,
    pub cable_type: String,
    pub cost_eur_per_km: f64,
    /// Feeder a reinforcement cable was added for; empty for original lines.
    pub origin: Option<String>,
}

impl Line {
    pub fn resistance_ohm(&self) -> f64 {
        self.r_ohm_per_km * self.length_m / 1000.0
    }

    pub fn reactance_ohm(&self) -> f64 {
        self.x_ohm_per_km * self.length_m / 1000.0
    }

    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.from_node == a && self.to_node == b) || (self.from_node == b && self.to_node == a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformerOption {
    pub rated_kva: f64,
    pub cost_eur: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformer {
    pub node_id: String,
    /// Rating of one unit.
    pub rated_kva: f64,
    pub units: u32,
    pub cost_eur: f64,
    pub slack_voltage_pu: f64,
    pub options: Vec<TransformerOption>,
}

impl Transformer {
    pub fn capacity_kva(&self) -> f64 {
        self.rated_kva * self.units as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    pub nodes: Vec<GridNode>,
    pub lines: Vec<Line>,
    pub transformer: Transformer,
}

/// Parent links of the tree rooted at the transformer.
#[derive(Debug, Clone)]
pub struct Tree {
    /// Node indices in breadth-first order, root first.
    pub order: Vec<usize>,
    /// Parent node and every line joining node and parent.
    pub parent: Vec<Option<(usize, Vec<usize>)>>,
    /// Cable distance from the transformer in metres.
    pub distance_m: Vec<f64>,
}

impl GridModel {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.node_index(&self.transformer.node_id).expect("validated transformer node")
    }

    pub fn line(&self, id: &str) -> Option<&Line> {
        self.lines.iter().find(|l| l.id == id)
    }

    /// Node carrying each building.
    pub fn building_nodes(&self) -> BTreeMap<&str, &str> {
        let mut map = BTreeMap::new();
        for n in &self.nodes {
            for b in &n.buildings {
                map.insert(b.as_str(), n.id.as_str());
            }
        }
        map
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn v(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
            ScenarioError::validation(field, message)
        }
        if self.nodes.is_empty() {
            return Err(v("nodes", "grid has no nodes"));
        }
        let mut ids = BTreeSet::new();
        let mut buildings = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(v("nodes.id", format!("duplicate node id {}", n.id)));
            }
            if !(n.nominal_voltage_v > 0.0) {
                return Err(ScenarioError::NonPositiveRating { id: n.id.clone() });
            }
            for b in &n.buildings {
                if !buildings.insert(b.as_str()) {
                    return Err(v("nodes.buildings", format!("building {b} attached to more than one node")));
                }
            }
        }
        let t = &self.transformer;
        if !ids.contains(t.node_id.as_str()) {
            return Err(v("transformer.node_id", format!("unknown node {}", t.node_id)));
        }
        if !(t.rated_kva > 0.0) || t.units == 0 || t.options.iter().any(|o| !(o.rated_kva > 0.0)) {
            return Err(ScenarioError::NonPositiveRating { id: "transformer".to_string() });
        }
        if !(t.slack_voltage_pu > 0.0) {
            return Err(v("transformer.slack_voltage_pu", "must be positive"));
        }
        let mut line_ids = BTreeSet::new();
        for l in &self.lines {
            if !line_ids.insert(l.id.as_str()) {
                return Err(v("lines.id", format!("duplicate line id {}", l.id)));
            }
            for node in [&l.from_node, &l.to_node] {
                if !ids.contains(node.as_str()) {
                    return Err(ScenarioError::DanglingNode { line: l.id.clone(), node: node.clone() });
                }
            }
            if l.from_node == l.to_node {
                return Err(ScenarioError::Cycle { line: l.id.clone() });
            }
            if !(l.rated_current_a > 0.0) {
                return Err(ScenarioError::NonPositiveRating { id: l.id.clone() });
            }
            if !(l.length_m > 0.0) || !(l.r_ohm_per_km >= 0.0) || !(l.x_ohm_per_km >= 0.0) {
                return Err(v(format!("lines[{}]", l.id), "length must be positive and impedance >= 0"));
            }
            if l.r_ohm_per_km == 0.0 && l.x_ohm_per_km == 0.0 {
                return Err(v(format!("lines[{}]", l.id), "zero impedance"));
            }
        }
        self.check_tree()?;
        Ok(())
    }

    /// Union-find over node pairs; parallel lines between the same two nodes are allowed.
    pub(crate) fn check_tree(&self) -> Result<(), ScenarioError> {
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut root: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(root: &mut [usize], mut i: usize) -> usize {
            while root[i] != i {
                root[i] = root[root[i]];
                i = root[i];
            }
            i
        }
        let mut pairs = BTreeSet::new();
        for l in &self.lines {
            let (a, b) = (index[l.from_node.as_str()], index[l.to_node.as_str()]);
            if !pairs.insert((a.min(b), a.max(b))) {
                continue;
            }
            let (ra, rb) = (find(&mut root, a), find(&mut root, b));
            if ra == rb {
                return Err(ScenarioError::Cycle { line: l.id.clone() });
            }
            root[ra] = rb;
        }
        let slack = find(&mut root, index[self.transformer.node_id.as_str()]);
        for (i, n) in self.nodes.iter().enumerate() {
            if find(&mut root, i) != slack {
                return Err(ScenarioError::Disconnected { node: n.id.clone() });
            }
        }
        Ok(())
    }

    /// Every building of the stock sits on exactly the node it names.
    pub fn validate_stock(&self, stock: &BuildingStock) -> Result<(), ScenarioError> {
        let map = self.building_nodes();
        for b in &stock.buildings {
            match map.get(b.id.as_str()) {
                Some(node) if *node == b.grid_node => {}
                Some(node) => {
                    return Err(ScenarioError::validation(
                        format!("buildings[{}].grid_node", b.id),
                        format!("grid attaches the building to {node}, not {}", b.grid_node),
                    ))
                }
                None => {
                    return Err(ScenarioError::validation(
                        format!("buildings[{}].grid_node", b.id),
                        format!("building is not attached to any grid node (expected {})", b.grid_node),
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn tree(&self) -> Tree {
        let n = self.nodes.len();
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut adjacent: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, l) in self.lines.iter().enumerate() {
            let (a, b) = (index[l.from_node.as_str()], index[l.to_node.as_str()]);
            adjacent[a].push((b, k));
            adjacent[b].push((a, k));
        }
        let root = self.slack_index();
        let mut parent: Vec<Option<(usize, Vec<usize>)>> = vec![None; n];
        let mut distance_m = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(w, k) in &adjacent[u] {
                if seen[w] {
                    if let Some((p, lines)) = &mut parent[w] {
                        if *p == u {
                            lines.push(k);
                        }
                    }
                    continue;
                }
                seen[w] = true;
                parent[w] = Some((u, vec![k]));
                distance_m[w] = distance_m[u] + self.lines[k].length_m;
                queue.push_back(w);
            }
        }
        Tree { order, parent, distance_m }
    }
}

impl Tree {
    /// Node indices from the root to `node`, inclusive.
    pub fn path(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some((p, _)) = &self.parent[cur] {
            path.push(*p);
            cur = *p;
        }
        path.reverse();
        path
    }

    /// First node below the root on the way to `node`; the root maps to itself.
    pub fn feeder_head(&self, node: usize) -> usize {
        let path = self.path(node);
        path.get(1).copied().unwrap_or(path[0])
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: String,
    nominal_voltage_v: f64,
    buildings: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformerRow {
    role: String,
    node_id: String,
    rated_kva: f64,
    units: u32,
    cost_eur: f64,
    slack_voltage_pu: Option<f64>,
}

fn grid_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ScenarioError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => ScenarioError::io(path, std::io::Error::other(e.to_string())),
        _ => ScenarioError::csv(path, &e),
    })?;
    reader.deserialize().map(|r| r.map_err(|e| ScenarioError::csv(path, &e))).collect()
}

/// Loads a grid from a directory (or any file inside it) and validates it.
pub fn load_grid(path: &Path) -> Result<GridModel, ScenarioError> {
    let dir = grid_dir(path);
    let nodes: Vec<NodeRow> = read_rows(&dir.join("nodes.csv"))?;
    let lines: Vec<Line> = read_rows(&dir.join("lines.csv"))?;
    let trafo_path = dir.join("transformer.csv");
    let trafo: Vec<TransformerRow> = read_rows(&trafo_path)?;

    let nodes = nodes
        .into_iter()
        .map(|r| GridNode {
            id: r.id,
            nominal_voltage_v: r.nominal_voltage_v,
            buildings: r.buildings.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        })
        .collect();

    let mut installed = trafo.iter().filter(|r| r.role == "installed");
    let main = match (installed.next(), installed.next()) {
        (Some(row), None) => row,
        _ => {
            return Err(ScenarioError::validation("transformer.role", "exactly one row with role 'installed' required"))
        }
    };
    if let Some(bad) = trafo.iter().find(|r| r.role != "installed" && r.role != "option") {
        return Err(ScenarioError::validation("transformer.role", format!("unknown role '{}'", bad.role)));
    }
    let mut options: Vec<TransformerOption> = trafo
        .iter()
        .filter(|r| r.role == "option")
        .map(|r| TransformerOption { rated_kva: r.rated_kva, cost_eur: r.cost_eur })
        .collect();
    options.sort_by(|a, b| a.rated_kva.total_cmp(&b.rated_kva));

    let grid = GridModel {
        nodes,
        lines,
        transformer: Transformer {
            node_id: main.node_id.clone(),
            rated_kva: main.rated_kva,
            units: main.units,
            cost_eur: main.cost_eur,
            slack_voltage_pu: main.slack_voltage_pu.unwrap_or(1.0),
            options,
        },
    };
    grid.validate()?;
    Ok(grid)
}

pub fn write_grid(grid: &GridModel, dir: &Path) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    fn write<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ScenarioError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| ScenarioError::csv(path, &e))?;
        for row in rows {
            w.serialize(row).map_err(|e| ScenarioError::csv(path, &e))?;
        }
        w.flush().map_err(|e| ScenarioError::io(path, e))
    }
    write(
        &dir.join("nodes.csv"),
        grid.nodes.iter().map(|n| NodeRow {
            id: n.id.clone(),
            nominal_voltage_v: n.nominal_voltage_v,
            buildings: n.buildings.join(";"),
        }),
    )?;
    write(&dir.join("lines.csv"), grid.lines.iter())?;
    let t = &grid.transformer;
    let main = TransformerRow {
        role: "installed".to_string(),
        node_id: t.node_id.clone(),
        rated_kva: t.rated_kva,
        units: t.units,
        cost_eur: t.cost_eur,
        slack_voltage_pu: Some(t.slack_voltage_pu),
    };
    let options = t.options.iter().map(|o| TransformerRow {
        role: "option".to_string(),
        node_id: t.node_id.clone(),
        rated_kva: o.rated_kva,
        units: 1,
        cost_eur: o.cost_eur,
        slack_voltage_pu: None,
    });
    write(&dir.join("transformer.csv"), std::iter::once(main).chain(options))
}

/// Parameters of a synthetic grid of identical radial feeders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeederLayout {
    pub feeders: usize,
    pub span_m: f64,
    /// Length of the first span out of the substation.
    pub head_span_m: f64,
    pub cable_type: String,
    pub r_ohm_per_km: f64,
    pub x_ohm_per_km: f64,
    pub rated_current_a: f64,
    pub cost_eur_per_km: f64,
    pub transformer_kva: f64,
    pub transformer_cost_eur: f64,
    pub transformer_options: Vec<TransformerOption>,
}

impl Default for FeederLayout {
    fn default() -> Self {
        Self {
            feeders: 4,
            span_m: 30.0,
            head_span_m: 60.0,
            cable_type: "NAYY 4x150".to_string(),
            r_ohm_per_km: 0.206,
            x_ohm_per_km: 0.08,
            rated_current_a: 275.0,
            cost_eur_per_km: 90_000.0,
            transformer_kva: 400.0,
            transformer_cost_eur: 17_000.0,
            transformer_options: vec![
                TransformerOption { rated_kva: 250.0, cost_eur: 13_000.0 },
                TransformerOption { rated_kva: 400.0, cost_eur: 17_000.0 },
                TransformerOption { rated_kva: 630.0, cost_eur: 22_000.0 },
            ],
        }
    }
}

/// One node per building, distributed over the feeders in contiguous runs.
pub fn radial_feeders(layout: &FeederLayout, building_ids: &[String]) -> GridModel {
    let feeders = layout.feeders.max(1);
    let n = building_ids.len();
    let mut nodes = vec![GridNode { id: "T".to_string(), nominal_voltage_v: 400.0, buildings: Vec::new() }];
    let mut lines = Vec::new();
    let per_feeder = n.div_ceil(feeders).max(1);
    for (i, b) in building_ids.iter().enumerate() {
        let id = format!("N{:03}", i + 1);
        let head = i % per_feeder == 0;
        let from = if head { "T".to_string() } else { format!("N{:03}", i) };
        lines.push(Line {
            id: format!("L{:03}", i + 1),
            from_node: from,
            to_node: id.clone(),
            length_m: if head { layout.head_span_m } else { layout.span_m },
            r_ohm_per_km: layout.r_ohm_per_km,
            x_ohm_per_km: layout.x_ohm_per_km,
            rated_current_a: layout.rated_current_a,
            cable_type: layout.cable_type.clone(),
            cost_eur_per_km: layout.cost_eur_per_km,
            origin: None,
        });
        nodes.push(GridNode { id, nominal_voltage_v: 400.0, buildings: vec![b.clone()] });
    }
    GridModel {
        nodes,
        lines,
        transformer: Transformer {
            node_id: "T".to_string(),
            rated_kva: layout.transformer_kva,
            units: 1,
            cost_eur: layout.transformer_cost_eur,
            slack_voltage_pu: 1.0,
            options: layout.transformer_options.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, nodes: &str, lines: &str, trafo: &str) {
        std::fs::write(dir.join("nodes.csv"), nodes).unwrap();
        std::fs::write(dir.join("lines.csv"), lines).unwrap();
        std::fs::write(dir.join("transformer.csv"), trafo).unwrap();
    }

    const NODES: &str = "id,nominal_voltage_v,buildings\nT,400,\nA,400,B1\nB,400,B2;B3\n";
    const TRAFO: &str = "role,node_id,rated_kva,units,cost_eur,slack_voltage_pu\n\
                         installed,T,400,1,17000,1.0\noption,T,630,1,22000,\noption,T,250,1,13000,\n";
    const HEADER: &str =
        "id,from_node,to_node,length_m,r_ohm_per_km,x_ohm_per_km,rated_current_a,cable_type,cost_eur_per_km,origin\n";

    #[test]
    fn three_node_feeder() {
        let dir = tempfile::tempdir().unwrap();
        let lines = format!("{HEADER}L1,T,A,100,0.2,0.08,270,NAYY,90000,\nL2,A,B,50,0.2,0.08,270,NAYY,90000,\n");
        write_files(dir.path(), NODES, &lines, TRAFO);
        let g = load_grid(dir.path()).unwrap();
        assert_eq!(g.lines.len(), 2);
        assert_eq!(g.nodes[2].buildings, vec!["B2", "B3"]);
        assert_eq!(g.transformer.options[0].rated_kva, 250.0);
        let tree = g.tree();
        assert_eq!(tree.order[0], g.slack_index());
        assert_eq!(tree.distance_m[2], 150.0);
        assert_eq!(tree.path(2), vec![0, 1, 2]);
    }

    #[test]
    fn loop_edge_is_a_cycle() {
        let dir = tempfile::tempdir().unwrap();
        let lines = format!(
            "{HEADER}L1,T,A,100,0.2,0.08,270,NAYY,90000,\nL2,A,B,50,0.2,0.08,270,NAYY,90000,\n\
             L3,B,T,80,0.2,0.08,270,NAYY,90000,\n"
        );
        write_files(dir.path(), NODES, &lines, TRAFO);
        assert!(matches!(load_grid(dir.path()), Err(ScenarioError::Cycle { line }) if line == "L3"));
    }

    #[test]
    fn parallel_lines_are_not_a_cycle() {
        let dir = tempfile::tempdir().unwrap();
        let lines = format!(
            "{HEADER}L1,T,A,100,0.2,0.08,270,NAYY,90000,\nL2,A,B,50,0.2,0.08,270,NAYY,90000,\n\
             P1,T,A,100,0.2,0.08,270,NAYY,90000,L1\n"
        );
        write_files(dir.path(), NODES, &lines, TRAFO);
        let g = load_grid(dir.path()).unwrap();
        assert_eq!(g.tree().parent[1].as_ref().unwrap().1.len(), 2);
        assert_eq!(g.line("P1").unwrap().origin.as_deref(), Some("L1"));
    }

    #[test]
    fn dangling_and_rating_errors() {
        let dir = tempfile::tempdir().unwrap();
        let lines = format!("{HEADER}L1,T,A,100,0.2,0.08,270,NAYY,90000,\nL2,A,X,50,0.2,0.08,270,NAYY,90000,\n");
        write_files(dir.path(), NODES, &lines, TRAFO);
        assert!(matches!(load_grid(dir.path()), Err(ScenarioError::DanglingNode { node, .. }) if node == "X"));
        let lines = format!("{HEADER}L1,T,A,100,0.2,0.08,0,NAYY,90000,\nL2,A,B,50,0.2,0.08,270,NAYY,90000,\n");
        write_files(dir.path(), NODES, &lines, TRAFO);
        assert!(matches!(load_grid(dir.path()), Err(ScenarioError::NonPositiveRating { .. })));
    }

    #[test]
    fn disconnected_node() {
        let dir = tempfile::tempdir().unwrap();
        let lines = format!("{HEADER}L1,T,A,100,0.2,0.08,270,NAYY,90000,\n");
        write_files(dir.path(), NODES, &lines, TRAFO);
        assert!(matches!(load_grid(dir.path()), Err(ScenarioError::Disconnected { node }) if node == "B"));
    }

    #[test]
    fn write_then_load_round_trips() {
        let ids: Vec<String> = (1..=10).map(|i| format!("B{i:03}")).collect();
        let g = radial_feeders(&FeederLayout { feeders: 3, ..Default::default() }, &ids);
        g.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_grid(&g, dir.path()).unwrap();
        let back = load_grid(&dir.path().join("lines.csv")).unwrap();
        let mut expected = g.clone();
        expected.transformer.options.sort_by(|a, b| a.rated_kva.total_cmp(&b.rated_kva));
        assert_eq!(back, expected);
    }

    #[test]
    fn feeders_are_contiguous_runs() {
        let ids: Vec<String> = (1..=8).map(|i| format!("B{i}")).collect();
        let g = radial_feeders(&FeederLayout { feeders: 2, ..Default::default() }, &ids);
        let heads: Vec<_> = g.lines.iter().filter(|l| l.from_node == "T").map(|l| l.to_node.as_str()).collect();
        assert_eq!(heads, ["N001", "N005"]);
        let tree = g.tree();
        let n8 = g.node_index("N008").unwrap();
        assert_eq!(tree.feeder_head(n8), g.node_index("N005").unwrap());
    }
}
