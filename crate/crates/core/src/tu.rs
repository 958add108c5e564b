//! TU benchmark text format.
//!
//! `<name>_A.txt` holds a 1-based global edge list `u, v`, `<name>_graph_indicator.txt`
//! the graph id of each node, `<name>_graph_labels.txt` one label per graph.
//! Optional `<name>_node_labels.txt` (one integer per node) and
//! `<name>_node_attributes.txt` (comma-separated reals per node) supply features;
//! without them nodes get degree features.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{adjacency_from_edges, degree_features, Dataset, Graph};

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Non-blank lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .collect())
}

fn read_optional(path: &Path) -> Result<Option<Vec<(usize, String)>>> {
    if path.exists() {
        read_lines(path).map(Some)
    } else {
        Ok(None)
    }
}

fn parse_int(path: &Path, line: usize, s: &str) -> Result<i64> {
    s.trim().parse::<i64>().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        line,
        reason: format!("expected an integer, found {s:?}"),
    })
}

fn parse_real(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        line,
        reason: format!("expected a real number, found {s:?}"),
    })
}

fn expect_count(path: &Path, found: usize, expected: usize, what: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: found.min(expected) + 1,
            reason: format!("expected {expected} {what} lines, found {found}"),
        });
    }
    Ok(())
}

/// Loads `<dir>/<name>_*.txt` into a [`Dataset`].
pub fn load_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let indicator_path = file_path(dir, name, "graph_indicator");
    let edges_path = file_path(dir, name, "A");
    let labels_path = file_path(dir, name, "graph_labels");

    let indicator_lines = read_lines(&indicator_path)?;
    let edge_lines = read_lines(&edges_path)?;
    let label_lines = read_lines(&labels_path)?;
    if indicator_lines.is_empty() {
        return Err(Error::Load {
            path: indicator_path,
            reason: "graph indicator file is empty".into(),
        });
    }

    let indicator = indicator_lines
        .iter()
        .map(|(line, s)| parse_int(&indicator_path, *line, s))
        .collect::<Result<Vec<_>>>()?;
    let total_nodes = indicator.len();

    // Graph ids in ascending order; nodes keep their file order inside each graph.
    let mut graph_rank: BTreeMap<i64, usize> = BTreeMap::new();
    for &gid in &indicator {
        graph_rank.entry(gid).or_insert(0);
    }
    for (rank, slot) in graph_rank.values_mut().enumerate() {
        *slot = rank;
    }
    let num_graphs = graph_rank.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_graphs];
    let mut node_graph = Vec::with_capacity(total_nodes);
    let mut node_local = Vec::with_capacity(total_nodes);
    for (node, gid) in indicator.iter().enumerate() {
        let g = graph_rank[gid];
        node_graph.push(g);
        node_local.push(members[g].len());
        members[g].push(node);
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (line, s) in &edge_lines {
        let mut parts = s.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format {
                path: edges_path.clone(),
                line: *line,
                reason: format!("expected \"u, v\", found {s:?}"),
            });
        };
        let u = parse_int(&edges_path, *line, a)?;
        let v = parse_int(&edges_path, *line, b)?;
        let in_range = |x: i64| x >= 1 && (x as usize) <= total_nodes;
        if !in_range(u) || !in_range(v) {
            return Err(Error::Format {
                path: edges_path.clone(),
                line: *line,
                reason: format!("edge endpoint outside node range 1..={total_nodes}"),
            });
        }
        let (u, v) = (u as usize - 1, v as usize - 1);
        if node_graph[u] != node_graph[v] {
            return Err(Error::Format {
                path: edges_path.clone(),
                line: *line,
                reason: format!("edge endpoint outside its graph's node range ({} and {})", u + 1, v + 1),
            });
        }
        edges[node_graph[u]].push((node_local[u], node_local[v]));
    }

    let raw_labels = label_lines
        .iter()
        .map(|(line, s)| parse_int(&labels_path, *line, s))
        .collect::<Result<Vec<_>>>()?;
    expect_count(&labels_path, raw_labels.len(), num_graphs, "graph label")?;
    let mut class_values = raw_labels.clone();
    class_values.sort_unstable();
    class_values.dedup();
    let class_index: BTreeMap<i64, usize> =
        class_values.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    // Per-node feature blocks: one-hot node labels, then raw attributes.
    let node_labels_path = file_path(dir, name, "node_labels");
    let node_labels = match read_optional(&node_labels_path)? {
        Some(lines) => {
            let vals = lines
                .iter()
                .map(|(line, s)| parse_int(&node_labels_path, *line, s))
                .collect::<Result<Vec<_>>>()?;
            expect_count(&node_labels_path, vals.len(), total_nodes, "node label")?;
            Some(vals)
        }
        None => None,
    };
    let attributes_path = file_path(dir, name, "node_attributes");
    let attributes = match read_optional(&attributes_path)? {
        Some(lines) => {
            let mut rows = Vec::with_capacity(lines.len());
            for (line, s) in &lines {
                let row = s
                    .split(',')
                    .map(|x| parse_real(&attributes_path, *line, x))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
                    if row.len() != first {
                        return Err(Error::Format {
                            path: attributes_path.clone(),
                            line: *line,
                            reason: format!("expected {first} attributes, found {}", row.len()),
                        });
                    }
                }
                rows.push(row);
            }
            expect_count(&attributes_path, rows.len(), total_nodes, "node attribute")?;
            Some(rows)
        }
        None => None,
    };
    let node_label_values = node_labels.as_ref().map(|vals| {
        let mut v = vals.clone();
        v.sort_unstable();
        v.dedup();
        v
    });
    let onehot_dim = node_label_values.as_ref().map_or(0, Vec::len);
    let attribute_dim = attributes.as_ref().map_or(0, |r| r[0].len());

    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, nodes) in members.iter().enumerate() {
        let n = nodes.len();
        let adjacency = adjacency_from_edges(n, &edges[g])?;
        let features = if onehot_dim + attribute_dim == 0 {
            let provisional = Graph::new(adjacency.clone(), Array2::zeros((n, 1)), None)?;
            degree_features(&provisional)
        } else {
            let mut f = Array2::zeros((n, onehot_dim + attribute_dim));
            for (local, &node) in nodes.iter().enumerate() {
                if let (Some(vals), Some(levels)) = (&node_labels, &node_label_values) {
                    let col = levels.binary_search(&vals[node]).expect("level present");
                    f[[local, col]] = 1.0;
                }
                if let Some(rows) = &attributes {
                    for (k, &x) in rows[node].iter().enumerate() {
                        f[[local, onehot_dim + k]] = x;
                    }
                }
            }
            f
        };
        let label = class_index[&raw_labels[g]];
        graphs.push(Graph::new(adjacency, features, Some(label))?);
    }

    let feature_dim = graphs[0].feature_dim();
    Ok(Dataset {
        name: name.to_string(),
        graphs,
        num_classes: class_values.len(),
        feature_dim,
        class_values,
        node_label_values,
        attribute_dim: if onehot_dim + attribute_dim == 0 { 0 } else { attribute_dim },
    })
}

/// Writes `ds` as TU text files under `dir`. Edges are emitted in both directions,
/// sorted by graph then endpoint. Feature columns after the one-hot node-label
/// block are written as node attributes, so derived degree features survive a
/// round trip verbatim.
pub fn write_tu_dataset(ds: &Dataset, dir: impl AsRef<Path>, name: &str) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let onehot_dim = ds.node_label_values.as_ref().map_or(0, Vec::len);

    let mut a = String::new();
    let mut indicator = String::new();
    let mut labels = String::new();
    let mut node_labels = String::new();
    let mut attributes = String::new();
    let mut offset = 0usize;
    for (gi, g) in ds.graphs.iter().enumerate() {
        let n = g.n();
        for u in 0..n {
            for v in 0..n {
                if g.adjacency()[[u, v]] != 0.0 {
                    writeln!(a, "{}, {}", offset + u + 1, offset + v + 1).unwrap();
                }
            }
            writeln!(indicator, "{}", gi + 1).unwrap();
            let row = g.features().row(u);
            if let Some(levels) = &ds.node_label_values {
                let col = (0..onehot_dim)
                    .find(|&c| row[c] != 0.0)
                    .ok_or_else(|| Error::contract("write_tu_dataset", "node without a one-hot label"))?;
                writeln!(node_labels, "{}", levels[col]).unwrap();
            }
            if g.feature_dim() > onehot_dim {
                let cells: Vec<String> = row.iter().skip(onehot_dim).map(|x| format!("{x}")).collect();
                writeln!(attributes, "{}", cells.join(", ")).unwrap();
            }
        }
        let label = g
            .label
            .ok_or_else(|| Error::contract("write_tu_dataset", format!("graph {gi} has no label")))?;
        writeln!(labels, "{}", ds.class_values[label]).unwrap();
        offset += n;
    }

    fs::write(file_path(dir, name, "A"), a)?;
    fs::write(file_path(dir, name, "graph_indicator"), indicator)?;
    fs::write(file_path(dir, name, "graph_labels"), labels)?;
    if ds.node_label_values.is_some() {
        fs::write(file_path(dir, name, "node_labels"), node_labels)?;
    }
    if !attributes.is_empty() {
        fs::write(file_path(dir, name, "node_attributes"), attributes)?;
    }
    Ok(())
}
