use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use crate::error::{GeolocError, Result};
use crate::state::StateLabel;

const DEFAULT_BORDERS: &str = include_str!("../../data/us_state_borders.csv");

/// Undirected state graph used by near-miss scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    nodes: BTreeSet<StateLabel>,
    edges: BTreeSet<(StateLabel, StateLabel)>,
}

impl AdjacencyGraph {
    /// All states, no edges.
    pub fn empty() -> Self {
        AdjacencyGraph {
            nodes: StateLabel::all().collect(),
            edges: BTreeSet::new(),
        }
    }

    /// Land borders of the contiguous states; AK and HI are isolated.
    pub fn us_borders() -> Self {
        Self::us_borders_with(false)
    }

    /// As [`us_borders`](Self::us_borders), optionally adding the two
    /// Four Corners diagonals (AZ-CO, NM-UT).
    pub fn us_borders_with(include_corners: bool) -> Self {
        let mut graph = Self::parse(DEFAULT_BORDERS.as_bytes(), include_corners)
            .expect("bundled border table is well formed");
        graph.nodes.extend(StateLabel::all());
        graph
    }

    /// Reads `a,b[,kind]` lines. A line with a single state adds an
    /// isolated node. Rows whose kind is `corner` are skipped unless
    /// `include_corners`. Blank lines, `#` comments and a `state_a` header
    /// are ignored.
    pub fn parse<R: BufRead>(input: R, include_corners: bool) -> Result<Self> {
        let mut graph = AdjacencyGraph {
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
        };
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| GeolocError::MalformedAdjacency {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields[0].eq_ignore_ascii_case("state_a") {
                continue;
            }
            let state = |s: &str| {
                StateLabel::parse(s).ok_or_else(|| GeolocError::MalformedAdjacency {
                    line: line_no,
                    message: format!("unknown state {s:?}"),
                })
            };
            match fields.as_slice() {
                [a] => {
                    graph.nodes.insert(state(a)?);
                }
                [a, b] | [a, b, _] => {
                    let (a, b) = (state(a)?, state(b)?);
                    if a == b {
                        return Err(GeolocError::MalformedAdjacency {
                            line: line_no,
                            message: format!("self-loop on {a}"),
                        });
                    }
                    graph.nodes.insert(a);
                    graph.nodes.insert(b);
                    let corner = fields.get(2).is_some_and(|k| k.eq_ignore_ascii_case("corner"));
                    if !corner || include_corners {
                        graph.edges.insert((a.min(b), a.max(b)));
                    }
                }
                _ => {
                    return Err(GeolocError::MalformedAdjacency {
                        line: line_no,
                        message: format!("expected 1 to 3 fields, got {}", fields.len()),
                    })
                }
            }
        }
        Ok(graph)
    }

    pub fn from_path(path: &Path, include_corners: bool) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| GeolocError::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), include_corners)
    }

    pub fn contains(&self, state: StateLabel) -> bool {
        self.nodes.contains(&state)
    }

    pub fn nodes(&self) -> impl Iterator<Item = StateLabel> + '_ {
        self.nodes.iter().copied()
    }

    /// Each edge once, smaller state first.
    pub fn edges(&self) -> impl Iterator<Item = (StateLabel, StateLabel)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacent(&self, a: StateLabel, b: StateLabel) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, state: StateLabel) -> Vec<StateLabel> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == state {
                    Some(b)
                } else if b == state {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, state: StateLabel) -> usize {
        self.neighbors(state).len()
    }
}

impl Default for AdjacencyGraph {
    fn default() -> Self {
        Self::us_borders()
    }
}
