//! Text persistence for [`ForestModel`].
//!
//! ```text
//! eventsel-forest v1
//! n_trees<TAB>50
//! min_samples_leaf<TAB>1
//! max_depth<TAB>20|none
//! features_per_split<TAB>sqrt|<count>
//! seed<TAB>42
//! n_cols<TAB>1234
//! tree<TAB><node count>
//! S<TAB><column><TAB><threshold><TAB><right child index>
//! L<TAB><positive fraction>
//! end
//! ```
//!
//! Nodes are listed in preorder; a split's left child is the next node.

use std::io::{self, Write};

use super::{FeaturesPerSplit, ForestConfig, ForestError, ForestModel, Node, Tree};
use crate::textio::{err, expect_header, fmt_f64, next_line, parse, value, FormatError};

pub const FOREST_HEADER: &str = "eventsel-forest v1";

pub fn write_forest<W: Write>(m: &ForestModel, mut w: W) -> io::Result<()> {
    let c = &m.config;
    writeln!(w, "{FOREST_HEADER}")?;
    writeln!(w, "n_trees\t{}", c.n_trees)?;
    writeln!(w, "min_samples_leaf\t{}", c.min_samples_leaf)?;
    match c.max_depth {
        Some(d) => writeln!(w, "max_depth\t{d}")?,
        None => writeln!(w, "max_depth\tnone")?,
    }
    match c.features_per_split {
        FeaturesPerSplit::Sqrt => writeln!(w, "features_per_split\tsqrt")?,
        FeaturesPerSplit::Fixed(k) => writeln!(w, "features_per_split\t{k}")?,
    }
    writeln!(w, "seed\t{}", c.seed)?;
    writeln!(w, "n_cols\t{}", m.n_cols)?;
    for t in &m.trees {
        writeln!(w, "tree\t{}", t.nodes.len())?;
        for node in &t.nodes {
            match node {
                Node::Split {
                    column,
                    threshold,
                    right,
                } => writeln!(w, "S\t{column}\t{}\t{right}", fmt_f64(*threshold))?,
                Node::Leaf { value } => writeln!(w, "L\t{}", fmt_f64(*value))?,
            }
        }
    }
    writeln!(w, "end")
}

fn read_node(line: usize, text: &str, n_nodes: usize, at: usize) -> Result<Node, FormatError> {
    let f: Vec<&str> = text.split('\t').collect();
    match f.as_slice() {
        ["S", c, t, r] => {
            let right: u32 = parse(line, r)?;
            if (right as usize) <= at + 1 || right as usize >= n_nodes {
                return Err(err(line, format!("right child {right} out of range")));
            }
            Ok(Node::Split {
                column: parse(line, c)?,
                threshold: parse(line, t)?,
                right,
            })
        }
        ["L", v] => {
            let value: f64 = parse(line, v)?;
            if !(0.0..=1.0).contains(&value) {
                return Err(err(line, format!("leaf value {value} outside [0, 1]")));
            }
            Ok(Node::Leaf { value })
        }
        _ => Err(err(line, format!("expected a node, found `{text}`"))),
    }
}

pub fn read_forest<'a, I>(lines: &mut I) -> Result<ForestModel, ForestError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    expect_header(lines, FOREST_HEADER)?;
    let (n, t) = value(lines, "n_trees")?;
    let n_trees: usize = parse(n, t)?;
    let (n, t) = value(lines, "min_samples_leaf")?;
    let min_samples_leaf = parse(n, t)?;
    let (n, t) = value(lines, "max_depth")?;
    let max_depth = if t == "none" {
        None
    } else {
        Some(parse(n, t)?)
    };
    let (n, t) = value(lines, "features_per_split")?;
    let features_per_split = if t == "sqrt" {
        FeaturesPerSplit::Sqrt
    } else {
        FeaturesPerSplit::Fixed(parse(n, t)?)
    };
    let (n, t) = value(lines, "seed")?;
    let seed = parse(n, t)?;
    let (n, t) = value(lines, "n_cols")?;
    let n_cols: usize = parse(n, t)?;
    let config = ForestConfig {
        n_trees,
        min_samples_leaf,
        max_depth,
        features_per_split,
        seed,
    };
    config.validate()?;

    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let (n, t) = value(lines, "tree")?;
        let count: usize = parse(n, t)?;
        if count == 0 {
            return Err(err(n, "empty tree").into());
        }
        let mut nodes = Vec::with_capacity(count.min(1 << 24));
        for at in 0..count {
            let (m, t) = next_line(lines, "node")?;
            let node = read_node(m, t, count, at)?;
            if let Node::Split { column, .. } = node {
                if column as usize >= n_cols {
                    return Err(err(m, format!("column {column} out of range")).into());
                }
            }
            nodes.push(node);
        }
        trees.push(Tree { nodes });
    }
    let (n, t) = next_line(lines, "end")?;
    if t != "end" {
        return Err(err(n, format!("expected `end`, found `{t}`")).into());
    }
    Ok(ForestModel {
        config,
        n_cols,
        trees,
    })
}
