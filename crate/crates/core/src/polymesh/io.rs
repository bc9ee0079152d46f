//! JSON mesh files.
//!
//! ```text
//! {
//!   "vertices": [[x, y], ...],
//!   "cells": [[v0, v1, ...], ...],
//!   "boundary_labels": [{"cell": c, "edge": j, "label": "left"}, ...]
//! }
//! ```
//!
//! Coordinates are written with 17 significant digits so that a write/read
//! cycle reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{BoundaryTag, PolyMesh};
use crate::error::{Result, VemError};
use crate::Point;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    #[serde(default)]
    boundary_labels: Vec<LabelEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelEntry {
    cell: usize,
    edge: usize,
    label: String,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn mesh_to_json(mesh: &PolyMesh) -> String {
    let mut s = String::from("{\n  \"vertices\": [");
    for (i, v) in mesh.vertices().iter().enumerate() {
        let sep = if i == 0 { "\n" } else { ",\n" };
        let _ = write!(s, "{sep}    [{}, {}]", num(v.x), num(v.y));
    }
    s.push_str("\n  ],\n  \"cells\": [");
    for (i, c) in mesh.cells().iter().enumerate() {
        let sep = if i == 0 { "\n" } else { ",\n" };
        let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = write!(s, "{sep}    [{}]", ids.join(", "));
    }
    s.push_str("\n  ],\n  \"boundary_labels\": [");
    for (i, t) in mesh.boundary_tags().iter().enumerate() {
        let sep = if i == 0 { "\n" } else { ",\n" };
        let label = serde_json::to_string(&t.label).expect("string serialization");
        let _ = write!(
            s,
            "{sep}    {{\"cell\": {}, \"edge\": {}, \"label\": {label}}}",
            t.cell, t.edge
        );
    }
    s.push_str("\n  ]\n}\n");
    s
}

pub fn mesh_from_json(text: &str) -> Result<PolyMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| VemError::MeshFormat {
        line: e.line(),
        reason: e.to_string(),
    })?;
    let vertices = file.vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
    let tags = file
        .boundary_labels
        .into_iter()
        .map(|l| BoundaryTag {
            cell: l.cell,
            edge: l.edge,
            label: l.label,
        })
        .collect();
    PolyMesh::new(vertices, file.cells, tags)
}

pub fn write_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_json(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    mesh_from_json(&std::fs::read_to_string(path)?)
}
