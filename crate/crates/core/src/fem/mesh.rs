use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HotsError, Result};

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub const UNIT: Rect = Rect { min: [0.0, 0.0], max: [1.0, 1.0] };

    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(HotsError::Geometry(format!("degenerate rectangle {min:?}..{max:?}")));
        }
        Ok(Rect { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

/// Shape of a tagged subregion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Square { center: [f64; 2], side: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

impl Shape {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Shape::Square { center, side } => {
                (p[0] - center[0]).abs() <= 0.5 * side && (p[1] - center[1]).abs() <= 0.5 * side
            }
            Shape::Rect { min, max } => p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1],
            Shape::Circle { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Square { side, .. } => side * side,
            Shape::Rect { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            Shape::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Shape::Square { center, side } => {
                ([center[0] - 0.5 * side, center[1] - 0.5 * side], [center[0] + 0.5 * side, center[1] + 0.5 * side])
            }
            Shape::Rect { min, max } => (min, max),
            Shape::Circle { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
        }
    }

    fn validate(&self, domain: &Rect) -> Result<()> {
        let (lo, hi) = self.bounding_box();
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(HotsError::Geometry(format!("degenerate region {self:?}")));
        }
        let tol = 1e-12;
        if lo[0] < domain.min[0] - tol
            || lo[1] < domain.min[1] - tol
            || hi[0] > domain.max[0] + tol
            || hi[1] > domain.max[1] + tol
        {
            return Err(HotsError::Geometry(format!("region {self:?} leaves the domain")));
        }
        Ok(())
    }
}

/// A tagged subregion used to label triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub tag: String,
    #[serde(flatten)]
    pub shape: Shape,
}

/// Structured-grid metadata used for fast point location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: String,
}

/// Triangulation with per-triangle region tags and tagged boundary edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub region_tag: Vec<String>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub grid: Option<GridInfo>,
}

pub const SIDE_TAGS: [&str; 4] = ["bottom", "right", "top", "left"];
pub const DEFAULT_REGION: &str = "matrix";

impl TriMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p0, p1, p2] = self.vertices(t);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    pub fn shape_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.vertices(t);
        let two_a = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        [
            [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
            [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
            [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
        ]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Nodes lying on any boundary edge whose tag is in `tags`.
    pub fn boundary_nodes(&self, tags: &[&str]) -> Vec<usize> {
        let mut flags = vec![false; self.n_nodes()];
        for e in &self.boundary_edges {
            if tags.contains(&e.tag.as_str()) {
                flags[e.nodes[0]] = true;
                flags[e.nodes[1]] = true;
            }
        }
        flags.iter().enumerate().filter_map(|(i, &f)| f.then_some(i)).collect()
    }

    pub fn all_boundary_nodes(&self) -> Vec<usize> {
        self.boundary_nodes(&SIDE_TAGS)
    }

    /// Locate `p` and return the containing triangle with barycentric weights.
    /// Points outside the domain are clamped onto it.
    pub fn locate(&self, p: [f64; 2]) -> (usize, [f64; 3]) {
        match self.grid {
            Some(g) => {
                let q = [p[0].clamp(g.domain.min[0], g.domain.max[0]), p[1].clamp(g.domain.min[1], g.domain.max[1])];
                let sx = (q[0] - g.domain.min[0]) / g.domain.width() * g.nx as f64;
                let sy = (q[1] - g.domain.min[1]) / g.domain.height() * g.ny as f64;
                let i = (sx.floor() as usize).min(g.nx - 1);
                let j = (sy.floor() as usize).min(g.ny - 1);
                let first = 4 * (j * g.nx + i);
                self.best_of(first..first + 4, q)
            }
            None => self.best_of(0..self.n_triangles(), p),
        }
    }

    fn best_of(&self, range: std::ops::Range<usize>, p: [f64; 2]) -> (usize, [f64; 3]) {
        let mut best = (range.start, [0.0; 3], f64::NEG_INFINITY);
        for t in range {
            let w = self.barycentric(t, p);
            let worst = w[0].min(w[1]).min(w[2]);
            if worst > best.2 {
                best = (t, w, worst);
                if worst >= 0.0 {
                    break;
                }
            }
        }
        (best.0, best.1)
    }

    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [p0, p1, p2] = self.vertices(t);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((p[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p[1] - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (p[1] - p0[1]) - (p[0] - p0[0]) * (p1[1] - p0[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// P1 interpolation of a nodal scalar at `p`.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> f64 {
        let (t, w) = self.locate(p);
        let [a, b, c] = self.triangles[t];
        w[0] * values[a] + w[1] * values[b] + w[2] * values[c]
    }

    /// Retag triangles: each triangle takes the tag of the smallest region
    /// containing its centroid, or [`DEFAULT_REGION`] when none does.
    pub fn tag_regions(&mut self, regions: &[RegionSpec]) -> Result<()> {
        if let Some(g) = self.grid {
            for r in regions {
                r.shape.validate(&g.domain)?;
            }
        }
        for t in 0..self.n_triangles() {
            let c = self.centroid(t);
            let mut best: Option<(&RegionSpec, f64)> = None;
            for r in regions {
                if r.shape.contains(c) {
                    let a = r.shape.area();
                    if best.is_none_or(|(_, ba)| a <= ba) {
                        best = Some((r, a));
                    }
                }
            }
            self.region_tag[t] = best.map_or_else(|| DEFAULT_REGION.to_string(), |(r, _)| r.tag.clone());
        }
        Ok(())
    }

    /// Plain-text dump: node, triangle and boundary-edge sections.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.n_nodes());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.n_triangles());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {} {}", t[0], t[1], t[2], self.region_tag[i]);
        }
        let _ = writeln!(s, "edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.tag);
        }
        s
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Crossed structured triangulation of `domain`: each of the `nx * ny`
/// rectangles is split into four triangles around an added center node.
///
/// Nodes are numbered row by row (corner row, then center row) which keeps
/// the matrix bandwidth near `2 nx`.
pub fn build_rect_mesh(domain: Rect, nx: usize, ny: usize, regions: &[RegionSpec]) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(HotsError::Geometry(format!("mesh needs at least one cell, got {nx}x{ny}")));
    }
    Rect::new(domain.min, domain.max)?;
    let hx = domain.width() / nx as f64;
    let hy = domain.height() / ny as f64;
    let stride = 2 * nx + 1;
    let corner = |i: usize, j: usize| j * stride + i;
    let center = |i: usize, j: usize| j * stride + nx + 1 + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for j in 0..=ny {
        let y = domain.min[1] + j as f64 * hy;
        for i in 0..=nx {
            let x = if i == nx { domain.max[0] } else { domain.min[0] + i as f64 * hx };
            nodes.push([x, if j == ny { domain.max[1] } else { y }]);
        }
        if j < ny {
            for i in 0..nx {
                nodes.push([domain.min[0] + (i as f64 + 0.5) * hx, y + 0.5 * hy]);
            }
        }
    }

    let mut triangles = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d, e) =
                (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1), center(i, j));
            triangles.push([a, b, e]);
            triangles.push([b, c, e]);
            triangles.push([c, d, e]);
            triangles.push([d, a, e]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { nodes: [corner(i, 0), corner(i + 1, 0)], tag: "bottom".into() });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { nodes: [corner(nx, j), corner(nx, j + 1)], tag: "right".into() });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge { nodes: [corner(i + 1, ny), corner(i, ny)], tag: "top".into() });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge { nodes: [corner(0, j + 1), corner(0, j)], tag: "left".into() });
    }

    let n_tri = triangles.len();
    let mut mesh = TriMesh {
        nodes,
        triangles,
        region_tag: vec![DEFAULT_REGION.to_string(); n_tri],
        boundary_edges,
        grid: Some(GridInfo { domain, nx, ny }),
    };
    mesh.tag_regions(regions)?;
    Ok(mesh)
}
