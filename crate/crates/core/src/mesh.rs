//! Conforming simplicial meshes of the unit square and cube.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3, ZERO3, ZERO33};

/// A face shared by two cells. `plus_cell` always has the smaller index.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFace {
    pub plus_cell: usize,
    pub minus_cell: usize,
    /// Local face index in each cell (the index of the opposite vertex).
    pub plus_local: usize,
    pub minus_local: usize,
    /// Sorted global vertex ids of the face.
    pub vertex_ids: Vec<usize>,
    /// Unit normal pointing out of the plus cell into the minus cell.
    pub normal_plus: Vec3,
    /// Face diameter `h_F`.
    pub diameter: f64,
    /// Length (2D) or area (3D).
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub local: usize,
    pub vertex_ids: Vec<usize>,
    pub normal: Vec3,
    pub diameter: f64,
    pub measure: f64,
}

/// Affine map `x = origin + jacobian * xi` from the reference simplex.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: Vec3,
    pub jacobian: Mat3,
    pub inverse: Mat3,
    pub det: f64,
}

impl CellGeometry {
    pub fn map(&self, xi: &Vec3) -> Vec3 {
        let d = linalg::mat_vec(&self.jacobian, xi);
        [self.origin[0] + d[0], self.origin[1] + d[1], self.origin[2] + d[2]]
    }

    pub fn pullback(&self, x: &Vec3) -> Vec3 {
        linalg::mat_vec(&self.inverse, &linalg::sub(x, &self.origin))
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.det.abs() / if dim == 2 { 2.0 } else { 6.0 }
    }

    /// Gradient of barycentric coordinate `i` (constant on the cell).
    pub fn barycentric_gradient(&self, i: usize, dim: usize) -> Vec3 {
        let mut g = ZERO3;
        if i == 0 {
            for r in 0..dim {
                for (c, gc) in g.iter_mut().enumerate().take(dim) {
                    *gc -= self.inverse[r][c];
                }
            }
        } else {
            g[..dim].copy_from_slice(&self.inverse[i - 1][..dim]);
        }
        g
    }
}

#[derive(Debug)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec3>,
    cells: Vec<usize>,
    interior_faces: Vec<InteriorFace>,
    boundary_faces: Vec<BoundaryFace>,
    geometry: Vec<CellGeometry>,
    diameters: Vec<f64>,
    locator: OnceLock<Locator>,
}

impl SimplicialMesh {
    /// Builds a mesh from raw vertices and cells. Cells with negative signed
    /// volume are reoriented; degenerate cells are rejected.
    pub fn new(dim: usize, vertices: Vec<Vec3>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {dim}")));
        }
        let nv = dim + 1;
        let mut flat = Vec::with_capacity(cells.len() * nv);
        let mut geometry = Vec::with_capacity(cells.len());
        let mut diameters = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            if cell.len() != nv {
                return Err(Error::InvalidArgument(format!("cell {k} has {} vertices", cell.len())));
            }
            let mut c = cell.clone();
            for &v in &c {
                if v >= vertices.len() {
                    return Err(Error::OutOfRange { what: "vertex", index: v, len: vertices.len() });
                }
            }
            let mut g = compute_geometry(dim, &vertices, &c)
                .ok_or_else(|| Error::Topology(format!("cell {k} is degenerate")))?;
            if g.det < 0.0 {
                c.swap(dim - 1, dim);
                g = compute_geometry(dim, &vertices, &c).expect("reorientation keeps the cell nondegenerate");
            }
            let mut diam: f64 = 0.0;
            for a in 0..nv {
                for b in a + 1..nv {
                    diam = diam.max(linalg::norm(&linalg::sub(&vertices[c[a]], &vertices[c[b]])));
                }
            }
            flat.extend_from_slice(&c);
            geometry.push(g);
            diameters.push(diam);
        }
        let mut mesh = SimplicialMesh {
            dim,
            vertices,
            cells: flat,
            interior_faces: Vec::new(),
            boundary_faces: Vec::new(),
            geometry,
            diameters,
            locator: OnceLock::new(),
        };
        let (interior, boundary) = face_topology(&mesh)?;
        mesh.interior_faces = interior;
        mesh.boundary_faces = boundary;
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn num_cells(&self) -> usize {
        self.geometry.len()
    }

    pub fn cell(&self, k: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[k * nv..(k + 1) * nv]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.dim + 1)
    }

    pub fn geometry(&self, k: usize) -> &CellGeometry {
        &self.geometry[k]
    }

    pub fn cell_volume(&self, k: usize) -> f64 {
        self.geometry[k].volume(self.dim)
    }

    pub fn cell_diameter(&self, k: usize) -> f64 {
        self.diameters[k]
    }

    /// `h = max_K h_K`.
    pub fn h(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn centroid(&self, k: usize) -> Vec3 {
        let mut c = ZERO3;
        let nv = self.dim + 1;
        for &v in self.cell(k) {
            for (ci, xi) in c.iter_mut().zip(self.vertices[v].iter()) {
                *ci += xi / nv as f64;
            }
        }
        c
    }

    /// Copy of the mesh with `K+`/`K-` exchanged and `n+` negated on every
    /// interior face. All face forms must be invariant under this.
    pub fn with_swapped_face_orientation(&self) -> SimplicialMesh {
        let interior_faces = self
            .interior_faces
            .iter()
            .map(|f| InteriorFace {
                plus_cell: f.minus_cell,
                minus_cell: f.plus_cell,
                plus_local: f.minus_local,
                minus_local: f.plus_local,
                normal_plus: [-f.normal_plus[0], -f.normal_plus[1], -f.normal_plus[2]],
                ..f.clone()
            })
            .collect();
        SimplicialMesh {
            dim: self.dim,
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
            interior_faces,
            boundary_faces: self.boundary_faces.clone(),
            geometry: self.geometry.clone(),
            diameters: self.diameters.clone(),
            locator: OnceLock::new(),
        }
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior_faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    /// Finds a cell containing `x` and the reference coordinates of `x` in it.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, Vec3)> {
        let loc = self.locator.get_or_init(|| Locator::build(self));
        loc.locate(self, x)
    }

    /// Writes the mesh in a plain OFF-like text format: a header with vertex
    /// and cell counts, one coordinate line per vertex, then one index line
    /// per cell prefixed by its vertex count.
    pub fn write_off<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "OFF{}", self.dim)?;
        writeln!(out, "{} {}", self.vertices.len(), self.num_cells())?;
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|c| format!("{c:.17e}")).collect();
            writeln!(out, "{}", coords.join(" "))?;
        }
        for c in self.cells() {
            let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{} {}", c.len(), ids.join(" "))?;
        }
        Ok(())
    }

    pub fn read_off<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, m: &str| Error::Config { line, message: m.to_string() };
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty mesh file"))?;
        let header = header?;
        let dim: usize = header
            .trim()
            .strip_prefix("OFF")
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| bad(1, "expected OFF2 or OFF3 header"))?;
        let (ln, counts) = lines.next().ok_or_else(|| bad(2, "missing counts"))?;
        let counts: Vec<usize> = counts?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(ln + 1, "bad count")))
            .collect::<Result<_>>()?;
        if counts.len() != 2 {
            return Err(bad(ln + 1, "expected `V M`"));
        }
        let mut vertices = Vec::with_capacity(counts[0]);
        for _ in 0..counts[0] {
            let (ln, l) = lines.next().ok_or_else(|| bad(0, "truncated vertex list"))?;
            let vals: Vec<f64> = l?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln + 1, "bad coordinate")))
                .collect::<Result<_>>()?;
            if vals.len() != dim {
                return Err(bad(ln + 1, "wrong coordinate count"));
            }
            let mut p = ZERO3;
            p[..dim].copy_from_slice(&vals);
            vertices.push(p);
        }
        let mut cells = Vec::with_capacity(counts[1]);
        for _ in 0..counts[1] {
            let (ln, l) = lines.next().ok_or_else(|| bad(0, "truncated cell list"))?;
            let ids: Vec<usize> = l?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(ln + 1, "bad index")))
                .collect::<Result<_>>()?;
            if ids.is_empty() || ids[0] != dim + 1 || ids.len() != dim + 2 {
                return Err(bad(ln + 1, "wrong cell arity"));
            }
            cells.push(ids[1..].to_vec());
        }
        SimplicialMesh::new(dim, vertices, cells)
    }
}

fn compute_geometry(dim: usize, vertices: &[Vec3], cell: &[usize]) -> Option<CellGeometry> {
    let origin = vertices[cell[0]];
    let mut jac = ZERO33;
    for c in 0..dim {
        let e = linalg::sub(&vertices[cell[c + 1]], &origin);
        for r in 0..dim {
            jac[r][c] = e[r];
        }
    }
    let (inverse, det) = linalg::inverse(&jac, dim)?;
    Some(CellGeometry { origin, jacobian: jac, inverse, det })
}

/// Structured mesh of `(0,1)^dim` with `n` cells per axis.
///
/// In 2D every square is cut along its `(0,0)-(1,1)` diagonal; in 3D every
/// cube is split into the six Kuhn tetrahedra sharing its main diagonal.
pub fn build_structured_mesh(dim: usize, n: usize) -> Result<SimplicialMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("cells per axis must be at least 1".into()));
    }
    let step = 1.0 / n as f64;
    match dim {
        2 => {
            let id = |i: usize, j: usize| j * (n + 1) + i;
            let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push([i as f64 * step, j as f64 * step, 0.0]);
                }
            }
            let mut cells = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for i in 0..n {
                    let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                    cells.push(vec![v00, v10, v11]);
                    cells.push(vec![v00, v11, v01]);
                }
            }
            SimplicialMesh::new(2, vertices, cells)
        }
        3 => {
            let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
            let mut vertices = Vec::with_capacity((n + 1).pow(3));
            for k in 0..=n {
                for j in 0..=n {
                    for i in 0..=n {
                        vertices.push([i as f64 * step, j as f64 * step, k as f64 * step]);
                    }
                }
            }
            const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let mut cells = Vec::with_capacity(6 * n * n * n);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for p in PERMS {
                            let mut idx = [i, j, k];
                            let mut tet = vec![id(idx[0], idx[1], idx[2])];
                            for axis in p {
                                idx[axis] += 1;
                                tet.push(id(idx[0], idx[1], idx[2]));
                            }
                            cells.push(tet);
                        }
                    }
                }
            }
            SimplicialMesh::new(3, vertices, cells)
        }
        _ => Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {dim}"))),
    }
}

/// Matches cell faces into interior and boundary faces.
///
/// Faces are ordered by their sorted vertex ids. A face seen once must lie on
/// the boundary of the vertex bounding box; anything else (a hanging vertex,
/// a face shared by three cells) is reported as a topology error.
pub fn face_topology(mesh: &SimplicialMesh) -> Result<(Vec<InteriorFace>, Vec<BoundaryFace>)> {
    let dim = mesh.dim;
    let nv = dim + 1;
    let mut owners: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for k in 0..mesh.num_cells() {
        let cell = mesh.cell(k);
        for local in 0..nv {
            let mut key: Vec<usize> = (0..nv).filter(|&i| i != local).map(|i| cell[i]).collect();
            key.sort_unstable();
            owners.entry(key).or_default().push((k, local));
        }
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for d in 0..dim {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let tol = 1e-10 * (0..dim).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);

    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (key, cells) in owners {
        let (diameter, measure) = face_size(dim, &mesh.vertices, &key);
        match cells.as_slice() {
            [(k, local)] => {
                let on_hull = (0..dim).any(|d| {
                    key.iter().all(|&v| (mesh.vertices[v][d] - lo[d]).abs() <= tol)
                        || key.iter().all(|&v| (mesh.vertices[v][d] - hi[d]).abs() <= tol)
                });
                if !on_hull {
                    return Err(Error::Topology(format!(
                        "face {key:?} of cell {k} is unmatched but not on the boundary (hanging vertex?)"
                    )));
                }
                boundary.push(BoundaryFace {
                    cell: *k,
                    local: *local,
                    normal: outward_normal(mesh, *k, *local),
                    vertex_ids: key,
                    diameter,
                    measure,
                });
            }
            [(a, la), (b, lb)] => {
                let ((plus, pl), (minus, ml)) = if a < b { ((*a, *la), (*b, *lb)) } else { ((*b, *lb), (*a, *la)) };
                interior.push(InteriorFace {
                    plus_cell: plus,
                    minus_cell: minus,
                    plus_local: pl,
                    minus_local: ml,
                    normal_plus: outward_normal(mesh, plus, pl),
                    vertex_ids: key,
                    diameter,
                    measure,
                });
            }
            _ => {
                return Err(Error::Topology(format!("face {key:?} is shared by {} cells", cells.len())));
            }
        }
    }
    Ok((interior, boundary))
}

fn outward_normal(mesh: &SimplicialMesh, cell: usize, local: usize) -> Vec3 {
    let g = mesh.geometry[cell].barycentric_gradient(local, mesh.dim);
    let len = linalg::norm(&g);
    [-g[0] / len, -g[1] / len, -g[2] / len]
}

fn face_size(dim: usize, vertices: &[Vec3], ids: &[usize]) -> (f64, f64) {
    let mut diam: f64 = 0.0;
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            diam = diam.max(linalg::norm(&linalg::sub(&vertices[ids[a]], &vertices[ids[b]])));
        }
    }
    let measure = if dim == 2 {
        diam
    } else {
        let e1 = linalg::sub(&vertices[ids[1]], &vertices[ids[0]]);
        let e2 = linalg::sub(&vertices[ids[2]], &vertices[ids[0]]);
        0.5 * linalg::norm(&linalg::cross(&e1, &e2))
    };
    (diam, measure)
}

/// Uniform bucket grid over the bounding box for point location.
#[derive(Debug)]
struct Locator {
    lo: Vec3,
    width: Vec3,
    res: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn build(mesh: &SimplicialMesh) -> Self {
        let dim = mesh.dim;
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for d in 0..dim {
            lo[d] = mesh.vertices.iter().map(|v| v[d]).fold(f64::INFINITY, f64::min);
            hi[d] = mesh.vertices.iter().map(|v| v[d]).fold(f64::NEG_INFINITY, f64::max);
        }
        let res = ((mesh.num_cells() as f64).powf(1.0 / dim as f64).ceil() as usize).max(1);
        let mut width = [1.0; 3];
        for d in 0..dim {
            width[d] = (hi[d] - lo[d]).max(f64::MIN_POSITIVE) / res as f64;
        }
        let total = res.pow(dim as u32);
        let mut buckets = vec![Vec::new(); total];
        let mut loc = Locator { lo, width, res, buckets: Vec::new() };
        for k in 0..mesh.num_cells() {
            let mut bmin = [0usize; 3];
            let mut bmax = [0usize; 3];
            for d in 0..dim {
                let cmin = mesh.cell(k).iter().map(|&v| mesh.vertices[v][d]).fold(f64::INFINITY, f64::min);
                let cmax = mesh.cell(k).iter().map(|&v| mesh.vertices[v][d]).fold(f64::NEG_INFINITY, f64::max);
                bmin[d] = loc.bucket_coord(cmin - 1e-12, d);
                bmax[d] = loc.bucket_coord(cmax + 1e-12, d);
            }
            let zr = if dim == 3 { bmin[2]..=bmax[2] } else { 0..=0 };
            for bz in zr {
                for by in bmin[1]..=bmax[1] {
                    for bx in bmin[0]..=bmax[0] {
                        buckets[(bz * res + by) * res + bx].push(k);
                    }
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    fn bucket_coord(&self, x: f64, d: usize) -> usize {
        let b = ((x - self.lo[d]) / self.width[d]).floor();
        (b.max(0.0) as usize).min(self.res - 1)
    }

    fn locate(&self, mesh: &SimplicialMesh, x: &Vec3) -> Option<(usize, Vec3)> {
        let dim = mesh.dim;
        let mut b = [0usize; 3];
        for d in 0..dim {
            b[d] = self.bucket_coord(x[d], d);
        }
        let idx = (b[2] * self.res + b[1]) * self.res + b[0];
        let mut best: Option<(usize, Vec3, f64)> = None;
        for &k in &self.buckets[idx] {
            let xi = mesh.geometry[k].pullback(x);
            let l0 = 1.0 - xi[..dim].iter().sum::<f64>();
            let worst = xi[..dim].iter().cloned().fold(l0, f64::min);
            if worst >= -1e-12 {
                return Some((k, xi));
            }
            if best.as_ref().map(|b| worst > b.2).unwrap_or(true) {
                best = Some((k, xi, worst));
            }
        }
        best.filter(|b| b.2 >= -1e-9).map(|b| (b.0, b.1))
    }
}
