//! Cut-cell mesh: background cells clipped against the geometry, face topology,
//! and the small-cell classification.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{
    polygon_area, project_onto_line, BackgroundMesh, EdgeLabel, Geometry, LabeledPolygon, Side,
    Vec2,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Internal,
    Boundary,
}

impl FaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaceKind::Internal => "internal",
            FaceKind::Boundary => "boundary",
        }
    }
}

/// A straight face. For internal faces `normal` points from `left` into `right`;
/// for boundary faces it is the outward normal of `left`.
#[derive(Debug, Clone, PartialEq)]
pub struct Face<T> {
    pub id: usize,
    pub kind: FaceKind,
    pub p: Vec2<T>,
    pub q: Vec2<T>,
    pub length: T,
    pub normal: Vec2<T>,
    pub left: usize,
    pub right: Option<usize>,
    /// Geometry constraint carrying this face, if it lies on a cut line.
    pub cut: Option<usize>,
}

impl<T: Real> Face<T> {
    pub fn is_boundary(&self) -> bool {
        self.kind == FaceKind::Boundary
    }

    pub fn midpoint(&self) -> Vec2<T> {
        self.p.lerp(self.q, T::half())
    }

    /// Orthogonal projection of `x` onto the line carrying this face.
    pub fn project(&self, x: Vec2<T>) -> Vec2<T> {
        project_onto_line(x, self.p, self.normal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutCell<T> {
    pub id: usize,
    /// Background cell index `(i, j)`.
    pub parent: (usize, usize),
    /// Center of the background cell; origin of the cell's scaled monomials.
    pub center: Vec2<T>,
    /// Counterclockwise, convex.
    pub polygon: Vec<Vec2<T>>,
    pub area: T,
    pub volume_fraction: T,
    /// Ordered face list; position in this list is the local face index.
    pub face_ids: Vec<usize>,
    pub uncut: bool,
}

#[derive(Debug, Clone)]
pub struct CutCellMesh<T> {
    pub background: BackgroundMesh<T>,
    pub geometry: Geometry<T>,
    pub cells: Vec<CutCell<T>>,
    pub faces: Vec<Face<T>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum GridSide {
    /// Vertical line `x = x0 + i·h` in row `j`.
    Vertical(usize, usize),
    /// Horizontal line `y = y0 + j·h` in column `i`.
    Horizontal(usize, usize),
}

/// Builds the cut-cell mesh of `box ∩ geometry`.
///
/// Background cells whose intersection has zero area are omitted. Cells are
/// numbered row by row (`j` outer, `i` inner), faces in order of discovery.
pub fn build_mesh<T: Real>(bg: BackgroundMesh<T>, geo: Geometry<T>) -> Result<CutCellMesh<T>> {
    bg.validate()?;
    let h = bg.h();
    let snap = T::tol(1e-12) * h;
    let min_len = T::tol(1e-10) * h;

    let mut cells: Vec<CutCell<T>> = Vec::new();
    let mut edge_labels: Vec<Vec<EdgeLabel>> = Vec::new();
    for j in 0..bg.ny {
        for i in 0..bg.nx {
            let mut poly = LabeledPolygon::from_square(bg.cell_square(i, j));
            for (k, hp) in geo.constraints.iter().enumerate() {
                poly = poly.clip(hp, k, snap);
                if poly.is_empty() {
                    break;
                }
            }
            if poly.is_empty() {
                continue;
            }
            let area = polygon_area(&poly.vertices);
            if !(area > T::zero()) {
                continue;
            }
            let uncut = poly.labels.iter().all(|l| matches!(l, EdgeLabel::Side(_)))
                && poly.vertices.len() == 4;
            cells.push(CutCell {
                id: cells.len(),
                parent: (i, j),
                center: bg.cell_center(i, j),
                polygon: poly.vertices,
                area,
                volume_fraction: area / (h * h),
                face_ids: Vec::new(),
                uncut,
            });
            edge_labels.push(poly.labels);
        }
    }
    if cells.is_empty() {
        return Err(Error::DegenerateGeometry);
    }

    let mut faces: Vec<Face<T>> = Vec::new();
    let mut shared: HashMap<GridSide, usize> = HashMap::new();
    for (cid, labels) in edge_labels.iter().enumerate() {
        let (i, j) = cells[cid].parent;
        let n = cells[cid].polygon.len();
        for (k, &label) in labels.iter().enumerate() {
            let p = cells[cid].polygon[k];
            let q = cells[cid].polygon[(k + 1) % n];
            let length = p.dist(q);
            if length < min_len {
                continue;
            }
            let boundary = |normal: Vec2<T>, cut: Option<usize>| Face {
                id: 0,
                kind: FaceKind::Boundary,
                p,
                q,
                length,
                normal,
                left: cid,
                right: None,
                cut,
            };
            let fid = faces.len();
            let face = match label {
                EdgeLabel::Cut(c) => {
                    // normal of the rounded segment, so that the cell boundary closes
                    let d = (q - p) * (T::one() / length);
                    let n = Vec2::new(d.y, -d.x);
                    let n = if n.dot(geo.constraints[c].outward_normal()) < T::zero() { -n } else { n };
                    boundary(n, Some(c))
                }
                EdgeLabel::Side(side) => {
                    let (normal, grid, on_box) = side_info::<T>(side, i, j, bg.nx, bg.ny);
                    if on_box {
                        boundary(normal, None)
                    } else if let Some(&existing) = shared.get(&grid) {
                        let f = &mut faces[existing];
                        if f.right.is_some() || f.left == cid {
                            return Err(Error::Topology(format!(
                                "grid side shared by more than two cells at face {existing}"
                            )));
                        }
                        f.right = Some(cid);
                        cells[cid].face_ids.push(existing);
                        continue;
                    } else {
                        shared.insert(grid, fid);
                        Face {
                            id: 0,
                            kind: FaceKind::Internal,
                            p,
                            q,
                            length,
                            normal,
                            left: cid,
                            right: None,
                            cut: None,
                        }
                    }
                }
            };
            faces.push(Face { id: fid, ..face });
            cells[cid].face_ids.push(fid);
        }
    }
    // An internal side whose neighbour contributed no edge bounds the domain.
    for f in faces.iter_mut() {
        if f.kind == FaceKind::Internal && f.right.is_none() {
            f.kind = FaceKind::Boundary;
        }
    }
    for c in &cells {
        if c.face_ids.len() < 3 {
            return Err(Error::Topology(format!("cell {} has fewer than 3 faces", c.id)));
        }
    }
    Ok(CutCellMesh { background: bg, geometry: geo, cells, faces })
}

fn side_info<T: Real>(
    side: Side,
    i: usize,
    j: usize,
    nx: usize,
    ny: usize,
) -> (Vec2<T>, GridSide, bool) {
    let (o, l) = (T::one(), T::zero());
    match side {
        Side::South => (Vec2::new(l, -o), GridSide::Horizontal(i, j), j == 0),
        Side::North => (Vec2::new(l, o), GridSide::Horizontal(i, j + 1), j + 1 == ny),
        Side::West => (Vec2::new(-o, l), GridSide::Vertical(i, j), i == 0),
        Side::East => (Vec2::new(o, l), GridSide::Vertical(i + 1, j), i + 1 == nx),
    }
}

impl<T: Real> CutCellMesh<T> {
    pub fn h(&self) -> T {
        self.background.h()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, id: usize) -> Result<&CutCell<T>> {
        self.cells.get(id).ok_or(Error::UnknownCell(id))
    }

    /// Unit normal of `face` pointing out of `cell`.
    pub fn outward_normal(&self, cell: usize, face: usize) -> Vec2<T> {
        let f = &self.faces[face];
        if f.left == cell {
            f.normal
        } else {
            -f.normal
        }
    }

    /// Cell on the other side of `face`, if any.
    pub fn neighbor(&self, cell: usize, face: usize) -> Option<usize> {
        let f = &self.faces[face];
        if f.left == cell {
            f.right
        } else {
            Some(f.left)
        }
    }

    pub fn total_area(&self) -> T {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn alpha_range(&self) -> (T, T) {
        self.cells.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), c| {
            (lo.min(c.volume_fraction), hi.max(c.volume_fraction))
        })
    }

    pub fn cell_at_parent(&self, i: usize, j: usize) -> Option<usize> {
        self.cells.iter().position(|c| c.parent == (i, j))
    }

    /// Plain-text dump: a `cell <id> <i> <j> <area>` line per cell followed by its
    /// `v <x> <y>` vertices and `f <face-id> <kind> <nx> <ny>` faces (global face normal).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            let _ = writeln!(
                s,
                "cell {} {} {} {:.16e}",
                c.id,
                c.parent.0,
                c.parent.1,
                c.area.to_f64_lossy()
            );
            for v in &c.polygon {
                let _ = writeln!(s, "v {:.16e} {:.16e}", v.x.to_f64_lossy(), v.y.to_f64_lossy());
            }
            for &fid in &c.face_ids {
                let f = &self.faces[fid];
                let _ = writeln!(
                    s,
                    "f {} {} {:.16e} {:.16e}",
                    fid,
                    f.kind.as_str(),
                    f.normal.x.to_f64_lossy(),
                    f.normal.y.to_f64_lossy()
                );
            }
        }
        s
    }
}

/// Cells receiving stabilization, selected by volume fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallCellSet<T> {
    pub cells: Vec<usize>,
    pub threshold: T,
}

impl<T: Real> SmallCellSet<T> {
    pub fn empty(threshold: T) -> Self {
        Self { cells: Vec::new(), threshold }
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Selects cells with `α_E < α0` and rejects face-adjacent pairs.
pub fn classify_small_cells<T: Real>(mesh: &CutCellMesh<T>, alpha0: T) -> Result<SmallCellSet<T>> {
    if !(alpha0 > T::zero() && alpha0 < T::one()) {
        return Err(Error::Config(format!("alpha0 must lie in (0, 1), got {alpha0}")));
    }
    let cells: Vec<usize> = mesh
        .cells
        .iter()
        .filter(|c| c.volume_fraction < alpha0)
        .map(|c| c.id)
        .collect();
    let set = SmallCellSet { cells, threshold: alpha0 };
    for f in &mesh.faces {
        if let Some(r) = f.right {
            if set.contains(f.left) && set.contains(r) {
                return Err(Error::AdjacentSmallCells { first: f.left, second: r, face: f.id });
            }
        }
    }
    Ok(set)
}

/// Inflow face of a stabilized advection cell together with the upstream neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inflow {
    pub cell: usize,
    pub face: usize,
    pub neighbor: usize,
}

/// Finds the unique inflow face (`β·n < 0`, outward `n`) of every stabilized cell.
pub fn advection_inflow<T: Real>(
    mesh: &CutCellMesh<T>,
    small: &SmallCellSet<T>,
    beta: Vec2<T>,
) -> Result<Vec<Inflow>> {
    let tol = T::tol(1e-8) * beta.norm();
    small
        .cells
        .iter()
        .map(|&cell| {
            let inflow: Vec<usize> = mesh.cells[cell]
                .face_ids
                .iter()
                .copied()
                .filter(|&f| beta.dot(mesh.outward_normal(cell, f)) < -tol)
                .collect();
            if inflow.len() != 1 {
                return Err(Error::InflowFaceCount { cell, count: inflow.len() });
            }
            let face = inflow[0];
            let neighbor = mesh
                .neighbor(cell, face)
                .ok_or(Error::InflowOnBoundary { cell, face })?;
            Ok(Inflow { cell, face, neighbor })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HalfPlane;
    use approx::assert_relative_eq;

    #[test]
    fn single_uncut_cell() {
        let mesh = build_mesh(BackgroundMesh::unit_square(1), Geometry::<f64>::unbounded()).unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.cells[0].volume_fraction, 1.0);
        assert_eq!(mesh.faces.len(), 4);
        assert!(mesh.faces.iter().all(|f| f.is_boundary()));
        assert!(mesh.cells[0].uncut);
    }

    #[test]
    fn corner_clipped_cell_is_a_pentagon() {
        let geo = Geometry::new(vec![HalfPlane::new(1.0, 1.0, 0.5).unwrap()]);
        let mesh = build_mesh(BackgroundMesh::unit_square(1), geo).unwrap();
        let c = &mesh.cells[0];
        assert_relative_eq!(c.volume_fraction, 0.875, epsilon = 1e-15);
        assert_eq!(c.face_ids.len(), 5);
        let cut: Vec<_> = mesh.faces.iter().filter(|f| f.cut.is_some()).collect();
        assert_eq!(cut.len(), 1);
        let s = 0.5f64.sqrt();
        assert_relative_eq!(cut[0].normal.x, -s, epsilon = 1e-15);
    }

    #[test]
    fn ramp_areas_partition_domain() {
        let mesh = build_mesh(BackgroundMesh::unit_square(4), Geometry::ramp(0.3, 0.2)).unwrap();
        // trapezoid below y = 0.3 + 0.2x has area 0.4
        assert_relative_eq!(mesh.total_area(), 0.6, epsilon = 1e-13);
    }

    #[test]
    fn internal_faces_point_left_to_right() {
        let mesh = build_mesh(BackgroundMesh::unit_square(4), Geometry::ramp(0.3, 0.2)).unwrap();
        for f in &mesh.faces {
            if let Some(r) = f.right {
                assert!(f.left < r);
                let d = mesh.cells[r].center - mesh.cells[f.left].center;
                assert!(d.dot(f.normal) > 0.0);
            }
        }
    }

    #[test]
    fn empty_domain_is_rejected() {
        let geo = Geometry::new(vec![HalfPlane::new(1.0, 0.0, 5.0).unwrap()]);
        assert_eq!(
            build_mesh(BackgroundMesh::unit_square(2), geo).unwrap_err(),
            Error::DegenerateGeometry
        );
    }

    #[test]
    fn cut_along_grid_line_leaves_no_slivers() {
        let geo = Geometry::new(vec![HalfPlane::new(1.0, 0.0, 0.5).unwrap()]);
        let mesh = build_mesh(BackgroundMesh::unit_square(4), geo).unwrap();
        assert_eq!(mesh.n_cells(), 8);
        assert!(mesh.cells.iter().all(|c| (c.volume_fraction - 1.0f64).abs() < 1e-14));
        let boundary = mesh.faces.iter().filter(|f| f.is_boundary()).count();
        assert_eq!(boundary, 12);
    }

    #[test]
    fn small_cell_selection() {
        let mesh = build_mesh(BackgroundMesh::unit_square(3), Geometry::<f64>::unbounded()).unwrap();
        assert!(classify_small_cells(&mesh, 0.4).unwrap().is_empty());
        assert!(classify_small_cells(&mesh, 1.0).is_err());

        let mut mesh = mesh;
        mesh.cells[4].volume_fraction = 0.01;
        assert_eq!(classify_small_cells(&mesh, 0.4).unwrap().cells, vec![4]);
        mesh.cells[5].volume_fraction = 0.2;
        assert!(matches!(
            classify_small_cells(&mesh, 0.4),
            Err(Error::AdjacentSmallCells { first: 4, second: 5, .. })
        ));
    }

    #[test]
    fn dump_format() {
        let mesh = build_mesh(BackgroundMesh::unit_square(1), Geometry::<f64>::unbounded()).unwrap();
        let text = mesh.dump();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 + 4);
        assert!(lines[0].starts_with("cell 0 0 0 1.0000000000000000e0"));
        assert!(lines[1].starts_with("v "));
        assert!(lines[5].starts_with("f 0 boundary"));
    }
}
