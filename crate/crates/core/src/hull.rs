//! Incremental 3D convex hull over point sets (voxel centers).

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct Face {
    pub vertices: [usize; 3],
    pub normal: P3, // unit outward normal
    pub offset: f64, // plane: dot(normal, p) = offset
}

#[derive(Debug, Clone)]
pub struct Hull {
    pub points: Vec<P3>,
    pub faces: Vec<Face>,
}

const EPS: f64 = 1e-9;

fn make_face(points: &[P3], a: usize, b: usize, c: usize, interior: P3) -> Face {
    let n = cross(sub(points[b], points[a]), sub(points[c], points[a]));
    let len = norm(n);
    let mut normal = [n[0] / len, n[1] / len, n[2] / len];
    let mut vertices = [a, b, c];
    if dot(normal, sub(interior, points[a])) > 0.0 {
        normal = [-normal[0], -normal[1], -normal[2]];
        vertices = [a, c, b];
    }
    Face { vertices, normal, offset: dot(normal, points[a]) }
}

/// Convex hull of a point set. Returns `None` when the set is degenerate
/// (fewer than 4 points in general position).
pub fn convex_hull(points: &[P3]) -> Option<Hull> {
    if points.len() < 4 {
        return None;
    }
    // Seed tetrahedron from extreme points.
    let p0 = (0..points.len())
        .min_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap())?;
    let p1 = (0..points.len())
        .max_by(|&a, &b| {
            norm(sub(points[a], points[p0]))
                .partial_cmp(&norm(sub(points[b], points[p0])))
                .unwrap()
        })?;
    if norm(sub(points[p1], points[p0])) < EPS {
        return None;
    }
    let dir = sub(points[p1], points[p0]);
    let line_dist = |i: usize| norm(cross(sub(points[i], points[p0]), dir)) / norm(dir);
    let p2 = (0..points.len()).max_by(|&a, &b| line_dist(a).partial_cmp(&line_dist(b)).unwrap())?;
    if line_dist(p2) < EPS {
        return None;
    }
    let n = cross(sub(points[p1], points[p0]), sub(points[p2], points[p0]));
    let plane_dist = |i: usize| dot(n, sub(points[i], points[p0])).abs() / norm(n);
    let p3 = (0..points.len()).max_by(|&a, &b| plane_dist(a).partial_cmp(&plane_dist(b)).unwrap())?;
    if plane_dist(p3) < EPS {
        return None;
    }

    let interior = [
        (points[p0][0] + points[p1][0] + points[p2][0] + points[p3][0]) / 4.0,
        (points[p0][1] + points[p1][1] + points[p2][1] + points[p3][1]) / 4.0,
        (points[p0][2] + points[p1][2] + points[p2][2] + points[p3][2]) / 4.0,
    ];
    let mut faces = vec![
        make_face(points, p0, p1, p2, interior),
        make_face(points, p0, p1, p3, interior),
        make_face(points, p0, p2, p3, interior),
        make_face(points, p1, p2, p3, interior),
    ];

    for i in 0..points.len() {
        if i == p0 || i == p1 || i == p2 || i == p3 {
            continue;
        }
        let p = points[i];
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| dot(faces[f].normal, p) - faces[f].offset > EPS)
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Horizon: directed edges of visible faces whose reverse is not visible.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &f in &visible {
            let [a, b, c] = faces[f].vertices;
            edges.push((a, b));
            edges.push((b, c));
            edges.push((c, a));
        }
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(a, b)| !edges.contains(&(b, a)))
            .copied()
            .collect();
        let mut keep: Vec<Face> = (0..faces.len())
            .filter(|f| !visible.contains(f))
            .map(|f| faces[f])
            .collect();
        for (a, b) in horizon {
            keep.push(make_face(points, a, b, i, interior));
        }
        faces = keep;
    }

    Some(Hull { points: points.to_vec(), faces })
}

impl Hull {
    /// Hull volume by signed tetrahedra against the origin.
    pub fn volume(&self) -> f64 {
        let mut v = 0.0;
        for f in &self.faces {
            let [a, b, c] = f.vertices;
            let (a, b, c) = (self.points[a], self.points[b], self.points[c]);
            v += dot(a, cross(b, c)) / 6.0;
        }
        v.abs()
    }

    /// Indices of all vertices referenced by hull faces.
    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.faces.iter().flat_map(|f| f.vertices).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn contains(&self, p: P3, tol: f64) -> bool {
        self.faces.iter().all(|f| dot(f.normal, p) - f.offset <= tol)
    }
}
