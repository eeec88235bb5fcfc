use std::collections::HashMap;

use thiserror::Error;

use super::{cross, Point};

/// Largest coordinate magnitude accepted by [`delaunay`]. Keeps every
/// in-circle determinant inside `i128`.
pub const MAX_COORDINATE: i32 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DelaunayError {
    #[error("need at least three points, got {0}")]
    FewerThanThreePoints(usize),
    #[error("all {0} points are collinear")]
    AllCollinear(usize),
    #[error("duplicate point {0}")]
    DuplicatePoint(Point),
    #[error("coordinate of {0} exceeds the supported range")]
    CoordinateOutOfRange(Point),
}

/// Edge shared by two faces, with the indices of those faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InternalEdge {
    pub edge: (usize, usize),
    pub faces: [usize; 2],
}

/// Delaunay triangulation over an indexed point list.
///
/// `edges` hold `(i, j)` with `i < j`. Every face lists its vertices
/// clockwise on screen, starting from its smallest index. All lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    pub points: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    pub faces: Vec<[usize; 3]>,
    pub internal_edges: Vec<InternalEdge>,
}

impl Triangulation {
    pub fn face_points(&self, f: usize) -> [Point; 3] {
        self.faces[f].map(|i| self.points[i])
    }
}

/// Triangulates `points` (pairwise distinct, not all collinear).
///
/// Points are swept in lexicographic order; each new point is joined to the
/// hull edges it sees and Lawson flips restore the empty-circumcircle
/// property. Cocircular ties are settled by lifting each point by an
/// infinitesimal that decreases with its lexicographic rank, so the output
/// depends only on the point set, never on the input order.
pub fn delaunay(points: &[Point]) -> Result<Triangulation, DelaunayError> {
    let n = points.len();
    if n < 3 {
        return Err(DelaunayError::FewerThanThreePoints(n));
    }
    if let Some(p) = points
        .iter()
        .find(|p| p.x.abs() > MAX_COORDINATE || p.y.abs() > MAX_COORDINATE)
    {
        return Err(DelaunayError::CoordinateOutOfRange(*p));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| points[i]);
    if let Some(w) = order.windows(2).find(|w| points[w[0]] == points[w[1]]) {
        return Err(DelaunayError::DuplicatePoint(points[w[0]]));
    }
    let sorted: Vec<Point> = order.iter().map(|&i| points[i]).collect();

    let mut mesh = Mesh::new(&sorted);
    mesh.bootstrap()?;
    for r in mesh.next..n {
        mesh.insert(r);
    }

    // Back to caller indices.
    let mut faces: Vec<[usize; 3]> = mesh
        .tris
        .iter()
        .map(|t| canonical_face(t.map(|r| order[r])))
        .collect();
    faces.sort_unstable();

    let mut owner: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            owner.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let mut edges: Vec<(usize, usize)> = owner.keys().copied().collect();
    edges.sort_unstable();
    let internal_edges = edges
        .iter()
        .filter_map(|e| match owner[e].as_slice() {
            [f0, f1] => Some(InternalEdge { edge: *e, faces: [*f0, *f1] }),
            _ => None,
        })
        .collect();

    Ok(Triangulation { points: points.to_vec(), edges, faces, internal_edges })
}

fn canonical_face(f: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| f[k]).unwrap();
    [f[k], f[(k + 1) % 3], f[(k + 2) % 3]]
}

/// Working state over points in lexicographic order; an index is its rank.
struct Mesh<'a> {
    pts: &'a [Point],
    tris: Vec<[usize; 3]>,
    // Directed edge -> triangle holding it in its (clockwise) vertex order.
    half: HashMap<(usize, usize), usize>,
    // Convex hull, oriented so the interior lies on the positive side of
    // every edge (h[i], h[i + 1]).
    hull: Vec<usize>,
    next: usize,
    stack: Vec<(usize, usize)>,
}

impl<'a> Mesh<'a> {
    fn new(pts: &'a [Point]) -> Self {
        Self {
            pts,
            tris: Vec::with_capacity(2 * pts.len()),
            half: HashMap::with_capacity(6 * pts.len()),
            hull: Vec::new(),
            next: 0,
            stack: Vec::new(),
        }
    }

    fn orient(&self, a: usize, b: usize, c: usize) -> i128 {
        cross(self.pts[a], self.pts[b], self.pts[c])
    }

    fn add_tri(&mut self, t: [usize; 3]) -> usize {
        debug_assert!(self.orient(t[0], t[1], t[2]) > 0);
        let id = self.tris.len();
        self.tris.push(t);
        for k in 0..3 {
            self.half.insert((t[k], t[(k + 1) % 3]), id);
            self.stack.push((t[k], t[(k + 1) % 3]));
        }
        id
    }

    fn bootstrap(&mut self) -> Result<(), DelaunayError> {
        let n = self.pts.len();
        let mut k = 2;
        while k < n && self.orient(0, 1, k) == 0 {
            k += 1;
        }
        if k == n {
            return Err(DelaunayError::AllCollinear(n));
        }
        // 0..k is a collinear chain in sweep order; fan it to point k.
        let positive = self.orient(0, 1, k) > 0;
        for j in 0..k - 1 {
            if positive {
                self.add_tri([j, j + 1, k]);
            } else {
                self.add_tri([j + 1, j, k]);
            }
        }
        self.hull = if positive {
            (0..=k).collect()
        } else {
            (0..k).rev().chain(std::iter::once(k)).collect()
        };
        self.next = k + 1;
        self.legalize();
        Ok(())
    }

    fn insert(&mut self, p: usize) {
        let h = self.hull.len();
        let visible: Vec<bool> = (0..h)
            .map(|i| self.orient(self.hull[i], self.hull[(i + 1) % h], p) < 0)
            .collect();
        // First visible edge whose predecessor is hidden; the visible edges
        // form one contiguous run around the hull.
        let start = (0..h)
            .find(|&i| visible[i] && !visible[(i + h - 1) % h])
            .expect("a point outside the hull sees at least one hull edge");
        let mut end = start;
        while visible[(end + 1) % h] {
            end = (end + 1) % h;
        }
        let mut i = start;
        loop {
            let (a, b) = (self.hull[i], self.hull[(i + 1) % h]);
            self.add_tri([b, a, p]);
            if i == end {
                break;
            }
            i = (i + 1) % h;
        }
        // New hull: hull[end + 1] .. hull[start] going forward, then p.
        let mut hull = Vec::with_capacity(h + 1);
        let mut j = (end + 1) % h;
        loop {
            hull.push(self.hull[j]);
            if j == start {
                break;
            }
            j = (j + 1) % h;
        }
        hull.push(p);
        self.hull = hull;
        self.legalize();
    }

    fn legalize(&mut self) {
        while let Some((u, v)) = self.stack.pop() {
            let (Some(&t1), Some(&t2)) = (self.half.get(&(u, v)), self.half.get(&(v, u))) else {
                continue;
            };
            let c = third(self.tris[t1], u, v);
            let d = third(self.tris[t2], v, u);
            if !in_circle(self.pts, [u, v, c], d) {
                continue;
            }
            // Quad u, d, v, c is convex; swap diagonal uv for cd.
            self.half.remove(&(u, v));
            self.half.remove(&(v, u));
            let n1 = [u, d, c];
            let n2 = [d, v, c];
            debug_assert!(self.orient(u, d, c) > 0 && self.orient(d, v, c) > 0);
            self.tris[t1] = n1;
            self.tris[t2] = n2;
            for (t, tri) in [(t1, n1), (t2, n2)] {
                for k in 0..3 {
                    self.half.insert((tri[k], tri[(k + 1) % 3]), t);
                }
            }
            self.stack.extend([(u, d), (d, v), (v, c), (c, u)]);
        }
    }
}

fn third(t: [usize; 3], u: usize, v: usize) -> usize {
    for k in 0..3 {
        if t[k] == u && t[(k + 1) % 3] == v {
            return t[(k + 2) % 3];
        }
    }
    unreachable!("edge ({u}, {v}) not in triangle {t:?}")
}

/// Whether `d` lies inside the circumcircle of the positively oriented
/// triangle `t`, with point `i` lifted by `eps^(i + 1)`.
///
/// The exact determinant decides whenever it is nonzero. On a tie the
/// perturbation term
/// `e_a * cross(d, b, c) + e_b * cross(d, c, a) + e_c * cross(d, a, b) - e_d * cross(a, b, c)`
/// is signed by its lowest-rank point with a nonzero coefficient.
fn in_circle(pts: &[Point], t: [usize; 3], d: usize) -> bool {
    let det = in_circle_det(pts[t[0]], pts[t[1]], pts[t[2]], pts[d]);
    if det != 0 {
        return det > 0;
    }
    let [a, b, c] = t;
    let (pa, pb, pc, pd) = (pts[a], pts[b], pts[c], pts[d]);
    let mut terms = [
        (a, cross(pd, pb, pc)),
        (b, cross(pd, pc, pa)),
        (c, cross(pd, pa, pb)),
        (d, -cross(pa, pb, pc)),
    ];
    terms.sort_unstable_by_key(|&(rank, _)| rank);
    terms.iter().find(|(_, k)| *k != 0).is_some_and(|(_, k)| *k > 0)
}

/// Standard in-circle determinant; positive when `d` is strictly inside the
/// circumcircle of the positively oriented `a, b, c`.
pub(crate) fn in_circle_det(a: Point, b: Point, c: Point, d: Point) -> i128 {
    let row = |p: Point| {
        let u = i128::from(p.x) - i128::from(d.x);
        let v = i128::from(p.y) - i128::from(d.y);
        (u, v, u * u + v * v)
    };
    let (ax, ay, al) = row(a);
    let (bx, by, bl) = row(b);
    let (cx, cy, cl) = row(c);
    ax * (by * cl - bl * cy) - ay * (bx * cl - bl * cx) + al * (bx * cy - by * cx)
}
