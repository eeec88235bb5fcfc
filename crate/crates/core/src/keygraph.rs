//! Keygraphs, keytuples and isomorphism enumeration.
//!
//! A keygraph is a small directed graph over keypoints with one of three
//! fixed structures. Each structure comes with a binary matrix `sigma`; an
//! ordering `(v1, ..., vk)` of a graph's vertices is a *keytuple* when
//! `sigma[i][j] == 1` exactly for the arcs `(vi, vj)`. Given one keytuple
//! `w` of a scene graph and all keytuples of a model graph, every
//! isomorphism model -> scene is `vi -> wi` for exactly one model keytuple,
//! which replaces the `k!` bijection search by `k` table entries.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{chebyshev, cross, is_simple_polygon, signed_area2, Point, Triangulation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeygraphError {
    #[error("structure mismatch: {0} vs {1}")]
    StructureMismatch(Structure, Structure),
    #[error("{structure} needs {expected} distinct vertices, got {got:?}")]
    BadVertices { structure: Structure, expected: usize, got: Vec<Point> },
    #[error("vertices {0} and {1} are closer than the minimum distance")]
    TooClose(Point, Point),
    #[error("arc {0} -> {1} exceeds the maximum distance")]
    TooFar(Point, Point),
    #[error("circuit {0:?} is not a simple clockwise polygon")]
    NotClockwise(Vec<Point>),
    #[error("unknown structure {0:?}; expected pair, tri or quad")]
    UnknownStructure(String),
}

/// One of the three fixed keygraph structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    /// Two vertices and the arc from the first to the second.
    Pair2,
    /// Directed 3-cycle.
    Circuit3,
    /// Directed 4-cycle.
    Circuit4,
}

const SIGMA_PAIR2: [[u8; 4]; 4] = [[0, 1, 0, 0], [0, 0, 0, 0], [0; 4], [0; 4]];
const SIGMA_CIRCUIT3: [[u8; 4]; 4] = [[0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0], [0; 4]];
const SIGMA_CIRCUIT4: [[u8; 4]; 4] = [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]];

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Pair2, Structure::Circuit3, Structure::Circuit4];

    /// Number of vertices.
    pub const fn k(self) -> usize {
        match self {
            Structure::Pair2 => 2,
            Structure::Circuit3 => 3,
            Structure::Circuit4 => 4,
        }
    }

    pub fn is_circuit(self) -> bool {
        !matches!(self, Structure::Pair2)
    }

    /// Number of arcs.
    pub fn arc_count(self) -> usize {
        match self {
            Structure::Pair2 => 1,
            s => s.k(),
        }
    }

    /// Structure matrix entry `sigma[i][j]` for `i, j < k`.
    #[inline]
    pub fn sigma(self, i: usize, j: usize) -> bool {
        let m = match self {
            Structure::Pair2 => &SIGMA_PAIR2,
            Structure::Circuit3 => &SIGMA_CIRCUIT3,
            Structure::Circuit4 => &SIGMA_CIRCUIT4,
        };
        m[i][j] == 1
    }

    /// The structure matrix as rows.
    pub fn sigma_matrix(self) -> Vec<Vec<u8>> {
        let k = self.k();
        (0..k).map(|i| (0..k).map(|j| u8::from(self.sigma(i, j))).collect()).collect()
    }

    /// Number of keytuples per graph.
    pub fn keytuple_count(self) -> usize {
        match self {
            Structure::Pair2 => 1,
            s => s.k(),
        }
    }

    /// Keygraph correspondences needed for one homography candidate,
    /// `ceil(4 / k)`.
    pub fn sample_size(self) -> usize {
        4usize.div_ceil(self.k())
    }

    pub fn name(self) -> &'static str {
        match self {
            Structure::Pair2 => "pair",
            Structure::Circuit3 => "tri",
            Structure::Circuit4 => "quad",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = KeygraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pair" | "pair2" => Ok(Structure::Pair2),
            "tri" | "circuit3" => Ok(Structure::Circuit3),
            "quad" | "circuit4" => Ok(Structure::Circuit4),
            _ => Err(KeygraphError::UnknownStructure(s.to_string())),
        }
    }
}

/// Directed graph over keypoints. The arcs are implied by `structure` over
/// the vertex order: `(vertices[i], vertices[j])` is an arc iff
/// `sigma[i][j] == 1`, so `vertices` is always a keytuple of the graph.
///
/// Circuits are stored in their canonical rotation, starting at the
/// lexicographically smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Keygraph {
    pub structure: Structure,
    pub vertices: Vec<Point>,
}

impl Keygraph {
    pub fn new(structure: Structure, vertices: Vec<Point>) -> Result<Self, KeygraphError> {
        let k = structure.k();
        let distinct = (0..vertices.len()).all(|i| !vertices[i + 1..].contains(&vertices[i]));
        if vertices.len() != k || !distinct {
            return Err(KeygraphError::BadVertices { structure, expected: k, got: vertices });
        }
        let mut g = Self { structure, vertices };
        g.canonicalize();
        Ok(g)
    }

    fn canonicalize(&mut self) {
        if self.structure.is_circuit() {
            let start = (0..self.vertices.len()).min_by_key(|&i| self.vertices[i]).unwrap();
            self.vertices.rotate_left(start);
        }
    }

    pub fn k(&self) -> usize {
        self.vertices.len()
    }

    /// Arcs as `(tail, head)` in keytuple position order: arc `i` leaves
    /// vertex `i`.
    pub fn arcs(&self) -> Vec<(Point, Point)> {
        self.arc_indices().into_iter().map(|(i, j)| (self.vertices[i], self.vertices[j])).collect()
    }

    /// Arcs as vertex index pairs.
    pub fn arc_indices(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter(|&(i, j)| self.structure.sigma(i, j))
            .collect()
    }

    pub fn has_arc(&self, a: Point, b: Point) -> bool {
        let (Some(i), Some(j)) = (self.position(a), self.position(b)) else {
            return false;
        };
        self.structure.sigma(i, j)
    }

    pub fn position(&self, p: Point) -> Option<usize> {
        self.vertices.iter().position(|&v| v == p)
    }

    /// Checks the geometric criteria: pairwise distance at least `min_dist`,
    /// arcs no longer than `max_dist` when given, circuits clockwise on
    /// screen and simple.
    pub fn validate(&self, min_dist: i64, max_dist: Option<i64>) -> Result<(), KeygraphError> {
        for (i, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[i + 1..] {
                if chebyshev(a, b) < min_dist {
                    return Err(KeygraphError::TooClose(a, b));
                }
            }
        }
        if let Some(max) = max_dist {
            if let Some((a, b)) = self.arcs().into_iter().find(|&(a, b)| chebyshev(a, b) > max) {
                return Err(KeygraphError::TooFar(a, b));
            }
        }
        if self.structure.is_circuit() && !is_clockwise_circuit(&self.vertices) {
            return Err(KeygraphError::NotClockwise(self.vertices.clone()));
        }
        Ok(())
    }
}

/// Simple polygon running clockwise on screen (positive signed area).
pub fn is_clockwise_circuit(poly: &[Point]) -> bool {
    match poly.len() {
        3 => cross(poly[0], poly[1], poly[2]) > 0,
        _ => signed_area2(poly) > 0 && is_simple_polygon(poly),
    }
}

/// Ordering of a graph's vertices consistent with its structure matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Keytuple {
    pub ordering: Vec<Point>,
    pub structure: Structure,
}

/// Whether `ordering` is a keytuple of `g`: `sigma[i][j] == 1` exactly when
/// `(ordering[i], ordering[j])` is an arc of `g`.
pub fn is_keytuple(g: &Keygraph, ordering: &[Point]) -> bool {
    let k = g.k();
    ordering.len() == k
        && (0..k).all(|i| {
            (0..k).all(|j| i == j || g.structure.sigma(i, j) == g.has_arc(ordering[i], ordering[j]))
        })
}

/// All keytuples of `g`: the single stored ordering for pairs, the `k`
/// cyclic rotations for circuits. Entry `r` is the ordering rotated left
/// by `r`.
pub fn keytuples_of(g: &Keygraph) -> Vec<Keytuple> {
    (0..g.structure.keytuple_count())
        .map(|r| {
            let mut ordering = g.vertices.clone();
            ordering.rotate_left(r);
            Keytuple { ordering, structure: g.structure }
        })
        .collect()
}

/// Vertex bijection model -> scene: `map[i]` is the scene vertex index
/// assigned to model vertex `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Isomorphism {
    pub map: Vec<usize>,
}

impl Isomorphism {
    /// The bijection sending model keytuple `r` (the canonical ordering
    /// rotated left by `r`) onto the scene's canonical keytuple.
    pub fn from_rotation(k: usize, rotation: usize) -> Self {
        let mut map = vec![0; k];
        for i in 0..k {
            map[(i + rotation) % k] = i;
        }
        Self { map }
    }

    /// Arc preservation in both directions.
    pub fn preserves_arcs(&self, gm: &Keygraph, gs: &Keygraph) -> bool {
        let k = gm.k();
        gs.k() == k
            && (0..k).all(|a| {
                (0..k).all(|b| a == b || gm.structure.sigma(a, b) == gs.structure.sigma(self.map[a], self.map[b]))
            })
    }

    /// Implied keypoint correspondences `(v, iota(v))`.
    pub fn pairs(&self, gm: &Keygraph, gs: &Keygraph) -> Vec<(Point, Point)> {
        gm.vertices.iter().zip(&self.map).map(|(&v, &j)| (v, gs.vertices[j])).collect()
    }
}

/// Every isomorphism from `gm` to `gs`, found through the keytuples of `gm`
/// and the canonical keytuple of `gs`. Entry `r` comes from model keytuple
/// `r`.
pub fn isomorphisms(gm: &Keygraph, gs: &Keygraph) -> Result<Vec<Isomorphism>, KeygraphError> {
    if gm.structure != gs.structure {
        return Err(KeygraphError::StructureMismatch(gm.structure, gs.structure));
    }
    let k = gm.k();
    Ok((0..gm.structure.keytuple_count()).map(|r| Isomorphism::from_rotation(k, r)).collect())
}

/// Selected model/scene graph pair with the bijection that relates them.
#[derive(Clone, Debug, PartialEq)]
pub struct KeygraphCorrespondence<T> {
    pub model_id: usize,
    pub scene_id: usize,
    /// Which model keytuple was aligned with the scene's canonical keytuple.
    pub rotation: usize,
    pub model: Keygraph,
    pub scene: Keygraph,
    pub iso: Isomorphism,
    /// Arc dissimilarities in scene arc order.
    pub arc_dissimilarities: Vec<T>,
    /// Vertex dissimilarities; empty when no vertex descriptor is plugged in.
    pub vertex_dissimilarities: Vec<T>,
}

impl<T: crate::Scalar> KeygraphCorrespondence<T> {
    /// The keypoint correspondences this graph correspondence implies.
    pub fn keypoint_pairs(&self) -> Vec<(Point, Point)> {
        self.iso.pairs(&self.model, &self.scene)
    }

    pub fn max_arc_dissimilarity(&self) -> T {
        self.arc_dissimilarities.iter().copied().fold(T::zero(), T::max)
    }
}

/// Limits for model keygraph enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationParams {
    pub min_dist: i64,
    pub max_dist: i64,
    /// Keep at most this many graphs, preferring graphs built from the
    /// strongest keypoints (earliest in the keypoint list).
    pub cap: Option<usize>,
}

impl Default for EnumerationParams {
    fn default() -> Self {
        Self { min_dist: 10, max_dist: 100, cap: None }
    }
}

/// Exhaustive model keygraph enumeration.
///
/// Pairs are emitted in both directions. Each clockwise circuit appears
/// once, in canonical rotation. Output is sorted by vertex sequence.
pub fn enumerate_model_keygraphs(
    pts: &[Point],
    structure: Structure,
    params: &EnumerationParams,
) -> Vec<Keygraph> {
    let n = pts.len();
    let (min, max) = (params.min_dist, params.max_dist);
    assert!(min <= max, "min_dist must not exceed max_dist");
    let mut near = vec![false; n * n];
    let mut far_enough = vec![false; n * n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = chebyshev(pts[i], pts[j]);
            far_enough[i * n + j] = d >= min;
            if d >= min && d <= max {
                near[i * n + j] = true;
                adj[i].push(j);
            }
        }
    }
    let mut out: Vec<(usize, Keygraph)> = Vec::new();
    let mk = |ids: &[usize]| Keygraph { structure, vertices: ids.iter().map(|&i| pts[i]).collect() };
    let rank = |ids: &[usize]| *ids.iter().max().unwrap();
    match structure {
        Structure::Pair2 => {
            for i in 0..n {
                for &j in &adj[i] {
                    out.push((rank(&[i, j]), mk(&[i, j])));
                }
            }
        }
        Structure::Circuit3 => {
            for a in 0..n {
                for &b in adj[a].iter().filter(|&&b| pts[b] > pts[a]) {
                    for &c in adj[b].iter().filter(|&&c| pts[c] > pts[a] && c != b) {
                        if near[c * n + a] && cross(pts[a], pts[b], pts[c]) > 0 {
                            out.push((rank(&[a, b, c]), mk(&[a, b, c])));
                        }
                    }
                }
            }
        }
        Structure::Circuit4 => {
            for a in 0..n {
                for &b in adj[a].iter().filter(|&&b| pts[b] > pts[a]) {
                    for &c in adj[b].iter().filter(|&&c| pts[c] > pts[a] && c != b && far_enough[c * n + a]) {
                        for &d in adj[c].iter().filter(|&&d| pts[d] > pts[a] && d != b && d != c) {
                            if near[d * n + a]
                                && far_enough[d * n + b]
                                && is_clockwise_circuit(&[pts[a], pts[b], pts[c], pts[d]])
                            {
                                out.push((rank(&[a, b, c, d]), mk(&[a, b, c, d])));
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some(cap) = params.cap {
        out.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        out.truncate(cap);
    }
    let mut graphs: Vec<Keygraph> = out.into_iter().map(|(_, g)| g).collect();
    graphs.sort_unstable();
    graphs
}

/// Scene keygraphs read off a Delaunay triangulation.
///
/// Pairs come from edges (both directions), 3-circuits from faces, and
/// 4-circuits from internal edges: the boundary of the two faces sharing
/// the edge, traversed clockwise. Only the minimum distance is enforced.
pub fn extract_scene_keygraphs(tri: &Triangulation, structure: Structure, min_dist: i64) -> Vec<Keygraph> {
    let p = &tri.points;
    let ok = |ids: &[usize]| {
        ids.iter()
            .enumerate()
            .all(|(x, &i)| ids[x + 1..].iter().all(|&j| chebyshev(p[i], p[j]) >= min_dist))
    };
    let mut graphs: Vec<Keygraph> = Vec::new();
    match structure {
        Structure::Pair2 => {
            for &(i, j) in &tri.edges {
                if ok(&[i, j]) {
                    graphs.push(Keygraph { structure, vertices: vec![p[i], p[j]] });
                    graphs.push(Keygraph { structure, vertices: vec![p[j], p[i]] });
                }
            }
        }
        Structure::Circuit3 => {
            for f in &tri.faces {
                if ok(f) {
                    graphs.push(Keygraph::new(structure, f.iter().map(|&i| p[i]).collect()).unwrap());
                }
            }
        }
        Structure::Circuit4 => {
            for ie in &tri.internal_edges {
                let f0 = tri.faces[ie.faces[0]];
                let f1 = tri.faces[ie.faces[1]];
                let (a, b) = ie.edge;
                let (u, v) = if directed_in(f0, a, b) { (a, b) } else { (b, a) };
                let c = f0.into_iter().find(|&x| x != u && x != v).unwrap();
                let d = f1.into_iter().find(|&x| x != u && x != v).unwrap();
                // Faces (u, v, c) and (v, u, d) share uv; walking the
                // remaining edges gives u -> d -> v -> c.
                let quad = [u, d, v, c];
                let poly: Vec<Point> = quad.iter().map(|&i| p[i]).collect();
                if ok(&quad) && is_clockwise_circuit(&poly) {
                    graphs.push(Keygraph::new(structure, poly).unwrap());
                }
            }
        }
    }
    graphs.sort_unstable();
    graphs
}

fn directed_in(f: [usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::delaunay;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: i32, y: i32) -> Point {
        Point::new(x, y)
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn sigma_matrices() {
        assert_eq!(Structure::Pair2.sigma_matrix(), vec![vec![0, 1], vec![0, 0]]);
        assert_eq!(Structure::Circuit3.sigma_matrix(), vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]);
        assert_eq!(
            Structure::Circuit4.sigma_matrix(),
            vec![vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1], vec![1, 0, 0, 0]]
        );
        assert_eq!(Structure::Pair2.sample_size(), 2);
        assert_eq!(Structure::Circuit3.sample_size(), 2);
        assert_eq!(Structure::Circuit4.sample_size(), 1);
    }

    #[test]
    fn triangle_keytuples() {
        let (a, b, c) = (pt(0, 0), pt(20, 0), pt(10, 15));
        let g = Keygraph::new(Structure::Circuit3, vec![a, b, c]).unwrap();
        let mut got: Vec<Vec<Point>> = keytuples_of(&g).into_iter().map(|t| t.ordering).collect();
        got.sort();
        let mut want = vec![vec![a, b, c], vec![c, a, b], vec![b, c, a]];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn pair_keytuple_is_unique() {
        let g = Keygraph::new(Structure::Pair2, vec![pt(5, 5), pt(0, 0)]).unwrap();
        assert_eq!(keytuples_of(&g), vec![Keytuple { ordering: vec![pt(5, 5), pt(0, 0)], structure: Structure::Pair2 }]);
    }

    #[test]
    fn keytuples_match_permutation_search() {
        for s in Structure::ALL {
            let verts: Vec<Point> = [pt(3, 9), pt(0, 0), pt(40, 2), pt(17, 33)][..s.k()].to_vec();
            let g = Keygraph::new(s, verts).unwrap();
            let mut brute: Vec<Vec<Point>> = permutations(s.k())
                .into_iter()
                .map(|perm| perm.iter().map(|&i| g.vertices[i]).collect::<Vec<_>>())
                .filter(|o| is_keytuple(&g, o))
                .collect();
            brute.sort();
            let mut fast: Vec<Vec<Point>> = keytuples_of(&g).into_iter().map(|t| t.ordering).collect();
            fast.sort();
            assert_eq!(fast, brute, "{s}");
            assert_eq!(fast.len(), s.keytuple_count());
        }
    }

    #[test]
    fn isomorphism_counts() {
        let gm = Keygraph::new(Structure::Circuit3, vec![pt(0, 0), pt(20, 0), pt(10, 15)]).unwrap();
        let gs = Keygraph::new(Structure::Circuit3, vec![pt(50, 50), pt(80, 52), pt(60, 70)]).unwrap();
        let isos = isomorphisms(&gm, &gs).unwrap();
        assert_eq!(isos.len(), 3);
        assert!(isos.iter().all(|i| i.preserves_arcs(&gm, &gs)));
        let pm = Keygraph::new(Structure::Pair2, vec![pt(0, 0), pt(20, 0)]).unwrap();
        let ps = Keygraph::new(Structure::Pair2, vec![pt(1, 0), pt(20, 9)]).unwrap();
        assert_eq!(isomorphisms(&pm, &ps).unwrap().len(), 1);
        assert!(matches!(isomorphisms(&gm, &pm), Err(KeygraphError::StructureMismatch(..))));
    }

    #[test]
    fn isomorphisms_equal_bijection_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in Structure::ALL {
            for _ in 0..100 {
                let rand_graph = |rng: &mut ChaCha8Rng| loop {
                    let v: Vec<Point> = (0..s.k()).map(|_| pt(rng.gen_range(0..50), rng.gen_range(0..50))).collect();
                    if let Ok(g) = Keygraph::new(s, v) {
                        return g;
                    }
                };
                let gm = rand_graph(&mut rng);
                let gs = rand_graph(&mut rng);
                let mut fast = isomorphisms(&gm, &gs).unwrap();
                fast.sort();
                let mut brute: Vec<Isomorphism> = permutations(s.k())
                    .into_iter()
                    .map(|map| Isomorphism { map })
                    .filter(|iso| {
                        gm.vertices.iter().all(|&a| {
                                gm.vertices.iter().all(|&b| {
                                    let ia = gs.vertices[iso.map[gm.position(a).unwrap()]];
                                    let ib = gs.vertices[iso.map[gm.position(b).unwrap()]];
                                    a == b || gm.has_arc(a, b) == gs.has_arc(ia, ib)
                                })
                            })
                    })
                    .collect();
                brute.sort();
                assert_eq!(fast, brute);
            }
        }
    }

    #[test]
    fn enumerate_single_triangle() {
        let pts = vec![pt(0, 0), pt(50, 0), pt(20, 40)];
        let gs = enumerate_model_keygraphs(&pts, Structure::Circuit3, &EnumerationParams::default());
        assert_eq!(gs.len(), 1);
        // Only one of the two cyclic orientations is clockwise.
        let cw: Vec<_> = [[0, 1, 2], [0, 2, 1]]
            .iter()
            .filter(|o| cross(pts[o[0]], pts[o[1]], pts[o[2]]) > 0)
            .collect();
        assert_eq!(cw.len(), 1);
        assert_eq!(gs[0].vertices, cw[0].iter().map(|&i| pts[i]).collect::<Vec<_>>());
    }

    #[test]
    fn enumerate_collinear_and_close() {
        let line: Vec<Point> = (0..6).map(|i| pt(i * 15, i * 15)).collect();
        assert!(enumerate_model_keygraphs(&line, Structure::Circuit3, &EnumerationParams::default()).is_empty());
        let pts = vec![pt(0, 0), pt(5, 3), pt(40, 0), pt(20, 40), pt(60, 30)];
        for s in Structure::ALL {
            for g in enumerate_model_keygraphs(&pts, s, &EnumerationParams::default()) {
                assert!(!(g.vertices.contains(&pts[0]) && g.vertices.contains(&pts[1])));
            }
        }
    }

    #[test]
    fn enumeration_is_exhaustive_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = EnumerationParams { min_dist: 10, max_dist: 60, cap: None };
        for _ in 0..5 {
            let set: std::collections::BTreeSet<Point> =
                (0..14).map(|_| pt(rng.gen_range(0..120), rng.gen_range(0..120))).collect();
            let pts: Vec<Point> = set.into_iter().collect();
            for s in Structure::ALL {
                let got = enumerate_model_keygraphs(&pts, s, &params);
                for g in &got {
                    g.validate(params.min_dist, Some(params.max_dist)).unwrap();
                }
                // Brute force over all ordered k-tuples.
                let mut brute = std::collections::BTreeSet::new();
                let n = pts.len();
                let idx: Vec<Vec<usize>> = match s.k() {
                    2 => (0..n).flat_map(|a| (0..n).map(move |b| vec![a, b])).collect(),
                    3 => (0..n).flat_map(|a| (0..n).flat_map(move |b| (0..n).map(move |c| vec![a, b, c]))).collect(),
                    _ => (0..n)
                        .flat_map(|a| (0..n).flat_map(move |b| (0..n).flat_map(move |c| (0..n).map(move |d| vec![a, b, c, d]))))
                        .collect(),
                };
                for t in idx {
                    let v: Vec<Point> = t.iter().map(|&i| pts[i]).collect();
                    if let Ok(g) = Keygraph::new(s, v) {
                        if g.validate(params.min_dist, Some(params.max_dist)).is_ok() {
                            brute.insert(g);
                        }
                    }
                }
                assert_eq!(got, brute.into_iter().collect::<Vec<_>>(), "{s}");
                let bound = match s {
                    Structure::Pair2 => n * (n - 1),
                    Structure::Circuit3 => n * (n - 1) * (n - 2) / 6 * 2,
                    Structure::Circuit4 => n * (n - 1) * (n - 2) * (n - 3) / 24 * 6,
                };
                assert!(got.len() <= bound);
            }
        }
    }

    #[test]
    fn cap_prefers_strong_keypoints() {
        let pts = vec![pt(0, 0), pt(50, 0), pt(20, 40), pt(70, 45)];
        let all = enumerate_model_keygraphs(&pts, Structure::Circuit3, &EnumerationParams::default());
        assert!(all.len() > 1);
        let capped = enumerate_model_keygraphs(&pts, Structure::Circuit3, &EnumerationParams { cap: Some(1), ..Default::default() });
        assert_eq!(capped.len(), 1);
        assert!(!capped[0].vertices.contains(&pts[3]));
    }

    #[test]
    fn scene_extraction_square_and_triangle() {
        let square = vec![pt(0, 0), pt(100, 0), pt(100, 100), pt(0, 100)];
        let tri = delaunay(&square).unwrap();
        let quads = extract_scene_keygraphs(&tri, Structure::Circuit4, 10);
        assert_eq!(quads.len(), 1);
        // Clockwise on screen from (0,0): right, down, left.
        assert_eq!(quads[0].vertices, vec![pt(0, 0), pt(100, 0), pt(100, 100), pt(0, 100)]);

        let three = delaunay(&[pt(0, 0), pt(40, 5), pt(10, 30)]).unwrap();
        assert_eq!(extract_scene_keygraphs(&three, Structure::Circuit3, 10).len(), 1);
        assert_eq!(extract_scene_keygraphs(&three, Structure::Pair2, 10).len(), 6);
        assert_eq!(extract_scene_keygraphs(&three, Structure::Pair2, 100).len(), 0);
    }

    #[test]
    fn scene_extraction_bounds_and_orientation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let set: std::collections::BTreeSet<Point> =
            (0..200).map(|_| pt(rng.gen_range(0..640), rng.gen_range(0..480))).collect();
        let pts: Vec<Point> = set.into_iter().collect();
        let n = pts.len();
        let tri = delaunay(&pts).unwrap();
        let pairs = extract_scene_keygraphs(&tri, Structure::Pair2, 1);
        assert!(pairs.len() / 2 <= 3 * n - 6);
        let tris = extract_scene_keygraphs(&tri, Structure::Circuit3, 1);
        assert!(tris.len() <= 2 * n);
        let quads = extract_scene_keygraphs(&tri, Structure::Circuit4, 1);
        assert_eq!(quads.len(), tri.internal_edges.len());
        for g in tris.iter().chain(&quads).chain(&pairs) {
            g.validate(1, None).unwrap();
        }
    }
}
