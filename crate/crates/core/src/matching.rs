//! Model store, keytuple join and correspondence selection.

use std::collections::HashMap;

use rustc_hash::FxHashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::descriptor::{
    arc_dissimilarity, describe_arc, gaussian_blur, squared_distance, ArcDescriptor, DescriptorError, DescriptorParams,
};
use crate::format::sig;
use crate::geometry::Point;
use crate::image::Image;
use crate::kdtree::KdTree;
use crate::keygraph::{enumerate_model_keygraphs, EnumerationParams, Isomorphism, Keygraph, KeygraphCorrespondence, Structure};
use crate::keypoint::{detect_corners, CornerParams, KeypointSet, KeypointSource};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("no model keygraph satisfies the geometric criteria")]
    EmptyModel,
    #[error("model store has structure {model}, scene graphs have {scene}")]
    StructureMismatch { model: Structure, scene: Structure },
    #[error("invalid selection parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error("model store line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Settings for building a model store.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModelParams {
    pub corners: CornerParams,
    pub enumeration: EnumerationParams,
    pub descriptor: DescriptorParams,
}

/// A model keytuple: graph `graph` read from vertex `rotation` onwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleRef {
    pub graph: usize,
    pub rotation: usize,
}

pub type Arc = (Point, Point);

/// Everything stored about a model: keypoints, keygraphs, the keytuple
/// table, arc descriptors and their index. Immutable once built.
#[derive(Clone, Debug)]
pub struct ModelStore<T> {
    structure: Structure,
    params: ModelParams,
    keypoints: KeypointSet,
    keygraphs: Vec<Keygraph>,
    arcs: Vec<Arc>,
    /// Keypoint ids of each arc's endpoints.
    arc_ends: Vec<[u32; 2]>,
    descriptors: Vec<ArcDescriptor<T>>,
    arc_ids: FxHashMap<Arc, usize>,
    /// T_m: every keytuple, mapped to its source graph.
    keytuples: FxHashMap<Vec<Point>, TupleRef>,
    /// Arc ids of every keytuple, indexed by `graph * keytuples + rotation`.
    tuple_arcs: Vec<[u32; 4]>,
    /// Keytuples grouped by the keypoint ids of their first three vertices
    /// (circuits only): a range into `prefix_tuples`.
    prefix3: FxHashMap<u64, (u32, u32)>,
    prefix_tuples: Vec<u32>,
    /// For each arc id, the keytuples holding it and the arc position.
    arc_to_tuples: Vec<Vec<(TupleRef, usize)>>,
    index: KdTree<T>,
}

const NO_ARC: u32 = u32::MAX;

fn prefix_key(a: u32, b: u32, c: u32) -> u64 {
    (u64::from(a) << 42) | (u64::from(b) << 21) | u64::from(c)
}

impl<T: Scalar> PartialEq for ModelStore<T> {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure
            && self.params == other.params
            && self.keypoints.points == other.keypoints.points
            && self.keygraphs == other.keygraphs
            && self.arcs == other.arcs
            && self.descriptors == other.descriptors
    }
}

/// The ordering of keytuple `rotation` of `g`.
pub fn keytuple_ordering(g: &Keygraph, rotation: usize) -> Vec<Point> {
    let k = g.k();
    (0..k).map(|i| g.vertices[(i + rotation) % k]).collect()
}

/// Arcs of a keytuple ordering, arc `i` leaving vertex `i`.
fn ordering_arcs(structure: Structure, o: &[Point]) -> Vec<Arc> {
    let k = o.len();
    (0..structure.arc_count()).map(|i| (o[i], o[(i + 1) % k])).collect()
}

impl<T: Scalar> ModelStore<T> {
    /// Assembles a store from already described graphs. Graphs with an
    /// arc lacking a valid descriptor are dropped.
    fn assemble(
        structure: Structure,
        params: ModelParams,
        keypoints: KeypointSet,
        graphs: Vec<Keygraph>,
        described: &HashMap<Arc, ArcDescriptor<T>>,
    ) -> Result<Self, MatchingError> {
        let keygraphs: Vec<Keygraph> = graphs
            .into_iter()
            .filter(|g| g.arcs().iter().all(|a| described.get(a).is_some_and(|d| d.valid)))
            .collect();
        if keygraphs.is_empty() {
            return Err(MatchingError::EmptyModel);
        }
        let mut arcs: Vec<Arc> = keygraphs.iter().flat_map(|g| g.arcs()).collect();
        arcs.sort_unstable();
        arcs.dedup();
        let descriptors: Vec<ArcDescriptor<T>> = arcs.iter().map(|a| described[a].clone()).collect();
        let arc_ids: FxHashMap<Arc, usize> = arcs.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let kp_ids: FxHashMap<Point, u32> = keypoints.points.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect();
        assert!(keypoints.len() < 1 << 21, "too many model keypoints");
        let arc_ends: Vec<[u32; 2]> = arcs.iter().map(|(a, b)| [kp_ids[a], kp_ids[b]]).collect();
        let kt = structure.keytuple_count();
        let mut keytuples = FxHashMap::default();
        let mut tuple_arcs = Vec::with_capacity(keygraphs.len() * kt);
        let mut prefixed: Vec<(u64, u32)> = Vec::new();
        let mut arc_to_tuples = vec![Vec::new(); arcs.len()];
        for (gi, g) in keygraphs.iter().enumerate() {
            for rotation in 0..kt {
                let t = TupleRef { graph: gi, rotation };
                let o = keytuple_ordering(g, rotation);
                let mut ids = [NO_ARC; 4];
                for (pos, a) in ordering_arcs(structure, &o).iter().enumerate() {
                    let id = arc_ids[a];
                    ids[pos] = id as u32;
                    arc_to_tuples[id].push((t, pos));
                }
                if structure.is_circuit() {
                    prefixed.push((prefix_key(kp_ids[&o[0]], kp_ids[&o[1]], kp_ids[&o[2]]), tuple_arcs.len() as u32));
                }
                tuple_arcs.push(ids);
                keytuples.insert(o, t);
            }
        }
        prefixed.sort_unstable();
        let mut prefix3 = FxHashMap::default();
        let mut start = 0;
        while start < prefixed.len() {
            let mut end = start + 1;
            while end < prefixed.len() && prefixed[end].0 == prefixed[start].0 {
                end += 1;
            }
            prefix3.insert(prefixed[start].0, (start as u32, (end - start) as u32));
            start = end;
        }
        let prefix_tuples: Vec<u32> = prefixed.into_iter().map(|(_, t)| t).collect();
        let coeffs: Vec<Vec<T>> = descriptors.iter().map(|d| d.coeffs.clone()).collect();
        let index = KdTree::build(params.descriptor.dims(), &coeffs);
        Ok(Self {
            structure,
            params,
            keypoints,
            keygraphs,
            arcs,
            arc_ends,
            descriptors,
            arc_ids,
            keytuples,
            tuple_arcs,
            prefix3,
            prefix_tuples,
            arc_to_tuples,
            index,
        })
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn keypoints(&self) -> &KeypointSet {
        &self.keypoints
    }

    pub fn keygraphs(&self) -> &[Keygraph] {
        &self.keygraphs
    }

    /// Directed model arcs, sorted; ids index [`Self::descriptors`].
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn descriptors(&self) -> &[ArcDescriptor<T>] {
        &self.descriptors
    }

    pub fn arc_id(&self, arc: Arc) -> Option<usize> {
        self.arc_ids.get(&arc).copied()
    }

    pub fn descriptor(&self, arc: Arc) -> Option<&ArcDescriptor<T>> {
        self.arc_id(arc).map(|i| &self.descriptors[i])
    }

    fn tuple_ref(&self, index: u32) -> TupleRef {
        let kt = self.structure.keytuple_count();
        TupleRef { graph: index as usize / kt, rotation: index as usize % kt }
    }

    pub fn keytuple_count(&self) -> usize {
        self.keytuples.len()
    }

    pub fn lookup_keytuple(&self, ordering: &[Point]) -> Option<TupleRef> {
        self.keytuples.get(ordering).copied()
    }

    pub fn tuples_with_arc(&self, arc_id: usize) -> &[(TupleRef, usize)] {
        &self.arc_to_tuples[arc_id]
    }

    /// Arc ids whose descriptor lies within `radius` of `query`.
    pub fn arcs_within(&self, query: &ArcDescriptor<T>, radius: T, approx_eps: Option<T>) -> Vec<usize> {
        match approx_eps {
            None => self.index.within_radius(&query.coeffs, radius),
            Some(eps) => self.index.within_radius_approx(&query.coeffs, radius, eps),
        }
    }

    /// Text serialization; see the README for the layout. Reals use the
    /// shortest representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        writeln!(s, "keygraph-model v1").unwrap();
        writeln!(s, "structure {}", self.structure).unwrap();
        writeln!(s, "min_dist {}", p.enumeration.min_dist).unwrap();
        writeln!(s, "max_dist {}", p.enumeration.max_dist).unwrap();
        match p.enumeration.cap {
            Some(c) => writeln!(s, "cap {c}").unwrap(),
            None => writeln!(s, "cap none").unwrap(),
        }
        writeln!(s, "corner_max_count {}", p.corners.max_count).unwrap();
        writeln!(s, "corner_quality {}", p.corners.quality).unwrap();
        writeln!(s, "blur_sigma {}", p.descriptor.blur_sigma).unwrap();
        writeln!(s, "profile_len {}", p.descriptor.profile_len).unwrap();
        writeln!(s, "coeffs {}", p.descriptor.coeffs).unwrap();
        writeln!(s, "keypoints {}", self.keypoints.len()).unwrap();
        for q in &self.keypoints.points {
            writeln!(s, "{} {}", q.x, q.y).unwrap();
        }
        let index_of: HashMap<Point, usize> = self.keypoints.points.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        writeln!(s, "keygraphs {}", self.keygraphs.len()).unwrap();
        for g in &self.keygraphs {
            let ids: Vec<String> = g.vertices.iter().map(|v| index_of[v].to_string()).collect();
            writeln!(s, "{}", ids.join(" ")).unwrap();
        }
        writeln!(s, "arcs {}", self.arcs.len()).unwrap();
        for ((a, b), d) in self.arcs.iter().zip(&self.descriptors) {
            write!(s, "{} {} {} {}", a.x, a.y, b.x, b.y).unwrap();
            for c in &d.coeffs {
                write!(s, " {c}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MatchingError> {
        let mut r = Reader { lines: text.lines().enumerate(), line: 0 };
        let header = r.next("header")?;
        if header != "keygraph-model v1" {
            return Err(r.error(format!("unsupported header {header:?}")));
        }
        let v = r.field("structure")?;
        let structure: Structure = v.parse().map_err(|_| r.error(format!("unknown structure {v:?}")))?;
        let min_dist = r.num_field("min_dist")?;
        let max_dist = r.num_field("max_dist")?;
        let v = r.field("cap")?;
        let cap = if v == "none" { None } else { Some(r.num(v)?) };
        let max_count = r.num_field("corner_max_count")?;
        let quality = r.num_field("corner_quality")?;
        let blur_sigma = r.num_field("blur_sigma")?;
        let profile_len = r.num_field("profile_len")?;
        let coeffs = r.num_field("coeffs")?;
        let params = ModelParams {
            corners: CornerParams { max_count, quality },
            enumeration: EnumerationParams { min_dist, max_dist, cap },
            descriptor: DescriptorParams { blur_sigma, profile_len, coeffs },
        };
        params.descriptor.validate()?;
        let count: usize = r.num_field("keypoints")?;
        let mut pts = Vec::with_capacity(count);
        for _ in 0..count {
            let f = r.fields("keypoint", 2)?;
            pts.push(Point::new(r.num(f[0])?, r.num(f[1])?));
        }
        let keypoints = KeypointSet::new(pts, KeypointSource::LoadedFromFile);
        if keypoints.len() != count {
            return Err(r.error("duplicate keypoints".into()));
        }
        let count: usize = r.num_field("keygraphs")?;
        let mut graphs = Vec::with_capacity(count);
        for _ in 0..count {
            let f = r.fields("keygraph", structure.k())?;
            let ids = f.iter().map(|t| r.num::<usize>(t)).collect::<Result<Vec<_>, _>>()?;
            if ids.iter().any(|&i| i >= keypoints.len()) {
                return Err(r.error("keypoint index out of range".into()));
            }
            let g = Keygraph::new(structure, ids.iter().map(|&i| keypoints.points[i]).collect())
                .map_err(|e| r.error(e.to_string()))?;
            graphs.push(g);
        }
        let count: usize = r.num_field("arcs")?;
        let dims = params.descriptor.dims();
        let mut described = HashMap::with_capacity(count);
        for _ in 0..count {
            let f = r.fields("arc", 4 + dims)?;
            let a = Point::new(r.num(f[0])?, r.num(f[1])?);
            let b = Point::new(r.num(f[2])?, r.num(f[3])?);
            let coeffs = f[4..].iter().map(|t| r.num::<T>(t)).collect::<Result<Vec<_>, _>>()?;
            described.insert((a, b), ArcDescriptor { coeffs, valid: true });
        }
        if let Some(g) = graphs.iter().find(|g| g.arcs().iter().any(|a| !described.contains_key(a))) {
            return Err(MatchingError::Parse { line: 0, message: format!("keygraph {:?} has an arc without descriptor", g.vertices) });
        }
        Self::assemble(structure, params, keypoints, graphs, &described)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MatchingError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MatchingError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, message: String) -> MatchingError {
        MatchingError::Parse { line: self.line, message }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, MatchingError> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.error(format!("unexpected end of file, expected {what}"))),
        }
    }

    fn field(&mut self, key: &str) -> Result<&'a str, MatchingError> {
        let l = self.next(key)?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.error(format!("expected \"{key} <value>\", got {l:?}"))),
        }
    }

    fn fields(&mut self, what: &str, n: usize) -> Result<Vec<&'a str>, MatchingError> {
        let l = self.next(what)?;
        let f: Vec<&str> = l.split(' ').collect();
        if f.len() != n {
            return Err(self.error(format!("expected {n} fields for {what}, got {}", f.len())));
        }
        Ok(f)
    }

    fn num<V: std::str::FromStr>(&self, v: &str) -> Result<V, MatchingError> {
        v.parse().map_err(|_| self.error(format!("invalid number {v:?}")))
    }

    fn num_field<V: std::str::FromStr>(&mut self, key: &str) -> Result<V, MatchingError> {
        let v = self.field(key)?;
        self.num(v)
    }
}

/// Detects corners on the model image and builds its store.
pub fn build_model_store<T: Scalar>(
    img: &Image<T>,
    structure: Structure,
    params: &ModelParams,
) -> Result<ModelStore<T>, MatchingError> {
    let keypoints = detect_corners(img, &params.corners);
    build_model_store_from_keypoints(img, keypoints, structure, params)
}

/// Builds a store from externally supplied model keypoints.
pub fn build_model_store_from_keypoints<T: Scalar>(
    img: &Image<T>,
    keypoints: KeypointSet,
    structure: Structure,
    params: &ModelParams,
) -> Result<ModelStore<T>, MatchingError> {
    params.descriptor.validate()?;
    if keypoints.bind(img).is_err() {
        return Err(MatchingError::InvalidParams("model keypoint outside the image".into()));
    }
    let graphs = enumerate_model_keygraphs(&keypoints.points, structure, &params.enumeration);
    if graphs.is_empty() {
        return Err(MatchingError::EmptyModel);
    }
    let blurred = gaussian_blur(img, params.descriptor.blur_sigma);
    let described = describe_graph_arcs(&blurred, &graphs, &params.descriptor)?;
    ModelStore::assemble(structure, *params, keypoints, graphs, &described)
}

/// Descriptors of scene arcs, keyed by directed arc.
pub type SceneDescriptors<T> = HashMap<Arc, ArcDescriptor<T>>;

/// Describes every arc of `graphs` once, on an already blurred image.
pub fn describe_graph_arcs<T: Scalar>(
    blurred: &Image<T>,
    graphs: &[Keygraph],
    params: &DescriptorParams,
) -> Result<SceneDescriptors<T>, DescriptorError> {
    let mut out = HashMap::new();
    for g in graphs {
        for a in g.arcs() {
            if let std::collections::hash_map::Entry::Vacant(e) = out.entry(a) {
                e.insert(describe_arc(blurred, a.0, a.1, params)?);
            }
        }
    }
    Ok(out)
}

/// Optional per-vertex dissimilarity, e.g. from a region descriptor.
pub trait VertexDissimilarity<T> {
    fn dissimilarity(&self, model: Point, scene: Point) -> T;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionParams<T> {
    /// Arcs farther apart than this reject a correspondence.
    pub threshold: T,
    /// Applied to vertex dissimilarities when a vertex hook is supplied.
    pub vertex_threshold: Option<T>,
    /// Opt-in approximate index search.
    pub approx_eps: Option<T>,
}

impl<T: Scalar> Default for SelectionParams<T> {
    fn default() -> Self {
        Self { threshold: T::lit(0.5), vertex_threshold: None, approx_eps: None }
    }
}

impl<T: Scalar> SelectionParams<T> {
    pub fn with_threshold(threshold: T) -> Self {
        Self { threshold, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), MatchingError> {
        if !(self.threshold > T::zero()) {
            return Err(MatchingError::InvalidParams(format!("threshold {} must be positive", self.threshold)));
        }
        if self.vertex_threshold.is_some_and(|v| !(v > T::zero())) {
            return Err(MatchingError::InvalidParams("vertex threshold must be positive".into()));
        }
        Ok(())
    }
}

/// The acceptance rule shared by the join and the naive oracle.
#[inline]
fn similar<T: Scalar>(a: &ArcDescriptor<T>, b: &ArcDescriptor<T>, threshold: T) -> bool {
    a.valid && b.valid && squared_distance(&a.coeffs, &b.coeffs) <= threshold * threshold
}

fn scene_arc_descriptors<'a, T: Scalar>(gs: &Keygraph, scene: &'a SceneDescriptors<T>) -> Option<Vec<&'a ArcDescriptor<T>>> {
    gs.arcs().iter().map(|a| scene.get(a).filter(|d| d.valid)).collect()
}

fn correspondence<T: Scalar>(
    store: &ModelStore<T>,
    t: TupleRef,
    scene_id: usize,
    gs: &Keygraph,
    sd: &[&ArcDescriptor<T>],
    params: &SelectionParams<T>,
    vertex: Option<&dyn VertexDissimilarity<T>>,
) -> Option<KeygraphCorrespondence<T>> {
    let gm = &store.keygraphs[t.graph];
    let arcs = &store.tuple_arcs[t.graph * store.structure.keytuple_count() + t.rotation];
    let arc_dissimilarities: Vec<T> = arcs[..store.structure.arc_count()]
        .iter()
        .zip(sd)
        .map(|(&a, d)| arc_dissimilarity(&store.descriptors[a as usize], d).expect("valid descriptors"))
        .collect();
    let iso = Isomorphism::from_rotation(gm.k(), t.rotation);
    let mut vertex_dissimilarities = Vec::new();
    if let Some(hook) = vertex {
        for (m, s) in iso.pairs(gm, gs) {
            let d = hook.dissimilarity(m, s);
            if params.vertex_threshold.is_some_and(|thr| d > thr) {
                return None;
            }
            vertex_dissimilarities.push(d);
        }
    }
    Some(KeygraphCorrespondence {
        model_id: t.graph,
        scene_id,
        rotation: t.rotation,
        model: gm.clone(),
        scene: gs.clone(),
        iso,
        arc_dissimilarities,
        vertex_dissimilarities,
    })
}

fn check_structure<T: Scalar>(store: &ModelStore<T>, scene_graphs: &[Keygraph]) -> Result<(), MatchingError> {
    match scene_graphs.iter().find(|g| g.structure != store.structure) {
        Some(g) => Err(MatchingError::StructureMismatch { model: store.structure, scene: g.structure }),
        None => Ok(()),
    }
}

/// Selects keygraph correspondences through the keytuple join.
///
/// For each scene graph the canonical keytuple `(a, b, c, ...)` is fixed.
/// Model arcs similar to `(a, b)` and to `(b, c)` come from the index;
/// pairs of them sharing their middle vertex give keytuple prefixes, which
/// are looked up in the keytuple table. Remaining arcs are compared
/// directly. Output is sorted by scene graph, model graph and rotation.
pub fn select_correspondences<T: Scalar>(
    store: &ModelStore<T>,
    scene_graphs: &[Keygraph],
    scene: &SceneDescriptors<T>,
    params: &SelectionParams<T>,
    vertex: Option<&dyn VertexDissimilarity<T>>,
) -> Result<Vec<KeygraphCorrespondence<T>>, MatchingError> {
    params.validate()?;
    check_structure(store, scene_graphs)?;
    let thr = params.threshold;
    let mut out = Vec::new();
    let kt = store.structure.keytuple_count() as u32;
    let mut second: Vec<[u32; 2]> = Vec::new();
    let mut hits: Vec<u32> = Vec::new();
    for (scene_id, gs) in scene_graphs.iter().enumerate() {
        let Some(sd) = scene_arc_descriptors(gs, scene) else { continue };
        let first = store.arcs_within(sd[0], thr, params.approx_eps);
        hits.clear();
        if store.structure.is_circuit() {
            // Hash join on the shared vertex: B sorted by start keypoint.
            second.clear();
            second.extend(store.arcs_within(sd[1], thr, params.approx_eps).into_iter().map(|id| store.arc_ends[id]));
            second.sort_unstable();
            for id in first {
                let [a, b] = store.arc_ends[id];
                let lo = second.partition_point(|e| e[0] < b);
                for &[_, c] in second[lo..].iter().take_while(|e| e[0] == b) {
                    let Some(&(start, len)) = store.prefix3.get(&prefix_key(a, b, c)) else { continue };
                    for &t in &store.prefix_tuples[start as usize..(start + len) as usize] {
                        let arcs = &store.tuple_arcs[t as usize];
                        let rest_ok = arcs[2..store.structure.arc_count()]
                            .iter()
                            .zip(&sd[2..])
                            .all(|(&arc, d)| similar(&store.descriptors[arc as usize], d, thr));
                        if rest_ok {
                            hits.push(t);
                        }
                    }
                }
            }
        } else {
            for id in first {
                hits.extend(store.arc_to_tuples[id].iter().filter(|(_, pos)| *pos == 0).map(|(t, _)| t.graph as u32 * kt + t.rotation as u32));
            }
        }
        hits.sort_unstable();
        hits.dedup();
        out.extend(hits.iter().filter_map(|&t| correspondence(store, store.tuple_ref(t), scene_id, gs, &sd, params, vertex)));
    }
    Ok(out)
}

/// Reference selection: every model graph, every isomorphism, every arc.
pub fn select_correspondences_naive<T: Scalar>(
    store: &ModelStore<T>,
    scene_graphs: &[Keygraph],
    scene: &SceneDescriptors<T>,
    params: &SelectionParams<T>,
    vertex: Option<&dyn VertexDissimilarity<T>>,
) -> Result<Vec<KeygraphCorrespondence<T>>, MatchingError> {
    params.validate()?;
    check_structure(store, scene_graphs)?;
    let mut out = Vec::new();
    for (scene_id, gs) in scene_graphs.iter().enumerate() {
        let Some(sd) = scene_arc_descriptors(gs, scene) else { continue };
        for (graph, gm) in store.keygraphs.iter().enumerate() {
            for rotation in 0..store.structure.keytuple_count() {
                let iso = Isomorphism::from_rotation(gm.k(), rotation);
                debug_assert!(iso.preserves_arcs(gm, gs));
                let ok = gs.arcs().iter().zip(&sd).all(|((s0, s1), d)| {
                    let m0 = gm.vertices[iso.map.iter().position(|&j| gs.vertices[j] == *s0).unwrap()];
                    let m1 = gm.vertices[iso.map.iter().position(|&j| gs.vertices[j] == *s1).unwrap()];
                    store.descriptor((m0, m1)).is_some_and(|md| similar(md, d, params.threshold))
                });
                if ok {
                    out.extend(correspondence(store, TupleRef { graph, rotation }, scene_id, gs, &sd, params, vertex));
                }
            }
        }
    }
    Ok(out)
}

/// One correspondence per line: `model_graph_id scene_graph_id rotation`
/// followed by the arc dissimilarities at 9 significant digits.
pub fn format_correspondences<T: Scalar>(corrs: &[KeygraphCorrespondence<T>]) -> String {
    let mut s = String::new();
    for c in corrs {
        write!(s, "{} {} {}", c.model_id, c.scene_id, c.rotation).unwrap();
        for d in &c.arc_dissimilarities {
            write!(s, " {}", sig(d.as_f64(), 9)).unwrap();
        }
        s.push('\n');
    }
    s
}
