//! Exact radius search over fixed-dimension real vectors.

use crate::descriptor::squared_distance;
use crate::scalar::Scalar;

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: T, left: usize, right: usize },
}

/// Static kd-tree. Item ids are the positions of the vectors passed to
/// [`KdTree::build`].
#[derive(Clone, Debug)]
pub struct KdTree<T> {
    dims: usize,
    points: Vec<T>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> KdTree<T> {
    /// Builds the tree. Every vector must have `dims` entries.
    pub fn build(dims: usize, vectors: &[Vec<T>]) -> Self {
        assert!(dims > 0, "kd-tree needs at least one dimension");
        let mut points = Vec::with_capacity(dims * vectors.len());
        for v in vectors {
            assert_eq!(v.len(), dims, "vector dimension mismatch");
            points.extend_from_slice(v);
        }
        let mut tree = Self { dims, points, order: (0..vectors.len()).collect(), nodes: Vec::new() };
        if !vectors.is_empty() {
            tree.split(0, vectors.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    fn coord(&self, id: usize, d: usize) -> T {
        self.points[id * self.dims + d]
    }

    pub fn point(&self, id: usize) -> &[T] {
        &self.points[id * self.dims..(id + 1) * self.dims]
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let at = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return at;
        }
        let dim = (0..self.dims)
            .map(|d| {
                let (lo, hi) = self.order[start..end].iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &i| {
                    let c = self.coord(i, d);
                    (lo.min(c), hi.max(c))
                });
                (d, hi - lo)
            })
            .fold((0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        let mid = start + (end - start) / 2;
        let mut slice = std::mem::take(&mut self.order);
        slice[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            self.coord(a, dim).partial_cmp(&self.coord(b, dim)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        self.order = slice;
        let value = self.coord(self.order[mid], dim);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes[at] = Node::Split { dim, value, left, right };
        at
    }

    /// Ids of every vector within Euclidean distance `radius` (inclusive) of
    /// `query`, in ascending id order.
    pub fn within_radius(&self, query: &[T], radius: T) -> Vec<usize> {
        self.search(query, radius, T::zero())
    }

    /// Approximate variant: subtrees farther than `radius / (1 + eps)` from
    /// the query are skipped, so some hits may be missed. Never returns a
    /// vector outside the radius.
    pub fn within_radius_approx(&self, query: &[T], radius: T, eps: T) -> Vec<usize> {
        self.search(query, radius, eps)
    }

    fn search(&self, query: &[T], radius: T, eps: T) -> Vec<usize> {
        assert_eq!(query.len(), self.dims, "query dimension mismatch");
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let prune = radius / (T::one() + eps);
        let mut offsets = vec![T::zero(); self.dims];
        self.visit(0, query, radius * radius, prune * prune, T::zero(), &mut offsets, &mut out);
        out.sort_unstable();
        out
    }

    /// `bound` is the squared distance from the query to the cell of `n`,
    /// accumulated from the per-dimension `offsets` of the splits above.
    #[allow(clippy::too_many_arguments)]
    fn visit(&self, n: usize, query: &[T], r2: T, prune2: T, bound: T, offsets: &mut [T], out: &mut Vec<usize>) {
        match self.nodes[n] {
            Node::Leaf { start, end } => {
                for &id in &self.order[start..end] {
                    if squared_distance(self.point(id), query) <= r2 {
                        out.push(id);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = query[dim] - value;
                let (near, far) = if diff <= T::zero() { (left, right) } else { (right, left) };
                self.visit(near, query, r2, prune2, bound, offsets, out);
                let old = offsets[dim];
                let far_bound = bound - old * old + diff * diff;
                if far_bound <= prune2 {
                    offsets[dim] = diff;
                    self.visit(far, query, r2, prune2, far_bound, offsets, out);
                    offsets[dim] = old;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(vs: &[Vec<f64>], q: &[f64], r: f64) -> Vec<usize> {
        (0..vs.len())
            .filter(|&i| vs[i].iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r * r)
            .collect()
    }

    #[test]
    fn empty_tree() {
        let t = KdTree::<f64>::build(6, &[]);
        assert!(t.is_empty());
        assert!(t.within_radius(&[0.0; 6], 1.0).is_empty());
    }

    #[test]
    fn boundary_is_inclusive() {
        let vs = vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![3.0, 4.000001]];
        let t = KdTree::build(2, &vs);
        assert_eq!(t.within_radius(&[0.0, 0.0], 5.0), vec![0, 1]);
    }

    #[test]
    fn duplicates_are_all_returned() {
        let vs = vec![vec![1.0, 1.0]; 40];
        let t = KdTree::build(2, &vs);
        assert_eq!(t.within_radius(&[1.0, 1.0], 0.0).len(), 40);
    }

    proptest! {
        #[test]
        fn exact_search_matches_brute_force(
            vs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 6), 0..200),
            q in proptest::collection::vec(-1.0f64..1.0, 6),
            r in 0.0f64..1.5,
        ) {
            let t = KdTree::build(6, &vs);
            prop_assert_eq!(t.within_radius(&q, r), brute(&vs, &q, r));
        }

        #[test]
        fn approximate_search_is_a_subset(
            vs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 6), 0..200),
            q in proptest::collection::vec(-1.0f64..1.0, 6),
            r in 0.0f64..1.5,
        ) {
            let t = KdTree::build(6, &vs);
            let exact = brute(&vs, &q, r);
            for id in t.within_radius_approx(&q, r, 0.5) {
                prop_assert!(exact.binary_search(&id).is_ok());
            }
        }
    }
}
