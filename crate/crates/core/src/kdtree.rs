//! Leaf-only k-d tree with compressed leaves.
//!
//! Interior nodes split on the coordinate with the largest spread at the
//! lower median; points equal to the pivot go left. Each leaf holds at most
//! `leaf_capacity` points and owns a slice of the blob arena: a compressed
//! blob when its points fit half precision, otherwise the raw 12-byte points.

use thiserror::Error;

use crate::codec::{self, CodecError, LeafEncoding, MAX_LEAF_POINTS};
use crate::geometry::{Axis, Point3};

/// Default leaf capacity.
pub const DEFAULT_LEAF_CAPACITY: usize = 15;

/// Bytes of one raw single-precision point.
pub const POINT_BYTES: usize = 12;

/// Sibling pruning is widened by this relative margin so that rounding in the
/// single-precision distance can never admit a point from a pruned subtree.
const PRUNE_SLACK: f32 = 1.0 + 1.0 / 65536.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("leaf capacity {0} outside 1..=16")]
    BadLeafCapacity(usize),
    #[error("point cloud has more than u32::MAX points")]
    TooLarge,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// An ordered set of points from one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub id: String,
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(id: impl Into<String>, points: Vec<Point3>) -> Self {
        PointCloud { id: id.into(), points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Index of a node in [`KdTree::nodes`].
pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorNode {
    pub split_dim: Axis,
    /// Largest split coordinate in the left subtree.
    pub left_high: f32,
    /// Smallest split coordinate in the right subtree.
    pub right_low: f32,
    pub left: NodeId,
    pub right: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafNode {
    /// Start of this leaf's run in [`KdTree::point_indices`].
    pub first: u32,
    pub count: u32,
    pub blob_offset: u32,
    pub blob_len: u32,
    /// False when the leaf holds raw single-precision points.
    pub compressed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Interior(InteriorNode),
    Leaf(LeafNode),
}

/// Immutable search index over one point cloud.
#[derive(Debug, Clone)]
pub struct KdTree {
    cloud: PointCloud,
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
    point_indices: Vec<u32>,
    arena: Vec<u8>,
    leaf_capacity: usize,
}

impl KdTree {
    /// Builds the tree and compresses every leaf into the arena.
    pub fn build(cloud: PointCloud, leaf_capacity: usize) -> Result<Self, BuildError> {
        if !(1..=MAX_LEAF_POINTS).contains(&leaf_capacity) {
            return Err(BuildError::BadLeafCapacity(leaf_capacity));
        }
        if cloud.is_empty() {
            return Err(BuildError::EmptyCloud);
        }
        if cloud.len() > u32::MAX as usize {
            return Err(BuildError::TooLarge);
        }
        if let Some(i) = cloud.points.iter().position(|p| !p.is_finite()) {
            return Err(BuildError::NonFinite(i));
        }

        let n = cloud.len();
        let mut tree = KdTree {
            nodes: Vec::with_capacity(2 * n / leaf_capacity + 1),
            leaves: Vec::new(),
            point_indices: (0..n as u32).collect(),
            arena: Vec::new(),
            leaf_capacity,
            cloud,
        };
        let mut scratch = Vec::with_capacity(MAX_LEAF_POINTS);
        tree.build_node(0, n, &mut scratch)?;
        Ok(tree)
    }

    fn build_node(&mut self, lo: usize, hi: usize, scratch: &mut Vec<Point3>) -> Result<NodeId, BuildError> {
        let id = self.nodes.len() as NodeId;
        let count = hi - lo;
        if count <= self.leaf_capacity {
            let leaf = self.make_leaf(lo, hi, scratch)?;
            self.nodes.push(Node::Leaf(leaf));
            self.leaves.push(id);
            return Ok(id);
        }

        let points = &self.cloud.points;
        let range = &mut self.point_indices[lo..hi];
        let split_dim = widest_axis(points, range);
        range.sort_unstable_by(|&a, &b| {
            points[a as usize][split_dim]
                .total_cmp(&points[b as usize][split_dim])
                .then(a.cmp(&b))
        });
        let value = |i: usize| points[range[i] as usize][split_dim];
        let pivot = value((count - 1) / 2);
        let at_or_below = range.partition_point(|&i| points[i as usize][split_dim] <= pivot);
        let below = range.partition_point(|&i| points[i as usize][split_dim] < pivot);
        let cut = if at_or_below < count {
            at_or_below
        } else if below > 0 {
            below
        } else {
            // Every point is identical; split by position.
            count / 2
        };
        let left_high = value(cut - 1);
        let right_low = value(cut);

        self.nodes.push(Node::Interior(InteriorNode {
            split_dim,
            left_high,
            right_low,
            left: 0,
            right: 0,
        }));
        let left = self.build_node(lo, lo + cut, scratch)?;
        let right = self.build_node(lo + cut, hi, scratch)?;
        if let Node::Interior(node) = &mut self.nodes[id as usize] {
            node.left = left;
            node.right = right;
        }
        Ok(id)
    }

    fn make_leaf(&mut self, lo: usize, hi: usize, scratch: &mut Vec<Point3>) -> Result<LeafNode, BuildError> {
        scratch.clear();
        scratch.extend(self.point_indices[lo..hi].iter().map(|&i| self.cloud.points[i as usize]));
        let blob_offset = self.arena.len() as u32;
        let compressed = match codec::compress_leaf(scratch)? {
            LeafEncoding::Compressed(blob) => {
                self.arena.extend_from_slice(blob.as_bytes());
                true
            }
            LeafEncoding::Uncompressible => {
                for p in scratch.iter() {
                    self.arena.extend_from_slice(&p.to_le_bytes());
                }
                false
            }
        };
        Ok(LeafNode {
            first: lo as u32,
            count: (hi - lo) as u32,
            blob_offset,
            blob_len: self.arena.len() as u32 - blob_offset,
            compressed,
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn points(&self) -> &[Point3] {
        &self.cloud.points
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// The contiguous blob arena, leaves in build order.
    pub fn arena(&self) -> &[u8] {
        &self.arena
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// All leaves in build order.
    pub fn leaves(&self) -> impl ExactSizeIterator<Item = &LeafNode> + '_ {
        self.leaves.iter().map(move |&id| match &self.nodes[id as usize] {
            Node::Leaf(leaf) => leaf,
            Node::Interior(_) => unreachable!("leaf list holds interior node"),
        })
    }

    /// Indices into the cloud of the points held by `leaf`.
    pub fn leaf_indices(&self, leaf: &LeafNode) -> &[u32] {
        let start = leaf.first as usize;
        &self.point_indices[start..start + leaf.count as usize]
    }

    /// The arena bytes of `leaf`.
    pub fn leaf_blob(&self, leaf: &LeafNode) -> &[u8] {
        let start = leaf.blob_offset as usize;
        &self.arena[start..start + leaf.blob_len as usize]
    }

    /// Calls `visit` for every leaf that may hold a point within `r` of `q`,
    /// descending first into the child on `q`'s side of each split.
    pub fn for_each_leaf_within<'a, F: FnMut(&'a LeafNode)>(&'a self, q: &Point3, r: f32, mut visit: F) {
        let reach = r * PRUNE_SLACK;
        let mut stack: Vec<NodeId> = Vec::with_capacity(64);
        stack.push(self.root());
        while let Some(id) = stack.pop() {
            match &self.nodes[id as usize] {
                Node::Leaf(leaf) => visit(leaf),
                Node::Interior(node) => {
                    let v = q[node.split_dim];
                    let left_gap = (v - node.left_high).max(0.0);
                    let right_gap = (node.right_low - v).max(0.0);
                    let go_left = left_gap <= reach;
                    let go_right = right_gap <= reach;
                    // Push the far child first so the near child is visited next.
                    let left_is_near = left_gap <= right_gap;
                    let (near, far, go_near, go_far) = if left_is_near {
                        (node.left, node.right, go_left, go_right)
                    } else {
                        (node.right, node.left, go_right, go_left)
                    };
                    if go_far {
                        stack.push(far);
                    }
                    if go_near {
                        stack.push(near);
                    }
                }
            }
        }
    }

    /// The leaves a radius search visits, in visiting order.
    pub fn leaf_visit_order(&self, q: &Point3, r: f32) -> Vec<&LeafNode> {
        let mut out = Vec::new();
        self.for_each_leaf_within(q, r, |leaf| out.push(leaf));
        out
    }
}

fn widest_axis(points: &[Point3], indices: &[u32]) -> Axis {
    let mut lo = [f32::INFINITY; 3];
    let mut hi = [f32::NEG_INFINITY; 3];
    for &i in indices {
        let c = points[i as usize].coords();
        for d in 0..3 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let mut best = Axis::X;
    for axis in [Axis::Y, Axis::Z] {
        if hi[axis.index()] - lo[axis.index()] > hi[best.index()] - lo[best.index()] {
            best = axis;
        }
    }
    best
}
