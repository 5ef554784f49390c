use crate::Vec3;

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.max[k] && o.min[k] <= self.max[k])
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.min[k] && o.max[k] <= self.max[k])
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

pub const MAX_LEAF: usize = 4;

/// Bounding volume hierarchy over triangle boxes, median split on the
/// longest centroid axis.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    boxes: Vec<Aabb>,
}

pub fn triangle_box(vertices: &[Vec3], t: &[u32; 3]) -> Aabb {
    Aabb::of_points(t.iter().map(|&i| &vertices[i as usize]))
}

pub fn build_bvh(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Bvh {
    let boxes: Vec<Aabb> = triangles.iter().map(|t| triangle_box(vertices, t)).collect();
    let centroids: Vec<Vec3> = boxes.iter().map(|b| (b.min + b.max) * 0.5).collect();
    let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
    let mut nodes = Vec::new();
    if !order.is_empty() {
        build(&mut nodes, &mut order, 0, &boxes, &centroids);
    }
    Bvh { nodes, order, boxes }
}

fn build(nodes: &mut Vec<Node>, order: &mut [u32], start: usize, boxes: &[Aabb], centroids: &[Vec3]) -> usize {
    let bounds = order
        .iter()
        .fold(Aabb::empty(), |acc, &t| acc.union(&boxes[t as usize]));
    let id = nodes.len();
    if order.len() <= MAX_LEAF {
        nodes.push(Node::Leaf {
            bounds,
            start,
            count: order.len(),
        });
        return id;
    }
    let cb = Aabb::of_points(order.iter().map(|&t| &centroids[t as usize]));
    let extent = cb.max - cb.min;
    let axis = extent.imax();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, start, count: 0 });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build(nodes, lo, start, boxes, centroids);
    let right = build(nodes, hi, start + mid, boxes, centroids);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}

impl Bvh {
    pub fn triangle_count(&self) -> usize {
        self.order.len()
    }

    pub fn root_bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| *n.bounds())
    }

    /// Triangles whose box overlaps `query`, ascending.
    pub fn query(&self, query: &Aabb) -> Vec<u32> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds().overlaps(query) {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    for &t in &self.order[start..start + count] {
                        if self.boxes[t as usize].overlaps(query) {
                            out.push(t);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn triangle_bounds(&self, t: u32) -> &Aabb {
        &self.boxes[t as usize]
    }

    /// Checks that every node box contains its children and triangles, and that
    /// leaves partition the triangle set with at most [`MAX_LEAF`] each.
    pub fn is_valid(&self) -> bool {
        if self.nodes.is_empty() {
            return self.order.is_empty();
        }
        let mut seen = vec![false; self.order.len()];
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match self.nodes[n] {
                Node::Leaf { bounds, start, count } => {
                    if count == 0 || count > MAX_LEAF {
                        return false;
                    }
                    for &t in &self.order[start..start + count] {
                        if seen[t as usize] || !bounds.contains(&self.boxes[t as usize]) {
                            return false;
                        }
                        seen[t as usize] = true;
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if !bounds.contains(self.nodes[left].bounds())
                        || !bounds.contains(self.nodes[right].bounds())
                    {
                        return false;
                    }
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
