//! Level-set domains on uniform Cartesian grids.
//!
//! A domain is the set `{phi < 0}` sampled on a grid with spacing `h`.
//! Grid nodes with `phi < 0` are interior unknowns. Every grid edge joining
//! an interior node to an exterior node carries exactly one boundary node,
//! placed at the zero crossing of `phi` along that edge. Those crossings are
//! the vertices of the marching-squares polyline (2D) or the marching-cubes
//! surface (3D), and the endpoints of the clipped Shortley-Weller stencil
//! arms used by [`crate::laplace`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::{vec3, Real};

/// Node cap applied to 3D grids unless the spec overrides it.
pub const DEFAULT_NODE_CAP_3D: usize = 128 * 128 * 128;
pub const DEFAULT_NODE_CAP_2D: usize = 4096 * 4096;

/// Shapes centred at the origin, or an arbitrary levelset expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape<T> {
    Disk {
        radius: T,
    },
    Ball {
        radius: T,
    },
    Ellipse {
        a: T,
        b: T,
    },
    Ellipsoid {
        a: T,
        b: T,
        c: T,
    },
    Annulus {
        inner: T,
        outer: T,
    },
    /// `expression < 0` inside. The grid covers `[lower, upper]`.
    Levelset {
        expression: String,
        dim: usize,
        lower: Vec<T>,
        upper: Vec<T>,
    },
}

impl<T: Real> Shape<T> {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Disk { .. } | Shape::Ellipse { .. } | Shape::Annulus { .. } => 2,
            Shape::Ball { .. } | Shape::Ellipsoid { .. } => 3,
            Shape::Levelset { dim, .. } => *dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec<T> {
    pub shape: Shape<T>,
    /// Grid spacing.
    pub h: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_cap: Option<usize>,
}

impl<T: Real> DomainSpec<T> {
    pub fn new(shape: Shape<T>, h: T) -> Self {
        Self {
            shape,
            h,
            node_cap: None,
        }
    }

    pub fn disk(radius: T, h: T) -> Self {
        Self::new(Shape::Disk { radius }, h)
    }

    pub fn ball(radius: T, h: T) -> Self {
        Self::new(Shape::Ball { radius }, h)
    }

    pub fn ellipse(a: T, b: T, h: T) -> Self {
        Self::new(Shape::Ellipse { a, b }, h)
    }

    pub fn annulus(inner: T, outer: T, h: T) -> Self {
        Self::new(Shape::Annulus { inner, outer }, h)
    }

    pub fn levelset(expression: &str, lower: &[T], upper: &[T], h: T) -> Self {
        Self::new(
            Shape::Levelset {
                expression: expression.to_string(),
                dim: lower.len(),
                lower: lower.to_vec(),
                upper: upper.to_vec(),
            },
            h,
        )
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Same shape at a different grid spacing.
    pub fn with_h(&self, h: T) -> Self {
        Self {
            h,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return bad("grid spacing h must be positive");
        }
        let pos = |v: T| v > T::zero() && v.is_finite();
        match &self.shape {
            Shape::Disk { radius } | Shape::Ball { radius } => {
                if !pos(*radius) {
                    return bad("radius must be positive");
                }
            }
            Shape::Ellipse { a, b } => {
                if !pos(*a) || !pos(*b) {
                    return bad("semi-axes must be positive");
                }
            }
            Shape::Ellipsoid { a, b, c } => {
                if !pos(*a) || !pos(*b) || !pos(*c) {
                    return bad("semi-axes must be positive");
                }
            }
            Shape::Annulus { inner, outer } => {
                if !pos(*inner) || !pos(*outer) {
                    return bad("radii must be positive");
                }
                if inner >= outer {
                    return bad("annulus needs inner < outer");
                }
            }
            Shape::Levelset {
                expression,
                dim,
                lower,
                upper,
            } => {
                if *dim != 2 && *dim != 3 {
                    return bad("levelset dimension must be 2 or 3");
                }
                if lower.len() != *dim || upper.len() != *dim {
                    return bad("levelset bounds must have one entry per dimension");
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return bad("levelset bounds need lower < upper");
                }
                let e = Expr::parse(expression)?;
                if e.max_variable().is_some_and(|v| v >= *dim) {
                    return bad("levelset expression uses a coordinate beyond its dimension");
                }
            }
        }
        Ok(())
    }
}

/// Implicit description of a shape: levelset value and, for canonical
/// shapes, the exact outward normal.
#[derive(Debug, Clone)]
pub struct Implicit<T> {
    shape: Shape<T>,
    expr: Option<Expr>,
}

impl<T: Real> Implicit<T> {
    pub fn new(shape: &Shape<T>) -> Result<Self> {
        let expr = match shape {
            Shape::Levelset { expression, .. } => Some(Expr::parse(expression)?),
            _ => None,
        };
        Ok(Self {
            shape: shape.clone(),
            expr,
        })
    }

    /// Negative inside, positive outside.
    pub fn value(&self, p: &[T; 3]) -> T {
        let r = || vec3::norm(p);
        match &self.shape {
            Shape::Disk { radius } | Shape::Ball { radius } => r() - *radius,
            Shape::Ellipse { a, b } => {
                (p[0] / *a).powi(2) + (p[1] / *b).powi(2) - T::one()
            }
            Shape::Ellipsoid { a, b, c } => {
                (p[0] / *a).powi(2) + (p[1] / *b).powi(2) + (p[2] / *c).powi(2) - T::one()
            }
            Shape::Annulus { inner, outer } => {
                let r = r();
                (*inner - r).max(r - *outer)
            }
            Shape::Levelset { .. } => self.expr.as_ref().expect("parsed").eval(p),
        }
    }

    /// Exact outward unit normal for canonical shapes, `None` for levelsets.
    pub fn exact_normal(&self, p: &[T; 3]) -> Option<[T; 3]> {
        match &self.shape {
            Shape::Disk { .. } | Shape::Ball { .. } => vec3::normalized(p),
            Shape::Ellipse { a, b } => {
                vec3::normalized(&[p[0] / (*a * *a), p[1] / (*b * *b), T::zero()])
            }
            Shape::Ellipsoid { a, b, c } => vec3::normalized(&[
                p[0] / (*a * *a),
                p[1] / (*b * *b),
                p[2] / (*c * *c),
            ]),
            Shape::Annulus { inner, outer } => {
                let n = vec3::normalized(p)?;
                let mid = (*inner + *outer) / T::lit(2.0);
                Some(if vec3::norm(p) < mid {
                    vec3::scale(&n, -T::one())
                } else {
                    n
                })
            }
            Shape::Levelset { .. } => None,
        }
    }

    /// Central-difference gradient of the levelset with step `delta`.
    pub fn gradient(&self, p: &[T; 3], dim: usize, delta: T) -> [T; 3] {
        let mut g = vec3::zero();
        for (d, gd) in g.iter_mut().enumerate().take(dim) {
            let mut a = *p;
            let mut b = *p;
            a[d] += delta;
            b[d] -= delta;
            *gd = (self.value(&a) - self.value(&b)) / (delta + delta);
        }
        g
    }
}

/// Uniform node lattice. In 2D the third count is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub dim: usize,
    pub counts: [usize; 3],
    pub origin: [T; 3],
    pub h: T,
}

impl<T: Real> Grid<T> {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn id(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.counts[0] * (ijk[1] + self.counts[1] * ijk[2])
    }

    #[inline]
    pub fn ijk(&self, id: usize) -> [usize; 3] {
        let i = id % self.counts[0];
        let rest = id / self.counts[0];
        [i, rest % self.counts[1], rest / self.counts[1]]
    }

    #[inline]
    pub fn position_of(&self, ijk: [usize; 3]) -> [T; 3] {
        let mut p = self.origin;
        for d in 0..self.dim {
            p[d] += T::from_usize_lossy(ijk[d]) * self.h;
        }
        p
    }

    #[inline]
    pub fn position(&self, id: usize) -> [T; 3] {
        self.position_of(self.ijk(id))
    }

    /// Id of the neighbour one step along `axis` in direction `dir`, if inside the lattice.
    #[inline]
    pub fn neighbor(&self, id: usize, axis: usize, dir: i8) -> Option<usize> {
        let mut ijk = self.ijk(id);
        if dir < 0 {
            if ijk[axis] == 0 {
                return None;
            }
            ijk[axis] -= 1;
        } else {
            if ijk[axis] + 1 >= self.counts[axis] {
                return None;
            }
            ijk[axis] += 1;
        }
        Some(self.id(ijk))
    }

    fn on_outer_face(&self, id: usize) -> bool {
        let ijk = self.ijk(id);
        (0..self.dim).any(|d| ijk[d] == 0 || ijk[d] + 1 == self.counts[d])
    }
}

/// Where a stencil arm ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Interior(u32),
    Boundary(u32),
}

/// One Shortley-Weller stencil arm: its end node and its length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm<T> {
    pub target: Target,
    pub len: T,
}

/// Boundary node at an edge crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNode<T> {
    pub position: [T; 3],
    /// Outward unit normal.
    pub normal: [T; 3],
    /// Surface quadrature weight.
    pub weight: T,
    /// Interior endpoint of the carrying edge.
    pub interior: u32,
    pub axis: u8,
    /// Direction from the interior endpoint towards this node.
    pub dir: i8,
    /// Distance from the interior endpoint in units of `h`, in `(0, 1]`.
    pub frac: T,
}

#[derive(Debug, Clone)]
pub struct Domain<T> {
    spec: DomainSpec<T>,
    implicit: Implicit<T>,
    grid: Grid<T>,
    levelset: Vec<T>,
    interior: Vec<usize>,
    grid_to_interior: Vec<u32>,
    boundary: Vec<BoundaryNode<T>>,
    arms: Vec<[Arm<T>; 6]>,
    interior_weights: Vec<T>,
    boundary_volume_weights: Vec<T>,
    volume: T,
    area: T,
    facet_count: usize,
}

const NONE: u32 = u32::MAX;

#[inline]
fn arm_slot(axis: usize, dir: i8) -> usize {
    2 * axis + usize::from(dir > 0)
}

/// Illinois regula falsi for the crossing of `f` on `[0, 1]` with `f(0) < 0 <= f(1)`.
fn edge_root<T: Real>(f: impl Fn(T) -> T, f0: T, f1: T) -> T {
    if f1 == T::zero() {
        return T::one();
    }
    let (mut a, mut fa, mut b, mut fb) = (T::zero(), f0, T::one(), f1);
    let tol = T::epsilon() * T::lit(16.0);
    let mut side = 0i8;
    let mut c = T::lit(0.5);
    for _ in 0..200 {
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = (a + b) / T::lit(2.0);
        }
        let fc = f(c);
        if fc == T::zero() || b - a < tol {
            break;
        }
        if fc < T::zero() {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= T::lit(2.0);
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= T::lit(2.0);
            }
            side = 1;
        }
    }
    c
}

/// Polygon vertex inside a square cell or cube face.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Vertex {
    Corner(usize),
    Cross(u32),
}

/// Marching squares on one square with corners in cyclic order.
///
/// `cross[i]` is the crossing on the side from corner `i` to corner `i+1`.
/// Returns the boundary segments and the polygons covering the inside part.
fn march_square(
    inside: [bool; 4],
    cross: [Option<u32>; 4],
    center_inside: impl FnOnce() -> bool,
) -> (Vec<(u32, u32)>, Vec<Vec<Vertex>>) {
    let n_cross = cross.iter().flatten().count();
    let prev = |i: usize| (i + 3) % 4;
    let mut segments = Vec::new();
    let mut polygons = Vec::new();
    let full_cycle = || {
        let mut poly = Vec::with_capacity(8);
        for i in 0..4 {
            if inside[i] {
                poly.push(Vertex::Corner(i));
            }
            if let Some(c) = cross[i] {
                poly.push(Vertex::Cross(c));
            }
        }
        poly
    };
    match n_cross {
        0 => {
            if inside.iter().all(|&v| v) {
                polygons.push((0..4).map(Vertex::Corner).collect());
            }
        }
        2 => {
            let ends: Vec<u32> = cross.iter().flatten().copied().collect();
            segments.push((ends[0], ends[1]));
            polygons.push(full_cycle());
        }
        4 => {
            let connected = center_inside();
            for i in 0..4 {
                // isolate the corners of the minority class around the centre
                if inside[i] != connected {
                    let a = cross[prev(i)].expect("saddle edge");
                    let b = cross[i].expect("saddle edge");
                    segments.push((a, b));
                    if inside[i] {
                        polygons.push(vec![Vertex::Cross(a), Vertex::Corner(i), Vertex::Cross(b)]);
                    }
                }
            }
            if connected {
                polygons.push(full_cycle());
            }
        }
        _ => unreachable!("a square has an even number of sign changes"),
    }
    (segments, polygons)
}

struct Builder<'a, T> {
    implicit: &'a Implicit<T>,
    grid: &'a Grid<T>,
    levelset: &'a [T],
    edge_nodes: HashMap<u64, u32>,
    boundary: &'a [BoundaryNode<T>],
}

impl<T: Real> Builder<'_, T> {
    #[inline]
    fn edge_key(low: usize, axis: usize) -> u64 {
        (low as u64) * 3 + axis as u64
    }

    #[inline]
    fn inside(&self, id: usize) -> bool {
        self.levelset[id] < T::zero()
    }

    fn crossing(&self, a: usize, b: usize, axis: usize) -> Option<u32> {
        if self.inside(a) == self.inside(b) {
            return None;
        }
        let low = a.min(b);
        Some(
            *self
                .edge_nodes
                .get(&Self::edge_key(low, axis))
                .expect("every sign-change edge carries a boundary node"),
        )
    }

    /// Square with base corner `base` spanned by axes `u`, `v`.
    fn square(&self, base: usize, u: usize, v: usize) -> ([usize; 4], [Option<u32>; 4]) {
        let g = self.grid;
        let mut ijk = g.ijk(base);
        let c0 = base;
        ijk[u] += 1;
        let c1 = g.id(ijk);
        ijk[v] += 1;
        let c2 = g.id(ijk);
        ijk[u] -= 1;
        let c3 = g.id(ijk);
        let corners = [c0, c1, c2, c3];
        let cross = [
            self.crossing(c0, c1, u),
            self.crossing(c1, c2, v),
            self.crossing(c3, c2, u),
            self.crossing(c0, c3, v),
        ];
        (corners, cross)
    }

    fn vertex_pos(&self, corners: &[usize; 4], v: Vertex) -> [T; 3] {
        match v {
            Vertex::Corner(i) => self.grid.position(corners[i]),
            Vertex::Cross(b) => self.boundary[b as usize].position,
        }
    }

    /// Inside area of a square face, by the shoelace formula in its own plane.
    fn square_area(
        &self,
        corners: &[usize; 4],
        polys: &[Vec<Vertex>],
        u: usize,
        v: usize,
    ) -> T {
        let o = self.grid.position(corners[0]);
        let mut total = T::zero();
        for poly in polys {
            let mut s = T::zero();
            for (i, &a) in poly.iter().enumerate() {
                let b = poly[(i + 1) % poly.len()];
                let pa = self.vertex_pos(corners, a);
                let pb = self.vertex_pos(corners, b);
                let (ax, ay) = (pa[u] - o[u], pa[v] - o[v]);
                let (bx, by) = (pb[u] - o[u], pb[v] - o[v]);
                s += ax * by - ay * bx;
            }
            total += (s / T::lit(2.0)).abs();
        }
        total
    }

    fn face_center_inside(&self, base: usize, u: usize, v: usize) -> bool {
        let mut c = self.grid.position(base);
        let half = self.grid.h / T::lit(2.0);
        c[u] += half;
        c[v] += half;
        self.implicit.value(&c) < T::zero()
    }
}

/// Per-cell result of the surface extraction.
struct CellPiece<T> {
    volume: T,
    /// (vertex pair or triangle, measure) facets.
    facets: Vec<(Vec<u32>, T)>,
    /// Participants of the cell's volume quadrature.
    corners_inside: Vec<usize>,
    crossings: Vec<u32>,
}

fn cut_cell_2d<T: Real>(b: &Builder<'_, T>, base: usize) -> Option<CellPiece<T>> {
    let (corners, cross) = b.square(base, 0, 1);
    let inside: [bool; 4] = corners.map(|c| b.inside(c));
    if !inside.iter().any(|&v| v) {
        return None;
    }
    let (segments, polys) = march_square(inside, cross, || b.face_center_inside(base, 0, 1));
    let volume = b.square_area(&corners, &polys, 0, 1);
    let facets = segments
        .iter()
        .map(|&(p, q)| {
            let len = vec3::norm(&vec3::sub(
                &b.boundary[p as usize].position,
                &b.boundary[q as usize].position,
            ));
            (vec![p, q], len)
        })
        .collect();
    Some(CellPiece {
        volume,
        facets,
        corners_inside: corners.iter().copied().filter(|&c| b.inside(c)).collect(),
        crossings: cross.iter().flatten().copied().collect(),
    })
}

fn cut_cell_3d<T: Real>(b: &Builder<'_, T>, base: usize) -> Option<CellPiece<T>> {
    let g = b.grid;
    let h = g.h;
    let base_ijk = g.ijk(base);
    let mut cube = [0usize; 8];
    for (n, slot) in cube.iter_mut().enumerate() {
        let mut ijk = base_ijk;
        ijk[0] += n & 1;
        ijk[1] += (n >> 1) & 1;
        ijk[2] += (n >> 2) & 1;
        *slot = g.id(ijk);
    }
    let n_inside = cube.iter().filter(|&&c| b.inside(c)).count();
    if n_inside == 0 {
        return None;
    }
    if n_inside == 8 {
        return Some(CellPiece {
            volume: h * h * h,
            facets: Vec::new(),
            corners_inside: cube.to_vec(),
            crossings: Vec::new(),
        });
    }

    let mut segments: Vec<(u32, u32)> = Vec::new();
    let mut crossings: Vec<u32> = Vec::new();
    let mut face_area_sum = T::zero();
    for a in 0..3 {
        let (u, v) = match a {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for side in 0..2 {
            let mut ijk = base_ijk;
            ijk[a] += side;
            let fbase = g.id(ijk);
            let (corners, cross) = b.square(fbase, u, v);
            let inside = corners.map(|c| b.inside(c));
            let (segs, polys) = march_square(inside, cross, || b.face_center_inside(fbase, u, v));
            face_area_sum += b.square_area(&corners, &polys, u, v);
            segments.extend(segs);
            crossings.extend(cross.iter().flatten());
        }
    }
    crossings.sort_unstable();
    crossings.dedup();

    // Each crossing touches exactly two face segments, so the segments
    // close into loops.
    let mut adj: HashMap<u32, [u32; 2]> = HashMap::new();
    for &(p, q) in &segments {
        for (x, y) in [(p, q), (q, p)] {
            let e = adj.entry(x).or_insert([NONE, NONE]);
            if e[0] == NONE {
                e[0] = y;
            } else {
                e[1] = y;
            }
        }
    }
    let mut visited: Vec<u32> = Vec::new();
    let mut loops: Vec<Vec<u32>> = Vec::new();
    for &start in &crossings {
        if visited.contains(&start) || !adj.contains_key(&start) {
            continue;
        }
        let mut lp = vec![start];
        visited.push(start);
        let mut prev = start;
        let mut cur = adj[&start][0];
        while cur != start && cur != NONE && !visited.contains(&cur) {
            lp.push(cur);
            visited.push(cur);
            let nb = adj[&cur];
            let next = if nb[0] != prev { nb[0] } else { nb[1] };
            prev = cur;
            cur = next;
        }
        if lp.len() >= 3 {
            loops.push(lp);
        }
    }

    let center = vec3::add(&g.position(base), &[h / T::lit(2.0); 3]);
    let mut facets = Vec::new();
    let mut flux = T::zero();
    for mut lp in loops {
        let pos = |i: u32| b.boundary[i as usize].position;
        let p0 = pos(lp[0]);
        let mut area_vec = vec3::zero::<T>();
        for w in lp[1..].windows(2) {
            let c = vec3::cross(&vec3::sub(&pos(w[0]), &p0), &vec3::sub(&pos(w[1]), &p0));
            area_vec = vec3::add(&area_vec, &c);
        }
        let mut centroid = vec3::zero::<T>();
        for &i in &lp {
            centroid = vec3::add(&centroid, &pos(i));
        }
        centroid = vec3::scale(&centroid, T::one() / T::from_usize_lossy(lp.len()));
        let mut outward = b.implicit.gradient(&centroid, 3, h * T::lit(1e-3));
        if vec3::norm(&outward) == T::zero() {
            let (mut m_in, mut m_out) = (vec3::zero::<T>(), vec3::zero::<T>());
            for &c in &cube {
                if b.inside(c) {
                    m_in = vec3::add(&m_in, &g.position(c));
                } else {
                    m_out = vec3::add(&m_out, &g.position(c));
                }
            }
            outward = vec3::sub(
                &vec3::scale(&m_out, T::one() / T::from_usize_lossy(8 - n_inside)),
                &vec3::scale(&m_in, T::one() / T::from_usize_lossy(n_inside)),
            );
        }
        if vec3::dot(&area_vec, &outward) < T::zero() {
            lp.reverse();
        }
        let p0 = pos(lp[0]);
        for w in lp[1..].windows(2) {
            let (p1, p2) = (pos(w[0]), pos(w[1]));
            let n2 = vec3::cross(&vec3::sub(&p1, &p0), &vec3::sub(&p2, &p0));
            let area = vec3::norm(&n2) / T::lit(2.0);
            flux += vec3::dot(&vec3::sub(&p0, &center), &n2) / T::lit(2.0);
            facets.push((vec![lp[0], w[0], w[1]], area));
        }
    }
    // divergence theorem on the cut cell with x - center
    let volume = (face_area_sum * h / T::lit(2.0) + flux) / T::lit(3.0);
    Some(CellPiece {
        volume: volume.max(T::zero()),
        facets,
        corners_inside: cube.iter().copied().filter(|&c| b.inside(c)).collect(),
        crossings,
    })
}

/// Discretizes `spec` into a [`Domain`].
pub fn build_domain<T: Real>(spec: &DomainSpec<T>) -> Result<Domain<T>> {
    spec.validate()?;
    let dim = spec.dim();
    let h = spec.h;
    let implicit = Implicit::new(&spec.shape)?;

    let two = T::lit(2.0);
    let (lo, hi): ([T; 3], [T; 3]) = match &spec.shape {
        Shape::Levelset { lower, upper, .. } => {
            let mut lo = vec3::zero();
            let mut hi = vec3::zero();
            lo[..dim].copy_from_slice(&lower[..dim]);
            hi[..dim].copy_from_slice(&upper[..dim]);
            (lo, hi)
        }
        shape => {
            let ext: [T; 3] = match *shape {
                Shape::Disk { radius } | Shape::Ball { radius } => [radius; 3],
                Shape::Ellipse { a, b } => [a, b, T::zero()],
                Shape::Ellipsoid { a, b, c } => [a, b, c],
                Shape::Annulus { outer, .. } => [outer; 3],
                Shape::Levelset { .. } => unreachable!(),
            };
            let mut lo = vec3::zero();
            let mut hi = vec3::zero();
            for d in 0..dim {
                lo[d] = -(ext[d] + two * h);
                hi[d] = ext[d] + two * h;
            }
            (lo, hi)
        }
    };

    let mut counts = [1usize; 3];
    let mut origin = vec3::zero::<T>();
    for d in 0..dim {
        let span = (hi[d] - lo[d]) / h;
        let n = (span - T::lit(1e-9)).ceil().to_usize().unwrap_or(0) + 1;
        counts[d] = n.max(2);
        let center = (lo[d] + hi[d]) / two;
        origin[d] = center - T::from_usize_lossy(counts[d] - 1) * h / two;
    }
    let nodes: usize = counts.iter().product();
    let cap = spec.node_cap.unwrap_or(if dim == 3 {
        DEFAULT_NODE_CAP_3D
    } else {
        DEFAULT_NODE_CAP_2D
    });
    if nodes > cap {
        return Err(Error::GridTooLarge { nodes, cap });
    }
    let grid = Grid {
        dim,
        counts,
        origin,
        h,
    };

    let levelset: Vec<T> = (0..nodes).map(|id| implicit.value(&grid.position(id))).collect();
    if levelset.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("levelset"));
    }

    let mut interior = Vec::new();
    let mut grid_to_interior = vec![NONE; nodes];
    for (id, &phi) in levelset.iter().enumerate() {
        if phi < T::zero() {
            if grid.on_outer_face(id) {
                return Err(Error::Unbounded);
            }
            grid_to_interior[id] = interior.len() as u32;
            interior.push(id);
        }
    }
    if interior.is_empty() {
        return Err(Error::GridTooCoarse);
    }

    // Boundary nodes at the edge crossings, and stencil arms.
    let mut boundary: Vec<BoundaryNode<T>> = Vec::new();
    let mut edge_nodes: HashMap<u64, u32> = HashMap::new();
    let placeholder = Arm {
        target: Target::Interior(NONE),
        len: T::zero(),
    };
    let mut arms = vec![[placeholder; 6]; interior.len()];
    let normal_delta = h * T::lit(1e-4);
    for (k, &id) in interior.iter().enumerate() {
        let p = grid.position(id);
        for axis in 0..dim {
            for dir in [-1i8, 1] {
                let q = grid.neighbor(id, axis, dir).ok_or(Error::Unbounded)?;
                let arm = if grid_to_interior[q] != NONE {
                    Arm {
                        target: Target::Interior(grid_to_interior[q]),
                        len: h,
                    }
                } else {
                    let key = Builder::<T>::edge_key(id.min(q), axis);
                    let qpos = grid.position(q);
                    let step = vec3::sub(&qpos, &p);
                    let t = edge_root(
                        |t| implicit.value(&vec3::axpy(&p, t, &step)),
                        levelset[id],
                        levelset[q],
                    );
                    let position = vec3::axpy(&p, t, &step);
                    let normal = implicit
                        .exact_normal(&position)
                        .or_else(|| {
                            vec3::normalized(&implicit.gradient(&position, dim, normal_delta))
                        })
                        .ok_or(Error::NonFinite("boundary normal"))?;
                    let b = boundary.len() as u32;
                    boundary.push(BoundaryNode {
                        position,
                        normal,
                        weight: T::zero(),
                        interior: k as u32,
                        axis: axis as u8,
                        dir,
                        frac: t,
                    });
                    edge_nodes.insert(key, b);
                    Arm {
                        target: Target::Boundary(b),
                        len: t * h,
                    }
                };
                arms[k][arm_slot(axis, dir)] = arm;
            }
        }
    }

    // Surface facets, cell volumes and quadrature weights.
    let mut interior_weights = vec![T::zero(); interior.len()];
    let mut boundary_volume_weights = vec![T::zero(); boundary.len()];
    let mut surface_weights = vec![T::zero(); boundary.len()];
    let mut volume = T::zero();
    let mut area = T::zero();
    let mut facet_count = 0usize;
    {
        let builder = Builder {
            implicit: &implicit,
            grid: &grid,
            levelset: &levelset,
            edge_nodes,
            boundary: &boundary,
        };
        let cell_counts = [
            counts[0] - 1,
            counts[1] - 1,
            if dim == 3 { counts[2] - 1 } else { 1 },
        ];
        for k in 0..cell_counts[2] {
            for j in 0..cell_counts[1] {
                for i in 0..cell_counts[0] {
                    let base = grid.id([i, j, k]);
                    let piece = if dim == 2 {
                        cut_cell_2d(&builder, base)
                    } else {
                        cut_cell_3d(&builder, base)
                    };
                    let Some(piece) = piece else { continue };
                    volume += piece.volume;
                    let parts = piece.corners_inside.len() + piece.crossings.len();
                    let share = piece.volume / T::from_usize_lossy(parts);
                    for &c in &piece.corners_inside {
                        interior_weights[grid_to_interior[c] as usize] += share;
                    }
                    for &b in &piece.crossings {
                        boundary_volume_weights[b as usize] += share;
                    }
                    for (verts, measure) in &piece.facets {
                        area += *measure;
                        facet_count += 1;
                        let each = *measure / T::from_usize_lossy(verts.len());
                        for &v in verts {
                            surface_weights[v as usize] += each;
                        }
                    }
                }
            }
        }
    }
    for (node, w) in boundary.iter_mut().zip(surface_weights) {
        node.weight = w;
    }
    if !(volume > T::zero()) || !(area > T::zero()) {
        return Err(Error::GridTooCoarse);
    }

    Ok(Domain {
        spec: spec.clone(),
        implicit,
        grid,
        levelset,
        interior,
        grid_to_interior,
        boundary,
        arms,
        interior_weights,
        boundary_volume_weights,
        volume,
        area,
        facet_count,
    })
}

impl<T: Real> Domain<T> {
    pub fn spec(&self) -> &DomainSpec<T> {
        &self.spec
    }

    pub fn implicit(&self) -> &Implicit<T> {
        &self.implicit
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn h(&self) -> T {
        self.grid.h
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Levelset values at every grid node.
    pub fn levelset(&self) -> &[T] {
        &self.levelset
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    /// Grid ids of the interior nodes.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Interior index of a grid node, if it is interior.
    pub fn interior_index(&self, grid_id: usize) -> Option<usize> {
        match self.grid_to_interior[grid_id] {
            NONE => None,
            k => Some(k as usize),
        }
    }

    pub fn interior_position(&self, k: usize) -> [T; 3] {
        self.grid.position(self.interior[k])
    }

    pub fn boundary_nodes(&self) -> &[BoundaryNode<T>] {
        &self.boundary
    }

    /// Stencil arms of interior node `k`, slot `2*axis + (dir > 0)`.
    pub fn arms(&self, k: usize) -> &[Arm<T>; 6] {
        &self.arms[k]
    }

    pub fn arm(&self, k: usize, axis: usize, dir: i8) -> Arm<T> {
        self.arms[k][arm_slot(axis, dir)]
    }

    /// |Ω|
    pub fn volume(&self) -> T {
        self.volume
    }

    /// |∂Ω|
    pub fn area(&self) -> T {
        self.area
    }

    pub fn facet_count(&self) -> usize {
        self.facet_count
    }

    pub fn interior_weights(&self) -> &[T] {
        &self.interior_weights
    }

    pub fn boundary_volume_weights(&self) -> &[T] {
        &self.boundary_volume_weights
    }

    /// Volume integral of nodal values (interior then boundary nodes).
    pub fn integrate_nodal(&self, interior: &[T], boundary: &[T]) -> Result<T> {
        check_len(self.interior.len(), interior.len())?;
        check_len(self.boundary.len(), boundary.len())?;
        if interior.iter().chain(boundary).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("volume integrand"));
        }
        let a: T = interior
            .iter()
            .zip(&self.interior_weights)
            .map(|(v, w)| *v * *w)
            .sum();
        let b: T = boundary
            .iter()
            .zip(&self.boundary_volume_weights)
            .map(|(v, w)| *v * *w)
            .sum();
        Ok(a + b)
    }

    /// Surface integral of one value per boundary node.
    pub fn integrate_boundary(&self, values: &[T]) -> Result<T> {
        check_len(self.boundary.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary integrand"));
        }
        Ok(values
            .iter()
            .zip(&self.boundary)
            .map(|(v, b)| *v * b.weight)
            .sum())
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn edge_root_finds_linear_and_curved_crossings() {
        let t = edge_root(|t: f64| t - 0.3, -0.3, 0.7);
        assert!((t - 0.3).abs() < 1e-14);
        let t = edge_root(|t: f64| t * t - 0.5, -0.5, 0.5);
        assert!((t - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(build_domain(&DomainSpec::disk(1.0, 0.0)).is_err());
        assert!(build_domain(&DomainSpec::disk(-1.0, 0.1)).is_err());
        assert!(build_domain(&DomainSpec::annulus(1.0, 0.5, 0.1)).is_err());
        assert!(build_domain(&DomainSpec::levelset("x^2+y^2-1", &[-2.0], &[2.0], 0.1)).is_err());
        assert!(
            build_domain(&DomainSpec::levelset("x+z", &[-2.0, -2.0], &[2.0, 2.0], 0.1)).is_err()
        );
    }

    #[test]
    fn coarse_grid_has_no_interior() {
        let err = build_domain(&DomainSpec::levelset(
            "x^2 + y^2 - 0.0001",
            &[-1.05, -1.05],
            &[1.05, 1.05],
            0.7,
        ))
        .unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse), "{err}");
    }

    #[test]
    fn unbounded_levelset_is_rejected() {
        let err =
            build_domain(&DomainSpec::levelset("y", &[-1.0, -1.0], &[1.0, 1.0], 0.1)).unwrap_err();
        assert!(matches!(err, Error::Unbounded), "{err}");
    }

    #[test]
    fn node_cap_is_enforced() {
        let mut spec = DomainSpec::ball(1.0, 0.01);
        spec.node_cap = None;
        let err = build_domain(&spec).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }), "{err}");
    }

    #[test]
    fn normals_are_unit_and_outward() {
        for spec in [
            DomainSpec::disk(1.0, 0.05),
            DomainSpec::annulus(0.5, 1.0, 0.05),
            DomainSpec::levelset("x^2/4 + y^2 - 1", &[-2.5, -1.5], &[2.5, 1.5], 0.05),
        ] {
            let d: Domain<f64> = build_domain(&spec).unwrap();
            for b in d.boundary_nodes() {
                assert!((vec3::norm(&b.normal) - 1.0).abs() < 1e-12);
                let out = vec3::axpy(&b.position, 1e-3, &b.normal);
                let inn = vec3::axpy(&b.position, -1e-3, &b.normal);
                let f = d.implicit();
                assert!(f.value(&out) > f.value(&inn));
            }
        }
    }

    #[test]
    fn boundary_nodes_lie_on_the_zero_set() {
        let d: Domain<f64> = build_domain(&DomainSpec::ellipse(2.0, 1.0, 0.05)).unwrap();
        for b in d.boundary_nodes() {
            assert!(d.implicit().value(&b.position).abs() < 1e-12);
            assert!(b.frac > 0.0 && b.frac <= 1.0);
            assert!(b.weight > 0.0);
        }
    }

    #[test]
    fn square_saddle_cases() {
        // corners 0 and 2 inside
        let cross = [Some(10), Some(11), Some(12), Some(13)];
        let (segs, polys) = march_square([true, false, true, false], cross, || false);
        assert_eq!(segs, vec![(13, 10), (11, 12)]);
        assert_eq!(polys.len(), 2);
        let (segs, polys) = march_square([true, false, true, false], cross, || true);
        assert_eq!(segs, vec![(10, 11), (12, 13)]);
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].len(), 6);
    }

    #[test]
    fn disk_measures_are_second_order() {
        let err = |h: f64| {
            let d = build_domain(&DomainSpec::disk(1.0, h)).unwrap();
            ((d.volume() - PI).abs(), (d.area() - 2.0 * PI).abs())
        };
        let (v1, a1) = err(0.08);
        let (v2, a2) = err(0.04);
        assert!(v2 < v1 / 2.0 && a2 < a1 / 2.0, "{v1} {v2} {a1} {a2}");
    }

    #[test]
    fn annulus_measures() {
        let d = build_domain(&DomainSpec::annulus(0.5, 1.0, 0.02)).unwrap();
        assert!((d.volume() - 0.75 * PI).abs() < 0.01 * 0.75 * PI);
        assert!((d.area() - 3.0 * PI).abs() < 0.01 * 3.0 * PI);
    }
}
