use nalgebra::{DMatrix, DVector};

use super::{check_dim, GeometryError, Point, GEOMETRIC_TOL};

/// Largest number of constraint subsets examined when enumerating the
/// vertices of an H-polytope.
const MAX_ENUMERATED_SUBSETS: usize = 2_000_000;

/// Closed interval `[lo, hi]` of the real line, `lo < hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Axis-aligned box `lo <= x <= hi` (coordinate-wise).
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lo: Point,
    hi: Point,
}

impl AxisBox {
    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }
}

/// Bounded polyhedron `{y : <a_i, y> <= b_i}` with its vertex set enumerated
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    normals: Vec<Point>,
    offsets: Vec<f64>,
    norms_sq: Vec<f64>,
    vertices: Vec<Point>,
}

impl Polytope {
    pub fn normals(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.normals.len(), self.dim, |i, k| self.normals[i][k])
    }

    pub fn offsets(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.offsets)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Largest scaled constraint violation `max_i (<a_i,x> - b_i) / |a_i|`.
    fn violation(&self, x: &Point) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .zip(&self.norms_sq)
            .map(|((a, b), n2)| (a.dot(x) - b) / n2.sqrt())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn build(normals: &DMatrix<f64>, offsets: &DVector<f64>) -> Result<Self, GeometryError> {
        let (k, m) = normals.shape();
        if m == 0 {
            return Err(GeometryError::InvalidBody("polytope of dimension 0".into()));
        }
        if offsets.len() != k {
            return Err(GeometryError::InvalidBody(format!(
                "{k} normals but {} offsets",
                offsets.len()
            )));
        }
        if k <= m {
            return Err(GeometryError::InvalidBody(format!(
                "{k} half-spaces cannot bound a body in dimension {m}"
            )));
        }
        if normals.iter().chain(offsets.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidBody("non-finite constraint data".into()));
        }
        let rows: Vec<Point> = (0..k).map(|i| normals.row(i).transpose()).collect();
        let norms_sq: Vec<f64> = rows.iter().map(|a| a.norm_squared()).collect();
        if norms_sq.contains(&0.0) {
            return Err(GeometryError::InvalidBody("zero normal vector".into()));
        }
        if binomial(k, m) > MAX_ENUMERATED_SUBSETS {
            return Err(GeometryError::InvalidBody(format!(
                "too many constraints ({k}) to enumerate vertices in dimension {m}"
            )));
        }
        let unit: Vec<Point> = rows
            .iter()
            .zip(&norms_sq)
            .map(|(a, n2)| a / n2.sqrt())
            .collect();
        let unit_offsets: Vec<f64> = offsets
            .iter()
            .zip(&norms_sq)
            .map(|(b, n2)| b / n2.sqrt())
            .collect();

        if let Some(ray) = recession_ray(&unit, m) {
            return Err(GeometryError::InvalidBody(format!(
                "unbounded along direction {:?}",
                ray.as_slice()
            )));
        }

        let mut vertices: Vec<Point> = Vec::new();
        for subset in Combinations::new(k, m) {
            let a = DMatrix::from_fn(m, m, |r, c| unit[subset[r]][c]);
            if a.determinant().abs() <= 1e-10 {
                continue;
            }
            let b = DVector::from_fn(m, |r, _| unit_offsets[subset[r]]);
            let Some(v) = a.lu().solve(&b) else { continue };
            let scale = 1.0 + v.amax();
            let feasible = unit
                .iter()
                .zip(&unit_offsets)
                .all(|(a, b)| a.dot(&v) - b <= GEOMETRIC_TOL * scale);
            if feasible && !vertices.iter().any(|w| (w - &v).amax() <= GEOMETRIC_TOL * scale) {
                vertices.push(v);
            }
        }
        if vertices.is_empty() {
            return Err(GeometryError::InvalidBody("empty feasible set".into()));
        }
        let centroid = vertices.iter().fold(Point::zeros(m), |acc, v| acc + v) / vertices.len() as f64;
        let depth = unit
            .iter()
            .zip(&unit_offsets)
            .map(|(a, b)| b - a.dot(&centroid))
            .fold(f64::INFINITY, f64::min);
        if depth <= GEOMETRIC_TOL {
            return Err(GeometryError::InvalidBody("feasible set has empty interior".into()));
        }
        Ok(Self {
            dim: m,
            normals: rows,
            offsets: offsets.iter().copied().collect(),
            norms_sq,
            vertices,
        })
    }

    /// Least-distance program `min |d|` subject to `<a_i, x + d> <= b_i`,
    /// solved exactly by nonnegative least squares on its dual, then an
    /// active-set polish of the result.
    fn project(&self, x: &Point) -> Result<Point, GeometryError> {
        if self.violation(x) <= 0.0 {
            return Ok(x.clone());
        }
        let (k, m) = (self.normals.len(), self.dim);
        let e = DMatrix::from_fn(m + 1, k, |r, c| {
            let n = self.norms_sq[c].sqrt();
            if r < m {
                -self.normals[c][r] / n
            } else {
                (self.normals[c].dot(x) - self.offsets[c]) / n
            }
        });
        let mut f = DVector::zeros(m + 1);
        f[m] = 1.0;
        let u = nnls(&e, &f).ok_or(GeometryError::ProjectionDidNotConverge {
            cycles: 3 * k,
            residual: self.violation(x),
        })?;
        let r = &e * u - f;
        if r[m].abs() <= f64::EPSILON {
            return Err(GeometryError::ProjectionDidNotConverge { cycles: 3 * k, residual: 1.0 });
        }
        let approx = Point::from_fn(m, |j, _| x[j] - r[j] / r[m]);
        Ok(self.polish(x, approx))
    }

    /// Solves the KKT system on the near-active constraints of `approx`. The
    /// polished point is kept only if it is feasible with nonnegative
    /// multipliers and close to `approx`.
    fn polish(&self, x: &Point, approx: Point) -> Point {
        let scale = 1.0 + approx.amax();
        let active: Vec<usize> = (0..self.normals.len())
            .filter(|&i| {
                (self.offsets[i] - self.normals[i].dot(&approx)) / self.norms_sq[i].sqrt() <= 1e-7 * scale
            })
            .collect();
        if active.is_empty() {
            return approx;
        }
        let a = DMatrix::from_fn(active.len(), self.dim, |r, c| self.normals[active[r]][c]);
        let rhs = DVector::from_fn(active.len(), |r, _| {
            self.normals[active[r]].dot(x) - self.offsets[active[r]]
        });
        let gram = &a * a.transpose();
        let Ok(pinv) = gram.pseudo_inverse(1e-12) else {
            return approx;
        };
        let multipliers = pinv * rhs;
        if multipliers.iter().any(|&mu| mu < -1e-10) {
            return approx;
        }
        let candidate = x - a.transpose() * multipliers;
        if self.violation(&candidate) <= 1e-12 * (1.0 + candidate.amax())
            && (&candidate - &approx).norm() <= 1e-6 * scale
        {
            candidate
        } else {
            approx
        }
    }
}

/// A closed bounded convex set with nonempty interior.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Interval(Interval),
    Ball(Ball),
    Box(AxisBox),
    HPolytope(Polytope),
}

impl ConvexBody {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GeometryError::InvalidBody(format!("interval [{lo}, {hi}]")));
        }
        Ok(Self::Interval(Interval { lo, hi }))
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if center.is_empty() || !center.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidBody("ball center must be a finite vector".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidBody(format!("ball radius {radius}")));
        }
        Ok(Self::Ball(Ball { center, radius }))
    }

    pub fn axis_box(lo: Point, hi: Point) -> Result<Self, GeometryError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(GeometryError::InvalidBody("box corners must share a positive dimension".into()));
        }
        if !lo.iter().zip(hi.iter()).all(|(l, h)| l.is_finite() && h.is_finite() && l < h) {
            return Err(GeometryError::InvalidBody("box requires lo[i] < hi[i]".into()));
        }
        Ok(Self::Box(AxisBox { lo, hi }))
    }

    /// `{y : normals * y <= offsets}`; rejected if empty, unbounded or flat.
    pub fn hpolytope(normals: &DMatrix<f64>, offsets: &DVector<f64>) -> Result<Self, GeometryError> {
        Polytope::build(normals, offsets).map(Self::HPolytope)
    }

    /// The square/cube `[lo, hi]^m` written as an H-polytope.
    pub fn cube_polytope(dim: usize, lo: f64, hi: f64) -> Result<Self, GeometryError> {
        let normals = DMatrix::from_fn(2 * dim, dim, |r, c| match (r / dim == 0, r % dim == c) {
            (true, true) => 1.0,
            (false, true) => -1.0,
            _ => 0.0,
        });
        let offsets = DVector::from_fn(2 * dim, |r, _| if r < dim { hi } else { -lo });
        Self::hpolytope(&normals, &offsets)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval(_) => 1,
            Self::Ball(b) => b.center.len(),
            Self::Box(b) => b.lo.len(),
            Self::HPolytope(p) => p.dim,
        }
    }

    /// Euclidean projection onto the body.
    pub fn project(&self, x: &Point) -> Result<Point, GeometryError> {
        check_dim(self.dim(), x)?;
        Ok(match self {
            Self::Interval(i) => Point::from_element(1, x[0].clamp(i.lo, i.hi)),
            Self::Ball(b) => {
                let offset = x - &b.center;
                let norm = offset.norm();
                if norm <= b.radius {
                    x.clone()
                } else {
                    &b.center + offset * (b.radius / norm)
                }
            }
            Self::Box(b) => Point::from_fn(x.len(), |k, _| x[k].clamp(b.lo[k], b.hi[k])),
            Self::HPolytope(p) => p.project(x)?,
        })
    }

    /// Euclidean distance from `x` to the body.
    pub fn distance(&self, x: &Point) -> Result<f64, GeometryError> {
        check_dim(self.dim(), x)?;
        if self.is_member(x, 0.0) {
            return Ok(0.0);
        }
        Ok((x - self.project(x)?).norm())
    }

    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.distance(x)? <= tol)
    }

    /// Support function `sup_{y in body} <u, y>`.
    pub fn support(&self, u: &Point) -> Result<f64, GeometryError> {
        check_dim(self.dim(), u)?;
        if u.iter().all(|&c| c == 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        Ok(match self {
            Self::Interval(i) => {
                if u[0] >= 0.0 {
                    u[0] * i.hi
                } else {
                    u[0] * i.lo
                }
            }
            Self::Ball(b) => u.dot(&b.center) + b.radius * u.norm(),
            Self::Box(b) => (0..u.len()).map(|k| (u[k] * b.lo[k]).max(u[k] * b.hi[k])).sum(),
            Self::HPolytope(p) => p
                .vertices
                .iter()
                .map(|v| u.dot(v))
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Whether `s` lies in the normal cone of the body at `x`, i.e.
    /// `<s, y - x> <= tol` for every `y` in the body.
    pub fn normal_cone_contains(&self, x: &Point, s: &Point, tol: f64) -> Result<bool, GeometryError> {
        check_dim(self.dim(), s)?;
        let distance = self.distance(x)?;
        if distance > tol {
            return Err(GeometryError::OutsideBody { distance });
        }
        if s.iter().all(|&c| c == 0.0) {
            return Ok(true);
        }
        Ok(self.support(s)? - s.dot(x) <= tol)
    }

    /// Direct membership predicate from the body's defining inequalities
    /// (no projection involved). Points of the wrong dimension are not members.
    pub fn is_member(&self, x: &Point, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Self::Interval(i) => x[0] >= i.lo - tol && x[0] <= i.hi + tol,
            Self::Ball(b) => (x - &b.center).norm() <= b.radius + tol,
            Self::Box(b) => (0..x.len()).all(|k| x[k] >= b.lo[k] - tol && x[k] <= b.hi[k] + tol),
            Self::HPolytope(p) => p.violation(x) <= tol,
        }
    }

    /// Strict interior membership.
    pub fn is_interior(&self, x: &Point) -> bool {
        x.len() == self.dim() && self.depth(x) > 0.0
    }

    /// Signed distance to the boundary, positive inside. For polytopes the
    /// value outside is the largest scaled violation, negated.
    pub fn depth(&self, x: &Point) -> f64 {
        match self {
            Self::Interval(i) => (x[0] - i.lo).min(i.hi - x[0]),
            Self::Ball(b) => b.radius - (x - &b.center).norm(),
            Self::Box(b) => (0..x.len())
                .map(|k| (x[k] - b.lo[k]).min(b.hi[k] - x[k]))
                .fold(f64::INFINITY, f64::min),
            Self::HPolytope(p) => -p.violation(x),
        }
    }

    /// A reference interior point: the center for symmetric bodies, the
    /// vertex centroid for polytopes.
    pub fn center(&self) -> Point {
        match self {
            Self::Interval(i) => Point::from_element(1, 0.5 * (i.lo + i.hi)),
            Self::Ball(b) => b.center.clone(),
            Self::Box(b) => (&b.lo + &b.hi) * 0.5,
            Self::HPolytope(p) => {
                p.vertices.iter().fold(Point::zeros(p.dim), |acc, v| acc + v) / p.vertices.len() as f64
            }
        }
    }

    /// Radius of the largest ball about [`ConvexBody::center`] inside the body.
    pub fn inradius(&self) -> f64 {
        self.depth(&self.center())
    }

    /// Smallest axis-aligned box containing the body.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Self::Interval(i) => (Point::from_element(1, i.lo), Point::from_element(1, i.hi)),
            Self::Ball(b) => (
                b.center.add_scalar(-b.radius),
                b.center.add_scalar(b.radius),
            ),
            Self::Box(b) => (b.lo.clone(), b.hi.clone()),
            Self::HPolytope(p) => {
                let mut lo = p.vertices[0].clone();
                let mut hi = p.vertices[0].clone();
                for v in &p.vertices[1..] {
                    lo = lo.inf(v);
                    hi = hi.sup(v);
                }
                (lo, hi)
            }
        }
    }

    /// `sup_{y in body} |y|`.
    pub fn norm_bound(&self) -> f64 {
        match self {
            Self::Interval(i) => i.lo.abs().max(i.hi.abs()),
            Self::Ball(b) => b.center.norm() + b.radius,
            Self::Box(b) => (0..b.lo.len())
                .map(|k| b.lo[k].abs().max(b.hi[k].abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Self::HPolytope(p) => p.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Extreme points (interval, box, polytope) or a deterministic sample of
    /// the sphere (ball). `circle_points` sets the sample size on planar balls.
    pub fn boundary_samples(&self, circle_points: usize) -> Vec<Point> {
        match self {
            Self::Interval(i) => vec![Point::from_element(1, i.lo), Point::from_element(1, i.hi)],
            Self::Box(b) => {
                let m = b.lo.len().min(16);
                (0..1usize << m)
                    .map(|mask| {
                        Point::from_fn(b.lo.len(), |k, _| {
                            if k < m && mask >> k & 1 == 1 {
                                b.hi[k]
                            } else {
                                b.lo[k]
                            }
                        })
                    })
                    .collect()
            }
            Self::HPolytope(p) => p.vertices.clone(),
            Self::Ball(b) => {
                let m = b.center.len();
                let mut out = Vec::new();
                if m == 1 {
                    out.push(b.center.add_scalar(-b.radius));
                    out.push(b.center.add_scalar(b.radius));
                } else if m == 2 {
                    let count = circle_points.max(4);
                    for s in 0..count {
                        let angle = std::f64::consts::TAU * s as f64 / count as f64;
                        out.push(&b.center + Point::from_vec(vec![angle.cos(), angle.sin()]) * b.radius);
                    }
                } else {
                    let diag = b.radius / std::f64::consts::SQRT_2;
                    for k in 0..m {
                        for sign in [-1.0, 1.0] {
                            let mut p = b.center.clone();
                            p[k] += sign * b.radius;
                            out.push(p);
                        }
                        for l in k + 1..m {
                            for (sk, sl) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                                let mut p = b.center.clone();
                                p[k] += sk * diag;
                                p[l] += sl * diag;
                                out.push(p);
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

/// Looks for a nonzero `d` with `<a_i, d> <= 0` for all rows. Extreme rays of
/// a pointed recession cone have `m - 1` independent active constraints, and
/// a rank-deficient system has a whole line of them.
/// Lawson-Hanson active-set solution of `min |e u - f|` over `u >= 0`.
fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> Option<DVector<f64>> {
    let n = e.ncols();
    let tol = 1e-13 * (1.0 + e.amax()) * (1.0 + f.amax());
    let mut u = DVector::zeros(n);
    let mut passive = vec![false; n];
    let solve = |passive: &[bool]| -> Option<DVector<f64>> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(e.nrows(), cols.len(), |r, c| e[(r, cols[c])]);
        let z = sub.svd(true, true).solve(f, 1e-14).ok()?;
        let mut full = DVector::zeros(n);
        for (c, &j) in cols.iter().enumerate() {
            full[j] = z[c];
        }
        Some(full)
    };
    for _ in 0..3 * n.max(1) {
        let w = e.transpose() * (f - e * &u);
        let Some(t) = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
        else {
            return Some(u);
        };
        passive[t] = true;
        loop {
            let z = solve(&passive)?;
            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                u = z;
                break;
            }
            let alpha = (0..n)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| u[j] / (u[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            u += (z - &u) * alpha;
            for j in 0..n {
                if passive[j] && u[j] <= tol {
                    passive[j] = false;
                    u[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    None
}

fn recession_ray(unit_rows: &[Point], m: usize) -> Option<Point> {
    let admissible = |d: &Point| unit_rows.iter().all(|a| a.dot(d) <= 1e-12);
    if m == 1 {
        let d = Point::from_element(1, 1.0);
        return [d.clone(), -d].into_iter().find(|d| admissible(d));
    }
    let full = DMatrix::from_fn(unit_rows.len(), m, |r, c| unit_rows[r][c]);
    if full.rank(1e-10) < m {
        let svd = full.svd(false, true);
        let v_t = svd.v_t?;
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        return Some(v_t.row(idx).transpose());
    }
    for subset in Combinations::new(unit_rows.len(), m - 1) {
        let sub = DMatrix::from_fn(m - 1, m, |r, c| unit_rows[subset[r]][c]);
        let d = generalized_cross(&sub);
        let norm = d.norm();
        if norm <= 1e-10 {
            continue;
        }
        let d = d / norm;
        if admissible(&d) {
            return Some(d);
        }
        if admissible(&-&d) {
            return Some(-d);
        }
    }
    None
}

/// Vector orthogonal to the `m - 1` rows of `rows` (cofactor expansion).
fn generalized_cross(rows: &DMatrix<f64>) -> Point {
    let m = rows.ncols();
    Point::from_fn(m, |c, _| {
        let minor = rows.clone().remove_column(c);
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n.saturating_sub(k));
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
