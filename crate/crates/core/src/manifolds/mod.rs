//! Sphere quotients `S^q / G` for finite abelian groups `G` of isometries
//! acting freely: deck groups, the covering map, distances modulo `G`, and
//! the first-order kinematics (tangent projection, retraction) used by the
//! descent solver.

pub mod qtensor;

pub use qtensor::{project_to_target, Projection, QTensor};

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const GROUP_TOL: f64 = 1e-12;
const MARGIN_FACTOR: f64 = 1.05;

/// An orthogonal map of `R^dim`, stored densely (row-major).
///
/// Maps of the form `s * I` also keep the scalar so hot loops can skip the
/// matrix product.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    dim: usize,
    matrix: Vec<f64>,
    scalar: Option<f64>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, s: f64) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = s;
        }
        Isometry { dim, matrix, scalar: Some(s) }
    }

    /// Builds an isometry from a row-major matrix, rejecting non-orthogonal input.
    pub fn from_matrix(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::Invalid(format!(
                "isometry needs {} entries, got {}",
                dim * dim,
                matrix.len()
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                let dot: f64 = (0..dim).map(|k| matrix[k * dim + i] * matrix[k * dim + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(Error::Invalid("deck element is not orthogonal".into()));
                }
            }
        }
        let scalar = detect_scalar(dim, &matrix);
        Ok(Isometry { dim, matrix, scalar })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn as_scalar(&self) -> Option<f64> {
        self.scalar
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self.scalar {
            Some(s) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = s * xi;
                }
            }
            None => {
                let d = self.dim;
                for i in 0..d {
                    let row = &self.matrix[i * d..(i + 1) * d];
                    out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Applies the inverse (the transpose, since the map is orthogonal).
    #[inline]
    pub fn apply_inverse(&self, x: &[f64], out: &mut [f64]) {
        match self.scalar {
            Some(s) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = s * xi;
                }
            }
            None => {
                let d = self.dim;
                for (i, o) in out.iter_mut().enumerate().take(d) {
                    *o = (0..d).map(|k| self.matrix[k * d + i] * x[k]).sum();
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply(x, &mut out);
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = (0..d).map(|k| self.matrix[i * d + k] * other.matrix[k * d + j]).sum();
            }
        }
        let scalar = detect_scalar(d, &m);
        Isometry { dim: d, matrix: m, scalar }
    }

    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        self.dim == other.dim && self.matrix.iter().zip(&other.matrix).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn determinant_minus_identity(&self) -> f64 {
        let d = self.dim;
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.matrix[i * d + j] - if i == j { 1.0 } else { 0.0 });
        m.determinant()
    }
}

fn detect_scalar(dim: usize, m: &[f64]) -> Option<f64> {
    let s = m[0];
    for i in 0..dim {
        for j in 0..dim {
            let want = if i == j { s } else { 0.0 };
            if m[i * dim + j] != want {
                return None;
            }
        }
    }
    Some(s)
}

/// A finite abelian group of isometries of `S^q` acting freely.
#[derive(Debug, Clone, PartialEq)]
pub struct DeckGroup {
    elements: Vec<Isometry>,
    table: Vec<usize>,
    inverse: Vec<usize>,
    identity: usize,
}

impl DeckGroup {
    pub fn trivial(dim: usize) -> Self {
        DeckGroup { elements: vec![Isometry::identity(dim)], table: vec![0], inverse: vec![0], identity: 0 }
    }

    /// Closes the generators under composition. Element 0 is the identity;
    /// the rest appear in breadth-first order of words in the generators.
    pub fn generated_by(dim: usize, generators: &[Isometry]) -> Result<Self> {
        let mut elements = vec![Isometry::identity(dim)];
        let mut frontier = 0;
        while frontier < elements.len() {
            for g in generators {
                if g.dim != dim {
                    return Err(Error::Invalid("generator dimension mismatch".into()));
                }
                let candidate = g.compose(&elements[frontier]);
                if !elements.iter().any(|e| e.approx_eq(&candidate, GROUP_TOL)) {
                    elements.push(candidate);
                    if elements.len() > 256 {
                        return Err(Error::Invalid("deck group is too large (order > 256)".into()));
                    }
                }
            }
            frontier += 1;
        }
        Self::from_elements(elements)
    }

    fn from_elements(elements: Vec<Isometry>) -> Result<Self> {
        let n = elements.len();
        let find = |m: &Isometry| elements.iter().position(|e| e.approx_eq(m, 1e-9));
        let mut table = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                let c = elements[a].compose(&elements[b]);
                table[a * n + b] = find(&c).ok_or_else(|| Error::Invalid("deck group is not closed".into()))?;
            }
        }
        let identity = (0..n)
            .find(|&i| elements[i].approx_eq(&Isometry::identity(elements[0].dim), 1e-12))
            .ok_or_else(|| Error::Invalid("deck group lacks the identity".into()))?;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| table[a * n + b] == identity)
                .ok_or_else(|| Error::Invalid("deck element without inverse".into()))?;
        }
        let group = DeckGroup { elements, table, inverse, identity };
        group.verify()?;
        Ok(group)
    }

    /// Checks the group axioms, commutativity and freeness of the action.
    pub fn verify(&self) -> Result<()> {
        let n = self.order();
        for a in 0..n {
            if self.compose(self.identity, a) != a || self.compose(a, self.identity) != a {
                return Err(Error::Invalid("identity law fails".into()));
            }
            if self.compose(a, self.inverse(a)) != self.identity {
                return Err(Error::Invalid("inverse law fails".into()));
            }
            for b in 0..n {
                if self.compose(a, b) != self.compose(b, a) {
                    return Err(Error::Invalid("deck group is not abelian".into()));
                }
                for c in 0..n.min(8) {
                    let l = self.compose(self.compose(a, b), c);
                    let r = self.compose(a, self.compose(b, c));
                    if l != r {
                        return Err(Error::Invalid("associativity fails".into()));
                    }
                }
            }
        }
        let dim = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for (i, g) in self.elements.iter().enumerate() {
            if i == self.identity {
                continue;
            }
            // A fixed point on the sphere is an eigenvector for eigenvalue 1.
            if g.determinant_minus_identity().abs() < 1e-9 {
                return Err(Error::Invalid(format!("deck element {i} has a fixed point")));
            }
            for _ in 0..64 {
                let x = random_unit(&mut rng, dim);
                let gx = g.apply_vec(&x);
                if dist2(&gx, &x) <= 0.0 {
                    return Err(Error::Invalid(format!("deck element {i} fixes a sampled point")));
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn element(&self, i: usize) -> &Isometry {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Isometry] {
        &self.elements
    }

    /// Index of `a ∘ b`.
    #[inline]
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.table[a * self.elements.len() + b]
    }

    #[inline]
    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }
}

/// A target manifold `N = S^q / G`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientTarget {
    name: String,
    q: usize,
    group: DeckGroup,
    threshold: f64,
}

impl QuotientTarget {
    pub fn new(name: impl Into<String>, q: usize, group: DeckGroup) -> Result<Self> {
        if q < 2 {
            return Err(Error::Invalid(format!("sphere dimension q = {q} must be at least 2")));
        }
        if group.dim() != q + 1 {
            return Err(Error::Invalid("deck group acts on the wrong ambient dimension".into()));
        }
        if q.is_multiple_of(2) && group.order() > 2 {
            return Err(Error::Invalid(format!(
                "a free action on an even-dimensional sphere has order 1 or 2, got {}",
                group.order()
            )));
        }
        let threshold = resolution_threshold(&group);
        Ok(QuotientTarget { name: name.into(), q, group, threshold })
    }

    /// Real projective plane: `S^2` modulo the antipodal map.
    pub fn rp2() -> Self {
        let g = DeckGroup::generated_by(3, &[Isometry::scalar(3, -1.0)]).expect("antipodal group");
        Self::new("RP2", 2, g).expect("RP2 target")
    }

    /// `S^3` modulo the order-4 map `(x1,x2,x3,x4) -> (-x2,x1,-x4,x3)`.
    pub fn s3_mod_z4() -> Self {
        #[rustfmt::skip]
        let m = vec![
            0.0, -1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        let gen = Isometry::from_matrix(4, m).expect("orthogonal");
        let g = DeckGroup::generated_by(4, &[gen]).expect("cyclic group");
        Self::new("S3modZ4", 3, g).expect("S3modZ4 target")
    }

    /// The sphere itself (trivial deck group).
    pub fn sphere(q: usize) -> Self {
        Self::new(format!("S{q}"), q, DeckGroup::trivial(q + 1)).expect("sphere target")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "RP2" => Ok(Self::rp2()),
            "S3modZ4" => Ok(Self::s3_mod_z4()),
            "S2" => Ok(Self::sphere(2)),
            "S3" => Ok(Self::sphere(3)),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Dimension of the ambient space of the covering sphere.
    pub fn ambient_dim(&self) -> usize {
        self.q + 1
    }

    pub fn group(&self) -> &DeckGroup {
        &self.group
    }

    pub fn is_rp2(&self) -> bool {
        self.name == "RP2"
    }

    /// Edge-transport thresholds `(tau, tau')`: an edge is resolved when the
    /// nearest lift is closer than `tau` and the runner-up farther than `tau'`.
    pub fn resolution_thresholds(&self) -> (f64, f64) {
        (self.threshold, MARGIN_FACTOR * self.threshold)
    }

    /// Replaces `v` with the lexicographically largest member of its orbit.
    pub fn canonicalize(&self, v: &mut [f64]) {
        let d = v.len();
        if self.group.order() > 1 {
            let mut best = [0.0f64; 8];
            let mut cand = [0.0f64; 8];
            best[..d].copy_from_slice(v);
            for (i, g) in self.group.elements.iter().enumerate() {
                if i == self.group.identity {
                    continue;
                }
                g.apply(v, &mut cand[..d]);
                if lex_greater(&cand[..d], &best[..d]) {
                    best[..d].copy_from_slice(&cand[..d]);
                }
            }
            v.copy_from_slice(&best[..d]);
        }
        for x in v.iter_mut() {
            // Collapse -0.0 so equal orbits have equal bytes.
            *x += 0.0;
        }
    }

    /// Squared chordal distance from the nearest lift of `a` to `b`, the
    /// minimising deck element and the runner-up squared distance.
    #[inline]
    pub fn nearest_lift(&self, a: &[f64], b: &[f64]) -> (f64, usize, f64) {
        let d = a.len();
        if self.group.order() == 1 {
            return (dist2(a, b), 0, f64::INFINITY);
        }
        let aa: f64 = a.iter().map(|x| x * x).sum();
        let bb: f64 = b.iter().map(|x| x * x).sum();
        let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let mut best = (f64::INFINITY, 0usize);
        let mut second = f64::INFINITY;
        let mut buf = [0.0f64; 8];
        for (i, g) in self.group.elements.iter().enumerate() {
            let d2 = match g.scalar {
                Some(s) => s * s * aa - 2.0 * s * ab + bb,
                None => {
                    g.apply(a, &mut buf[..d]);
                    dist2(&buf[..d], b)
                }
            };
            if d2 < best.0 {
                second = best.0;
                best = (d2, i);
            } else if d2 < second {
                second = d2;
            }
        }
        (best.0.max(0.0), best.1, second.max(0.0))
    }
}

fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Largest chordal threshold `tau` for which "nearest lift closer than tau"
/// already forces every other lift beyond `1.05 tau`.
///
/// With minimal angular displacement `D` between distinct lifts, the
/// spherical triangle inequality puts the runner-up at angle `>= D - t` when
/// the nearest lift is at angle `t`; the threshold solves
/// `sin((D - t)/2) = 1.05 sin(t/2)`.
fn resolution_threshold(group: &DeckGroup) -> f64 {
    if group.order() == 1 {
        return 2.0 + 1e-12;
    }
    let dim = group.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0xdec);
    let mut min_angle = std::f64::consts::PI;
    for (i, g) in group.elements.iter().enumerate() {
        if i == group.identity {
            continue;
        }
        for _ in 0..256 {
            let x = random_unit(&mut rng, dim);
            let gx = g.apply_vec(&x);
            let minus = dist2(&x, &gx).sqrt();
            let plus = x.iter().zip(&gx).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
            min_angle = min_angle.min(2.0 * minus.atan2(plus));
        }
    }
    let f = |t: f64| ((min_angle - t) / 2.0).sin() - MARGIN_FACTOR * (t / 2.0).sin();
    let (mut lo, mut hi) = (0.0, min_angle);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * (lo / 2.0).sin()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The orbit `{g(n)}` of a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub canonical: Vec<f64>,
    pub members: Vec<Vec<f64>>,
}

impl Orbit {
    /// The Q-tensor image, for orbits in the projective plane.
    pub fn q_tensor(&self) -> Option<QTensor> {
        if self.canonical.len() == 3 && self.members.len() == 2 {
            QTensor::from_director(&self.canonical).ok()
        } else {
            None
        }
    }
}

fn unit_input(n: &[f64], dim: usize) -> Result<Vec<f64>> {
    if n.len() != dim {
        return Err(Error::Invalid(format!("expected a vector in R^{dim}, got length {}", n.len())));
    }
    let r = norm(n);
    if !(r >= 1e-6) {
        return Err(Error::Normalization { norm: r });
    }
    if (r - 1.0).abs() <= 1e-9 {
        Ok(n.to_vec())
    } else {
        Ok(n.iter().map(|x| x / r).collect())
    }
}

/// Orbit of `n` under the deck group, with its canonical representative.
pub fn covering_map(n: &[f64], target: &QuotientTarget) -> Result<Orbit> {
    let n = unit_input(n, target.ambient_dim())?;
    let members: Vec<Vec<f64>> = target.group.elements.iter().map(|g| g.apply_vec(&n)).collect();
    let mut canonical = n;
    target.canonicalize(&mut canonical);
    Ok(Orbit { canonical, members })
}

/// Chordal distance between orbits and a deck element `g` with `|g(a) - b|` minimal.
pub fn orbit_distance(a: &[f64], b: &[f64], target: &QuotientTarget) -> (f64, usize) {
    let (d2, g, _) = target.nearest_lift(a, b);
    (d2.sqrt(), g)
}

/// Component of `w` tangent to the sphere at `n`.
pub fn tangent_project(n: &[f64], w: &[f64]) -> Vec<f64> {
    let c = dot(n, w);
    w.iter().zip(n).map(|(wi, ni)| wi - c * ni).collect()
}

/// `(n + w) / |n + w|`.
pub fn retract(n: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = n.iter().zip(w).map(|(a, b)| a + b).collect();
    let r = norm(&out);
    if !(r >= 1e-9) {
        return Err(Error::StepTooLarge { norm: r });
    }
    out.iter_mut().for_each(|x| *x /= r);
    Ok(out)
}
