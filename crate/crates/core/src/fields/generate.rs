//! Analytic and random test fields.

use super::DirectorField;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::manifolds::{norm, QuotientTarget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant,
    Random,
    /// `v = normalise(e + Σ a_m sin(ω_m·x + c_m))` with `Σ |a_m| < 1`.
    SmoothRandom,
    Hedgehog,
    Vortex2d,
    VortexLine3d,
    /// Director `(cos kθ, sin kθ, 0)` around a line along the last axis.
    Disclination { charge: f64 },
    /// Degree `+1` at `P_j`, `-1` at `Q_j`, with `P_j - Q_j = (2^-j π, 0, 0)`.
    DipoleChain { pairs: usize },
}

impl FieldKind {
    /// Parses `constant`, `random`, `smooth-random`, `hedgehog`, `vortex2d`,
    /// `vortex-line-3d`, `disclination(±1/2)` and `dipole-chain(n)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            _ => (s, None),
        };
        let kind = match name {
            "constant" => FieldKind::Constant,
            "random" => FieldKind::Random,
            "smooth-random" => FieldKind::SmoothRandom,
            "hedgehog" => FieldKind::Hedgehog,
            "vortex2d" => FieldKind::Vortex2d,
            "vortex-line-3d" => FieldKind::VortexLine3d,
            "disclination" => FieldKind::Disclination { charge: arg.map(parse_fraction).transpose()?.unwrap_or(0.5) },
            "dipole-chain" => FieldKind::DipoleChain {
                pairs: arg
                    .map(|a| a.trim().parse::<usize>().map_err(|_| Error::Invalid(format!("bad pair count `{a}`"))))
                    .transpose()?
                    .unwrap_or(1),
            },
            _ => return Err(Error::UnknownKind(s.to_string())),
        };
        if arg.is_some() && !matches!(kind, FieldKind::Disclination { .. } | FieldKind::DipoleChain { .. }) {
            return Err(Error::UnknownKind(s.to_string()));
        }
        Ok(kind)
    }

    pub fn label(&self) -> String {
        match self {
            FieldKind::Constant => "constant".into(),
            FieldKind::Random => "random".into(),
            FieldKind::SmoothRandom => "smooth-random".into(),
            FieldKind::Hedgehog => "hedgehog".into(),
            FieldKind::Vortex2d => "vortex2d".into(),
            FieldKind::VortexLine3d => "vortex-line-3d".into(),
            FieldKind::Disclination { charge } => format!("disclination({charge})"),
            FieldKind::DipoleChain { pairs } => format!("dipole-chain({pairs})"),
        }
    }
}

fn parse_fraction(s: &str) -> Result<f64> {
    let s = s.trim().trim_start_matches('+');
    let bad = || Error::Invalid(format!("bad charge `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    /// Value of constant fields.
    pub direction: Vec<f64>,
    pub seed: u64,
    /// Defect location; defaults to the grid center moved off the nodes.
    pub center: Option<[f64; 3]>,
    /// Bubble radius of dipole chains, default `3h`.
    pub support: Option<f64>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { direction: vec![0.0, 0.0, 1.0], seed: 0, center: None, support: None }
    }
}

/// Where a generated field is singular.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularLocus {
    Point([f64; 3]),
    /// Straight line through `point` along `direction`.
    Line { point: [f64; 3], direction: [f64; 3] },
}

impl SingularLocus {
    pub fn distance(&self, x: &[f64; 3]) -> f64 {
        match self {
            SingularLocus::Point(p) => (0..3).map(|a| (x[a] - p[a]).powi(2)).sum::<f64>().sqrt(),
            SingularLocus::Line { point, direction } => {
                let d: [f64; 3] = std::array::from_fn(|a| x[a] - point[a]);
                let along: f64 = (0..3).map(|a| d[a] * direction[a]).sum();
                (0..3).map(|a| (d[a] - along * direction[a]).powi(2)).sum::<f64>().max(0.0).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub field: DirectorField,
    pub loci: Vec<SingularLocus>,
}

/// Grid center, shifted by half a node along every axis on which it falls on
/// a node, so singular points and lines sit strictly inside cells.
pub fn default_center(grid: &GridSpec) -> [f64; 3] {
    let mut c = grid.center();
    let n = grid.n();
    for a in 0..grid.dims() {
        if n[a] % 2 == 1 {
            c[a] += 0.5 * grid.h();
        }
    }
    c
}

fn check_off_nodes(grid: &GridSpec, loci: &[SingularLocus]) -> Result<()> {
    for l in loci {
        let p = match l {
            SingularLocus::Point(p) => *p,
            SingularLocus::Line { point, .. } => *point,
        };
        let dims = match l {
            SingularLocus::Point(_) => grid.dims(),
            SingularLocus::Line { .. } => 2,
        };
        let o = grid.origin();
        let on_node = (0..dims).all(|a| {
            let f = (p[a] - o[a]) / grid.h();
            (f - f.round()).abs() < 1e-9
        });
        if on_node {
            return Err(Error::Invalid(format!("singular locus at {p:?} sits on a grid node")));
        }
    }
    Ok(())
}

fn need_ambient(target: &QuotientTarget, m: usize, kind: &FieldKind) -> Result<()> {
    if target.ambient_dim() != m {
        return Err(Error::Invalid(format!("{} needs a target in R^{m}, got {}", kind.label(), target.name())));
    }
    Ok(())
}

fn need_dims(grid: &GridSpec, d: usize, kind: &FieldKind) -> Result<()> {
    if grid.dims() != d {
        return Err(Error::Invalid(format!("{} needs a {d}D grid", kind.label())));
    }
    Ok(())
}

/// Samples a test field of the given kind.
pub fn generate(kind: &FieldKind, params: &GeneratorParams, grid: &GridSpec, target: &QuotientTarget) -> Result<Generated> {
    let grid = grid.clone();
    let target = target.clone();
    let m = target.ambient_dim();
    let c = params.center.unwrap_or_else(|| default_center(&grid));
    let dims = grid.dims();
    let (field, loci) = match kind {
        FieldKind::Constant => {
            if params.direction.len() != m {
                return Err(Error::Invalid(format!("constant direction needs {m} components")));
            }
            (DirectorField::constant(grid, target, &params.direction)?, vec![])
        }
        FieldKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let n = grid.node_count();
            let mut values = Vec::with_capacity(n * m);
            for _ in 0..n {
                loop {
                    let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let r = norm(&v);
                    if r > 1e-6 {
                        values.extend(v.iter().map(|x| x / r));
                        break;
                    }
                }
            }
            (DirectorField::new(grid, target, values)?, vec![])
        }
        FieldKind::SmoothRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let base: Vec<f64> = {
                let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                let r = norm(&v).max(1e-6);
                v.iter().map(|x| x / r).collect()
            };
            let modes: Vec<(Vec<f64>, [f64; 3], f64)> = (0..3)
                .map(|_| {
                    let amp: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.3..0.3) / (m as f64).sqrt()).collect();
                    let freq = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                    (amp, freq, rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            let f = DirectorField::from_fn(grid, target, |x| {
                let mut v = base.clone();
                for (amp, w, ph) in &modes {
                    let s = (w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + ph).sin();
                    for (vi, ai) in v.iter_mut().zip(amp) {
                        *vi += ai * s;
                    }
                }
                v
            })?;
            (f, vec![])
        }
        FieldKind::Hedgehog => {
            need_dims(&grid, 3, kind)?;
            need_ambient(&target, 3, kind)?;
            let loci = vec![SingularLocus::Point(c)];
            check_off_nodes(&grid, &loci)?;
            (DirectorField::from_fn(grid, target, |x| vec![x[0] - c[0], x[1] - c[1], x[2] - c[2]])?, loci)
        }
        FieldKind::Vortex2d | FieldKind::VortexLine3d => {
            need_dims(&grid, if *kind == FieldKind::Vortex2d { 2 } else { 3 }, kind)?;
            need_ambient(&target, 3, kind)?;
            let loci = vec![axis_locus(c, dims)];
            check_off_nodes(&grid, &loci)?;
            (DirectorField::from_fn(grid, target, |x| vec![x[0] - c[0], x[1] - c[1], 0.0])?, loci)
        }
        FieldKind::Disclination { charge } => {
            need_ambient(&target, 3, kind)?;
            let k = *charge;
            if k == 0.0 || (2.0 * k - (2.0 * k).round()).abs() > 1e-12 {
                return Err(Error::Invalid(format!("disclination charge {k} must be a nonzero multiple of 1/2")));
            }
            if (k - k.round()).abs() > 1e-12 && target.group().order() != 2 {
                return Err(Error::Invalid("half-integer disclinations need the projective-plane target".into()));
            }
            let loci = vec![axis_locus(c, dims)];
            check_off_nodes(&grid, &loci)?;
            let f = DirectorField::from_fn(grid, target, |x| {
                let th = (x[1] - c[1]).atan2(x[0] - c[0]);
                vec![(k * th).cos(), (k * th).sin(), 0.0]
            })?;
            (f, loci)
        }
        FieldKind::DipoleChain { pairs } => {
            need_dims(&grid, 3, kind)?;
            need_ambient(&target, 3, kind)?;
            dipole_chain(grid, target, *pairs, params.support)?
        }
    };
    Ok(Generated { field, loci })
}

fn axis_locus(c: [f64; 3], dims: usize) -> SingularLocus {
    if dims == 2 {
        SingularLocus::Point([c[0], c[1], 0.0])
    } else {
        SingularLocus::Line { point: c, direction: [0.0, 0.0, 1.0] }
    }
}

/// One dipole: `Q` with `P = Q + (length, 0, 0)`.
#[derive(Debug, Clone, Copy)]
struct Dipole {
    q: [f64; 3],
    length: f64,
}

impl Dipole {
    fn p(&self) -> [f64; 3] {
        [self.q[0] + self.length, self.q[1], self.q[2]]
    }

    fn axis_distance(&self, x: &[f64; 3]) -> f64 {
        let s = (x[0] - self.q[0]).clamp(0.0, self.length);
        ((x[0] - self.q[0] - s).powi(2) + (x[1] - self.q[1]).powi(2) + (x[2] - self.q[2]).powi(2)).sqrt()
    }
}

/// Bubble of degree `+1` at `P` and `-1` at `Q`: the polar angle sweeps the
/// difference of the angles seen from `P` and from `Q` against `+x`, damped
/// to the north pole outside a capsule of radius `support` around `[Q, P]`.
fn dipole_value(d: &Dipole, support: f64, x: &[f64; 3]) -> Option<[f64; 3]> {
    let dist = d.axis_distance(x);
    if dist >= support {
        return None;
    }
    let angle_from = |o: [f64; 3]| {
        let v = [x[0] - o[0], x[1] - o[1], x[2] - o[2]];
        let r = (v[1] * v[1] + v[2] * v[2]).sqrt();
        r.atan2(v[0])
    };
    let big = angle_from(d.p()) - angle_from(d.q);
    let s = ((dist - 0.5 * support) / (0.5 * support)).clamp(0.0, 1.0);
    let cut = 0.5 * (1.0 + (PI * s).cos());
    let polar = cut * big;
    let az = (x[2] - d.q[2]).atan2(x[1] - d.q[1]);
    Some([polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()])
}

fn dipole_chain(
    grid: GridSpec,
    target: QuotientTarget,
    pairs: usize,
    support: Option<f64>,
) -> Result<(DirectorField, Vec<SingularLocus>)> {
    if pairs == 0 {
        return Err(Error::Invalid("dipole chain needs at least one pair".into()));
    }
    let h = grid.h();
    let support = support.unwrap_or(3.0 * h);
    let o = grid.origin();
    let n = grid.n();
    let mid = grid.center();
    let spacing = (2.0 * support).max(8.0 * h);
    let mut dipoles = Vec::with_capacity(pairs);
    for j in 1..=pairs {
        let length = PI / f64::from(1u32 << j.min(30));
        // Pick fractional offsets inside the cells so both ends stay at least
        // h/4 away from every cell face.
        let mut f = (length / h).fract();
        if f > 0.5 {
            f -= 1.0;
        }
        let off = 0.5 - 0.5 * f;
        let start_idx = (((mid[0] - 0.5 * length) - o[0]) / h).floor();
        let qx = o[0] + (start_idx + off) * h;
        let row = j as f64 - 0.5 * (pairs as f64 + 1.0);
        let yc = ((mid[1] + row * spacing - o[1]) / h).floor();
        let zc = ((mid[2] - o[2]) / h).floor();
        let q = [qx, o[1] + (yc + 0.5) * h, o[2] + (zc + 0.5) * h];
        dipoles.push(Dipole { q, length });
    }
    for (i, d) in dipoles.iter().enumerate() {
        for e in &dipoles[i + 1..] {
            // Segments are parallel to x, so the gap is the transverse offset
            // once their x-ranges overlap.
            let gap_x = if d.q[0] > e.q[0] + e.length {
                d.q[0] - e.q[0] - e.length
            } else if e.q[0] > d.q[0] + d.length {
                e.q[0] - d.q[0] - d.length
            } else {
                0.0
            };
            let gap = (gap_x.powi(2) + (d.q[1] - e.q[1]).powi(2) + (d.q[2] - e.q[2]).powi(2)).sqrt();
            if gap < 2.0 * support {
                return Err(Error::Invalid("dipole supports overlap; use a finer grid or fewer pairs".into()));
            }
        }
        for end in [d.q, d.p()] {
            for a in 0..3 {
                let hi = o[a] + (n[a] - 1) as f64 * h;
                let x = if a == 0 { end[0] } else { d.q[a] };
                if x - support < o[a] || x + support > hi {
                    return Err(Error::Invalid("dipole support leaves the grid".into()));
                }
            }
        }
    }
    let mut loci = Vec::new();
    for d in &dipoles {
        loci.push(SingularLocus::Point(d.p()));
        loci.push(SingularLocus::Point(d.q));
    }
    check_off_nodes(&grid, &loci)?;
    let field = DirectorField::from_fn(grid, target, |x| {
        for d in &dipoles {
            if let Some(v) = dipole_value(d, support, &x) {
                return v.to_vec();
            }
        }
        vec![0.0, 0.0, 1.0]
    })?;
    Ok((field, loci))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainShape;

    #[test]
    fn parses_kinds() {
        assert_eq!(FieldKind::parse("disclination(+1/2)").unwrap(), FieldKind::Disclination { charge: 0.5 });
        assert_eq!(FieldKind::parse("disclination(-1/2)").unwrap(), FieldKind::Disclination { charge: -0.5 });
        assert_eq!(FieldKind::parse("dipole-chain(3)").unwrap(), FieldKind::DipoleChain { pairs: 3 });
        assert!(matches!(FieldKind::parse("swirl"), Err(Error::UnknownKind(_))));
        assert!(FieldKind::parse("hedgehog(2)").is_err());
    }

    #[test]
    fn constant_field_is_constant() {
        let g = GridSpec::centered(3, 8, 1.0, DomainShape::Box).unwrap();
        let f = generate(&FieldKind::Constant, &GeneratorParams::default(), &g, &QuotientTarget::rp2()).unwrap();
        assert!(f.field.values().chunks(3).all(|v| v == [0.0, 0.0, 1.0]));
    }

    #[test]
    fn hedgehog_matches_formula() {
        let g = GridSpec::centered(3, 9, 1.0, DomainShape::Ball).unwrap();
        let t = QuotientTarget::sphere(2);
        let gen = generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &t).unwrap();
        let c = default_center(&g);
        assert!((c[0] - 0.125).abs() < 1e-15);
        let i = g.index([2, 7, 4]);
        let x = g.position(i);
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        for a in 0..3 {
            assert!((gen.field.value(i)[a] - d[a] / r).abs() < 1e-15);
        }
    }

    #[test]
    fn random_fields_are_reproducible() {
        let g = GridSpec::centered(2, 10, 1.0, DomainShape::Box).unwrap();
        let p = GeneratorParams { seed: 4, ..Default::default() };
        let a = generate(&FieldKind::Random, &p, &g, &QuotientTarget::s3_mod_z4()).unwrap();
        let b = generate(&FieldKind::Random, &p, &g, &QuotientTarget::s3_mod_z4()).unwrap();
        assert_eq!(a.field, b.field);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let g = GridSpec::centered(2, 10, 1.0, DomainShape::Box).unwrap();
        assert!(generate(&FieldKind::Hedgehog, &GeneratorParams::default(), &g, &QuotientTarget::rp2()).is_err());
        let g3 = GridSpec::centered(3, 10, 1.0, DomainShape::Box).unwrap();
        assert!(generate(&FieldKind::Vortex2d, &GeneratorParams::default(), &g3, &QuotientTarget::rp2()).is_err());
        let half = FieldKind::Disclination { charge: 0.5 };
        assert!(generate(&half, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2)).is_err());
    }

    #[test]
    fn dipole_ends_stay_inside_cells() {
        let g = GridSpec::centered(3, 40, 1.0, DomainShape::Box).unwrap();
        let gen = generate(&FieldKind::DipoleChain { pairs: 3 }, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2)).unwrap();
        assert_eq!(gen.loci.len(), 6);
        for l in &gen.loci {
            let SingularLocus::Point(p) = l else { panic!() };
            for a in 0..3 {
                let f = ((p[a] - g.origin()[a]) / g.h()).fract();
                assert!((0.25 - 1e-12..=0.75 + 1e-12).contains(&f), "axis {a}: offset {f}");
            }
        }
        let SingularLocus::Point(p1) = gen.loci[0] else { panic!() };
        let SingularLocus::Point(q1) = gen.loci[1] else { panic!() };
        assert!((p1[0] - q1[0] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn crowded_dipoles_are_rejected() {
        let g = GridSpec::centered(3, 12, 1.0, DomainShape::Box).unwrap();
        let p = GeneratorParams { support: Some(0.8), ..Default::default() };
        assert!(generate(&FieldKind::DipoleChain { pairs: 2 }, &p, &g, &QuotientTarget::sphere(2)).is_err());
    }
}
