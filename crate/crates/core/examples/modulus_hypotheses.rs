//! Checks the structural hypotheses on a few power-regularized moduli and on
//! a tabulated one, then shows a modulus that fails them.
//!
//! ```text
//! cargo run --release --example modulus_hypotheses
//! ```

use defectoscope::elastic::{check_hypotheses, ElasticModulus, ModulusFunction, ScanSpec, TabulatedModulus};

struct Quadratic;

impl ModulusFunction for Quadratic {
    fn exponent(&self) -> f64 {
        1.5
    }
    fn phi(&self, t: f64) -> f64 {
        t * t
    }
    fn dphi(&self, t: f64) -> f64 {
        2.0 * t
    }
}

fn main() -> defectoscope::Result<()> {
    let scan = ScanSpec::default();
    println!("{:>5} {:>4} {:>8} {:>12} {:>10} {:>10}", "p", "b", "alpha", "M", "p b^(p/2)", "pairs ok");
    for p in [1.2, 1.5, 1.8] {
        for b in [0.0, 1.0] {
            let m = ElasticModulus::power_regularized(p, b)?;
            let r = check_hypotheses(&m, &scan)?;
            println!(
                "{p:>5} {b:>4} {:>8} {:>12.9} {:>10.6} {:>10}",
                r.alpha,
                r.psi_bound,
                p * b.powf(p / 2.0),
                r.pair_bound_holds
            );
        }
    }

    // Cubic Hermite table of the p = 1.2, b = 1 modulus on a dense log grid.
    let m = ElasticModulus::power_regularized(1.2, 1.0)?;
    let t = ScanSpec { t_min: 1e-6, t_max: 1e6, points: 6001 }.grid();
    let tab = TabulatedModulus::sample(&m, t)?;
    let r = check_hypotheses(&tab, &scan)?;
    println!("\ntabulated: admissible {}, alpha {:.6}, M {:.6}", r.admissible, r.alpha, r.psi_bound);

    let r = check_hypotheses(&Quadratic, &scan)?;
    println!("\nt² with p = 1.5: admissible {}", r.admissible);
    for f in &r.failures {
        println!("  {f}");
    }
    Ok(())
}
