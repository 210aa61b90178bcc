//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero on
//! any failure. Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use jacobi_histo::extended::certify_unisolvence;
use jacobi_histo::jacobi::{coupling_coeffs, jacobi_norm};
use jacobi_histo::operators::{build_delta, build_h, build_tj, primitive_identities, verify_factorization};
use jacobi_histo::reconstruct::{reproduction_tolerance, solve_system, CONDITION_LIMIT};
use jacobi_histo::spectral::{
    compare_rearrangements, sample_symbol_delta, sample_symbol_tj, singular_values, zero_distribution_probe,
    DEFAULT_TRIM,
};
use jacobi_histo::stability::{lambda_max_gram, psd_gap};
use jacobi_histo::{Error, GradingMap, HistoBasis, JacobiParams, Mesh, Result, ScalingSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R1_TOL: f64 = 1e-9;
const R2_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-8;
const TJ_MEAN_TOL: f64 = 0.05;
const DELTA_MEAN_TOL: f64 = 0.05;
const DELTA_UNIFORM_MEAN_TOL: f64 = 0.01;
const PSD_TOL: f64 = 1e-8;
const LAMBDA_GROWTH: f64 = 1.5;
const COUPLING_TOL: f64 = 0.05;
const NORM_TOL: f64 = 1e-3;

fn params(a: f64, b: f64) -> JacobiParams {
    JacobiParams::new(a, b).unwrap()
}

fn maps() -> [GradingMap; 3] {
    [GradingMap::Identity, GradingMap::Exp, GradingMap::Square]
}

type Criterion = (usize, &'static str, fn() -> Result<Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn factorization_sweep() -> Result<(f64, f64)> {
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for q in [params(2.0, 2.0), params(1.5, 1.0)] {
        for map in maps() {
            for n in [16usize, 64, 256] {
                let rep = verify_factorization(&q, &Mesh::graded(n, map.clone())?)?;
                r1 = r1.max(rep.r1);
                r2 = r2.max(rep.r2);
            }
        }
    }
    Ok((r1, r2))
}

fn criterion_1() -> Result<Verdict> {
    let (r1, _) = factorization_sweep()?;
    verdict(r1 <= R1_TOL, format!("max r1 = {r1:.3e} (tol {R1_TOL:e})"))
}

fn criterion_2() -> Result<Verdict> {
    let (_, r2) = factorization_sweep()?;
    verdict(r2 <= R2_TOL, format!("max r2 = {r2:.3e} (tol {R2_TOL:e})"))
}

fn criterion_3() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for q in [params(2.0, 2.0), params(1.5, 1.0), params(0.6, 0.8)] {
        let rep = primitive_identities(&q, 30, 51)?;
        worst = worst.max(rep.integration_by_parts).max(rep.locality);
    }
    verdict(worst <= IDENTITY_TOL, format!("max defect = {worst:.3e} (tol {IDENTITY_TOL:e})"))
}

fn criterion_4() -> Result<Verdict> {
    let all = [params(2.0, 2.0), params(1.5, 1.0), params(0.6, 0.8)];
    let (mut cases, mut certified, mut worst_ratio, mut max_bits) = (0, 0, f64::INFINITY, 0);
    for q in &all {
        for map in maps() {
            for n in [1usize, 2, 4, 8, 16, 32, 64] {
                let c = certify_unisolvence(q, &Mesh::graded(n, map.clone())?, HistoBasis::Shifted)?;
                cases += 1;
                if c.certified {
                    certified += 1;
                } else {
                    println!("  uncertified: {q} {} N={n} {c:?}", map.name());
                }
                worst_ratio = worst_ratio.min(c.sigma_min / c.sigma_max);
                max_bits = max_bits.max(c.precision_bits);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut accepted, mut refused, mut bad) = (0, 0, 0);
    for q in &all {
        for map in maps() {
            for n in [4usize, 8, 16, 32] {
                let h = build_h(q, &Mesh::graded(n, map.clone())?, HistoBasis::Shifted)?;
                for _ in 0..20 {
                    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    match solve_system(&h, &h.mat_vec(&c)?) {
                        Ok((got, _, cond)) => {
                            let err = got.iter().zip(&c).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
                            accepted += 1;
                            if err > reproduction_tolerance(cond) {
                                bad += 1;
                            }
                        }
                        Err(Error::Singular { condition }) if condition > CONDITION_LIMIT => refused += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    verdict(
        certified == cases && bad == 0,
        format!(
            "certified {certified}/{cases} (min σ_min/σ_max = {worst_ratio:.2e}, up to {max_bits} bits); \
             reproduced {}/{accepted}, refused {refused} with κ > {CONDITION_LIMIT:e}",
            accepted - bad
        ),
    )
}

fn criterion_5() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [params(2.0, 2.0), params(1.5, 1.0)] {
        let rep = zero_distribution_probe(
            Mesh::uniform,
            |m| build_h(&q, m, HistoBasis::Shifted),
            &[1000, 2000, 3000],
            &ScalingSpec::STUDY,
            &[1e-2, 5e-3, 1e-3],
        )?;
        pass &= rep.all_decay();
        for s in &rep.series {
            let labels: Vec<&str> = s.decay.iter().map(|d| d.label()).collect();
            parts.push(format!("{q} {}({}): {}", s.spec.label(), s.spec.gamma(), labels.join("/")));
        }
    }
    verdict(pass, parts.join("; "))
}

fn criterion_6() -> Result<Verdict> {
    let q = params(2.0, 2.0);
    let n = 2000;
    let a = build_tj(&q, n)?.scaled(n as f64);
    let cmp = compare_rearrangements(&singular_values(&a)?, &sample_symbol_tj(&q, 2000, DEFAULT_TRIM)?)?;
    let m = cmp.mean_relative_deviation;
    verdict(m <= TJ_MEAN_TOL, format!("mean relative deviation = {m:.4} (tol {TJ_MEAN_TOL})"))
}

fn criterion_7() -> Result<Verdict> {
    let n = 2000;
    let mut pass = true;
    let mut parts = Vec::new();
    for (map, tol) in [
        (GradingMap::Identity, DELTA_UNIFORM_MEAN_TOL),
        (GradingMap::Exp, DELTA_MEAN_TOL),
        (GradingMap::Square, DELTA_MEAN_TOL),
    ] {
        let a = build_delta(&Mesh::graded(n, map.clone())?).scaled(1.0 / n as f64);
        let cmp = compare_rearrangements(&singular_values(&a)?, &sample_symbol_delta(&map, 2000, DEFAULT_TRIM)?)?;
        let m = cmp.mean_relative_deviation;
        pass &= m <= tol;
        parts.push(format!("{} {m:.5} (tol {tol})", map.name()));
    }
    verdict(pass, parts.join(", "))
}

fn criterion_8() -> Result<Verdict> {
    let mut worst = f64::INFINITY;
    for q in [params(2.0, 2.0), params(0.6, 0.8)] {
        for map in maps() {
            for n in [16usize, 64, 128] {
                worst = worst.min(psd_gap(&q, &Mesh::graded(n, map.clone())?)?);
            }
        }
    }
    verdict(worst >= -PSD_TOL, format!("min eigenvalue of G - HᵀDH = {worst:.3e} (tol -{PSD_TOL:e})"))
}

fn criterion_9() -> Result<Verdict> {
    let q = params(2.0, 2.0);
    let ratio = |n: usize| lambda_max_gram(&q, n).map(|l| l / (1.0 + (n as f64).ln()));
    let base = ratio(16)?;
    let mut worst = 0.0f64;
    let mut n = 32;
    while n <= 2048 {
        worst = worst.max(ratio(n)? / base);
        n *= 2;
    }
    verdict(
        worst <= LAMBDA_GROWTH,
        format!("max ratio relative to N=16 = {worst:.4} (tol {LAMBDA_GROWTH}), N=16 ratio {base:.4}"),
    )
}

fn criterion_10() -> Result<Verdict> {
    let mut worst_coupling = 0.0f64;
    let mut worst_norm = 0.0f64;
    for q in [params(2.0, 2.0), params(1.5, 1.0), params(0.6, 0.8)] {
        let j = 1000;
        let c = coupling_coeffs(&q, j)?;
        let s = q.sigma();
        worst_coupling = worst_coupling.max((j as f64 * c.u - s).abs()).max((j as f64 * c.l - s).abs());
        let j = 10_000;
        let k = jacobi_norm(&q, j) * (2.0 * j as f64 + s + 1.0) / 2f64.powf(s + 1.0);
        worst_norm = worst_norm.max((k - 1.0).abs());
    }
    verdict(
        worst_coupling <= COUPLING_TOL && worst_norm <= NORM_TOL,
        format!(
            "max |j·u_j - σ|, |j·ℓ_j - σ| = {worst_coupling:.4} (tol {COUPLING_TOL}); \
             max |normalized K_j - 1| = {worst_norm:.2e} (tol {NORM_TOL:e})"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "H = ΔΨ", criterion_1),
        (2, "Ψ = R + I^ext T^(J)", criterion_2),
        (3, "primitive identities", criterion_3),
        (4, "unisolvence and reproduction", criterion_4),
        (5, "zero distribution of scaled H", criterion_5),
        (6, "N T^(J) symbol", criterion_6),
        (7, "Δ/N symbol", criterion_7),
        (8, "Gram domination", criterion_8),
        (9, "λ_max growth", criterion_9),
        (10, "coefficient asymptotics", criterion_10),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = false;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed |= !pass;
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {id} ({name}): {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
