//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_traits::Zero;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tilecoh_core::apg::analyze;
use tilecoh_core::cohomology::FGAbelianGroup;
use tilecoh_core::cutproject::{
    group_cohomology, jump_count, jump_functional, CutProjectData, LocallyConstantFn, PartitionTower,
};
use tilecoh_core::intmat::IntMatrix;
use tilecoh_core::mixed::{mixed_quotient, DEFAULT_TOLERANCE};
use tilecoh_core::peforms::{verify_de_rham, DeRhamConfig};
use tilecoh_core::pv::{verify_chain_map, verify_injectivity};
use tilecoh_core::snf::smith_normal_form;
use tilecoh_core::tiling::SubstitutionSystem;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1() -> Check {
    let a = analyze(&SubstitutionSystem::fibonacci(), 3).map_err(err)?;
    for level in &a.levels[..=3] {
        ensure(level.groups[0].group == FGAbelianGroup::free(1), || {
            format!("H^0(Gamma_{}) = {}", level.k, level.groups[0].group)
        })?;
    }
    ensure(a.limit.as_group() == Some(FGAbelianGroup::free(2)), || {
        format!("H^1 limit {:?}", a.limit)
    })?;
    ensure(a.limit.unimodular, || "eventual matrix not unimodular".into())?;
    ensure(a.limit.certificate.is_some(), || "no stability certificate".into())
}

fn criterion_2() -> Check {
    let a = analyze(&SubstitutionSystem::periodic(), 3).map_err(err)?;
    for level in &a.levels {
        ensure(
            level.groups[0].group == FGAbelianGroup::free(1) && level.groups[1].group == FGAbelianGroup::free(1),
            || format!("level {}: H^0 = {}, H^1 = {}", level.k, level.groups[0].group, level.groups[1].group),
        )?;
    }
    ensure(a.limit.as_group() == Some(FGAbelianGroup::free(1)), || {
        format!("H^1 limit {:?}", a.limit)
    })
}

fn criterion_3() -> Check {
    let a = analyze(&SubstitutionSystem::thue_morse(), 3).map_err(err)?;
    ensure(a.limit.limit_rank == 2, || format!("rank {}", a.limit.limit_rank))?;
    ensure(a.limit.is_divisible_by(2), || "no 2-divisibility".into())?;
    ensure(!a.limit.is_divisible_by(3), || "spurious 3-divisibility".into())?;
    for k in 1..=3 {
        let m = a.substitution_h1[k].free_block();
        let factors = smith_normal_form(&m).invariant_factors();
        let two = num_bigint::BigInt::from(2);
        let has_two = factors.iter().any(|d| (d % &two).is_zero());
        // A singular matrix also kills an element; count a zero factor too.
        let singular = factors.len() < m.rows();
        ensure(has_two || singular, || format!("level {k}: invariant factors {factors:?}"))?;
        ensure(m.determinant().is_zero() || (m.determinant() % &two).is_zero(), || {
            format!("level {k}: det {}", m.determinant())
        })?;
    }
    Ok(())
}

fn criterion_4() -> Check {
    let sys = SubstitutionSystem::fibonacci();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..=3 {
        let r = verify_chain_map(&sys, k, 200, 1000, false, &mut rng).map_err(err)?;
        ensure(r.failures.is_empty(), || format!("level {k}: {:?}", r.failures.first()))?;
    }
    let r = verify_chain_map(&sys, 2, 200, 1000, true, &mut rng).map_err(err)?;
    ensure(!r.failures.is_empty(), || "fault injection went undetected".into())
}

fn criterion_5() -> Check {
    let cp = group_cohomology(&CutProjectData::fibonacci(), 6).map_err(err)?;
    let ap = analyze(&SubstitutionSystem::fibonacci(), 3).map_err(err)?;
    let (g1, g2) = (cp.h1.as_group(), ap.limit.as_group());
    ensure(g1.is_some() && g1 == g2 && g1 == Some(FGAbelianGroup::free(2)), || {
        format!("cut&project {g1:?} vs AP {g2:?}")
    })?;
    ensure(cp.h0 == FGAbelianGroup::free(1), || format!("H^0 = {}", cp.h0))
}

fn criterion_6() -> Check {
    for sys in [SubstitutionSystem::fibonacci(), SubstitutionSystem::thue_morse(), SubstitutionSystem::periodic()] {
        for k in 0..=3 {
            let r = verify_injectivity(&sys, k).map_err(|e| format!("{sys}, k={k}: {e}"))?;
            ensure(r.partition_violations == 0, || {
                format!("{sys}, k={k}: {} partition violations", r.partition_violations)
            })?;
        }
    }
    Ok(())
}

fn random_unimodular(n: usize, rng: &mut ChaCha8Rng) -> IntMatrix {
    let mut p = IntMatrix::identity(n);
    for _ in 0..4 * n {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            p.add_row_multiple(i, j, &num_bigint::BigInt::from(rng.random_range(-2i64..=2)));
        }
    }
    p
}

fn to_f64(m: &IntMatrix) -> Vec<Vec<f64>> {
    m.to_f64_rows()
}

fn criterion_7() -> Check {
    let fib = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
    let q = mixed_quotient(&fib, DEFAULT_TOLERANCE).map_err(err)?;
    ensure(q.mixed_dim == 1, || format!("Fibonacci mixed_dim {}", q.mixed_dim))?;
    // The eventual matrix computed from the approximants agrees.
    let a = analyze(&SubstitutionSystem::fibonacci(), 3).map_err(err)?;
    let m = a.substitution_h1[a.limit_level].free_block();
    let q2 = mixed_quotient(&to_f64(&m), DEFAULT_TOLERANCE).map_err(err)?;
    ensure(q2.mixed_dim == 1, || format!("computed eventual matrix mixed_dim {}", q2.mixed_dim))?;
    for r in 1..=4 {
        let id = to_f64(&IntMatrix::identity(r));
        let q = mixed_quotient(&id, DEFAULT_TOLERANCE).map_err(err)?;
        ensure(q.mixed_dim == r, || format!("identity of rank {r}: mixed_dim {}", q.mixed_dim))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = DMatrix::from_fn(2, 2, |i, j| fib[i][j]);
    for trial in 0..100 {
        // Real conjugators for the hyperbolic matrix.
        let p = loop {
            let p: DMatrix<f64> = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-3.0..3.0));
            if p.determinant().abs() > 0.1 {
                break p;
            }
        };
        let c = &p * &base * p.clone().try_inverse().expect("invertible");
        let rows: Vec<Vec<f64>> = (0..2).map(|i| (0..2).map(|j| c[(i, j)]).collect()).collect();
        let qc = mixed_quotient(&rows, DEFAULT_TOLERANCE).map_err(err)?;
        ensure(qc.mixed_dim == q.mixed_dim && qc.negligible_dim == q.negligible_dim, || {
            format!("trial {trial}: conjugate gives {qc:?}")
        })?;
        // Integer unimodular conjugators keep unit-circle spectra exact.
        let n = 3;
        let u = random_unimodular(n, &mut rng);
        let target = IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let inv = smith_inverse(&u);
        ensure(&u * &inv == IntMatrix::identity(n), || "bad conjugator inverse".into())?;
        let conj = &(&u * &target) * &inv;
        let qt = mixed_quotient(&to_f64(&conj), DEFAULT_TOLERANCE).map_err(err)?;
        ensure(qt.mixed_dim == 3, || format!("trial {trial}: integer conjugate gives {qt:?}"))?;
    }
    Ok(())
}

/// Inverse of a unimodular matrix via its Smith form.
fn smith_inverse(u: &IntMatrix) -> IntMatrix {
    let s = smith_normal_form(u);
    // u = U^{-1} D V^{-1} with D = ±I, so u^{-1} = V D U.
    &(&s.v * &s.d) * &s.u
}

fn criterion_8() -> Check {
    let sys = SubstitutionSystem::fibonacci();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = DeRhamConfig::default();
    let r = verify_de_rham(&sys, &cfg, &mut rng).map_err(err)?;
    ensure(r.patch_tiles >= 10_000, || format!("patch has {} tiles", r.patch_tiles))?;
    ensure(r.failures.is_empty(), || format!("{:?}", r.failures.first()))?;
    ensure(r.stokes_max <= 1e-9, || format!("Stokes residual {}", r.stokes_max))?;
    ensure(r.alpha0_max <= 1e-8 && r.alpha1_max <= 1e-8, || {
        format!("J(alpha(c)) residuals {} / {}", r.alpha0_max, r.alpha1_max)
    })?;
    ensure(r.partition_of_unity_max <= 1e-12, || format!("partition of unity {}", r.partition_of_unity_max))?;
    let bad = verify_de_rham(
        &sys,
        &DeRhamConfig {
            fault: true,
            trials: 10,
            ..cfg
        },
        &mut rng,
    )
    .map_err(err)?;
    ensure(!bad.failures.is_empty(), || "negative control undetected".into())
}

fn criterion_9() -> Check {
    let data = CutProjectData::fibonacci();
    let tower = PartitionTower::new(&data, 8).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let random = |n: usize, rng: &mut ChaCha8Rng| LocallyConstantFn {
        level: n,
        values: (0..tower.partitions[n].interval_count())
            .map(|_| rng.random_range(-10i64..=10))
            .collect(),
    };
    for case in 0..1000 {
        let n = rng.random_range(0..8usize);
        let (p, q) = (&tower.partitions[n], &tower.partitions[n + 1]);
        let f = random(n, &mut rng);
        let h = random(n, &mut rng);
        let (a, b) = (rng.random_range(-3i64..=3), rng.random_range(-3i64..=3));
        let comb = LocallyConstantFn {
            level: n,
            values: f.values.iter().zip(&h.values).map(|(x, y)| a * x + b * y).collect(),
        };
        let constant = LocallyConstantFn {
            level: n,
            values: vec![rng.random_range(-10i64..=10); p.interval_count()],
        };
        ensure(jump_count(&f, p).map_err(err)? <= p.cut_set.len(), || format!("case {case}: too many jumps"))?;
        let g = tower.rotation_pullback(&f).map_err(err)?;
        let at = &q.cut_set[rng.random_range(0..q.cut_set.len())].location;
        let on_p = &p.cut_set[rng.random_range(0..p.cut_set.len())].location;
        let tau = |f: &LocallyConstantFn<i64>, x, part| jump_functional(f, x, part).map_err(err);
        ensure(tau(&constant, on_p, p)? == 0, || format!("case {case}: jump of a constant"))?;
        ensure(tau(&comb, on_p, p)? == a * tau(&f, on_p, p)? + b * tau(&h, on_p, p)?, || {
            format!("case {case}: not linear")
        })?;
        ensure(tau(&g, at, q)? == tau(&f, &data.rotate(at), p)?, || {
            format!("case {case}: equivariance fails at {at}")
        })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("Fibonacci AP route: H^0 = Z, H^1 limit Z^2 unimodular", criterion_1, Some(Duration::from_secs(10))),
        ("periodic tiling: H^0 = H^1 = Z at every level and in the limit", criterion_2, None),
        ("Thue-Morse: rank 2, infinitely 2-divisible, not 3-divisible", criterion_3, Some(Duration::from_secs(30))),
        ("PV chain map, Fibonacci k <= 3, 200 x 1000, fault control", criterion_4, Some(Duration::from_secs(60))),
        ("cut&project H^1 equals AP-route H^1 (Z^2)", criterion_5, Some(Duration::from_secs(30))),
        ("injectivity witnesses and zone partition, k <= 3", criterion_6, None),
        ("mixed quotient: Fibonacci 1, identity r, conjugation invariance", criterion_7, None),
        ("de Rham suite on a 10^4-tile Fibonacci patch", criterion_8, Some(Duration::from_secs(60))),
        ("jump functionals: linear, zero on constants, bounded, equivariant", criterion_9, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let (Ok(()), Some(b)) = (&result, budget) {
            if elapsed > *b {
                result = Err(format!("took {elapsed:.2?}, budget {b:?}"));
            }
        }
        match result {
            Ok(()) => println!("criterion {}: PASS  {name} ({elapsed:.2?})", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({elapsed:.2?}): {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
