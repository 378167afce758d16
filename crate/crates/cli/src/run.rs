use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use tilecoh_core::apg::{analyze, build_gamma};
use tilecoh_core::cohomology::{DirectLimitResult, GroupHom};
use tilecoh_core::cutproject::{group_cohomology, jump_suite};
use tilecoh_core::intmat::IntMatrix;
use tilecoh_core::mixed::{conjugation_invariance, mixed_quotient};
use tilecoh_core::peforms::{verify_de_rham, DeRhamConfig};
use tilecoh_core::pv::{verify_chain_map, verify_injectivity};
use tilecoh_core::tiling::SubstitutionSystem;
use tilecoh_core::Result;

use crate::config::{RawConfig, RunConfig};
use crate::Command;

/// Failure witnesses listed per suite before truncation.
const MAX_LISTED: usize = 16;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub random_seed: u64,
    pub config: RawConfig,
    pub results: Value,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

struct Ctx {
    failures: Vec<String>,
    warnings: Vec<String>,
    timings: BTreeMap<String, f64>,
}

impl Ctx {
    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    fn fail_all<I: IntoIterator<Item = String>>(&mut self, items: I) {
        let items: Vec<String> = items.into_iter().collect();
        let n = items.len();
        self.failures.extend(items.into_iter().take(MAX_LISTED));
        if n > MAX_LISTED {
            self.failures.push(format!("... and {} more", n - MAX_LISTED));
        }
    }
}

/// One generator per independent task, all derived from the run seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn run(cfg: &RunConfig, command: Command, timings: bool) -> Result<Report> {
    let mut ctx = Ctx {
        failures: Vec::new(),
        warnings: Vec::new(),
        timings: BTreeMap::new(),
    };
    let results = match command {
        Command::Apg => apg(cfg, &mut ctx)?,
        Command::PvVerify => pv_verify(cfg, &mut ctx)?,
        Command::Cutproject => cutproject(cfg, &mut ctx)?,
        Command::Mixed => mixed(cfg, &mut ctx)?,
        Command::Derham => derham(cfg, &mut ctx)?,
    };
    let mut config = cfg.raw.clone();
    config.random_seed = Some(cfg.random_seed);
    Ok(Report {
        tool: "tilecoh",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        random_seed: cfg.random_seed,
        config,
        results,
        failures: ctx.failures,
        warnings: ctx.warnings,
        timings_ms: timings.then_some(ctx.timings),
    })
}

fn system(cfg: &RunConfig) -> &SubstitutionSystem {
    cfg.system.as_ref().expect("validated config carries a system")
}

fn matrix_rows(m: &IntMatrix) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|x| x.to_string()).collect()).collect()
}

fn hom_json(h: &GroupHom) -> Value {
    json!({
        "source": h.source.to_string(),
        "target": h.target.to_string(),
        "matrix": matrix_rows(&h.matrix),
    })
}

/// `Z^2`, or e.g. `rank 2, 2-divisible` when the limit is not finitely generated.
pub fn describe_limit(l: &DirectLimitResult) -> String {
    if let Some(g) = l.as_group() {
        return g.to_string();
    }
    let primes: Vec<String> = l.divisibility.iter().filter(|(_, &v)| v).map(|(p, _)| p.to_string()).collect();
    let mut s = format!("rank {}", l.limit_rank);
    if !primes.is_empty() {
        s += &format!(", divisible by {}", primes.join(", "));
    }
    if !l.stable {
        s += ", not stabilized";
    }
    s
}

fn limit_json(l: &DirectLimitResult) -> Value {
    json!({ "group": describe_limit(l), "detail": l })
}

fn apg(cfg: &RunConfig, ctx: &mut Ctx) -> Result<Value> {
    let sys = system(cfg);
    let a = ctx.timed("analyze", || analyze(sys, cfg.k_max))?;
    let mut levels = Vec::new();
    for level in &a.levels {
        let alternating: i64 = level
            .groups
            .iter()
            .enumerate()
            .map(|(n, g)| if n % 2 == 0 { g.group.rank as i64 } else { -(g.group.rank as i64) })
            .sum();
        if alternating != level.euler_characteristic {
            ctx.failures.push(format!(
                "level {}: alternating rank sum {alternating} differs from Euler characteristic {}",
                level.k, level.euler_characteristic
            ));
        }
        levels.push(json!({
            "k": level.k,
            "vertices": level.vertices,
            "edges": level.edges,
            "euler_characteristic": level.euler_characteristic,
            "cohomology": level.groups.iter().map(|g| g.group.to_string()).collect::<Vec<_>>(),
            "certificate": level.certificate,
        }));
    }
    if let Some(w) = &a.euler_warning {
        ctx.warnings.push(w.clone());
    }
    if !a.limit.stable {
        ctx.warnings.push("direct limit of H^1 did not stabilize".into());
    }
    Ok(json!({
        "system": sys.to_string(),
        "k_max": cfg.k_max,
        "levels": levels,
        "forgetful_h1": a.forgetful_h1.iter().map(hom_json).collect::<Vec<_>>(),
        "substitution_h1": a.substitution_h1.iter().map(hom_json).collect::<Vec<_>>(),
        "forgetful_limit": limit_json(&a.forgetful_limit),
        "substitution_limit": limit_json(&a.substitution_limit),
        "limit_level": a.limit_level,
        "periodic": a.periodic,
        "route": a.route,
        "h1_limit": limit_json(&a.limit),
    }))
}

fn pv_verify(cfg: &RunConfig, ctx: &mut Ctx) -> Result<Value> {
    let sys = system(cfg);
    let (samples, trials, seed) = (cfg.pv.samples, cfg.pv.trials, cfg.random_seed);
    let levels: Vec<usize> = (0..=cfg.k_max).collect();
    // Levels are independent; each gets its own generator streams.
    let outcomes = ctx.timed("suites", || {
        std::thread::scope(|s| {
            let handles: Vec<_> = levels
                .iter()
                .map(|&k| {
                    s.spawn(move || {
                        let chain = verify_chain_map(sys, k, samples, trials, false, &mut stream(seed, 2 * k as u64));
                        let control =
                            verify_chain_map(sys, k, samples, trials, true, &mut stream(seed, 2 * k as u64 + 1));
                        let inj = verify_injectivity(sys, k);
                        (k, chain, control, inj)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("suite thread")).collect::<Vec<_>>()
        })
    });
    let mut out = Vec::new();
    for (k, chain, control, inj) in outcomes {
        let chain = chain?;
        let control = control?;
        ctx.fail_all(chain.failures.iter().map(|f| format!("level {k}: chain map mismatch: {f:?}")));
        if control.failures.is_empty() {
            // With one vertex every vertex cochain has zero coboundary, so
            // the control has nothing to detect.
            if build_gamma(sys, k)?.vertex_count() > 1 {
                ctx.failures.push(format!("level {k}: fault-injection control produced no mismatch"));
            } else {
                ctx.warnings.push(format!("level {k}: single-vertex complex, fault-injection control not applicable"));
            }
        }
        let injectivity = match inj {
            Ok(r) => {
                if r.partition_violations > 0 {
                    ctx.failures
                        .push(format!("level {k}: {} acceptance-zone partition violations", r.partition_violations));
                }
                serde_json::to_value(&r).expect("serializable")
            }
            Err(e) => {
                ctx.failures.push(format!("level {k}: injectivity: {e}"));
                json!({ "error": e.to_string() })
            }
        };
        out.push(json!({
            "k": k,
            "chain_map": chain,
            "fault_control": {
                "checks": control.checks,
                "mismatches_detected": control.failures.len(),
                "first": control.failures.first(),
            },
            "injectivity": injectivity,
        }));
    }
    Ok(json!({ "system": sys.to_string(), "samples": samples, "trials": trials, "levels": out }))
}

fn cutproject(cfg: &RunConfig, ctx: &mut Ctx) -> Result<Value> {
    let cut = cfg.cut.as_ref().expect("validated config carries cut&project data");
    let gc = ctx.timed("group_cohomology", || group_cohomology(&cut.data, cut.n_max))?;
    if !gc.h1.stable {
        ctx.warnings.push("direct limit of H^1 did not stabilize".into());
    }
    let mut rng = stream(cfg.random_seed, 0);
    let jumps = ctx.timed("jump_suite", || jump_suite(&cut.data, cut.n_max, cut.cases, &mut rng))?;
    ctx.fail_all(jumps.failures.iter().map(|(case, what)| format!("jump suite case {case}: {what}")));
    Ok(json!({
        "data": cut.data,
        "h0": gc.h0.to_string(),
        "h1": describe_limit(&gc.h1),
        "group_cohomology": gc,
        "jump_suite": jumps,
    }))
}

fn mixed(cfg: &RunConfig, ctx: &mut Ctx) -> Result<Value> {
    let (matrix, source) = match &cfg.mixed.matrix {
        Some(m) => (m.clone(), "config".to_string()),
        None => {
            let a = ctx.timed("analyze", || analyze(system(cfg), cfg.k_max))?;
            let m = a.substitution_h1[a.limit_level].free_block();
            (m.to_f64_rows(), format!("substitution on H^1(Gamma_{})", a.limit_level))
        }
    };
    let tol = cfg.mixed.tolerance;
    let q = match mixed_quotient(&matrix, tol) {
        Ok(q) => q,
        Err(e) => {
            ctx.failures.push(e.to_string());
            return Ok(json!({ "matrix": matrix, "source": source, "error": e.to_string() }));
        }
    };
    let mut rng = stream(cfg.random_seed, 0);
    let conj = ctx.timed("conjugation", || conjugation_invariance(&matrix, cfg.mixed.conjugators, tol, &mut rng))?;
    ctx.fail_all(conj.mismatches.iter().map(|(t, what)| format!("conjugator {t}: {what}")));
    Ok(json!({
        "matrix": matrix,
        "source": source,
        "tolerance": tol,
        "quotient": q,
        "conjugation": conj,
    }))
}

fn derham(cfg: &RunConfig, ctx: &mut Ctx) -> Result<Value> {
    let sys = system(cfg);
    let report = ctx.timed("suite", || verify_de_rham(sys, &cfg.derham, &mut stream(cfg.random_seed, 0)))?;
    ctx.fail_all(report.failures.iter().map(|f| {
        format!("trial {}: {} residual {:e} at cell {}", f.trial, f.check, f.residual, f.cell)
    }));
    let control_cfg = DeRhamConfig {
        fault: true,
        trials: cfg.control_trials,
        ..cfg.derham.clone()
    };
    let control = ctx.timed("control", || verify_de_rham(sys, &control_cfg, &mut stream(cfg.random_seed, 1)))?;
    if control.failures.is_empty() {
        ctx.failures.push("negative control (perturbed bump normalization) went undetected".into());
    }
    Ok(json!({
        "report": report,
        "negative_control": {
            "trials": control.trials,
            "failures_detected": control.failures.len(),
            "first": control.failures.first(),
        },
    }))
}
