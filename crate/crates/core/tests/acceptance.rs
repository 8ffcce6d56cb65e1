//! Acceptance criteria, one line per criterion. Tolerances are fixed here and
//! independent of the verifier's own gates.

mod common;

use std::time::{Duration, Instant};

use common::{parrott, triple, zero_tuple};
use dilation_forge::builder::{assemble_model, label_projector};
use dilation_forge::fock::enumerate_indices;
use dilation_forge::linalg::{c, identity, residual, zeros, ComplexMatrix};
use dilation_forge::random::{covariant_with, generate, Style};
use dilation_forge::verifier::{verify_construction, verify_moments, ResidualEntry};
use dilation_forge::{dilate, verify_all, BuildOptions, DilationModel, TupleSpec, VerifyOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL_LINEAR: f64 = 1e-10;
const TOL_UNITARY: f64 = 1e-12;
const TOL_TELESCOPING: f64 = 1e-12;
const TOL_MUTATION: f64 = 1e-3;
const TOL_MONOTONE: f64 = 1e-13;
const CLASSIFY_BUDGET: Duration = Duration::from_secs(1);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn at_degree(degree: usize) -> BuildOptions {
    BuildOptions { degree, ..BuildOptions::default() }
}

/// 50 members with n = 3 and dimH in 2..=5, alternating two styles.
fn corpus() -> Vec<TupleSpec> {
    (0..50u64)
        .map(|seed| {
            let style = if seed % 2 == 0 { Style::JointlyNilpotent } else { Style::ScaledCommuting };
            generate(style, 3, 2 + (seed as usize % 4), 1000 + seed).expect("corpus member")
        })
        .collect()
}

fn entry(entries: &[ResidualEntry], name: &str) -> f64 {
    entries.iter().find(|e| e.name == name).unwrap_or_else(|| panic!("missing {name}")).residual
}

fn class_gate() -> Outcome {
    let start = Instant::now();
    let p = parrott().classify().unwrap();
    let z = zero_tuple(3, 2).classify().unwrap();
    let s = triple().classify().unwrap();
    let elapsed = start.elapsed();
    let refusal = dilate(&parrott(), &at_degree(2)).err().map(|e| e.to_string()).unwrap_or_default();
    let named = refusal.contains("Szegő operator without index 1") && refusal.contains("min eigenvalue");
    outcome(
        !p.in_t1n && !p.szego_hat1.psd && named && z.in_t1n && s.in_t1n && elapsed < CLASSIFY_BUDGET,
        format!("Parrott min eig {:.3}, refusal names condition: {named}, {:?}", p.szego_hat1.min_eig, elapsed),
    )
}

fn construction(models: &[DilationModel]) -> Outcome {
    let mut worst = [0.0f64; 3];
    for m in models {
        let e = verify_construction(m);
        worst[0] = worst[0].max(entry(&e, "defect_identity_first").max(entry(&e, "defect_identity_last")));
        worst[1] = worst[1].max(entry(&e, "u_unitary"));
        for name in [
            "transfer_first_ac",
            "transfer_first_cc",
            "transfer_first_aa_bb",
            "transfer_last_ac",
            "transfer_last_cc",
            "transfer_last_aa_bb",
            "transfer_first_lemma_top",
            "transfer_first_lemma_bottom",
            "transfer_last_lemma_top",
            "transfer_last_lemma_bottom",
        ] {
            worst[2] = worst[2].max(entry(&e, name));
        }
    }
    outcome(
        worst[0] <= TOL_LINEAR && worst[1] <= TOL_UNITARY && worst[2] <= TOL_LINEAR,
        format!("defect {:.1e}, U {:.1e}, transfer {:.1e} over {} members", worst[0], worst[1], worst[2], models.len()),
    )
}

fn full_suite(models: &[DilationModel]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_pi = 0.0f64;
    for (k, m) in models.iter().enumerate() {
        let r = verify_all(m, &VerifyOptions::default());
        failures.extend(r.failures().iter().map(|e| format!("#{k} {}", e.name)));
        worst_pi = worst_pi.max(r.get("pi_isometry").unwrap().residual).max(r.get("pi_tail_match").unwrap().residual);
    }
    outcome(
        failures.is_empty() && worst_pi <= TOL_TELESCOPING,
        format!("{} failing entries {:?}, Π telescoping {:.1e}", failures.len(), failures.iter().take(3).collect::<Vec<_>>(), worst_pi),
    )
}

/// `<Π e_a, W^α P_{N-|α|} Π e_b>` against `<e_a, t^α Σ_{|β| <= N-|α|} s^β D^2 s^β* e_b>`,
/// one basis pair at a time, with the kept part summed directly.
fn moment_oracle(m: &DilationModel, max_degree: usize) -> f64 {
    let h = m.spec.dim_h;
    let d2 = &m.defects.d1n_sq;
    let n_deg = m.degree();
    let mut worst = 0.0f64;
    for alpha in enumerate_indices(m.spec.n, max_degree) {
        let keep = n_deg - alpha.iter().sum::<usize>();
        let mut kept = zeros(h, h);
        for beta in enumerate_indices(m.merged.n, keep) {
            let s = m.merged.monomial(&beta);
            kept += &s * d2 * s.adjoint();
        }
        let target = m.spec.monomial(&alpha) * kept;
        let proj = m.fock.degree_projector(keep);
        for b in 0..h {
            let mut x = &proj * m.pi.column(b);
            for (g, &a) in alpha.iter().enumerate().rev() {
                for _ in 0..a {
                    x = &m.isometries[g] * x;
                }
            }
            for a in 0..h {
                let lhs = m.pi.column(a).dotc(&x);
                worst = worst.max((lhs - target[(a, b)]).norm());
            }
        }
    }
    worst
}

fn moments(models: &[DilationModel]) -> Outcome {
    let mut gated = 0.0f64;
    let mut oracle = 0.0f64;
    for m in models.iter().take(20) {
        gated = gated.max(verify_moments(m, 3)[0].residual);
        oracle = oracle.max(moment_oracle(m, 3));
    }
    outcome(gated <= TOL_LINEAR && oracle <= TOL_LINEAR, format!("verifier {:.1e}, entrywise oracle {:.1e}", gated, oracle))
}

fn passes(spec: &TupleSpec, degree: usize) -> Result<(), String> {
    let model = dilate(spec, &at_degree(degree)).map_err(|e| e.to_string())?;
    let r = verify_all(&model, &VerifyOptions::default());
    match r.failures().first() {
        None => Ok(()),
        Some(e) => Err(format!("{} = {:.2e}", e.name, e.residual)),
    }
}

fn pairs_and_singles() -> Outcome {
    let mut specs: Vec<TupleSpec> = (0..20u64)
        .map(|seed| {
            let style = if seed % 2 == 0 { Style::ScaledCommuting } else { Style::JointlyNilpotent };
            generate(style, 2, 2 + (seed as usize % 3), 2000 + seed).unwrap()
        })
        .collect();
    specs.push(TupleSpec::scalars(&[c(0.6, 0.2)]));
    specs.push(generate(Style::ScaledCommuting, 1, 4, 77).unwrap());
    let errs: Vec<String> = specs.iter().enumerate().filter_map(|(k, s)| passes(s, 4).err().map(|e| format!("#{k}: {e}"))).collect();
    outcome(errs.is_empty(), format!("{} pairs and 2 single contractions, failures {:?}", specs.len() - 2, errs))
}

fn twisted() -> Outcome {
    let specs: Vec<TupleSpec> = (0..10u64).map(|seed| generate(Style::UCommuting, 2 + (seed as usize % 2), 3, 3000 + seed).unwrap()).collect();
    let nontrivial = specs.iter().filter(|s| !s.has_trivial_phases()).count();
    let errs: Vec<String> = specs.iter().enumerate().filter_map(|(k, s)| passes(s, 4).err().map(|e| format!("#{k}: {e}"))).collect();
    outcome(errs.is_empty() && nontrivial > 0, format!("{nontrivial}/10 with nontrivial phases, failures {:?}", errs))
}

fn equivariant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let swap = covariant_with(3, 4, &[true, true, true], &mut rng).unwrap();
    let ident = covariant_with(3, 4, &[false, false, false], &mut rng).unwrap();
    let mixed = covariant_with(3, 5, &[true, false, true], &mut rng).unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, spec) in [("swap", &swap), ("identity", &ident), ("mixed", &mixed)] {
        match dilate(spec, &at_degree(3)) {
            Ok(model) => {
                let r = verify_all(&model, &VerifyOptions::default());
                let eq = r.entries.iter().filter(|e| e.name.starts_with("equivariant")).map(|e| e.residual).fold(0.0, f64::max);
                ok &= r.passed() && eq <= TOL_LINEAR;
                detail.push(format!("{name} {:.1e}", eq));
                if name == "identity" {
                    let mut comm = 0.0f64;
                    for w in &model.isometries {
                        for p in 0..2 {
                            let rho = label_projector(&model.labels, p);
                            comm = comm.max(residual(&(w * &rho), &(&rho * w)));
                        }
                    }
                    ok &= comm <= TOL_LINEAR;
                    detail.push(format!("[W, ρ] {:.1e}", comm));
                }
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(ok, detail.join(", "))
}

fn mutation(models: &[DilationModel]) -> Outcome {
    let mut weakest = f64::INFINITY;
    for m in models.iter().take(10) {
        let mut coupling = m.coupling.clone();
        let u = &mut coupling.u;
        let (mut bi, mut bj) = (0, 0);
        for j in 0..u.ncols() {
            for i in 0..u.nrows() {
                if u[(i, j)].norm() > u[(bi, bj)].norm() {
                    (bi, bj) = (i, j);
                }
            }
        }
        u[(bi, bj)] = -u[(bi, bj)];
        let broken = assemble_model(&m.spec, m.defects.clone(), coupling, m.degree());
        weakest = weakest.min(verify_all(&broken, &VerifyOptions::default()).max_gated());
    }
    outcome(weakest > TOL_MUTATION, format!("smallest worst gated residual after mutation {:.3}", weakest))
}

/// `||h||^2 - ||Π_N h||^2` read off the models themselves.
fn monotone_tails(corpus: &[TupleSpec]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    for spec in corpus {
        let h = spec.dim_h;
        let mut probes: Vec<ComplexMatrix> = (0..h).map(|i| identity(h).columns(i, 1).into_owned()).collect();
        probes.push(dilation_forge::random::gaussian_matrix(h, 1, &mut rng));
        let tails: Vec<Vec<f64>> = [3, 4, 5]
            .iter()
            .map(|&n| {
                let pi = dilate(spec, &at_degree(n)).unwrap().pi;
                probes.iter().map(|x| x.norm_squared() - (&pi * x).norm_squared()).collect()
            })
            .collect();
        for k in 0..probes.len() {
            worst = worst.max(tails[1][k] - tails[0][k]).max(tails[2][k] - tails[1][k]);
        }
    }
    outcome(worst <= TOL_MONOTONE, format!("largest increase {:.1e} over {} members", worst, corpus.len()))
}

fn main() {
    let corpus = corpus();
    let models: Vec<DilationModel> = corpus.iter().map(|s| dilate(s, &at_degree(4)).expect("corpus member dilates")).collect();
    let results = [
        ("1 class gate", class_gate()),
        ("2 construction identities", construction(&models)),
        ("3 full suite at N = 4", full_suite(&models)),
        ("4 moments up to degree 3", moments(&models)),
        ("5 pairs and single contractions", pairs_and_singles()),
        ("6 twisted-commuting tuples", twisted()),
        ("7 equivariance", equivariant()),
        ("8 mutation is detected", mutation(&models)),
        ("9 tails decrease with N", monotone_tails(&corpus)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {} failed", results.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
