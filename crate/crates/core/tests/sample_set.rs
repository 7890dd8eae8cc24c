use std::path::PathBuf;

use transbench_core::codegen::ProfileRegistry;
use transbench_core::executor::{evaluate_candidate, toolchain_available, Job, run_batch, SandboxConfig, Status};
use transbench_core::mutation::{mutate, STANDARD_MUTATIONS};
use transbench_core::problem::{ProblemSet, TypeExpr};

fn data(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(sub)
}

fn cfg() -> SandboxConfig {
    SandboxConfig {
        max_parallel: 8,
        ..SandboxConfig::default()
    }
}

#[test]
fn sample_set_covers_every_type_constructor() {
    let set = ProblemSet::load_dir(&data("problems")).unwrap();
    assert!(set.problems.len() >= 10);
    let mut seen = [false; 7];
    for p in &set.problems {
        let mut types: Vec<&TypeExpr> = p.signature.params.iter().map(|x| &x.ty).collect();
        types.push(&p.signature.returns);
        for t in types {
            t.walk(&mut |t| {
                let i = match t {
                    TypeExpr::Int => 0,
                    TypeExpr::Double => 1,
                    TypeExpr::Bool => 2,
                    TypeExpr::Str => 3,
                    TypeExpr::List(_) => 4,
                    TypeExpr::Map(..) => 5,
                    TypeExpr::Optional(_) => 6,
                };
                seen[i] = true;
            });
        }
    }
    assert!(seen.iter().all(|s| *s), "{seen:?}");
}

#[test]
fn canonical_solutions_pass_and_mutants_fail() {
    let set = ProblemSet::load_dir(&data("problems")).unwrap();
    let reg = ProfileRegistry::builtin();
    let cfg = cfg();
    for profile in reg.iter() {
        if !toolchain_available(profile, &cfg) {
            eprintln!("skipping {}: toolchain not installed", profile.id);
            continue;
        }
        let mut jobs = Vec::new();
        let mut labels = Vec::new();
        for p in &set.problems {
            let sol = p.solution(&profile.id).unwrap_or_else(|| panic!("{} lacks {}", p.id, profile.id));
            jobs.push(Job { problem: p, profile, candidate: sol.to_string() });
            labels.push((p.id.clone(), None));
            for m in STANDARD_MUTATIONS {
                let mutant = mutate(sol, &p.signature, profile, m).unwrap();
                jobs.push(Job { problem: p, profile, candidate: mutant });
                labels.push((p.id.clone(), Some(m)));
            }
        }
        for ((id, m), r) in labels.iter().zip(run_batch(&jobs, &cfg)) {
            let r = r.unwrap();
            match m {
                None => assert_eq!(r.status, Status::Pass, "{}/{id}: {}\n{}", profile.id, r.stderr, r.stdout),
                Some(m) => {
                    assert_eq!(r.status, Status::Fail, "{}/{id}/{}: {}\n{}", profile.id, m.name(), r.stderr, r.stdout);
                    assert!(r.case_verdicts.iter().any(|v| !v.passed));
                }
            }
        }
    }
}

#[test]
fn demos_pass_in_every_available_profile() {
    let set = ProblemSet::load_dir(&data("demos")).unwrap();
    let reg = ProfileRegistry::builtin();
    let cfg = cfg();
    for profile in reg.iter().filter(|p| toolchain_available(p, &cfg)) {
        for p in &set.problems {
            let r = evaluate_candidate(p, profile, p.solution(&profile.id).unwrap(), &cfg).unwrap();
            assert_eq!(r.status, Status::Pass, "{}/{}: {}", profile.id, p.id, r.stderr);
            assert!(p.alignment("python", &profile.id).is_some() || profile.id == "python");
        }
    }
}
