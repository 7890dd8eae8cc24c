use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use transbench_core::codegen::{render_literal, LanguageProfile, ProfileRegistry};
use transbench_core::executor::Status;
use transbench_core::model::{fixture_key, GenerationParams};
use transbench_core::problem::{emit_problem, parse_problem, value_conforms, Problem, ProblemSet, Signature, TestCase, TypeExpr, Value};
use transbench_core::prompting::{build_prompt, select_demos, PromptSpec, PromptTemplates, PromptVariant};
use transbench_core::pseudo::eval_expression;
use transbench_core::report::{delta_report, round_half_up};
use transbench_core::translate::ca_from_statuses;
use transbench_core::CaMatrix;

fn scalar_type() -> impl Strategy<Value = TypeExpr> {
    prop_oneof![Just(TypeExpr::Int), Just(TypeExpr::Double), Just(TypeExpr::Bool), Just(TypeExpr::Str)]
}

fn key_type() -> impl Strategy<Value = TypeExpr> {
    prop_oneof![Just(TypeExpr::Int), Just(TypeExpr::Bool), Just(TypeExpr::Str)]
}

fn type_expr() -> impl Strategy<Value = TypeExpr> {
    scalar_type().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(TypeExpr::list),
            (key_type(), inner.clone()).prop_map(|(k, v)| TypeExpr::map(k, v)),
            inner
                .prop_filter("no nested optional", |t| !matches!(t, TypeExpr::Optional(_)))
                .prop_map(TypeExpr::optional),
        ]
    })
}

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 _\\-\"\\\\\n\t]{0,8}"
}

fn double() -> impl Strategy<Value = f64> {
    prop_oneof![(-1000i32..1000).prop_map(|i| i as f64 / 8.0), -1.0e6f64..1.0e6]
}

fn value_of(t: &TypeExpr) -> BoxedStrategy<Value> {
    match t {
        TypeExpr::Int => any::<i64>().prop_map(Value::Int).boxed(),
        TypeExpr::Double => double().prop_map(Value::Double).boxed(),
        TypeExpr::Bool => any::<bool>().prop_map(Value::Bool).boxed(),
        TypeExpr::Str => text().prop_map(Value::Str).boxed(),
        TypeExpr::List(e) => prop::collection::vec(value_of(e), 0..4).prop_map(Value::List).boxed(),
        TypeExpr::Map(k, v) => prop::collection::vec((value_of(k), value_of(v)), 0..4)
            .prop_map(|pairs| {
                let mut out: Vec<(Value, Value)> = Vec::new();
                for (k, v) in pairs {
                    if !out.iter().any(|(k2, _)| *k2 == k) {
                        out.push((k, v));
                    }
                }
                Value::Map(out)
            })
            .boxed(),
        TypeExpr::Optional(inner) => prop_oneof![Just(Value::Null), value_of(inner)].boxed(),
    }
}

fn typed_value() -> impl Strategy<Value = (TypeExpr, Value)> {
    type_expr().prop_flat_map(|t| {
        let v = value_of(&t);
        (Just(t), v)
    })
}

fn problem() -> impl Strategy<Value = Problem> {
    (prop::collection::vec(type_expr(), 0..3), type_expr(), 1usize..4).prop_flat_map(|(params, ret, n)| {
        let case = (
            params.iter().map(value_of).collect::<Vec<_>>(),
            value_of(&ret),
        )
            .prop_map(|(inputs, expected)| TestCase { inputs, expected });
        let sig = Signature::new(
            "f",
            params.iter().enumerate().map(|(i, t)| (["a", "b", "c"][i], t.clone())).collect(),
            ret.clone(),
        );
        (Just(sig), prop::collection::vec(case, n)).prop_map(|(sig, cases)| {
            let mut p = Problem::new("generated", sig, cases);
            p.description = "generated problem".into();
            p.solutions.insert("python".into(), "def f():\n    pass\n".into());
            p
        })
    })
}

fn sample_problems() -> ProblemSet {
    ProblemSet::load_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/problems")).unwrap()
}

fn demo_pool() -> ProblemSet {
    ProblemSet::load_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demos")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_values_conform((t, v) in typed_value()) {
        prop_assert!(t.validate().is_ok());
        prop_assert!(value_conforms(&v, &t));
    }

    #[test]
    fn problem_documents_round_trip(p in problem()) {
        prop_assert!(p.validate().is_ok());
        let doc = emit_problem(&p);
        let back = parse_problem(&doc).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(emit_problem(&back), doc);
    }

    #[test]
    fn pseudo_literals_evaluate_to_their_value((t, v) in typed_value()) {
        let lit = render_literal(&v, &t, &LanguageProfile::pseudo()).unwrap();
        let back = eval_expression(&lit).unwrap();
        prop_assert!(back.deep_eq(&v), "{lit} gave {back:?}");
    }

    #[test]
    fn ca_grows_with_passes(fails in 1usize..40, passes in 0usize..40) {
        let mut statuses = vec![Status::Fail; fails];
        statuses.extend(vec![Status::Pass; passes]);
        let before: f64 = ca_from_statuses(statuses.clone()).unwrap();
        statuses[0] = Status::Pass;
        let after: f64 = ca_from_statuses(statuses).unwrap();
        prop_assert!(after > before);
        prop_assert!((0.0..=100.0).contains(&after));
    }

    #[test]
    fn averages_ignore_insertion_order(
        cells in prop::collection::vec(0u32..=164, 12),
        order in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let langs = ["a", "b", "c", "d"];
        let pairs: Vec<(&str, &str)> = langs
            .iter()
            .flat_map(|s| langs.iter().filter(move |t| *t != s).map(move |t| (*s, *t)))
            .collect();
        let build = |idx: &[usize]| {
            let mut m = CaMatrix::new("m");
            for &i in idx {
                m.insert(pairs[i].0, pairs[i].1, cells[i] as f64 * 100.0 / 164.0).unwrap();
            }
            m
        };
        let a = build(&(0..12).collect::<Vec<_>>());
        let b = build(&order);
        for l in langs {
            prop_assert_eq!(a.comprehension_avg(l).unwrap(), b.comprehension_avg(l).unwrap());
            prop_assert_eq!(a.generation_avg(l).unwrap(), b.generation_avg(l).unwrap());
        }
        prop_assert_eq!(a.to_grid_csv(), b.to_grid_csv());
    }

    #[test]
    fn deltas_are_antisymmetric(vals in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..6)) {
        let base: BTreeMap<String, f64> = vals.iter().enumerate().map(|(i, v)| (format!("t{i}"), v.0)).collect();
        let tuned: BTreeMap<String, f64> = vals.iter().enumerate().map(|(i, v)| (format!("t{i}"), v.1)).collect();
        let fwd = delta_report(&base, &tuned).unwrap();
        let back = delta_report(&tuned, &base).unwrap();
        prop_assert!((fwd.delta_avg + back.delta_avg).abs() < 1e-9);
    }

    #[test]
    fn rounding_is_idempotent(x in -1.0e4f64..1.0e4) {
        let r = round_half_up(x, 2);
        prop_assert_eq!(round_half_up(r, 2), r);
        prop_assert!((r - x).abs() <= 0.005 + 1e-9);
    }

    #[test]
    fn fixture_keys_ignore_line_endings(lines in prop::collection::vec("[a-z ]{0,10}", 1..5)) {
        let params = GenerationParams::default();
        let lf = lines.join("\n");
        let crlf = lines.join("\r\n");
        prop_assert_eq!(fixture_key(&lf, &params), fixture_key(&crlf, &params));
        prop_assert_ne!(fixture_key(&lf, &params), fixture_key(&lf, &GenerationParams::sampling5()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prompts_are_deterministic(
        problem in 0usize..13,
        variant in prop::sample::select(PromptVariant::ALL.to_vec()),
        shots in 0usize..=2,
        langs in prop::sample::subsequence(vec!["python", "go", "cpp", "rust", "pseudo"], 2).prop_shuffle(),
    ) {
        let set = sample_problems();
        let pool = demo_pool();
        let profiles = ProfileRegistry::builtin();
        let t = PromptTemplates::default();
        let p = &set.problems[problem];
        let spec = PromptSpec::new(variant, shots, langs[0], langs[1]);
        let Ok(demos) = select_demos(&pool.problems, &spec, &p.id) else {
            return Ok(());
        };
        let a = build_prompt(&t, &spec, p, &demos, &profiles);
        let b = build_prompt(&t, &spec, p, &demos, &profiles);
        prop_assert_eq!(&a, &b);
        if let Ok(text) = a {
            prop_assert!(text.contains(p.solution(langs[0]).unwrap().trim_end()));
        }
    }
}
