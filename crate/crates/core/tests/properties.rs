//! Property tests for the special function, the objective and the file
//! formats. Expected values come from direct formulas written here.

use proptest::prelude::*;
use proxsplit::data_io::{binarize, parse_libsvm, write_libsvm, OneVsAll, RawDataset, RawRow};
use proxsplit::lambert_w::{eval_w, forward_map, BRANCH_THRESHOLD};
use proxsplit::model::{BlockNorm, BlockPartition, Problem, RegularizerSpec};
use proxsplit::prox::ScalarLoss;
use proxsplit::synthetic::{generate, SyntheticSpec};

fn small_problem(loss: ScalarLoss, reg: RegularizerSpec) -> Problem {
    let spec = SyntheticSpec { n_samples: 30, n_features: 9, support: 3, seed: 17, ..SyntheticSpec::default() };
    let (data, _) = generate(&spec).unwrap();
    Problem::new(data, BlockPartition::from_offsets(vec![0, 2, 5, 9]).unwrap(), reg, loss).unwrap()
}

fn any_loss() -> impl Strategy<Value = ScalarLoss> {
    prop_oneof![
        Just(ScalarLoss::Logistic),
        Just(ScalarLoss::HingeQ1),
        Just(ScalarLoss::HingeQ2),
        Just(ScalarLoss::Huber)
    ]
}

fn any_reg() -> impl Strategy<Value = RegularizerSpec> {
    (0.0..5.0f64, any::<bool>()).prop_map(|(lambda, group)| {
        if group {
            RegularizerSpec::group_l2(lambda)
        } else {
            RegularizerSpec::l1(lambda)
        }
    })
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 9)
}

proptest! {
    #[test]
    fn w_inverts_the_forward_map(r in 1e-4..1e4f64, w in 0.0..30.0f64) {
        let v = forward_map(r, w);
        prop_assume!(v.is_finite());
        let got = eval_w(r, v).unwrap().value;
        prop_assert!((got - w).abs() <= 1e-10 * w.max(1.0), "r {r} w {w} got {got}");
    }

    #[test]
    fn w_is_strictly_increasing(r in 1e-4..1e4f64, a in 0.0..1e3f64, b in 0.0..1e3f64) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (wl, wh) = (eval_w(r, lo).unwrap().value, eval_w(r, hi).unwrap().value);
        prop_assert!(wl < wh, "r {r}: W({lo}) = {wl}, W({hi}) = {wh}");
    }

    #[test]
    fn w_is_increasing_for_negative_arguments(r in BRANCH_THRESHOLD..1e3f64, a in -1e3..0.0f64, b in -1e3..0.0f64) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(eval_w(r, lo).unwrap().value < eval_w(r, hi).unwrap().value);
    }

    #[test]
    fn objective_is_convex_along_segments(
        loss in any_loss(), reg in any_reg(), a in weights(), b in weights(), t in 0.0..1.0f64,
    ) {
        let p = small_problem(loss, reg);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let lhs = p.objective(&mid).unwrap();
        let rhs = t * p.objective(&a).unwrap() + (1.0 - t) * p.objective(&b).unwrap();
        prop_assert!(lhs <= rhs + 1e-10 * rhs.abs().max(1.0), "{lhs} > {rhs}");
    }

    #[test]
    fn objective_is_nonnegative(loss in any_loss(), reg in any_reg(), w in weights()) {
        prop_assert!(small_problem(loss, reg).objective(&w).unwrap() >= 0.0);
    }

    #[test]
    fn block_terms_add_up_to_the_objective(loss in any_loss(), reg in any_reg(), w in weights()) {
        let p = small_problem(loss, reg.clone());
        let terms = p.regularizer_terms(&w);
        prop_assert_eq!(terms.len(), 3);
        for (b, (lo, hi)) in [(0, 2), (2, 5), (5, 9)].into_iter().enumerate() {
            let block = &w[lo..hi];
            let norm = match reg.norm(b) {
                BlockNorm::L1 => block.iter().map(|x| x.abs()).sum::<f64>(),
                BlockNorm::L2 => block.iter().map(|x| x * x).sum::<f64>().sqrt(),
            };
            prop_assert!((terms[b] - reg.lambda * norm).abs() <= 1e-12 * (1.0 + terms[b].abs()));
        }
        let total = terms.iter().sum::<f64>() + p.data_term(&w);
        prop_assert_eq!(total, p.objective(&w).unwrap());
    }

    #[test]
    fn libsvm_text_round_trips(
        rows in prop::collection::vec(
            (prop_oneof![Just(-1.0), Just(1.0), Just(3.0)], prop::collection::btree_map(1usize..40, -1e6..1e6f64, 0..8)),
            1..20,
        ),
    ) {
        let raw = RawDataset {
            n_features: 40,
            rows: rows.into_iter().map(|(label, m)| RawRow { label, entries: m.into_iter().collect() }).collect(),
        };
        let mut text = Vec::new();
        write_libsvm(&raw, &mut text).unwrap();
        let back = parse_libsvm(text.as_slice(), Some(40)).unwrap();
        prop_assert_eq!(back, raw);
    }
}

#[test]
fn one_vs_all_agrees_with_each_binary_task() {
    // With two classes the larger score must follow the sign of the
    // binarized task's margin.
    let text = "1 1:2 2:0.5\n2 1:-1 2:1\n1 1:1.5\n2 2:3\n";
    let raw = parse_libsvm(text.as_bytes(), None).unwrap();
    let w1 = vec![1.0, -0.5];
    let w2: Vec<f64> = w1.iter().map(|x| -x).collect();
    let ova = OneVsAll::new(vec![(1.0, w1.clone()), (2.0, w2)]).unwrap();
    let task = binarize(&raw, 1.0).unwrap();
    let x = raw.to_matrix().unwrap();
    for l in 0..raw.n_samples() {
        let margin = task.margin(l, &w1);
        let predicted = ova.predict_row(&x, l);
        assert_eq!(predicted, if x.row_dot(l, &w1) > 0.0 { 1.0 } else { 2.0 }, "row {l}");
        // The binary task labels class 1 as +1.
        assert_eq!(margin > 0.0, (predicted == 1.0) == (task.y()[l] > 0.0), "row {l}");
    }
}
