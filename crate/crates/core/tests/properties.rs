mod common;

use common::*;
use proptest::prelude::*;
use qcond::boards::{apply_board, double_board, psi_gram_matrix};
use qcond::control::{
    align_representatives, control_branch_residuals, decide_controllable, decide_controllable_qubit,
    solve_fixed_vector, synthesize_control, verify_control, FixedVectorMode,
};
use qcond::discrimination::{jointly_discriminable, pairwise_perfectly_discriminable, Verdict};
use qcond::gateset::{canonical_representative, join_partitions};
use qcond::markability::{
    check_bipartition_markable_qubit, compose_markings, minimal_partition_qubit, synthesize_marking_bipartition_qubit,
    synthesize_marking_qubit, verify_marking,
};
use qcond::numkernel::{direct_sum, eig_unitary, equal_up_to_phase, is_unitary, kron, span_intersection_dim};
use qcond::{CMatrix, GateSet, Partition, Tolerance, Unitary};
use rand::Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases: std::env::var("PROPTEST_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(cases), failure_persistence: None, ..ProptestConfig::default() }
}

fn partition_strategy(len: usize) -> impl Strategy<Value = Partition> {
    prop::collection::vec(0..len, len).prop_map(|labels| Partition::from_labels(&labels))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn eigensystem_reconstructs(seed in any::<u64>(), d in 1usize..5) {
        let u = haar(d, &mut rng(seed));
        let pairs = eig_unitary(&u, tol()).unwrap();
        let mut rebuilt = CMatrix::zeros(d, d);
        for (i, p) in pairs.iter().enumerate() {
            prop_assert!((p.value.norm() - 1.0).abs() <= 1e-9);
            for q in &pairs[i + 1..] {
                prop_assert!(p.vector.dotc(&q.vector).norm() <= 1e-8);
            }
            rebuilt += &p.vector * p.vector.adjoint() * p.value;
        }
        prop_assert!((rebuilt - u).norm() <= 1e-8);
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, cc, dd) = (haar(2, &mut r), haar(3, &mut r), haar(2, &mut r), haar(3, &mut r));
        let lhs = kron(&a, &b) * kron(&cc, &dd);
        let rhs = kron(&(&a * &cc), &(&b * &dd));
        prop_assert!((lhs - rhs).norm() <= 1e-8);
        prop_assert!((kron(&a, &b) - kron_loops(&a, &b)).norm() == 0.0);
    }

    #[test]
    fn direct_sum_unitary_iff_blocks(seed in any::<u64>(), scale in 0.5f64..1.5) {
        let mut r = rng(seed);
        let a = haar(2, &mut r);
        let b = haar(3, &mut r) * c(scale, 0.0);
        let sum = direct_sum(&a, &b).unwrap();
        prop_assert_eq!(is_unitary(&sum, tol()), is_unitary(&a, tol()) && is_unitary(&b, tol()));
    }

    #[test]
    fn span_intersection_symmetric(seed in any::<u64>(), na in 1usize..4, nb in 1usize..4, shared in 0usize..2) {
        let mut r = rng(seed);
        let mut sa: Vec<CMatrix> = (0..na).map(|_| haar(2, &mut r)).collect();
        let sb: Vec<CMatrix> = (0..nb).map(|_| haar(2, &mut r)).collect();
        if shared == 1 {
            sa.push(&sb[0] * c(0.3, -1.2));
        }
        let ra: Vec<&CMatrix> = sa.iter().collect();
        let rb: Vec<&CMatrix> = sb.iter().collect();
        let (a1, b1, i1) = span_intersection_dim(&ra, &rb, tol()).unwrap();
        let (b2, a2, i2) = span_intersection_dim(&rb, &ra, tol()).unwrap();
        prop_assert_eq!((a1, b1, i1), (a2, b2, i2));
        if shared == 1 {
            prop_assert!(i1 >= 1);
        }
    }

    #[test]
    fn equal_up_to_phase_is_an_equivalence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = haar(3, &mut r);
        let (p, q) = (random_phase(&mut r), random_phase(&mut r));
        let (v, w) = (&u * p, &u * p * q);
        let tight = Tolerance::new(1e-12).unwrap();
        prop_assert!(equal_up_to_phase(&u, &u, tight).unwrap().is_some());
        let uv = equal_up_to_phase(&u, &v, tight).unwrap().unwrap();
        let vu = equal_up_to_phase(&v, &u, tight).unwrap().unwrap();
        prop_assert!((uv * vu - c(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(equal_up_to_phase(&v, &w, tight).unwrap().is_some());
        prop_assert!(equal_up_to_phase(&u, &w, tight).unwrap().is_some());
        prop_assert!((&u * uv - &v).norm() <= 1e-10);
        prop_assert!(equal_up_to_phase(&u, &haar(3, &mut r), tight).unwrap().is_none());
    }

    #[test]
    fn canonical_representative_idempotent(seed in any::<u64>(), d in 1usize..4) {
        let mut r = rng(seed);
        let u = Unitary::new("u", haar(d, &mut r) * random_phase(&mut r));
        let once = canonical_representative(&u);
        let twice = canonical_representative(&once);
        prop_assert_eq!(&once, &twice);
        let phase = equal_up_to_phase(&u.matrix, &once.matrix, tol()).unwrap().unwrap();
        prop_assert!((&u.matrix * phase - &once.matrix).norm() <= 1e-10);
    }

    #[test]
    fn join_laws(p in partition_strategy(6), q in partition_strategy(6), s in partition_strategy(6)) {
        let pq = join_partitions(&p, &q).unwrap();
        prop_assert_eq!(&pq, &join_partitions(&q, &p).unwrap());
        prop_assert_eq!(&join_partitions(&p, &p).unwrap(), &p);
        prop_assert_eq!(
            join_partitions(&pq, &s).unwrap(),
            join_partitions(&p, &join_partitions(&q, &s).unwrap()).unwrap()
        );
        prop_assert!(pq.refines(&p) && pq.refines(&q));
    }

    #[test]
    fn pairwise_symmetric_and_phase_invariant(seed in any::<u64>(), d in 2usize..4, traceless in any::<bool>()) {
        let mut r = rng(seed);
        let u = haar(d, &mut r);
        let v = if traceless && d == 2 { &u * haar(2, &mut r) * pz() * haar(2, &mut r).adjoint() } else { haar(d, &mut r) };
        let (a, b) = (Unitary::new("a", u), Unitary::new("b", v));
        let ab = pairwise_perfectly_discriminable(&a, &b, tol()).unwrap();
        prop_assert_eq!(ab, pairwise_perfectly_discriminable(&b, &a, tol()).unwrap());
        let shifted = a.scaled(random_phase(&mut r));
        prop_assert_eq!(ab, pairwise_perfectly_discriminable(&shifted, &b, tol()).unwrap());
    }

    #[test]
    fn qubit_hull_agrees_with_trace(seed in any::<u64>(), gap in 0.0f64..std::f64::consts::PI) {
        // eigenphases 0 and `gap` on a random frame; hull contains 0 iff gap = π
        let mut r = rng(seed);
        let frame = haar(2, &mut r);
        let rel = &frame * phase_gate(gap) * frame.adjoint();
        let u = haar(2, &mut r);
        let v = &u * &rel;
        let by_trace = (u.adjoint() * &v).trace().norm() <= 2e-9;
        let hull = qcond::discrimination::hull::origin_distance(&[(1.0, 0.0), (gap.cos(), gap.sin())]) <= 1e-9;
        prop_assert_eq!(by_trace, hull);
        let via_api = pairwise_perfectly_discriminable(&Unitary::new("u", u), &Unitary::new("v", v), tol()).unwrap();
        prop_assert_eq!(via_api, by_trace);
    }

    #[test]
    fn joint_implies_pairwise(seed in any::<u64>(), k in 1usize..5) {
        let mut r = rng(seed);
        let frame = haar(2, &mut r);
        let paulis = [eye(2), px(), py(), pz()];
        let ms: Vec<CMatrix> = paulis[..k].iter().map(|p| &frame * p * frame.adjoint() * random_phase(&mut r)).collect();
        let gs = gate_set(ms);
        prop_assert_eq!(jointly_discriminable(&gs), Verdict::Yes);
        let m = gs.members();
        for i in 0..k {
            for j in i + 1..k {
                prop_assert!(pairwise_perfectly_discriminable(&m[i], &m[j], tol()).unwrap());
            }
        }
    }
}

/// Random qubit set that is markable, jointly discriminable, or generic.
fn mixed_qubit_set(seed: u64) -> GateSet {
    let mut r = rng(seed);
    let kind = r.gen_range(0..4);
    let ms = match kind {
        0 => {
            let (nd, na) = (r.gen_range(1..4), r.gen_range(1..4));
            structured_set(nd, na, &mut r).0
        }
        1 => {
            let frame = haar(2, &mut r);
            let k = r.gen_range(2..5);
            [eye(2), px(), py(), pz()][..k].iter().map(|p| &frame * p * frame.adjoint()).collect()
        }
        2 => {
            let k = r.gen_range(2..4);
            (0..k).map(|_| haar(2, &mut r)).collect()
        }
        _ => {
            let frame = haar(2, &mut r);
            let k = r.gen_range(1..4);
            (0..k).map(|_| &frame * random_diagonal(&mut r) * frame.adjoint()).collect()
        }
    };
    gate_set(ms)
}

fn rephased(gs: &GateSet, seed: u64) -> GateSet {
    let mut r = rng(seed ^ 0x5eed);
    let members = gs.members().iter().map(|u| u.scaled(random_phase(&mut r))).collect();
    gs.with_members(members).unwrap()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn markability_phase_invariant(seed in any::<u64>()) {
        let gs = mixed_qubit_set(seed);
        let a = minimal_partition_qubit(&gs).unwrap();
        let b = minimal_partition_qubit(&rephased(&gs, seed)).unwrap();
        prop_assert_eq!(a.markable, b.markable);
        prop_assert_eq!(a.partition, b.partition);
    }

    #[test]
    fn synthesized_markings_verify_with_zero_one_gram(seed in any::<u64>()) {
        let gs = mixed_qubit_set(seed);
        let v = minimal_partition_qubit(&gs).unwrap();
        prop_assume!(v.markable);
        let mc = synthesize_marking_qubit(&gs, &v).unwrap();
        let (ok, residual) = verify_marking(&gs, &mc).unwrap();
        prop_assert!(ok, "residual {}", residual);
        // outcome states orthonormal
        for (i, a) in mc.outcomes.iter().enumerate() {
            for (j, b) in mc.outcomes.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.dotc(b).norm() - expect).abs() <= 1e-9);
            }
        }
        let gram = psi_gram_matrix(&mc.board, &gs).unwrap();
        for i in 0..gs.len() {
            for j in 0..gs.len() {
                let same = mc.partition.block_of(i) == mc.partition.block_of(j);
                let expect = if same { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)].norm() - expect).abs() <= 1e-8);
            }
        }
        // cross-block pairs are perfectly discriminable
        let m = gs.members();
        for i in 0..gs.len() {
            for j in 0..gs.len() {
                if mc.partition.block_of(i) != mc.partition.block_of(j) {
                    prop_assert!(pairwise_perfectly_discriminable(&m[i], &m[j], tol()).unwrap());
                }
            }
        }
        // independent simulation agrees with the crate's board evaluation
        for u in gs.members() {
            let diff = simulate_board(&mc.board, &u.matrix) - apply_board(&mc.board, &u.matrix).unwrap();
            prop_assert!(diff.norm() <= 1e-10);
        }
    }

    #[test]
    fn doubling_squares_gram_moduli(seed in any::<u64>()) {
        let gs = mixed_qubit_set(seed);
        let v = minimal_partition_qubit(&gs).unwrap();
        prop_assume!(v.markable);
        let mc = synthesize_marking_qubit(&gs, &v).unwrap();
        let g1 = psi_gram_matrix(&mc.board, &gs).unwrap();
        let g2 = psi_gram_matrix(&double_board(&mc.board).unwrap(), &gs).unwrap();
        for (a, b) in g1.iter().zip(g2.iter()) {
            prop_assert!((a.norm().powi(2) - b.norm()).abs() <= 1e-8);
        }
    }

    #[test]
    fn board_evaluation_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut r = rng(seed);
        let (ms, _) = structured_set(1, 1, &mut r);
        let gs = gate_set(ms);
        let mc = synthesize_marking_qubit(&gs, &minimal_partition_qubit(&gs).unwrap()).unwrap();
        let (u, v) = (haar(2, &mut r), haar(2, &mut r));
        let (ca, cb) = (c(a, 0.3), c(-0.7, b));
        let lhs = apply_board(&mc.board, &(&u * ca + &v * cb)).unwrap();
        let rhs = apply_board(&mc.board, &u).unwrap() * ca + apply_board(&mc.board, &v).unwrap() * cb;
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn markings_compose_to_the_join(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frame = haar(2, &mut r);
        let ms: Vec<CMatrix> = [eye(2), pz(), px(), py()]
            .iter()
            .map(|p| &frame * p * frame.adjoint() * random_phase(&mut r))
            .collect();
        let gs = gate_set(ms);
        let bips = [vec![vec![0, 1], vec![2, 3]], vec![vec![0, 2], vec![1, 3]], vec![vec![0, 3], vec![1, 2]]];
        let i = r.gen_range(0..3);
        let j = (i + r.gen_range(1..3)) % 3;
        let p = Partition::new(bips[i].clone(), 4).unwrap();
        let q = Partition::new(bips[j].clone(), 4).unwrap();
        let a = synthesize_marking_bipartition_qubit(&gs, &p).unwrap();
        let b = synthesize_marking_bipartition_qubit(&gs, &q).unwrap();
        let joined = compose_markings(&a, &b).unwrap();
        prop_assert_eq!(&joined.partition, &join_partitions(&p, &q).unwrap());
        prop_assert!(verify_marking(&gs, &joined).unwrap().0);
    }

    #[test]
    fn three_dimensional_span_never_markable(seed in any::<u64>(), lone in 0usize..4) {
        let mut r = rng(seed);
        let frame = haar(2, &mut r);
        let ms: Vec<CMatrix> = [eye(2), px(), py(), pz()]
            .iter()
            .map(|p| &frame * p * frame.adjoint() * random_phase(&mut r))
            .collect();
        let gs = gate_set(ms);
        let rest: Vec<usize> = (0..4).filter(|&k| k != lone).collect();
        let p = Partition::new(vec![vec![lone], rest], 4).unwrap();
        prop_assert!(!check_bipartition_markable_qubit(&gs, &p).unwrap());
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn controllable_sets_round_trip(seed in any::<u64>()) {
        let gs = mixed_qubit_set(seed);
        let (ok, witness) = decide_controllable_qubit(&gs).unwrap();
        prop_assume!(ok);
        let w = witness.unwrap();
        let cc = synthesize_control(&w).unwrap();
        let (passed, residual, _) = verify_control(&cc.representatives, &cc).unwrap();
        prop_assert!(passed && residual <= 1e-9, "residual {}", residual);
        for k in 0..gs.len() {
            let (r0, r1) = control_branch_residuals(&cc.representatives, &cc, k).unwrap();
            prop_assert!(r0 <= 1e-9 && r1 <= 1e-9);
            let diff = simulate_board(&cc.board, cc.representatives.matrix(k)) - apply_board(&cc.board, cc.representatives.matrix(k)).unwrap();
            prop_assert!(diff.norm() <= 1e-10);
        }
        // representatives still name the same gates
        for (u, v) in gs.members().iter().zip(cc.representatives.members()) {
            prop_assert!(equal_up_to_phase(&u.matrix, &v.matrix, tol()).unwrap().is_some());
        }
    }

    #[test]
    fn two_member_sets_always_controllable(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let (u, v) = (haar(d, &mut r), haar(d, &mut r));
        let gs = gate_set(vec![u.clone(), v.clone()]);
        let c = decide_controllable(&gs).unwrap();
        prop_assert_eq!(c.verdict, Verdict::Yes);
        let w = c.witness.unwrap();
        prop_assert!(w.partition.is_trivial());
        let psi = &w.fixed_vector.psi;
        let image = u.adjoint() * &v * psi;
        let lambda = psi.dotc(&image);
        prop_assert!((image - psi * lambda).norm() <= 1e-8);
        let cc = synthesize_control(&w).unwrap();
        prop_assert!(verify_control(&cc.representatives, &cc).unwrap().0);
    }

    #[test]
    fn alignment_enforces_strict_fixed_vector(seed in any::<u64>()) {
        let mut r = rng(seed);
        let frame = haar(2, &mut r);
        let k = r.gen_range(1..5);
        let ms: Vec<CMatrix> = (0..k).map(|_| &frame * random_diagonal(&mut r) * frame.adjoint()).collect();
        let gs = gate_set(ms);
        let p = Partition::trivial(k);
        let fv = solve_fixed_vector(&gs, &p, FixedVectorMode::Projective).unwrap();
        let aligned = align_representatives(&gs, &p, &fv).unwrap();
        let v = aligned.matrix(0);
        for i in 0..k {
            let moved = v.adjoint() * aligned.matrix(i) * &fv.psi;
            prop_assert!((moved - &fv.psi).norm() <= 1e-8);
        }
        prop_assert!(solve_fixed_vector(&aligned, &p, FixedVectorMode::Strict).is_some());
    }

    #[test]
    fn phase_perturbation_breaks_control(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let gs = mixed_qubit_set(seed);
        let (ok, witness) = decide_controllable_qubit(&gs).unwrap();
        prop_assume!(ok);
        let cc = synthesize_control(&witness.unwrap()).unwrap();
        let k = pick.index(gs.len());
        let mut members = cc.representatives.members().to_vec();
        members[k] = members[k].scaled(cis(std::f64::consts::FRAC_PI_3));
        let perturbed = cc.representatives.with_members(members).unwrap();
        let (passed, residual, _) = verify_control(&perturbed, &cc).unwrap();
        prop_assert!(!passed && residual >= 0.5, "residual {}", residual);
    }

    #[test]
    fn uncontrollable_sets_have_no_fixed_vector(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ms: Vec<CMatrix> = (0..3).map(|_| haar(2, &mut r)).collect();
        let gs = gate_set(ms);
        let v = minimal_partition_qubit(&gs).unwrap();
        prop_assume!(!v.markable);
        prop_assert!(!decide_controllable_qubit(&gs).unwrap().0);
        for labels in [[0, 0, 1], [0, 1, 0], [0, 1, 1]] {
            let p = Partition::from_labels(&labels);
            let m = gs.members();
            let cross_ok = (0..3).all(|i| (0..3).all(|j| {
                labels[i] == labels[j] || pairwise_perfectly_discriminable(&m[i], &m[j], tol()).unwrap()
            }));
            if cross_ok {
                prop_assert!(solve_fixed_vector(&gs, &p, FixedVectorMode::Projective).is_none());
            }
        }
        prop_assert!(solve_fixed_vector(&gs, &Partition::trivial(3), FixedVectorMode::Projective).is_none());
    }
}

#[test]
fn degenerate_eigenbasis_choice_does_not_matter() {
    // the same set presented with different degenerate frames gives the same verdicts
    let mut r = rng(7);
    for _ in 0..20 {
        let frame = haar(2, &mut r);
        let lifted = |m: &CMatrix| &frame * m * frame.adjoint();
        let gs = gate_set(vec![eye(2), lifted(&pz()), lifted(&px())]);
        let v = minimal_partition_qubit(&gs).unwrap();
        assert!(v.markable);
        assert_eq!(v.partition.unwrap(), Partition::singletons(3));
        let (ok, _) = decide_controllable_qubit(&gs).unwrap();
        assert!(ok);
    }
}
