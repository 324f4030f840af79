use enthymeme_core::relax::{build_mapping, build_mapping_with, ConflictError, ConflictPolicy};
use rand::rngs::SmallRng;
use rand::SeedableRng;

mod common;
use common::planted::{check_planted, planted, seed_conflict};

#[test]
fn conflict_free_relations_are_honoured() {
    let mut rng = SmallRng::seed_from_u64(6);
    for _ in 0..1000 {
        let p = planted(&mut rng);
        let g = build_mapping(&p.formulas, &p.relations).expect("planted relations are conflict-free");
        if let Err(e) = check_planted(&p, &g) {
            panic!("{e}\n{g}");
        }
    }
}

#[test]
fn seeded_conflicts_are_rejected() {
    let mut rng = SmallRng::seed_from_u64(7);
    let (mut class_conflicts, mut odd_cycles) = (0, 0);
    for _ in 0..1000 {
        let mut p = planted(&mut rng);
        let g = build_mapping(&p.formulas, &p.relations).unwrap();
        seed_conflict(&mut p, &g, &mut rng);
        match build_mapping(&p.formulas, &p.relations) {
            Err(ConflictError::ContradictsMatchClass { .. }) => class_conflicts += 1,
            Err(ConflictError::OddCycle { .. }) => odd_cycles += 1,
            Ok(m) => panic!("conflict not detected:\n{m}"),
        }
        let dropped = build_mapping_with(&p.formulas, &p.relations, ConflictPolicy::DropContradict).unwrap();
        assert!(!dropped.dropped.is_empty());
    }
    assert!(class_conflicts > 0 && odd_cycles > 0);
}
