use proptest::prelude::*;
use rrdt_core::env::{self, maps};
use rrdt_core::forest::{Forest, JoinReport, NodeId, TreeKind};
use rrdt_core::{Configuration, Environment};

const RES: f64 = 0.5;

/// 30×30 world with a bar across the middle.
fn barred() -> Environment {
    let w = 30usize;
    let occ = (0..w * w).map(|i| (i / w == 15) && (5..25).contains(&(i % w))).collect();
    Environment::from_grid(vec![0.0, 0.0], vec![w, w], vec![1.0, 1.0], occ).unwrap()
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [0.0f64..30.0, 0.0f64..30.0]
}

/// Root tree built by attaching each free point to a random visible node.
fn build_tree(env: &Environment, points: &[[f64; 2]], picks: &[usize]) -> Option<Forest> {
    let mut forest = Forest::new(2);
    let mut it = points.iter().filter(|p| env.point_free(*p));
    let root = it.next()?;
    forest.insert_root(Configuration::from(*root), TreeKind::Root, env).ok()?;
    for (p, &pick) in it.zip(picks) {
        let q = Configuration::from(*p);
        let visible: Vec<NodeId> = forest
            .node_ids()
            .filter(|&n| env.path_free(forest.config(n).coords(), p, RES))
            .collect();
        if let Some(&parent) = visible.get(pick % visible.len().max(1)) {
            forest.attach(q, parent);
        }
    }
    Some(forest)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn choose_parent_matches_exhaustive_enumeration(
        points in prop::collection::vec(point(), 2..12),
        picks in prop::collection::vec(any::<usize>(), 12),
        q in point(),
        radius in 3.0f64..40.0,
    ) {
        let env = barred();
        prop_assume!(env.point_free(&q));
        let Some(mut forest) = build_tree(&env, &points, &picks) else { return Ok(()) };
        let q = Configuration::new(q.to_vec());
        let Some(first) = forest.node_ids().find(|&n| env.path_free(forest.config(n).coords(), q.coords(), RES)) else {
            return Ok(());
        };
        let before: Vec<f64> = forest.node_ids().map(|n| forest.cost(n)).collect();
        let node = forest.attach(q.clone(), first);
        // a huge radius constant pins the ball at ε
        forest.rewire(node, &env, RES, 1e12, radius).unwrap();
        forest.check_invariants().unwrap();

        let best = forest
            .node_ids()
            .filter(|&n| n != node)
            .filter(|&n| forest.config(n).distance(&q) <= radius || n == first)
            .filter(|&n| env.path_free(forest.config(n).coords(), q.coords(), RES))
            .map(|n| before[n.index()] + forest.config(n).distance(&q))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((forest.cost(node) - best).abs() <= 1e-9, "{} vs {}", forest.cost(node), best);

        for n in forest.node_ids().filter(|&n| n != node) {
            prop_assert!(forest.cost(n) <= before[n.index()] + 1e-9);
            let d = forest.config(n).distance(&q);
            if d <= radius && env.path_free(forest.config(n).coords(), q.coords(), RES) {
                prop_assert!(forest.cost(n) <= forest.cost(node) + d + 1e-9);
            }
        }
    }

    #[test]
    fn segment_checks_are_symmetric(a in point(), b in point(), res in 0.05f64..2.0) {
        let env = barred();
        prop_assert_eq!(env.path_free(&a, &b, res), env.path_free(&b, &a, res));
        if env.path_free(&a, &b, res) {
            prop_assert!(env.point_free(&a) && env.point_free(&b));
        }
    }

    #[test]
    fn free_samples_are_free(seed in any::<u64>()) {
        let env = maps::bundled("clutter").unwrap();
        let mut rng = rrdt_core::rng::stream(seed, 0);
        for _ in 0..50 {
            let (q, _) = env.sample_free(&mut rng).unwrap();
            prop_assert!(env.point_free(q.coords()));
        }
    }

    #[test]
    fn epsilon_joins_keep_the_forest_consistent(
        points in prop::collection::vec(point(), 1..60),
        eps in 1.5f64..6.0,
    ) {
        let env = barred();
        let mut forest = Forest::new(2);
        forest.insert_root(Configuration::from([2.0, 2.0]), TreeKind::Root, &env).unwrap();
        for p in points.iter().filter(|p| env.point_free(*p)) {
            let q = Configuration::from(*p);
            match forest.join_within_epsilon(&q, eps, &env, RES).unwrap() {
                JoinReport::Joined(j) => {
                    prop_assert!(forest.config(forest.parent(j.node).unwrap()).distance(&q) <= eps * (1.0 + 1e-9));
                    prop_assert_eq!(forest.tree_of(j.node), j.tree);
                }
                JoinReport::NoJoin { blocked: 0 } => {
                    forest.insert_root(q, TreeKind::DTree, &env).unwrap();
                }
                JoinReport::NoJoin { .. } => {}
            }
            forest.check_invariants().unwrap();
        }
        // tree roots were founded more than ε from every earlier node
        for c in forest.creations().iter().skip(1) {
            prop_assert!(c.nearest_distance.is_none_or(|d| d > eps));
        }
        prop_assert!(forest.trees_created() as usize <= maps::packing_bound(&env, eps) + 1);
        // root-tree costs are true path lengths
        for n in forest.node_ids().filter(|&n| forest.in_root_tree(n)) {
            let path = forest.extract_path(n).unwrap();
            prop_assert!((path.length() - forest.cost(n)).abs() <= 1e-9 * path.length().max(1.0));
            prop_assert!(path.is_feasible(&env, RES));
        }
    }

    #[test]
    fn grid_round_trips(w in 2usize..20, h in 2usize..20, bits in prop::collection::vec(any::<bool>(), 400)) {
        let mut occ: Vec<bool> = bits[..w * h].to_vec();
        occ[0] = false;
        let env = Environment::from_grid(vec![0.0, 0.0], vec![w, h], vec![1.0, 1.0], occ).unwrap();
        let back = env::parse_binary_grid(&env::write_binary_grid(&env)).unwrap();
        prop_assert_eq!(back.occupancy(), env.occupancy());
        let pgm = env::parse_pgm(&env::write_pgm(&env), 0.5).unwrap();
        prop_assert_eq!(pgm.occupancy(), env.occupancy());
    }
}
