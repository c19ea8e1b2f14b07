use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use circlebundle::{make_connection, make_flat_torus, make_icosphere, Connection, DiscreteSection, EnergyModel, Functional, SurfaceMesh};

struct Fixture {
    sphere: Arc<SurfaceMesh>,
    sphere_conns: Vec<(i64, Arc<Connection>)>,
    torus: Arc<SurfaceMesh>,
    torus_conn: Arc<Connection>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let sphere = Arc::new(make_icosphere(2, 1.0).unwrap());
        let sphere_conns = [0, 2, 4, -2].iter().map(|&e| (e, Arc::new(make_connection(&sphere, e).unwrap()))).collect();
        let torus = Arc::new(make_flat_torus(8, 6, 1.0, 0.7).unwrap());
        let torus_conn = Arc::new(Connection::trivial(&torus));
        Fixture { sphere, sphere_conns, torus, torus_conn }
    })
}

fn angles(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_index_equals_euler_number(which in 0usize..4, theta in angles(162)) {
        let f = fixture();
        let (e, conn) = &f.sphere_conns[which];
        let s = DiscreteSection::new(f.sphere.clone(), conn.clone(), theta).unwrap();
        prop_assert_eq!(s.total_index(), *e);
        prop_assert_eq!(s.face_indices().iter().sum::<i64>(), *e);
    }

    #[test]
    fn torus_sections_have_no_net_index(theta in angles(48)) {
        let f = fixture();
        let s = DiscreteSection::new(f.torus.clone(), f.torus_conn.clone(), theta).unwrap();
        prop_assert_eq!(s.total_index(), 0);
    }

    #[test]
    fn gauge_changes_leave_indices_and_energies_alone(theta in angles(162), phi in angles(162)) {
        let f = fixture();
        let (_, conn) = &f.sphere_conns[1];
        let s = DiscreteSection::new(f.sphere.clone(), conn.clone(), theta).unwrap();
        let g = s.gauge_transform(&phi).unwrap();
        prop_assert_eq!(s.face_indices(), g.face_indices());
        let model = EnergyModel::new(2).unwrap();
        let (a, b) = (model.volume(&s).unwrap(), model.volume(&g).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a, "{} vs {}", a, b);
        let (a, b) = (model.twisting(&s).unwrap(), model.twisting(&g).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn stretched_volume_sits_between_twisting_and_area(theta in angles(48), lambda in 1.0f64..1e3) {
        let f = fixture();
        let s = DiscreteSection::new(f.torus.clone(), f.torus_conn.clone(), theta).unwrap();
        let model = EnergyModel::new(2).unwrap();
        let tw = model.twisting(&s).unwrap();
        let st = model.evaluate(&s, Functional::Stretched { lambda }).unwrap();
        let area = f.torus.total_area();
        prop_assert!(st >= tw - 1e-12);
        prop_assert!(st <= tw + area / lambda + 1e-12);
    }

    #[test]
    fn small_moves_away_from_singular_faces_keep_indices(theta in angles(48), v in 0usize..48, d in -1e-9f64..1e-9) {
        let f = fixture();
        let s = DiscreteSection::new(f.torus.clone(), f.torus_conn.clone(), theta.clone()).unwrap();
        let mut t2 = theta;
        t2[v] += d;
        let s2 = DiscreteSection::new(f.torus.clone(), f.torus_conn.clone(), t2).unwrap();
        // a tiny move can only change faces whose differences sit on the ±π cut
        let diffs = s.edge_differences();
        let on_cut = f.torus.star(v).faces.iter().any(|&g| {
            f.torus.face_edges(g).iter().any(|&e| (diffs[e].abs() - std::f64::consts::PI).abs() < 1e-8)
        });
        if !on_cut {
            prop_assert_eq!(s.face_indices(), s2.face_indices());
        }
    }
}
