use proptest::prelude::*;

use ertsens::analytic::geometric_factor;
use ertsens::fvm::mpfa::boundary_bcs;
use ertsens::fvm::{assemble_subdomain, assemble_system, MaterialField};
use ertsens::greens::{factorize, solve_greens, GreensTable};
use ertsens::io::{read_vtk, write_vtk, Num, VtkField};
use ertsens::mesh::{build_box_mesh, BoxMeshSpec, ElectrodeSpec, Grading, HoleSpec, LinerSpec, MixedDimMesh};
use ertsens::scenario::rmse_percent;
use ertsens::sensitivity::quadrupole_field;
use ertsens::sparse::lu_solve;
use ertsens::survey::{enumerate_configs, Quadrupole};

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Electrode sites on a 7 × 7 lattice over the 2 × 2 m top surface.
fn sites() -> Vec<(f64, f64)> {
    let xs = [0.3, 0.5, 0.8, 1.0, 1.2, 1.5, 1.7];
    xs.iter().flat_map(|&x| xs.iter().map(move |&y| (x, y))).collect()
}

fn liner_box(sites: &[(f64, f64)], hole: bool) -> MixedDimMesh {
    let spec = BoxMeshSpec {
        lo: [0.0; 3],
        hi: [2.0, 2.0, 1.0],
        grading: Grading { near_electrode: 0.2, near_liner: 0.2, boundary: 0.5, growth: 1.6 },
        liner: Some(LinerSpec { lo: [0.6, 0.6, 0.6], hi: [1.4, 1.4, 1.0], hole: hole.then_some(HoleSpec { center: [1.0, 1.0], diameter: 0.2 }) }),
        electrodes: sites.iter().map(|&(x, y)| ElectrodeSpec { x, y, length: 0.1 }).collect(),
    };
    build_box_mesh(&spec).unwrap()
}

fn materials(mesh: &MixedDimMesh, rho: &[f64], rho_liner: f64) -> MaterialField {
    let mut m = MaterialField::homogeneous(mesh, 1.0, rho_liner, 2e-7, 2e-3, 2.5e-3);
    for (c, r) in m.rho.iter_mut().enumerate() {
        *r = rho[c % rho.len()];
    }
    m
}

fn greens(mesh: &MixedDimMesh, m: &MaterialField) -> GreensTable {
    let sys = assemble_system(mesh, m).unwrap();
    solve_greens(mesh, &sys, &factorize(&sys).unwrap(), 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Four-electrode subsets give three quadrupoles, three-electrode subsets
    /// three pole-dipoles and pairs one pole-pole.
    #[test]
    fn unfiltered_enumeration_count(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 4..10)) {
        let positions: Vec<[f64; 3]> = pts.iter().map(|&(x, y)| [x, y, 0.0]).collect();
        let n = positions.len();
        prop_assert_eq!(enumerate_configs(&positions, f64::INFINITY).len(), 3 * binomial(n, 4) + 3 * binomial(n, 3) + binomial(n, 2));
    }

    #[test]
    fn enumeration_filter_is_monotone(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 4..8), k in 1.0..1e3f64) {
        let positions: Vec<[f64; 3]> = pts.iter().map(|&(x, y)| [x, y, 0.0]).collect();
        let small = enumerate_configs(&positions, k);
        let large = enumerate_configs(&positions, 10.0 * k);
        prop_assert!(small.len() <= large.len());
        prop_assert!(small.iter().all(|(_, f)| *f < k));
    }

    #[test]
    fn canonical_form_identifies_reciprocals(a in 0usize..20, b in 0usize..20, c in 0usize..20, d in 0usize..20) {
        prop_assume!(a != b && a != c && a != d && b != c && b != d && c != d);
        let q = Quadrupole::new(a, b, c, d);
        prop_assert_eq!(q.canonical(), q.reciprocal().canonical());
        prop_assert_eq!(q.canonical().canonical(), q.canonical());
        let positions: Vec<[f64; 3]> = (0..20).map(|i| [i as f64, (i * i % 7) as f64, 0.0]).collect();
        if let (Ok(k), Ok(kr)) = (geometric_factor(&q.points(&positions).unwrap()), geometric_factor(&q.reciprocal().points(&positions).unwrap())) {
            prop_assert!((k - kr).abs() <= 1e-9 * k.abs());
        }
    }

    #[test]
    fn number_format_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(Num(x).to_string().parse::<f64>().unwrap(), x);
    }

    #[test]
    fn rmse_of_a_scaled_series(a in prop::collection::vec(-10.0..10.0f64, 1..50), s in 0.0..3.0f64) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-3));
        let n: Vec<f64> = a.iter().map(|v| s * v).collect();
        prop_assert!((rmse_percent(&n, &a).unwrap() - 100.0 * (s - 1.0).abs()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn affine_potentials_are_reproduced(
        hx in 0.5..3.0f64, hy in 0.5..3.0f64, hz in 0.3..1.5f64,
        h in 0.1..0.4f64, growth in 1.2..2.0f64,
        g in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -5.0..5.0f64),
        k in 1e-3..1e3f64,
    ) {
        let spec = BoxMeshSpec {
            lo: [0.0; 3],
            hi: [hx, hy, hz],
            grading: Grading { near_electrode: h, near_liner: h, boundary: 2.0 * h, growth },
            liner: None,
            electrodes: vec![ElectrodeSpec { x: 0.37 * hx, y: 0.61 * hy, length: 0.2 * hz }],
        };
        let grid = build_box_mesh(&spec).unwrap().domain;
        let exact = |p: &[f64; 3]| g.3 + g.0 * p[0] + g.1 * p[1] + g.2 * p[2];
        let bcs = boundary_bcs(&grid, |_| true).unwrap();
        let disc = assemble_subdomain(&grid, &vec![k; grid.num_cells()], &bcs, &[]).unwrap();
        let nodal: Vec<f64> = grid.nodes.iter().map(exact).collect();
        let p = lu_solve(&disc.stiffness, &disc.dirichlet.matvec(&nodal)).unwrap();
        for (v, c) in p.iter().zip(&grid.geometry().unwrap().cell_centroid) {
            prop_assert!((v - exact(c)).abs() < 1e-9, "{} vs {}", v, exact(c));
        }
    }

    /// Heterogeneous model with a liner: reciprocity, charge balance and
    /// Euler's identity Σ ρ ∂V/∂ρ = V for a reading that is homogeneous of
    /// degree one in the resistivities.
    #[test]
    fn forward_model_invariants(
        picked in prop::sample::subsequence(sites(), 4),
        rho in prop::collection::vec(5.0..500.0f64, 7),
        log_liner in 2.0..15.0f64,
        hole in any::<bool>(),
    ) {
        let mesh = liner_box(&picked, hole);
        let rho_liner = 10f64.powf(log_liner);
        let m = materials(&mesh, &rho, rho_liner);
        let g = greens(&mesh, &m);
        for a in 0..4 {
            prop_assert!((g.electrode_outflow(&mesh, a, a).unwrap() - 1.0).abs() < 1e-8);
            for b in 0..4 {
                if a != b {
                    let (ab, ba) = (g.potential_at(a, b).unwrap(), g.potential_at(b, a).unwrap());
                    prop_assert!((ab - ba).abs() <= 1e-8 * ab.abs().max(ba.abs()), "{} {}", ab, ba);
                    prop_assert!(g.electrode_outflow(&mesh, a, b).unwrap().abs() < 1e-8);
                }
            }
        }
        for q in [Quadrupole::new(0, 1, 2, 3), Quadrupole::new(0, 2, 1, 3), Quadrupole::pole_dipole(3, 0, 1)] {
            let v = g.reading(&q, 1.0).unwrap();
            let f = quadrupole_field(&mesh, &g, &q, &m).unwrap();
            let euler: f64 = f.domain.iter().zip(&m.rho).map(|(s, r)| s * r).sum::<f64>()
                + f.liner.iter().zip(&m.rho_liner).map(|(s, r)| s * r).sum::<f64>();
            prop_assert!((euler - v).abs() <= 1e-5 * v.abs() + 1e-12, "{} vs {}", euler, v);
        }
    }

    #[test]
    fn sensitivity_is_invariant_under_resistivity_scaling(
        picked in prop::sample::subsequence(sites(), 4),
        rho in prop::collection::vec(5.0..500.0f64, 5),
        scale in 0.1..10.0f64,
    ) {
        let mesh = liner_box(&picked, true);
        let m = materials(&mesh, &rho, 1e8);
        let scaled = MaterialField {
            rho: m.rho.iter().map(|r| r * scale).collect(),
            rho_liner: m.rho_liner.iter().map(|r| r * scale).collect(),
            rho_electrode: m.rho_electrode.iter().map(|r| r * scale).collect(),
            ..m.clone()
        };
        let q = Quadrupole::new(0, 3, 1, 2);
        let f = quadrupole_field(&mesh, &greens(&mesh, &m), &q, &m).unwrap();
        let fs = quadrupole_field(&mesh, &greens(&mesh, &scaled), &q, &scaled).unwrap();
        let norm = f.domain.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in f.domain.iter().zip(&fs.domain) {
            prop_assert!((a - b).abs() <= 1e-9 * norm);
        }
    }

    #[test]
    fn vtk_round_trip(picked in prop::sample::subsequence(sites(), 1), seed in prop::collection::vec(-1e6..1e6f64, 1..9)) {
        let mesh = liner_box(&picked, false);
        let values: Vec<f64> = (0..mesh.domain.num_cells()).map(|c| seed[c % seed.len()] * (1.0 + c as f64 * 1e-7)).collect();
        let text = write_vtk(&mesh.domain, "round trip", &[VtkField { name: "v".into(), values: values.clone() }]).unwrap();
        let (grid, fields) = read_vtk(&text).unwrap();
        prop_assert_eq!(grid.num_cells(), mesh.domain.num_cells());
        prop_assert_eq!(&fields[0].values, &values);
    }
}
