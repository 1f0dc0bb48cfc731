//! Dev utility: cross-method capacity agreement on cube and two-ball.
use vacancy::capacity::{cap_energy, cap_wos, cube_surface_cloud, sphere_cloud, WosParams};
use vacancy::torus::{Primitive, ShapeSpec};
use vacancy::Dim;

fn main() {
    let d3 = Dim::new(3).unwrap();
    // Unit cube.
    let cube = ShapeSpec::axis_box(3, vec![-0.5; 3], vec![0.5; 3]).unwrap();
    let est_wos = cap_wos(&cube, d3, &WosParams::new(1.5, 200_000), 7).unwrap();
    for per_edge in [12usize, 18, 26] {
        let (pts, panels) = cube_surface_cloud(&[0.0; 3], 1.0, per_edge);
        let est_en = cap_energy(d3, &pts, &panels).unwrap();
        println!(
            "cube: wos {:.4} +- {:.4} | energy(k={per_edge}, n={}) {:.4}",
            est_wos.value, est_wos.stderr, est_en.samples, est_en.value
        );
    }
    // Physics reference: unit cube capacitance ~ 0.6606782 in ball-radius
    // units, i.e. Cap = kappa_3 * 0.6606782 = 4.1512.
    println!("reference approx 4.1512");

    // Two balls radius 0.1 at distance 2.
    let mut two = ShapeSpec::ball(3, vec![-1.0, 0.0, 0.0], 0.1).unwrap();
    two.add(Primitive::Ball { center: vec![1.0, 0.0, 0.0], radius: 0.1 }).unwrap();
    let est_wos2 = cap_wos(&two, d3, &WosParams::new(1.6, 200_000), 9).unwrap();
    let (mut pts, mut panels) = sphere_cloud(&[-1.0, 0.0, 0.0], 0.1, 600);
    let (p2, h2) = sphere_cloud(&[1.0, 0.0, 0.0], 0.1, 600);
    pts.extend(p2);
    panels.extend(h2);
    let est_en2 = cap_energy(d3, &pts, &panels).unwrap();
    let singles = 2.0 * 2.0 * std::f64::consts::PI * 0.1;
    println!(
        "two-ball: wos {:.4} +- {:.4} | energy {:.4} | sum singles {:.4} | ratio wos {:.4}",
        est_wos2.value, est_wos2.stderr, est_en2.value, singles, est_wos2.value / singles
    );
}
