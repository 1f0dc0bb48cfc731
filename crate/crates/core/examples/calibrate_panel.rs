//! Dev utility: calibrate the energy-method panel constant on the sphere.
use vacancy::capacity::{cap_energy_with_constant, sphere_cloud};
use vacancy::Dim;

fn bisect(pts: &[f64], panels: &[f64], want: f64) -> f64 {
    let d3 = Dim::new(3).unwrap();
    let (mut lo, mut hi) = (0.5f64, 4.0f64);
    for _ in 0..18 {
        let mid = 0.5 * (lo + hi);
        let cap = cap_energy_with_constant(d3, pts, panels, mid).unwrap().value;
        if cap > want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn main() {
    let want = 2.0 * std::f64::consts::PI;
    for n in [500usize, 1000, 2000] {
        let (pts, panels) = sphere_cloud(&[0.0; 3], 1.0, n);
        println!("n={n}: c_panel = {:.5}", bisect(&pts, &panels, want));
    }
    for radius in [0.5f64, 2.0] {
        let (pts, panels) = sphere_cloud(&[0.0; 3], radius, 1000);
        println!(
            "radius={radius}: c_panel = {:.5}",
            bisect(&pts, &panels, want * radius)
        );
    }
}
