use pharmonic::exponents::Geometry;
use pharmonic::pde::*;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("martin");
    match what {
        "martin" => {
            // criterion 6 calibration: p in {2,3}, grid 256x1024
            for p in [2.0f64, 3.0] {
                let g = Geometry::new(2, 1, p).unwrap();
                let grid = SlabGrid::new(g, 1.0, 256, 4.0).unwrap();
                let h = grid.h();
                for (wname, w) in [("2h", 2.0 * h), ("4h", 4.0 * h)] {
                    for (lo, hi) in [(1.0 / 64.0, 1.0 / 8.0), (1.0 / 32.0, 1.0 / 4.0), (1.0/64.0, 1.0/4.0)] {
                        let radii: Vec<f64> = (0..9)
                            .map(|i| lo * (hi / lo_f(lo, hi)).powf(i as f64 / 8.0))
                            .collect();
                        fn lo_f(lo: f64, _hi: f64) -> f64 { lo }
                        let radii: Vec<f64> = (0..9).map(|i| lo * (hi / lo).powf(i as f64 / 8.0)).collect();
                        let t0 = Instant::now();
                        let (fit, rep) = martin_exponent_fit(grid, w, &radii, &SolverOptions::default()).unwrap();
                        println!(
                            "p={p} w={wname} window=[{lo:.4},{hi:.4}] sigma={:.4} resfit={:.1e} elres={:.1e} dt={:.1}s",
                            fit.sigma, fit.residual, rep.residual, t0.elapsed().as_secs_f64()
                        );
                        let _ = radii;
                    }
                }
            }
        }
        "measure" => {
            let nx: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(256);
            let g = Geometry::new(3, 1, 3.0).unwrap();
            let grid = SlabGrid::new(g, 1.0, nx, 4.0).unwrap();
            let mut samples = Vec::new();
            for r in [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0] {
                let t0 = Instant::now();
                let v = harmonic_measure(grid, r, &SolverOptions::default()).unwrap();
                println!("nx={nx} r={r:.5} omega={:.6} (interp {:.6}) dt={:.1}s", v.nearest, v.interpolated, t0.elapsed().as_secs_f64());
                samples.push((r, v.interpolated));
            }
            let fit = fit_homogeneity(&samples).unwrap();
            println!("slope = {:.4}", fit.sigma);
        }
        "psi" => {
            let nx: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(256);
            let g = Geometry::new(2, 1, 3.0).unwrap();
            let grid = SlabGrid::new(g, 1.0, nx, 4.0).unwrap();
            for t in [1.0/8.0, 1.0/16.0, 1.0/32.0] {
                let t0 = Instant::now();
                let rep = build_psi(grid, t, &SolverOptions::default()).unwrap();
                println!(
                    "t=1/{:.0} xi={:.5} bbar_unit={:+.5e} bbar_small={:+.5e} ratio={:.4} delta={:.3} dt={:.1}s",
                    1.0 / t, rep.xi, rep.b_bar_unit, rep.b_bar_small, rep.ratio_scale_separation,
                    rep.decay_delta, t0.elapsed().as_secs_f64()
                );
            }
        }
        _ => eprintln!("unknown probe"),
    }
}
