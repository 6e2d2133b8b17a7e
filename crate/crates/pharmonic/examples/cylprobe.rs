use pharmonic::exponents::Geometry;
use pharmonic::pde::{solve_plain, SlabGrid, SolverOptions, TopClosure};

fn main() {
    let g = Geometry::new(3, 1, 3.0).unwrap();
    let beta = g.beta();
    for nx in [32usize, 64, 128] {
        let grid = SlabGrid::new(g, 1.0, nx, 4.0).unwrap();
        let rep = solve_plain(
            grid,
            &vec![0.0; nx],
            TopClosure::Dirichlet(grid.height.powf(beta)),
            &SolverOptions::default(),
        )
        .unwrap();
        print!("nx={nx:4} res={:.2e} ", rep.residual);
        for s in [0.25f64, 0.5, 1.0, 2.0] {
            let j = (s / grid.h()).round() as usize;
            let got = rep.field.value(5, j);
            let expect = s.powf(beta);
            print!(" err({s})={:+.4e}", (got - expect) / expect);
        }
        println!();
    }
}
