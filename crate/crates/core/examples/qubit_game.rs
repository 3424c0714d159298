//! Certified minimal capacity of a small qubit game with skewed states.

use commcomplex::game::{build_qubit_game, BlochVector};
use commcomplex::solver::{minimize_capacity, SolverConfig};

fn unit(x: f64, y: f64, z: f64) -> BlochVector {
    let r = (x * x + y * y + z * z).sqrt();
    BlochVector::new(x / r, y / r, z / r).expect("unit vector")
}

fn main() {
    let states = [
        BlochVector::new(0.0, 0.0, 1.0).unwrap(),
        BlochVector::new(0.9, 0.1, 0.0).unwrap(),
        BlochVector::new(-0.3, 0.5, -0.6).unwrap(),
        BlochVector::new(0.1, -0.7, 0.2).unwrap(),
    ];
    let axes = [unit(1.0, 0.0, 0.2), unit(0.0, 1.0, 0.5), unit(0.3, 0.2, 1.0)];
    let game = build_qubit_game(&states, &axes, 0.9).expect("valid game");
    let cfg = SolverConfig {
        tol: 1e-5,
        max_outer_iter: 2000,
        ..SolverConfig::default()
    };
    let r = minimize_capacity(&game, &cfg).expect("solver runs");
    println!(
        "D in [{:.7}, {:.7}] bits, certified: {}, iterations: {}",
        r.lower, r.upper, r.certified, r.iterations
    );
    for rec in r.log.iter().filter(|rec| rec.lower.is_some()) {
        println!("  iteration {:>4}: best upper {:.7}, lower {:.7}", rec.iteration, rec.best_upper, rec.lower.unwrap());
    }
}
