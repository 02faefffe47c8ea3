fn main() {
    let mut failures = 0;
    for key in 10..=75 {
        let theta = key as f64 * 0.002;
        match pmm::problems::crude_solutions(theta, 20, 0) {
            Ok(_) => {}
            Err(e) => {
                failures += 1;
                println!("theta={theta:.3}: ERR {e}");
            }
        }
    }
    println!("{failures} failures over the lattice");
}
