//! Relative difference between the impedance solutions with and without
//! absorption, scaled by `ξ/k`.

use maxwell_dd::analysis::relative_error_sweep;

fn main() -> maxwell_dd::Result<()> {
    println!("k,xi,ratio,ratio_over_xi_per_k");
    for k in [3.0, 5.0] {
        let xis = [k / 8.0, k / 4.0, k / 2.0, k];
        for (xi, r) in relative_error_sweep(k, &xis, 5, 4000)? {
            println!("{k},{xi},{r:.4e},{:.4}", r / (xi / k));
        }
    }
    Ok(())
}
