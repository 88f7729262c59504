// Exact coefficients of the small-width expansion, `u = Σ ε^{2n} u_n`,
// `c = Σ ε^{2n} c_n`, each `u_n` a polynomial in `S = sech²(γx)`.

use kdv5_lab::sech_series::{build_series, gamma_from_f64, SeriesTable};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let table = build_series(6, gamma_from_f64(1.0)?)?;
    for n in 0..=3 {
        println!("u_{n} = {}", table.u(n));
        println!("c_{n} = {}", table.c(n));
    }
    for n in 0..=table.n_max() {
        assert!(table.order_residual(n).is_zero());
    }

    // Wider waves: c_0 = 4γ², c_1 = 16γ⁴.
    let wide = build_series(1, gamma_from_f64(2.0)?)?;
    println!("gamma = 2: c_0 = {}, c_1 = {}", wide.c(0), wide.c(1));

    let doc = table.to_json();
    let back = SeriesTable::from_json(&doc)?;
    assert_eq!(back, table);
    println!("json round trip ok ({} bytes)", doc.to_string().len());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
