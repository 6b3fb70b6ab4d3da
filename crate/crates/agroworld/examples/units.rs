//! Dimension-checked quantities: conversions, additive safety, and the
//! conversion-factor graph.

use agroworld::units::{factor_rational, Quantity, Unit, ALL_UNITS};

fn main() {
    let harvest = Quantity::new(1000.0, Unit::Gram).unwrap();
    let aligned = harvest.convert(Unit::Kilogram).unwrap();
    println!("{harvest} -> {aligned}");

    let tonnes = Quantity::new(0.5, Unit::Tonne).unwrap();
    println!("{tonnes} -> {}", tonnes.convert(Unit::Kilogram).unwrap());

    let base = Quantity::new(1.0, Unit::Kilogram).unwrap();
    let sum = base.add(&harvest).unwrap();
    println!("{base} + {harvest} = {sum}");

    // Mixing dimensions is a hard error, not a silent coercion.
    let rain = Quantity::new(12.0, Unit::Millimeter).unwrap();
    match base.add(&rain) {
        Ok(_) => unreachable!(),
        Err(e) => println!("kg + mm rejected: {e}"),
    }

    // Rates are type-distinct from masses: kg/ha carries area^-1.
    let rate = Quantity::new(80.0, Unit::KgPerHa).unwrap();
    match rate.convert(Unit::Kilogram) {
        Ok(_) => unreachable!(),
        Err(e) => println!("kg/ha -> kg rejected: {e}"),
    }

    println!("\nexact conversion factors (rationals):");
    for a in ALL_UNITS {
        for b in ALL_UNITS {
            if a != b && a.dim() == b.dim() {
                let (num, den) = factor_rational(a, b).unwrap();
                println!("  {a:>4} -> {b:<4}  x {num}/{den}");
            }
        }
    }
}
