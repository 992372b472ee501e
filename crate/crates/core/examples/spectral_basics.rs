//! Spectral vectors of a term's occurrences, the overlap integral as a dot
//! product, and how truncation broadens the pulses.
//!
//! cargo run --example spectral_basics

use fvs::spectral::{compute_spectral, cosine_sim, dot, reconstruct, TermPositions};

fn main() -> fvs::Result<()> {
    let len = 40;
    let early = TermPositions::new(vec![3, 5, 9], len)?;
    let nearby = TermPositions::new(vec![4, 7], len)?;
    let late = TermPositions::new(vec![33, 36], len)?;

    for n in [1, 3, 8] {
        let (e, b, l) = (
            compute_spectral(&early, n),
            compute_spectral(&nearby, n),
            compute_spectral(&late, n),
        );
        println!(
            "n={n:<2} a0={:.4}  cos(early, nearby)={:.4}  cos(early, late)={:.4}  overlap={:.4}",
            e.a0(),
            cosine_sim(&e, &b),
            cosine_sim(&e, &l),
            dot(&e, &b)
        );
    }

    let sv = compute_spectral(&early, 8);
    println!(
        "\nreconstruction of positions {:?} at n=8:",
        early.positions()
    );
    for x in (0..=len).step_by(2) {
        let v = reconstruct(&sv, f64::from(x))?;
        let bar = "#".repeat((v.max(0.0) * 40.0).round() as usize);
        println!("{x:>3} {v:>7.3} {bar}");
    }
    Ok(())
}
