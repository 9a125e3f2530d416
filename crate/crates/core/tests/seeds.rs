//! Seed derivation over the largest iterate and simulation grid used by
//! the experiments.

use rvcv_core::parallel::derive_seed;

#[test]
fn no_collisions_over_full_grid() {
    let (iterates, sims) = (100_000u64, 1_000u64);
    let master = 0x5eed_0000_0000_0001;
    let mut seeds: Vec<u64> = Vec::with_capacity((iterates * sims) as usize);
    for i in 0..iterates {
        for k in 0..sims {
            seeds.push(derive_seed(master, i, k));
        }
    }
    seeds.sort_unstable();
    let dup = seeds.windows(2).position(|w| w[0] == w[1]);
    assert!(dup.is_none(), "duplicate seed {:#x}", seeds[dup.unwrap()]);
}

#[test]
fn bits_are_balanced() {
    let n = 1_000_000u64;
    let mut ones = [0u64; 64];
    for i in 0..n {
        let s = derive_seed(42, i / 1000, i % 1000);
        for (b, count) in ones.iter_mut().enumerate() {
            *count += s >> b & 1;
        }
    }
    // Five binomial standard deviations around one half.
    let tol = 5.0 * 0.5 / (n as f64).sqrt();
    for (b, &count) in ones.iter().enumerate() {
        let frac = count as f64 / n as f64;
        assert!((frac - 0.5).abs() < tol, "bit {b} set in {frac:.5} of seeds");
    }
}

#[test]
fn masters_give_unrelated_streams() {
    let a: Vec<u64> = (0..1000).map(|k| derive_seed(1, 0, k)).collect();
    let b: Vec<u64> = (0..1000).map(|k| derive_seed(2, 0, k)).collect();
    assert!(a.iter().all(|s| !b.contains(s)));
}
