//! Seeded random data.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{InitialDatum, MixComponent};

/// A mixture of `components` Barenblatt profiles with weights in
/// `[0.2, 1]`, scales in `[0.5, 2]` and, when `shifted`, centres in
/// `[-0.5, 0.5]`. The same `seed` gives the same mixture.
pub fn random_mixture(seed: u64, components: usize, shifted: bool) -> InitialDatum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (0..components)
        .map(|_| MixComponent {
            weight: rng.random_range(0.2..1.0),
            sigma: rng.random_range(0.5..2.0),
            shift: if shifted { rng.random_range(-0.5..0.5) } else { 0.0 },
        })
        .collect();
    InitialDatum::GenericMix { components }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded() {
        assert_eq!(random_mixture(7, 3, true), random_mixture(7, 3, true));
        assert_ne!(random_mixture(7, 3, true), random_mixture(8, 3, true));
        let InitialDatum::GenericMix { components } = random_mixture(1, 4, false) else {
            unreachable!()
        };
        assert!(components.iter().all(|c| c.shift == 0.0 && c.sigma >= 0.5));
    }
}
