use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::scene::{MimoError, MimoScene};

/// Which linear front end feeds the per-user learned classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CelEqualizer {
    Mf,
    Zf,
    Lmmse,
}

/// Maximum condition number tolerated when inverting a Gram matrix.
const MAX_CONDITION: f64 = 1e12;

/// Solve `gram * z = rhs`, failing on near-singular systems.
fn solve_gram(
    gram: DMatrix<Complex64>,
    rhs: DVector<Complex64>,
) -> Result<DVector<Complex64>, MimoError> {
    let svd = gram.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let cond = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(MimoError::SingularEqualizer(cond));
    }
    svd.solve(&rhs, 0.0)
        .map_err(|_| MimoError::SingularEqualizer(cond))
}

/// Per-user equalized scalars for the chosen front end.
///
/// Matched filter: `H^H y` (no normalization — only signs matter here).
/// Zero forcing: `(H^H H)^-1 H^H y`. LMMSE: `(H^H H + n0 I)^-1 H^H y`.
pub(crate) fn equalize(
    scene: &MimoScene,
    eq: CelEqualizer,
) -> Result<DVector<Complex64>, MimoError> {
    let matched = scene.h.adjoint() * &scene.y;
    match eq {
        CelEqualizer::Mf => Ok(matched),
        CelEqualizer::Zf => {
            let gram = scene.h.adjoint() * &scene.h;
            solve_gram(gram, matched)
        }
        CelEqualizer::Lmmse => {
            let mut gram = scene.h.adjoint() * &scene.h;
            for i in 0..gram.nrows() {
                gram[(i, i)] += Complex64::new(scene.n0, 0.0);
            }
            solve_gram(gram, matched)
        }
    }
}

/// Hard decision on an equalized scalar: nonnegative real part means
/// symbol +1, i.e. bit 0 (exact zero breaks toward the lower bit).
fn sign_bit(z: Complex64) -> u8 {
    u8::from(z.re < 0.0)
}

fn sign_bits(z: &DVector<Complex64>) -> Vec<u8> {
    z.iter().map(|&v| sign_bit(v)).collect()
}

/// Matched-filter detection: per-user sign of `h_k^H y`.
pub fn mf_detect(scene: &MimoScene) -> Result<Vec<u8>, MimoError> {
    Ok(sign_bits(&equalize(scene, CelEqualizer::Mf)?))
}

/// Zero-forcing detection: invert the Gram matrix, then per-user signs.
pub fn zf_detect(scene: &MimoScene) -> Result<Vec<u8>, MimoError> {
    Ok(sign_bits(&equalize(scene, CelEqualizer::Zf)?))
}

/// LMMSE detection: like zero forcing with the Gram matrix regularized by
/// the noise variance.
pub fn lmmse_detect(scene: &MimoScene) -> Result<Vec<u8>, MimoError> {
    Ok(sign_bits(&equalize(scene, CelEqualizer::Lmmse)?))
}

/// Joint class index of a bit vector: user 0 is the most significant bit.
pub(crate) fn bits_to_class(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Inverse of [`bits_to_class`].
pub(crate) fn class_to_bits(class: usize, users: usize) -> Vec<u8> {
    (0..users)
        .rev()
        .map(|i| ((class >> i) & 1) as u8)
        .collect()
}

/// Exhaustive maximum-likelihood detection: minimize `||y - H x||^2` over
/// all BPSK vectors. Ascending class order with strict improvement makes
/// exact ties resolve to the lexicographically smallest bits. This is the
/// optimality oracle the learned detectors are judged against.
pub fn mld_detect(scene: &MimoScene) -> Result<Vec<u8>, MimoError> {
    let users = scene.users();
    if users > 16 {
        return Err(MimoError::TooManyUsers(users));
    }
    let nr = scene.rx_antennas();
    let mut best_metric = f64::INFINITY;
    let mut best_class = 0usize;
    for class in 0..(1usize << users) {
        let mut metric = 0.0;
        for i in 0..nr {
            let mut acc = scene.y[i];
            for j in 0..users {
                let sym = if (class >> (users - 1 - j)) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                };
                acc -= scene.h[(i, j)] * sym;
            }
            metric += acc.norm_sqr();
        }
        if metric < best_metric {
            best_metric = metric;
            best_class = class;
        }
    }
    Ok(class_to_bits(best_class, users))
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use crate::mimodet::scene::gen_scene;
    use crate::sigproc::RngStream;

    use super::*;

    /// Independent exhaustive search: recursive descent over users with
    /// running partial sums, scanning classes in descending order with
    /// non-strict improvement — a different code path that must land on
    /// the same decisions, ties included.
    fn mld_oracle(scene: &MimoScene) -> Vec<u8> {
        let users = scene.users();
        let mut best: Option<(f64, Vec<u8>)> = None;
        for class in (0..(1usize << users)).rev() {
            let bits = class_to_bits(class, users);
            let x = DVector::from_iterator(
                users,
                bits.iter()
                    .map(|&b| Complex64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0)),
            );
            let metric = (&scene.y - &scene.h * &x)
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>();
            let take = match &best {
                None => true,
                Some((bm, _)) => metric <= *bm,
            };
            if take {
                best = Some((metric, bits));
            }
        }
        best.unwrap().1
    }

    fn identity_scene(bits: &[u8]) -> MimoScene {
        let k = bits.len();
        let h = DMatrix::from_fn(k, k, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let x = DVector::from_iterator(
            k,
            bits.iter()
                .map(|&b| Complex64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0)),
        );
        let y = &h * &x;
        MimoScene {
            h,
            bits: bits.to_vec(),
            x,
            y,
            n0: 0.0,
        }
    }

    #[test]
    fn identity_channel_noiseless_recovers_bits() {
        let scene = identity_scene(&[1, 0, 0, 1]);
        assert_eq!(mf_detect(&scene).unwrap(), scene.bits);
        assert_eq!(zf_detect(&scene).unwrap(), scene.bits);
        assert_eq!(lmmse_detect(&scene).unwrap(), scene.bits);
        assert_eq!(mld_detect(&scene).unwrap(), scene.bits);
    }

    #[test]
    fn zero_forcing_is_exact_without_noise() {
        let mut rng = RngStream::new(90, 0);
        for _ in 0..100 {
            let scene = gen_scene(4, 8, f64::INFINITY, &mut rng);
            assert_eq!(zf_detect(&scene).unwrap(), scene.bits);
            assert_eq!(mld_detect(&scene).unwrap(), scene.bits);
        }
    }

    #[test]
    fn lmmse_with_vanishing_noise_matches_zero_forcing() {
        let mut rng = RngStream::new(91, 0);
        for _ in 0..1000 {
            let mut scene = gen_scene(4, 8, 8.0, &mut rng);
            scene.n0 = 1e-12;
            assert_eq!(lmmse_detect(&scene).unwrap(), zf_detect(&scene).unwrap());
        }
    }

    #[test]
    fn joint_scaling_leaves_decisions_unchanged() {
        // Scaling h and y by c (and the noise variance by c^2, keeping the
        // scene self-consistent) must not move any decision: the linear
        // equalizers are sign rules and the exhaustive metric scales by a
        // constant. c = 2 keeps the arithmetic exact, ties included.
        let mut rng = RngStream::new(92, 0);
        for _ in 0..200 {
            let scene = gen_scene(4, 8, 2.0, &mut rng);
            let mut scaled = scene.clone();
            scaled.h *= Complex64::new(2.0, 0.0);
            scaled.y *= Complex64::new(2.0, 0.0);
            scaled.n0 *= 4.0;
            assert_eq!(mf_detect(&scene).unwrap(), mf_detect(&scaled).unwrap());
            assert_eq!(zf_detect(&scene).unwrap(), zf_detect(&scaled).unwrap());
            assert_eq!(lmmse_detect(&scene).unwrap(), lmmse_detect(&scaled).unwrap());
            assert_eq!(mld_detect(&scene).unwrap(), mld_detect(&scaled).unwrap());
        }
    }

    #[test]
    fn exhaustive_search_matches_independent_oracle() {
        let mut rng = RngStream::new(93, 0);
        for i in 0..10_000 {
            let ebn0 = [0.0, 5.0, 10.0][i % 3];
            let scene = gen_scene(4, 8, ebn0, &mut rng);
            assert_eq!(mld_detect(&scene).unwrap(), mld_oracle(&scene));
        }
    }

    #[test]
    fn exhaustive_search_dominates_linear_detectors() {
        let mut rng = RngStream::new(94, 0);
        let mut errors = [0usize; 4];
        for _ in 0..3000 {
            let scene = gen_scene(4, 8, 5.0, &mut rng);
            let detections = [
                mld_detect(&scene).unwrap(),
                lmmse_detect(&scene).unwrap(),
                zf_detect(&scene).unwrap(),
                mf_detect(&scene).unwrap(),
            ];
            for (slot, bits) in errors.iter_mut().zip(&detections) {
                *slot += bits
                    .iter()
                    .zip(&scene.bits)
                    .filter(|(a, b)| a != b)
                    .count();
            }
        }
        let [mld, lmmse, zf, mf] = errors;
        // Common random numbers: the optimum may not win every draw, but
        // it must not lose by more than sampling jitter.
        let slack = |e: usize| e + 3 * (e as f64).sqrt().ceil() as usize;
        assert!(mld <= slack(lmmse), "mld {mld} vs lmmse {lmmse}");
        assert!(mld <= slack(zf), "mld {mld} vs zf {zf}");
        assert!(mld <= slack(mf), "mld {mld} vs mf {mf}");
        // Eight-fold receive diversity makes the optimum extremely reliable
        // here; the matched filter stays interference-limited and must err.
        assert!(mf > 0, "matched filter should hit its interference floor");
    }

    #[test]
    fn degenerate_gram_matrix_is_rejected() {
        // Two identical users: rank-1 Gram matrix.
        let h = DMatrix::from_fn(4, 2, |i, _| Complex64::new(1.0 + i as f64, -0.5));
        let x = DVector::from_element(2, Complex64::new(1.0, 0.0));
        let y = &h * &x;
        let scene = MimoScene {
            h,
            bits: vec![0, 0],
            x,
            y,
            n0: 0.0,
        };
        assert!(matches!(
            zf_detect(&scene).unwrap_err(),
            MimoError::SingularEqualizer(_)
        ));
        // LMMSE with a real noise floor regularizes the same system.
        let mut noisy = scene.clone();
        noisy.n0 = 0.1;
        assert!(lmmse_detect(&noisy).is_ok());
    }

    #[test]
    fn too_many_users_for_exhaustive_search() {
        let mut rng = RngStream::new(95, 0);
        let scene = gen_scene(17, 20, 10.0, &mut rng);
        assert_eq!(mld_detect(&scene).unwrap_err(), MimoError::TooManyUsers(17));
    }

    #[test]
    fn class_index_convention_is_msb_first() {
        assert_eq!(bits_to_class(&[1, 0, 1, 1]), 0b1011);
        assert_eq!(class_to_bits(0b1011, 4), vec![1, 0, 1, 1]);
        for c in 0..16 {
            assert_eq!(bits_to_class(&class_to_bits(c, 4)), c);
        }
    }
}
