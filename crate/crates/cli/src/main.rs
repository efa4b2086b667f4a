use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specopt_core::CMat;
use specopt_core::framework::{Memory, Sense, SubspaceOptions, Variant, optimize_eig};
use specopt_core::model::{BoxDomain, HermitianFamily, MatrixStore, ScalarField};

fn spectral_radius_family(half: usize, seed: u64) -> Arc<HermitianFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * half;
    let mut base = CMat::zeros(n, n);
    for j in 0..half {
        for i in 0..=j {
            let z = C64::new(rng.gen::<f64>() * 2.0 - 1.0, 0.0);
            base[(i, j)] = z;
            base[(j, i)] = z;
            base[(half + i, half + j)] = -z;
            base[(half + j, half + i)] = -z;
        }
    }
    let mut up = CMat::zeros(n, n);
    let mut low = CMat::zeros(n, n);
    for i in 0..half / 2 {
        up[(i, i)] = C64::new(-1.0, 0.0);
        up[(half + i, half + i)] = C64::new(1.0, 0.0);
        let li = half / 2 + i;
        low[(li, li)] = C64::new(-1.0, 0.0);
        low[(half + li, half + li)] = C64::new(1.0, 0.0);
    }
    Arc::new(
        HermitianFamily::new(
            vec![
                (ScalarField::constant(), MatrixStore::Dense(base)),
                (ScalarField::affine(0), MatrixStore::Dense(up)),
                (ScalarField::affine(1), MatrixStore::Dense(low)),
            ],
            2,
        )
        .unwrap(),
    )
}

fn main() {
    for seed in [3u64, 7, 21] {
        let fam = spectral_radius_family(200, seed);
        let b = BoxDomain::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap();
        let mut opts = SubspaceOptions::new(Sense::Minimize, 1, -1e-6);
        opts.variant = Variant::Basic;
        opts.memory = Memory::Full;
        let t = Instant::now();
        let run = optimize_eig(Arc::clone(&fam), &b, &opts).unwrap();
        let mut ropts = opts.clone();
        ropts.variant = Variant::Extended;
        ropts.tol = 1e-14;
        ropts.initial_point = Some(vec![1.0, -1.0]);
        let refrun = optimize_eig(fam, &b, &ropts).unwrap();
        let wref = &refrun.final_point;
        let errs: Vec<f64> = run
            .iterations
            .iter()
            .filter(|r| r.reduced_opt_value.is_some())
            .map(|r| ((r.omega[0] - wref[0]).powi(2) + (r.omega[1] - wref[1]).powi(2)).sqrt())
            .collect();
        let mono = run
            .iterations
            .iter()
            .filter_map(|r| r.reduced_opt_value)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()));
        let cert = run.certificate.unwrap();
        println!(
            "seed={seed}: value={:.12} solves={} mono={mono} gap={:.2e} {:.2?}",
            run.final_value,
            run.iterations.len() - 1,
            (cert.1 - cert.0).abs(),
            t.elapsed()
        );
        println!("   errors: {errs:?}");
    }
}
