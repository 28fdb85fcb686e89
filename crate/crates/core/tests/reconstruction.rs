use scatter_tomo::image::{Extent, ImageGrid};
use scatter_tomo::phantom::{make_phantom, PhantomKind, PhantomParams};
use scatter_tomo::recon::{fbp, metrics, reconstruct_view, FilterSpec, ReconGrid};
use scatter_tomo::signal::{add_noise, NoiseSpec};
use scatter_tomo::transform::{default_p_grid, default_phi_grid, disc_transform, radon_transform};
use scatter_tomo::{Point2, ScannerGeometry};

fn bump(n: usize) -> ImageGrid {
    let mut img = ImageGrid::zeros(n, n, Extent::square(1.0)).unwrap();
    let c = Point2::new(0.2, 0.1);
    for j in 0..n {
        for i in 0..n {
            let d2 = (img.pixel_center(i, j) - c).norm_sq();
            img.set(i, j, (-d2 / (2.0 * 0.15 * 0.15)).exp());
        }
    }
    img
}

fn fbp_round_trip_error(n: usize) -> f64 {
    let truth = bump(n);
    let p: Vec<f64> = (0..=n / 2).map(|k| 2.0 * k as f64 / n as f64).collect();
    let phi = default_phi_grid(n);
    let radon = radon_transform(&truth, &p, &phi, 6.75).unwrap();
    let recon = fbp(&radon, FilterSpec::ramlak(), n, n, Extent::square(1.0)).unwrap();
    // lines with |p| > 1 are not sampled, so compare inside the unit disc
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            if truth.pixel_center(i, j).norm() < 1.0 {
                num += (recon.get(i, j) - truth.get(i, j)).powi(2);
                den += truth.get(i, j).powi(2);
            }
        }
    }
    (num / den).sqrt()
}

#[test]
fn fbp_of_radon_converges_on_smooth_bump() {
    let errs: Vec<f64> = [128, 256, 512].iter().map(|&n| fbp_round_trip_error(n)).collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    assert!(errs[2] < 1e-3, "{errs:?}");
}

#[test]
fn hamming_has_less_high_frequency_power() {
    let geom = ScannerGeometry::rtt80();
    let spec = make_phantom(&PhantomKind::WaterBottle, &geom, &PhantomParams::default()).unwrap();
    let (p, phi) = (default_p_grid(80), default_phi_grid(180));
    let clean = disc_transform(&spec, &p, &phi, &geom).unwrap();
    let h = 1.0 / 79.0;
    for seed in [1, 2, 3] {
        for percent in [2.0, 10.0] {
            let noisy = add_noise(&clean, NoiseSpec { percent, seed }).unwrap();
            let power = |filter| {
                let img = reconstruct_view(&noisy, &geom, filter, h, ReconGrid::square(96)).unwrap();
                metrics::high_frequency_power(&img)
            };
            let (ramlak, hamming) = (power(FilterSpec::ramlak()), power(FilterSpec::hamming()));
            assert!(hamming < ramlak, "seed {seed} {percent}%: {hamming} vs {ramlak}");
        }
    }
}
