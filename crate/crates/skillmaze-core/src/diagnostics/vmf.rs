//! Kernel density estimation on the unit hypersphere and the resubstitution
//! entropy estimate built on it.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::Tensor;
use crate::{Error, Result};

use super::bessel::bessel_i;

/// Log of the spherical kernel's normalizing constant
/// `Z(u) = u^(d/2-1) / ((2 pi)^(d/2) I_(d/2-1)(u))` for even dimension `d`.
pub fn log_kernel_normalizer(u: f64, d: usize) -> Result<f64> {
    if !u.is_finite() || u <= 0.0 {
        return Err(Error::Config(format!("concentration must be positive, got {u}")));
    }
    if d < 2 || d % 2 != 0 {
        return Err(Error::Config(format!(
            "kernel normalizer supports even dimensions >= 2 (integer Bessel order), got {d}"
        )));
    }
    let order = d / 2 - 1;
    let half_d = d as f64 / 2.0;
    Ok(order as f64 * u.ln() - half_d * (2.0 * std::f64::consts::PI).ln() - bessel_i(order, u)?.ln())
}

/// A mixture of spherical exponential kernels centered at reference features.
#[derive(Debug, Clone)]
pub struct VmfKde {
    u: f64,
    d: usize,
    references: Tensor,
}

impl VmfKde {
    /// Kernel bandwidth is the reciprocal of `kappa`; all reference rows must
    /// be unit-norm.
    pub fn new(kappa: f64, references: Tensor) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        if references.rows() == 0 {
            return Err(Error::Degenerate { op: "vmf_kde", details: "no reference features".into() });
        }
        let d = references.cols();
        check_unit_rows(&references, "reference")?;
        let u = 1.0 / kappa;
        log_kernel_normalizer(u, d)?;
        Ok(Self { u, d, references })
    }

    /// Concentration `u = 1/kappa`.
    pub fn concentration(&self) -> f64 {
        self.u
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_references(&self) -> usize {
        self.references.rows()
    }

    pub fn log_normalizer(&self) -> f64 {
        log_kernel_normalizer(self.u, self.d).expect("validated at construction")
    }

    /// `log((1/M) sum_j exp(u * r_j . x))` for one unit query, max-shifted.
    pub fn log_mean_kernel(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::Shape {
                op: "log_mean_kernel",
                details: format!("query dim {} vs kde dim {}", x.len(), self.d),
            });
        }
        let m = self.references.rows();
        let mut dots = Vec::with_capacity(m);
        let mut max = f64::NEG_INFINITY;
        for j in 0..m {
            let row = self.references.row(j);
            let dot: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = self.u * dot;
            max = max.max(v);
            dots.push(v);
        }
        let sum: f64 = dots.iter().map(|v| (v - max).exp()).sum();
        Ok(max + (sum / m as f64).ln())
    }
}

/// Resubstitution entropy estimate
/// `H = -(1/N) sum_i log[ Z(u) * (1/M) sum_j exp(u * f_j . f_i) ]`.
pub fn vmf_entropy(kde: &VmfKde, eval: &Tensor) -> Result<f64> {
    if eval.rows() == 0 {
        return Err(Error::Degenerate { op: "vmf_entropy", details: "no evaluation features".into() });
    }
    check_unit_rows(eval, "evaluation")?;
    if eval.cols() != kde.d {
        return Err(Error::Shape {
            op: "vmf_entropy",
            details: format!("eval dim {} vs kde dim {}", eval.cols(), kde.d),
        });
    }
    let log_z = kde.log_normalizer();
    let mut acc = 0.0;
    for i in 0..eval.rows() {
        acc += log_z + kde.log_mean_kernel(eval.row(i))?;
    }
    Ok(-acc / eval.rows() as f64)
}

/// `n` rows drawn uniformly from the unit sphere in `d` dimensions.
pub fn random_unit_features(n: usize, d: usize, rng: &mut impl Rng) -> Result<Tensor> {
    if n == 0 || d == 0 {
        return Err(Error::Config(format!("need n >= 1, d >= 1 (got {n}, {d})")));
    }
    let mut rows = Vec::with_capacity(n);
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            rows.push(v.into_iter().map(|x| x / norm).collect::<Vec<f64>>());
        }
        if rows.len() == n {
            break;
        }
    }
    Tensor::from_rows(&rows)
}

fn check_unit_rows(t: &Tensor, what: &str) -> Result<()> {
    for i in 0..t.rows() {
        let norm_sq: f64 = t.row(i).iter().map(|x| x * x).sum();
        if !norm_sq.is_finite() || (norm_sq.sqrt() - 1.0).abs() > 1e-9 {
            return Err(Error::Degenerate {
                op: "vmf_unit_check",
                details: format!("{what} row {i} has norm {}", norm_sq.sqrt()),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn repeated_feature(n: usize, d: usize) -> Tensor {
        let mut row = vec![0.0; d];
        row[0] = 1.0;
        Tensor::from_rows(&vec![row; n]).unwrap()
    }

    #[test]
    fn identical_features_peak_the_density() {
        for (kappa, m) in [(0.5, 1), (0.5, 9), (0.25, 4)] {
            let refs = repeated_feature(m, 16);
            let kde = VmfKde::new(kappa, refs.clone()).unwrap();
            let h = vmf_entropy(&kde, &refs).unwrap();
            let expect = -kde.log_normalizer() - 1.0 / kappa;
            assert!((h - expect).abs() < 1e-12, "kappa {kappa}: {h} vs {expect}");
        }
    }

    #[test]
    fn entropy_matches_an_unshifted_direct_evaluation() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let refs = random_unit_features(40, 16, &mut rng).unwrap();
        let eval = random_unit_features(25, 16, &mut rng).unwrap();
        let kde = VmfKde::new(0.5, refs.clone()).unwrap();
        let h = vmf_entropy(&kde, &eval).unwrap();

        let u = 2.0;
        let mut direct = 0.0;
        for i in 0..eval.rows() {
            let mut mean = 0.0;
            for j in 0..refs.rows() {
                let dot: f64 =
                    refs.row(j).iter().zip(eval.row(i)).map(|(a, b)| a * b).sum();
                mean += (u * dot).exp();
            }
            mean /= refs.rows() as f64;
            direct += kde.log_normalizer() + mean.ln();
        }
        direct = -direct / eval.rows() as f64;
        assert!((h - direct).abs() < 1e-9, "{h} vs {direct}");
    }

    #[test]
    fn uniform_sphere_cloud_approaches_the_sphere_log_area() {
        // log area of the unit sphere in 16 dims: log(2 pi^8 / 7!).
        let pi = std::f64::consts::PI;
        let log_area = (2.0 * pi.powi(8) / 5040.0).ln();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let big = random_unit_features(10_000, 16, &mut rng).unwrap();
        let eval = random_unit_features(1_500, 16, &mut rng).unwrap();

        let small_rows: Vec<Vec<f64>> = (0..1000).map(|i| big.row(i).to_vec()).collect();
        let small = Tensor::from_rows(&small_rows).unwrap();
        let h_small = vmf_entropy(&VmfKde::new(0.5, small).unwrap(), &eval).unwrap();
        let h_big = vmf_entropy(&VmfKde::new(0.5, big).unwrap(), &eval).unwrap();

        assert!(
            (h_big - log_area).abs() / log_area < 0.05,
            "h = {h_big}, log area = {log_area}"
        );
        assert!(
            (h_big - log_area).abs() <= (h_small - log_area).abs() + 1e-3,
            "more references should not get worse: {h_small} -> {h_big} (truth {log_area})"
        );
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let unit = repeated_feature(3, 16);
        assert!(VmfKde::new(0.0, unit.clone()).is_err());
        assert!(VmfKde::new(-1.0, unit.clone()).is_err());
        let odd = Tensor::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(VmfKde::new(0.5, odd).is_err(), "odd dimension has no integer Bessel order");
        let scaled = Tensor::from_rows(&[vec![2.0; 1]
            .into_iter()
            .chain(std::iter::repeat(0.0).take(15))
            .collect::<Vec<f64>>()])
        .unwrap();
        assert!(VmfKde::new(0.5, scaled).is_err(), "non-unit rows rejected");
        let kde = VmfKde::new(0.5, unit).unwrap();
        let short = Tensor::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(vmf_entropy(&kde, &short).is_err());
    }

    #[test]
    fn random_unit_features_are_unit_and_seeded() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = random_unit_features(20, 7, &mut rng).unwrap();
        for i in 0..a.rows() {
            let n: f64 = a.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let mut rng2 = ChaCha12Rng::seed_from_u64(3);
        let b = random_unit_features(20, 7, &mut rng2).unwrap();
        assert_eq!(a.data(), b.data());
    }
}
