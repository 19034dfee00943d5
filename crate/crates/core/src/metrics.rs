//! Geometry distortion (point-to-point D1, point-to-plane D2) and Bjøntegaard
//! delta rate between two rate-distortion curves.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{SurfaceIndex, TriangleMesh};
use crate::scalar::Real;

/// Squared-error means in one evaluation direction (samples of one mesh against
/// the surface of the other).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalError<T> {
    pub mse_d1: T,
    pub mse_d2: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport<T> {
    /// `+∞` when the corresponding mse is zero.
    pub d1_psnr: T,
    pub d2_psnr: T,
    pub mse_d1: T,
    pub mse_d2: T,
    /// Bounding-box diagonal of the reference mesh.
    pub peak: T,
    /// Reference vertices against the test surface.
    pub reference_to_test: DirectionalError<T>,
    /// Test vertices against the reference surface.
    pub test_to_reference: DirectionalError<T>,
}

pub fn psnr<T: Real>(peak: T, mse: T) -> T {
    if mse == T::zero() {
        T::infinity()
    } else {
        T::lit(10.0) * (peak * peak / mse).log10()
    }
}

fn directional<T: Real>(
    samples: &TriangleMesh<T>,
    surface: &TriangleMesh<T>,
) -> Result<DirectionalError<T>> {
    let index = SurfaceIndex::new(surface)?;
    let errors: Vec<(T, T)> = samples
        .vertices()
        .par_iter()
        .map(|p| {
            let sp = index.closest_point(p);
            let residual = sp.position - *p;
            let d1 = residual.norm_squared();
            let d2 = match surface.face_normal_raw(sp.face).normalized() {
                Some(n) => {
                    let along = residual.dot(&n);
                    (along * along).min(d1)
                }
                None => d1,
            };
            (d1, d2)
        })
        .collect();
    // sequential sum keeps the result independent of the thread count
    let (s1, s2) = errors
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(d1, d2)| (a + d1, b + d2));
    let n = T::from_usize_lossy(errors.len().max(1));
    Ok(DirectionalError {
        mse_d1: s1 / n,
        mse_d2: s2 / n,
    })
}

/// Symmetric vertex-sampled D1/D2 distortion of `test` against `reference`.
/// Both meshes need faces: each is the surface the other is measured against.
pub fn distortion<T: Real>(
    reference: &TriangleMesh<T>,
    test: &TriangleMesh<T>,
) -> Result<DistortionReport<T>> {
    if reference.face_count() == 0 || test.face_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    let reference_to_test = directional(reference, test)?;
    let test_to_reference = directional(test, reference)?;
    let mse_d1 = reference_to_test.mse_d1.max(test_to_reference.mse_d1);
    let mse_d2 = reference_to_test.mse_d2.max(test_to_reference.mse_d2);
    let peak = reference.bounding_diagonal();
    Ok(DistortionReport {
        d1_psnr: psnr(peak, mse_d1),
        d2_psnr: psnr(peak, mse_d2),
        mse_d1,
        mse_d2,
        peak,
        reference_to_test,
        test_to_reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint<T> {
    /// Payload size in bits.
    pub bits: T,
    /// Quality in dB.
    pub psnr: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve<T> {
    points: Vec<RdPoint<T>>,
}

impl<T: Real> RdCurve<T> {
    /// Points with infinite PSNR are dropped; the rest must number at least four,
    /// have positive bits, and be strictly increasing in bits.
    pub fn new(points: impl IntoIterator<Item = RdPoint<T>>) -> Result<Self> {
        let points: Vec<_> = points.into_iter().filter(|p| p.psnr.is_finite()).collect();
        if points.len() < 4 {
            return Err(Error::Curve(format!(
                "need at least 4 finite points, got {}",
                points.len()
            )));
        }
        for p in &points {
            if !(p.bits > T::zero() && p.bits.is_finite()) {
                return Err(Error::Curve(format!(
                    "bits must be positive, got {}",
                    p.bits
                )));
            }
        }
        if points.windows(2).any(|w| !(w[1].bits > w[0].bits)) {
            return Err(Error::Curve("bits must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[RdPoint<T>] {
        &self.points
    }

    fn psnr_range(&self) -> (T, T) {
        self.points
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                (lo.min(p.psnr), hi.max(p.psnr))
            })
    }
}

/// Cubic `log10(bits) = p(psnr)`, fitted in a normalized variable `s = (psnr − c) / h`.
struct LogRateFit<T> {
    coeffs: [T; 4],
    center: T,
    scale: T,
}

impl<T: Real> LogRateFit<T> {
    fn new(curve: &RdCurve<T>) -> Result<Self> {
        let (lo, hi) = curve.psnr_range();
        let center = (lo + hi) * T::half();
        let scale = ((hi - lo) * T::half()).max(T::lit(1e-12));
        // normal equations of the 4-parameter least-squares problem
        let mut ata = [[T::zero(); 4]; 4];
        let mut atb = [T::zero(); 4];
        for p in curve.points() {
            let s = (p.psnr - center) / scale;
            let row = [T::one(), s, s * s, s * s * s];
            let y = p.bits.log10();
            for i in 0..4 {
                atb[i] += row[i] * y;
                for j in 0..4 {
                    ata[i][j] += row[i] * row[j];
                }
            }
        }
        let coeffs =
            solve4(ata, atb).ok_or_else(|| Error::Curve("degenerate PSNR values".into()))?;
        Ok(Self {
            coeffs,
            center,
            scale,
        })
    }

    /// Integral of the cubic over `[a, b]` in PSNR units.
    fn integral(&self, a: T, b: T) -> T {
        let anti = |x: T| {
            let s = (x - self.center) / self.scale;
            let c = &self.coeffs;
            (c[0] * s
                + c[1] * s * s / T::two()
                + c[2] * s * s * s / T::lit(3.0)
                + c[3] * s * s * s * s / T::lit(4.0))
                * self.scale
        };
        anti(b) - anti(a)
    }
}

/// Gaussian elimination with partial pivoting.
fn solve4<T: Real>(mut a: [[T; 4]; 4], mut b: [T; 4]) -> Option<[T; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[pivot][col].abs() > T::lit(1e-14)) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, &p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * p;
            }
            let delta = f * b[col];
            b[row] -= delta;
        }
    }
    let mut x = [T::zero(); 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for k in row + 1..4 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Average bitrate difference of `test` relative to `anchor` at equal PSNR, in
/// percent. Negative means `test` needs fewer bits.
pub fn bd_rate<T: Real>(anchor: &RdCurve<T>, test: &RdCurve<T>) -> Result<T> {
    let (alo, ahi) = anchor.psnr_range();
    let (tlo, thi) = test.psnr_range();
    let lo = alo.max(tlo);
    let hi = ahi.min(thi);
    if !(hi > lo) {
        return Err(Error::Curve("PSNR ranges do not overlap".into()));
    }
    let fa = LogRateFit::new(anchor)?;
    let ft = LogRateFit::new(test)?;
    let avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok((T::lit(10.0).powf(avg) - T::one()) * T::lit(100.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::Vec3;

    fn grid(n: usize, z: f64, shift: f64) -> TriangleMesh<f64> {
        let mut verts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                verts.push(Vec3::new(
                    i as f64 / (n - 1) as f64 + shift,
                    j as f64 / (n - 1) as f64,
                    z,
                ));
            }
        }
        let mut faces = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                faces.push([a, a + 1, a + n]);
                faces.push([a + 1, a + n + 1, a + n]);
            }
        }
        TriangleMesh::new(verts, faces).unwrap()
    }

    fn curve(points: &[(f64, f64)]) -> RdCurve<f64> {
        RdCurve::new(points.iter().map(|&(bits, psnr)| RdPoint { bits, psnr })).unwrap()
    }

    #[test]
    fn identical_meshes_have_infinite_psnr() {
        let g = grid(5, 0.0, 0.0);
        let r = distortion(&g, &g).unwrap();
        assert_eq!(r.mse_d1, 0.0);
        assert_eq!(r.mse_d2, 0.0);
        assert!(r.d1_psnr.is_infinite() && r.d1_psnr > 0.0);
    }

    #[test]
    fn plane_offset() {
        let r = distortion(&grid(6, 0.0, 0.0), &grid(6, 0.1, 0.0)).unwrap();
        assert!((r.mse_d1 - 0.01).abs() < 1e-15, "{}", r.mse_d1);
        assert!((r.mse_d2 - 0.01).abs() < 1e-15);
        assert!((r.peak - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.d1_psnr - 10.0 * (2.0f64 / 0.01).log10()).abs() < 1e-9);
    }

    #[test]
    fn tangential_shift_is_invisible_to_point_to_plane() {
        let fine = grid(11, 0.0, 0.0);
        let coarse = grid(3, 0.0, 0.0);
        // interior samples shifted inside the plane; coverage differs only in-plane
        let shifted = grid(11, 0.0, 0.0)
            .with_vertices(
                fine.vertices()
                    .iter()
                    .map(|p| *p + Vec3::new(0.03, 0.0, 0.0))
                    .collect(),
            )
            .unwrap();
        let r = distortion(&coarse, &shifted).unwrap();
        assert_eq!(r.mse_d2, 0.0);
        assert!(r.mse_d1 > 0.0);
    }

    #[test]
    fn empty_input_is_rejected() {
        let g = grid(3, 0.0, 0.0);
        assert_eq!(
            distortion(&g, &TriangleMesh::empty()),
            Err(Error::EmptyMesh)
        );
    }

    #[test]
    fn curve_validation() {
        let few = RdCurve::new([RdPoint {
            bits: 1.0,
            psnr: 30.0,
        }]);
        assert!(few.is_err());
        let unsorted = RdCurve::new(
            [(2.0, 30.0), (1.0, 31.0), (3.0, 32.0), (4.0, 33.0)]
                .map(|(bits, psnr)| RdPoint { bits, psnr }),
        );
        assert!(unsorted.is_err());
        let with_inf = RdCurve::new(
            [
                (1.0, 30.0),
                (2.0, 31.0),
                (3.0, 32.0),
                (4.0, 33.0),
                (5.0, f64::INFINITY),
            ]
            .map(|(bits, psnr)| RdPoint { bits, psnr }),
        )
        .unwrap();
        assert_eq!(with_inf.points().len(), 4);
    }

    #[test]
    fn identical_and_halved_curves() {
        let a = curve(&[
            (1000.0, 30.0),
            (2000.0, 33.0),
            (4000.0, 35.5),
            (8000.0, 37.0),
        ]);
        assert!(bd_rate(&a, &a).unwrap().abs() < 1e-10);
        let half = curve(&[
            (500.0, 30.0),
            (1000.0, 33.0),
            (2000.0, 35.5),
            (4000.0, 37.0),
        ]);
        assert!((bd_rate(&a, &half).unwrap() + 50.0).abs() < 1e-9);
    }

    #[test]
    fn non_overlapping_curves() {
        let a = curve(&[(1.0, 10.0), (2.0, 11.0), (3.0, 12.0), (4.0, 13.0)]);
        let b = curve(&[(1.0, 20.0), (2.0, 21.0), (3.0, 22.0), (4.0, 23.0)]);
        assert!(bd_rate(&a, &b).is_err());
    }
}
