use crate::error::{Error, Result};
use crate::imaging::{LogImage, Plane};

/// Maximum number of Jacobi sweeps before giving up.
pub const SVD_MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition of an `m x n` log image
/// (`m` rows = image height, `n` columns = image width).
///
/// Holds `r = min(m, n)` singular triples sorted by non-increasing value.
/// Each left vector is sign-normalized so that its largest-magnitude entry is
/// positive; the paired right vector is flipped with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl SingularSpectrum {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank_bound(&self) -> usize {
        self.values.len()
    }

    /// Singular values `d_1 >= d_2 >= ... >= d_r >= 0`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Left singular vectors, each of length `rows`.
    pub fn left_vectors(&self) -> &[Vec<f64>] {
        &self.left
    }

    /// Right singular vectors, each of length `cols`.
    pub fn right_vectors(&self) -> &[Vec<f64>] {
        &self.right
    }
}

/// Decomposes a log image.
pub fn thin_svd(f: &LogImage) -> Result<SingularSpectrum> {
    thin_svd_plane(f.plane())
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Column pairs of the tall orientation of the matrix are rotated until
/// every pair is orthogonal to working precision. Column norms are then the
/// singular values, normalized columns the left vectors, and the
/// accumulated rotations the right vectors.
pub fn thin_svd_plane(plane: &Plane) -> Result<SingularSpectrum> {
    if plane.is_empty() {
        return Err(Error::Parameter("cannot decompose an empty image".into()));
    }
    let (rows, cols) = (plane.height(), plane.width());
    let transpose = rows < cols;
    // tall orientation: `m x n` with m >= n, stored column-major
    let (m, n) = if transpose { (cols, rows) } else { (rows, cols) };
    let mut w: Vec<Vec<f64>> =
        (0..n).map(|j| (0..m).map(|i| if transpose { plane.get(i, j) } else { plane.get(j, i) }).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| unit(n, j)).collect();

    let tol = f64::EPSILON * m as f64;
    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = column_products(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNonConvergence { max_iterations: SVD_MAX_SWEEPS });
    }

    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(j, col)| (norm(col), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let scale = order.first().map_or(0.0, |o| o.0);
    let negligible = scale * f64::EPSILON * m as f64;
    let mut values = Vec::with_capacity(n);
    let mut tall_left: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut tall_right: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for &(sigma, j) in &order {
        values.push(sigma);
        tall_right.push(v[j].clone());
        if sigma > negligible && sigma > 0.0 {
            tall_left.push(w[j].iter().map(|x| x / sigma).collect());
        } else {
            pending.push(tall_left.len());
            tall_left.push(Vec::new());
        }
    }
    complete_orthonormal(&mut tall_left, &pending, m);

    let (mut left, mut right) = if transpose { (tall_right, tall_left) } else { (tall_left, tall_right) };
    for (u, v) in left.iter_mut().zip(right.iter_mut()) {
        let pivot = u.iter().copied().fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(SingularSpectrum { rows, cols, values, left, right })
}

fn unit(len: usize, at: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    e[at] = 1.0;
    e
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn column_products(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    a.iter().zip(b).fold((0.0, 0.0, 0.0), |(aa, bb, ab), (x, y)| (aa + x * x, bb + y * y, ab + x * y))
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the `pending` slots with unit vectors orthogonal to every other
/// slot, drawing candidates from the standard basis.
fn complete_orthonormal(vectors: &mut [Vec<f64>], pending: &[usize], len: usize) {
    let mut basis = 0;
    for &slot in pending {
        loop {
            let mut cand = unit(len, basis % len);
            basis += 1;
            // two Gram-Schmidt passes for stability
            for _ in 0..2 {
                for (i, other) in vectors.iter().enumerate() {
                    if i != slot && !other.is_empty() {
                        let proj = dot(&cand, other);
                        cand.iter_mut().zip(other).for_each(|(c, o)| *c -= proj * o);
                    }
                }
            }
            let nrm = norm(&cand);
            if nrm > 1e-8 {
                vectors[slot] = cand.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Sum of the first `terms` rank-one components `d_i * u_i * v_i^T`.
pub fn reconstruct(s: &SingularSpectrum, terms: usize) -> Result<LogImage> {
    let r = s.rank_bound();
    if terms < 1 || terms > r {
        return Err(Error::Parameter(format!("terms must be in 1..={r}, got {terms}")));
    }
    let mut out = vec![0.0; s.rows * s.cols];
    for i in 0..terms {
        let d = s.values[i];
        for (row, &ur) in s.left[i].iter().enumerate() {
            let scale = d * ur;
            let line = &mut out[row * s.cols..(row + 1) * s.cols];
            for (o, &vc) in line.iter_mut().zip(&s.right[i]) {
                *o += scale * vc;
            }
        }
    }
    LogImage::from_plane(Plane::new(s.cols, s.rows, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_plane(w: usize, h: usize, data: Vec<f64>) -> LogImage {
        LogImage::from_plane(Plane::new(w, h, data).unwrap()).unwrap()
    }

    fn frob(a: &[f64]) -> f64 {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn all_ones_two_by_two() {
        let s = thin_svd(&log_plane(2, 2, vec![1.0; 4])).unwrap();
        assert_abs_diff_eq!(s.values()[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let s = thin_svd(&log_plane(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.])).unwrap();
        for d in s.values() {
            assert_abs_diff_eq!(*d, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sign_convention_and_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = log_plane(3, 4, (0..12).map(|_| rng.random_range(-1.0..1.0)).collect());
        let s = thin_svd(&img).unwrap();
        assert_eq!((s.rows(), s.cols(), s.rank_bound()), (4, 3, 3));
        for u in s.left_vectors() {
            assert_eq!(u.len(), 4);
            let pivot = u.iter().copied().fold(0.0_f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(pivot > 0.0);
        }
        assert!(s.right_vectors().iter().all(|v| v.len() == 3));
    }

    #[test]
    fn rank_one_reconstructs_with_one_term() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, -1.0, 4.0, 2.0];
        let data: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let img = log_plane(4, 3, data.clone());
        let s = thin_svd(&img).unwrap();
        let rec = reconstruct(&s, 1).unwrap();
        for (x, y) in rec.values().iter().zip(&data) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
    }

    #[test]
    fn rank_one_residual_matches_tail_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
        let img = log_plane(3, 4, data.clone());
        let s = thin_svd(&img).unwrap();
        let rec = reconstruct(&s, 1).unwrap();
        let residual: Vec<f64> = data.iter().zip(rec.values()).map(|(a, b)| a - b).collect();
        let tail = s.values()[1..].iter().map(|d| d * d).sum::<f64>().sqrt();
        assert_abs_diff_eq!(frob(&residual), tail, epsilon = 1e-10);
    }

    #[test]
    fn terms_out_of_range() {
        let s = thin_svd(&log_plane(2, 2, vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(reconstruct(&s, 0).is_err());
        assert!(reconstruct(&s, 3).is_err());
    }

    #[test]
    fn empty_image_rejected() {
        let empty = LogImage::from_plane(Plane::new(0, 0, vec![]).unwrap()).unwrap();
        assert!(thin_svd(&empty).is_err());
    }
}
