use serde::Serialize;

use super::beta::BetaParams;

/// Component order used throughout: (ask limit, bid limit, ask market, bid market).
pub const COMPONENTS: [&str; 4] = ["a+", "b+", "a-", "b-"];

/// The 4×4 interaction matrix Φ₀ with its closed-form eigensystem.
///
/// `eigenvectors[i]` satisfies Φ₀ᵀ vᵢ = λᵢ vᵢ, with λ₁ > λ₂ > λ₃ > λ₄ > 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phi0Matrix {
    pub betas: BetaParams,
    pub entries: [[f64; 4]; 4],
    pub eigenvalues: [f64; 4],
    pub eigenvectors: [[f64; 4]; 4],
}

pub fn build_phi0(b: &BetaParams) -> Phi0Matrix {
    let (b1, b2, b3) = b.as_tuple();
    let b23 = b2 * b3;
    let s = b1 + b2 + b23 - 1.0;
    let entries = [
        [1.0, 0.0, b2, s],
        [0.0, 1.0, s, b2],
        [b2, b23, b1 + b2, 0.0],
        [b23, b2, 0.0, b1 + b2],
    ];
    let eigenvalues = [
        b1 + 2.0 * b2 + b23,
        1.0 + b2 - b23,
        b1 + b23,
        1.0 - b2 - b23,
    ];
    let p = b2 * (b3 + 1.0);
    let q = b1 + b23 + 2.0 * b2 - 1.0;
    let r = b2 * (b3 - 1.0);
    let w = b1 + b23 - 1.0;
    let eigenvectors = [
        [p, p, q, q],
        [-1.0, 1.0, -1.0, 1.0],
        [r, -r, -w, w],
        [1.0, 1.0, -1.0, -1.0],
    ];
    Phi0Matrix {
        betas: *b,
        entries,
        eigenvalues,
        eigenvectors,
    }
}

impl Phi0Matrix {
    pub fn lambda(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    pub fn v(&self, i: usize) -> &[f64; 4] {
        &self.eigenvectors[i]
    }

    /// 𝟙ᵀv₁ from its closed form 2β₁ + 4β₂β₃ + 6β₂ − 2.
    pub fn ones_dot_v1(&self) -> f64 {
        let (b1, b2, b3) = self.betas.as_tuple();
        2.0 * b1 + 4.0 * b2 * b3 + 6.0 * b2 - 2.0
    }

    /// 𝟙ᵀvᵢ by direct summation.
    pub fn ones_dot(&self, i: usize) -> f64 {
        self.eigenvectors[i].iter().sum()
    }

    /// Φ₀ᵀ v for an arbitrary vector.
    pub fn transpose_apply(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (j, o) in out.iter_mut().enumerate() {
            for (i, vi) in v.iter().enumerate() {
                *o += self.entries[i][j] * vi;
            }
        }
        out
    }

    /// Largest relative residual ‖Φ₀ᵀvᵢ − λᵢvᵢ‖∞ / (λᵢ‖vᵢ‖∞) over the four pairs.
    pub fn eigen_residual(&self) -> f64 {
        (0..4)
            .map(|i| {
                let v = &self.eigenvectors[i];
                let lv = self.transpose_apply(v);
                let scale = self.eigenvalues[i] * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                lv.iter()
                    .zip(v)
                    .map(|(a, b)| (a - self.eigenvalues[i] * b).abs())
                    .fold(0.0f64, f64::max)
                    / scale
            })
            .fold(0.0, f64::max)
    }

    /// Coordinates yᵢ = vᵢᵀx.
    pub fn project(&self, x: &[f64; 4]) -> [f64; 4] {
        let mut y = [0.0; 4];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.eigenvectors[i].iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// Inverse of [`project`](Self::project): solves vᵢᵀx = yᵢ for x.
    pub fn unproject(&self, y: &[f64; 4]) -> [f64; 4] {
        let m = nalgebra::Matrix4::from_fn(|i, j| self.eigenvectors[i][j]);
        let rhs = nalgebra::Vector4::from_column_slice(y);
        let x = m.lu().solve(&rhs).expect("eigenvectors of Φ₀ᵀ are independent");
        [x[0], x[1], x[2], x[3]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Phi0Matrix {
        build_phi0(&BetaParams::new(0.6, 0.3, 0.5).unwrap())
    }

    #[test]
    fn reference_entries() {
        let p = reference();
        let expect = [
            [1.0, 0.0, 0.3, 0.05],
            [0.0, 1.0, 0.05, 0.3],
            [0.3, 0.15, 0.9, 0.0],
            [0.15, 0.3, 0.0, 0.9],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((p.entries[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_eigensystem() {
        let p = reference();
        let ev = [1.35, 1.15, 0.75, 0.55];
        for i in 0..4 {
            assert!((p.eigenvalues[i] - ev[i]).abs() < 1e-15);
        }
        let v1 = [0.45, 0.45, 0.35, 0.35];
        for j in 0..4 {
            assert!((p.eigenvectors[0][j] - v1[j]).abs() < 1e-15);
        }
        assert!((p.ones_dot_v1() - 1.6).abs() < 1e-15);
        assert!((p.ones_dot(0) - 1.6).abs() < 1e-15);
        assert!(p.eigen_residual() < 1e-15);
    }

    #[test]
    fn projection_round_trip() {
        let p = reference();
        let x = [1.0, 2.0, 0.5, -0.25];
        let back = p.unproject(&p.project(&x));
        for j in 0..4 {
            assert!((back[j] - x[j]).abs() < 1e-13);
        }
    }
}
