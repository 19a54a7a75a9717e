//! Closed-form solution families for the identity checks: a power-law radial
//! coefficient `a = r^p` with the separable solution `u = r^(s-1) x1` on an
//! annulus (2D) or spherical shell (3D).
//!
//! Substituting into `(a u_i)_i = 0` forces the exponent equation
//! `s^2 + p s - 1 = 0` in 2D and `s^2 + (1+p) s - 2 = 0` in 3D; the positive
//! root is taken.

/// One family: dimension, coefficient exponent, solution exponent, and the
/// annulus/shell radii used for sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticFamily {
    pub dimension: usize,
    pub p: f64,
    pub s: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

/// 2D family on an annulus excluding the origin.
pub fn analytic_family_2d(p: f64, r_lo: f64, r_hi: f64) -> AnalyticFamily {
    assert!(r_lo > 0.0 && r_hi > r_lo);
    let s = 0.5 * (-p + (p * p + 4.0).sqrt());
    AnalyticFamily {
        dimension: 2,
        p,
        s,
        r_lo,
        r_hi,
    }
}

/// 3D family on a spherical shell excluding the origin.
pub fn analytic_family_3d(p: f64, r_lo: f64, r_hi: f64) -> AnalyticFamily {
    assert!(r_lo > 0.0 && r_hi > r_lo);
    let q = 1.0 + p;
    let s = 0.5 * (-q + (q * q + 8.0).sqrt());
    AnalyticFamily {
        dimension: 3,
        p,
        s,
        r_lo,
        r_hi,
    }
}

impl AnalyticFamily {
    #[inline]
    fn radius<const D: usize>(&self, x: &[f64; D]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// u = r^(s-1) x1.
    #[inline]
    pub fn u<const D: usize>(&self, x: &[f64; D]) -> f64 {
        let r = self.radius(x);
        r.powf(self.s - 1.0) * x[0]
    }

    /// Closed-form gradient: u_i = f' x1 x_i / r + f delta_i1 with f = r^(s-1).
    #[inline]
    pub fn grad_u<const D: usize>(&self, x: &[f64; D]) -> [f64; D] {
        let r = self.radius(x);
        let f = r.powf(self.s - 1.0);
        let fp = (self.s - 1.0) * r.powf(self.s - 2.0);
        let mut g = [0.0; D];
        let c = fp * x[0] / r;
        for i in 0..D {
            g[i] = c * x[i];
        }
        g[0] += f;
        g
    }

    /// Closed-form Hessian.
    pub fn hess_u<const D: usize>(&self, x: &[f64; D]) -> [[f64; D]; D] {
        let r = self.radius(x);
        let fp = (self.s - 1.0) * r.powf(self.s - 2.0);
        let fpp = (self.s - 1.0) * (self.s - 2.0) * r.powf(self.s - 3.0);
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                let mut v =
                    fpp * x[0] * x[i] * x[j] / (r * r) - fp * x[0] * x[i] * x[j] / (r * r * r);
                if j == 0 {
                    v += fp * x[i] / r;
                }
                if i == 0 {
                    v += fp * x[j] / r;
                }
                if i == j {
                    v += fp * x[0] / r;
                }
                h[i][j] = v;
            }
        }
        h
    }

    /// a = r^p.
    #[inline]
    pub fn a<const D: usize>(&self, x: &[f64; D]) -> f64 {
        self.radius(x).powf(self.p)
    }

    /// a_i = p r^(p-2) x_i.
    #[inline]
    pub fn grad_a<const D: usize>(&self, x: &[f64; D]) -> [f64; D] {
        let r = self.radius(x);
        let c = self.p * r.powf(self.p - 2.0);
        let mut g = [0.0; D];
        for i in 0..D {
            g[i] = c * x[i];
        }
        g
    }

    /// a_ij = p r^(p-2) delta_ij + p (p-2) r^(p-4) x_i x_j.
    pub fn hess_a<const D: usize>(&self, x: &[f64; D]) -> [[f64; D]; D] {
        let r = self.radius(x);
        let c1 = self.p * r.powf(self.p - 2.0);
        let c2 = self.p * (self.p - 2.0) * r.powf(self.p - 4.0);
        let mut h = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                h[i][j] = c2 * x[i] * x[j] + if i == j { c1 } else { 0.0 };
            }
        }
        h
    }

    /// Radial derivative a'(r) = p r^(p-1).
    #[inline]
    pub fn a_radial_deriv(&self, r: f64) -> f64 {
        self.p * r.powf(self.p - 1.0)
    }

    /// Closed-form residual of `(a u_i)_i = a lap(u) + grad(a).grad(u)`;
    /// vanishes identically when `s` solves the exponent equation.
    pub fn pde_residual<const D: usize>(&self, x: &[f64; D]) -> f64 {
        let a = self.a(x);
        let ga = self.grad_a(x);
        let gu = self.grad_u(x);
        let hu = self.hess_u(x);
        let mut lap = 0.0;
        for i in 0..D {
            lap += hu[i][i];
        }
        let mut adv = 0.0;
        for i in 0..D {
            adv += ga[i] * gu[i];
        }
        a * lap + adv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    // Frozen exponents: the positive roots of s^2 + p s - 1 = 0 and
    // s^2 + (1+p) s - 2 = 0.
    #[test]
    fn exponents_match_frozen_values() {
        assert_eq!(analytic_family_2d(0.0, 0.5, 2.0).s, 1.0);
        assert!((analytic_family_2d(-1.0, 0.5, 2.0).s - 1.618033988749895).abs() < 1e-15);
        assert!((analytic_family_2d(2.0, 0.5, 2.0).s - 0.41421356237309503).abs() < 1e-15);
        assert_eq!(analytic_family_3d(0.0, 0.5, 2.0).s, 1.0);
        assert!((analytic_family_3d(-1.0, 0.5, 2.0).s - 1.4142135623730951).abs() < 1e-15);
        assert!((analytic_family_3d(1.0, 0.5, 2.0).s - 0.7320508075688772).abs() < 1e-15);
    }

    #[test]
    fn families_solve_the_equation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for p in [0.0, -1.0, 2.0] {
            let fam = analytic_family_2d(p, 0.5, 2.0);
            for _ in 0..1000 {
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = rng.gen_range(0.5..2.0);
                let x = [r * th.cos(), r * th.sin()];
                assert!(
                    fam.pde_residual(&x).abs() < 1e-11,
                    "2d p={p} residual {} at {x:?}",
                    fam.pde_residual(&x)
                );
            }
        }
        for p in [0.0, -1.0, 1.0] {
            let fam = analytic_family_3d(p, 0.5, 2.0);
            for _ in 0..1000 {
                let v: [f64; 3] = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n < 1e-3 {
                    continue;
                }
                let r = rng.gen_range(0.5..2.0);
                let x = [v[0] / n * r, v[1] / n * r, v[2] / n * r];
                assert!(fam.pde_residual(&x).abs() < 1e-11, "3d p={p}");
            }
        }
    }

    #[test]
    fn p_zero_is_harmonic_linear() {
        let fam = analytic_family_2d(0.0, 0.5, 2.0);
        let x = [0.7, -0.3];
        assert_eq!(fam.u(&x), 0.7);
        assert_eq!(fam.grad_u(&x), [1.0, 0.0]);
        assert_eq!(fam.a(&x), 1.0);
        assert_eq!(fam.grad_a(&x), [0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let fam = analytic_family_2d(-1.0, 0.5, 2.0);
        let x = [0.9, 0.7];
        let g = fam.grad_u(&x);
        let h = 1e-6;
        for axis in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (fam.u(&xp) - fam.u(&xm)) / (2.0 * h);
            assert!((g[axis] - fd).abs() < 1e-9);
        }
        let hess = fam.hess_u(&x);
        for axis in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (fam.grad_u(&xp)[0] - fam.grad_u(&xm)[0]) / (2.0 * h);
            assert!((hess[0][axis] - fd).abs() < 1e-8);
        }
        let ha = fam.hess_a(&x);
        for axis in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (fam.grad_a(&xp)[1] - fam.grad_a(&xm)[1]) / (2.0 * h);
            assert!((ha[1][axis] - fd).abs() < 1e-8);
        }
    }
}
