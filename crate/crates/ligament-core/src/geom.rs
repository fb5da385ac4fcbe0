//! Small fixed-size geometric types: 2-vectors and symmetric 2x2 tensors.
//!
//! Everything here is `Copy` and allocation-free; the heavier mesh and field
//! containers build on these.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// Rotation by +90 degrees: (x, y) -> (-y, x).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction. Zero-length input returns zero.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            Vec2::ZERO
        } else {
            self / n
        }
    }

    /// z-component of the cross product `self x other`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A symmetric 2x2 tensor (strain or stress), stored as (xx, yy, xy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, yy: 0.0, xy: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, yy: 1.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Sym2 { xx, yy, xy }
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    /// Full contraction e : f including both off-diagonal entries.
    pub fn ddot(self, o: Sym2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    /// Matrix-vector product e·v.
    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// Quadratic form (e v)·v.
    pub fn quad(self, v: Vec2) -> f64 {
        self.apply(v).dot(v)
    }

    /// Symmetric outer product v ⊗ v.
    pub fn outer(v: Vec2) -> Sym2 {
        Sym2::new(v.x * v.x, v.y * v.y, v.x * v.y)
    }

    /// Symmetrized gradient ½(g + gᵀ) from the rows (∇u₁, ∇u₂).
    pub fn from_gradient(grad_ux: Vec2, grad_uy: Vec2) -> Sym2 {
        Sym2::new(grad_ux.x, grad_uy.y, 0.5 * (grad_ux.y + grad_uy.x))
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.yy * s, self.xy * s)
    }
}

/// Distance from `p` to the closed segment [a, b].
pub fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perp_is_rotation_by_90() {
        let v = Vec2::new(3.0, 4.0);
        let n = v.perp();
        assert_eq!(n, Vec2::new(-4.0, 3.0));
        assert_eq!(v.dot(n), 0.0);
        assert_eq!(v.cross(n), v.norm_sq());
    }

    #[test]
    fn ddot_counts_off_diagonals_twice() {
        let e = Sym2::new(1.0, 2.0, 3.0);
        assert_eq!(e.ddot(e), 1.0 + 4.0 + 2.0 * 9.0);
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(1.0, 0.0);
        assert_eq!(dist_point_segment(Vec2::new(0.5, 1.0), a, b), 1.0);
        assert_eq!(dist_point_segment(Vec2::new(-3.0, 4.0), a, b), 5.0);
        assert_eq!(dist_point_segment(Vec2::new(2.0, 0.0), a, b), 1.0);
    }
}
