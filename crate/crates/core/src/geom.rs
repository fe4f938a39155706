//! Vectors, quaternions, poses, bounding boxes and the equirectangular
//! pixel/direction mapping.
//!
//! Everything here is generic over [`Real`] so the same conventions can be
//! evaluated in `f32` (GPU-style buffers) or `f64` (the default for all
//! geometry in this crate). The concrete `f64` aliases live at the crate root.
//!
//! Conventions:
//! * world frame is right-handed, `+Y` up;
//! * camera frame follows OpenCV: `+x` right, `+y` down, `+z` forward;
//! * a world point projects as `p_c = R_wc (p_w - C_w)`;
//! * ERP longitude is `(u/W - 0.5)·2π`, latitude is `(0.5 - v/H)·π`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Scalar types the geometry layer can be instantiated with.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub const WORLD_FRAME: &str = "right-handed, +Y up; a level camera looks along -Z";
pub const CAMERA_FRAME: &str = "opencv: +x right, +y down, +z forward";
pub const ERP_CONVENTION: &str = "lon=(u/W-0.5)*2pi, lat=(0.5-v/H)*pi, pixel centres at index+0.5";
pub const QUATERNION_CONVENTION: &str = "scalar-first world-to-camera [w,x,y,z]";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vector3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction. Zero vectors are returned unchanged.
    pub fn normalize(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self / n
        } else {
            self
        }
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vector3<U> {
        Vector3::new(
            U::from(self.x).unwrap(),
            U::from(self.y).unwrap(),
            U::from(self.z).unwrap(),
        )
    }
}

impl<T: Real> Add for Vector3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vector3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vector3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vector3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vector3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vector3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Vector3<T> {
    type Output = T;
    fn index(&self, axis: usize) -> &T {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

/// Scalar-first unit quaternion. When used in a [`Pose`] it encodes the
/// world-to-camera rotation `R_wc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn from_axis_angle(axis: Vector3<T>, angle: T) -> Self {
        let a = axis.normalize();
        let half = angle / T::lit(2.0);
        let s = half.sin();
        Self::new(half.cos(), a.x * s, a.y * s, a.z * s)
    }

    pub fn from_wxyz(q: [T; 4]) -> Self {
        Self::new(q[0], q[1], q[2], q[3])
    }

    pub fn to_wxyz(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    fn imag(self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Rotates `v` by this (unit) quaternion.
    pub fn rotate(self, v: Vector3<T>) -> Vector3<T> {
        let u = self.imag();
        let t = u.cross(v) * T::lit(2.0);
        v + t * self.w + u.cross(t)
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(self) -> [[T; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let two = T::lit(2.0);
        let one = T::one();
        [
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ]
    }
}

impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

/// Camera extrinsics: world-to-camera rotation plus the camera centre in
/// world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T> {
    pub rotation: Quaternion<T>,
    pub position: Vector3<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(rotation: Quaternion<T>, position: Vector3<T>) -> Self {
        Self { rotation, position }
    }

    /// Gravity-aligned pose at `position`: camera `-y` is world up and camera
    /// `+z` looks along world `-Z`. This is a rotation of π about world X, so
    /// `q_wc = [0, 1, 0, 0]`.
    pub fn level(position: Vector3<T>) -> Self {
        Self::new(
            Quaternion::new(T::zero(), T::one(), T::zero(), T::zero()),
            position,
        )
    }

    pub fn world_to_camera(&self, p_w: Vector3<T>) -> Vector3<T> {
        self.rotation.rotate(p_w - self.position)
    }

    pub fn camera_to_world(&self, p_c: Vector3<T>) -> Vector3<T> {
        self.rotation.conjugate().rotate(p_c) + self.position
    }

    /// Rotates a camera-frame direction into the world frame.
    pub fn dir_to_world(&self, d_c: Vector3<T>) -> Vector3<T> {
        self.rotation.conjugate().rotate(d_c)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub min: Vector3<T>,
    pub max: Vector3<T>,
}

impl<T: Real> Bounds<T> {
    pub fn new(min: Vector3<T>, max: Vector3<T>) -> Self {
        Self { min, max }
    }

    /// The empty box; `grow` on it yields the grown point.
    pub fn empty() -> Self {
        Self::new(
            Vector3::splat(T::infinity()),
            Vector3::splat(T::neg_infinity()),
        )
    }

    pub fn from_points<I: IntoIterator<Item = Vector3<T>>>(points: I) -> Self {
        points.into_iter().fold(Self::empty(), |b, p| b.grow(p))
    }

    pub fn grow(self, p: Vector3<T>) -> Self {
        Self::new(self.min.min(p), self.max.max(p))
    }

    pub fn union(self, o: Self) -> Self {
        Self::new(self.min.min(o.min), self.max.max(o.max))
    }

    pub fn extent(self) -> Vector3<T> {
        self.max - self.min
    }

    pub fn centre(self) -> Vector3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn diagonal(self) -> T {
        self.extent().norm()
    }

    pub fn contains(self, p: Vector3<T>) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    pub fn contains_box(self, o: Self) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    pub fn longest_axis(self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test. Returns the entry distance if the ray overlaps the box
    /// within `[t_min, t_max]`.
    pub fn ray_entry(
        self,
        origin: Vector3<T>,
        inv_dir: Vector3<T>,
        t_min: T,
        t_max: T,
    ) -> Option<T> {
        let mut lo = t_min;
        let mut hi = t_max;
        for axis in 0..3 {
            let t0 = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let t1 = (self.max[axis] - origin[axis]) * inv_dir[axis];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            // NaN from 0*inf leaves the interval untouched.
            if near > lo {
                lo = near;
            }
            if far < hi {
                hi = far;
            }
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}

/// Longitude/latitude of a continuous ERP coordinate.
pub fn pixel_to_lonlat<T: Real>(u: T, v: T, width: usize, height: usize) -> (T, T) {
    let w = T::from_usize(width).unwrap();
    let h = T::from_usize(height).unwrap();
    let half = T::lit(0.5);
    let lon = (u / w - half) * T::TAU();
    let lat = (half - v / h) * T::PI();
    (lon, lat)
}

/// Camera-frame unit direction for a continuous ERP coordinate. Callers
/// sample pixel centres, i.e. `index + 0.5`.
pub fn pixel_to_dir<T: Real>(u: T, v: T, width: usize, height: usize) -> Vector3<T> {
    let (lon, lat) = pixel_to_lonlat(u, v, width, height);
    let cl = lat.cos();
    Vector3::new(cl * lon.sin(), -lat.sin(), cl * lon.cos())
}

/// Direction through the centre of pixel `(col, row)`.
pub fn pixel_centre_dir<T: Real>(
    col: usize,
    row: usize,
    width: usize,
    height: usize,
) -> Vector3<T> {
    let half = T::lit(0.5);
    pixel_to_dir(
        T::from_usize(col).unwrap() + half,
        T::from_usize(row).unwrap() + half,
        width,
        height,
    )
}

/// Inverse of [`pixel_to_dir`]. `u` is wrapped into `[0, W)`; at the poles
/// `u = W/2`.
pub fn dir_to_pixel<T: Real>(d: Vector3<T>, width: usize, height: usize) -> (T, T) {
    let w = T::from_usize(width).unwrap();
    let h = T::from_usize(height).unwrap();
    let half = T::lit(0.5);
    let sin_lat = (-d.y).max(-T::one()).min(T::one());
    let lat = sin_lat.asin();
    let v = (half - lat / T::PI()) * h;
    let planar = d.x * d.x + d.z * d.z;
    if planar <= T::epsilon() * T::epsilon() {
        return (w * half, v);
    }
    let lon = d.x.atan2(d.z);
    let mut u = (lon / T::TAU() + half) * w;
    if u >= w {
        u = u - w;
    }
    if u < T::zero() {
        u = u + w;
    }
    // lon = +π lands exactly on W; the seam belongs to u = 0.
    if u >= w {
        u = T::zero();
    }
    (u, v)
}
