//! Small fixed-size vector helpers for points in R^3.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, f: f64) -> Point {
    [a[0] * f, a[1] * f, a[2] * f]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

#[inline]
pub fn normalize(a: &Point) -> Point {
    scale(a, 1.0 / norm(a))
}

#[inline]
pub fn midpoint(a: &Point, b: &Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

/// Affine combination `l0*a + l1*b + l2*c`.
#[inline]
pub fn barycentric(p: &[Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        l[0] * p[0][2] + l[1] * p[1][2] + l[2] * p[2][2],
    ]
}

/// Euclidean distance from `x` to the closed triangle `t`.
pub fn point_triangle_distance(x: &Point, t: &[Point; 3]) -> f64 {
    // Ericson, "Real-Time Collision Detection", closest point on triangle.
    let (a, b, c) = (&t[0], &t[1], &t[2]);
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(x, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return norm(&ap);
    }
    let bp = sub(x, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return norm(&bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return dist(x, &add(a, &scale(&ab, v)));
    }
    let cp = sub(x, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return norm(&cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return dist(x, &add(a, &scale(&ac, w)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return dist(x, &add(b, &scale(&sub(c, b), w)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let closest = add(a, &add(&scale(&ab, v), &scale(&ac, w)));
    dist(x, &closest)
}

/// Signed solid angle subtended by triangle `t` at `x` (Van Oosterom–Strackee).
/// Positive when `x` lies on the side opposite to the winding normal.
pub fn solid_angle(x: &Point, t: &[Point; 3]) -> f64 {
    let r1 = sub(&t[0], x);
    let r2 = sub(&t[1], x);
    let r3 = sub(&t[2], x);
    let (l1, l2, l3) = (norm(&r1), norm(&r2), norm(&r3));
    let numer = dot(&r1, &cross(&r2, &r3));
    let denom = l1 * l2 * l3 + dot(&r1, &r2) * l3 + dot(&r1, &r3) * l2 + dot(&r2, &r3) * l1;
    2.0 * numer.atan2(denom)
}
