//! Field layout: a rhombus-shaped path through the edge midpoints splits a
//! rectangular field into four corner triangles and a central rhombus.
//!
//! Coordinates are centimeters, x to the right, y down (row direction).

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Signed shoelace area; positive for clockwise order in y-down axes.
    fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.0 * b.1 - b.0 * a.1).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        if a == 0.0 {
            let n = self.vertices.len().max(1) as f64;
            let (sx, sy) = self.vertices.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
            return (sx / n, sy / n);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let cross = p.0 * q.1 - q.0 * p.1;
            cx += (p.0 + q.0) * cross;
            cy += (p.1 + q.1) * cross;
        }
        (cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Even-odd rule.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Inclusive-exclusive bounding box `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), &(x, y)| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        )
    }
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Closed rhombus through the midpoints of a `width x height` rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct RhombusPath {
    pub centerline: Polygon,
    pub half_width: f64,
}

impl RhombusPath {
    pub fn new(width: f64, height: f64, path_width: f64) -> Self {
        let (mx, my) = (width / 2.0, height / 2.0);
        Self {
            centerline: Polygon::new(vec![(mx, 0.0), (width, my), (mx, height), (0.0, my)]),
            half_width: path_width / 2.0,
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.centerline
            .edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// On the path surface (boundary inclusive).
    pub fn covers(&self, p: Point) -> bool {
        self.distance(p) <= self.half_width
    }
}

/// A polygon minus the path band: the soil a sensor watches.
#[derive(Debug, Clone, PartialEq)]
pub struct Subfield {
    pub id: usize,
    pub name: &'static str,
    pub polygon: Polygon,
}

impl Subfield {
    pub fn contains(&self, path: &RhombusPath, p: Point) -> bool {
        self.polygon.contains(p) && !path.covers(p)
    }

    pub fn centroid(&self) -> Point {
        self.polygon.centroid()
    }
}

/// Ids 0..=3 are the corner triangles clockwise from the top-left, 4 is
/// the center.
pub fn default_subfields(width: f64, height: f64) -> Vec<Subfield> {
    let (mx, my) = (width / 2.0, height / 2.0);
    let tri = |id, name, v: [Point; 3]| Subfield { id, name, polygon: Polygon::new(v.to_vec()) };
    vec![
        tri(0, "north_west", [(0.0, 0.0), (mx, 0.0), (0.0, my)]),
        tri(1, "north_east", [(mx, 0.0), (width, 0.0), (width, my)]),
        tri(2, "south_east", [(width, my), (width, height), (mx, height)]),
        tri(3, "south_west", [(0.0, my), (mx, height), (0.0, height)]),
        Subfield {
            id: 4,
            name: "center",
            polygon: Polygon::new(vec![(mx, 0.0), (width, my), (mx, height), (0.0, my)]),
        },
    ]
}
