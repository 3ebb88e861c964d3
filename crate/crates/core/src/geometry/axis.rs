use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{footprint_clearance, perceived_power};
use crate::scenario::{Point, Region, Scenario};
use crate::{Error, Result};

/// Reference path between PU footprints, ordered from the source side to
/// the CPC side.
#[derive(Clone, Debug, PartialEq)]
pub struct MedialAxis {
    pub points: Vec<Point>,
    /// Strongest PU power perceived at each point (W).
    pub received_power: Vec<f64>,
    /// Distance from each point to the nearest PU footprint edge (km).
    pub clearance: Vec<f64>,
    /// Cumulative arc length at each point (km).
    pub arc: Vec<f64>,
}

/// Nearest point of the axis polyline to a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub point: Point,
    pub distance: f64,
    pub arc: f64,
}

impl MedialAxis {
    pub fn from_points(points: Vec<Point>, scenario: &Scenario) -> Self {
        let alpha = scenario.radio.path_loss_alpha;
        let d_min = scenario.game.grid_resolution;
        let received_power = points
            .iter()
            .map(|p| perceived_power(&scenario.pus, p, alpha, d_min))
            .collect();
        let clearance = points
            .iter()
            .map(|p| footprint_clearance(&scenario.pus, p))
            .collect();
        let mut arc = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += points[i - 1].dist(p);
            }
            arc.push(acc);
        }
        MedialAxis {
            points,
            received_power,
            clearance,
            arc,
        }
    }

    pub fn length(&self) -> f64 {
        self.arc.last().copied().unwrap_or(0.0)
    }

    pub fn project(&self, p: &Point) -> Projection {
        let mut best = Projection {
            point: self.points[0],
            distance: self.points[0].dist(p),
            arc: 0.0,
        };
        for i in 1..self.points.len() {
            let (a, b) = (self.points[i - 1], self.points[i]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
            let q = Point::new(a.x + t * dx, a.y + t * dy);
            let d = q.dist(p);
            if d < best.distance {
                best = Projection {
                    point: q,
                    distance: d,
                    arc: self.arc[i - 1] + t * len2.sqrt(),
                };
            }
        }
        best
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Point {
        if s <= 0.0 || self.points.len() == 1 {
            return self.points[0];
        }
        for i in 1..self.points.len() {
            if s <= self.arc[i] {
                let seg = self.arc[i] - self.arc[i - 1];
                let t = (s - self.arc[i - 1]) / seg;
                let (a, b) = (self.points[i - 1], self.points[i]);
                return Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            }
        }
        *self.points.last().unwrap()
    }
}

struct Grid {
    region: Region,
    nx: usize,
    ny: usize,
}

impl Grid {
    fn new(region: Region, res: f64) -> Self {
        let nx = ((region.width() / res).round() as usize).max(2);
        let ny = ((region.height() / res).round() as usize).max(2);
        Grid { region, nx, ny }
    }

    fn point(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.region.x_min + self.region.width() * i as f64 / self.nx as f64,
            self.region.y_min + self.region.height() * j as f64 / self.ny as f64,
        )
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    fn len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    fn coords(&self, k: usize) -> (usize, usize) {
        (k % (self.nx + 1), k / (self.nx + 1))
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn centroid<'a>(points: impl Iterator<Item = &'a Point>) -> Point {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for p in points {
        sx += p.x;
        sy += p.y;
        n += 1.0;
    }
    Point::new(sx / n, sy / n)
}

/// Extracts the medial axis on a regular grid.
///
/// Every grid point gets the clearance to its nearest obstacle (PU footprint
/// edges; the region boundary joins as an obstacle only when there is a single
/// PU). Ridge cells are free interior cells that are a local maximum of the
/// clearance along one of the four grid cross-sections and border a cell whose
/// nearest obstacle differs. The axis is the shortest ridge path between the
/// ridge cells nearest to the source centroid and the CPC centroid.
pub fn compute_medial_axis(scenario: &Scenario) -> Result<MedialAxis> {
    let res = scenario.game.grid_resolution;
    if !(res > 0.0) {
        return Err(Error::Validation("grid_resolution must be > 0".into()));
    }
    let pus = &scenario.pus;
    if pus.is_empty() {
        return Err(Error::NoAxis("no primary users".into()));
    }
    let use_boundary = pus.len() == 1;
    let grid = Grid::new(scenario.region, res);
    let n = grid.len();

    let mut clear = vec![0.0; n];
    let mut label = vec![0usize; n];
    let mut tied = vec![false; n];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let p = grid.point(i, j);
            let mut best = f64::INFINITY;
            let mut second = f64::INFINITY;
            let mut arg = 0;
            let obstacles = pus
                .iter()
                .map(|pu| pu.center.dist(&p) - pu.footprint_radius)
                .chain(use_boundary.then(|| scenario.region.boundary_distance(&p)));
            for (k, c) in obstacles.enumerate() {
                if c < best {
                    second = best;
                    best = c;
                    arg = k;
                } else if c < second {
                    second = c;
                }
            }
            let k = grid.idx(i, j);
            clear[k] = best;
            label[k] = arg;
            tied[k] = second - best < 1e-12;
        }
    }

    const DIRS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let mut ridge = vec![false; n];
    let mut any = false;
    for j in 1..grid.ny {
        for i in 1..grid.nx {
            let k = grid.idx(i, j);
            let c = clear[k];
            if !(c > 0.0) {
                continue;
            }
            let at = |di: isize, dj: isize| {
                clear[grid.idx((i as isize + di) as usize, (j as isize + dj) as usize)]
            };
            let is_max = DIRS.iter().any(|&(di, dj)| {
                let (a, b) = (at(di, dj), at(-di, -dj));
                c >= a && c >= b && (c > a || c > b)
            });
            if !is_max {
                continue;
            }
            let mut border = tied[k];
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let kk = grid.idx((i as isize + di) as usize, (j as isize + dj) as usize);
                    border |= label[kk] != label[k];
                }
            }
            if border {
                ridge[k] = true;
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::NoAxis(
            "no free space between footprints: the footprints cover the region".into(),
        ));
    }

    let nearest_ridge = |target: Point| -> usize {
        (0..n)
            .filter(|&k| ridge[k])
            .min_by(|&a, &b| {
                let (ia, ja) = grid.coords(a);
                let (ib, jb) = grid.coords(b);
                grid.point(ia, ja)
                    .dist(&target)
                    .total_cmp(&grid.point(ib, jb).dist(&target))
                    .then(a.cmp(&b))
            })
            .expect("ridge is nonempty")
    };
    let start = nearest_ridge(centroid(scenario.nodes.sources.iter().map(|s| &s.pos)));
    let goal = nearest_ridge(centroid(scenario.nodes.cpc_stations.iter().map(|s| &s.pos)));

    // Shortest path through ridge cells; neighbors within two cells bridge
    // the one-cell gaps that grid sampling leaves in oblique ridges.
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Entry(0.0, start));
    while let Some(Entry(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        if k == goal {
            break;
        }
        let (i, j) = grid.coords(k);
        let p = grid.point(i, j);
        for dj in -2isize..=2 {
            for di in -2isize..=2 {
                let (ii, jj) = (i as isize + di, j as isize + dj);
                if (di, dj) == (0, 0) || ii < 0 || jj < 0 {
                    continue;
                }
                let (ii, jj) = (ii as usize, jj as usize);
                if ii > grid.nx || jj > grid.ny {
                    continue;
                }
                let kk = grid.idx(ii, jj);
                if !ridge[kk] {
                    continue;
                }
                let nd = d + p.dist(&grid.point(ii, jj));
                if nd < dist[kk] {
                    dist[kk] = nd;
                    prev[kk] = k;
                    heap.push(Entry(nd, kk));
                }
            }
        }
    }
    if !dist[goal].is_finite() {
        return Err(Error::NoAxis(
            "the ridge does not connect the source side to the CPC side".into(),
        ));
    }
    let mut path = vec![goal];
    while *path.last().unwrap() != start {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    let points = path
        .into_iter()
        .map(|k| {
            let (i, j) = grid.coords(k);
            grid.point(i, j)
        })
        .collect();
    Ok(MedialAxis::from_points(points, scenario))
}
