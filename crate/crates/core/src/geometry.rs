//! Positions of the base station, RIS elements and users, plus user mobility
//! and K-means placement of the UAV.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::InvalidPosition(format!(
                "non-finite ({x}, {y}, {z})"
            )));
        }
        if z < 0.0 {
            return Err(Error::InvalidPosition(format!("negative height {z}")));
        }
        Ok(Self { x, y, z })
    }

    pub const fn origin() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        libm::sqrt(
            (self.x - other.x) * (self.x - other.x)
                + (self.y - other.y) * (self.y - other.y)
                + (self.z - other.z) * (self.z - other.z),
        )
    }

    pub fn horizontal(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Rectangular region users are confined to, `[x_min, x_min + width] × [y_min, y_min + height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub x_min: f64,
    pub y_min: f64,
    pub width: f64,
    pub height: f64,
}

impl Arena {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min
            && p[0] <= self.x_min + self.width
            && p[1] >= self.y_min
            && p[1] <= self.y_min + self.height
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.x_min, self.x_min + self.width),
            p[1].clamp(self.y_min, self.y_min + self.height),
        ]
    }

    pub fn sample(&self, rng: &mut SimRng) -> [f64; 2] {
        [
            self.x_min + self.width * rng.random::<f64>(),
            self.y_min + self.height * rng.random::<f64>(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// `M`
    pub rows: usize,
    /// `N`
    pub cols: usize,
    pub element_spacing: f64,
    pub uav_altitude: f64,
    pub user_height: f64,
}

impl GridSpec {
    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// One snapshot of every node position in the scene.
///
/// RIS elements sit on a planar `rows × cols` grid centred under the UAV at
/// its flight altitude; element `l = i * cols + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub bs: Position3D,
    pub ris_elements: Vec<Position3D>,
    pub users: Vec<Position3D>,
    pub uav_center: Position3D,
    pub grid: GridSpec,
}

impl Layout {
    pub fn new(
        bs: Position3D,
        uav_xy: [f64; 2],
        users_xy: &[[f64; 2]],
        grid: GridSpec,
    ) -> Result<Self> {
        if users_xy.is_empty() {
            return Err(Error::NoUsers);
        }
        let users = users_xy
            .iter()
            .map(|p| Position3D::new(p[0], p[1], grid.user_height))
            .collect::<Result<Vec<_>>>()?;
        let uav_center = Position3D::new(uav_xy[0], uav_xy[1], grid.uav_altitude)?;
        let mut layout = Self {
            bs,
            ris_elements: Vec::new(),
            users,
            uav_center,
            grid,
        };
        layout.rebuild_elements();
        Ok(layout)
    }

    fn rebuild_elements(&mut self) {
        let g = self.grid;
        let c = self.uav_center;
        let row_mid = (g.rows as f64 - 1.0) / 2.0;
        let col_mid = (g.cols as f64 - 1.0) / 2.0;
        self.ris_elements = (0..g.rows)
            .flat_map(|i| {
                (0..g.cols).map(move |j| Position3D {
                    x: c.x + (j as f64 - col_mid) * g.element_spacing,
                    y: c.y + (i as f64 - row_mid) * g.element_spacing,
                    z: c.z,
                })
            })
            .collect();
    }

    /// Moves the UAV horizontally, keeping its altitude.
    pub fn with_uav_at(&self, xy: [f64; 2]) -> Layout {
        let mut next = self.clone();
        next.uav_center.x = xy[0];
        next.uav_center.y = xy[1];
        next.rebuild_elements();
        next
    }

    pub fn user_points(&self) -> Vec<[f64; 2]> {
        self.users.iter().map(Position3D::horizontal).collect()
    }

    pub fn trace(&self) -> LayoutTrace {
        LayoutTrace {
            bs: self.bs.to_array(),
            uav_center: self.uav_center.to_array(),
            elements: self.ris_elements.iter().map(Position3D::to_array).collect(),
            users: self.users.iter().map(Position3D::to_array).collect(),
        }
    }
}

/// JSON-trace form of a [`Layout`]: `[x, y, z]` triplets in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutTrace {
    pub bs: [f64; 3],
    pub uav_center: [f64; 3],
    pub elements: Vec<[f64; 3]>,
    pub users: Vec<[f64; 3]>,
}

/// Random-waypoint mobility with a per-slot speed cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobilityModel {
    pub arena: Arena,
    /// meters per slot
    pub max_speed: f64,
    waypoints: Vec<[f64; 2]>,
    rng: SimRng,
}

impl MobilityModel {
    pub fn new(arena: Arena, max_speed: f64, users: usize, mut rng: SimRng) -> Self {
        let waypoints = (0..users).map(|_| arena.sample(&mut rng)).collect();
        Self {
            arena,
            max_speed,
            waypoints,
            rng,
        }
    }

    /// Overrides the current waypoints (they are not required to be inside
    /// the arena; positions are clamped regardless).
    pub fn with_waypoints(mut self, waypoints: Vec<[f64; 2]>) -> Self {
        self.waypoints = waypoints;
        self
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    pub fn step_users(&mut self, layout: &Layout) -> Layout {
        while self.waypoints.len() < layout.users.len() {
            let w = self.arena.sample(&mut self.rng);
            self.waypoints.push(w);
        }
        let mut next = layout.clone();
        for (user, waypoint) in next.users.iter_mut().zip(self.waypoints.iter_mut()) {
            let dx = waypoint[0] - user.x;
            let dy = waypoint[1] - user.y;
            let dist = libm::sqrt(dx * dx + dy * dy);
            let moved = if dist <= self.max_speed {
                let reached = *waypoint;
                if self.max_speed > 0.0 {
                    *waypoint = self.arena.sample(&mut self.rng);
                }
                reached
            } else {
                let s = self.max_speed / dist;
                [user.x + dx * s, user.y + dy * s]
            };
            let p = self.arena.clamp(moved);
            user.x = p[0];
            user.y = p[1];
        }
        next
    }
}

/// Lloyd's algorithm with deterministic initialisation (the first
/// `clusters` points). Returns the cluster centroids.
pub fn kmeans(points: &[[f64; 2]], clusters: usize, iterations: usize) -> Result<Vec<[f64; 2]>> {
    if points.is_empty() {
        return Err(Error::NoUsers);
    }
    let clusters = clusters.clamp(1, points.len());
    let mut centroids: Vec<[f64; 2]> = points[..clusters].to_vec();
    let mut assignment = alloc::vec![0usize; points.len()];
    for _ in 0..iterations.max(1) {
        for (a, p) in assignment.iter_mut().zip(points) {
            *a = nearest(&centroids, *p);
        }
        let mut sums = alloc::vec![[0.0f64; 2]; clusters];
        let mut counts = alloc::vec![0usize; clusters];
        for (&a, p) in assignment.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        let mut moved = false;
        for ((c, s), &n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            // empty clusters keep their previous centroid
            if n > 0 {
                let next = [s[0] / n as f64, s[1] / n as f64];
                moved |= next != *c;
                *c = next;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(centroids)
}

fn nearest(centroids: &[[f64; 2]], p: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = (c[0] - p[0]) * (c[0] - p[0]) + (c[1] - p[1]) * (c[1] - p[1]);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Horizontal UAV position minimising the summed squared distance to all users.
pub fn kmeans_place_uav(user_positions: &[[f64; 2]], iterations: usize) -> Result<[f64; 2]> {
    Ok(kmeans(user_positions, 1, iterations)?[0])
}

pub fn squared_distance_objective(user_positions: &[[f64; 2]], uav: [f64; 2]) -> f64 {
    user_positions
        .iter()
        .map(|p| (p[0] - uav[0]) * (p[0] - uav[0]) + (p[1] - uav[1]) * (p[1] - uav[1]))
        .sum()
}

/// Elevation of `element` seen from `bs`, in degrees.
pub fn elevation_angle(bs: &Position3D, element: &Position3D) -> Result<f64> {
    let d = bs.distance(element);
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let s = ((element.z - bs.z) / d).clamp(-1.0, 1.0);
    Ok(libm::asin(s).to_degrees())
}
