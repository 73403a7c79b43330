//! PPP topologies on a square region, D2D pairing, nearest-SBS association
//! and per-SBS loads.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popularity::{RequestCategory, UserRole};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Opposite edges identified; distances wrap around.
    #[default]
    Torus,
    /// Plain Euclidean distances, no wrap.
    Truncated,
}

/// Square simulation window `[0, side)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub side: f64,
    pub boundary: Boundary,
}

impl Region {
    pub fn new(area: f64, boundary: Boundary) -> Self {
        Region { side: area.max(0.0).sqrt(), boundary }
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * self.side, 0.5 * self.side)
    }

    fn axis_gap(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.boundary {
            Boundary::Torus => d.min(self.side - d),
            Boundary::Truncated => d,
        }
    }

    pub fn distance_sq(&self, a: Point, b: Point) -> f64 {
        let dx = self.axis_gap(a.x, b.x);
        let dy = self.axis_gap(a.y, b.y);
        dx * dx + dy * dy
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    /// Maps a point back into the window. Truncated regions clamp instead of wrapping.
    pub fn wrap(&self, p: Point) -> Point {
        let fold = |v: f64| match self.boundary {
            Boundary::Torus => {
                let w = v.rem_euclid(self.side);
                if w >= self.side { 0.0 } else { w }
            }
            Boundary::Truncated => v.clamp(0.0, self.side.next_down_or_zero()),
        };
        Point::new(fold(p.x), fold(p.y))
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.random::<f64>() * self.side, rng.random::<f64>() * self.side)
    }
}

trait NextDown {
    fn next_down_or_zero(self) -> f64;
}

impl NextDown for f64 {
    fn next_down_or_zero(self) -> f64 {
        if self > 0.0 { f64::from_bits(self.to_bits() - 1) } else { 0.0 }
    }
}

/// Draws a Poisson number of points, each uniform on the region.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, region: &Region, rng: &mut R) -> Vec<Point> {
    let mean = density * region.area();
    if !(mean > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    (0..n).map(|_| region.sample_point(rng)).collect()
}

/// D2D pairs realized over a user population.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub peer: Vec<Option<usize>>,
    /// Pair distance r_d; 0 for unpaired users.
    pub distance: Vec<f64>,
}

impl Pairing {
    pub fn unpaired(n: usize) -> Self {
        Pairing { peer: vec![None; n], distance: vec![0.0; n] }
    }

    pub fn pair_count(&self) -> usize {
        self.peer.iter().filter(|p| p.is_some()).count() / 2
    }

    pub fn role(&self, user: usize) -> UserRole {
        match self.peer[user] {
            None => UserRole::Unpaired,
            Some(p) if p > user => UserRole::PairA,
            Some(_) => UserRole::PairB,
        }
    }
}

/// Pairs `round(δn/2)` users. The first member of each pair keeps its
/// position; its peer is moved to a uniform point of the disk of radius
/// `r_max` around it, so the pair distance has density `2r/r_max²`.
///
/// Users are i.i.d., so pairing indices `(0,1), (2,3), …` is a uniform choice.
pub fn pair_users<R: Rng + ?Sized>(
    users: &mut [Point],
    delta: f64,
    r_max: f64,
    region: &Region,
    rng: &mut R,
) -> Pairing {
    let n = users.len();
    let mut pairing = Pairing::unpaired(n);
    let pairs = ((delta * n as f64) / 2.0).round() as usize;
    let pairs = pairs.min(n / 2);
    for j in 0..pairs {
        let (a, b) = (2 * j, 2 * j + 1);
        let r = r_max * rng.random::<f64>().sqrt();
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let anchor = users[a];
        users[b] = region.wrap(Point::new(anchor.x + r * phi.cos(), anchor.y + r * phi.sin()));
        pairing.peer[a] = Some(b);
        pairing.peer[b] = Some(a);
        // The wrap can only shorten a torus distance, never lengthen it.
        let d = region.distance(anchor, users[b]);
        pairing.distance[a] = d;
        pairing.distance[b] = d;
    }
    pairing
}

/// Uniform-grid spatial index over SBS positions for k-nearest queries.
#[derive(Debug, Clone)]
pub struct SbsIndex {
    region: Region,
    points: Vec<Point>,
    cells: usize,
    cell_size: f64,
    /// CSR layout: members of cell c are `order[start[c]..start[c + 1]]`.
    start: Vec<u32>,
    order: Vec<u32>,
}

impl SbsIndex {
    pub fn new(points: &[Point], region: Region) -> Self {
        let cells = ((points.len() as f64 / 2.0).sqrt().floor() as usize).max(1);
        let cell_size = region.side / cells as f64;
        let cell_of = |p: &Point| {
            let cx = ((p.x / cell_size) as usize).min(cells - 1);
            let cy = ((p.y / cell_size) as usize).min(cells - 1);
            cy * cells + cx
        };
        let mut count = vec![0u32; cells * cells + 1];
        for p in points {
            count[cell_of(p) + 1] += 1;
        }
        for c in 1..count.len() {
            count[c] += count[c - 1];
        }
        let start = count.clone();
        let mut fill = count;
        let mut order = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        SbsIndex { region, points: points.to_vec(), cells, cell_size, start, order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn nearest(&self, p: Point) -> Option<usize> {
        let mut out = Vec::with_capacity(1);
        self.k_nearest_into(p, 1, &mut out);
        out.first().map(|&(i, _)| i)
    }

    /// The `k` nearest stations to `p` as `(index, distance²)`, ascending,
    /// ties broken by lower index. Returns fewer if the index is smaller than `k`.
    pub fn k_nearest_into(&self, p: Point, k: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let k = k.min(self.points.len());
        if k == 0 {
            return;
        }
        let n = self.cells as i64;
        let cx = ((p.x / self.cell_size) as i64).clamp(0, n - 1);
        let cy = ((p.y / self.cell_size) as i64).clamp(0, n - 1);
        let mut ring = 0i64;
        loop {
            if 2 * ring + 1 >= n {
                // The ring covers the whole grid; finish with a full scan.
                self.scan_all(p, k, out);
                return;
            }
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let (gx, gy) = (cx + dx, cy + dy);
                    let (gx, gy) = match self.region.boundary {
                        Boundary::Torus => (gx.rem_euclid(n), gy.rem_euclid(n)),
                        Boundary::Truncated => {
                            if gx < 0 || gy < 0 || gx >= n || gy >= n {
                                continue;
                            }
                            (gx, gy)
                        }
                    };
                    let c = (gy * n + gx) as usize;
                    for &i in &self.order[self.start[c] as usize..self.start[c + 1] as usize] {
                        let i = i as usize;
                        insert_best(out, k, (i, self.region.distance_sq(p, self.points[i])));
                    }
                }
            }
            // Every unvisited cell is at least `ring` cells away.
            let reach = ring as f64 * self.cell_size;
            if out.len() == k && out[k - 1].1 <= reach * reach {
                return;
            }
            ring += 1;
        }
    }

    fn scan_all(&self, p: Point, k: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        for (i, &q) in self.points.iter().enumerate() {
            insert_best(out, k, (i, self.region.distance_sq(p, q)));
        }
    }
}

fn closer(a: (usize, f64), b: (usize, f64)) -> bool {
    a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)
}

fn insert_best(best: &mut Vec<(usize, f64)>, k: usize, cand: (usize, f64)) {
    if best.len() == k && !closer(cand, best[k - 1]) {
        return;
    }
    let pos = best.partition_point(|&b| closer(b, cand));
    if best.len() == k {
        best.pop();
    }
    best.insert(pos, cand);
}

/// The `k` smallest distances from `point` to the stations, ascending.
pub fn ordered_sbs_distances(
    point: Point,
    sbs_positions: &[Point],
    region: &Region,
    k: usize,
) -> Result<Vec<f64>> {
    if k > sbs_positions.len() {
        return Err(Error::NotEnoughStations { requested: k, available: sbs_positions.len() });
    }
    let mut d: Vec<f64> = sbs_positions.iter().map(|&q| region.distance(point, q)).collect();
    d.sort_by(f64::total_cmp);
    d.truncate(k);
    Ok(d)
}

/// One sampled topology.
#[derive(Debug, Clone)]
pub struct NetworkDrop {
    pub region: Region,
    pub sbs: SbsIndex,
    pub users: Vec<Point>,
    pub pairing: Pairing,
    /// Per user, the `neighbors_per_user` nearest SBS indices in ascending distance.
    neighbors: Vec<u32>,
    neighbors_per_user: usize,
}

impl NetworkDrop {
    /// Samples SBSs and users as independent PPPs, pairs a δ share of the
    /// users and precomputes each user's `k_max` nearest stations.
    pub fn sample<R: Rng + ?Sized>(
        region: Region,
        sbs_density: f64,
        ue_density: f64,
        paired_fraction: f64,
        max_d2d_distance: f64,
        k_max: usize,
        rng: &mut R,
    ) -> Self {
        let sbs = sample_ppp(sbs_density, &region, rng);
        let mut users = sample_ppp(ue_density, &region, rng);
        let pairing = pair_users(&mut users, paired_fraction, max_d2d_distance, &region, rng);
        Self::from_parts(region, sbs, users, pairing, k_max)
    }

    pub fn from_parts(
        region: Region,
        sbs: Vec<Point>,
        users: Vec<Point>,
        pairing: Pairing,
        k_max: usize,
    ) -> Self {
        let sbs = SbsIndex::new(&sbs, region);
        let per_user = k_max.min(sbs.len());
        let mut neighbors = Vec::with_capacity(users.len() * per_user);
        let mut buf = Vec::with_capacity(per_user);
        for &u in &users {
            sbs.k_nearest_into(u, per_user, &mut buf);
            neighbors.extend(buf.iter().map(|&(i, _)| i as u32));
        }
        NetworkDrop { region, sbs, users, pairing, neighbors, neighbors_per_user: per_user }
    }

    /// Index of the SBS nearest to `user`.
    pub fn association(&self, user: usize) -> Option<usize> {
        self.neighbors(user).first().map(|&i| i as usize)
    }

    /// The precomputed nearest SBS indices of `user`, ascending by distance.
    pub fn neighbors(&self, user: usize) -> &[u32] {
        let k = self.neighbors_per_user;
        &self.neighbors[user * k..(user + 1) * k]
    }

    pub fn neighbors_per_user(&self) -> usize {
        self.neighbors_per_user
    }

    /// Writes `kind,x,y,pair_id` rows; `pair_id` is empty for SBSs and unpaired users.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["kind", "x", "y", "pair_id"])?;
        for p in self.sbs.points() {
            w.write_record(["sbs", &p.x.to_string(), &p.y.to_string(), ""])?;
        }
        for (i, p) in self.users.iter().enumerate() {
            let pair = self.pairing.peer[i].map(|j| (i.min(j) / 2).to_string()).unwrap_or_default();
            w.write_record(["user", &p.x.to_string(), &p.y.to_string(), &pair])?;
        }
        w.flush().map_err(|e| Error::io("<drop csv>", e))?;
        Ok(())
    }
}

/// Per-SBS user counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellLoads {
    /// Miss users, which each hold one backhaul share.
    pub backhaul: Vec<u32>,
    /// Miss and cluster users sharing the SBS's airtime.
    pub cell: Vec<u32>,
}

/// Attaches miss users to their nearest SBS and cluster users to the SBS
/// picked by `cluster_pick[u]` (a uniform in [0, 1)) among their `cluster_size`
/// nearest, then counts loads.
pub fn associate_and_load(
    drop: &NetworkDrop,
    categories: &[RequestCategory],
    cluster_size: usize,
    cluster_pick: &[f64],
) -> Result<CellLoads> {
    let n_sbs = drop.sbs.len();
    let mut loads = CellLoads { backhaul: vec![0; n_sbs], cell: vec![0; n_sbs] };
    if drop.users.is_empty() || n_sbs == 0 {
        return Ok(loads);
    }
    if cluster_size > drop.neighbors_per_user {
        return Err(Error::NotEnoughStations {
            requested: cluster_size,
            available: drop.neighbors_per_user,
        });
    }
    for (u, cat) in categories.iter().enumerate() {
        match cat {
            RequestCategory::Miss => {
                let s = drop.neighbors(u)[0] as usize;
                loads.backhaul[s] += 1;
                loads.cell[s] += 1;
            }
            RequestCategory::Cluster => {
                let slot = ((cluster_pick[u] * cluster_size as f64) as usize).min(cluster_size - 1);
                loads.cell[drop.neighbors(u)[slot] as usize] += 1;
            }
            RequestCategory::Local | RequestCategory::D2d => {}
        }
    }
    Ok(loads)
}
