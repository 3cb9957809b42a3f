//! Equal-area partitions of the sphere (polar caps plus latitudinal collars
//! cut into equal sectors) and of the circle (equal arcs).
//!
//! Cells are colatitude/longitude rectangles with half-open intervals
//! `[lo, hi)`; the last colatitude zone is closed at `π` and longitudes live
//! in `[0, 2π)`. Circle cells sit on the equator with a degenerate
//! colatitude interval `[π/2, π/2]`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Result};
use crate::kernels::Domain;
use crate::{angle_between, direction, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub colatitude: (f64, f64),
    pub longitude: (f64, f64),
}

impl Cell {
    /// Exact area of the rectangle on the sphere, or arc length on the circle.
    pub fn measure(&self, domain: Domain) -> f64 {
        let dphi = self.longitude.1 - self.longitude.0;
        match domain {
            Domain::Circle => dphi,
            Domain::Sphere => {
                let (lo, hi) = self.colatitude;
                // cos lo - cos hi without cancellation
                2.0 * (0.5 * (hi + lo)).sin() * (0.5 * (hi - lo)).sin() * dphi
            }
        }
    }

    /// Midpoint of both intervals; polar caps use the pole.
    pub fn center(&self, domain: Domain) -> Direction {
        let (lo, hi) = self.colatitude;
        let full = self.longitude.1 - self.longitude.0 >= TAU;
        let lon = 0.5 * (self.longitude.0 + self.longitude.1);
        match domain {
            Domain::Circle => direction(FRAC_PI_2, lon),
            Domain::Sphere if full && lo == 0.0 => [0.0, 0.0, 1.0],
            Domain::Sphere if full && hi == PI => [0.0, 0.0, -1.0],
            Domain::Sphere => direction(0.5 * (lo + hi), lon),
        }
    }
}

/// One latitude band of a sphere partition; its cells are consecutive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub colatitude: (f64, f64),
    pub first_cell: usize,
    pub cell_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualAreaPartition {
    domain: Domain,
    cells: Vec<Cell>,
    centers: Vec<Direction>,
    zones: Vec<Zone>,
    target_area: f64,
}

/// Colatitude in `[0, π]` and longitude in `[0, 2π)` of a direction.
pub fn spherical_coordinates(u: &Direction) -> (f64, f64) {
    let rho = u[0].hypot(u[1]);
    let colat = rho.atan2(u[2]);
    let mut lon = u[1].atan2(u[0]);
    if lon < 0.0 {
        lon += TAU;
        if lon >= TAU {
            lon = 0.0;
        }
    }
    (colat, lon)
}

/// Splits `total` into integers proportional to `ideal`, largest remainder
/// first, ties to the lower index.
fn largest_remainder(ideal: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = ideal.iter().map(|y| y.floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ideal.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn sectors(colatitude: (f64, f64), count: usize, cells: &mut Vec<Cell>) {
    let width = TAU / count as f64;
    for j in 0..count {
        let hi = if j + 1 == count { TAU } else { (j + 1) as f64 * width };
        cells.push(Cell {
            colatitude,
            longitude: (j as f64 * width, hi),
        });
    }
}

/// Equal-area partition of the sphere into `n` cells.
pub fn partition_sphere(n: usize) -> Result<EqualAreaPartition> {
    if n == 0 {
        return domain_err("partition needs at least one cell");
    }
    let nf = n as f64;
    let mut counts = Vec::new();
    if n == 1 {
        counts.push(1);
    } else {
        let cap = (1.0 - 2.0 / nf).acos();
        counts.push(1);
        if n > 2 {
            let ideal_angle = (4.0 * PI / nf).sqrt();
            let collars = (((PI - 2.0 * cap) / ideal_angle).round() as usize).max(1);
            let fitted = (PI - 2.0 * cap) / collars as f64;
            let ideal: Vec<f64> = (0..collars)
                .map(|i| {
                    let lo = cap + i as f64 * fitted;
                    let hi = lo + fitted;
                    0.5 * nf * (lo.cos() - hi.cos())
                })
                .collect();
            let collar_counts = largest_remainder(&ideal, n - 2);
            counts.extend(collar_counts.into_iter().filter(|&c| c > 0));
        }
        counts.push(1);
    }
    // boundary colatitudes from cumulative counts: cap area 2π(1 - cos θ)
    let mut zones = Vec::with_capacity(counts.len());
    let mut cells = Vec::with_capacity(n);
    let mut cumulative = 0usize;
    let mut lo = 0.0;
    for (z, &m) in counts.iter().enumerate() {
        cumulative += m;
        let hi = if z + 1 == counts.len() {
            PI
        } else {
            // 1 - cos θ = 2k/N, via θ = 2 asin √(k/N) to keep precision near the pole
            2.0 * (cumulative as f64 / nf).sqrt().asin()
        };
        zones.push(Zone {
            colatitude: (lo, hi),
            first_cell: cells.len(),
            cell_count: m,
        });
        sectors((lo, hi), m, &mut cells);
        lo = hi;
    }
    debug_assert_eq!(cells.len(), n);
    let centers = cells.iter().map(|c| c.center(Domain::Sphere)).collect();
    Ok(EqualAreaPartition {
        domain: Domain::Sphere,
        cells,
        centers,
        zones,
        target_area: 4.0 * PI / nf,
    })
}

/// `n` equal arcs `[2πk/n, 2π(k+1)/n)` of the equator.
pub fn partition_circle(n: usize) -> Result<EqualAreaPartition> {
    if n == 0 {
        return domain_err("partition needs at least one cell");
    }
    let mut cells = Vec::with_capacity(n);
    sectors((FRAC_PI_2, FRAC_PI_2), n, &mut cells);
    let centers = cells.iter().map(|c| c.center(Domain::Circle)).collect();
    Ok(EqualAreaPartition {
        domain: Domain::Circle,
        cells,
        centers,
        zones: vec![Zone {
            colatitude: (FRAC_PI_2, FRAC_PI_2),
            first_cell: 0,
            cell_count: n,
        }],
        target_area: TAU / n as f64,
    })
}

/// Representative directions, one per cell.
pub fn region_centers(partition: &EqualAreaPartition) -> &[Direction] {
    &partition.centers
}

impl EqualAreaPartition {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        match domain {
            Domain::Sphere => partition_sphere(n),
            Domain::Circle => partition_circle(n),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn centers(&self) -> &[Direction] {
        &self.centers
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn target_area(&self) -> f64 {
        self.target_area
    }

    pub fn areas(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.measure(self.domain)).collect()
    }

    /// Whether the cell holds the point, by the half-open convention.
    pub fn contains(&self, index: usize, u: &Direction) -> bool {
        let cell = &self.cells[index];
        let (colat, lon) = spherical_coordinates(u);
        let in_lon = cell.longitude.0 <= lon && lon < cell.longitude.1;
        match self.domain {
            Domain::Circle => in_lon,
            Domain::Sphere => {
                let (lo, hi) = cell.colatitude;
                in_lon && lo <= colat && (colat < hi || (hi == PI && colat == PI))
            }
        }
    }

    /// Index of the cell holding `u`. On the circle only the longitude counts.
    pub fn locate(&self, u: &Direction) -> usize {
        let (colat, lon) = spherical_coordinates(u);
        let zone = match self.domain {
            Domain::Circle => &self.zones[0],
            Domain::Sphere => {
                let z = self.zones.partition_point(|z| z.colatitude.1 <= colat);
                &self.zones[z.min(self.zones.len() - 1)]
            }
        };
        let m = zone.cell_count;
        let mut j = ((lon / TAU * m as f64) as usize).min(m - 1);
        let cells = &self.cells[zone.first_cell..zone.first_cell + m];
        // repair rounding of the sector guess against the stored bounds
        while j > 0 && lon < cells[j].longitude.0 {
            j -= 1;
        }
        while j + 1 < m && lon >= cells[j].longitude.1 {
            j += 1;
        }
        zone.first_cell + j
    }

    /// Largest great-circle distance between two points of one cell.
    pub fn max_cell_diameter(&self) -> f64 {
        match self.domain {
            Domain::Circle => self.target_area.min(PI),
            Domain::Sphere => self
                .zones
                .iter()
                .map(|z| {
                    let (lo, hi) = z.colatitude;
                    if z.cell_count == 1 && (lo == 0.0 || hi == PI) {
                        (2.0 * (hi - lo)).min(PI)
                    } else {
                        rectangle_diameter(lo, hi, TAU / z.cell_count as f64)
                    }
                })
                .fold(0.0, f64::max),
        }
    }
}

/// Diameter of `[lo, hi] × [0, width]` by dense sampling of its boundary.
fn rectangle_diameter(lo: f64, hi: f64, width: f64) -> f64 {
    const PER_EDGE: usize = 24;
    let mut pts = Vec::with_capacity(4 * PER_EDGE);
    for i in 0..PER_EDGE {
        let s = i as f64 / (PER_EDGE - 1) as f64;
        let colat = lo + s * (hi - lo);
        let lon = s * width;
        pts.push(direction(lo, lon));
        pts.push(direction(hi, lon));
        pts.push(direction(colat, 0.0));
        pts.push(direction(colat, width));
    }
    let mut best: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max(angle_between(a, b));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    fn check_areas(p: &EqualAreaPartition) {
        let target = p.target_area();
        for a in p.areas() {
            assert!((a - target).abs() < 1e-9 * target, "{a} vs {target}");
        }
    }

    #[test]
    fn trivial_sphere_partitions() {
        let one = partition_sphere(1).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one.areas()[0] - 4.0 * PI).abs() < 1e-12);
        assert_eq!(one.centers()[0], [0.0, 0.0, 1.0]);
        let two = partition_sphere(2).unwrap();
        assert_eq!(two.len(), 2);
        assert!((two.cells()[0].colatitude.1 - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(two.centers()[0], [0.0, 0.0, 1.0]);
        assert_eq!(two.centers()[1], [0.0, 0.0, -1.0]);
        check_areas(&two);
        assert!(partition_sphere(0).is_err());
    }

    #[test]
    fn equal_areas_and_counts() {
        for n in (1..400).chain([1000, 4321, 100_000]) {
            let p = partition_sphere(n).unwrap();
            assert_eq!(p.len(), n);
            check_areas(&p);
            let total: f64 = p.areas().iter().sum();
            assert!((total - 4.0 * PI).abs() < 1e-9 * 4.0 * PI);
            assert!(p.zones().iter().all(|z| z.cell_count > 0));
        }
    }

    #[test]
    fn centers_inside_cells() {
        for n in [3, 10, 100, 1000] {
            let p = partition_sphere(n).unwrap();
            for (i, c) in p.centers().iter().enumerate() {
                assert!(p.contains(i, c), "n={n} cell {i}");
                assert_eq!(p.locate(c), i);
            }
        }
    }

    #[test]
    fn midpoint_center() {
        let cell = Cell {
            colatitude: (PI / 3.0, 2.0 * PI / 3.0),
            longitude: (0.0, FRAC_PI_2),
        };
        let c = cell.center(Domain::Sphere);
        let want = direction(FRAC_PI_2, PI / 4.0);
        assert!(angle_between(&c, &want) < 1e-15);
    }

    #[test]
    fn random_points_hit_exactly_one_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 10, 100] {
            let p = partition_sphere(n).unwrap();
            for _ in 0..20_000 {
                let u = random_direction(&mut rng);
                let hits: Vec<usize> = (0..n).filter(|&i| p.contains(i, &u)).collect();
                assert_eq!(hits.len(), 1);
                assert_eq!(hits[0], p.locate(&u));
            }
        }
    }

    #[test]
    fn boundary_points_resolve_uniquely() {
        let p = partition_sphere(50).unwrap();
        for (i, cell) in p.cells().iter().enumerate() {
            let corner = direction(cell.colatitude.0, cell.longitude.0);
            let hits = (0..p.len()).filter(|&k| p.contains(k, &corner)).count();
            assert_eq!(hits, 1, "corner of cell {i}");
        }
        let south = [0.0, 0.0, -1.0];
        assert_eq!(p.locate(&south), p.len() - 1);
        assert!(p.contains(p.len() - 1, &south));
    }

    #[test]
    fn diameter_bound() {
        for n in [4, 10, 100, 1000, 10_000] {
            let d = partition_sphere(n).unwrap().max_cell_diameter();
            assert!(d <= 7.0 / (n as f64).sqrt(), "n={n}: {d}");
        }
    }

    #[test]
    fn circle_partition() {
        let p = partition_circle(4).unwrap();
        for (k, c) in p.centers().iter().enumerate() {
            let want = direction(FRAC_PI_2, PI / 4.0 + k as f64 * FRAC_PI_2);
            assert!(angle_between(c, &want) < 1e-15);
            assert!((p.areas()[k] - FRAC_PI_2).abs() < 1e-15);
        }
        assert_eq!(p.locate(&[1.0, 0.0, 0.0]), 0);
        assert_eq!(p.locate(&[0.0, -1.0, 0.0]), 3);
        let one = partition_circle(1).unwrap();
        assert!((one.areas()[0] - TAU).abs() < 1e-15);
        assert!((partition_circle(100_000).unwrap().max_cell_diameter() - TAU * 1e-5).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn sphere_area_invariant(n in 1usize..5000) {
            let p = partition_sphere(n).unwrap();
            let target = p.target_area();
            for a in p.areas() {
                prop_assert!((a - target).abs() < 1e-9 * target);
            }
        }

        #[test]
        fn locate_agrees_with_contains(n in 1usize..300, seed in 0u64..1000) {
            let p = partition_sphere(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_direction(&mut rng);
            let i = p.locate(&u);
            prop_assert!(p.contains(i, &u));
        }
    }
}
