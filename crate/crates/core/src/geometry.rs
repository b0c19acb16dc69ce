//! Hexagonal site layout, UAV placement and link distances.
//!
//! Sites sit on a triangular lattice with spacing `isd`. First-tier
//! neighbours are at bearings 0°, 60°, ..., 300°, so the central cell (the
//! Voronoi cell of site 0) has its flat edges at `x = ±isd/2` and its
//! vertices at radius `isd/√3`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest tier count accepted by [`build_hex_layout`].
pub const MAX_TIERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub x: f64,
    pub y: f64,
    pub height: f64,
}

impl Site {
    pub fn distance_2d(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// An immutable set of base-station sites.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    sites: Vec<Site>,
    isd: f64,
    tiers: Option<usize>,
}

impl NetworkLayout {
    /// Builds a layout from explicit site coordinates. The UAV is still
    /// placed in the hexagon of flat-to-flat width `isd` around the origin.
    ///
    /// Used for small toy networks that are not full hexagonal rings.
    pub fn from_sites(sites: Vec<Site>, isd: f64) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::config("layout.sites", "at least one site is required"));
        }
        if !(isd.is_finite() && isd > 0.0) {
            return Err(Error::config("layout.isd_m", format!("must be positive, got {isd}")));
        }
        if sites.iter().any(|s| !(s.x.is_finite() && s.y.is_finite() && s.height.is_finite())) {
            return Err(Error::config("layout.sites", "site coordinates must be finite"));
        }
        Ok(Self {
            sites,
            isd,
            tiers: None,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Number of base stations, `T`.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn isd(&self) -> f64 {
        self.isd
    }

    /// Tier count for lattice layouts, `None` for layouts built from explicit sites.
    pub fn tiers(&self) -> Option<usize> {
        self.tiers
    }

    /// Circumradius of the central cell.
    pub fn cell_radius(&self) -> f64 {
        self.isd / 3f64.sqrt()
    }

    /// Point-in-hexagon test for the central cell (boundary included).
    pub fn in_central_cell(&self, x: f64, y: f64) -> bool {
        let half = self.isd / 2.0;
        let (ax, ay) = (x.abs(), y.abs());
        ax <= half && 0.5 * ax + 0.5 * 3f64.sqrt() * ay <= half
    }

    pub fn central_cell_area(&self) -> f64 {
        0.5 * 3f64.sqrt() * self.isd * self.isd
    }
}

/// Number of sites in a hexagonal layout with `tiers` rings around the centre.
pub fn site_count(tiers: usize) -> usize {
    1 + 3 * tiers * (tiers + 1)
}

/// Builds the hexagonal layout: site 0 at the origin, then ring by ring,
/// each ring ordered by bearing in `[0, 2π)`.
pub fn build_hex_layout(isd: f64, tiers: usize, h_bs: f64) -> Result<NetworkLayout> {
    if !(isd.is_finite() && isd > 0.0) {
        return Err(Error::config("layout.isd_m", format!("must be positive, got {isd}")));
    }
    if tiers > MAX_TIERS {
        return Err(Error::config(
            "layout.tiers",
            format!("must be in 0..={MAX_TIERS}, got {tiers}"),
        ));
    }
    if !(h_bs.is_finite() && h_bs >= 0.0) {
        return Err(Error::config("layout.h_bs_m", format!("must be non-negative, got {h_bs}")));
    }

    let tiers_i = tiers as i64;
    let mut rings: Vec<Vec<(f64, Site)>> = vec![Vec::new(); tiers + 1];
    let (bx, by) = (0.5 * isd, 0.5 * 3f64.sqrt() * isd);
    for i in -tiers_i..=tiers_i {
        for j in -tiers_i..=tiers_i {
            let ring = i.abs().max(j.abs()).max((i + j).abs());
            if ring > tiers_i {
                continue;
            }
            let x = i as f64 * isd + j as f64 * bx;
            let y = j as f64 * by;
            let bearing = if ring == 0 { 0.0 } else { y.atan2(x).rem_euclid(2.0 * PI) };
            rings[ring as usize].push((
                bearing,
                Site {
                    x,
                    y,
                    height: h_bs,
                },
            ));
        }
    }

    let mut sites = Vec::with_capacity(site_count(tiers));
    for mut ring in rings {
        ring.sort_by(|a, b| a.0.total_cmp(&b.0));
        sites.extend(ring.into_iter().map(|(_, s)| s));
    }
    Ok(NetworkLayout {
        sites,
        isd,
        tiers: Some(tiers),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavPosition {
    pub x: f64,
    pub y: f64,
    /// Altitude above ground, metres.
    pub height: f64,
}

/// Draws a UAV position uniformly over the central cell by rejection from
/// the bounding rectangle (acceptance 3/4).
pub fn sample_uav_position<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    h_ut: f64,
    rng: &mut R,
) -> Result<UavPosition> {
    if !(h_ut.is_finite() && h_ut > 0.0) {
        return Err(Error::config("experiment.h_ut_m", format!("must be positive, got {h_ut}")));
    }
    let half_w = layout.isd / 2.0;
    let half_h = layout.cell_radius();
    loop {
        let x = rng.random_range(-half_w..=half_w);
        let y = rng.random_range(-half_h..=half_h);
        if layout.in_central_cell(x, y) {
            return Ok(UavPosition { x, y, height: h_ut });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDistance {
    pub d2d: f64,
    pub d3d: f64,
}

/// Horizontal and slant distances from the UAV to every site, in layout order.
pub fn link_distances(layout: &NetworkLayout, uav: &UavPosition) -> Vec<LinkDistance> {
    layout
        .sites
        .iter()
        .map(|s| {
            let d2d = s.distance_2d(uav.x, uav.y);
            LinkDistance {
                d2d,
                d3d: d2d.hypot(uav.height - s.height),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_tier_layout_has_19_sites() {
        let layout = build_hex_layout(500.0, 2, 25.0).unwrap();
        assert_eq!(layout.len(), 19);
        let d: Vec<f64> = layout.sites().iter().map(|s| s.x.hypot(s.y)).collect();
        assert_eq!(d[0], 0.0);
        assert_eq!(d.iter().filter(|&&v| close(v, 500.0, 1e-9)).count(), 6);
        for &v in &d[1..7] {
            assert!(close(v, 500.0, 1e-9));
        }
        for &v in &d[7..] {
            assert!(close(v, 500.0 * 3f64.sqrt(), 1e-9) || close(v, 1000.0, 1e-9), "{v}");
        }
        let nearest = d[1..].iter().cloned().fold(f64::INFINITY, f64::min);
        let farthest = d.iter().cloned().fold(0.0, f64::max);
        assert!(close(nearest, 500.0, 1e-9));
        assert!(close(farthest, 1000.0, 1e-9));
        assert!(layout.sites().iter().all(|s| s.height == 25.0));
    }

    #[test]
    fn site_counts_per_tier() {
        for tiers in 0..=MAX_TIERS {
            let layout = build_hex_layout(500.0, tiers, 25.0).unwrap();
            let expected = 1 + (1..=tiers).map(|t| 6 * t).sum::<usize>();
            assert_eq!(layout.len(), expected);
            assert_eq!(site_count(tiers), expected);
        }
        let single = build_hex_layout(500.0, 0, 25.0).unwrap();
        assert_eq!(single.sites()[0], Site { x: 0.0, y: 0.0, height: 25.0 });
    }

    #[test]
    fn ordering_is_by_ring_then_bearing() {
        let layout = build_hex_layout(500.0, 2, 25.0).unwrap();
        let first = &layout.sites()[1];
        assert!(close(first.x, 500.0, 1e-9) && close(first.y, 0.0, 1e-9));
        let bearings: Vec<f64> = layout.sites()[7..]
            .iter()
            .map(|s| s.y.atan2(s.x).rem_euclid(2.0 * PI))
            .collect();
        assert!(bearings.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(layout, build_hex_layout(500.0, 2, 25.0).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_hex_layout(0.0, 2, 25.0), Err(Error::Config { .. })));
        assert!(matches!(build_hex_layout(-1.0, 2, 25.0), Err(Error::Config { .. })));
        assert!(matches!(build_hex_layout(500.0, 3, 25.0), Err(Error::Config { .. })));
        let layout = build_hex_layout(500.0, 2, 25.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_uav_position(&layout, 0.0, &mut rng).is_err());
    }

    #[test]
    fn samples_stay_inside_cell_and_are_reproducible() {
        let layout = build_hex_layout(500.0, 2, 25.0).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = sample_uav_position(&layout, 30.0, &mut a).unwrap();
            assert!(layout.in_central_cell(p.x, p.y));
            assert_eq!(p, sample_uav_position(&layout, 30.0, &mut b).unwrap());
        }
    }

    #[test]
    fn uniform_over_hexagon() {
        let layout = build_hex_layout(500.0, 2, 25.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        let mut inside_circle = 0usize;
        let mut sectors = [0usize; 6];
        for _ in 0..n {
            let p = sample_uav_position(&layout, 60.0, &mut rng).unwrap();
            sx += p.x;
            sy += p.y;
            if p.x.hypot(p.y) <= 250.0 {
                inside_circle += 1;
            }
            let k = (p.y.atan2(p.x).rem_euclid(2.0 * PI) / (PI / 3.0)) as usize;
            sectors[k.min(5)] += 1;
        }
        assert!((sx / n as f64).abs() < 5.0);
        assert!((sy / n as f64).abs() < 5.0);

        // π·250² over the hexagon area reduces to π√3/6.
        let frac = inside_circle as f64 / n as f64;
        assert!(close(frac, PI * 3f64.sqrt() / 6.0, 0.005), "{frac}");

        // Six equal-area sectors; 1% critical value of chi-square with 5 dof.
        let expected = n as f64 / 6.0;
        let chi2: f64 = sectors
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 15.086, "chi2 = {chi2}");
    }

    #[test]
    fn distances_examples() {
        let layout = build_hex_layout(500.0, 2, 25.0).unwrap();
        let above = UavPosition { x: 0.0, y: 0.0, height: 30.0 };
        let d = link_distances(&layout, &above);
        assert_eq!(d.len(), 19);
        assert_eq!(d[0].d2d, 0.0);
        assert!(close(d[0].d3d, 5.0, 1e-12));

        let level = UavPosition { x: 0.0, y: 0.0, height: 25.0 };
        assert!(link_distances(&layout, &level).iter().all(|l| l.d2d == l.d3d));

        let high = UavPosition { x: 0.0, y: 0.0, height: 120.0 };
        let d = link_distances(&layout, &high);
        assert!(close(d[1].d2d, 500.0, 1e-9));
        assert!(close(d[1].d3d, 508.94, 0.005));
    }
}
