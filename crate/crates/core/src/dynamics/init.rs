use std::collections::HashMap;

use rand::Rng;

use crate::error::{Result, SimError};
use crate::geometry::Rect;
use crate::rng::{self, Stream};

use super::{Integrator, ParticleState, MEAN_SPEED};

/// Consecutive rejected draws tolerated for a single particle.
const MAX_ATTEMPTS: usize = 20_000;

/// Upper bound on the number of disks of radius `radius` whose centres fit
/// in `region` without overlap: hexagonal density `π/√12` over the region
/// dilated by `radius`.
pub fn packing_limit(region: &Rect, radius: f64) -> usize {
    if radius <= 0.0 {
        return usize::MAX;
    }
    let dilated = (region.width() + 2.0 * radius) * (region.height() + 2.0 * radius);
    (dilated / (2.0 * 3f64.sqrt() * radius * radius)).floor() as usize
}

/// Places `n` non-overlapping disks uniformly in the initial region and gives
/// each speed [`MEAN_SPEED`] in an isotropic random direction.
///
/// Placement and velocities draw from separate streams of `seed`. Positions
/// are quantised before the overlap test, so both integrators start from the
/// same phase point for a given seed.
pub fn init_state<I: Integrator>(integ: &I, n: usize, seed: u64) -> Result<ParticleState<I::Scalar>> {
    let region = integ.geometry().initial_region();
    let radius = integ.field().particle_radius;
    let limit = packing_limit(&region, radius);
    if n > limit {
        return Err(SimError::Packing {
            requested: n,
            radius,
            limit,
            reason: "exceeds the hexagonal packing bound",
        });
    }

    let scale = integ.mode().fixed_point_scale;
    let mut place = rng::stream(seed, Stream::Placement);
    let mut orient = rng::stream(seed, Stream::Velocities);
    let min_d2 = 4.0 * radius * radius;
    let cell = 2.0 * radius;
    let key = |p: [f64; 2]| -> (i64, i64) {
        if cell > 0.0 {
            ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
        } else {
            (0, 0)
        }
    };
    let mut grid: HashMap<(i64, i64), Vec<[f64; 2]>> = HashMap::new();
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);

    for _ in 0..n {
        let mut attempts = 0;
        let (p, v) = loop {
            if attempts == MAX_ATTEMPTS {
                return Err(SimError::Packing {
                    requested: n,
                    radius,
                    limit,
                    reason: "rejection sampling exhausted its attempt budget",
                });
            }
            attempts += 1;
            let x = lattice(region.x0 + place.gen::<f64>() * region.width(), scale);
            let y = lattice(region.y0 + place.gen::<f64>() * region.height(), scale);
            let (p, v) = integ.encode([x, y], [0.0, 0.0])?;
            let phys = integ.position(&p);
            if !integ.in_region(&p, &region) {
                continue;
            }
            if cell > 0.0 {
                let (kx, ky) = key(phys);
                let clash = (-1..=1).any(|ox| {
                    (-1..=1).any(|oy| {
                        grid.get(&(kx + ox, ky + oy)).is_some_and(|pts| {
                            pts.iter().any(|q| {
                                let (dx, dy) = (q[0] - phys[0], q[1] - phys[1]);
                                dx * dx + dy * dy < min_d2
                            })
                        })
                    })
                });
                if clash {
                    continue;
                }
                grid.entry((kx, ky)).or_default().push(phys);
            }
            break (p, v);
        };
        let dir = rng::unit_vector(&mut orient);
        let mut v = v;
        integ.add_velocity(&mut v, [MEAN_SPEED * dir[0], MEAN_SPEED * dir[1]])?;
        positions.push(p);
        velocities.push(v);
    }
    ParticleState::from_parts(positions, velocities)
}

fn lattice(x: f64, scale: u64) -> f64 {
    if scale == 0 {
        x
    } else {
        (x * scale as f64).round_ties_even() / scale as f64
    }
}
