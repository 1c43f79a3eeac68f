use crate::error::{Result, SimError};
use crate::geometry::{BoxGeometry, Rect};

use super::cells::{cells_along, coarsen, CellList};
use super::{
    coupling_pairs, Arithmetic, Direction, FloatState, ForceField, Integrator,
    IntegratorMode,
};

/// Floating-point velocity Verlet with specular walls at `0` and the box
/// edges. Reference and diagnostic use only: round-off makes it reversible
/// only approximately.
///
/// `fixed_point_scale` is carried only so that [`super::init_state`] can put
/// particles on the same lattice the fixed integrator would use.
#[derive(Debug, Clone)]
pub struct FloatIntegrator {
    geometry: BoxGeometry,
    field: ForceField,
    mode: IntegratorMode,
    cells: [usize; 2],
}

impl FloatIntegrator {
    pub fn new(geometry: BoxGeometry, field: ForceField, dt: f64, fixed_point_scale: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::Geometry(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            geometry,
            field,
            mode: IntegratorMode {
                arithmetic: Arithmetic::FloatReference,
                dt,
                fixed_point_scale,
            },
            cells: [
                cells_along(geometry.width(), field.cutoff),
                cells_along(geometry.height(), field.cutoff),
            ],
        })
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.geometry, self.field, dt, self.mode.fixed_point_scale)
    }

    fn lens(&self) -> [f64; 2] {
        [self.geometry.width(), self.geometry.height()]
    }

    fn for_each_contact(&self, pos: &[[f64; 2]], mut f: impl FnMut(usize, usize, f64, f64, f64)) {
        let [nx, ny] = coarsen(self.cells, pos.len());
        let [w, h] = self.lens();
        let list = CellList::build(pos.len(), nx, ny, |i| (bin(pos[i][0], w, nx), bin(pos[i][1], h, ny)));
        let c2 = self.field.cutoff * self.field.cutoff;
        list.for_each_pair(|i, j| {
            let dx = pos[i][0] - pos[j][0];
            let dy = pos[i][1] - pos[j][1];
            let r2 = dx * dx + dy * dy;
            if r2 < c2 {
                f(i, j, dx, dy, r2);
            }
        });
    }

    /// Pair forces at the given positions.
    pub fn forces(&self, pos: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut force = vec![[0.0; 2]; pos.len()];
        if !self.field.is_interacting() {
            return force;
        }
        let c2 = self.field.cutoff * self.field.cutoff;
        let k = 4.0 * self.field.repulsion_strength / c2;
        self.for_each_contact(pos, |i, j, dx, dy, r2| {
            let w = k * (1.0 - r2 / c2);
            force[i][0] += w * dx;
            force[i][1] += w * dy;
            force[j][0] -= w * dx;
            force[j][1] -= w * dy;
        });
        force
    }
}

fn bin(x: f64, extent: f64, cells: usize) -> usize {
    let c = (x / extent * cells as f64).floor();
    if c <= 0.0 {
        0
    } else {
        (c as usize).min(cells - 1)
    }
}

fn reflect(x: f64, extent: f64) -> (f64, bool) {
    if x < 0.0 {
        (-x, true)
    } else if x > extent {
        (2.0 * extent - x, true)
    } else {
        (x, false)
    }
}

impl Integrator for FloatIntegrator {
    type Scalar = f64;

    fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    fn field(&self) -> &ForceField {
        &self.field
    }

    fn mode(&self) -> IntegratorMode {
        self.mode
    }

    fn encode(&self, position: [f64; 2], velocity: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
        let lens = self.lens();
        for k in 0..2 {
            if !(position[k] >= 0.0 && position[k] <= lens[k]) {
                return Err(SimError::Geometry(format!(
                    "position {:?} lies outside the box",
                    position
                )));
            }
            if !velocity[k].is_finite() || (velocity[k] * self.mode.dt).abs() >= lens[k] {
                return Err(SimError::Overflow {
                    context: "encode: velocity exceeds one box extent per step",
                });
            }
        }
        Ok((position, velocity))
    }

    fn position(&self, p: &[f64; 2]) -> [f64; 2] {
        *p
    }

    fn velocity(&self, v: &[f64; 2]) -> [f64; 2] {
        *v
    }

    fn add_velocity(&self, v: &mut [f64; 2], dv: [f64; 2]) -> Result<()> {
        v[0] += dv[0];
        v[1] += dv[1];
        Ok(())
    }

    fn cell_of(&self, p: &[f64; 2], cells_x: usize, cells_y: usize) -> (usize, usize) {
        let [w, h] = self.lens();
        (bin(p[0], w, cells_x), bin(p[1], h, cells_y))
    }

    fn in_region(&self, p: &[f64; 2], region: &Rect) -> bool {
        let [w, h] = self.lens();
        let inside = |x: f64, lo: f64, hi: f64, edge: f64| x >= lo && (x < hi || (hi >= edge && x <= edge));
        inside(p[0], region.x0, region.x1, w) && inside(p[1], region.y0, region.y1, h)
    }

    fn half_kick(&self, state: &mut FloatState, dir: Direction) -> Result<()> {
        if !self.field.is_interacting() {
            return Ok(());
        }
        let h = match dir {
            Direction::Forward => 0.5 * self.mode.dt,
            Direction::Backward => -0.5 * self.mode.dt,
        };
        let force = self.forces(state.positions());
        for (v, f) in state.velocities_mut().iter_mut().zip(force) {
            v[0] += h * f[0];
            v[1] += h * f[1];
        }
        Ok(())
    }

    fn drift(&self, state: &mut FloatState, dir: Direction) -> Result<()> {
        let lens = self.lens();
        let dt = match dir {
            Direction::Forward => self.mode.dt,
            Direction::Backward => -self.mode.dt,
        };
        let (pos, vel) = state.parts_mut();
        for (p, v) in pos.iter_mut().zip(vel.iter_mut()) {
            for k in 0..2 {
                if (v[k] * dt).abs() >= lens[k] {
                    return Err(SimError::Overflow {
                        context: "drift: displacement per step exceeds the box extent",
                    });
                }
                let (x, hit) = reflect(p[k] + v[k] * dt, lens[k]);
                p[k] = x;
                if hit {
                    v[k] = -v[k];
                }
            }
        }
        Ok(())
    }

    fn coupling_half_kick(
        &self,
        a: &mut FloatState,
        b: &mut FloatState,
        lambda: f64,
        dir: Direction,
    ) -> Result<()> {
        if lambda == 0.0 {
            return Ok(());
        }
        let h = match dir {
            Direction::Forward => 0.5 * self.mode.dt,
            Direction::Backward => -0.5 * self.mode.dt,
        };
        let mut da = vec![[0.0; 2]; a.len()];
        let mut db = vec![[0.0; 2]; b.len()];
        for (ia, ib) in coupling_pairs(a.len(), b.len()) {
            let (pa, pb) = (a.positions()[ia], b.positions()[ib]);
            for k in 0..2 {
                let j = h * lambda * (pb[k] - pa[k]);
                da[ia][k] += j;
                db[ib][k] -= j;
            }
        }
        for (v, d) in a.velocities_mut().iter_mut().zip(da) {
            v[0] += d[0];
            v[1] += d[1];
        }
        for (v, d) in b.velocities_mut().iter_mut().zip(db) {
            v[0] += d[0];
            v[1] += d[1];
        }
        Ok(())
    }

    fn contacts(&self, state: &FloatState) -> Vec<(u32, u32)> {
        if !self.field.is_interacting() {
            return Vec::new();
        }
        let mut out = Vec::new();
        self.for_each_contact(state.positions(), |i, j, _, _, _| out.push((i as u32, j as u32)));
        out.sort_unstable();
        out
    }
}
