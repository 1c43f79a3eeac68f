use crate::error::{Result, SimError};
use crate::geometry::{BoxGeometry, Rect};

use super::cells::{cells_along, coarsen, CellList};
use super::{
    coupling_pairs, Arithmetic, Direction, FixedState, ForceField, Integrator,
    IntegratorMode,
};

/// Largest box extent, in quanta, accepted along either axis.
const MAX_EXTENT: f64 = (1u64 << 60) as f64;

/// Bit-reversible integer integrator.
///
/// A position is an integer `X` with `x = X / scale`; the box interior is
/// `0 ..= M − 1` with `M = width · scale`, and the walls sit at `−½` and
/// `M − ½` so that the mirror map `X ↦ −1 − X` (resp. `2M − 1 − X`) is a
/// bijection on integers. A velocity is stored as the displacement per step,
/// `V = v · dt · scale`, so the drift is a plain integer addition.
///
/// Each pair impulse is computed once per half-kick from the integer
/// separation, rounded half-to-even, and added to one particle and
/// subtracted from the other, so momentum exchange in a pair is exact.
#[derive(Debug, Clone)]
pub struct FixedIntegrator {
    geometry: BoxGeometry,
    field: ForceField,
    mode: IntegratorMode,
    scale: f64,
    extent: [i64; 2],
    cutoff_q: i64,
    cutoff_q2: i128,
    kick_coeff: f64,
    cells: [usize; 2],
}

impl FixedIntegrator {
    pub fn new(geometry: BoxGeometry, field: ForceField, dt: f64, fixed_point_scale: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::Geometry(format!("dt must be positive, got {dt}")));
        }
        if fixed_point_scale == 0 {
            return Err(SimError::Geometry("fixed_point_scale must be >= 1".into()));
        }
        let scale = fixed_point_scale as f64;
        let mut extent = [0i64; 2];
        for (e, len) in extent.iter_mut().zip([geometry.width(), geometry.height()]) {
            let q = len * scale;
            if q.fract() != 0.0 || !(2.0..=MAX_EXTENT).contains(&q) {
                return Err(SimError::Geometry(format!(
                    "box side {len} is not a whole number of quanta below 2^60 at scale {fixed_point_scale}"
                )));
            }
            *e = q as i64;
        }
        let cutoff_q = (field.cutoff * scale).round_ties_even() as i64;
        let sigma = cutoff_q as f64 / scale;
        Ok(Self {
            geometry,
            field,
            mode: IntegratorMode {
                arithmetic: Arithmetic::FixedReversible,
                dt,
                fixed_point_scale,
            },
            scale,
            extent,
            cutoff_q,
            cutoff_q2: cutoff_q as i128 * cutoff_q as i128,
            kick_coeff: 2.0 * field.repulsion_strength * dt * dt / (sigma * sigma),
            cells: [
                cells_along(geometry.width(), field.cutoff),
                cells_along(geometry.height(), field.cutoff),
            ],
        })
    }

    /// Box extent in quanta along x and y.
    pub fn extent(&self) -> [i64; 2] {
        self.extent
    }

    fn cell_list(&self, pos: &[[i64; 2]]) -> CellList {
        let [nx, ny] = coarsen(self.cells, pos.len());
        let [mx, my] = self.extent;
        CellList::build(pos.len(), nx, ny, |i| {
            let p = pos[i];
            (bin(p[0], mx, nx), bin(p[1], my, ny))
        })
    }

    fn for_each_contact(&self, pos: &[[i64; 2]], mut f: impl FnMut(usize, usize, i64, i64, i128)) {
        self.cell_list(pos).for_each_pair(|i, j| {
            let dx = pos[i][0] - pos[j][0];
            let dy = pos[i][1] - pos[j][1];
            if dx.abs() >= self.cutoff_q || dy.abs() >= self.cutoff_q {
                return;
            }
            let r2 = dx as i128 * dx as i128 + dy as i128 * dy as i128;
            if r2 < self.cutoff_q2 {
                f(i, j, dx, dy, r2);
            }
        });
    }

    fn impulses(&self, pos: &[[i64; 2]]) -> Vec<[i64; 2]> {
        let mut imp = vec![[0i64; 2]; pos.len()];
        let c2 = self.cutoff_q2 as f64;
        self.for_each_contact(pos, |i, j, dx, dy, r2| {
            let w = self.kick_coeff * (1.0 - r2 as f64 / c2);
            let jx = (w * dx as f64).round_ties_even() as i64;
            let jy = (w * dy as f64).round_ties_even() as i64;
            imp[i][0] += jx;
            imp[i][1] += jy;
            imp[j][0] -= jx;
            imp[j][1] -= jy;
        });
        imp
    }

    fn check_speed(&self, v: &[i64; 2]) -> Result<()> {
        if v[0].abs() >= self.extent[0] || v[1].abs() >= self.extent[1] {
            return Err(SimError::Overflow {
                context: "drift: displacement per step exceeds the box extent",
            });
        }
        Ok(())
    }
}

fn bin(x: i64, extent: i64, cells: usize) -> usize {
    ((x as i128 * cells as i128 / extent as i128) as usize).min(cells - 1)
}

/// Adds `v` to `x` and mirrors at the walls `−½` and `extent − ½`.
fn reflect(x: i64, v: i64, extent: i64) -> Result<(i64, i64)> {
    let y = x.checked_add(v).ok_or(SimError::Overflow { context: "drift" })?;
    Ok(if y < 0 {
        (-1 - y, -v)
    } else if y >= extent {
        (2 * extent - 1 - y, -v)
    } else {
        (y, v)
    })
}

fn add_signed(v: &mut [i64; 2], d: [i64; 2], dir: Direction, context: &'static str) -> Result<()> {
    for k in 0..2 {
        let r = match dir {
            Direction::Forward => v[k].checked_add(d[k]),
            Direction::Backward => v[k].checked_sub(d[k]),
        };
        v[k] = r.ok_or(SimError::Overflow { context })?;
    }
    Ok(())
}

impl Integrator for FixedIntegrator {
    type Scalar = i64;

    fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    fn field(&self) -> &ForceField {
        &self.field
    }

    fn mode(&self) -> IntegratorMode {
        self.mode
    }

    fn encode(&self, position: [f64; 2], velocity: [f64; 2]) -> Result<([i64; 2], [i64; 2])> {
        let lens = [self.geometry.width(), self.geometry.height()];
        let mut p = [0i64; 2];
        let mut v = [0i64; 2];
        for k in 0..2 {
            if !(position[k] >= 0.0 && position[k] <= lens[k]) {
                return Err(SimError::Geometry(format!(
                    "position {:?} lies outside the box",
                    position
                )));
            }
            p[k] = ((position[k] * self.scale).round_ties_even() as i64).min(self.extent[k] - 1);
            let q = (velocity[k] * self.scale * self.mode.dt).round_ties_even();
            if !q.is_finite() || q.abs() >= self.extent[k] as f64 {
                return Err(SimError::Overflow {
                    context: "encode: velocity exceeds one box extent per step",
                });
            }
            v[k] = q as i64;
        }
        Ok((p, v))
    }

    fn position(&self, p: &[i64; 2]) -> [f64; 2] {
        [p[0] as f64 / self.scale, p[1] as f64 / self.scale]
    }

    fn velocity(&self, v: &[i64; 2]) -> [f64; 2] {
        let u = self.scale * self.mode.dt;
        [v[0] as f64 / u, v[1] as f64 / u]
    }

    fn add_velocity(&self, v: &mut [i64; 2], dv: [f64; 2]) -> Result<()> {
        let u = self.scale * self.mode.dt;
        let d = [(dv[0] * u).round_ties_even(), (dv[1] * u).round_ties_even()];
        if d.iter().any(|x| !x.is_finite() || x.abs() > MAX_EXTENT) {
            return Err(SimError::Overflow { context: "velocity increment" });
        }
        add_signed(v, [d[0] as i64, d[1] as i64], Direction::Forward, "velocity increment")
    }

    fn cell_of(&self, p: &[i64; 2], cells_x: usize, cells_y: usize) -> (usize, usize) {
        (bin(p[0], self.extent[0], cells_x), bin(p[1], self.extent[1], cells_y))
    }

    fn in_region(&self, p: &[i64; 2], region: &Rect) -> bool {
        let (x, y) = (p[0] as f64, p[1] as f64);
        x >= region.x0 * self.scale
            && x < region.x1 * self.scale
            && y >= region.y0 * self.scale
            && y < region.y1 * self.scale
    }

    fn half_kick(&self, state: &mut FixedState, dir: Direction) -> Result<()> {
        if !self.field.is_interacting() {
            return Ok(());
        }
        let imp = self.impulses(state.positions());
        let (_, vel) = state.parts_mut();
        for (v, d) in vel.iter_mut().zip(imp) {
            add_signed(v, d, dir, "half-kick")?;
        }
        Ok(())
    }

    fn drift(&self, state: &mut FixedState, dir: Direction) -> Result<()> {
        let extent = self.extent;
        let (pos, vel) = state.parts_mut();
        for (p, v) in pos.iter_mut().zip(vel.iter_mut()) {
            self.check_speed(v)?;
            for k in 0..2 {
                // The backward drift is the forward drift conjugated by
                // velocity reversal.
                let vk = match dir {
                    Direction::Forward => v[k],
                    Direction::Backward => -v[k],
                };
                let (x, u) = reflect(p[k], vk, extent[k])?;
                p[k] = x;
                v[k] = match dir {
                    Direction::Forward => u,
                    Direction::Backward => -u,
                };
            }
        }
        Ok(())
    }

    fn coupling_half_kick(
        &self,
        a: &mut FixedState,
        b: &mut FixedState,
        lambda: f64,
        dir: Direction,
    ) -> Result<()> {
        if lambda == 0.0 {
            return Ok(());
        }
        let coeff = 0.5 * lambda * self.mode.dt * self.mode.dt;
        let mut imp_a = vec![[0i64; 2]; a.len()];
        let mut imp_b = vec![[0i64; 2]; b.len()];
        for (ia, ib) in coupling_pairs(a.len(), b.len()) {
            let (pa, pb) = (a.positions()[ia], b.positions()[ib]);
            for k in 0..2 {
                let j = (coeff * (pb[k] - pa[k]) as f64).round_ties_even() as i64;
                imp_a[ia][k] += j;
                imp_b[ib][k] -= j;
            }
        }
        for (v, d) in a.parts_mut().1.iter_mut().zip(imp_a) {
            add_signed(v, d, dir, "coupling kick")?;
        }
        for (v, d) in b.parts_mut().1.iter_mut().zip(imp_b) {
            add_signed(v, d, dir, "coupling kick")?;
        }
        Ok(())
    }

    fn contacts(&self, state: &FixedState) -> Vec<(u32, u32)> {
        if !self.field.is_interacting() {
            return Vec::new();
        }
        let mut out = Vec::new();
        self.for_each_contact(state.positions(), |i, j, _, _, _| out.push((i as u32, j as u32)));
        out.sort_unstable();
        out
    }
}
