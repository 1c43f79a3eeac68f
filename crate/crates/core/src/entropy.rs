//! Coarse-grained ("macroscopic") entropy of a gas configuration.
//!
//! Positions are binned on a [`CoarseGrid`]; the macroscopic entropy of the
//! resulting occupancy `n_c` is
//!
//! ```text
//! S = −N Σ_c (n_c/N) ln(n_c/N)        (units of k)
//! ```
//!
//! the Stirling limit of `ln(N! / Π n_c!)`, i.e. the log-count of equally
//! weighted particle-to-cell assignments compatible with the occupancy. The
//! occupied-volume entropy `N ln V_occ` counts only which cells are occupied.
//! Additive constants are zero in both.

use nalgebra::DMatrix;

use crate::dynamics::{FloatIntegrator, FloatState, Integrator, ParticleState};
use crate::error::{Result, SimError};
use crate::geometry::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoarseGrid {
    cells_x: usize,
    cells_y: usize,
}

impl CoarseGrid {
    /// Validates the grid against an integrator's box: at least two cells,
    /// and in fixed-point mode each side splits into equal whole numbers of
    /// quanta.
    pub fn new<I: Integrator>(cells_x: usize, cells_y: usize, integ: &I) -> Result<Self> {
        if cells_x == 0 || cells_y == 0 || cells_x * cells_y < 2 {
            return Err(SimError::Geometry(format!(
                "grid {cells_x}x{cells_y} must have positive sides and at least 2 cells"
            )));
        }
        let scale = integ.mode().fixed_point_scale;
        if scale > 0 {
            let g = integ.geometry();
            for (len, cells) in [(g.width(), cells_x), (g.height(), cells_y)] {
                let quanta = len * scale as f64;
                if quanta.fract() != 0.0 || !(quanta as u64).is_multiple_of(cells as u64) {
                    return Err(SimError::Geometry(format!(
                        "box side {len} does not split into {cells} equal fixed-point cells"
                    )));
                }
            }
        }
        Ok(Self { cells_x, cells_y })
    }

    pub fn cells_x(&self) -> usize {
        self.cells_x
    }

    pub fn cells_y(&self) -> usize {
        self.cells_y
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x * self.cells_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    /// Row-major counts, index `cy * cells_x + cx`.
    pub occupancy: Vec<u32>,
    pub total: usize,
    pub grid: CoarseGrid,
    pub cell_area: f64,
    /// Zero for an empty system.
    pub entropy_macroscopic: f64,
}

pub fn coarse_grain<I: Integrator>(integ: &I, state: &ParticleState<I::Scalar>, grid: CoarseGrid) -> MacroState {
    let mut occupancy = vec![0u32; grid.cell_count()];
    for p in state.positions() {
        let (cx, cy) = integ.cell_of(p, grid.cells_x, grid.cells_y);
        occupancy[cy * grid.cells_x + cx] += 1;
    }
    let g = integ.geometry();
    let entropy_macroscopic = macroscopic_entropy(&occupancy).unwrap_or(0.0);
    MacroState {
        occupancy,
        total: state.len(),
        grid,
        cell_area: g.area() / grid.cell_count() as f64,
        entropy_macroscopic,
    }
}

/// `Σ n_c ln(N / n_c)` over occupied cells.
pub fn macroscopic_entropy(occupancy: &[u32]) -> Result<f64> {
    let n: u64 = occupancy.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return Err(SimError::EmptySystem);
    }
    let n = n as f64;
    Ok(occupancy
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * (n / c).ln()
        })
        .sum())
}

/// `N ln(V_occ)`, `V_occ` the total area of occupied cells.
pub fn occupied_volume_entropy(m: &MacroState) -> Result<f64> {
    let occupied = m.occupancy.iter().filter(|&&c| c > 0).count();
    if occupied == 0 {
        return Err(SimError::EmptySystem);
    }
    Ok(m.total as f64 * (occupied as f64 * m.cell_area).ln())
}

/// Fraction of particles inside `region` (half-open, closed at box edges).
pub fn region_return_fraction<I: Integrator>(integ: &I, state: &ParticleState<I::Scalar>, region: &Rect) -> f64 {
    if state.is_empty() {
        return 0.0;
    }
    let inside = state.positions().iter().filter(|p| integ.in_region(p, region)).count();
    inside as f64 / state.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdQuality {
    Reliable,
    /// Perturbing a coordinate would leave the box.
    NearWall,
    /// The two step sizes disagree beyond what truncation error allows.
    RoundOffDominated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVolumeReport {
    /// `|det J − 1|` of the Richardson-extrapolated Jacobian.
    pub defect: f64,
    pub determinant: f64,
    /// Defects at the two raw step sizes `h` and `h/2`.
    pub raw_defects: [f64; 2],
    pub quality: FdQuality,
}

/// Largest tolerated gap between the two raw determinant estimates.
const FD_AGREEMENT: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;

/// Estimates `|det J − 1|` for one step of the float integrator, `J` the
/// Jacobian with respect to the phase vector `(x, y, vx, vy)` per particle,
/// by central differences at `h` and `h/2` combined by Richardson
/// extrapolation.
pub fn phase_volume_check(integ: &FloatIntegrator, state: &FloatState) -> Result<PhaseVolumeReport> {
    let n = state.len();
    let dim = 4 * n;
    let base: Vec<f64> = flatten(state);
    let g = integ.geometry();
    let lens = [g.width(), g.height()];

    let near_wall = state
        .positions()
        .iter()
        .any(|p| (0..2).any(|k| p[k] < FD_STEP || p[k] > lens[k] - FD_STEP));

    let jacobian = |h: f64| -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[c] += h;
            minus[c] -= h;
            let fp = advance(integ, &plus)?;
            let fm = advance(integ, &minus)?;
            for r in 0..dim {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(j)
    };

    let coarse = jacobian(FD_STEP)?;
    let fine = jacobian(0.5 * FD_STEP)?;
    let extrapolated = (&fine * 4.0 - &coarse) / 3.0;
    let determinant = extrapolated.determinant();
    let raw = [coarse.determinant(), fine.determinant()];
    let quality = if near_wall {
        FdQuality::NearWall
    } else if (raw[0] - raw[1]).abs() > FD_AGREEMENT {
        FdQuality::RoundOffDominated
    } else {
        FdQuality::Reliable
    };
    Ok(PhaseVolumeReport {
        defect: (determinant - 1.0).abs(),
        determinant,
        raw_defects: [(raw[0] - 1.0).abs(), (raw[1] - 1.0).abs()],
        quality,
    })
}

fn flatten(state: &FloatState) -> Vec<f64> {
    state
        .positions()
        .iter()
        .zip(state.velocities())
        .flat_map(|(p, v)| [p[0], p[1], v[0], v[1]])
        .collect()
}

fn advance(integ: &FloatIntegrator, phase: &[f64]) -> Result<Vec<f64>> {
    let pos = phase.chunks(4).map(|c| [c[0], c[1]]).collect();
    let vel = phase.chunks(4).map(|c| [c[2], c[3]]).collect();
    let mut s = FloatState::from_parts(pos, vel)?;
    integ.step(&mut s)?;
    Ok(flatten(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{reverse_velocities, FixedIntegrator, ForceField};
    use crate::geometry::BoxGeometry;
    use proptest::prelude::*;

    fn fixed() -> FixedIntegrator {
        let g = BoxGeometry::new(16.0, 16.0, Rect::new(0.0, 0.0, 8.0, 8.0)).unwrap();
        FixedIntegrator::new(g, ForceField::new(0.25, 10.0, 0.5).unwrap(), 0.01, 1 << 20).unwrap()
    }

    fn float() -> FloatIntegrator {
        let g = BoxGeometry::new(16.0, 16.0, Rect::new(0.0, 0.0, 8.0, 8.0)).unwrap();
        FloatIntegrator::new(g, ForceField::new(0.25, 10.0, 0.5).unwrap(), 0.01, 0).unwrap()
    }

    fn at(integ: &FixedIntegrator, pts: &[[f64; 2]]) -> ParticleState<i64> {
        let phase: Vec<_> = pts.iter().map(|&p| (p, [0.0, 0.0])).collect();
        integ.from_physical(&phase).unwrap()
    }

    #[test]
    fn grid_validation() {
        let i = fixed();
        assert!(CoarseGrid::new(1, 1, &i).is_err());
        assert!(CoarseGrid::new(2, 1, &i).is_ok());
        assert!(CoarseGrid::new(16, 16, &i).is_ok());
        // 16 · 2^20 quanta do not split into 3 equal cells.
        assert!(CoarseGrid::new(3, 4, &i).is_err());
        assert!(CoarseGrid::new(3, 4, &float()).is_ok());
    }

    #[test]
    fn all_in_one_cell() {
        let i = fixed();
        let g = CoarseGrid::new(4, 4, &i).unwrap();
        let m = coarse_grain(&i, &at(&i, &[[0.5, 0.5], [1.0, 1.0], [3.9, 0.1]]), g);
        assert_eq!(m.occupancy.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(m.occupancy[0], 3);
        assert_eq!(m.entropy_macroscopic, 0.0);
    }

    #[test]
    fn interior_boundary_goes_to_higher_cell() {
        let i = fixed();
        let g = CoarseGrid::new(4, 4, &i).unwrap();
        let m = coarse_grain(&i, &at(&i, &[[4.0, 8.0]]), g);
        assert_eq!(m.occupancy[2 * 4 + 1], 1);
        let f = float();
        let s = f.from_physical(&[([4.0, 8.0], [0.0, 0.0])]).unwrap();
        assert_eq!(coarse_grain(&f, &s, g).occupancy[2 * 4 + 1], 1);
    }

    #[test]
    fn far_box_edge_closes_the_last_cell() {
        let f = float();
        let g = CoarseGrid::new(2, 2, &f).unwrap();
        let s = f.from_physical(&[([16.0, 16.0], [0.0, 0.0])]).unwrap();
        assert_eq!(coarse_grain(&f, &s, g).occupancy, vec![0, 0, 0, 1]);
    }

    #[test]
    fn one_per_cell_on_two_by_two() {
        let i = fixed();
        let g = CoarseGrid::new(2, 2, &i).unwrap();
        let m = coarse_grain(&i, &at(&i, &[[1.0, 1.0], [9.0, 1.0], [1.0, 9.0], [9.0, 9.0]]), g);
        assert_eq!(m.occupancy, vec![1, 1, 1, 1]);
        assert!((m.entropy_macroscopic - 4.0 * 4f64.ln()).abs() < 1e-12);
        assert!((m.entropy_macroscopic - 5.5452).abs() < 1e-4);
    }

    #[test]
    fn single_configuration_has_zero_entropy() {
        assert_eq!(macroscopic_entropy(&[7, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(macroscopic_entropy(&[0, 0]), Err(SimError::EmptySystem));
    }

    #[test]
    fn occupied_volume_entropy_values() {
        let i = fixed();
        let g = CoarseGrid::new(4, 4, &i).unwrap();
        // cell area 16
        let one = coarse_grain(&i, &at(&i, &[[0.5, 0.5], [1.0, 1.0]]), g);
        assert!((occupied_volume_entropy(&one).unwrap() - 2.0 * 16f64.ln()).abs() < 1e-12);
        let two = coarse_grain(&i, &at(&i, &[[0.5, 0.5], [5.0, 1.0]]), g);
        let ds = occupied_volume_entropy(&two).unwrap() - occupied_volume_entropy(&one).unwrap();
        assert!((ds - 2.0 * 2f64.ln()).abs() < 1e-12);
        let pts: Vec<[f64; 2]> = (0..16).map(|c| [2.0 + 4.0 * (c % 4) as f64, 2.0 + 4.0 * (c / 4) as f64]).collect();
        let full = coarse_grain(&i, &at(&i, &pts), g);
        assert!((occupied_volume_entropy(&full).unwrap() - 16.0 * 256f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn return_fraction_counts() {
        let i = fixed();
        let s = at(&i, &[[1.0, 1.0], [2.0, 2.0], [12.0, 12.0], [8.0, 1.0]]);
        let r = Rect::new(0.0, 0.0, 8.0, 8.0);
        assert_eq!(region_return_fraction(&i, &s, &r), 0.5);
        assert_eq!(region_return_fraction(&i, &s, &Rect::new(0.0, 0.0, 16.0, 16.0)), 1.0);
        assert_eq!(region_return_fraction(&i, &s, &Rect::new(13.0, 13.0, 16.0, 16.0)), 0.0);
    }

    #[test]
    fn entropy_ignores_velocity_sign() {
        let i = fixed();
        let g = CoarseGrid::new(4, 4, &i).unwrap();
        let s = i
            .from_physical(&[([1.0, 1.0], [0.3, 0.2]), ([9.0, 3.0], [-0.1, 0.5])])
            .unwrap();
        assert_eq!(coarse_grain(&i, &s, g), coarse_grain(&i, &reverse_velocities(&s), g));
    }

    #[test]
    fn free_drift_jacobian_is_unimodular() {
        let g = BoxGeometry::new(16.0, 16.0, Rect::new(0.0, 0.0, 8.0, 8.0)).unwrap();
        let f = FloatIntegrator::new(g, ForceField::ideal_gas(), 0.01, 0).unwrap();
        let s = f.from_physical(&[([4.0, 4.0], [0.7, -0.2]), ([9.0, 11.0], [-0.4, 0.9])]).unwrap();
        let r = phase_volume_check(&f, &s).unwrap();
        assert!(r.defect < 1e-9, "{r:?}");
        assert_eq!(r.quality, FdQuality::Reliable);
    }

    #[test]
    fn interacting_pair_jacobian_and_reversal_invariance() {
        let f = float();
        let s = f
            .from_physical(&[([8.0, 8.0], [0.6, 0.1]), ([8.3, 8.1], [-0.5, 0.2])])
            .unwrap();
        let fwd = phase_volume_check(&f, &s).unwrap();
        let rev = phase_volume_check(&f, &reverse_velocities(&s)).unwrap();
        assert!(fwd.defect < 1e-6, "{fwd:?}");
        assert!(rev.defect < 1e-6, "{rev:?}");
        assert_eq!(fwd.quality, FdQuality::Reliable);
        assert!((fwd.defect - rev.defect).abs() < 1e-8);
    }

    #[test]
    fn wall_adjacent_point_is_flagged() {
        let f = float();
        let s = f.from_physical(&[([0.0, 8.0], [0.6, 0.1])]).unwrap();
        assert_eq!(phase_volume_check(&f, &s).unwrap().quality, FdQuality::NearWall);
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_permutation_invariance(
            occ in proptest::collection::vec(0u32..20, 2..12),
            rot in 0usize..12,
        ) {
            let n: u32 = occ.iter().sum();
            prop_assume!(n > 0);
            let s = macroscopic_entropy(&occ).unwrap();
            let c = occ.len() as f64;
            prop_assert!(s >= 0.0);
            prop_assert!(s <= n as f64 * c.ln() + 1e-9);
            let mut shuffled = occ.clone();
            shuffled.rotate_left(rot % occ.len());
            shuffled.reverse();
            prop_assert!((macroscopic_entropy(&shuffled).unwrap() - s).abs() < 1e-9);
            let nonzero = occ.iter().filter(|&&x| x > 0).count();
            prop_assert_eq!(s == 0.0, nonzero == 1);
        }

        #[test]
        fn uniform_occupancy_reaches_the_maximum(c in 2usize..20, k in 1u32..10) {
            let occ = vec![k; c];
            let s = macroscopic_entropy(&occ).unwrap();
            let n = (k as usize * c) as f64;
            prop_assert!((s - n * (c as f64).ln()).abs() < 1e-9 * n);
        }
    }
}
