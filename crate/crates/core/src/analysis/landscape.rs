use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::par;
use crate::simbench::Simulator;
use crate::surrogate::{Standardizer, SurrogateModel};

/// What a landscape grid evaluates: the cheap surrogate or the real
/// simulator (every cell is a counted query).
#[derive(Clone, Copy)]
pub enum LandscapeSource<'a> {
    Surrogate(&'a SurrogateModel),
    Simulator(&'a dyn Simulator),
}

impl LandscapeSource<'_> {
    fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            LandscapeSource::Surrogate(model) => model.predict(x),
            LandscapeSource::Simulator(sim) => sim.evaluate(x),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            LandscapeSource::Surrogate(model) => model.input_dim(),
            LandscapeSource::Simulator(sim) => sim.input_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LandscapeGrid {
    pub dims: (usize, usize),
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// The full input vector every cell starts from.
    pub frozen: Vec<f64>,
    /// `losses[i][j]` is at `(axis1[i], axis2[j])`; `None` marks a failed cell.
    pub losses: Vec<Vec<Option<f64>>>,
}

impl LandscapeGrid {
    /// Input vector of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> Vec<f64> {
        let mut x = self.frozen.clone();
        x[self.dims.0] = self.axis1[i];
        x[self.dims.1] = self.axis2[j];
        x
    }

    pub fn missing_cells(&self) -> usize {
        self.losses.iter().flatten().filter(|c| c.is_none()).count()
    }
}

/// `count` evenly spaced values from `lo` to `hi`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Objective loss over a `resolution × resolution` grid spanning the bounds
/// of inputs `dims`, other inputs held at `frozen`. Cells are scored with
/// `spec.loss_physical(scoring, y, x)`.
pub fn landscape(
    source: LandscapeSource<'_>,
    spec: &ObjectiveSpec,
    scoring: &Standardizer,
    dims: (usize, usize),
    frozen: &[f64],
    resolution: usize,
) -> Result<LandscapeGrid> {
    let m = spec.input_dim();
    if source.input_dim() != m || frozen.len() != m {
        return Err(Error::DimensionMismatch {
            context: "landscape inputs",
            expected: m,
            actual: frozen.len(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidConfig("landscape resolution must be at least 2".into()));
    }
    if dims.0 >= m || dims.1 >= m || dims.0 == dims.1 {
        return Err(Error::InvalidConfig(alloc::format!(
            "landscape dims {dims:?} must be two distinct indices below {m}"
        )));
    }
    spec.bounds.check(frozen)?;

    let bounds = &spec.bounds;
    let axis = |d: usize| linspace(bounds.x_min()[d], bounds.x_max()[d], resolution);
    let mut grid = LandscapeGrid {
        dims,
        axis1: axis(dims.0),
        axis2: axis(dims.1),
        frozen: frozen.to_vec(),
        losses: Vec::new(),
    };
    let flat = par::map_indexed(resolution * resolution, |cell| {
        let x = grid.point(cell / resolution, cell % resolution);
        match source.output(&x).and_then(|y| spec.loss_physical(scoring, &y, &x)) {
            Ok(loss) => Some(loss),
            Err(err) => {
                log::warn!("landscape cell {cell} failed: {err}");
                None
            }
        }
    });
    grid.losses = flat.chunks(resolution).map(<[_]>::to_vec).collect();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc::BoundsSpec;
    use crate::simbench::ToyFlareSim;
    use alloc::vec;

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linspace(0.1, 0.7, 21)[20], 0.7);
    }

    #[test]
    fn surrogate_cells_match_direct_loss() {
        let st = Standardizer::identity(3, 3);
        let model = SurrogateModel::initialized(&[3, 5, 3], st, 9).unwrap();
        let spec = ObjectiveSpec::new(vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 0.5], 1.0, BoundsSpec::unit(3)).unwrap();
        let grid = landscape(
            LandscapeSource::Surrogate(&model),
            &spec,
            model.standardizer(),
            (0, 2),
            &[0.5, 0.25, 0.5],
            3,
        )
        .unwrap();
        assert_eq!(grid.losses.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let x = grid.point(i, j);
                let direct = spec
                    .loss_physical(model.standardizer(), &model.predict(&x).unwrap(), &x)
                    .unwrap();
                assert_eq!(grid.losses[i][j], Some(direct));
            }
        }
    }

    #[test]
    fn simulator_cells_are_counted() {
        let sim = ToyFlareSim::new();
        let spec = ObjectiveSpec::flare(BoundsSpec::unit(13));
        let st = Standardizer::identity(13, 3);
        let grid = landscape(LandscapeSource::Simulator(&sim), &spec, &st, (5, 2), &[0.5; 13], 4).unwrap();
        assert_eq!(sim.query_count(), 16);
        assert_eq!(grid.missing_cells(), 0);
    }

    #[test]
    fn bad_arguments() {
        let sim = ToyFlareSim::new();
        let spec = ObjectiveSpec::flare(BoundsSpec::unit(13));
        let st = Standardizer::identity(13, 3);
        let src = LandscapeSource::Simulator(&sim);
        assert!(landscape(src, &spec, &st, (1, 2), &[0.5; 13], 1).is_err());
        assert!(landscape(src, &spec, &st, (1, 1), &[0.5; 13], 3).is_err());
        assert!(landscape(src, &spec, &st, (1, 13), &[0.5; 13], 3).is_err());
        assert!(landscape(src, &spec, &st, (1, 2), &[1.5; 13], 3).is_err());
    }
}
