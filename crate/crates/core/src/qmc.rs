//! Sobol low-discrepancy sequences and box bounds.
//!
//! Points are generated with the Gray-code recurrence from Joe–Kuo
//! direction numbers (the `new-joe-kuo-6.21201` table, first 64 dimensions,
//! shipped in `data/`). The all-zeros point at index 0 is never emitted and
//! no scrambling is applied, so the stream is fully determined by the
//! dimension and the starting offset.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Highest dimension covered by the bundled direction-number table.
pub const MAX_DIMENSION: usize = 64;

/// Bits of precision per coordinate.
const BITS: usize = 32;

/// Index bound: at most 2^31 points may be drawn from one stream.
pub const MAX_INDEX: u64 = 1 << 31;

/// Joe–Kuo direction numbers in their published text format.
pub const JOE_KUO_TABLE: &str = include_str!("../data/new-joe-kuo-64.txt");

/// One row of a Joe–Kuo table: `d s a m_1 .. m_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionEntry {
    pub dimension: usize,
    pub degree: u32,
    pub coefficients: u32,
    pub initial: Vec<u32>,
}

/// Parses a Joe–Kuo direction-number file.
///
/// A leading header line (anything whose first token is not an integer) is
/// skipped, as are blank lines.
pub fn parse_direction_numbers(text: &str) -> Result<Vec<DirectionEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut tokens = line.split_whitespace().peekable();
        match tokens.peek() {
            None => continue,
            Some(first) if first.parse::<u64>().is_err() => {
                if entries.is_empty() {
                    continue;
                }
                return Err(Error::DirectionNumbers {
                    line: line_no,
                    reason: "non-numeric row".to_string(),
                });
            }
            Some(_) => {}
        }
        let nums = tokens
            .map(|t| t.parse::<u32>())
            .collect::<core::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::DirectionNumbers {
                line: line_no,
                reason: e.to_string(),
            })?;
        if nums.len() < 3 {
            return Err(Error::DirectionNumbers {
                line: line_no,
                reason: "expected `d s a m_1 .. m_s`".to_string(),
            });
        }
        let (dimension, degree, coefficients) = (nums[0] as usize, nums[1], nums[2]);
        let initial = nums[3..].to_vec();
        if degree == 0 || degree as usize >= BITS || initial.len() != degree as usize {
            return Err(Error::DirectionNumbers {
                line: line_no,
                reason: "m_i count must equal degree s".to_string(),
            });
        }
        for (k, &m) in initial.iter().enumerate() {
            // m_k must be odd and below 2^k (k is 1-based)
            if m % 2 == 0 || m >= 1 << (k + 1) {
                return Err(Error::DirectionNumbers {
                    line: line_no,
                    reason: "m_k must be odd and < 2^k".to_string(),
                });
            }
        }
        let expected = entries.len() + 2;
        if dimension != expected {
            return Err(Error::DirectionNumbers {
                line: line_no,
                reason: "dimensions must be consecutive starting at 2".to_string(),
            });
        }
        entries.push(DirectionEntry {
            dimension,
            degree,
            coefficients,
            initial,
        });
    }
    Ok(entries)
}

/// Expands one table row into 32 left-aligned direction integers.
fn expand(entry: &DirectionEntry) -> [u32; BITS] {
    let s = entry.degree as usize;
    let mut m = [0u32; BITS];
    m[..s].copy_from_slice(&entry.initial);
    for k in s..BITS {
        let mut value = m[k - s] ^ (m[k - s] << s);
        for j in 1..s {
            let bit = (entry.coefficients >> (s - 1 - j)) & 1;
            if bit == 1 {
                value ^= m[k - j] << j;
            }
        }
        m[k] = value;
    }
    let mut v = [0u32; BITS];
    for k in 0..BITS {
        v[k] = m[k] << (BITS - 1 - k);
    }
    v
}

fn first_dimension() -> [u32; BITS] {
    let mut v = [0u32; BITS];
    for (k, slot) in v.iter_mut().enumerate() {
        *slot = 1 << (BITS - 1 - k);
    }
    v
}

/// A deterministic, unscrambled Sobol stream over `[0,1)^m`.
///
/// Single-owner mutable state: it is `Send` but advancing requires `&mut`.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    /// Stream starting at index 1 using the bundled table.
    pub fn new(dimension: usize) -> Result<Self> {
        Self::with_offset(dimension, 0)
    }

    /// Stream whose first emitted point is index `1 + offset`.
    pub fn with_offset(dimension: usize, offset: u64) -> Result<Self> {
        let entries = parse_direction_numbers(JOE_KUO_TABLE)?;
        Self::from_table(dimension, &entries, offset)
    }

    pub fn from_table(dimension: usize, table: &[DirectionEntry], offset: u64) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION || dimension > table.len() + 1 {
            return Err(Error::UnsupportedDimension(dimension));
        }
        let mut directions = Vec::with_capacity(dimension);
        directions.push(first_dimension());
        directions.extend(table.iter().take(dimension - 1).map(expand));
        let mut seq = SobolSequence {
            directions,
            state: vec![0; dimension],
            index: 0,
        };
        seq.seek(1 + offset)?;
        Ok(seq)
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    /// Index of the next point to be emitted.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Positions the stream so that the next emitted point is `index`.
    pub fn seek(&mut self, index: u64) -> Result<()> {
        if index == 0 || index >= MAX_INDEX {
            return Err(Error::SequenceExhausted(index));
        }
        // the state holds point(index - 1): XOR of directions over gray-code bits
        let prev = index - 1;
        let gray = prev ^ (prev >> 1);
        for (state, dirs) in self.state.iter_mut().zip(&self.directions) {
            let mut x = 0u32;
            for (bit, v) in dirs.iter().enumerate() {
                if (gray >> bit) & 1 == 1 {
                    x ^= v;
                }
            }
            *state = x;
        }
        self.index = index;
        Ok(())
    }

    /// Emits the point at the current index and advances.
    pub fn next_point(&mut self) -> Result<Vec<f64>> {
        if self.index >= MAX_INDEX {
            return Err(Error::SequenceExhausted(self.index));
        }
        let bit = self.index.trailing_zeros() as usize;
        let scale = 1.0 / (1u64 << BITS) as f64;
        let point = self
            .state
            .iter_mut()
            .zip(&self.directions)
            .map(|(x, dirs)| {
                *x ^= dirs[bit];
                f64::from(*x) * scale
            })
            .collect();
        self.index += 1;
        Ok(point)
    }

    /// Draws `count` points and maps them affinely into `bounds`.
    pub fn sample_batch(&mut self, count: usize, bounds: &BoundsSpec) -> Result<Vec<Vec<f64>>> {
        if bounds.dim() != self.dimension() {
            return Err(Error::DimensionMismatch {
                context: "sample_batch bounds",
                expected: self.dimension(),
                actual: bounds.dim(),
            });
        }
        if count == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".to_string()));
        }
        (0..count)
            .map(|_| self.next_point().map(|u| bounds.from_unit(&u)))
            .collect()
    }
}

impl Iterator for SobolSequence {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        self.next_point().ok()
    }
}

/// Per-dimension box constraints `x_min <= x <= x_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, try_from = "RawBounds"))]
pub struct BoundsSpec {
    x_min: Vec<f64>,
    x_max: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    x_min: Vec<f64>,
    x_max: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawBounds> for BoundsSpec {
    type Error = Error;

    fn try_from(raw: RawBounds) -> Result<Self> {
        BoundsSpec::new(raw.x_min, raw.x_max)
    }
}

impl BoundsSpec {
    pub fn new(x_min: Vec<f64>, x_max: Vec<f64>) -> Result<Self> {
        if x_min.len() != x_max.len() {
            return Err(Error::DimensionMismatch {
                context: "bounds",
                expected: x_min.len(),
                actual: x_max.len(),
            });
        }
        if x_min.is_empty() {
            return Err(Error::Empty("bounds"));
        }
        for (dim, (&min, &max)) in x_min.iter().zip(&x_max).enumerate() {
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(Error::InvalidBounds { dim, min, max });
            }
        }
        Ok(BoundsSpec { x_min, x_max })
    }

    pub fn unit(dim: usize) -> Self {
        BoundsSpec {
            x_min: vec![0.0; dim],
            x_max: vec![1.0; dim],
        }
    }

    pub fn uniform(dim: usize, min: f64, max: f64) -> Result<Self> {
        Self::new(vec![min; dim], vec![max; dim])
    }

    pub fn dim(&self) -> usize {
        self.x_min.len()
    }

    pub fn x_min(&self) -> &[f64] {
        &self.x_min
    }

    pub fn x_max(&self) -> &[f64] {
        &self.x_max
    }

    pub fn range(&self, i: usize) -> f64 {
        self.x_max[i] - self.x_min[i]
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &u)| self.x_min[i] + u * self.range(i))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &x)| (x - self.x_min[i]) / self.range(i))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.x_min[i] && v <= self.x_max[i])
    }

    /// Errors on the first coordinate outside the box.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "bounds check",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        for (dim, &value) in x.iter().enumerate() {
            let (min, max) = (self.x_min[dim], self.x_max[dim]);
            if !(value >= min && value <= max) {
                return Err(Error::OutOfBounds { dim, value, min, max });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(self.x_min[i], self.x_max[i]))
            .collect()
    }

    /// Largest bound violation of `x`, measured in unit-scaled coordinates.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let below = (self.x_min[i] - v) / self.range(i);
                let above = (v - self.x_max[i]) / self.range(i);
                below.max(above).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Keeps only the listed dimensions, in order.
    pub fn select(&self, dims: &[usize]) -> Self {
        BoundsSpec {
            x_min: dims.iter().map(|&d| self.x_min[d]).collect(),
            x_max: dims.iter().map(|&d| self.x_max[d]).collect(),
        }
    }
}

/// Anchored-box discrepancy proxy of a point set in `[0,1)^d`.
///
/// Returns the largest `|#{x in [0,a)} / N - vol([0,a))|` over anchors `a`
/// drawn from a dyadic grid with at most 4096 nodes. For `d > 12` the grid
/// degenerates, so the point coordinates themselves (and their neighbours
/// just above) serve as anchors instead.
pub fn discrepancy_check(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DatasetTooSmall {
            len: points.len(),
            min: 2,
        });
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::Empty("point"));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "discrepancy_check",
                expected: dim,
                actual: p.len(),
            });
        }
    }
    let n = points.len() as f64;
    let local = |anchor: &[f64]| -> f64 {
        let inside = points
            .iter()
            .filter(|p| p.iter().zip(anchor).all(|(x, a)| x < a))
            .count() as f64;
        let volume: f64 = anchor.iter().product();
        (inside / n - volume).abs()
    };

    let mut worst = 0.0f64;
    if dim <= 12 {
        let resolution = 1usize << (12 / dim);
        let total = resolution.pow(dim as u32);
        let mut anchor = vec![0.0; dim];
        for node in 0..total {
            let mut rest = node;
            for a in anchor.iter_mut() {
                *a = ((rest % resolution) + 1) as f64 / resolution as f64;
                rest /= resolution;
            }
            worst = worst.max(local(&anchor));
        }
    } else {
        for p in points {
            worst = worst.max(local(p));
            let above: Vec<f64> = p.iter().map(|&x| (x + 1e-12).min(1.0)).collect();
            worst = worst.max(local(&above));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Base-2 radical inverse of the Gray code of `i`; equals dimension 1.
    fn radical_inverse_gray(i: u64) -> f64 {
        let mut g = i ^ (i >> 1);
        let mut inv = 0.0;
        let mut scale = 0.5;
        while g > 0 {
            if g & 1 == 1 {
                inv += scale;
            }
            g >>= 1;
            scale *= 0.5;
        }
        inv
    }

    #[test]
    fn first_points_dim_one() {
        let mut seq = SobolSequence::new(1).unwrap();
        let pts: Vec<f64> = (0..3).map(|_| seq.next_point().unwrap()[0]).collect();
        assert_eq!(pts, vec![0.5, 0.75, 0.25]);
    }

    #[test]
    fn dim_one_matches_radical_inverse() {
        let mut seq = SobolSequence::new(1).unwrap();
        for i in 1..=4096u64 {
            assert_eq!(seq.next_point().unwrap()[0], radical_inverse_gray(i), "index {i}");
        }
    }

    #[test]
    fn first_point_dim_two() {
        let mut seq = SobolSequence::new(2).unwrap();
        assert_eq!(seq.next_point().unwrap(), vec![0.5, 0.5]);
    }

    // Reference values from an independent Sobol implementation (SciPy
    // `qmc.Sobol(scramble=False)`, same Joe–Kuo table), indices 1..=4 and 1024.
    #[test]
    fn thirteen_dims_match_reference() {
        let expected: [[f64; 13]; 4] = [
            [0.5; 13],
            [
                0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.75, 0.75, 0.75, 0.25,
            ],
            [
                0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25, 0.25, 0.25, 0.25, 0.25, 0.75,
            ],
            [
                0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875, 0.875, 0.625, 0.875, 0.375, 0.375,
            ],
        ];
        let mut seq = SobolSequence::new(13).unwrap();
        for row in expected {
            assert_eq!(seq.next_point().unwrap(), row.to_vec());
        }
        let mut far = SobolSequence::with_offset(13, 1023).unwrap();
        assert_eq!(
            far.next_point().unwrap(),
            vec![
                0.00146484375,
                0.37646484375,
                0.44775390625,
                0.48681640625,
                0.55712890625,
                0.84423828125,
                0.24169921875,
                0.58740234375,
                0.69677734375,
                0.67138671875,
                0.82177734375,
                0.92138671875,
                0.70654296875,
            ]
        );
    }

    #[test]
    fn seek_agrees_with_sequential() {
        let mut a = SobolSequence::new(7).unwrap();
        for _ in 0..999 {
            a.next_point().unwrap();
        }
        let mut b = SobolSequence::with_offset(7, 999).unwrap();
        for _ in 0..50 {
            assert_eq!(a.next_point().unwrap(), b.next_point().unwrap());
        }
    }

    #[test]
    fn points_stay_in_unit_cube() {
        let seq = SobolSequence::new(64).unwrap();
        for p in seq.take(2000) {
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn exhaustion_errors() {
        let mut seq = SobolSequence::with_offset(2, MAX_INDEX - 2).unwrap();
        assert!(seq.next_point().is_ok());
        assert_eq!(seq.next_point(), Err(Error::SequenceExhausted(MAX_INDEX)));
        assert!(SobolSequence::with_offset(2, MAX_INDEX).is_err());
    }

    #[test]
    fn unsupported_dimensions() {
        assert_eq!(SobolSequence::new(0).unwrap_err(), Error::UnsupportedDimension(0));
        assert_eq!(SobolSequence::new(65).unwrap_err(), Error::UnsupportedDimension(65));
    }

    #[test]
    fn dyadic_stratification_dim_one() {
        // prefix of length 2^k - 1 hits each interval of width 2^-k at most once
        for k in 1..=10u32 {
            let mut seq = SobolSequence::new(1).unwrap();
            let cells = 1usize << k;
            let mut counts = vec![0usize; cells];
            for _ in 0..cells - 1 {
                let x = seq.next_point().unwrap()[0];
                counts[(x * cells as f64) as usize] += 1;
            }
            assert!(counts.iter().all(|&c| c <= 1), "k={k}");
        }
    }

    #[test]
    fn sample_batch_scales_into_bounds() {
        let bounds = BoundsSpec::new(vec![2.0], vec![4.0]).unwrap();
        let mut seq = SobolSequence::new(1).unwrap();
        assert_eq!(seq.sample_batch(1, &bounds).unwrap(), vec![vec![3.0]]);

        let mut a = SobolSequence::new(3).unwrap();
        let mut b = SobolSequence::new(3).unwrap();
        assert_eq!(
            a.sample_batch(1, &BoundsSpec::unit(3)).unwrap()[0],
            b.next_point().unwrap()
        );
    }

    #[test]
    fn sample_batch_of_400_is_distinct_and_in_bounds() {
        let bounds = BoundsSpec::uniform(13, -3.0, 7.0).unwrap();
        let mut seq = SobolSequence::new(13).unwrap();
        let xs = seq.sample_batch(400, &bounds).unwrap();
        assert_eq!(xs.len(), 400);
        assert!(xs.iter().all(|x| bounds.contains(x)));
        for i in 0..xs.len() {
            for j in 0..i {
                assert_ne!(xs[i], xs[j]);
            }
        }
    }

    #[test]
    fn sample_batch_rejects_zero_and_mismatch() {
        let mut seq = SobolSequence::new(2).unwrap();
        assert!(seq.sample_batch(0, &BoundsSpec::unit(2)).is_err());
        assert!(seq.sample_batch(1, &BoundsSpec::unit(3)).is_err());
    }

    #[test]
    fn bounds_validation() {
        assert!(BoundsSpec::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(BoundsSpec::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(BoundsSpec::new(vec![f64::NAN], vec![1.0]).is_err());
        let b = BoundsSpec::new(vec![0.0, 10.0], vec![1.0, 20.0]).unwrap();
        assert_eq!(b.to_unit(&[0.5, 12.0]), vec![0.5, 0.2]);
        assert!((b.max_violation(&[1.2, 15.0]) - 0.2).abs() < 1e-12);
        assert!(b.check(&[0.5, 25.0]).is_err());
    }

    #[test]
    fn table_parser_rejects_garbage() {
        assert!(parse_direction_numbers("d s a m\n2 1 0 2\n").is_err());
        assert!(parse_direction_numbers("2 2 1 1\n").is_err());
        assert!(parse_direction_numbers("3 1 0 1\n").is_err());
        let parsed = parse_direction_numbers(JOE_KUO_TABLE).unwrap();
        assert_eq!(parsed.len(), MAX_DIMENSION - 1);
        assert_eq!(parsed[2].initial, vec![1, 3, 1]);
    }

    fn pseudo_random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
    }

    #[test]
    fn sobol_beats_pseudo_random_discrepancy() {
        let sobol: Vec<Vec<f64>> = SobolSequence::new(2).unwrap().take(256).collect();
        let d_sobol = discrepancy_check(&sobol).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mean: f64 = (0..20)
            .map(|_| discrepancy_check(&pseudo_random_set(&mut rng, 256, 2)).unwrap())
            .sum::<f64>()
            / 20.0;
        assert!(d_sobol < mean, "sobol {d_sobol} vs random mean {mean}");
    }

    #[test]
    fn discrepancy_orders_simple_sets() {
        let stratified = discrepancy_check(&[vec![0.25], vec![0.75]]).unwrap();
        let clustered = discrepancy_check(&[vec![0.1], vec![0.11]]).unwrap();
        assert!(stratified < clustered);
        let degenerate = discrepancy_check(&vec![vec![0.001, 0.001]; 50]).unwrap();
        assert!(degenerate > 0.98, "{degenerate}");
        assert!(discrepancy_check(&[vec![0.1], vec![0.2, 0.3]]).is_err());
        assert!(discrepancy_check(&[vec![0.1]]).is_err());
    }

    #[test]
    fn high_dimension_discrepancy_is_finite() {
        let pts: Vec<Vec<f64>> = SobolSequence::new(13).unwrap().take(64).collect();
        let d = discrepancy_check(&pts).unwrap();
        assert!(d.is_finite() && (0.0..=1.0).contains(&d));
    }
}
