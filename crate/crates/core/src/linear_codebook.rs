//! LPCC vector quantization: codebook design by binary splitting with Lloyd
//! refinement, and nearest-centroid queries.
//!
//! Distances are averaged over the 12 cepstral dimensions. Under the default
//! MAE distance the centroid of a cell is its per-dimension median, which is
//! the minimizer of the cell's accumulated absolute error; under squared
//! Euclidean distance it is the mean. Either way every Lloyd pass is
//! non-increasing in distortion.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frontend::{LpccVector, CEPSTRUM_ORDER};
use crate::linalg;
use crate::math;
use crate::OpCounter;

const DIM: usize = CEPSTRUM_ORDER;

/// Relative size of the split perturbation for both split rules.
pub const SPLIT_EPSILON: f64 = 0.1;
/// Per-dimension spread assumed when a cluster has none along a dimension.
pub const DEGENERATE_SPREAD: f64 = 1e-4;
/// Dominant covariance eigenvalues below this are treated as zero.
pub const HYPERPLANE_MIN_EIGENVALUE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SplitMethod {
    /// Perturb along the per-dimension standard deviation of the cell.
    StdDev,
    /// Perturb along the principal axis of the cell covariance.
    #[default]
    Hyperplane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Distance {
    /// Mean absolute difference.
    #[default]
    Mae,
    /// Mean squared difference, for comparison runs only.
    SquaredEuclidean,
}

impl Distance {
    #[inline]
    pub fn between(self, a: &LpccVector, b: &LpccVector) -> f64 {
        match self {
            Distance::Mae => distance_mae(a, b),
            Distance::SquaredEuclidean => {
                a.0.iter()
                    .zip(&b.0)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    / DIM as f64
            }
        }
    }
}

/// `(1/12) sum |a_i - b_i|`.
#[inline]
pub fn distance_mae(a: &LpccVector, b: &LpccVector) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / DIM as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationResult {
    pub nearest_index: usize,
    pub distortion: f64,
}

/// A speaker's LPCC codebook with `2^size_bits` centroids.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearCodebook {
    centroids: Vec<LpccVector>,
    size_bits: u32,
    split_method: SplitMethod,
    distance: Distance,
    training_distortion: f64,
}

impl LinearCodebook {
    /// Builds a codebook from explicit centroids; their count must be a power
    /// of two.
    pub fn from_centroids(
        centroids: Vec<LpccVector>,
        split_method: SplitMethod,
        distance: Distance,
    ) -> Result<Self> {
        if centroids.is_empty() || !centroids.len().is_power_of_two() {
            return Err(Error::InvalidArgument(
                "codebook size must be a power of two",
            ));
        }
        Ok(Self {
            size_bits: centroids.len().trailing_zeros(),
            centroids,
            split_method,
            distance,
            training_distortion: 0.0,
        })
    }

    pub fn centroids(&self) -> &[LpccVector] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn size_bits(&self) -> u32 {
        self.size_bits
    }

    pub fn split_method(&self) -> SplitMethod {
        self.split_method
    }

    pub fn distance(&self) -> Distance {
        self.distance
    }

    /// Mean per-vector distortion on the training data at the end of design.
    pub fn training_distortion(&self) -> f64 {
        self.training_distortion
    }

    /// Nearest centroid; ties resolve to the lowest index.
    pub fn quantize(&self, v: &LpccVector) -> QuantizationResult {
        let mut best = QuantizationResult {
            nearest_index: 0,
            distortion: f64::INFINITY,
        };
        for (i, c) in self.centroids.iter().enumerate() {
            let d = self.distance.between(v, c);
            if d < best.distortion {
                best = QuantizationResult {
                    nearest_index: i,
                    distortion: d,
                };
            }
        }
        best
    }

    /// [`quantize`](Self::quantize), charging one unit per compared
    /// coefficient.
    pub fn quantize_counted(&self, v: &LpccVector, counter: &mut OpCounter) -> QuantizationResult {
        counter.add((self.centroids.len() * DIM) as u64);
        self.quantize(v)
    }

    /// Mean nearest-centroid distortion over `data`.
    pub fn mean_distortion(&self, data: &[LpccVector]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        data.iter()
            .map(|v| self.quantize(v).distortion)
            .sum::<f64>()
            / data.len() as f64
    }

    /// Nearest-centroid index of every vector.
    pub fn assign(&self, data: &[LpccVector]) -> Vec<usize> {
        data.iter()
            .map(|v| self.quantize(v).nearest_index)
            .collect()
    }
}

pub fn quantize(v: &LpccVector, cb: &LinearCodebook) -> QuantizationResult {
    cb.quantize(v)
}

/// The point minimizing the summed `distance` to `vectors`: per-dimension
/// median for MAE, mean for squared Euclidean.
pub fn centroid(vectors: &[LpccVector], distance: Distance) -> Result<LpccVector> {
    centroid_near(vectors, distance, None)
}

/// [`centroid`], except that under MAE a coordinate of `previous` lying in
/// the median interval of an even-sized cell is kept. Every point of that
/// interval is a minimizer; keeping the old one makes a Lloyd pass over an
/// unchanged partition return a bit-identical codebook.
fn centroid_near(
    vectors: &[LpccVector],
    distance: Distance,
    previous: Option<&LpccVector>,
) -> Result<LpccVector> {
    if vectors.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let mut out = [0.0; DIM];
    match distance {
        Distance::Mae => {
            let mut column = Vec::with_capacity(vectors.len());
            for (d, slot) in out.iter_mut().enumerate() {
                column.clear();
                column.extend(vectors.iter().map(|v| v.0[d]));
                column.sort_by(f64::total_cmp);
                let n = column.len();
                *slot = if n % 2 == 1 {
                    column[n / 2]
                } else {
                    let (lo, hi) = (column[n / 2 - 1], column[n / 2]);
                    match previous.map(|p| p.0[d]) {
                        Some(p) if lo <= p && p <= hi => p,
                        _ => 0.5 * (lo + hi),
                    }
                };
            }
        }
        Distance::SquaredEuclidean => {
            for v in vectors {
                out.iter_mut().zip(&v.0).for_each(|(o, x)| *o += x);
            }
            out.iter_mut().for_each(|o| *o /= vectors.len() as f64);
        }
    }
    Ok(LpccVector(out))
}

fn mean_of(vectors: &[LpccVector]) -> [f64; DIM] {
    let mut m = [0.0; DIM];
    for v in vectors {
        m.iter_mut().zip(&v.0).for_each(|(o, x)| *o += x);
    }
    m.iter_mut().for_each(|o| *o /= vectors.len() as f64);
    m
}

/// Per-dimension population standard deviation (two-pass).
pub fn cluster_stddev(cluster: &[LpccVector]) -> Result<[f64; DIM]> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let m = mean_of(cluster);
    let mut var = [0.0; DIM];
    for v in cluster {
        for d in 0..DIM {
            let e = v.0[d] - m[d];
            var[d] += e * e;
        }
    }
    Ok(var.map(|s| math::sqrt(s / cluster.len() as f64)))
}

fn stddev_offset(cluster: &[LpccVector]) -> Result<[f64; DIM]> {
    let sigma = cluster_stddev(cluster)?;
    Ok(sigma.map(|s| SPLIT_EPSILON * if s > 0.0 { s } else { DEGENERATE_SPREAD }))
}

fn hyperplane_offset(cluster: &[LpccVector]) -> Result<[f64; DIM]> {
    if cluster.len() < 2 {
        return stddev_offset(cluster);
    }
    let points: Vec<[f64; DIM]> = cluster.iter().map(|v| v.0).collect();
    let cov = linalg::covariance(&points, &mean_of(cluster));
    let (lambda, u) = linalg::dominant_eigen(&cov, DIM);
    if !(lambda > HYPERPLANE_MIN_EIGENVALUE) {
        return stddev_offset(cluster);
    }
    let scale = SPLIT_EPSILON * math::sqrt(lambda);
    let mut off = [0.0; DIM];
    off.iter_mut().zip(&u).for_each(|(o, x)| *o = scale * x);
    Ok(off)
}

fn split_offset(method: SplitMethod, cluster: &[LpccVector]) -> Result<[f64; DIM]> {
    match method {
        SplitMethod::StdDev => stddev_offset(cluster),
        SplitMethod::Hyperplane => hyperplane_offset(cluster),
    }
}

fn shifted(c: &LpccVector, off: &[f64; DIM], sign: f64) -> LpccVector {
    let mut out = c.0;
    out.iter_mut().zip(off).for_each(|(o, d)| *o += sign * d);
    LpccVector(out)
}

/// `centroid +/- 0.1 sigma`, with `sigma` the per-dimension standard
/// deviation of the cluster. Dimensions without spread use `1e-4` instead.
pub fn split_stddev(
    cluster: &[LpccVector],
    centroid: &LpccVector,
) -> Result<(LpccVector, LpccVector)> {
    let off = stddev_offset(cluster)?;
    Ok((shifted(centroid, &off, 1.0), shifted(centroid, &off, -1.0)))
}

/// `centroid +/- 0.1 sqrt(lambda_max) u`, with `u` the dominant eigenvector
/// of the cluster covariance (the normal of the splitting hyperplane). Falls
/// back to [`split_stddev`] for singleton clusters or a vanishing spread.
pub fn split_hyperplane(
    cluster: &[LpccVector],
    centroid: &LpccVector,
) -> Result<(LpccVector, LpccVector)> {
    let off = hyperplane_offset(cluster)?;
    Ok((shifted(centroid, &off, 1.0), shifted(centroid, &off, -1.0)))
}

fn members(data: &[LpccVector], assignment: &[usize], cells: usize) -> Vec<Vec<LpccVector>> {
    let mut out = vec![Vec::new(); cells];
    for (v, &i) in data.iter().zip(assignment) {
        out[i].push(*v);
    }
    out
}

/// One Lloyd pass: nearest-centroid assignment followed by centroid update.
///
/// A cell left without vectors is refilled from the most populated cell: that
/// cell keeps its centroid and the empty slot takes the `+` child of its
/// split. Returns the new codebook and its mean distortion on `data`, which
/// never exceeds the distortion of `cb`.
pub fn lloyd_iterate(cb: &LinearCodebook, data: &[LpccVector]) -> Result<(LinearCodebook, f64)> {
    if data.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    let cells = cb.len();
    let assignment = cb.assign(data);
    let mut groups = members(data, &assignment, cells);
    let mut counts: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut centroids = Vec::with_capacity(cells);
    for (g, prev) in groups.iter().zip(&cb.centroids) {
        centroids.push(if g.is_empty() {
            None
        } else {
            Some(centroid_near(g, cb.distance, Some(prev))?)
        });
    }
    for empty in 0..cells {
        if centroids[empty].is_some() {
            continue;
        }
        let donor = (0..cells)
            .filter(|&i| centroids[i].is_some())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .expect("data is nonempty, so some cell is populated");
        let base = centroids[donor].expect("donor is populated");
        let off = split_offset(cb.split_method, &groups[donor])?;
        centroids[empty] = Some(shifted(&base, &off, 1.0));
        let moved = counts[donor] / 2;
        counts[donor] -= moved;
        counts[empty] = moved;
        groups[empty] = groups[donor].clone();
        log::trace!("refilled empty cell {empty} from cell {donor}");
    }
    let next = LinearCodebook {
        centroids: centroids.into_iter().map(|c| c.expect("filled")).collect(),
        size_bits: cb.size_bits,
        split_method: cb.split_method,
        distance: cb.distance,
        training_distortion: 0.0,
    };
    let d = next.mean_distortion(data);
    Ok((
        LinearCodebook {
            training_distortion: d,
            ..next
        },
        d,
    ))
}

/// Knobs for codebook design.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VqConfig {
    pub size_bits: u32,
    pub split_method: SplitMethod,
    pub distance: Distance,
    /// Lloyd passes per codebook size stop once the relative distortion
    /// improvement falls below this.
    pub rel_tolerance: f64,
    pub max_lloyd_iters: usize,
}

impl VqConfig {
    pub fn new(size_bits: u32, split_method: SplitMethod) -> Self {
        Self {
            size_bits,
            split_method,
            distance: Distance::Mae,
            rel_tolerance: 1e-4,
            max_lloyd_iters: 50,
        }
    }
}

fn refine(mut cb: LinearCodebook, data: &[LpccVector], cfg: &VqConfig) -> Result<LinearCodebook> {
    let mut prev = cb.mean_distortion(data);
    cb.training_distortion = prev;
    for _ in 0..cfg.max_lloyd_iters {
        let (next, d) = lloyd_iterate(&cb, data)?;
        cb = next;
        if !(prev > 0.0) || (prev - d) / prev < cfg.rel_tolerance {
            break;
        }
        prev = d;
    }
    // Make sure every cell ends up owning training vectors.
    for _ in 0..cb.len() + 8 {
        let assignment = cb.assign(data);
        let mut used = vec![false; cb.len()];
        assignment.iter().for_each(|&i| used[i] = true);
        if used.iter().all(|&u| u) {
            break;
        }
        cb = lloyd_iterate(&cb, data)?.0;
    }
    Ok(cb)
}

fn split_all(cb: &LinearCodebook, data: &[LpccVector], one_sided: bool) -> Result<LinearCodebook> {
    let groups = members(data, &cb.assign(data), cb.len());
    let mut centroids = Vec::with_capacity(2 * cb.len());
    for (c, g) in cb.centroids.iter().zip(&groups) {
        // An empty cell still splits, along the degenerate spread.
        let g: &[LpccVector] = if g.is_empty() {
            core::slice::from_ref(c)
        } else {
            g
        };
        let off = split_offset(cb.split_method, g)?;
        if one_sided {
            centroids.push(*c);
        } else {
            centroids.push(shifted(c, &off, -1.0));
        }
        centroids.push(shifted(c, &off, 1.0));
    }
    Ok(LinearCodebook {
        centroids,
        size_bits: cb.size_bits + 1,
        split_method: cb.split_method,
        distance: cb.distance,
        training_distortion: 0.0,
    })
}

/// Designs codebooks of every size `2^0 ..= 2^size_bits` along one splitting
/// run. Element `b` of the result has `2^b` centroids.
pub fn train_codebook_stages(data: &[LpccVector], cfg: &VqConfig) -> Result<Vec<LinearCodebook>> {
    let need = 1usize << cfg.size_bits;
    if data.len() < need {
        return Err(Error::InsufficientData {
            have: data.len(),
            need,
        });
    }
    let root = LinearCodebook {
        centroids: vec![centroid(data, cfg.distance)?],
        size_bits: 0,
        split_method: cfg.split_method,
        distance: cfg.distance,
        training_distortion: 0.0,
    };
    let d0 = root.mean_distortion(data);
    let mut stages = vec![LinearCodebook {
        training_distortion: d0,
        ..root
    }];
    for _ in 0..cfg.size_bits {
        let prev = stages.last().expect("nonempty");
        let mut next = refine(split_all(prev, data, false)?, data, cfg)?;
        if next.training_distortion > prev.training_distortion {
            // Keeping the parent centroids guarantees no loss.
            next = refine(split_all(prev, data, true)?, data, cfg)?;
        }
        stages.push(next);
    }
    Ok(stages)
}

/// Splitting-algorithm codebook with `2^size_bits` centroids.
pub fn train_codebook(
    data: &[LpccVector],
    size_bits: u32,
    split_method: SplitMethod,
) -> Result<LinearCodebook> {
    train_with(data, &VqConfig::new(size_bits, split_method))
}

pub fn train_with(data: &[LpccVector], cfg: &VqConfig) -> Result<LinearCodebook> {
    Ok(train_codebook_stages(data, cfg)?
        .pop()
        .expect("at least the root stage"))
}
