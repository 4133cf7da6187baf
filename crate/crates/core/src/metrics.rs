//! Sum rate, symbol error rate, KL divergence and the SM-over-IA mean-SINR
//! ratio with its unity contour.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::ExpDist;
use crate::error::{Error, Result};
use crate::special;

/// `E{log2(1 + g)}` for `g ~ Exp(mean)`, via `e^{1/m} E1(1/m) / ln 2`.
pub fn rate_exp(mean: f64) -> f64 {
    special::exp_e1_scaled(1.0 / mean) / std::f64::consts::LN_2
}

/// The same expectation by quadrature; an oracle for [`rate_exp`].
pub fn rate_exp_quadrature(mean: f64) -> f64 {
    let dist = ExpDist::new(mean).expect("positive mean");
    special::integrate_half_line(|x| (1.0 + x).log2() * dist.pdf(x), mean, 1e-13)
}

/// Sum over streams of `E{log2(1 + g)}`.
pub fn sum_rate(dists: &[ExpDist]) -> f64 {
    dists.iter().map(|d| rate_exp(d.mean())).sum()
}

/// Sample mean of `log2(1 + g)`.
pub fn empirical_rate(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().map(|g| g.ln_1p()).sum::<f64>() / std::f64::consts::LN_2 / samples.len() as f64
}

/// A modulation through its AWGN symbol error probability.
#[derive(Clone)]
pub struct ModulationModel {
    pub name: String,
    pub awgn_ser: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ModulationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModulationModel").field("name", &self.name).finish_non_exhaustive()
    }
}

impl ModulationModel {
    pub fn custom(name: impl Into<String>, awgn_ser: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), awgn_ser: Arc::new(awgn_ser) }
    }

    /// `Q(sqrt(2 g))`.
    pub fn bpsk() -> Self {
        Self::custom("bpsk", |g: f64| special::q_function((2.0 * g.max(0.0)).sqrt()))
    }

    /// Gray QPSK, `2 Q(sqrt g) - Q(sqrt g)^2`.
    pub fn qpsk() -> Self {
        Self::custom("qpsk", |g: f64| {
            let q = special::q_function(g.max(0.0).sqrt());
            2.0 * q - q * q
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "bpsk" => Ok(Self::bpsk()),
            "qpsk" => Ok(Self::qpsk()),
            other => Err(Error::InvalidArgument(format!("unknown modulation `{other}`"))),
        }
    }

    pub fn awgn(&self, g: f64) -> f64 {
        (self.awgn_ser)(g)
    }
}

/// Average SER over an exponential SINR law, by quadrature.
pub fn ser(dist: &ExpDist, modulation: &ModulationModel) -> f64 {
    special::integrate_half_line(|x| modulation.awgn(x) * dist.pdf(x), dist.mean(), 1e-14)
}

/// BPSK over an exponential law in closed form, `0.5 (1 - sqrt(m / (1 + m)))`.
pub fn ser_bpsk_closed(mean: f64) -> f64 {
    0.5 * (1.0 - (mean / (1.0 + mean)).sqrt())
}

pub fn empirical_ser(samples: &[f64], modulation: &ModulationModel) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().map(|&g| modulation.awgn(g)).sum::<f64>() / samples.len() as f64
}

pub const DEFAULT_KLD_BINS: usize = 100;

/// `D(empirical || dist)` on a histogram.
///
/// The support is `[0, q]` with `q` the empirical 99.9th percentile (nearest
/// rank), split into `bins` equal cells. Both the empirical and the analytic
/// masses are renormalized on that support; cells with no samples contribute
/// nothing.
pub fn kl_divergence(samples: &[f64], dist: &ExpDist, bins: usize) -> Result<f64> {
    if samples.len() < 1000 {
        return Err(Error::InvalidArgument(format!("{} samples; at least 1000 needed", samples.len())));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.999 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let top = sorted[rank - 1];
    if !(top > 0.0) {
        return Err(Error::Degenerate("99.9th percentile is not positive".into()));
    }
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut inside = 0usize;
    for &x in sorted.iter().take_while(|&&x| x <= top) {
        if x < 0.0 {
            continue;
        }
        counts[((x / width) as usize).min(bins - 1)] += 1;
        inside += 1;
    }
    let total_mass = dist.cdf(top);
    let mut kld = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let p = c as f64 / inside as f64;
        let lo = j as f64 * width;
        let hi = if j + 1 == bins { top } else { (j + 1) as f64 * width };
        let q = dist.mass(lo, hi) / total_mass;
        kld += p * (p / q).ln();
    }
    Ok(kld)
}

/// One-sample Kolmogorov-Smirnov statistic against an exponential law.
pub fn ks_statistic(samples: &[f64], dist: &ExpDist) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Everything the SM-over-IA mean-SINR ratio needs at one operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioInputs {
    pub beta: f64,
    pub gamma: f64,
    pub antennas: usize,
    pub streams: usize,
    /// `sigma^2` of the IA stream.
    pub sigma2_ia: f64,
    pub cal_i: f64,
    /// `[Rt^{-1}]_nn` of the SM stream.
    pub sigma2_sm: f64,
    pub trace_rt: f64,
}

/// `sigma2_ia d (beta^2 I + 1/gamma) / (sigma2_sm (beta^2 tr(Rt) + N/gamma))`,
/// the SM mean divided by the IA mean. Above 1, SM has the larger mean SINR.
pub fn mean_sinr_ratio(r: &RatioInputs) -> f64 {
    let b2 = r.beta * r.beta;
    r.sigma2_ia * r.streams as f64 * (b2 * r.cal_i + 1.0 / r.gamma)
        / (r.sigma2_sm * (b2 * r.trace_rt + r.antennas as f64 / r.gamma))
}

/// A piecewise-linear curve in the `(x, y)` plane.
pub type Polyline = Vec<(f64, f64)>;

/// Level set of `z` over the grid `xs x ys` (`z[ix][iy]`) by marching squares
/// with linear interpolation along cell edges. Saddle cells are resolved with
/// the cell-centre average.
pub fn contour_lines(xs: &[f64], ys: &[f64], z: &[Vec<f64>], level: f64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    // Edge ids: horizontal (ix, iy)-(ix+1, iy) -> 2 * (ix * ny + iy),
    // vertical (ix, iy)-(ix, iy+1) -> 2 * (ix * ny + iy) + 1.
    let h_edge = |ix: usize, iy: usize| 2 * (ix * ny + iy);
    let v_edge = |ix: usize, iy: usize| 2 * (ix * ny + iy) + 1;
    let above = |ix: usize, iy: usize| z[ix][iy] >= level;
    let point = |edge: usize| -> (f64, f64) {
        let base = edge / 2;
        let (ix, iy) = (base / ny, base % ny);
        let (jx, jy) = if edge % 2 == 0 { (ix + 1, iy) } else { (ix, iy + 1) };
        let (a, b) = (z[ix][iy], z[jx][jy]);
        let t = if b == a { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
        (xs[ix] + t * (xs[jx] - xs[ix]), ys[iy] + t * (ys[jy] - ys[iy]))
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for ix in 0..nx - 1 {
        for iy in 0..ny - 1 {
            // corners counter-clockwise from (ix, iy); edges between them
            let corners = [above(ix, iy), above(ix + 1, iy), above(ix + 1, iy + 1), above(ix, iy + 1)];
            let edges = [h_edge(ix, iy), v_edge(ix + 1, iy), h_edge(ix, iy + 1), v_edge(ix, iy)];
            let crossing: Vec<usize> = (0..4).filter(|&e| corners[e] != corners[(e + 1) % 4]).map(|e| edges[e]).collect();
            match crossing.len() {
                2 => segments.push((crossing[0], crossing[1])),
                4 => {
                    let centre = (z[ix][iy] + z[ix + 1][iy] + z[ix + 1][iy + 1] + z[ix][iy + 1]) / 4.0;
                    // pair each crossing edge with its neighbour so the
                    // centre's side stays connected
                    if (centre >= level) == corners[0] {
                        segments.push((crossing[0], crossing[1]));
                        segments.push((crossing[2], crossing[3]));
                    } else {
                        segments.push((crossing[3], crossing[0]));
                        segments.push((crossing[1], crossing[2]));
                    }
                }
                _ => {}
            }
        }
    }
    chain(segments).into_iter().map(|ids| ids.into_iter().map(point).collect()).collect()
}

/// Joins segments that share endpoints into maximal chains.
fn chain(segments: Vec<(usize, usize)>) -> Vec<Vec<usize>> {
    use std::collections::BTreeMap;
    let mut adjacent: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacent.entry(a).or_default().push(s);
        adjacent.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let other = |s: usize, node: usize| if segments[s].0 == node { segments[s].1 } else { segments[s].0 };
    let walk = |start: usize, first: usize, used: &mut Vec<bool>| {
        let mut path = vec![start];
        let mut node = start;
        let mut seg = Some(first);
        while let Some(s) = seg {
            used[s] = true;
            node = other(s, node);
            path.push(node);
            seg = adjacent[&node].iter().copied().find(|&t| !used[t]);
        }
        path
    };

    let mut lines = Vec::new();
    // open chains first, starting from endpoints of degree one
    let ends: Vec<usize> = adjacent.iter().filter(|(_, v)| v.len() == 1).map(|(&k, _)| k).collect();
    for node in ends {
        if let Some(&s) = adjacent[&node].first() {
            if !used[s] {
                lines.push(walk(node, s, &mut used));
            }
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(segments[s].0, s, &mut used));
        }
    }
    lines
}

/// Whether any polyline enters the box `centre +/- half`.
pub fn passes_near(lines: &[Polyline], centre: (f64, f64), half: (f64, f64)) -> bool {
    let (x0, x1) = (centre.0 - half.0, centre.0 + half.0);
    let (y0, y1) = (centre.1 - half.1, centre.1 + half.1);
    lines.iter().any(|line| {
        if line.len() == 1 {
            let (x, y) = line[0];
            return (x0..=x1).contains(&x) && (y0..=y1).contains(&y);
        }
        line.windows(2).any(|w| segment_hits_box(w[0], w[1], (x0, x1), (y0, y1)))
    })
}

/// Liang-Barsky clip test.
fn segment_hits_box(a: (f64, f64), b: (f64, f64), xr: (f64, f64), yr: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, a.0 - xr.0), (dx, xr.1 - a.0), (-dy, a.1 - yr.0), (dy, yr.1 - a.1)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    t0 <= t1
}

/// Distance from `centre` to the nearest point on any polyline, with each axis
/// divided by the matching entry of `scale`.
pub fn scaled_distance(lines: &[Polyline], centre: (f64, f64), scale: (f64, f64)) -> f64 {
    let to_unit = |p: (f64, f64)| ((p.0 - centre.0) / scale.0, (p.1 - centre.1) / scale.1);
    let mut best = f64::INFINITY;
    for line in lines {
        for (i, &p) in line.iter().enumerate() {
            let a = to_unit(p);
            best = best.min(a.0.hypot(a.1));
            if let Some(&q) = line.get(i + 1) {
                let b = to_unit(q);
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let len2 = dx * dx + dy * dy;
                if len2 > 0.0 {
                    let t = (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0);
                    best = best.min((a.0 + t * dx).hypot(a.1 + t * dy));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mean_rate() {
        assert!((rate_exp(1.0) - 0.860_347_382_270_887).abs() < 1e-12);
        assert!((rate_exp(1.0) - rate_exp_quadrature(1.0)).abs() < 1e-10);
        assert!(rate_exp(1e-9) < 1e-8);
    }

    #[test]
    fn bpsk_unit_mean() {
        let e = ExpDist::new(1.0).unwrap();
        assert!((ser_bpsk_closed(1.0) - 0.146_446_609).abs() < 1e-9);
        assert!((ser(&e, &ModulationModel::bpsk()) - ser_bpsk_closed(1.0)).abs() < 1e-10);
        assert!((ser_bpsk_closed(1e-12) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn kld_needs_samples() {
        let e = ExpDist::new(1.0).unwrap();
        assert!(kl_divergence(&[1.0; 10], &e, 100).is_err());
    }

    #[test]
    fn identity_ratio_is_d_over_n() {
        let r = RatioInputs {
            beta: 0.0,
            gamma: 100.0,
            antennas: 2,
            streams: 1,
            sigma2_ia: 1.0,
            cal_i: 3.0,
            sigma2_sm: 1.0,
            trace_rt: 2.0,
        };
        assert!((mean_sinr_ratio(&r) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_grid_has_no_contour() {
        let xs = [0.0, 1.0, 2.0];
        let z = vec![vec![2.0; 3]; 3];
        assert!(contour_lines(&xs, &xs, &z, 1.0).is_empty());
    }

    #[test]
    fn linear_ramp_gives_one_straight_line() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        // z = x, level 1.5 -> vertical line x = 1.5
        let z: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x; 5]).collect();
        let lines = contour_lines(&xs, &xs, &z, 1.5);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 5);
        assert!(lines[0].iter().all(|p| (p.0 - 1.5).abs() < 1e-12));
        assert!(passes_near(&lines, (1.6, 2.0), (0.2, 0.1)));
        assert!(!passes_near(&lines, (3.0, 2.0), (0.2, 0.1)));
        assert!((scaled_distance(&lines, (2.0, 2.0), (0.5, 1.0)) - 1.0).abs() < 1e-12);
    }
}
