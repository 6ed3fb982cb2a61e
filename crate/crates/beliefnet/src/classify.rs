//! Information measures of signal structures and agent-type classification.
//!
//! For a world signal structure `g` and private structure `L` with columns
//! `l^m`, the two measures driving everything are (natural log throughout)
//!
//! ```text
//! h(m, r) = sum_s g(s) * ln( l^m(s) / l^r(s) )
//! k(m, r) = ln( sum_s g(s) * l^m(s) / l^r(s) )
//! ```
//!
//! `h` is the expected per-observation log evidence for state `m` over the
//! real state `r`; `k` bounds it from above (Jensen). An agent is
//! *conservative* when `k < 0` for every alternative state, *radical* when
//! `h < 0` everywhere but `k > 0` somewhere, and *negative* when `h > 0` for
//! some alternative. Structures whose measures vanish within tolerance are
//! reported as [`AgentType::Boundary`] rather than rejected: the two states
//! involved are observationally equivalent for that agent.

use serde::{Deserialize, Serialize};

use crate::core::{AgentType, PrivateSignalStructure, WorldSignalStructure};
use crate::{Error, Result};

/// Default half-width of the boundary band around `h = 0` and `k = 0`.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Relative entropy (KL divergence) `D(p || q) = sum_j p_j ln(p_j / q_j)` in
/// nats. Both arguments must have identical support with all entries positive.
pub fn relative_entropy(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Domain(format!(
            "length mismatch: p has {} entries, q has {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::Domain("distributions must be non-empty".into()));
    }
    for (j, (&pj, &qj)) in p.iter().zip(q).enumerate() {
        if !(pj > 0.0 && pj.is_finite()) || !(qj > 0.0 && qj.is_finite()) {
            return Err(Error::Domain(format!(
                "non-positive entry at index {j}: p={pj}, q={qj}"
            )));
        }
    }
    Ok(p.iter()
        .zip(q)
        .map(|(&pj, &qj)| pj * (pj.ln() - qj.ln()))
        .sum())
}

fn check_state_pair(l: &PrivateSignalStructure, m: usize, r: usize) -> Result<()> {
    if m == r {
        return Err(Error::Domain(format!(
            "states m and r must differ (both {m})"
        )));
    }
    if m >= l.state_count() || r >= l.state_count() {
        return Err(Error::Domain(format!(
            "state pair ({m}, {r}) out of range for {} states",
            l.state_count()
        )));
    }
    Ok(())
}

fn check_dims(g: &WorldSignalStructure, l: &PrivateSignalStructure) -> Result<()> {
    if g.len() != l.signal_count() {
        return Err(Error::Domain(format!(
            "signal space mismatch: world has {} signals, structure has {}",
            g.len(),
            l.signal_count()
        )));
    }
    Ok(())
}

/// Expected log-likelihood ratio `h(m, r)` in nats.
///
/// Computed as `sum_s g(s) * (ln l^m(s) - ln l^r(s))`, which makes the
/// antisymmetry `h(m, r) = -h(r, m)` exact in floating point.
pub fn h_g(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    m: usize,
    r: usize,
) -> Result<f64> {
    check_state_pair(l, m, r)?;
    check_dims(g, l)?;
    Ok(g.probabilities()
        .iter()
        .enumerate()
        .map(|(s, &gs)| gs * (l.likelihood(s, m).ln() - l.likelihood(s, r).ln()))
        .sum())
}

/// Log expected likelihood ratio `k(m, r) = ln(sum_s g(s) l^m(s)/l^r(s))` in
/// nats. Always `k >= h` by Jensen's inequality.
pub fn k_g(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    m: usize,
    r: usize,
) -> Result<f64> {
    check_state_pair(l, m, r)?;
    check_dims(g, l)?;
    let expectation: f64 = g
        .probabilities()
        .iter()
        .enumerate()
        .map(|(s, &gs)| gs * l.likelihood(s, m) / l.likelihood(s, r))
        .sum();
    Ok(expectation.ln())
}

/// Classifies a structure against the real state `r`.
///
/// Quantifier structure, with `tol` delimiting the boundary band:
///
/// 1. any `|h(m, r)| <= tol` → [`AgentType::Boundary`];
/// 2. otherwise any `h(m, r) > tol` → [`AgentType::Negative`];
/// 3. otherwise (all `h < -tol`) any `|k(m, r)| <= tol` → [`AgentType::Boundary`];
/// 4. otherwise all `k < -tol` → [`AgentType::Conservative`], else
///    [`AgentType::Radical`].
pub fn classify_structure(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    r: usize,
    tol: f64,
) -> Result<AgentType> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Parameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    check_dims(g, l)?;
    if r >= l.state_count() {
        return Err(Error::Domain(format!(
            "real state {r} out of range for {} states",
            l.state_count()
        )));
    }
    let mut any_k_positive = false;
    let mut k_in_band = false;
    for m in (0..l.state_count()).filter(|&m| m != r) {
        let h = h_g(g, l, m, r)?;
        if h.abs() <= tol {
            return Ok(AgentType::Boundary);
        }
        if h > tol {
            return Ok(AgentType::Negative);
        }
        let k = k_g(g, l, m, r)?;
        if k.abs() <= tol {
            k_in_band = true;
        } else if k > tol {
            any_k_positive = true;
        }
    }
    if k_in_band {
        return Ok(AgentType::Boundary);
    }
    Ok(if any_k_positive {
        AgentType::Radical
    } else {
        AgentType::Conservative
    })
}

/// The alternative state with the largest `k(m, r)`: the state hardest to
/// rule out from the agent's point of view. Diagnostic companion to
/// [`classify_structure`].
pub fn most_indistinguishable_state(
    g: &WorldSignalStructure,
    l: &PrivateSignalStructure,
    r: usize,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for m in (0..l.state_count()).filter(|&m| m != r) {
        let k = k_g(g, l, m, r)?;
        if best.is_none_or(|(_, kb)| k > kb) {
            best = Some((m, k));
        }
    }
    best.map(|(m, _)| m)
        .ok_or_else(|| Error::Domain("no alternative state".into()))
}

/// A uniform lattice over one axis of the (α, β) square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min > 0.0 && max < 1.0 && min <= max) {
            return Err(Error::Domain(format!(
                "grid bounds [{min}, {max}] must satisfy 0 < min <= max < 1"
            )));
        }
        if count == 0 || (count == 1 && min != max) {
            return Err(Error::Domain(format!(
                "grid count {count} incompatible with bounds [{min}, {max}]"
            )));
        }
        Ok(GridSpec { min, max, count })
    }

    /// Lattice point `i` along this axis.
    pub fn point(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.point(i))
    }
}

/// One evaluated lattice cell of a region sweep.
#[derive(Clone, Copy, Debug)]
pub struct RegionCell {
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub k: f64,
    pub agent_type: AgentType,
}

/// Classification of every (α, β) lattice point for a fixed binary world
/// structure. Cells are stored row-major: α varies in the outer loop.
#[derive(Clone, Debug)]
pub struct RegionGrid {
    pub spec: GridSpec,
    pub cells: Vec<RegionCell>,
}

impl RegionGrid {
    /// Number of cells with the given type.
    pub fn count_of(&self, agent_type: AgentType) -> usize {
        self.cells
            .iter()
            .filter(|c| c.agent_type == agent_type)
            .count()
    }

    /// The cell whose (α, β) lattice point is closest to the query point.
    pub fn nearest_cell(&self, alpha: f64, beta: f64) -> &RegionCell {
        self.cells
            .iter()
            .min_by(|a, b| {
                let da = (a.alpha - alpha).powi(2) + (a.beta - beta).powi(2);
                let db = (b.alpha - alpha).powi(2) + (b.beta - beta).powi(2);
                da.partial_cmp(&db).unwrap()
            })
            .expect("grid has at least one cell")
    }
}

/// Evaluates `h`, `k` and the classification at every (α, β) lattice point
/// against a binary world structure. State 0 is the real state; `h` and `k`
/// are reported for the alternative state 1.
pub fn region_sweep(g: &WorldSignalStructure, spec: GridSpec) -> Result<RegionGrid> {
    if g.len() != 2 {
        return Err(Error::Domain(format!(
            "region sweep is defined for binary signal spaces (got {} signals)",
            g.len()
        )));
    }
    let mut cells = Vec::with_capacity(spec.count * spec.count);
    for ai in 0..spec.count {
        let alpha = spec.point(ai);
        for bi in 0..spec.count {
            let beta = spec.point(bi);
            let l = crate::core::make_binary_structure(alpha, beta)?;
            let h = h_g(g, &l, 1, 0)?;
            let k = k_g(g, &l, 1, 0)?;
            let agent_type = classify_structure(g, &l, 0, DEFAULT_CLASSIFY_TOL)?;
            cells.push(RegionCell {
                alpha,
                beta,
                h,
                k,
                agent_type,
            });
        }
    }
    Ok(RegionGrid { spec, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::make_binary_structure;

    fn world08() -> WorldSignalStructure {
        WorldSignalStructure::binary(0.8).unwrap()
    }

    #[test]
    fn relative_entropy_identity_is_zero() {
        let p = [0.8, 0.2];
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn relative_entropy_hand_values() {
        // sum_j p_j ln(p_j/q_j), evaluated by hand
        let d = relative_entropy(&[0.8, 0.2], &[0.6, 0.4]).unwrap();
        let expect = 0.8 * (0.8f64 / 0.6).ln() + 0.2 * (0.2f64 / 0.4).ln();
        assert!((d - expect).abs() < 1e-15);
        assert!((d - 0.09151).abs() < 1e-5);

        let d = relative_entropy(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((d - 0.14384).abs() < 1e-5);
    }

    #[test]
    fn relative_entropy_rejects_bad_input() {
        assert!(relative_entropy(&[1.0], &[0.5, 0.5]).is_err());
        assert!(relative_entropy(&[1.0, 0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn h_matches_constant_table() {
        let g = world08();
        let l1 = make_binary_structure(0.6, 0.4).unwrap();
        let l2 = make_binary_structure(0.9, 0.1).unwrap();
        assert!((h_g(&g, &l1, 1, 0).unwrap() - (-0.2433)).abs() < 5e-5);
        assert!((h_g(&g, &l2, 1, 0).unwrap() - (-1.3183)).abs() < 5e-5);
    }

    #[test]
    fn h_zero_for_observationally_equivalent_columns() {
        let g = world08();
        let l = make_binary_structure(0.5, 0.5).unwrap();
        assert_eq!(h_g(&g, &l, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn h_rejects_equal_states() {
        let g = world08();
        let l = make_binary_structure(0.6, 0.4).unwrap();
        assert!(h_g(&g, &l, 1, 1).is_err());
        assert!(k_g(&g, &l, 0, 0).is_err());
    }

    #[test]
    fn k_matches_constant_table() {
        let g = world08();
        for ((a, b), expect) in [
            ((0.6, 0.4), -0.1823),
            ((0.9, 0.1), 0.6360),
            ((0.4, 0.6), 0.2877),
        ] {
            let l = make_binary_structure(a, b).unwrap();
            assert!((k_g(&g, &l, 1, 0).unwrap() - expect).abs() < 5e-5);
        }
    }

    #[test]
    fn classification_of_reference_structures() {
        let g = world08();
        let cases = [
            ((0.6, 0.4), AgentType::Conservative),
            ((0.9, 0.1), AgentType::Radical),
            ((0.4, 0.6), AgentType::Negative),
            ((0.5, 0.5), AgentType::Boundary),
            ((0.3, 0.3), AgentType::Boundary),
        ];
        for ((a, b), expect) in cases {
            let l = make_binary_structure(a, b).unwrap();
            assert_eq!(
                classify_structure(&g, &l, 0, DEFAULT_CLASSIFY_TOL).unwrap(),
                expect,
                "({a}, {b})"
            );
        }
    }

    #[test]
    fn most_indistinguishable_state_picks_argmax_k() {
        // three states: column 2 is closer to column 0 than column 1 is
        let g = WorldSignalStructure::new(vec![0.8, 0.2]).unwrap();
        let l = PrivateSignalStructure::from_columns(vec![
            vec![0.6, 0.4],
            vec![0.1, 0.9],
            vec![0.55, 0.45],
        ])
        .unwrap();
        assert_eq!(most_indistinguishable_state(&g, &l, 0).unwrap(), 2);
    }

    #[test]
    fn grid_spec_lattice() {
        let spec = GridSpec::new(0.02, 0.98, 25).unwrap();
        let pts: Vec<f64> = spec.points().collect();
        assert_eq!(pts.len(), 25);
        assert_eq!(pts[0], 0.02);
        assert_eq!(pts[24], 0.98);
        assert!((pts[1] - 0.06).abs() < 1e-15);
        assert!(GridSpec::new(0.0, 0.98, 25).is_err());
        assert!(GridSpec::new(0.02, 1.0, 25).is_err());
    }

    #[test]
    fn single_cell_grid_at_center_is_boundary() {
        let g = world08();
        let grid = region_sweep(&g, GridSpec::new(0.5, 0.5, 1).unwrap()).unwrap();
        assert_eq!(grid.cells.len(), 1);
        assert_eq!(grid.cells[0].agent_type, AgentType::Boundary);
    }

    #[test]
    fn region_sweep_is_deterministic_and_complete() {
        let g = world08();
        let spec = GridSpec::new(0.02, 0.98, 25).unwrap();
        let a = region_sweep(&g, spec).unwrap();
        let b = region_sweep(&g, spec).unwrap();
        assert_eq!(a.cells.len(), 625);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.h.to_bits(), cb.h.to_bits());
            assert_eq!(ca.k.to_bits(), cb.k.to_bits());
            assert_eq!(ca.agent_type, cb.agent_type);
        }
        assert!(a.cells.iter().all(|c| c.h.is_finite() && c.k.is_finite()));
        // the lattice point nearest (0.6, 0.4) lies in the conservative region
        let cell = a.nearest_cell(0.6, 0.4);
        assert_eq!(cell.agent_type, AgentType::Conservative);
    }
}
