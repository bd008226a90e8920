//! Pixel arrays and fluid antenna systems as discrete state selection.
//!
//! Each analog feed drives one subpanel of radiating elements and selects one
//! state from a finite dictionary of excitation patterns. Selection is
//! captured by a block-diagonal one-hot matrix; per-state realized
//! efficiencies carry the mismatch and switch losses that the unit-norm
//! patterns deliberately exclude.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frob_norm_sq, CMat, CVec};
use crate::model::{ChannelTensor, FrontEnd};

/// Dictionary for one feed: unit-norm excitation patterns per state, the
/// admissible state subset, and realized efficiencies.
#[derive(Debug, Clone)]
pub struct FeedDictionary {
    patterns: CMat,
    admissible: Vec<usize>,
    efficiencies: Vec<f64>,
}

impl FeedDictionary {
    pub fn new(patterns: CMat, admissible: Vec<usize>, efficiencies: Vec<f64>) -> Result<Self> {
        let n_sub = patterns.ncols();
        if n_sub == 0 || patterns.nrows() == 0 {
            return Err(Error::EmptyInput("feed dictionary".into()));
        }
        if efficiencies.len() != n_sub {
            return Err(Error::DimensionMismatch(format!(
                "{} efficiencies for {} states",
                efficiencies.len(),
                n_sub
            )));
        }
        if efficiencies.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::InvalidParameter(
                "state efficiencies must lie in (0, 1]".into(),
            ));
        }
        let mut admissible = admissible;
        admissible.sort_unstable();
        admissible.dedup();
        if admissible.is_empty() || admissible.iter().any(|&n| n >= n_sub) {
            return Err(Error::InvalidParameter(
                "admissible state set must be a nonempty subset of the state range".into(),
            ));
        }
        for n in 0..n_sub {
            let norm_sq: f64 = patterns.column(n).iter().map(|z| z.norm_sqr()).sum();
            if (norm_sq - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "pattern column {n} has norm^2 = {norm_sq}, expected unit norm"
                )));
            }
        }
        Ok(Self {
            patterns,
            admissible,
            efficiencies,
        })
    }

    /// Binary on/off activation patterns, normalized per state.
    pub fn from_binary_patterns(patterns: &[Vec<bool>], efficiencies: Vec<f64>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::EmptyInput("binary pattern list".into()));
        }
        let n_tx = patterns[0].len();
        let mut m = CMat::zeros(n_tx, patterns.len());
        for (n, pat) in patterns.iter().enumerate() {
            if pat.len() != n_tx {
                return Err(Error::DimensionMismatch(format!(
                    "pattern {n} has {} elements, expected {n_tx}",
                    pat.len()
                )));
            }
            let active = pat.iter().filter(|&&b| b).count();
            if active == 0 {
                return Err(Error::InvalidParameter(format!(
                    "pattern {n} activates no elements"
                )));
            }
            let w = 1.0 / (active as f64).sqrt();
            for (e, &b) in pat.iter().enumerate() {
                if b {
                    m[(e, n)] = Complex64::new(w, 0.0);
                }
            }
        }
        let n_states = patterns.len();
        Self::new(m, (0..n_states).collect(), efficiencies)
    }

    pub fn num_states(&self) -> usize {
        self.patterns.ncols()
    }

    pub fn num_elements(&self) -> usize {
        self.patterns.nrows()
    }

    pub fn pattern(&self, state: usize) -> CVec {
        CVec::from_iterator(self.num_elements(), self.patterns.column(state).iter().cloned())
    }

    pub fn admissible(&self) -> &[usize] {
        &self.admissible
    }

    pub fn efficiency(&self, state: usize) -> f64 {
        self.efficiencies[state]
    }
}

/// Per-feed dictionaries of a selection-based front end.
#[derive(Debug, Clone)]
pub struct StateDictionary {
    feeds: Vec<FeedDictionary>,
}

impl StateDictionary {
    pub fn new(feeds: Vec<FeedDictionary>) -> Result<Self> {
        if feeds.is_empty() {
            return Err(Error::EmptyInput("state dictionary".into()));
        }
        let n_sub = feeds[0].num_states();
        if feeds.iter().any(|f| f.num_states() != n_sub) {
            return Err(Error::DimensionMismatch(
                "all feeds must share the same state count".into(),
            ));
        }
        Ok(Self { feeds })
    }

    /// Parse the tabular dictionary format with header
    /// `feed,state,element,re,im,eta`. Lines starting with `#` are ignored.
    pub fn parse_table(text: &str) -> Result<Self> {
        use std::collections::BTreeMap;
        let mut rows: Vec<(usize, usize, usize, f64, f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("feed") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 6 {
                return Err(Error::InvalidParameter(format!(
                    "dictionary line {}: expected 6 fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse_usize = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::InvalidParameter(format!(
                        "dictionary line {}: invalid {what} '{s}'",
                        lineno + 1
                    ))
                })
            };
            let parse_f64 = |s: &str, what: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!(
                        "dictionary line {}: invalid {what} '{s}'",
                        lineno + 1
                    ))
                })
            };
            rows.push((
                parse_usize(fields[0], "feed")?,
                parse_usize(fields[1], "state")?,
                parse_usize(fields[2], "element")?,
                parse_f64(fields[3], "re")?,
                parse_f64(fields[4], "im")?,
                parse_f64(fields[5], "eta")?,
            ));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("dictionary table".into()));
        }
        let mut per_feed: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for &(f, s, e, ..) in &rows {
            let entry = per_feed.entry(f).or_insert((0, 0));
            entry.0 = entry.0.max(s + 1);
            entry.1 = entry.1.max(e + 1);
        }
        let mut feeds = Vec::new();
        for (&feed, &(n_states, n_elems)) in &per_feed {
            let mut patterns = CMat::zeros(n_elems, n_states);
            let mut etas = vec![None::<f64>; n_states];
            for &(_, s, e, re, im, eta) in rows.iter().filter(|r| r.0 == feed) {
                patterns[(e, s)] = Complex64::new(re, im);
                match etas[s] {
                    None => etas[s] = Some(eta),
                    Some(prev) if (prev - eta).abs() > 1e-12 => {
                        return Err(Error::InvalidParameter(format!(
                            "inconsistent eta for feed {feed} state {s}: {prev} vs {eta}"
                        )));
                    }
                    _ => {}
                }
            }
            let etas: Vec<f64> = etas
                .into_iter()
                .enumerate()
                .map(|(s, e)| {
                    e.ok_or_else(|| {
                        Error::InvalidParameter(format!("feed {feed} state {s} missing from table"))
                    })
                })
                .collect::<Result<_>>()?;
            feeds.push(FeedDictionary::new(patterns, (0..n_states).collect(), etas)?);
        }
        Self::new(feeds)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_table(&text)
    }

    pub fn num_feeds(&self) -> usize {
        self.feeds.len()
    }

    pub fn num_states(&self) -> usize {
        self.feeds[0].num_states()
    }

    pub fn feed(&self, p: usize) -> &FeedDictionary {
        &self.feeds[p]
    }

    pub fn feeds(&self) -> &[FeedDictionary] {
        &self.feeds
    }

    pub fn total_elements(&self) -> usize {
        self.feeds.iter().map(|f| f.num_elements()).sum()
    }

    /// Row offset of subpanel p in the stacked element dimension.
    fn subpanel_offset(&self, p: usize) -> usize {
        self.feeds[..p].iter().map(|f| f.num_elements()).sum()
    }

    pub fn with_admissible(mut self, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.len() != self.feeds.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} admissible sets for {} feeds",
                sets.len(),
                self.feeds.len()
            )));
        }
        for (feed, set) in self.feeds.iter_mut().zip(sets) {
            *feed = FeedDictionary::new(feed.patterns.clone(), set, feed.efficiencies.clone())?;
        }
        Ok(self)
    }
}

/// One selected state index per feed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionState {
    pub indices: Vec<usize>,
}

impl SelectionState {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }
}

/// Block-diagonal one-hot selection matrix, (N_p N_sub) x N_p with exactly
/// one 1 per column.
pub fn selection_matrix(state: &SelectionState, n_sub: usize) -> Result<CMat> {
    let n_p = state.indices.len();
    if n_p == 0 {
        return Err(Error::EmptyInput("selection state".into()));
    }
    let mut m = CMat::zeros(n_p * n_sub, n_p);
    for (p, &n) in state.indices.iter().enumerate() {
        if n >= n_sub {
            return Err(Error::InvalidParameter(format!(
                "state index {n} out of range for {n_sub} states (feed {p})"
            )));
        }
        m[(p * n_sub + n, p)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Reconfigurable precoder F_ra = D_ra S_ra: column p is the selected
/// pattern of feed p, embedded in its subpanel rows.
pub fn fra_from_selection(dict: &StateDictionary, state: &SelectionState) -> Result<CMat> {
    if state.indices.len() != dict.num_feeds() {
        return Err(Error::DimensionMismatch(format!(
            "{} state indices for {} feeds",
            state.indices.len(),
            dict.num_feeds()
        )));
    }
    let mut f = CMat::zeros(dict.total_elements(), dict.num_feeds());
    for (p, &n) in state.indices.iter().enumerate() {
        let feed = dict.feed(p);
        if n >= feed.num_states() {
            return Err(Error::InvalidParameter(format!(
                "state index {n} out of range at feed {p}"
            )));
        }
        let offset = dict.subpanel_offset(p);
        let d = feed.pattern(n);
        for (e, &v) in d.iter().enumerate() {
            f[(offset + e, p)] = v;
        }
    }
    Ok(f)
}

/// Effective channel H_k F_ra.
pub fn effective_channel(h_k: &CMat, f_ra: &CMat) -> Result<CMat> {
    if h_k.ncols() != f_ra.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} columns, precoder {} rows",
            h_k.ncols(),
            f_ra.nrows()
        )));
    }
    Ok(h_k * f_ra)
}

/// Recover the selected state from a (possibly perturbed) precoder: per feed,
/// the admissible state whose pattern is closest in Euclidean distance.
/// Ties resolve to the smallest index.
pub fn nearest_state(dict: &StateDictionary, f_ra: &CMat) -> Result<SelectionState> {
    if f_ra.ncols() != dict.num_feeds() {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} columns, dictionary {} feeds",
            f_ra.ncols(),
            dict.num_feeds()
        )));
    }
    if f_ra.nrows() != dict.total_elements() {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} rows, dictionary {} elements",
            f_ra.nrows(),
            dict.total_elements()
        )));
    }
    let mut indices = Vec::with_capacity(dict.num_feeds());
    for p in 0..dict.num_feeds() {
        let feed = dict.feed(p);
        let offset = dict.subpanel_offset(p);
        let mut best = (usize::MAX, f64::INFINITY);
        for &n in feed.admissible() {
            let d = feed.pattern(n);
            let mut dist = 0.0;
            for e in 0..feed.num_elements() {
                dist += (f_ra[(offset + e, p)] - d[e]).norm_sqr();
            }
            if dist < best.1 {
                best = (n, dist);
            }
        }
        indices.push(best.0);
    }
    Ok(SelectionState::new(indices))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    /// Per-feed diagonal efficiency matrix inside the trace.
    Exact,
    /// Scalar average efficiency times the hybrid precoder norm.
    Simplified,
}

/// Radiated power with state-dependent efficiency. The selected state is
/// recovered from the precoder columns, so calibration error is tolerated.
pub fn radiated_power(
    dict: &StateDictionary,
    f_ra: &CMat,
    f_ana: &CMat,
    f_dig: &CMat,
    mode: PowerMode,
) -> Result<f64> {
    let state = nearest_state(dict, f_ra)?;
    radiated_power_for_state(dict, &state, f_ana, f_dig, mode)
}

/// Radiated power when the selected state is already known.
pub fn radiated_power_for_state(
    dict: &StateDictionary,
    state: &SelectionState,
    f_ana: &CMat,
    f_dig: &CMat,
    mode: PowerMode,
) -> Result<f64> {
    let etas: Vec<f64> = state
        .indices
        .iter()
        .enumerate()
        .map(|(p, &n)| dict.feed(p).efficiency(n))
        .collect();
    if etas.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidParameter(
            "selected efficiency outside (0, 1]".into(),
        ));
    }
    if f_ana.nrows() != dict.num_feeds() {
        return Err(Error::DimensionMismatch(format!(
            "analog precoder has {} rows, expected {} feeds",
            f_ana.nrows(),
            dict.num_feeds()
        )));
    }
    let combined = f_ana * f_dig;
    match mode {
        PowerMode::Exact => {
            let mut p = 0.0;
            for (row, &eta) in etas.iter().enumerate() {
                let row_norm_sq: f64 = combined.row(row).iter().map(|z| z.norm_sqr()).sum();
                p += eta * row_norm_sq;
            }
            Ok(p)
        }
        PowerMode::Simplified => {
            let eta_ra = etas.iter().sum::<f64>() / etas.len() as f64;
            Ok(eta_ra * frob_norm_sq(&combined))
        }
    }
}

/// Selection-based front end over a propagation channel.
#[derive(Debug, Clone)]
pub struct PixelFrontEnd {
    pub dict: StateDictionary,
    pub channel: ChannelTensor,
}

impl PixelFrontEnd {
    pub fn new(dict: StateDictionary, channel: ChannelTensor) -> Result<Self> {
        if channel.ncols() != dict.total_elements() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} columns, dictionary {} elements",
                channel.ncols(),
                dict.total_elements()
            )));
        }
        Ok(Self { dict, channel })
    }
}

impl FrontEnd for PixelFrontEnd {
    type Config = SelectionState;

    fn num_subcarriers(&self) -> usize {
        self.channel.num_subcarriers()
    }

    fn effective_channel(&self, config: &SelectionState, k: usize) -> Result<CMat> {
        let f_ra = fra_from_selection(&self.dict, config)?;
        effective_channel(self.channel.matrix(k), &f_ra)
    }

    fn ra_precoder(&self, config: &SelectionState, _k: usize) -> Result<CMat> {
        fra_from_selection(&self.dict, config)
    }

    fn radiated_power(
        &self,
        config: &SelectionState,
        _k: usize,
        f_ana: &CMat,
        f_dig: &CMat,
    ) -> Result<f64> {
        radiated_power_for_state(&self.dict, config, f_ana, f_dig, PowerMode::Exact)
    }

    fn is_feasible(&self, config: &SelectionState) -> bool {
        config.indices.len() == self.dict.num_feeds()
            && config
                .indices
                .iter()
                .enumerate()
                .all(|(p, n)| self.dict.feed(p).admissible().contains(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_cn_matrix, ZERO};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis_dictionary(n_elems: usize, etas: Vec<f64>) -> FeedDictionary {
        // states = standard basis vectors (port selection)
        let n_states = etas.len();
        let mut m = CMat::zeros(n_elems, n_states);
        for s in 0..n_states {
            m[(s % n_elems, s)] = Complex64::new(1.0, 0.0);
        }
        FeedDictionary::new(m, (0..n_states).collect(), etas).unwrap()
    }

    #[test]
    fn selection_matrix_examples() {
        let m = selection_matrix(&SelectionState::new(vec![1]), 2).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m.ncols(), 1);
        assert_eq!(m[(0, 0)], ZERO);
        assert_relative_eq!(m[(1, 0)].re, 1.0);

        let m = selection_matrix(&SelectionState::new(vec![0, 1]), 2).unwrap();
        assert_eq!(m.nrows(), 4);
        assert_relative_eq!(m[(0, 0)].re, 1.0);
        assert_relative_eq!(m[(3, 1)].re, 1.0);
        // column sums 1, row sums in {0, 1}
        for c in 0..2 {
            let s: f64 = m.column(c).iter().map(|z| z.re).sum();
            assert_relative_eq!(s, 1.0);
        }
        for r in 0..4 {
            let s: f64 = m.row(r).iter().map(|z| z.re).sum();
            assert!(s == 0.0 || s == 1.0);
        }
        // S^T S = I
        let gram = m.transpose() * &m;
        assert_eq!(gram, CMat::identity(2, 2));

        assert!(selection_matrix(&SelectionState::new(vec![2]), 2).is_err());
    }

    #[test]
    fn fra_single_feed_is_selected_column() {
        let feed = basis_dictionary(3, vec![1.0, 0.9, 0.8]);
        let dict = StateDictionary::new(vec![feed]).unwrap();
        let f = fra_from_selection(&dict, &SelectionState::new(vec![2])).unwrap();
        assert_eq!(f.ncols(), 1);
        let expected = dict.feed(0).pattern(2);
        for e in 0..3 {
            assert_eq!(f[(e, 0)], expected[e]);
        }
    }

    #[test]
    fn fra_binary_pattern_normalization() {
        let feed = FeedDictionary::from_binary_patterns(
            &[vec![true, true, false], vec![false, false, true]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let dict = StateDictionary::new(vec![feed]).unwrap();
        let f = fra_from_selection(&dict, &SelectionState::new(vec![0])).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_relative_eq!(f[(0, 0)].re, r, epsilon = 1e-15);
        assert_relative_eq!(f[(1, 0)].re, r, epsilon = 1e-15);
        assert_eq!(f[(2, 0)], ZERO);
    }

    #[test]
    fn fra_block_structure_off_panel_zero() {
        let dict = StateDictionary::new(vec![
            basis_dictionary(2, vec![1.0, 1.0]),
            basis_dictionary(2, vec![1.0, 1.0]),
        ])
        .unwrap();
        let f = fra_from_selection(&dict, &SelectionState::new(vec![0, 1])).unwrap();
        // rows of panel 1 are zero in column 0 and vice versa
        assert_eq!(f[(2, 0)], ZERO);
        assert_eq!(f[(3, 0)], ZERO);
        assert_eq!(f[(0, 1)], ZERO);
        assert_eq!(f[(1, 1)], ZERO);
    }

    #[test]
    fn effective_channel_gather_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dict = StateDictionary::new(vec![
            basis_dictionary(2, vec![1.0, 1.0]),
            basis_dictionary(2, vec![1.0, 1.0]),
        ])
        .unwrap();
        let state = SelectionState::new(vec![1, 0]);
        let f_ra = fra_from_selection(&dict, &state).unwrap();
        let h = random_cn_matrix(&mut rng, 3, 4);
        let heff = effective_channel(&h, &f_ra).unwrap();
        // gather oracle: column p of H_eff equals weighted gather of H columns
        for r in 0..3 {
            assert_eq!(heff[(r, 0)], h[(r, 1)]); // feed 0 selected element 1
            assert_eq!(heff[(r, 1)], h[(r, 2)]); // feed 1 selected element 0 (offset 2)
        }
        // H = I returns F_ra itself
        let eye = CMat::identity(4, 4);
        assert_eq!(effective_channel(&eye, &f_ra).unwrap(), f_ra);
        // identity-like dictionary (N_sub = 1) leaves channel columns unchanged
        let single = StateDictionary::new(vec![
            basis_dictionary(1, vec![1.0]),
            basis_dictionary(1, vec![1.0]),
        ])
        .unwrap();
        let f_id = fra_from_selection(&single, &SelectionState::new(vec![0, 0])).unwrap();
        let h2 = random_cn_matrix(&mut rng, 3, 2);
        assert_eq!(effective_channel(&h2, &f_id).unwrap(), h2);
    }

    #[test]
    fn nearest_state_round_trip_and_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut patterns = random_cn_matrix(&mut rng, 3, 4);
        for c in 0..4 {
            let norm: f64 = patterns.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for r in 0..3 {
                patterns[(r, c)] /= Complex64::new(norm, 0.0);
            }
        }
        let feed = FeedDictionary::new(patterns.clone(), vec![0, 1, 2, 3], vec![1.0; 4]).unwrap();
        let dict = StateDictionary::new(vec![feed]).unwrap();

        // brute-force minimum inter-column gap
        let mut min_gap = f64::INFINITY;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d: f64 = (patterns.column(i) - patterns.column(j))
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                min_gap = min_gap.min(d);
            }
        }

        for s in 0..4 {
            let state = SelectionState::new(vec![s]);
            let f = fra_from_selection(&dict, &state).unwrap();
            assert_eq!(nearest_state(&dict, &f).unwrap(), state);

            // perturb by noise smaller than half the gap
            let mut noisy = f.clone();
            let noise = random_cn_matrix(&mut rng, 3, 1);
            let norm: f64 = noise.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let target = 0.45 * min_gap;
            for r in 0..3 {
                noisy[(r, 0)] += noise[(r, 0)] * Complex64::new(target / norm, 0.0);
            }
            assert_eq!(nearest_state(&dict, &noisy).unwrap(), state);
        }
    }

    #[test]
    fn nearest_state_tie_breaks_to_smallest_index() {
        // states 1 and 3 equidistant from the probe; 1 must win
        let mut m = CMat::zeros(2, 4);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        m[(0, 2)] = Complex64::new(-1.0, 0.0);
        m[(1, 3)] = Complex64::new(-1.0, 0.0);
        let feed = FeedDictionary::new(m, vec![0, 1, 2, 3], vec![1.0; 4]).unwrap();
        let dict = StateDictionary::new(vec![feed]).unwrap();
        let probe = CMat::zeros(2, 1); // equidistant from every unit column
        let s = nearest_state(&dict, &probe).unwrap();
        assert_eq!(s.indices[0], 0); // smallest admissible overall
        // restrict admissible set to {1, 3}: tie between 1 and 3 -> 1
        let dict13 = dict.with_admissible(vec![vec![1, 3]]).unwrap();
        let s = nearest_state(&dict13, &probe).unwrap();
        assert_eq!(s.indices[0], 1);
    }

    #[test]
    fn power_unit_efficiency_is_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dict = StateDictionary::new(vec![
            basis_dictionary(2, vec![1.0, 1.0]),
            basis_dictionary(2, vec![1.0, 1.0]),
        ])
        .unwrap();
        let state = SelectionState::new(vec![0, 1]);
        let f_ana = random_cn_matrix(&mut rng, 2, 2);
        let f_dig = random_cn_matrix(&mut rng, 2, 3);
        let p = radiated_power_for_state(&dict, &state, &f_ana, &f_dig, PowerMode::Exact).unwrap();
        assert_relative_eq!(p, frob_norm_sq(&(&f_ana * &f_dig)), epsilon = 1e-12);
    }

    #[test]
    fn power_uniform_efficiency_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let c = 0.37;
        let dict = StateDictionary::new(vec![
            basis_dictionary(2, vec![c, c]),
            basis_dictionary(2, vec![c, c]),
        ])
        .unwrap();
        let state = SelectionState::new(vec![1, 0]);
        let f_ana = random_cn_matrix(&mut rng, 2, 2);
        let f_dig = random_cn_matrix(&mut rng, 2, 2);
        let exact =
            radiated_power_for_state(&dict, &state, &f_ana, &f_dig, PowerMode::Exact).unwrap();
        let simplified =
            radiated_power_for_state(&dict, &state, &f_ana, &f_dig, PowerMode::Simplified).unwrap();
        let norm = frob_norm_sq(&(&f_ana * &f_dig));
        assert_relative_eq!(exact, c * norm, epsilon = 1e-12);
        assert_relative_eq!(simplified, c * norm, epsilon = 1e-12);
    }

    #[test]
    fn power_diagonal_trace_expansion_oracle() {
        // eta_sel = (0.5, 1.0), F_ana = I: trace = 0.5 ||row0||^2 + 1.0 ||row1||^2 of F_dig.
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let dict = StateDictionary::new(vec![
            basis_dictionary(2, vec![0.5, 0.4]),
            basis_dictionary(2, vec![0.9, 1.0]),
        ])
        .unwrap();
        let state = SelectionState::new(vec![0, 1]); // etas 0.5 and 1.0
        let f_ana = CMat::identity(2, 2);
        let f_dig = random_cn_matrix(&mut rng, 2, 2);
        let p = radiated_power_for_state(&dict, &state, &f_ana, &f_dig, PowerMode::Exact).unwrap();
        let row0: f64 = f_dig.row(0).iter().map(|z| z.norm_sqr()).sum();
        let row1: f64 = f_dig.row(1).iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(p, 0.5 * row0 + 1.0 * row1, epsilon = 1e-12);
    }

    #[test]
    fn efficiency_outside_unit_interval_rejected() {
        let m = CMat::identity(2, 2);
        assert!(FeedDictionary::new(m.clone(), vec![0, 1], vec![1.2, 0.5]).is_err());
        assert!(FeedDictionary::new(m, vec![0, 1], vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn parse_table_round_trip() {
        let text = "feed,state,element,re,im,eta\n\
                    0,0,0,1.0,0.0,0.9\n\
                    0,1,1,0.0,1.0,0.8\n\
                    1,0,0,0.70710678118654752,0.0,1.0\n\
                    1,0,1,0.70710678118654752,0.0,1.0\n\
                    1,1,0,1.0,0.0,0.7\n";
        let dict = StateDictionary::parse_table(text).unwrap();
        assert_eq!(dict.num_feeds(), 2);
        assert_eq!(dict.num_states(), 2);
        assert_eq!(dict.feed(0).num_elements(), 2);
        assert_relative_eq!(dict.feed(0).efficiency(1), 0.8);
        let f = fra_from_selection(&dict, &SelectionState::new(vec![1, 0])).unwrap();
        assert_relative_eq!(f[(1, 0)].im, 1.0, epsilon = 1e-15);
        assert_relative_eq!(f[(2, 1)].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);

        assert!(StateDictionary::parse_table("feed,state,element,re,im,eta\n0,0,0,2.0,0.0,0.9\n").is_err());
        assert!(StateDictionary::parse_table("").is_err());
    }
}
