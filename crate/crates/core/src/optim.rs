//! Configuration algorithms for the precoding layers: waterfilling, quantized
//! zero-forcing, a genetic search for slot tunings, coordinate ascent for
//! stacked-metasurface phases, exhaustive/greedy state selection, and the
//! outer alternating loop that fits all three precoder layers to a target.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dma::{DmaConfig, DmaGeometry};
use crate::error::{Error, Result};
use crate::linalg::{frob_norm_sq, CMat};
use crate::model::{ChannelTensor, FrontEnd, PrecoderSet};
use crate::pass::WaveguideLayout;
use crate::pixel::{SelectionState, StateDictionary};
use crate::sim::SimStack;

/// Budgets shared by the iterative optimizers.
#[derive(Debug, Clone)]
pub struct OptimizerBudget {
    pub max_iterations: usize,
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            population: 32,
            generations: 100,
            seed: 0,
            tolerance: 1e-6,
        }
    }
}

impl OptimizerBudget {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.population == 0 || self.generations == 0 {
            return Err(Error::InvalidParameter("optimizer budgets must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Waterfilling power allocation: p_i = max(0, μ - σ²/g_i) with the water
/// level μ found by bisection so the allocations sum to the budget.
pub fn waterfilling(gains: &[f64], p_total: f64, noise_w: f64) -> Result<Vec<f64>> {
    if gains.iter().any(|&g| g < 0.0 || !g.is_finite()) {
        return Err(Error::InvalidParameter("channel gains must be >= 0".into()));
    }
    if gains.iter().all(|&g| g == 0.0) {
        return Err(Error::InvalidParameter(
            "waterfilling needs at least one nonzero gain".into(),
        ));
    }
    if !(p_total > 0.0) || !(noise_w > 0.0) {
        return Err(Error::InvalidParameter("power budget and noise must be > 0".into()));
    }
    let floors: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { noise_w / g } else { f64::INFINITY })
        .collect();
    let allocate = |mu: f64| -> f64 {
        floors.iter().map(|&f| (mu - f).max(0.0)).sum()
    };
    let mut lo = floors.iter().cloned().filter(|f| f.is_finite()).fold(f64::INFINITY, f64::min);
    let mut hi = lo + p_total;
    while allocate(hi) < p_total {
        hi = lo + 2.0 * (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if allocate(mid) < p_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let mut p: Vec<f64> = floors.iter().map(|&f| (mu - f).max(0.0)).collect();
    // exact budget: scale the positive entries
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        let scale = p_total / sum;
        for x in &mut p {
            *x *= scale;
        }
    }
    Ok(p)
}

/// Moore-Penrose pseudo-inverse via SVD.
pub fn pinv(m: &CMat) -> Result<CMat> {
    m.clone()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::RankDeficient(e.to_string()))
}

/// Zero-forcing precoder followed by per-entry mid-rise uniform quantization
/// of the real and imaginary parts with 2^bits levels, then renormalization
/// to the unquantized power.
pub fn quantized_zf(h_eff: &CMat, bits: u32) -> Result<CMat> {
    if bits < 1 || bits > 24 {
        return Err(Error::InvalidParameter(format!(
            "DAC resolution {bits} outside the supported 1..=24 bits"
        )));
    }
    let (rows, _cols) = h_eff.shape();
    let sv = h_eff.clone().singular_values();
    if sv.len() < rows || sv.min() <= 1e-10 * sv.max() {
        return Err(Error::RankDeficient(
            "zero-forcing requires a full-row-rank channel".into(),
        ));
    }
    let gram_inv = crate::linalg::guarded_inverse(
        &(h_eff * h_eff.adjoint()),
        1e14,
        "ZF Gram matrix",
    )?;
    let f = h_eff.adjoint() * gram_inv;

    let vmax = f
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0, f64::max);
    if vmax == 0.0 {
        return Ok(f);
    }
    let levels = 2u64.pow(bits) as f64;
    let step = 2.0 * vmax / levels;
    let clamp = vmax - step / 2.0;
    let quantize = |x: f64| -> f64 { (step * ((x / step).floor() + 0.5)).clamp(-clamp, clamp) };
    let fq = f.map(|z| Complex64::new(quantize(z.re), quantize(z.im)));

    let norm_f = frob_norm_sq(&f).sqrt();
    let norm_q = frob_norm_sq(&fq).sqrt();
    if norm_q == 0.0 {
        return Ok(fq);
    }
    Ok(fq.scale(norm_f / norm_q))
}

/// Digital precoder by SVD waterfilling over an effective channel: right
/// singular vectors weighted by the per-eigenchannel allocations. Always
/// returns exactly `streams` columns; eigenchannels past the rank get zero
/// power, so the stream count stays fixed across subcarriers.
pub fn waterfilling_precoder(
    h_eff: &CMat,
    p_total: f64,
    noise_w: f64,
    streams: usize,
) -> Result<CMat> {
    let svd = h_eff.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::RankDeficient("SVD failed".into()))?;
    let r = streams.min(svd.singular_values.len()).max(1);
    let smax = svd.singular_values.max();
    let gains: Vec<f64> = svd
        .singular_values
        .iter()
        .take(r)
        .map(|s| if *s > 1e-12 * smax { s * s } else { 0.0 })
        .collect();
    let p = waterfilling(&gains, p_total, noise_w)?;
    let v = v_t.adjoint();
    let mut f = CMat::zeros(h_eff.ncols(), streams);
    for (i, &pi) in p.iter().enumerate() {
        let col = v.column(i) * Complex64::new(pi.sqrt(), 0.0);
        f.set_column(i, &col);
    }
    Ok(f)
}

/// Genetic search over slot tuning phases. Tournament selection, uniform
/// crossover, per-gene mutation with probability 1/N, one elite carried per
/// generation. Deterministic for a given seed.
pub fn genetic_dma<O>(objective: O, geometry: &DmaGeometry, budget: &OptimizerBudget) -> Result<DmaConfig>
where
    O: Fn(&DmaConfig) -> f64,
{
    budget.validate()?;
    geometry.validate()?;
    let n = geometry.num_elements();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let span = std::f64::consts::PI;
    let sample_gene = |rng: &mut ChaCha8Rng| rng.gen_range(-span..span);

    let mut population: Vec<Vec<f64>> = (0..budget.population)
        .map(|_| (0..n).map(|_| sample_gene(&mut rng)).collect())
        .collect();
    let mut fitness: Vec<f64> = population
        .iter()
        .map(|z| objective(&DmaConfig { phases: z.clone() }))
        .collect();

    let tournament = 3.min(budget.population);
    let mutation_prob = 1.0 / n as f64;

    for _gen in 0..budget.generations {
        let best_idx = argmax(&fitness);
        let elite = population[best_idx].clone();
        let elite_fit = fitness[best_idx];

        let mut next = Vec::with_capacity(budget.population);
        next.push(elite);
        while next.len() < budget.population {
            let pa = tournament_pick(&fitness, tournament, &mut rng);
            let pb = tournament_pick(&fitness, tournament, &mut rng);
            let mut child = Vec::with_capacity(n);
            for g in 0..n {
                let gene = if rng.gen_bool(0.5) {
                    population[pa][g]
                } else {
                    population[pb][g]
                };
                child.push(if rng.gen::<f64>() < mutation_prob {
                    sample_gene(&mut rng)
                } else {
                    gene
                });
            }
            next.push(child);
        }
        population = next;
        fitness = population
            .iter()
            .map(|z| objective(&DmaConfig { phases: z.clone() }))
            .collect();
        // elitism guarantees we never regress below the carried individual
        if fitness[0] < elite_fit {
            fitness[0] = elite_fit;
        }
    }
    let best = argmax(&fitness);
    Ok(DmaConfig {
        phases: population[best].clone(),
    })
}

// first maximal index, so ties keep the carried elite
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn tournament_pick(fitness: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// Phase grid used by the per-atom sweeps.
pub const SIM_PHASE_GRID: usize = 64;

/// Cyclic per-atom phase sweeps accepting improvements. Returns the tuned
/// phases and the objective trace, which is nondecreasing by construction.
pub fn coordinate_ascent_sim<O>(
    stack: &SimStack,
    objective: O,
    budget: &OptimizerBudget,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)>
where
    O: Fn(&[Vec<f64>]) -> f64,
{
    budget.validate()?;
    let mut phases: Vec<Vec<f64>> = stack
        .layers
        .iter()
        .map(|layer| match layer {
            crate::sim::MetaLayer::Ideal { phases } => Ok(phases.clone()),
            _ => Err(Error::InvalidParameter(
                "coordinate ascent requires an ideal-layer stack".into(),
            )),
        })
        .collect::<Result<_>>()?;

    let mut best = objective(&phases);
    let mut trace = vec![best];
    let tau = 2.0 * std::f64::consts::PI;

    for _cycle in 0..budget.max_iterations {
        let mut improved = false;
        for l in 0..phases.len() {
            for a in 0..phases[l].len() {
                let original = phases[l][a];
                let mut local_best = (original, best);
                for g in 0..SIM_PHASE_GRID {
                    let cand = g as f64 * tau / SIM_PHASE_GRID as f64;
                    phases[l][a] = cand;
                    let val = objective(&phases);
                    if val > local_best.1 {
                        local_best = (cand, val);
                    }
                }
                phases[l][a] = local_best.0;
                if local_best.1 > best + budget.tolerance * best.abs().max(1.0) {
                    improved = true;
                }
                best = best.max(local_best.1);
                trace.push(best);
            }
        }
        if !improved {
            break;
        }
    }
    Ok((phases, trace))
}

/// Default cap on the exhaustive product state space.
pub const SELECTION_CAP: u128 = 1 << 20;

/// Global optimum over the product of admissible state sets.
pub fn exhaustive_selection<O>(
    dict: &StateDictionary,
    objective: O,
    cap: u128,
) -> Result<SelectionState>
where
    O: Fn(&SelectionState) -> f64,
{
    let mut size: u128 = 1;
    for p in 0..dict.num_feeds() {
        size = size.saturating_mul(dict.feed(p).admissible().len() as u128);
    }
    if size > cap {
        return Err(Error::StateSpaceTooLarge { size, cap });
    }
    let mut counters = vec![0usize; dict.num_feeds()];
    let mut best: Option<(SelectionState, f64)> = None;
    loop {
        let state = SelectionState::new(
            counters
                .iter()
                .enumerate()
                .map(|(p, &c)| dict.feed(p).admissible()[c])
                .collect(),
        );
        let val = objective(&state);
        if best.as_ref().map_or(true, |(_, b)| val > *b) {
            best = Some((state, val));
        }
        // odometer increment
        let mut p = 0;
        loop {
            if p == dict.num_feeds() {
                return Ok(best.expect("nonempty state space").0);
            }
            counters[p] += 1;
            if counters[p] < dict.feed(p).admissible().len() {
                break;
            }
            counters[p] = 0;
            p += 1;
        }
    }
}

/// Greedy per-feed selection: repeated coordinate passes until no feed
/// improves. Not globally optimal, but evaluates only O(N_p N_sub) states.
pub fn greedy_selection<O>(dict: &StateDictionary, objective: O, max_passes: usize) -> Result<SelectionState>
where
    O: Fn(&SelectionState) -> f64,
{
    let mut state = SelectionState::new(
        (0..dict.num_feeds())
            .map(|p| dict.feed(p).admissible()[0])
            .collect(),
    );
    let mut best = objective(&state);
    for _ in 0..max_passes.max(1) {
        let mut improved = false;
        for p in 0..dict.num_feeds() {
            let mut local = (state.indices[p], best);
            for &n in dict.feed(p).admissible() {
                let mut cand = state.clone();
                cand.indices[p] = n;
                let val = objective(&cand);
                if val > local.1 {
                    local = (n, val);
                }
            }
            if local.0 != state.indices[p] {
                state.indices[p] = local.0;
                best = local.1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(state)
}

/// Result of the alternating tri-layer fit.
#[derive(Debug, Clone)]
pub struct AlternatingResult<C> {
    pub precoders: PrecoderSet<C>,
    pub trace: Vec<f64>,
}

/// Two-stage analog/digital fit against per-subcarrier targets for a fixed
/// reconfigurable precoder: analog by unit-modulus phase projection, digital
/// by least squares with renormalization to the target power, each pair of
/// updates accepted only when the matching residual improves.
pub fn two_stage_matching(
    f_ra: &[CMat],
    f_opt: &ChannelTensor,
    num_rf_chains: usize,
    budget: &OptimizerBudget,
) -> Result<(Vec<CMat>, Vec<CMat>, f64)> {
    if f_ra.len() != f_opt.num_subcarriers() {
        return Err(Error::DimensionMismatch(format!(
            "{} ra precoders for {} subcarriers",
            f_ra.len(),
            f_opt.num_subcarriers()
        )));
    }
    let n_s = f_opt.ncols();
    let mut analog = Vec::with_capacity(f_ra.len());
    let mut digital = Vec::with_capacity(f_ra.len());
    let mut residual = 0.0;

    for k in 0..f_ra.len() {
        let ra = &f_ra[k];
        let ra_pinv = pinv(ra)?;
        let target = f_opt.matrix(k);
        let unconstrained = &ra_pinv * target; // cols(ra) x n_s

        // initial analog: phases of the unconstrained fit; extra RF columns
        // get distinct DFT phases (identical padding columns would make the
        // analog matrix singular and trap the alternation)
        let rows = ra.ncols();
        let mut f_ana = CMat::from_fn(rows, num_rf_chains, |i, j| {
            if j < n_s {
                let z = unconstrained[(i, j)];
                if z.norm() > 0.0 {
                    z / Complex64::new(z.norm(), 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            } else {
                let phase = 2.0 * std::f64::consts::PI * ((i * j) % rows) as f64 / rows as f64;
                Complex64::from_polar(1.0, phase)
            }
        });
        let mut f_dig = pinv(&(ra * &f_ana))? * target;
        let mut res = frob_norm_sq(&(target - ra * &f_ana * &f_dig));

        for _ in 0..budget.max_iterations.min(25) {
            // analog: unit-modulus projection of the least-squares update
            let dig_pinv = pinv(&f_dig)?;
            let m = &unconstrained * dig_pinv;
            let cand_ana = CMat::from_fn(rows, num_rf_chains, |i, j| {
                let z = m[(i, j)];
                if z.norm() > 0.0 {
                    z / Complex64::new(z.norm(), 0.0)
                } else {
                    f_ana[(i, j)]
                }
            });
            // digital: least squares, renormalized to the target power
            let mut cand_dig = pinv(&(ra * &cand_ana))? * target;
            let product = ra * &cand_ana * &cand_dig;
            let pn = frob_norm_sq(&product).sqrt();
            let tn = frob_norm_sq(target).sqrt();
            if pn > 0.0 && tn > 0.0 {
                let scaled = cand_dig.scale(tn / pn);
                if frob_norm_sq(&(target - ra * &cand_ana * &scaled))
                    <= frob_norm_sq(&(target - &product))
                {
                    cand_dig = scaled;
                }
            }
            let cand_res = frob_norm_sq(&(target - ra * &cand_ana * &cand_dig));
            if cand_res < res - budget.tolerance * res.max(1e-300) {
                f_ana = cand_ana;
                f_dig = cand_dig;
                res = cand_res;
            } else {
                break;
            }
        }
        residual += res;
        analog.push(f_ana);
        digital.push(f_dig);
    }
    Ok((analog, digital, residual))
}

/// Alternating tri-layer optimization of the precoder-matching objective:
/// candidate antenna configurations from the architecture-specific search,
/// analog and digital layers refit per candidate, best improving candidate
/// accepted per outer iteration. The returned trace is nonincreasing.
pub fn alternating_trihybrid<F>(
    front_end: &F,
    f_opt: &ChannelTensor,
    num_rf_chains: usize,
    initial_config: F::Config,
    candidates: impl Fn(&F::Config) -> Vec<F::Config>,
    budget: &OptimizerBudget,
) -> Result<AlternatingResult<F::Config>>
where
    F: FrontEnd,
    F::Config: Clone,
{
    budget.validate()?;
    if !front_end.is_feasible(&initial_config) {
        return Err(Error::Infeasible(
            "initial antenna configuration fails the feasibility test".into(),
        ));
    }
    let ra_of = |config: &F::Config| -> Result<Vec<CMat>> {
        (0..front_end.num_subcarriers())
            .map(|k| front_end.ra_precoder(config, k))
            .collect()
    };

    let mut config = initial_config;
    let (mut analog, mut digital, mut residual) =
        two_stage_matching(&ra_of(&config)?, f_opt, num_rf_chains, budget)?;
    let mut trace = vec![residual];

    for _ in 0..budget.max_iterations {
        let mut accepted: Option<(F::Config, Vec<CMat>, Vec<CMat>, f64)> = None;
        for cand in candidates(&config) {
            if !front_end.is_feasible(&cand) {
                continue;
            }
            let (a, d, r) = two_stage_matching(&ra_of(&cand)?, f_opt, num_rf_chains, budget)?;
            let best_so_far = accepted.as_ref().map_or(residual, |(.., r)| *r);
            if r < best_so_far - budget.tolerance * best_so_far.max(1e-300) {
                accepted = Some((cand, a, d, r));
            }
        }
        match accepted {
            Some((c, a, d, r)) => {
                config = c;
                analog = a;
                digital = d;
                residual = r;
                trace.push(residual);
            }
            None => break,
        }
    }

    let precoders = PrecoderSet::new(digital, analog, config)?;
    Ok(AlternatingResult { precoders, trace })
}

/// Pinching-beamforming plumbing: move each pinch so its guided-wave phase
/// matches a target phase, preserving strict position ordering by stepping
/// whole guided wavelengths between pinches.
pub fn align_pinch_positions(
    layout: &WaveguideLayout,
    target_phases: &[Vec<f64>],
) -> Result<WaveguideLayout> {
    layout.validate()?;
    if target_phases.len() != layout.num_guides() {
        return Err(Error::DimensionMismatch(format!(
            "{} phase vectors for {} guides",
            target_phases.len(),
            layout.num_guides()
        )));
    }
    let beta = layout.beta_g_rad_per_m;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(
            "position alignment requires beta_g > 0".into(),
        ));
    }
    let lambda_g = 2.0 * std::f64::consts::PI / beta;
    let mut out = layout.clone();
    for (p, guide) in out.guides.iter_mut().enumerate() {
        if target_phases[p].len() != guide.positions_m.len() {
            return Err(Error::DimensionMismatch(format!(
                "guide {p}: {} target phases for {} pinches",
                target_phases[p].len(),
                guide.positions_m.len()
            )));
        }
        for (m, x) in guide.positions_m.iter_mut().enumerate() {
            // weight phase is -beta x; want it congruent to the target
            let offset = (-target_phases[p][m] / beta).rem_euclid(lambda_g);
            *x = m as f64 * lambda_g + offset;
        }
    }
    out.validate()?;
    Ok(out)
}
