//! Finite-alphabet probability machinery: pmfs, conditionals, joints,
//! information measures, empirical types and strong typicality.
//!
//! Conventions:
//! - all logarithms are base 2; entropies, mutual informations and
//!   divergences are in bits;
//! - pmfs are validated on construction (sum within `SUM_TOL` of 1,
//!   entries non-negative) and never silently renormalized;
//! - strong typicality follows the Csiszar-Korner definition: every
//!   symbol tuple's empirical frequency deviates from the reference
//!   probability by at most `mu`, and tuples of zero reference
//!   probability must not occur at all.

use thiserror::Error;

/// Absolute tolerance for pmf normalization checks.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ProbError {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("support of p not contained in support of q (symbol {symbol})")]
    AbsoluteContinuityViolation { symbol: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("aligned sequences have different lengths")]
    LengthMismatch,
    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// Probability mass function over `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(ProbError::InvalidPmf("empty alphabet".into()));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0)) {
            return Err(ProbError::InvalidPmf(format!("negative or NaN entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(ProbError::InvalidPmf(format!(
                "entries sum to {sum}, expected 1 within {SUM_TOL}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        Self { probs: vec![1.0 / k as f64; k] }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Self { probs }
    }

    /// Binary pmf with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Joint pmf over `(a, u)` obtained by passing this pmf through a channel
    /// `P(u | a)`.
    pub fn join(&self, channel: &ConditionalPmf) -> Result<JointPmf> {
        if channel.input_size() != self.alphabet_size() {
            return Err(ProbError::DimensionMismatch(format!(
                "channel expects {} inputs, pmf has {}",
                channel.input_size(),
                self.alphabet_size()
            )));
        }
        let k = self.alphabet_size();
        let m = channel.output_size();
        let mut probs = vec![0.0; k * m];
        for a in 0..k {
            for u in 0..m {
                probs[a * m + u] = self.probs[a] * channel.row(a).prob(u);
            }
        }
        Ok(JointPmf { dims: vec![k, m], probs })
    }
}

/// Row-stochastic conditional pmf `P(output | input)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPmf {
    rows: Vec<Pmf>,
    output_size: usize,
}

impl ConditionalPmf {
    pub fn from_rows(rows: Vec<Pmf>) -> Result<Self> {
        let output_size = match rows.first() {
            Some(r) => r.alphabet_size(),
            None => return Err(ProbError::InvalidPmf("no rows".into())),
        };
        if rows.iter().any(|r| r.alphabet_size() != output_size) {
            return Err(ProbError::DimensionMismatch("rows of unequal width".into()));
        }
        Ok(Self { rows, output_size })
    }

    /// Build from row-major probabilities, validating each row.
    pub fn from_table(table: &[Vec<f64>]) -> Result<Self> {
        let rows = table
            .iter()
            .map(|r| Pmf::new(r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k).map(|i| Pmf::point_mass(k, i)).collect();
        Self { rows, output_size: k }
    }

    /// Channel whose output is independent of its input.
    pub fn constant(inputs: usize, row: Pmf) -> Self {
        let output_size = row.alphabet_size();
        Self { rows: vec![row; inputs], output_size }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, input: usize) -> &Pmf {
        &self.rows[input]
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input].prob(output)
    }

    /// Output marginal when the input is distributed as `input_pmf`.
    pub fn output_marginal(&self, input_pmf: &Pmf) -> Result<Pmf> {
        if input_pmf.alphabet_size() != self.input_size() {
            return Err(ProbError::DimensionMismatch("input pmf size".into()));
        }
        let mut probs = vec![0.0; self.output_size];
        for (a, &pa) in input_pmf.probs().iter().enumerate() {
            for u in 0..self.output_size {
                probs[u] += pa * self.prob(a, u);
            }
        }
        Ok(Pmf { probs })
    }

    /// Cascade: `(self ; other)(c | a) = sum_b self(b | a) * other(c | b)`.
    pub fn compose(&self, other: &ConditionalPmf) -> Result<ConditionalPmf> {
        if other.input_size() != self.output_size {
            return Err(ProbError::DimensionMismatch("cascade width".into()));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| other.output_marginal(r))
            .collect::<Result<Vec<_>>>()?;
        ConditionalPmf::from_rows(rows)
    }
}

/// Dense joint pmf over a product alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || total == 0 {
            return Err(ProbError::InvalidPmf("empty dimensions".into()));
        }
        if probs.len() != total {
            return Err(ProbError::DimensionMismatch(format!(
                "table has {} entries, dims require {total}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0)) {
            return Err(ProbError::InvalidPmf(format!("negative or NaN entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(ProbError::InvalidPmf(format!(
                "entries sum to {sum}, expected 1 within {SUM_TOL}"
            )));
        }
        Ok(Self { dims, probs })
    }

    /// Two-axis joint from row-major probabilities.
    pub fn from_table2(table: &[Vec<f64>]) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, |r| r.len());
        if table.iter().any(|r| r.len() != cols) {
            return Err(ProbError::DimensionMismatch("ragged table".into()));
        }
        let probs = table.iter().flatten().copied().collect();
        Self::new(vec![rows, cols], probs)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (i, &d) in idx.iter().zip(&self.dims) {
            flat = flat * d + i;
        }
        flat
    }

    pub fn prob(&self, idx: &[usize]) -> f64 {
        self.probs[self.flat_index(idx)]
    }

    /// Marginal pmf of a single axis.
    pub fn marginal(&self, axis: usize) -> Pmf {
        assert!(axis < self.dims.len());
        let mut probs = vec![0.0; self.dims[axis]];
        let inner: usize = self.dims[axis + 1..].iter().product();
        let axis_len = self.dims[axis];
        for (flat, &p) in self.probs.iter().enumerate() {
            let i = (flat / inner) % axis_len;
            probs[i] += p;
        }
        Pmf { probs }
    }

    /// Swap the two axes of a two-dimensional joint.
    pub fn transpose2(&self) -> JointPmf {
        assert_eq!(self.dims.len(), 2);
        let (r, c) = (self.dims[0], self.dims[1]);
        let mut probs = vec![0.0; r * c];
        for a in 0..r {
            for b in 0..c {
                probs[b * r + a] = self.probs[a * c + b];
            }
        }
        JointPmf { dims: vec![c, r], probs }
    }

    /// Conditional of axis 1 given axis 0 (rows with zero mass get a uniform
    /// placeholder row; they carry no probability).
    pub fn condition_on_first(&self) -> ConditionalPmf {
        assert_eq!(self.dims.len(), 2);
        let (r, c) = (self.dims[0], self.dims[1]);
        let rows = (0..r)
            .map(|a| {
                let mass: f64 = (0..c).map(|b| self.probs[a * c + b]).sum();
                if mass <= 0.0 {
                    Pmf::uniform(c)
                } else {
                    Pmf { probs: (0..c).map(|b| self.probs[a * c + b] / mass).collect() }
                }
            })
            .collect();
        ConditionalPmf { rows, output_size: c }
    }
}

/// Lift a channel `P(u | a)` over a joint `P(a, b)`: returns the joint
/// `P(u, b) = sum_a P(u | a) P(a, b)`, the pmf the relay-side mutual
/// informations are evaluated under.
pub fn lift_channel(joint_ab: &JointPmf, channel: &ConditionalPmf) -> Result<JointPmf> {
    if joint_ab.dims().len() != 2 {
        return Err(ProbError::DimensionMismatch("need a two-axis joint".into()));
    }
    let (ka, kb) = (joint_ab.dims()[0], joint_ab.dims()[1]);
    if channel.input_size() != ka {
        return Err(ProbError::DimensionMismatch("channel input size".into()));
    }
    let ku = channel.output_size();
    let mut probs = vec![0.0; ku * kb];
    for a in 0..ka {
        for b in 0..kb {
            let pab = joint_ab.prob(&[a, b]);
            if pab == 0.0 {
                continue;
            }
            for u in 0..ku {
                probs[u * kb + b] += channel.prob(a, u) * pab;
            }
        }
    }
    Ok(JointPmf { dims: vec![ku, kb], probs })
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &Pmf) -> f64 {
    neg_sum_plogp(p.probs())
}

fn neg_sum_plogp(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Mutual information in bits between the two axes of a joint pmf.
pub fn mutual_information(j: &JointPmf) -> f64 {
    assert_eq!(j.dims().len(), 2, "mutual information needs a two-axis joint");
    let pa = j.marginal(0);
    let pb = j.marginal(1);
    let (_, kb) = (j.dims()[0], j.dims()[1]);
    let mut total = 0.0;
    for (flat, &p) in j.probs().iter().enumerate() {
        if p > 0.0 {
            let (a, b) = (flat / kb, flat % kb);
            total += p * (p / (pa.prob(a) * pb.prob(b))).log2();
        }
    }
    total.max(0.0)
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(ProbError::DimensionMismatch("kl over different alphabets".into()));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(ProbError::AbsoluteContinuityViolation { symbol: i });
            }
            total += pi * (pi / qi).log2();
        }
    }
    Ok(total.max(0.0))
}

/// Empirical type (relative symbol frequencies) of a sequence.
pub fn empirical_type(seq: &[usize], alphabet_size: usize) -> Result<Pmf> {
    if seq.is_empty() {
        return Err(ProbError::EmptySequence);
    }
    let mut counts = vec![0usize; alphabet_size];
    for &s in seq {
        if s >= alphabet_size {
            return Err(ProbError::SymbolOutOfRange { symbol: s, alphabet: alphabet_size });
        }
        counts[s] += 1;
    }
    let n = seq.len() as f64;
    Ok(Pmf { probs: counts.iter().map(|&c| c as f64 / n).collect() })
}

/// Strong typicality of a single sequence with respect to a pmf.
pub fn is_typical(seq: &[usize], reference: &Pmf, mu: f64) -> Result<bool> {
    if seq.is_empty() {
        return Err(ProbError::EmptySequence);
    }
    let k = reference.alphabet_size();
    let mut counts = vec![0usize; k];
    for &s in seq {
        if s >= k {
            return Err(ProbError::SymbolOutOfRange { symbol: s, alphabet: k });
        }
        counts[s] += 1;
    }
    let n = seq.len() as f64;
    Ok(counts.iter().zip(reference.probs()).all(|(&c, &p)| {
        if p == 0.0 {
            c == 0
        } else {
            (c as f64 / n - p).abs() <= mu
        }
    }))
}

/// Joint strong typicality of aligned sequences with respect to a joint pmf.
pub fn is_jointly_typical(seqs: &[&[usize]], reference: &JointPmf, mu: f64) -> Result<bool> {
    if seqs.len() != reference.dims().len() {
        return Err(ProbError::DimensionMismatch(format!(
            "{} sequences for a {}-axis joint",
            seqs.len(),
            reference.dims().len()
        )));
    }
    let n = seqs[0].len();
    if n == 0 {
        return Err(ProbError::EmptySequence);
    }
    if seqs.iter().any(|s| s.len() != n) {
        return Err(ProbError::LengthMismatch);
    }
    let total: usize = reference.dims().iter().product();
    let mut counts = vec![0usize; total];
    let mut idx = vec![0usize; seqs.len()];
    for t in 0..n {
        for (j, seq) in seqs.iter().enumerate() {
            let s = seq[t];
            if s >= reference.dims()[j] {
                return Err(ProbError::SymbolOutOfRange { symbol: s, alphabet: reference.dims()[j] });
            }
            idx[j] = s;
        }
        counts[reference.flat_index(&idx)] += 1;
    }
    let nf = n as f64;
    Ok(counts.iter().zip(reference.probs()).all(|(&c, &p)| {
        if p == 0.0 {
            c == 0
        } else {
            (c as f64 / nf - p).abs() <= mu
        }
    }))
}

/// The two-hop source `X -> Y -> Z` with all derived joints cached.
#[derive(Debug, Clone)]
pub struct TwoHopSource {
    p_x: Pmf,
    p_y_given_x: ConditionalPmf,
    p_z_given_y: ConditionalPmf,
    p_xy: JointPmf,
    p_yz: JointPmf,
    p_y: Pmf,
    p_z: Pmf,
}

/// Build a [`TwoHopSource`] from its Markov factorization, caching all
/// derived joints and marginals.
pub fn compose_two_hop(
    p_x: Pmf,
    p_y_given_x: ConditionalPmf,
    p_z_given_y: ConditionalPmf,
) -> Result<TwoHopSource> {
    if p_y_given_x.input_size() != p_x.alphabet_size() {
        return Err(ProbError::DimensionMismatch("p_y_given_x input size".into()));
    }
    if p_z_given_y.input_size() != p_y_given_x.output_size() {
        return Err(ProbError::DimensionMismatch("p_z_given_y input size".into()));
    }
    let p_xy = p_x.join(&p_y_given_x)?;
    let p_y = p_xy.marginal(1);
    let p_yz = p_y.join(&p_z_given_y)?;
    let p_z = p_yz.marginal(1);
    Ok(TwoHopSource { p_x, p_y_given_x, p_z_given_y, p_xy, p_yz, p_y, p_z })
}

impl TwoHopSource {
    pub fn p_x(&self) -> &Pmf {
        &self.p_x
    }
    pub fn p_y(&self) -> &Pmf {
        &self.p_y
    }
    pub fn p_z(&self) -> &Pmf {
        &self.p_z
    }
    pub fn p_y_given_x(&self) -> &ConditionalPmf {
        &self.p_y_given_x
    }
    pub fn p_z_given_y(&self) -> &ConditionalPmf {
        &self.p_z_given_y
    }
    pub fn p_xy(&self) -> &JointPmf {
        &self.p_xy
    }
    pub fn p_yz(&self) -> &JointPmf {
        &self.p_yz
    }

    pub fn i_xy(&self) -> f64 {
        mutual_information(&self.p_xy)
    }
    pub fn i_yz(&self) -> f64 {
        mutual_information(&self.p_yz)
    }

    /// The paper's running example: `X ~ Bern(0.4)`, `Y = X xor T`,
    /// `Z = Y xor S` with `T, S ~ Bern(0.8)`.
    pub fn dsbs_example() -> TwoHopSource {
        let p_x = Pmf::bernoulli(0.4).unwrap();
        let flip = ConditionalPmf::from_table(&[vec![0.2, 0.8], vec![0.8, 0.2]]).unwrap();
        compose_two_hop(p_x, flip.clone(), flip).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    #[test]
    fn entropy_uniform_and_point_mass() {
        assert_close(entropy(&Pmf::uniform(2)), 1.0, 1e-15);
        assert_close(entropy(&Pmf::point_mass(3, 1)), 0.0, 1e-15);
    }

    #[test]
    fn entropy_bernoulli_02() {
        // Oracle: direct evaluation of -0.2 log2 0.2 - 0.8 log2 0.8.
        let oracle = -(0.2f64 * 0.2f64.log2() + 0.8 * 0.8f64.log2());
        assert_close(oracle, 0.7219280948873623, 1e-15);
        assert_close(entropy(&Pmf::bernoulli(0.2).unwrap()), 0.7219280948873623, 1e-12);
    }

    #[test]
    fn pmf_validation_rejects_bad_input() {
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn mutual_information_independent_and_coupled() {
        let product = JointPmf::from_table2(&[vec![0.18, 0.42], vec![0.12, 0.28]]).unwrap();
        assert_close(mutual_information(&product), 0.0, 1e-12);
        let coupled = JointPmf::from_table2(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_close(mutual_information(&coupled), 1.0, 1e-12);
    }

    #[test]
    fn mutual_information_dsbs_example() {
        let src = TwoHopSource::dsbs_example();
        // Saturation value of the relay exponent in the paper's first figure.
        assert_close(src.i_xy(), 0.267659425886040, 1e-7);
    }

    #[test]
    fn kl_examples() {
        let p = Pmf::bernoulli(0.5).unwrap();
        let q = Pmf::bernoulli(0.25).unwrap();
        assert_close(kl_divergence(&p, &p).unwrap(), 0.0, 1e-15);
        // Oracle: 0.5 log2(0.5/0.75) + 0.5 log2(0.5/0.25).
        let oracle = 0.5 * (0.5f64 / 0.75).log2() + 0.5 * (0.5f64 / 0.25).log2();
        assert_close(kl_divergence(&p, &q).unwrap(), oracle, 1e-15);
        assert_close(oracle, 0.20751874963942185, 1e-15);
        let degenerate = Pmf::bernoulli(0.0).unwrap();
        assert_eq!(
            kl_divergence(&p, &degenerate).unwrap_err(),
            ProbError::AbsoluteContinuityViolation { symbol: 1 }
        );
    }

    #[test]
    fn compose_two_hop_dsbs_marginals() {
        let src = TwoHopSource::dsbs_example();
        // Two-line convolution: 0.4*0.2 + 0.6*0.8 and 0.56*0.2 + 0.44*0.8.
        assert_close(src.p_y().prob(1), 0.56, 1e-12);
        assert_close(src.p_z().prob(1), 0.464, 1e-12);
        // Derived P_XY matches entrywise composition.
        for x in 0..2 {
            for y in 0..2 {
                assert_close(
                    src.p_xy().prob(&[x, y]),
                    src.p_x().prob(x) * src.p_y_given_x().prob(x, y),
                    1e-12,
                );
            }
        }
    }

    #[test]
    fn compose_two_hop_noiseless_and_degenerate() {
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let id = ConditionalPmf::identity(2);
        let src = compose_two_hop(p_x.clone(), id.clone(), id.clone()).unwrap();
        assert_eq!(src.p_y().probs(), p_x.probs());
        assert_eq!(src.p_z().probs(), p_x.probs());

        let point = Pmf::point_mass(2, 1);
        let flip = ConditionalPmf::from_table(&[vec![0.2, 0.8], vec![0.8, 0.2]]).unwrap();
        let src = compose_two_hop(point, flip.clone(), flip).unwrap();
        assert_close(src.p_xy().prob(&[0, 0]), 0.0, 1e-15);
        assert_close(src.p_xy().prob(&[0, 1]), 0.0, 1e-15);
    }

    #[test]
    fn compose_two_hop_dimension_mismatch() {
        let p_x = Pmf::bernoulli(0.4).unwrap();
        let ch3 = ConditionalPmf::from_table(&[
            vec![0.5, 0.25, 0.25],
            vec![0.1, 0.1, 0.8],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        assert!(matches!(
            compose_two_hop(p_x, ch3.clone(), ch3),
            Err(ProbError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn empirical_type_examples() {
        let t = empirical_type(&[0, 0, 1, 1], 2).unwrap();
        assert_eq!(t.probs(), &[0.5, 0.5]);
        let t = empirical_type(&[0, 0, 0], 2).unwrap();
        assert_eq!(t.probs(), &[1.0, 0.0]);
        assert_eq!(empirical_type(&[], 2).unwrap_err(), ProbError::EmptySequence);
    }

    #[test]
    fn typicality_examples() {
        let p = Pmf::bernoulli(0.4).unwrap();
        // Type exactly P: typical for any mu > 0.
        let seq: Vec<usize> = std::iter::repeat(0).take(6).chain(std::iter::repeat(1).take(4)).collect();
        assert!(is_typical(&seq, &p, 1e-9).unwrap());
        // Zero-support clause.
        let point = Pmf::point_mass(2, 0);
        assert!(!is_typical(&[0, 0, 1, 0], &point, 0.9).unwrap());
        // Deviation |0.5 - 0.6| = 0.1 against mu = 0.05 / 0.15.
        let seq: Vec<usize> = (0..20).map(|i| i % 2).collect();
        assert!(!is_typical(&seq, &p, 0.05).unwrap());
        assert!(is_typical(&seq, &p, 0.15).unwrap());
    }

    #[test]
    fn joint_typicality_length_mismatch() {
        let j = JointPmf::from_table2(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let a = [0usize, 1, 0];
        let b = [0usize, 1];
        assert_eq!(
            is_jointly_typical(&[&a, &b], &j, 0.1).unwrap_err(),
            ProbError::LengthMismatch
        );
    }

    #[test]
    fn lift_channel_matches_hand_computation() {
        let src = TwoHopSource::dsbs_example();
        let ch = ConditionalPmf::from_table(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let j = lift_channel(src.p_xy(), &ch).unwrap();
        let mut expect = 0.0;
        for x in 0..2 {
            expect += ch.prob(x, 0) * src.p_xy().prob(&[x, 1]);
        }
        assert_close(j.prob(&[0, 1]), expect, 1e-15);
        assert_close(j.probs().iter().sum::<f64>(), 1.0, 1e-12);
    }
}
