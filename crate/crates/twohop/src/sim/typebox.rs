//! Exact multinomial computations over joint-typicality boxes.
//!
//! Fix an observed sequence and group its positions by symbol ("class").
//! A fresh i.i.d. sequence drawn from some pmf `q` lands in the strong
//! joint-typicality box exactly when, for every class `c`, the count
//! vector of the fresh symbols inside class `c` falls in a per-class box
//! of integer compositions. Those per-class events are independent
//! multinomials, so box probabilities, box-conditioned samples and
//! per-trial conditional error probabilities can all be computed exactly
//! by enumerating the (small) set of in-box compositions.
//!
//! This is what makes simulation possible at rates where the nominal
//! codebook has astronomically many entries: instead of materializing
//! the book, the number of jointly typical codewords and the chosen
//! codeword's contents are sampled from their exact distributions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::probability::JointPmf;

/// Natural-log factorials `ln 0!, ln 1!, ..., ln n!`.
#[derive(Debug, Clone)]
pub(crate) struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn up_to(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0f64;
        table.push(0.0);
        for i in 1..=n {
            acc += (i as f64).ln();
            table.push(acc);
        }
        Self(table)
    }

    fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
}

/// In-box compositions for one class, with their multinomial weights.
#[derive(Debug)]
pub(crate) struct ClassBox {
    comps: Vec<Vec<u32>>,
    /// log2 probability of each composition under `Multinomial(n_class, q)`.
    log2_weights: Vec<f64>,
    /// log2 of the total box probability; `-inf` when the box is empty.
    pub log2_total: f64,
}

impl ClassBox {
    fn build(
        n_total: usize,
        n_class: usize,
        q: &[f64],
        cell_refs: &[f64],
        mu: f64,
        lnf: &LnFactorials,
    ) -> Self {
        let k = q.len();
        let n = n_total as f64;
        // Integer count bounds reproducing |count/n - p| <= mu, with the
        // zero-support clause forcing empty cells.
        let mut lo = vec![0u32; k];
        let mut hi = vec![0u32; k];
        let mut feasible = true;
        for s in 0..k {
            let p = cell_refs[s];
            if p == 0.0 {
                lo[s] = 0;
                hi[s] = 0;
            } else {
                lo[s] = ((n * (p - mu) - 1e-9).ceil().max(0.0)) as u32;
                hi[s] = ((n * (p + mu) + 1e-9).floor().min(n_class as f64).max(-1.0)) as u32;
                if (n * (p + mu) + 1e-9).floor() < 0.0 {
                    feasible = false;
                }
            }
            if q[s] == 0.0 && lo[s] > 0 {
                feasible = false;
            }
            if lo[s] > hi[s] {
                feasible = false;
            }
        }
        let mut comps = Vec::new();
        if feasible {
            let mut current = vec![0u32; k];
            enumerate(&lo, &hi, n_class as u32, 0, &mut current, &mut comps);
        }
        let ln2 = std::f64::consts::LN_2;
        let log2_weights: Vec<f64> = comps
            .iter()
            .map(|c| {
                let mut lw = lnf.get(n_class) / ln2;
                for (s, &count) in c.iter().enumerate() {
                    if count > 0 {
                        // q[s] > 0 here: zero-probability symbols only admit
                        // zero counts by the feasibility screen above.
                        lw += -lnf.get(count as usize) / ln2 + count as f64 * q[s].log2();
                    }
                }
                lw
            })
            .collect();
        let log2_total = log_sum_exp2(&log2_weights);
        Self { comps, log2_weights, log2_total }
    }

    /// Sample a composition from the box-conditioned multinomial.
    fn sample(&self, rng: &mut impl Rng) -> &[u32] {
        debug_assert!(!self.comps.is_empty());
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        for (comp, &lw) in self.comps.iter().zip(&self.log2_weights) {
            acc += (lw - self.log2_total).exp2();
            if r < acc {
                return comp;
            }
        }
        self.comps.last().unwrap()
    }
}

fn enumerate(lo: &[u32], hi: &[u32], left: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == lo.len() - 1 {
        if left >= lo[pos] && left <= hi[pos] {
            current[pos] = left;
            out.push(current.clone());
        }
        return;
    }
    // Prune using the attainable range of the remaining coordinates.
    let rest_lo: u32 = lo[pos + 1..].iter().sum();
    let rest_hi: u32 = hi[pos + 1..].iter().sum();
    let from = lo[pos].max(left.saturating_sub(rest_hi));
    let to = hi[pos].min(left.saturating_sub(rest_lo));
    for c in from..=to.min(left) {
        if left - c < rest_lo || left - c > rest_hi {
            continue;
        }
        current[pos] = c;
        enumerate(lo, hi, left - c, pos + 1, current, out);
    }
}

fn log_sum_exp2(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.iter().map(|&v| (v - m).exp2()).sum::<f64>().log2()
}

pub(crate) fn log_sum_exp2_slice(values: &[f64]) -> f64 {
    log_sum_exp2(values)
}

/// Exact typicality-box computations for pairs `(class sequence, fresh
/// i.i.d. sequence)` against a fixed two-axis joint pmf (axis 0 =
/// class symbol, axis 1 = fresh symbol).
#[derive(Debug)]
pub(crate) struct PairTypicality {
    n: usize,
    mu: f64,
    k_class: usize,
    k_sym: usize,
    /// Joint reference probabilities, row-major `k_class x k_sym`.
    joint: Vec<f64>,
    /// Generation pmf of the fresh sequence.
    q: Vec<f64>,
    lnf: Arc<LnFactorials>,
    cache: Mutex<HashMap<(usize, usize), Arc<ClassBox>>>,
}

impl PairTypicality {
    pub fn new(joint: &JointPmf, q: &[f64], n: usize, mu: f64, lnf: Arc<LnFactorials>) -> Self {
        assert_eq!(joint.dims().len(), 2);
        let (k_class, k_sym) = (joint.dims()[0], joint.dims()[1]);
        assert_eq!(q.len(), k_sym);
        Self {
            n,
            mu,
            k_class,
            k_sym,
            joint: joint.probs().to_vec(),
            q: q.to_vec(),
            lnf,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn class_box(&self, class: usize, n_class: usize) -> Arc<ClassBox> {
        if let Some(b) = self.cache.lock().unwrap().get(&(class, n_class)) {
            return Arc::clone(b);
        }
        let cells = &self.joint[class * self.k_sym..(class + 1) * self.k_sym];
        let b = Arc::new(ClassBox::build(self.n, n_class, &self.q, cells, self.mu, &self.lnf));
        self.cache
            .lock()
            .unwrap()
            .entry((class, n_class))
            .or_insert_with(|| Arc::clone(&b));
        b
    }

    fn class_counts(&self, class_seq: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.k_class];
        for &c in class_seq {
            counts[c] += 1;
        }
        counts
    }

    /// log2 probability that a fresh i.i.d.(q) sequence is jointly
    /// typical with `class_seq`; `-inf` if the box is empty.
    pub fn log2_box_prob(&self, class_seq: &[usize]) -> f64 {
        self.class_counts(class_seq)
            .iter()
            .enumerate()
            .map(|(c, &n_c)| self.class_box(c, n_c).log2_total)
            .sum()
    }

    /// Sample a fresh sequence from i.i.d.(q) conditioned on joint
    /// typicality with `class_seq`. `None` when the box is empty.
    pub fn sample_conditional(&self, class_seq: &[usize], rng: &mut impl Rng) -> Option<Vec<usize>> {
        let counts = self.class_counts(class_seq);
        let mut comps: Vec<Vec<u32>> = Vec::with_capacity(self.k_class);
        for (c, &n_c) in counts.iter().enumerate() {
            let b = self.class_box(c, n_c);
            if b.log2_total == f64::NEG_INFINITY {
                return None;
            }
            comps.push(b.sample(rng).to_vec());
        }
        // Within each class the conditioned sequence is an exchangeable
        // arrangement of the sampled composition.
        let mut pools: Vec<Vec<usize>> = comps
            .iter()
            .map(|comp| {
                let mut pool = Vec::new();
                for (s, &count) in comp.iter().enumerate() {
                    pool.extend(std::iter::repeat(s).take(count as usize));
                }
                shuffle(&mut pool, rng);
                pool
            })
            .collect();
        let mut out = Vec::with_capacity(class_seq.len());
        for &c in class_seq {
            out.push(pools[c].pop().expect("composition sums to class size"));
        }
        Some(out)
    }
}

fn shuffle<T>(v: &mut [T], rng: &mut impl Rng) {
    for i in (1..v.len()).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
}
