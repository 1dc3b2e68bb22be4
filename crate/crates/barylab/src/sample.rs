//! Search spaces: exhaustive string enumeration on finite domains and
//! deterministic seeded sampling on numeric domains.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{DomainDesc, FiniteDomain, Interval};
use crate::string::Str;
use crate::value::{Tol, Value};

/// Configuration for a property check or search.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Maximum string length in the quantifier space.
    pub max_len: usize,
    /// Samples per instance shape in sampled (numeric) mode.
    pub samples: usize,
    /// Seed for all sampled draws; recorded in every report.
    pub seed: u64,
    /// Evaluation budget; exceeding it aborts the check with an
    /// "unsupported: budget exceeded" status.
    pub budget: u64,
    /// Tolerance for numeric codomain comparison.
    pub tol: Tol,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_len: 4,
            samples: 64,
            seed: 0x5EED,
            budget: 10_000_000,
            tol: Tol::DEFAULT,
        }
    }
}

impl SearchConfig {
    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

/// Iterator over all strings of a fixed length over a finite domain, in
/// lexicographic (atom-index) order.
pub struct StringsOfLen<'a> {
    atoms: &'a [Value],
    odometer: Vec<usize>,
    done: bool,
}

impl<'a> Iterator for StringsOfLen<'a> {
    type Item = Str;

    fn next(&mut self) -> Option<Str> {
        if self.done {
            return None;
        }
        let s = Str::from(
            self.odometer.iter().map(|&i| self.atoms[i].clone()).collect::<Vec<_>>(),
        );
        // advance, last position fastest
        let k = self.atoms.len();
        let mut pos = self.odometer.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.odometer[pos] += 1;
            if self.odometer[pos] < k {
                break;
            }
            self.odometer[pos] = 0;
        }
        if self.odometer.is_empty() {
            self.done = true;
        }
        Some(s)
    }
}

/// Exhaustive string spaces over a finite domain.
#[derive(Clone)]
pub struct FiniteSpace {
    domain: FiniteDomain,
}

impl FiniteSpace {
    pub fn new(domain: FiniteDomain) -> FiniteSpace {
        FiniteSpace { domain }
    }

    pub fn domain(&self) -> &FiniteDomain {
        &self.domain
    }

    pub fn strings(&self, len: usize) -> StringsOfLen<'_> {
        StringsOfLen {
            atoms: self.domain.atoms(),
            odometer: vec![0; len],
            done: false,
        }
    }

    /// All nonempty strings of length 1..=max_len in (length, lexicographic)
    /// order — the canonical witness order.
    pub fn strings_upto(&self, max_len: usize) -> impl Iterator<Item = Str> + '_ {
        (1..=max_len).flat_map(move |n| self.strings(n))
    }

    pub fn count_upto(&self, max_len: usize) -> u64 {
        let k = self.domain.len() as u64;
        (1..=max_len as u32).map(|n| k.pow(n)).sum()
    }
}

/// Deterministic sampler for numeric and vector domains. Draws mix a small
/// lattice of simple values (so that integer-flavored counterexamples are
/// reachable), a Weyl low-discrepancy sequence over a clipped box, and
/// repeated-value strings.
pub struct Sampler {
    rng: ChaCha8Rng,
    pool: Vec<Value>,
    kind: SamplerKind,
    weyl_state: f64,
    weyl_step: f64,
}

#[derive(Clone, Copy)]
enum SamplerKind {
    Interval { lo: f64, hi: f64 },
    Vector { dim: usize, lo: f64, hi: f64 },
}

const LATTICE: [f64; 10] = [-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0];

fn clip_box(iv: &Interval) -> (f64, f64) {
    let lo = if iv.lo.is_finite() { iv.lo } else { -4.0 };
    let hi = if iv.hi.is_finite() { iv.hi } else { 4.0 };
    let span = hi - lo;
    let lo_eff = if iv.lo_open { lo + span * 1e-3 } else { lo };
    let hi_eff = if iv.hi_open { hi - span * 1e-3 } else { hi };
    (lo_eff, hi_eff)
}

/// The lattice of simple values inside a numeric domain. Exposed so that
/// bucket-style counterexample searches can enumerate it directly.
pub fn lattice_pool(domain: &DomainDesc) -> Vec<Value> {
    match domain {
        DomainDesc::RealInterval(iv) => {
            let mut pool: Vec<Value> = LATTICE
                .iter()
                .copied()
                .filter(|x| iv.contains(*x))
                .map(Value::num)
                .collect();
            let (lo, hi) = clip_box(iv);
            for extra in [lo, (lo + hi) / 2.0, hi] {
                let v = Value::num(extra);
                if iv.contains(extra) && !pool.contains(&v) {
                    pool.push(v);
                }
            }
            pool.sort();
            pool
        }
        DomainDesc::VectorSpace { dim } => {
            // small grid over {-1, 0, 1, 2}^dim, capped
            let axis = [-1.0, 0.0, 1.0, 2.0];
            let mut pool = Vec::new();
            let total = axis.len().pow((*dim).min(3) as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut coords = Vec::with_capacity(*dim);
                for _ in 0..*dim {
                    coords.push(axis[rem % axis.len()]);
                    rem /= axis.len();
                }
                pool.push(Value::point(coords));
            }
            pool.sort();
            pool.dedup();
            pool
        }
        DomainDesc::Finite(d) => d.atoms().to_vec(),
    }
}

impl Sampler {
    pub fn new(domain: &DomainDesc, seed: u64) -> Sampler {
        let pool = lattice_pool(domain);
        let kind = match domain {
            DomainDesc::RealInterval(iv) => {
                let (lo, hi) = clip_box(iv);
                SamplerKind::Interval { lo, hi }
            }
            DomainDesc::VectorSpace { dim } => SamplerKind::Vector { dim: *dim, lo: -2.0, hi: 3.0 },
            DomainDesc::Finite(_) => SamplerKind::Interval { lo: 0.0, hi: 1.0 },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weyl_state: f64 = rng.gen();
        Sampler {
            rng,
            pool,
            kind,
            weyl_state,
            // golden-ratio Kronecker step: equidistributed mod 1
            weyl_step: 0.618_033_988_749_894_9,
        }
    }

    fn next_weyl(&mut self) -> f64 {
        self.weyl_state = (self.weyl_state + self.weyl_step).fract();
        self.weyl_state
    }

    /// One sampled domain value: half the time from the lattice pool, half
    /// the time a low-discrepancy point of the box.
    pub fn value(&mut self) -> Value {
        if !self.pool.is_empty() && self.rng.gen_bool(0.5) {
            let i = self.rng.gen_range(0..self.pool.len());
            return self.pool[i].clone();
        }
        match self.kind {
            SamplerKind::Interval { lo, hi } => {
                let t = self.next_weyl();
                Value::num(lo + t * (hi - lo))
            }
            SamplerKind::Vector { dim, lo, hi } => {
                let coords = (0..dim)
                    .map(|_| {
                        let t = self.next_weyl();
                        lo + t * (hi - lo)
                    })
                    .collect();
                Value::point(coords)
            }
        }
    }

    /// One sampled string of the given length; with probability 1/4 a
    /// repeated-value string (all letters equal).
    pub fn string(&mut self, len: usize) -> Str {
        if len == 0 {
            return Str::empty();
        }
        if len > 1 && self.rng.gen_bool(0.25) {
            let v = self.value();
            return Str::one(v).power(len);
        }
        Str::from((0..len).map(|_| self.value()).collect::<Vec<_>>())
    }
}
