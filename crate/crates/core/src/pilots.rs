//! Multi-user pilot machinery.
//!
//! Two ways of sharing the training band between UEs:
//!
//! * orthogonal allocation, where each UE owns `M` tones no one else uses;
//! * aggressive reuse, where a group of UEs shares `L = L' + l` pilot
//!   dimensions. Each UE transmits on `L'` of them and stays silent on the
//!   other `l`. An energy detector per dimension tells the base station
//!   whether nobody, exactly one UE (identified by its silent set) or
//!   several UEs are present.
//!
//! Codebook columns are the `l`-subsets of rows marking silent dimensions.
//! Column `k` is the `k`-th `l`-subset in colexicographic order with the row
//! index reflected (`r ↦ L − 1 − r`); with `l = 1` and `K = L` this yields
//! the anti-diagonal pattern, column `i` silent on row `L − 1 − i`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::Rng;

use crate::channel::{select_pilot_tones, OfdmParams};
use crate::{Error, Result};

/// Pairwise-disjoint tone sets, one per UE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAllocation {
    pub sequences: Vec<Vec<usize>>,
}

impl PilotAllocation {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Draws `K` disjoint tone sets one after another, each uniformly from the
/// tones still free.
pub fn allocate_orthogonal<R: Rng + ?Sized>(
    users: usize,
    params: &OfdmParams,
    rng: &mut R,
) -> Result<PilotAllocation> {
    let needed = users as u128 * params.pilot_count as u128;
    if needed > params.bandwidth_time_product as u128 {
        return Err(Error::CapacityExceeded {
            requested: needed,
            capacity: params.bandwidth_time_product as u128,
        });
    }
    let mut used = BTreeSet::new();
    let mut sequences = Vec::with_capacity(users);
    for _ in 0..users {
        let tones = select_pilot_tones(params, &used, rng)?;
        used.extend(tones.iter().copied());
        sequences.push(tones);
    }
    Ok(PilotAllocation { sequences })
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Users a `(L', l)` code can separate: `C(L' + l, l)`.
pub fn max_users(ones: usize, zeros: usize) -> u128 {
    binomial((ones + zeros) as u64, zeros as u64)
}

/// Smallest `l ≥ 1` with `K ≤ C(L' + l, l)`.
pub fn choose_l(users: usize, ones: usize) -> Result<usize> {
    if users == 0 || ones == 0 {
        return Err(Error::InvalidParameter(format!(
            "need K ≥ 1 and L' ≥ 1, got K={users}, L'={ones}"
        )));
    }
    let mut l = 1;
    while max_users(ones, l) < users as u128 {
        l += 1;
    }
    Ok(l)
}

/// Fraction of pilot dimensions a UE actually transmits on, `L' / (L' + l)`.
pub fn code_efficiency(ones: usize, zeros: usize) -> Result<Ratio<usize>> {
    if ones == 0 || zeros == 0 {
        return Err(Error::InvalidParameter(format!(
            "need L' ≥ 1 and l ≥ 1, got L'={ones}, l={zeros}"
        )));
    }
    Ok(Ratio::new(ones, ones + zeros))
}

/// The `rank`-th `size`-subset of the naturals in colex order, ascending.
fn colex_unrank(mut rank: u128, size: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(size);
    for i in (1..=size).rev() {
        // largest c with C(c, i) <= rank
        let mut c = i - 1;
        while binomial(c as u64 + 1, i as u64) <= rank {
            c += 1;
        }
        rank -= binomial(c as u64, i as u64);
        out.push(c);
    }
    out.reverse();
    out
}

/// Binary pilot code: `L = L' + l` dimensions, one column per UE with
/// exactly `l` silent dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotCodebook {
    ones: usize,
    zeros: usize,
    silent: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl PilotCodebook {
    /// First `K` columns of the `(L', l)` family in canonical order.
    pub fn build(users: usize, ones: usize, zeros: usize) -> Result<Self> {
        if ones == 0 || zeros == 0 {
            return Err(Error::InvalidParameter(format!(
                "need L' ≥ 1 and l ≥ 1, got L'={ones}, l={zeros}"
            )));
        }
        let capacity = max_users(ones, zeros);
        if users as u128 > capacity {
            return Err(Error::CapacityExceeded {
                requested: users as u128,
                capacity,
            });
        }
        let dims = ones + zeros;
        let silent = (0..users)
            .map(|k| {
                let mut rows: Vec<usize> = colex_unrank(k as u128, zeros)
                    .into_iter()
                    .map(|r| dims - 1 - r)
                    .collect();
                rows.sort_unstable();
                rows
            })
            .collect();
        Self::from_silent_sets(ones, zeros, silent)
    }

    /// Codebook from explicit silent-row sets, validated.
    pub fn from_silent_sets(ones: usize, zeros: usize, silent: Vec<Vec<usize>>) -> Result<Self> {
        let dims = ones + zeros;
        let mut lookup = HashMap::with_capacity(silent.len());
        for (i, rows) in silent.iter().enumerate() {
            let distinct: BTreeSet<usize> = rows.iter().copied().collect();
            if rows.len() != zeros || distinct.len() != zeros || rows.iter().any(|&r| r >= dims) {
                return Err(Error::InvalidParameter(format!(
                    "column {i} must silence exactly {zeros} distinct rows below {dims}"
                )));
            }
            let key: Vec<usize> = distinct.into_iter().collect();
            if lookup.insert(key, i).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "column {i} duplicates an earlier column"
                )));
            }
        }
        let silent = silent
            .into_iter()
            .map(|mut rows| {
                rows.sort_unstable();
                rows
            })
            .collect();
        Ok(Self {
            ones,
            zeros,
            silent,
            lookup,
        })
    }

    /// `L'`, dimensions a UE transmits on.
    pub fn ones_per_column(&self) -> usize {
        self.ones
    }

    /// `l`, dimensions a UE leaves silent.
    pub fn zeros_per_column(&self) -> usize {
        self.zeros
    }

    /// `L = L' + l`.
    pub fn dimension(&self) -> usize {
        self.ones + self.zeros
    }

    /// Number of columns `K`.
    pub fn users(&self) -> usize {
        self.silent.len()
    }

    pub fn silent_rows(&self, ue: usize) -> &[usize] {
        &self.silent[ue]
    }

    /// Rows UE `ue` transmits on, ascending.
    pub fn transmit_rows(&self, ue: usize) -> Vec<usize> {
        let silent = &self.silent[ue];
        (0..self.dimension()).filter(|r| !silent.contains(r)).collect()
    }

    /// Column `ue` as bits, `true` = transmit.
    pub fn column(&self, ue: usize) -> Vec<bool> {
        let mut bits = vec![true; self.dimension()];
        for &r in &self.silent[ue] {
            bits[r] = false;
        }
        bits
    }

    /// Plain-text form: a header line `L K L' l`, then `L` rows of `K`
    /// characters `0`/`1`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {}",
            self.dimension(),
            self.users(),
            self.ones,
            self.zeros
        );
        let columns: Vec<Vec<bool>> = (0..self.users()).map(|k| self.column(k)).collect();
        for r in 0..self.dimension() {
            out.extend(columns.iter().map(|c| if c[r] { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::CodebookFormat { line, reason };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| bad(1, format!("not an integer: {f:?}"))))
            .collect::<Result<_>>()?;
        let [dims, users, ones, zeros] = fields[..] else {
            return Err(bad(1, format!("expected 4 fields, found {}", fields.len())));
        };
        if dims != ones + zeros {
            return Err(bad(1, format!("L = {dims} but L' + l = {}", ones + zeros)));
        }
        let mut silent = vec![Vec::with_capacity(zeros); users];
        for r in 0..dims {
            let line_no = r + 2;
            let row = lines.next().ok_or_else(|| bad(line_no, "missing row".into()))?;
            if row.chars().count() != users {
                return Err(bad(
                    line_no,
                    format!("expected {users} entries, found {}", row.chars().count()),
                ));
            }
            for (k, ch) in row.chars().enumerate() {
                match ch {
                    '1' => {}
                    '0' => silent[k].push(r),
                    other => return Err(bad(line_no, format!("unexpected character {other:?}"))),
                }
            }
        }
        if let Some((extra, _)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(bad(dims + 2 + extra, "trailing content".into()));
        }
        Self::from_silent_sets(ones, zeros, silent)
    }
}

/// What the base station concludes from one energy pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeOutcome {
    /// Every dimension at noise level.
    Empty,
    /// Exactly one UE, with this column index.
    Identified(usize),
    /// Fewer silent dimensions than any single UE leaves.
    Collision,
    /// A pattern no UE set can produce without detection errors.
    Invalid,
}

/// Decodes a per-dimension energy pattern (`true` = high energy).
pub fn decode_energy_vector(observed: &[bool], book: &PilotCodebook) -> Result<DecodeOutcome> {
    if observed.len() != book.dimension() {
        return Err(Error::DimensionMismatch {
            context: "energy pattern length",
            expected: book.dimension(),
            found: observed.len(),
        });
    }
    let silent: Vec<usize> = observed
        .iter()
        .enumerate()
        .filter(|(_, high)| !**high)
        .map(|(r, _)| r)
        .collect();
    let outcome = match silent.len() {
        n if n == book.dimension() => DecodeOutcome::Empty,
        n if n < book.zeros => DecodeOutcome::Collision,
        n if n == book.zeros => match book.lookup.get(&silent) {
            Some(&ue) => DecodeOutcome::Identified(ue),
            None => DecodeOutcome::Invalid,
        },
        _ => DecodeOutcome::Invalid,
    };
    Ok(outcome)
}

/// Noise-free energy pattern when the UEs in `active` transmit together.
pub fn superpose(active: &[usize], book: &PilotCodebook) -> Result<Vec<bool>> {
    let mut bits = vec![false; book.dimension()];
    for &ue in active {
        if ue >= book.users() {
            return Err(Error::InvalidParameter(format!(
                "UE {ue} outside codebook of {} columns",
                book.users()
            )));
        }
        for r in book.transmit_rows(ue) {
            bits[r] = true;
        }
    }
    Ok(bits)
}

/// Which UE pairs a verification run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCoverage {
    Exhaustive,
    /// Uniformly drawn distinct pairs.
    Sampled {
        pairs: u64,
        seed: u64,
    },
}

impl PairCoverage {
    /// Exhaustive up to `limit` users, sampled beyond.
    pub fn auto(users: usize, limit: usize, samples: u64, seed: u64) -> Self {
        if users <= limit {
            Self::Exhaustive
        } else {
            Self::Sampled { pairs: samples, seed }
        }
    }
}

/// Tallies from checking the detection criteria on a codebook.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub empty_checks: u64,
    pub empty_failures: u64,
    pub single_checks: u64,
    pub single_failures: u64,
    pub pair_checks: u64,
    pub pair_failures: u64,
    pub identified: u64,
    pub collisions: u64,
    pub empties: u64,
    pub invalid: u64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.empty_failures == 0 && self.single_failures == 0 && self.pair_failures == 0
    }

    fn tally(&mut self, outcome: DecodeOutcome) {
        match outcome {
            DecodeOutcome::Empty => self.empties += 1,
            DecodeOutcome::Identified(_) => self.identified += 1,
            DecodeOutcome::Collision => self.collisions += 1,
            DecodeOutcome::Invalid => self.invalid += 1,
        }
    }
}

/// Checks that silence decodes as empty, every single UE is identified and
/// every covered pair decodes as a collision.
pub fn verify_codebook(book: &PilotCodebook, coverage: PairCoverage) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();

    let outcome = decode_energy_vector(&superpose(&[], book)?, book)?;
    report.tally(outcome);
    report.empty_checks += 1;
    report.empty_failures += u64::from(outcome != DecodeOutcome::Empty);

    for ue in 0..book.users() {
        let outcome = decode_energy_vector(&superpose(&[ue], book)?, book)?;
        report.tally(outcome);
        report.single_checks += 1;
        report.single_failures += u64::from(outcome != DecodeOutcome::Identified(ue));
    }

    let check_pair = |report: &mut VerificationReport, a: usize, b: usize| -> Result<()> {
        let outcome = decode_energy_vector(&superpose(&[a, b], book)?, book)?;
        report.tally(outcome);
        report.pair_checks += 1;
        report.pair_failures += u64::from(outcome != DecodeOutcome::Collision);
        Ok(())
    };
    match coverage {
        PairCoverage::Exhaustive => {
            for a in 0..book.users() {
                for b in a + 1..book.users() {
                    check_pair(&mut report, a, b)?;
                }
            }
        }
        PairCoverage::Sampled { pairs, seed } if book.users() >= 2 => {
            let mut rng = crate::rng::seeded(seed);
            for _ in 0..pairs {
                let pick = rand::seq::index::sample(&mut rng, book.users(), 2);
                check_pair(&mut report, pick.index(0), pick.index(1))?;
            }
        }
        PairCoverage::Sampled { .. } => {}
    }
    Ok(report)
}
