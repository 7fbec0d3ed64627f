//! Generalized permutations with a single switch: two ordered rows of branch
//! labels in which every label occurs exactly twice. When some label repeats
//! within one row the exchange is non-classical; when every label occurs once
//! per row it degenerates to a classical interval exchange.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::weights::WeightVector;

/// Index of a branch label in the canonical alphabet order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchId(pub usize);

impl BranchId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Row {
    Top,
    Bottom,
}

impl Row {
    pub fn other(self) -> Row {
        match self {
            Row::Top => Row::Bottom,
            Row::Bottom => Row::Top,
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Row::Top => write!(f, "top"),
            Row::Bottom => write!(f, "bottom"),
        }
    }
}

/// Branch labels in canonical order (first occurrence reading top, then
/// bottom). Cheap to clone and share; weight vectors hold a reference to the
/// alphabet they are defined over.
#[derive(Debug, Clone)]
pub struct Alphabet {
    labels: Arc<Vec<String>>,
}

impl Alphabet {
    fn new(labels: Vec<String>) -> Self {
        Alphabet {
            labels: Arc::new(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: BranchId) -> &str {
        &self.labels[id.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of(&self, label: &str) -> Option<BranchId> {
        self.labels.iter().position(|l| l == label).map(BranchId)
    }

    pub fn ids(&self) -> impl Iterator<Item = BranchId> + '_ {
        (0..self.labels.len()).map(BranchId)
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.labels, &other.labels) || self.labels == other.labels
    }
}

impl Eq for Alphabet {}

/// A single-switch generalized permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonclassicalExchange {
    alphabet: Alphabet,
    top: Vec<BranchId>,
    bottom: Vec<BranchId>,
    classical: bool,
}

impl NonclassicalExchange {
    /// Validates and builds an exchange from label rows.
    ///
    /// Every label must occur exactly twice across both rows and both rows
    /// must be nonempty. Whether some label repeats within a single row is
    /// recorded as the classical/non-classical flag, not enforced.
    pub fn new<S: AsRef<str>>(top: &[S], bottom: &[S]) -> Result<Self> {
        if top.is_empty() || bottom.is_empty() {
            return Err(Error::EmptyRow);
        }
        let mut labels: Vec<String> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut intern = |label: &str| -> BranchId {
            match labels.iter().position(|l| l == label) {
                Some(i) => {
                    counts[i] += 1;
                    BranchId(i)
                }
                None => {
                    labels.push(label.to_owned());
                    counts.push(1);
                    BranchId(labels.len() - 1)
                }
            }
        };
        let top: Vec<BranchId> = top.iter().map(|l| intern(l.as_ref())).collect();
        let bottom: Vec<BranchId> = bottom.iter().map(|l| intern(l.as_ref())).collect();
        for (i, &count) in counts.iter().enumerate() {
            if count != 2 {
                return Err(Error::LabelCount {
                    label: labels[i].clone(),
                    count,
                });
            }
        }
        let alphabet = Alphabet::new(labels);
        let classical = alphabet.ids().all(|id| {
            top.iter().filter(|&&x| x == id).count() == 1
                && bottom.iter().filter(|&&x| x == id).count() == 1
        });
        Ok(NonclassicalExchange {
            alphabet,
            top,
            bottom,
            classical,
        })
    }

    /// Rebuilds an exchange over an existing alphabet from index rows.
    /// Used by induction moves; the same validity invariants are checked.
    pub(crate) fn from_rows(alphabet: Alphabet, top: Vec<BranchId>, bottom: Vec<BranchId>) -> Self {
        debug_assert!(!top.is_empty() && !bottom.is_empty());
        let classical = alphabet.ids().all(|id| {
            top.iter().filter(|&&x| x == id).count() == 1
                && bottom.iter().filter(|&&x| x == id).count() == 1
        });
        NonclassicalExchange {
            alphabet,
            top,
            bottom,
            classical,
        }
    }

    /// Parses `a a b | b c c`, with optional `top:` / `bottom:` prefixes.
    /// Labels are `[A-Za-z0-9_]+`, separated by whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let (top, bottom) = text
            .split_once('|')
            .ok_or_else(|| Error::Parse("expected `|` between rows".into()))?;
        let clean = |row: &str, prefix: &str| -> Result<Vec<String>> {
            let row = row.trim();
            let row = row.strip_prefix(prefix).unwrap_or(row);
            let labels: Vec<String> = row.split_whitespace().map(str::to_owned).collect();
            for l in &labels {
                if !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(Error::Parse(format!("bad label `{l}`")));
                }
            }
            Ok(labels)
        };
        let top = clean(top, "top:")?;
        let bottom = clean(bottom, "bottom:")?;
        NonclassicalExchange::new(&top, &bottom)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Alphabet size n.
    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn row(&self, row: Row) -> &[BranchId] {
        match row {
            Row::Top => &self.top,
            Row::Bottom => &self.bottom,
        }
    }

    pub fn top(&self) -> &[BranchId] {
        &self.top
    }

    pub fn bottom(&self) -> &[BranchId] {
        &self.bottom
    }

    pub fn is_classical(&self) -> bool {
        self.classical
    }

    pub fn is_nonclassical(&self) -> bool {
        !self.classical
    }

    pub fn multiplicity(&self, id: BranchId, row: Row) -> usize {
        self.row(row).iter().filter(|&&x| x == id).count()
    }

    /// Per-label difference (top multiplicity) − (bottom multiplicity).
    /// Since every label occurs exactly twice, entries lie in {−2, 0, 2},
    /// and the switch condition reads `switch_vector · w = 0`.
    pub fn switch_vector(&self) -> Vec<i64> {
        self.alphabet
            .ids()
            .map(|id| {
                self.multiplicity(id, Row::Top) as i64 - self.multiplicity(id, Row::Bottom) as i64
            })
            .collect()
    }

    /// Multiplicity-weighted top sum minus bottom sum; zero iff `w` is
    /// carried by this exchange.
    pub fn switch_defect<S: Scalar>(&self, w: &WeightVector<S>) -> Result<S> {
        if w.alphabet() != &self.alphabet {
            return Err(Error::AlphabetMismatch {
                detail: format!(
                    "weights over {:?}, exchange over {:?}",
                    w.alphabet().labels(),
                    self.alphabet.labels()
                ),
            });
        }
        let mut defect = S::zero();
        for &id in &self.top {
            defect = defect + w.get(id).clone();
        }
        for &id in &self.bottom {
            defect = defect - w.get(id).clone();
        }
        Ok(defect)
    }

    /// Canonical single-line form, also used as a cache key.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for NonclassicalExchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "top:")?;
        for &id in &self.top {
            write!(f, " {}", self.alphabet.label(id))?;
        }
        write!(f, " | bottom:")?;
        for &id in &self.bottom {
            write!(f, " {}", self.alphabet.label(id))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for NonclassicalExchange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NonclassicalExchange::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn valid_nonclassical() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        assert_eq!(ex.size(), 3);
        assert!(ex.is_nonclassical());
        assert_eq!(ex.to_string(), "top: a a b | bottom: b c c");
    }

    #[test]
    fn valid_classical_flag() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        assert!(ex.is_classical());
    }

    #[test]
    fn label_count_error() {
        let err = NonclassicalExchange::parse("a a | b").unwrap_err();
        match err {
            Error::LabelCount { label, count } => {
                assert_eq!(label, "b");
                assert_eq!(count, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_row_error() {
        assert!(matches!(
            NonclassicalExchange::new::<&str>(&["a", "a"], &[]),
            Err(Error::EmptyRow)
        ));
    }

    #[test]
    fn parse_accepts_prefixed_form() {
        let a = NonclassicalExchange::parse("top: a a b | bottom: b c c").unwrap();
        let b = NonclassicalExchange::parse("a a b | b c c").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn switch_defect_examples() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let w = WeightVector::from_pairs(
            ex.alphabet().clone(),
            &[("a", rat(1, 1)), ("b", rat(2, 1)), ("c", rat(1, 1))],
        )
        .unwrap();
        assert!(ex.switch_defect(&w).unwrap().is_zero());

        let w2 = WeightVector::from_pairs(
            ex.alphabet().clone(),
            &[("a", rat(1, 1)), ("b", rat(0, 1)), ("c", rat(0, 1))],
        )
        .unwrap();
        assert_eq!(ex.switch_defect(&w2).unwrap(), rat(2, 1));

        let classical = NonclassicalExchange::parse("a b | b a").unwrap();
        let w3 = WeightVector::from_pairs(
            classical.alphabet().clone(),
            &[("a", rat(7, 3)), ("b", rat(1, 5))],
        )
        .unwrap();
        assert!(classical.switch_defect(&w3).unwrap().is_zero());
    }

    #[test]
    fn alphabet_mismatch() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let other = NonclassicalExchange::parse("x y | y x").unwrap();
        let w = WeightVector::from_pairs(
            other.alphabet().clone(),
            &[("x", rat(1, 2)), ("y", rat(1, 2))],
        )
        .unwrap();
        assert!(matches!(
            ex.switch_defect(&w),
            Err(Error::AlphabetMismatch { .. })
        ));
    }
}
