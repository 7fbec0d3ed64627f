//! Branch weight vectors over an exchange alphabet.

use std::fmt;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::exchange::{Alphabet, BranchId};
use crate::numeric::Scalar;

/// Nonnegative weights, one per branch label. Immutable once built; carried
/// (switch defect zero) and normalized (total one) are properties checked by
/// the operations that need them, not by the type.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<S> {
    alphabet: Alphabet,
    values: Vec<S>,
}

impl<S: Scalar> WeightVector<S> {
    pub fn new(alphabet: Alphabet, values: Vec<S>) -> Result<Self> {
        if values.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch {
                detail: format!(
                    "{} values for {} labels",
                    values.len(),
                    alphabet.len()
                ),
            });
        }
        Ok(WeightVector { alphabet, values })
    }

    /// Builds from `(label, weight)` pairs; every alphabet label must appear
    /// exactly once.
    pub fn from_pairs<L: AsRef<str>>(alphabet: Alphabet, pairs: &[(L, S)]) -> Result<Self> {
        let mut values: Vec<Option<S>> = vec![None; alphabet.len()];
        for (label, value) in pairs {
            let id = alphabet.id_of(label.as_ref()).ok_or_else(|| {
                Error::AlphabetMismatch {
                    detail: format!("unknown label `{}`", label.as_ref()),
                }
            })?;
            if values[id.index()].replace(value.clone()).is_some() {
                return Err(Error::AlphabetMismatch {
                    detail: format!("label `{}` given twice", label.as_ref()),
                });
            }
        }
        let values: Option<Vec<S>> = values.into_iter().collect();
        match values {
            Some(values) => Ok(WeightVector { alphabet, values }),
            None => Err(Error::AlphabetMismatch {
                detail: "missing labels".into(),
            }),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: BranchId) -> &S {
        &self.values[id.index()]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn total(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| acc + v.clone())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= S::zero())
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|v| *v > S::zero())
    }

    /// Scales so the total is one. The total must be nonzero.
    pub fn normalized(&self) -> Self {
        let total = self.total();
        debug_assert!(!total.is_zero());
        let values = self
            .values
            .iter()
            .map(|v| v.clone() / total.clone())
            .collect();
        WeightVector {
            alphabet: self.alphabet.clone(),
            values,
        }
    }

    /// Maps into another scalar mode. Exact→fast rounds; fast→exact is
    /// lossless (doubles are dyadic).
    pub fn convert<T: Scalar>(&self) -> WeightVector<T> {
        let values = self.values.iter().map(|v| T::from_f64(v.to_f64())).collect();
        WeightVector {
            alphabet: self.alphabet.clone(),
            values,
        }
    }

    /// JSON object keyed by label, values rendered as strings
    /// (`p/q` in exact mode, decimal in fast mode).
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for id in self.alphabet.ids() {
            map.insert(
                self.alphabet.label(id).to_owned(),
                Value::String(self.get(id).render()),
            );
        }
        Value::Object(map)
    }

    pub fn from_json(alphabet: Alphabet, value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("weights must be a JSON object".into()))?;
        let mut pairs = Vec::with_capacity(obj.len());
        for (label, v) in obj {
            let text = v
                .as_str()
                .ok_or_else(|| Error::Parse(format!("weight `{label}` must be a string")))?;
            pairs.push((label.clone(), S::parse(text)?));
        }
        WeightVector::from_pairs(alphabet, &pairs)
    }
}

impl<S: Scalar> fmt::Display for WeightVector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.alphabet.ids().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}={}", self.alphabet.label(id), self.get(id).render())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::NonclassicalExchange;
    use num_rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn pairs_round_trip_json() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let w = WeightVector::from_pairs(
            ex.alphabet().clone(),
            &[("a", rat(1, 4)), ("b", rat(1, 2)), ("c", rat(1, 4))],
        )
        .unwrap();
        let json = w.to_json();
        let back = WeightVector::<BigRational>::from_json(ex.alphabet().clone(), &json).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn missing_label_rejected() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let res = WeightVector::from_pairs(ex.alphabet().clone(), &[("a", rat(1, 1))]);
        assert!(res.is_err());
    }

    #[test]
    fn normalization() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let w =
            WeightVector::from_pairs(ex.alphabet().clone(), &[("a", 3.0f64), ("b", 1.0)]).unwrap();
        let n = w.normalized();
        assert_eq!(n.values(), &[0.75, 0.25]);
    }
}
