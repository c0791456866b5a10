use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeMap;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::textindex::Term;

/// A lexical unit a query model can weight: a single term or an exact n-gram.
///
/// Ordering puts every unigram before every n-gram; within a kind the order is
/// lexicographic. Scoring iterates entities in this order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexEntity {
    Term(Term),
    Ngram(Vec<Term>),
}

impl LexEntity {
    pub fn term(t: impl Into<Term>) -> Self {
        LexEntity::Term(t.into())
    }

    pub fn ngram<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Term>,
    {
        LexEntity::Ngram(terms.into_iter().map(Into::into).collect())
    }

    pub fn order(&self) -> usize {
        match self {
            LexEntity::Term(_) => 1,
            LexEntity::Ngram(ts) => ts.len(),
        }
    }
}

impl fmt::Display for LexEntity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexEntity::Term(t) => f.write_str(t),
            // Indri's ordered-window syntax.
            LexEntity::Ngram(ts) => write!(f, "#1({})", ts.join(" ")),
        }
    }
}

/// Sparse entity → weight map (θ). Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryModel {
    weights: BTreeMap<LexEntity, f64>,
}

impl QueryModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets a weight; a zero weight removes the entity.
    ///
    /// Panics on a non-finite weight.
    pub fn set(&mut self, entity: LexEntity, weight: f64) {
        assert!(weight.is_finite(), "query model weight must be finite, got {weight}");
        if weight == 0.0 {
            self.weights.remove(&entity);
        } else {
            self.weights.insert(entity, weight);
        }
    }

    /// Adds to an entity's weight, dropping it if the sum is zero.
    pub fn add(&mut self, entity: LexEntity, delta: f64) {
        let w = self.weights.get(&entity).copied().unwrap_or(0.0) + delta;
        self.set(entity, w);
    }

    pub fn get(&self, entity: &LexEntity) -> f64 {
        self.weights.get(entity).copied().unwrap_or(0.0)
    }

    pub fn weight_of_term(&self, term: &str) -> f64 {
        self.get(&LexEntity::Term(term.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LexEntity, f64)> {
        self.weights.iter().map(|(e, w)| (e, *w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scaled(&self, c: f64) -> QueryModel {
        let mut out = QueryModel::new();
        for (e, w) in self.iter() {
            out.set(e.clone(), w * c);
        }
        out
    }

    pub fn from_terms<I, S>(pairs: I) -> QueryModel
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<Term>,
    {
        let mut out = QueryModel::new();
        for (t, w) in pairs {
            out.add(LexEntity::Term(t.into()), w);
        }
        out
    }
}

impl FromIterator<(LexEntity, f64)> for QueryModel {
    fn from_iter<T: IntoIterator<Item = (LexEntity, f64)>>(iter: T) -> Self {
        let mut out = QueryModel::new();
        for (e, w) in iter {
            out.add(e, w);
        }
        out
    }
}

impl Serialize for QueryModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.weights.len()))?;
        for (e, w) in &self.weights {
            map.serialize_entry(&e.to_string(), w)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for QueryModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(deserializer)?;
        let mut out = QueryModel::new();
        for (k, w) in raw {
            if !w.is_finite() {
                return Err(D::Error::custom(format!("non-finite weight for {k}")));
            }
            let entity = match k.strip_prefix("#1(").and_then(|r| r.strip_suffix(')')) {
                Some(inner) => LexEntity::ngram(inner.split_whitespace()),
                None => LexEntity::Term(k),
            };
            out.add(entity, w);
        }
        Ok(out)
    }
}
