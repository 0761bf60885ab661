use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::fsm::FiniteStateMachine;
use crate::error::{Error, Result};

type ImageFn<A, B> = dyn Fn(&A) -> Vec<B> + Send + Sync;

/// A relation `A → B`, given by the image of each element.
///
/// Images are deduplicated, so a relation behaves as a set-valued map even
/// when the carrier has no total order (complex numbers, for instance).
pub struct Relation<A, B = A> {
    image: Arc<ImageFn<A, B>>,
}

impl<A, B> Clone for Relation<A, B> {
    fn clone(&self) -> Self {
        Self {
            image: Arc::clone(&self.image),
        }
    }
}

impl<A, B> fmt::Debug for Relation<A, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Relation(..)")
    }
}

fn dedup<T: PartialEq>(values: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

impl<A: 'static, B: PartialEq + 'static> Relation<A, B> {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&A) -> Vec<B> + Send + Sync + 'static,
    {
        Self { image: Arc::new(f) }
    }

    pub fn apply(&self, a: &A) -> Vec<B> {
        dedup((self.image)(a))
    }

    /// `self` first, then `next`.
    pub fn then<C: PartialEq + 'static>(&self, next: &Relation<B, C>) -> Relation<A, C> {
        let (first, second) = (Arc::clone(&self.image), Arc::clone(&next.image));
        Relation::new(move |a| dedup(first(a)).iter().flat_map(|b| second(b)).collect())
    }
}

impl<A, B> Relation<A, B>
where
    A: PartialEq + Send + Sync + 'static,
    B: PartialEq + Clone + Send + Sync + 'static,
{
    pub fn from_pairs(pairs: Vec<(A, B)>) -> Self {
        Relation::new(move |a| pairs.iter().filter(|(x, _)| x == a).map(|(_, b)| b.clone()).collect())
    }
}

impl<A: PartialEq + Clone + 'static> Relation<A, A> {
    pub fn identity() -> Self {
        Relation::new(|a: &A| vec![a.clone()])
    }
}

impl Relation<Complex64> {
    /// `k_c : z ↦ z c`.
    pub fn multiplier(c: Complex64) -> Self {
        Relation::new(move |z| vec![z * c])
    }
}

/// Symbol → relation on a carrier `X`, with an encoder from inputs `I` and a
/// decoder to outputs `O`. Without a codec both are the identity.
pub struct GeneralLabeling<X, I = X, O = X> {
    labels: BTreeMap<String, Relation<X>>,
    encoder: Relation<I, X>,
    decoder: Relation<X, O>,
}

impl<X, I, O> Clone for GeneralLabeling<X, I, O> {
    fn clone(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
        }
    }
}

impl<X: PartialEq + Clone + 'static> GeneralLabeling<X> {
    pub fn new(labels: BTreeMap<String, Relation<X>>) -> Self {
        Self {
            labels,
            encoder: Relation::identity(),
            decoder: Relation::identity(),
        }
    }
}

impl<X, I, O> GeneralLabeling<X, I, O>
where
    X: PartialEq + 'static,
    I: 'static,
    O: PartialEq + 'static,
{
    pub fn with_codec(labels: BTreeMap<String, Relation<X>>, encoder: Relation<I, X>, decoder: Relation<X, O>) -> Self {
        Self {
            labels,
            encoder,
            decoder,
        }
    }

    pub fn label(&self, symbol: &str) -> Result<&Relation<X>> {
        self.labels.get(symbol).ok_or_else(|| Error::UnknownSymbol(symbol.to_owned()))
    }

    /// Every alphabet symbol has a label.
    pub fn check_total(&self, fsm: &FiniteStateMachine) -> Result<()> {
        match fsm.alphabet().iter().find(|a| !self.labels.contains_key(a.as_str())) {
            Some(a) => Err(Error::UnknownSymbol(a.clone())),
            None => Ok(()),
        }
    }

    pub fn encoder(&self) -> &Relation<I, X> {
        &self.encoder
    }

    pub fn decoder(&self) -> &Relation<X, O> {
        &self.decoder
    }
}

/// `w^Λ = a₁^Λ ∘ ⋯ ∘ a_n^Λ`, applied left to right; the empty word gives
/// the identity.
pub fn word_relation<X, I, O, S>(labeling: &GeneralLabeling<X, I, O>, word: &[S]) -> Result<Relation<X>>
where
    X: PartialEq + Clone + 'static,
    I: 'static,
    O: PartialEq + 'static,
    S: AsRef<str>,
{
    word.iter().try_fold(Relation::identity(), |acc, a| Ok(acc.then(labeling.label(a.as_ref())?)))
}

/// `E ∘ |F^Λ| ∘ D` applied to `input`: the union over accepted words of the
/// word relations. `bound` caps the word length and is required when the
/// language is infinite.
pub fn machine_behavior<X, I, O>(
    fsm: &FiniteStateMachine,
    labeling: &GeneralLabeling<X, I, O>,
    input: &I,
    bound: Option<usize>,
) -> Result<Vec<O>>
where
    X: PartialEq + Clone + 'static,
    I: 'static,
    O: PartialEq + 'static,
{
    labeling.check_total(fsm)?;
    let max_len = match bound {
        Some(b) => b,
        None => fsm.accepting_len_bound().ok_or(Error::UnboundedLanguage)?,
    };
    let encoded = labeling.encoder.apply(input);
    let mut out: Vec<O> = Vec::new();
    for word in fsm.accepted_words(max_len) {
        let names: Vec<&str> = word.iter().map(|&a| fsm.alphabet()[a].as_str()).collect();
        let relation = word_relation(labeling, &names)?;
        for x in &encoded {
            for y in relation.apply(x) {
                out.extend(labeling.decoder.apply(&y));
            }
        }
    }
    Ok(dedup(out))
}

/// The two-state, one-transition machine whose extended behavior is `zeta`.
///
/// The carrier is `Y × Z`; the encoder pairs an input with `anchor`, the
/// single label replaces the second component by every `ζ`-image of the
/// first, and the decoder projects onto it.
pub fn universal_relation_machine<Y, Z>(
    zeta: Vec<(Y, Z)>,
    anchor: Z,
) -> Result<(FiniteStateMachine, GeneralLabeling<(Y, Z), Y, Z>)>
where
    Y: PartialEq + Clone + Send + Sync + 'static,
    Z: PartialEq + Clone + Send + Sync + 'static,
{
    if zeta.is_empty() {
        return Err(Error::InvalidInput("the relation to realize is empty".into()));
    }
    let fsm = FiniteStateMachine::new(&["s0", "s1"], &["a"], &[("s0", "a", "s1")], "s0", &["s1"])?;
    let label = Relation::new(move |(y, _): &(Y, Z)| {
        zeta.iter().filter(|(a, _)| a == y).map(|(a, b)| (a.clone(), b.clone())).collect()
    });
    let encoder = Relation::new(move |y: &Y| vec![(y.clone(), anchor.clone())]);
    let decoder = Relation::new(|(_, z): &(Y, Z)| vec![z.clone()]);
    let labeling = GeneralLabeling::with_codec(BTreeMap::from([("a".to_owned(), label)]), encoder, decoder);
    Ok((fsm, labeling))
}
