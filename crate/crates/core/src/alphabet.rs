//! Interned symbol alphabets and words over them.
//!
//! A [`Symbol`] is an index into one [`Alphabet`]; two symbols compare equal
//! exactly when they denote the same entry of the same table. Alphabets are
//! immutable after construction and cheap to clone. The declaration order of
//! an alphabet is significant: every tie-break in the crate (breadth-first
//! searches, shortest-word extraction, random draws over symbols) follows it.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// One symbol of an [`Alphabet`], identified by its index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug)]
struct Inner {
    texts: Vec<Arc<str>>,
}

/// An ordered, duplicate-free table of symbol texts.
#[derive(Clone, Debug)]
pub struct Alphabet {
    inner: Arc<Inner>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("empty symbol text")]
    EmptySymbol,
    #[error("alphabets overlap on symbol {0:?}")]
    Overlap(String),
}

impl Alphabet {
    /// Builds an alphabet from texts in declaration order.
    pub fn new<I, S>(texts: I) -> Result<Alphabet, AlphabetError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table: Vec<Arc<str>> = Vec::new();
        for t in texts {
            let t = t.as_ref();
            if t.is_empty() {
                return Err(AlphabetError::EmptySymbol);
            }
            if table.iter().any(|s| s.as_ref() == t) {
                return Err(AlphabetError::DuplicateSymbol(t.to_string()));
            }
            table.push(Arc::from(t));
        }
        Ok(Alphabet {
            inner: Arc::new(Inner { texts: table }),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.texts.is_empty()
    }

    /// Looks a symbol up by text.
    pub fn get(&self, text: &str) -> Option<Symbol> {
        self.inner
            .texts
            .iter()
            .position(|s| s.as_ref() == text)
            .map(|i| Symbol(i as u32))
    }

    /// The text of a symbol of this alphabet.
    pub fn text(&self, s: Symbol) -> &str {
        &self.inner.texts[s.index()]
    }

    pub fn contains(&self, s: Symbol) -> bool {
        s.index() < self.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.len() as u32).map(Symbol)
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.inner.texts.iter().map(|s| s.as_ref())
    }

    /// Concatenates two disjoint alphabets; entries of `self` keep their
    /// indices and entries of `other` are shifted by `self.len()`.
    pub fn concat(&self, other: &Alphabet) -> Result<Alphabet, AlphabetError> {
        for t in other.texts() {
            if self.get(t).is_some() {
                return Err(AlphabetError::Overlap(t.to_string()));
            }
        }
        Alphabet::new(self.texts().chain(other.texts()))
    }

    /// Builds a word from symbol texts; `None` if any text is unknown.
    pub fn word(&self, texts: &[&str]) -> Option<Word> {
        let mut w = Word::new();
        for t in texts {
            w.push(self.get(t)?);
        }
        Some(w)
    }

    /// Renders a word over this alphabet with single spaces between symbols.
    pub fn format_word(&self, w: &Word) -> String {
        let mut out = String::new();
        for (k, s) in w.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            out.push_str(self.text(s));
        }
        out
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.texts == other.inner.texts
    }
}

impl Eq for Alphabet {}

/// A finite sequence of symbols drawn from one alphabet.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new() -> Word {
        Word(Vec::new())
    }

    pub fn from_symbols(syms: Vec<Symbol>) -> Word {
        Word(syms)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }

    pub fn get(&self, i: usize) -> Option<Symbol> {
        self.0.get(i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    /// The word extended by one symbol.
    pub fn appended(&self, s: Symbol) -> Word {
        let mut w = self.clone();
        w.push(s);
        w
    }

    /// The concatenation `self . other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        w.0.extend_from_slice(&other.0);
        w
    }

    /// The subword `self[from..]`.
    pub fn suffix_from(&self, from: usize) -> Word {
        Word(self.0[from..].to_vec())
    }

    /// The subword `self[..to]`.
    pub fn prefix(&self, to: usize) -> Word {
        Word(self.0[..to].to_vec())
    }

    /// Shortlex order: by length first, then lexicographically by index.
    pub fn shortlex_cmp(&self, other: &Word) -> core::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Word {
        Word(v)
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<T: IntoIterator<Item = Symbol>>(iter: T) -> Word {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter().map(|s| s.0)).finish()
    }
}
