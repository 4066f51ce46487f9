//! Inside weights and all-prefix weights of strings under weighted
//! context-free grammars in Chomsky normal form.
//!
//! ```
//! use pcfg_prefix::{Algorithm, Grammar, Prob, Scorer};
//!
//! let grammar = Grammar::parse("S -> S S : 0.4\nS -> 'a' : 0.6").unwrap();
//! let scorer = Scorer::<Prob>::new(&grammar, Algorithm::FastJl).unwrap();
//! let tokens = grammar.tokenize("a a a").unwrap();
//! let result = scorer.run(&tokens).unwrap();
//! assert!((result.per_prefix[2].0 - 0.256).abs() < 1e-12);
//! ```

pub mod bench;
pub mod error;
pub mod grammar;
pub mod inside;
pub mod leftcorner;
pub mod linalg;
pub mod oracle;
pub mod prefix;
pub mod semiring;

pub use error::{Error, Result};
pub use grammar::{Grammar, ValidationReport, WeightedGrammar};
pub use inside::{cky, cky_factored, Chart, PairChart};
pub use leftcorner::{left_corner_expectations, ClosureMethod, LeftCornerTables};
pub use linalg::{invert_closure, SquareMatrix};
pub use prefix::{fast_jl, fast_semiring_jl, jl, Algorithm, PrefixResult, Scorer};
pub use semiring::{Boolean, LogProb, Prob, Semiring, SemiringKind, Viterbi};
