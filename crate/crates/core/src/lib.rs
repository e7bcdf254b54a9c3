pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod path;
pub mod quantum;
pub mod sweep;
pub mod transmon;
pub mod two_qubit;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod chapter1 {}
    #[doc = include_str!("../../../book/src/holonomies.md")]
    pub mod chapter2 {}
    #[doc = include_str!("../../../book/src/paths.md")]
    pub mod chapter3 {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod chapter4 {}
    #[doc = include_str!("../../../book/src/robustness.md")]
    pub mod chapter5 {}
    #[doc = include_str!("../../../book/src/two-qubit.md")]
    pub mod chapter6 {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod chapter7 {}
}
