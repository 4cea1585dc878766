//! Runs the guide's code blocks as doc-tests. One module per chapter so a
//! failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/traps.md")]
pub mod traps {}
#[doc = include_str!("../../../book/src/crystals.md")]
pub mod crystals {}
#[doc = include_str!("../../../book/src/transition.md")]
pub mod transition {}
#[doc = include_str!("../../../book/src/modes.md")]
pub mod modes {}
#[doc = include_str!("../../../book/src/barriers.md")]
pub mod barriers {}
#[doc = include_str!("../../../book/src/spin.md")]
pub mod spin {}
#[doc = include_str!("../../../book/src/lifetime.md")]
pub mod lifetime {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
