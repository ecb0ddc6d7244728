mod drag;
mod gradcheck;
mod inspect;
mod instance;
mod matching;
mod serve;
mod simulate;

pub use drag::drag;
pub use gradcheck::gradcheck;
pub use inspect::inspect;
pub use instance::instance;
pub use matching::matching;
pub use serve::serve;
pub use simulate::simulate;
