//! Security of multi-hop warning dissemination in a one-dimensional vehicular
//! network where some relays tamper with what they forward.
//!
//! Three independent routes compute the probability that the destination
//! ends up with the true message:
//!
//! * [`sim`]: event-level Monte Carlo of the broadcast protocol,
//! * [`analytic`]: the conditional recursion over broadcast order, exact in
//!   messages and receptions and numerical in locations,
//! * [`oracle`]: exhaustive enumeration of every protocol choice on tiny roads.

pub mod analytic;
pub mod connectivity;
pub mod error;
pub mod estimate;
pub mod fusion;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod topology;

pub use analytic::{AnalyticConfig, BroadcastLayout, LayoutBudget, VoteDistribution};
pub use connectivity::ConnectionModel;
pub use error::{Error, Result};
pub use estimate::{Estimate, Method};
pub use fusion::{Inbox, Message};
pub use sim::{FixtureMalice, TrialOutcome};
pub use topology::{Scenario, Topology};
