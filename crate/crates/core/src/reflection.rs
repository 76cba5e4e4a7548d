//! Reflection-principle coherence auditing, classical and quantum.
//!
//! Classical: a price book is coherent when the current price of an event
//! equals the expectation of the anticipated future prices,
//! `P0(E) = sum_q P0(P_tau(E) = q) q`. A violation is witnessed by an
//! explicit Dutch book: a finite set of transactions, each fair at the time
//! it is made, whose net payoff is a sure loss. The witness is machine
//! checkable by exhaustive payoff enumeration.
//!
//! Quantum: the reflected state `rho~ = sum_i p_i rho_i` is what coherence
//! mandates for present gambles about post-measurement futures; a claimed
//! state that differs is flagged together with the effect that best exposes
//! the gap.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{post_measurement_state, KrausMap, PROBABILITY_FLOOR};
use crate::error::{Error, Result};
use crate::matrix::{cr, eig_hermitian, ComplexMatrix};
use crate::quantum::{DensityMatrix, Effect};

/// Current price of an event plus a distribution over anticipated future
/// prices: `P0(E)` and pairs (q, w) with w = P0(P_tau(E) = q).
///
/// Weights sum to one; anticipated prices are distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriceBookRepr", into = "PriceBookRepr")]
pub struct PriceBook {
    p0: f64,
    anticipations: Vec<Anticipation>,
}

/// One anticipated future price q with probability weight w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anticipation {
    pub q: f64,
    pub w: f64,
}

#[derive(Serialize, Deserialize)]
struct PriceBookRepr {
    p0: f64,
    anticipations: Vec<Anticipation>,
}

impl TryFrom<PriceBookRepr> for PriceBook {
    type Error = Error;

    fn try_from(r: PriceBookRepr) -> Result<Self> {
        PriceBook::new(r.p0, r.anticipations)
    }
}

impl From<PriceBook> for PriceBookRepr {
    fn from(b: PriceBook) -> Self {
        PriceBookRepr {
            p0: b.p0,
            anticipations: b.anticipations,
        }
    }
}

impl PriceBook {
    pub fn new(p0: f64, anticipations: Vec<Anticipation>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) || !p0.is_finite() {
            return Err(Error::InvalidPriceBook(format!("p0 = {p0} outside [0, 1]")));
        }
        if anticipations.is_empty() {
            return Err(Error::InvalidPriceBook(
                "at least one anticipated price is required".into(),
            ));
        }
        for a in &anticipations {
            if !(0.0..=1.0).contains(&a.q) || !(0.0..=1.0).contains(&a.w) {
                return Err(Error::InvalidPriceBook(format!(
                    "anticipation (q = {}, w = {}) outside [0, 1]",
                    a.q, a.w
                )));
            }
        }
        let total: f64 = anticipations.iter().map(|a| a.w).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidPriceBook(format!(
                "weights sum to {total}, not 1"
            )));
        }
        for (i, a) in anticipations.iter().enumerate() {
            for b in &anticipations[i + 1..] {
                if (a.q - b.q).abs() <= 1e-12 {
                    return Err(Error::InvalidPriceBook(format!(
                        "anticipated prices must be distinct, found q = {} twice",
                        a.q
                    )));
                }
            }
        }
        Ok(Self { p0, anticipations })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn anticipations(&self) -> &[Anticipation] {
        &self.anticipations
    }

    /// Expectation of the anticipated future prices, sum_a w_a q_a.
    pub fn anticipated_mean(&self) -> f64 {
        self.anticipations.iter().map(|a| a.w * a.q).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeTime {
    /// t = 0, when the book is audited.
    Initial,
    /// t = tau, after the agent learns her future price.
    Later,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeSide {
    Buy,
    Sell,
}

/// What a lottery ticket pays on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TicketKind {
    /// Pays $1 if the event E is true at maturity.
    Event,
    /// Pays $1 if the a-th anticipated price turns out to be the agent's
    /// price at tau.
    Anticipation(usize),
}

/// One transaction of the Dutch book, fair for the agent at the time it is
/// made. A `conditional_on` transaction executes only in the branch where
/// that anticipation obtains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub time: TradeTime,
    pub side: TradeSide,
    pub ticket: TicketKind,
    pub price: f64,
    pub stake: f64,
    pub conditional_on: Option<usize>,
}

/// A sure-loss witness: transactions whose net payoff for the agent is at
/// most `-guaranteed_loss` in every branch of the event lattice
/// (anticipation realized x event truth value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutchBook {
    pub transactions: Vec<Transaction>,
    pub guaranteed_loss: f64,
    n_anticipations: usize,
    anticipated_prices: Vec<f64>,
}

impl DutchBook {
    /// Agent's net payoff in the branch where anticipation `realized`
    /// obtains and the event has truth value `event_true`.
    pub fn payoff(&self, realized: usize, event_true: bool) -> f64 {
        let mut cash = 0.0;
        let mut event_claim = 0.0;
        let mut anticipation_claims = vec![0.0; self.n_anticipations];
        for t in &self.transactions {
            if let Some(a) = t.conditional_on {
                if a != realized {
                    continue;
                }
            }
            let sign = match t.side {
                TradeSide::Buy => -1.0,
                TradeSide::Sell => 1.0,
            };
            cash += sign * t.price * t.stake;
            match t.ticket {
                TicketKind::Event => event_claim -= sign * t.stake,
                TicketKind::Anticipation(a) => anticipation_claims[a] -= sign * t.stake,
            }
        }
        let mut payoff = cash;
        if event_true {
            payoff += event_claim;
        }
        payoff += anticipation_claims[realized];
        payoff
    }

    /// Exhaustive enumeration over the event lattice; the witness is valid
    /// iff this is strictly negative (and at most `-guaranteed_loss`).
    pub fn worst_case_payoff(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for a in 0..self.n_anticipations {
            for event_true in [false, true] {
                worst = worst.max(self.payoff(a, event_true));
            }
        }
        worst
    }

    pub fn n_anticipations(&self) -> usize {
        self.n_anticipations
    }
}

impl fmt::Display for DutchBook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "sure loss of at least ${:.6} in every branch:",
            self.guaranteed_loss
        )?;
        writeln!(f, "{:<6} {:<5} {:>8} {:<24} {:>8}  condition", "time", "side", "stake", "ticket", "price")?;
        for t in &self.transactions {
            let time = match t.time {
                TradeTime::Initial => "t0",
                TradeTime::Later => "t_tau",
            };
            let side = match t.side {
                TradeSide::Buy => "buy",
                TradeSide::Sell => "sell",
            };
            let ticket = match t.ticket {
                TicketKind::Event => "$1 if E".to_string(),
                TicketKind::Anticipation(a) => {
                    format!("$1 if P_tau(E) = {:.4}", self.anticipated_prices[a])
                }
            };
            let cond = match t.conditional_on {
                None => String::new(),
                Some(a) => format!("P_tau(E) = {:.4}", self.anticipated_prices[a]),
            };
            writeln!(
                f,
                "{time:<6} {side:<5} {:>8.4} {ticket:<24} {:>8.4}  {cond}",
                t.stake, t.price
            )?;
        }
        Ok(())
    }
}

/// Verdict of the classical reflection audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassicalVerdict {
    Coherent,
    Incoherent(DutchBook),
}

impl ClassicalVerdict {
    pub fn is_coherent(&self) -> bool {
        matches!(self, ClassicalVerdict::Coherent)
    }
}

/// Audits `P0(E) = sum_a w_a q_a` and, on violation, constructs a verified
/// Dutch book.
///
/// The construction uses unit-stake event tickets plus anticipation tickets
/// staked at q_a: when the current price is too high the agent buys at t0
/// and unwinds at each anticipated price; mirrored when it is too low. The
/// side bets on which anticipation obtains make the loss branch-independent.
/// Stakes are valid, not optimized.
pub fn check_classical_reflection(book: &PriceBook, tol: f64) -> Result<ClassicalVerdict> {
    let mean = book.anticipated_mean();
    let gap = book.p0() - mean;
    if gap.abs() <= tol {
        return Ok(ClassicalVerdict::Coherent);
    }

    // gap > 0: buy dear at t0, sell cheap(er on average) at tau.
    // gap < 0: sell cheap at t0, buy dear(er on average) at tau.
    let (t0_side, tau_side, hedge_side) = if gap > 0.0 {
        (TradeSide::Buy, TradeSide::Sell, TradeSide::Sell)
    } else {
        (TradeSide::Sell, TradeSide::Buy, TradeSide::Buy)
    };

    let mut transactions = vec![Transaction {
        time: TradeTime::Initial,
        side: t0_side,
        ticket: TicketKind::Event,
        price: book.p0(),
        stake: 1.0,
        conditional_on: None,
    }];
    for (a, ant) in book.anticipations().iter().enumerate() {
        transactions.push(Transaction {
            time: TradeTime::Later,
            side: tau_side,
            ticket: TicketKind::Event,
            price: ant.q,
            stake: 1.0,
            conditional_on: Some(a),
        });
        transactions.push(Transaction {
            time: TradeTime::Initial,
            side: hedge_side,
            ticket: TicketKind::Anticipation(a),
            price: ant.w,
            stake: ant.q,
            conditional_on: None,
        });
    }

    let dutch_book = DutchBook {
        transactions,
        guaranteed_loss: gap.abs(),
        n_anticipations: book.anticipations().len(),
        anticipated_prices: book.anticipations().iter().map(|a| a.q).collect(),
    };

    let worst = dutch_book.worst_case_payoff();
    if worst > -dutch_book.guaranteed_loss + 1e-12 || dutch_book.guaranteed_loss <= 0.0 {
        return Err(Error::InternalDisagreement {
            difference: worst + dutch_book.guaranteed_loss,
        });
    }
    Ok(ClassicalVerdict::Incoherent(dutch_book))
}

/// Verdict of a single price-rule check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PriceCoherence {
    Coherent,
    Incoherent { residual: f64 },
}

impl PriceCoherence {
    pub fn is_coherent(&self) -> bool {
        matches!(self, PriceCoherence::Coherent)
    }
}

/// Product-rule audit: coherent iff `|P0(E|D) P0(D) - P0(E, D)| <= tol`.
pub fn conditional_price_check(
    p_ed: f64,
    p_d: f64,
    p_e_given_d: f64,
    tol: f64,
) -> Result<PriceCoherence> {
    for (name, v) in [("P0(E,D)", p_ed), ("P0(D)", p_d), ("P0(E|D)", p_e_given_d)] {
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(Error::InvalidPriceBook(format!("{name} = {v} outside [0, 1]")));
        }
    }
    if p_d <= tol {
        return Err(Error::ZeroConditioningEvent { probability: p_d });
    }
    let residual = (p_e_given_d * p_d - p_ed).abs();
    Ok(if residual <= tol {
        PriceCoherence::Coherent
    } else {
        PriceCoherence::Incoherent { residual }
    })
}

/// A state the agent holds for the pre-measurement time together with the
/// measurement she contemplates performing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct ReflectionScenario {
    rho: DensityMatrix,
    measurement: KrausMap,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    rho: DensityMatrix,
    measurement: KrausMap,
}

impl TryFrom<ScenarioRepr> for ReflectionScenario {
    type Error = Error;

    fn try_from(r: ScenarioRepr) -> Result<Self> {
        ReflectionScenario::new(r.rho, r.measurement)
    }
}

impl From<ReflectionScenario> for ScenarioRepr {
    fn from(s: ReflectionScenario) -> Self {
        ScenarioRepr {
            rho: s.rho,
            measurement: s.measurement,
        }
    }
}

impl ReflectionScenario {
    pub fn new(rho: DensityMatrix, measurement: KrausMap) -> Result<Self> {
        if rho.dim() != measurement.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs measurement dim {}",
                rho.dim(),
                measurement.dim()
            )));
        }
        Ok(Self { rho, measurement })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn measurement(&self) -> &KrausMap {
        &self.measurement
    }
}

/// The reflected state `rho~ = sum_i p_i rho_i = sum_ik A_ik rho A_ik†`.
///
/// Computed along both routes — outcome-by-outcome mixing of renormalized
/// post-measurement states, and the merged operator sum — which must agree
/// to 1e-10. Outcomes below the probability floor contribute through the
/// operator route, where no conditioning is needed.
pub fn reflected_state(scenario: &ReflectionScenario) -> Result<DensityMatrix> {
    let rho = scenario.rho();
    let map = scenario.measurement();
    let dim = rho.dim();

    let mut mixture = ComplexMatrix::zeros(dim, dim);
    for i in 0..map.n_outcomes() {
        match post_measurement_state(rho, map, i) {
            Ok((state, p)) => mixture.add_scaled(cr(p), state.matrix()),
            Err(Error::ZeroProbabilityOutcome { .. }) => {
                mixture.add_scaled(Complex64::ONE, &map.outcome_action(i, rho.matrix()));
            }
            Err(e) => return Err(e),
        }
    }

    let merged = map.merged().apply(rho.matrix());

    let difference = mixture.max_abs_diff(&merged);
    if difference > 1e-10 {
        return Err(Error::InternalDisagreement { difference });
    }
    DensityMatrix::new(merged.hermitian_part())
}

/// Verdict of the quantum reflection audit. An incoherent verdict carries
/// the entrywise residual and the effect, drawn from the eigenprojectors of
/// the difference, that maximizes the detectable gamble discrepancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuantumVerdict {
    Coherent,
    Incoherent { residual: f64, witness: Effect },
}

impl QuantumVerdict {
    pub fn is_coherent(&self) -> bool {
        matches!(self, QuantumVerdict::Coherent)
    }
}

/// Compares a claimed state against the reflected state of a scenario.
///
/// Coherent iff the entrywise distance is within `tol`; otherwise the
/// witness is the eigenprojector of `rho~ - rho_claimed` with the largest
/// |eigenvalue| (ties broken toward the negative side, where the claim
/// overweights).
pub fn check_quantum_reflection(
    scenario: &ReflectionScenario,
    rho_claimed: &DensityMatrix,
    tol: f64,
) -> Result<QuantumVerdict> {
    if rho_claimed.dim() != scenario.rho().dim() {
        return Err(Error::DimensionMismatch(format!(
            "claimed state dim {} vs scenario dim {}",
            rho_claimed.dim(),
            scenario.rho().dim()
        )));
    }
    let reflected = reflected_state(scenario)?;
    let difference = &(reflected.matrix().clone()) - rho_claimed.matrix();
    let residual = difference.max_abs();
    if residual <= tol {
        return Ok(QuantumVerdict::Coherent);
    }
    let spectrum = eig_hermitian(&difference.hermitian_part())?;
    let mut best = 0usize;
    let mut best_key = (f64::NEG_INFINITY, 0.0);
    for (k, &lambda) in spectrum.eigenvalues().iter().enumerate() {
        let key = (lambda.abs(), -lambda);
        if key > best_key {
            best_key = key;
            best = k;
        }
    }
    let witness = Effect::new(spectrum.eigenprojector(best).hermitian_part())?;
    Ok(QuantumVerdict::Incoherent { residual, witness })
}

/// `S(rho~) - sum_i p_i S(rho_i)`, nonnegative up to numerical slack:
/// reflecting on a measurement never decreases entropy.
pub fn entropy_gap(scenario: &ReflectionScenario) -> Result<f64> {
    let reflected = reflected_state(scenario)?;
    let mut conditional = 0.0;
    for i in 0..scenario.measurement().n_outcomes() {
        match post_measurement_state(scenario.rho(), scenario.measurement(), i) {
            Ok((state, p)) => conditional += p * state.von_neumann_entropy(),
            // Zero-probability outcomes contribute p S(rho_i) -> 0.
            Err(Error::ZeroProbabilityOutcome { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(reflected.von_neumann_entropy() - conditional)
}

/// Floor shared with the channels module, re-exported for callers that
/// construct scenarios with near-dark outcomes.
pub const OUTCOME_FLOOR: f64 = PROBABILITY_FLOOR;
