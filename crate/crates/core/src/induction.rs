//! Weight-driven Rauzy induction and expansion traces.
//!
//! One step compares the two row-end labels: the one carrying the larger
//! weight wins, the loser's weight is subtracted from it, and the loser's
//! end occurrence is reinserted beside the winner's other occurrence, in
//! that occurrence's row — after it when the winner's two occurrences lie
//! in opposite rows (the band joining them preserves orientation, as in a
//! classical interval exchange), before it when they share a row (that
//! band reverses orientation, so the loser re-attaches on the mirrored
//! side). This is the splitting move of the underlying single-switch
//! track: it leaves the complementary regions untouched, which pins the
//! insertion side. The move is encoded by the elementary matrix
//! `E = I + e_(winner, loser)` under the relation `w_before = E · w_after`.
//!
//! Ties, coinciding end labels, and zero competing weights end an expansion
//! as recorded termination states; they are never tie-broken silently.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write as IoWrite};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{BranchId, NonclassicalExchange, Row};
use crate::matrix::TransitionMatrix;
use crate::numeric::{NumericMode, Scalar};
use crate::weights::WeightVector;

/// Induction convention tag embedded in trace headers; stopping indices are
/// convention-dependent, so serialized results carry it.
pub const INDUCTION_CONVENTION: &str = "right-end, winner by larger weight, loser reinserted \
     beside the winner's other occurrence (after it across rows, before it within a row)";

/// Conditions that end an expansion at a step.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("induction undefined: both rows end with `{label}`")]
    UndefinedMove { label: String },
    #[error("competing weights are exactly equal")]
    Tie,
    #[error("competing weight of `{label}` is zero")]
    ZeroWeight { label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceEnd {
    MaxSteps,
    UndefinedMove,
    Tie,
    ZeroWeight,
}

impl TraceEnd {
    pub fn from_step_error(err: &StepError) -> Self {
        match err {
            StepError::UndefinedMove { .. } => TraceEnd::UndefinedMove,
            StepError::Tie => TraceEnd::Tie,
            StepError::ZeroWeight { .. } => TraceEnd::ZeroWeight,
        }
    }
}

impl fmt::Display for TraceEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TraceEnd::MaxSteps => "max-steps",
            TraceEnd::UndefinedMove => "undefined-move",
            TraceEnd::Tie => "tie",
            TraceEnd::ZeroWeight => "zero-weight",
        };
        write!(f, "{s}")
    }
}

/// One induction move. The elementary matrix is determined by the
/// (winner, loser) coordinates and is materialized on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveRecord {
    pub winner: BranchId,
    pub loser: BranchId,
    pub winner_row: Row,
    pub loser_row: Row,
    /// Row holding the winner's other occurrence, where the loser lands.
    pub insertion_row: Row,
    /// Index of the reinserted loser within the insertion row.
    pub insertion_position: usize,
}

impl MoveRecord {
    /// `I + e_(winner, loser)`; satisfies `w_before = E · w_after`.
    pub fn elementary_matrix(&self, n: usize) -> TransitionMatrix {
        TransitionMatrix::elementary(n, self.winner, self.loser)
    }
}

/// A single Rauzy move.
pub fn rauzy_step<S: Scalar>(
    ex: &NonclassicalExchange,
    w: &WeightVector<S>,
) -> std::result::Result<(NonclassicalExchange, WeightVector<S>, MoveRecord), StepError> {
    assert_eq!(
        w.alphabet(),
        ex.alphabet(),
        "weights must be defined over the exchange alphabet"
    );
    let top_end = *ex.top().last().expect("rows nonempty");
    let bottom_end = *ex.bottom().last().expect("rows nonempty");
    if top_end == bottom_end {
        return Err(StepError::UndefinedMove {
            label: ex.alphabet().label(top_end).to_owned(),
        });
    }
    let wt = w.get(top_end);
    let wb = w.get(bottom_end);
    if wt.is_zero() {
        return Err(StepError::ZeroWeight {
            label: ex.alphabet().label(top_end).to_owned(),
        });
    }
    if wb.is_zero() {
        return Err(StepError::ZeroWeight {
            label: ex.alphabet().label(bottom_end).to_owned(),
        });
    }
    if wt == wb {
        return Err(StepError::Tie);
    }
    let (winner, winner_row, loser, loser_row) = if wt > wb {
        (top_end, Row::Top, bottom_end, Row::Bottom)
    } else {
        (bottom_end, Row::Bottom, top_end, Row::Top)
    };
    // A lone loser row means the switch condition forces the competing
    // weights to (numerical) zero; removing it would empty the row. Exact
    // carried weights never reach this state, but fast-mode noise can dodge
    // the tie that precedes it.
    if ex.row(loser_row).len() == 1 {
        return Err(StepError::ZeroWeight {
            label: ex.alphabet().label(loser).to_owned(),
        });
    }

    let mut top = ex.top().to_vec();
    let mut bottom = ex.bottom().to_vec();
    {
        let row = match loser_row {
            Row::Top => &mut top,
            Row::Bottom => &mut bottom,
        };
        let popped = row.pop().expect("rows nonempty");
        debug_assert_eq!(popped, loser);
    }
    // The winner's competing occurrence sits at the end of its row; its
    // other occurrence is the unique remaining one (the loser's pop only
    // shortened the opposite row, so indices in the winner's row stand).
    let competing = (winner_row, ex.row(winner_row).len() - 1);
    let mut other: Option<(Row, usize)> = None;
    'search: for row in [Row::Top, Row::Bottom] {
        let cells: &[BranchId] = match row {
            Row::Top => &top,
            Row::Bottom => &bottom,
        };
        for (idx, &label) in cells.iter().enumerate() {
            if label == winner && (row, idx) != competing {
                other = Some((row, idx));
                break 'search;
            }
        }
    }
    let (insertion_row, other_idx) = other.expect("every label occurs twice");
    // Across rows the winner's band is straight: the loser lands on the
    // right of the twin. Within a row the band is orientation-reversing
    // and the loser lands on the left.
    let insertion_position = if insertion_row == winner_row {
        other_idx
    } else {
        other_idx + 1
    };
    match insertion_row {
        Row::Top => top.insert(insertion_position, loser),
        Row::Bottom => bottom.insert(insertion_position, loser),
    }

    let mut next_w = w.clone();
    next_w.values_mut()[winner.index()] =
        w.get(winner).clone() - w.get(loser).clone();
    let next_ex = NonclassicalExchange::from_rows(ex.alphabet().clone(), top, bottom);
    debug_assert!(
        next_ex
            .switch_defect(&next_w)
            .map(|d| d.abs().to_f64() <= S::defect_tolerance())
            .unwrap_or(false),
        "switch condition must be preserved"
    );
    let record = MoveRecord {
        winner,
        loser,
        winner_row,
        loser_row,
        insertion_row,
        insertion_position,
    };
    Ok((next_ex, next_w, record))
}

/// Fast-mode per-step cleanup: rescale to total one, then cancel the switch
/// defect by adjusting the heaviest constrained coordinate. The constraint
/// direction is expanded by the renormalized dynamics, so without this
/// repair per-step rounding noise in the defect grows exponentially along
/// an orbit; the correction itself is on the order of one rounding error.
pub(crate) fn fast_cleanup<S: Scalar>(ex: &NonclassicalExchange, w: &mut WeightVector<S>) -> S {
    let total = w.total();
    for v in w.values_mut() {
        *v = v.clone() / total.clone();
    }
    let d = ex.switch_vector();
    if d.iter().all(|&di| di == 0) {
        return total;
    }
    let defect = ex.switch_defect(w).expect("same alphabet");
    if defect.is_zero() {
        return total;
    }
    let mut best: Option<usize> = None;
    for (i, &di) in d.iter().enumerate() {
        if di == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some(j) => w.values()[i] > w.values()[j],
        };
        if better {
            best = Some(i);
        }
    }
    let j = best.expect("nonzero switch vector");
    let correction = defect / S::from_f64(f64::from(d[j] as i32));
    let repaired = w.values()[j].clone() - correction;
    if repaired >= S::zero() {
        w.values_mut()[j] = repaired;
    }
    total
}

/// Run provenance embedded in serialized trace headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceProvenance {
    pub version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

/// Full record of an iterated induction run. Position `k` refers to the
/// state after `k` steps (position 0 is the initial state).
#[derive(Debug)]
pub struct ExpansionTrace<S> {
    initial_exchange: NonclassicalExchange,
    initial_weights: WeightVector<S>,
    steps: Vec<MoveRecord>,
    exchanges: Vec<NonclassicalExchange>,
    weights: Vec<WeightVector<S>>,
    /// Per-step renormalization factor; identically one in exact mode.
    scales: Vec<S>,
    termination: TraceEnd,
    provenance: Option<TraceProvenance>,
    stage_cache: Mutex<BTreeMap<(usize, usize), TransitionMatrix>>,
}

impl<S: Scalar> Clone for ExpansionTrace<S> {
    fn clone(&self) -> Self {
        ExpansionTrace {
            initial_exchange: self.initial_exchange.clone(),
            initial_weights: self.initial_weights.clone(),
            steps: self.steps.clone(),
            exchanges: self.exchanges.clone(),
            weights: self.weights.clone(),
            scales: self.scales.clone(),
            termination: self.termination,
            provenance: self.provenance.clone(),
            stage_cache: Mutex::new(BTreeMap::new()),
        }
    }
}

/// Iterates [`rauzy_step`] until `max_steps` or a terminal condition. In
/// fast mode the weights are renormalized to total one after every step and
/// the scale is recorded; exact mode keeps the raw shrinking weights so the
/// matrix relation holds with equality.
pub fn expand<S: Scalar>(
    ex: &NonclassicalExchange,
    w: &WeightVector<S>,
    max_steps: usize,
) -> ExpansionTrace<S> {
    let mut trace = ExpansionTrace {
        initial_exchange: ex.clone(),
        initial_weights: w.clone(),
        steps: Vec::new(),
        exchanges: Vec::new(),
        weights: Vec::new(),
        scales: Vec::new(),
        termination: TraceEnd::MaxSteps,
        provenance: None,
        stage_cache: Mutex::new(BTreeMap::new()),
    };
    let mut current_ex = ex.clone();
    let mut current_w = w.clone();
    for _ in 0..max_steps {
        match rauzy_step(&current_ex, &current_w) {
            Ok((next_ex, mut next_w, record)) => {
                let scale = if S::MODE == NumericMode::Fast {
                    fast_cleanup(&next_ex, &mut next_w)
                } else {
                    S::one()
                };
                trace.steps.push(record);
                trace.exchanges.push(next_ex.clone());
                trace.weights.push(next_w.clone());
                trace.scales.push(scale);
                current_ex = next_ex;
                current_w = next_w;
            }
            Err(err) => {
                trace.termination = TraceEnd::from_step_error(&err);
                break;
            }
        }
    }
    trace
}

impl<S: Scalar> ExpansionTrace<S> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn initial_exchange(&self) -> &NonclassicalExchange {
        &self.initial_exchange
    }

    pub fn initial_weights(&self) -> &WeightVector<S> {
        &self.initial_weights
    }

    pub fn steps(&self) -> &[MoveRecord] {
        &self.steps
    }

    pub fn scales(&self) -> &[S] {
        &self.scales
    }

    pub fn termination(&self) -> TraceEnd {
        self.termination
    }

    pub fn provenance(&self) -> Option<&TraceProvenance> {
        self.provenance.as_ref()
    }

    /// Attaches run provenance; emitted in the serialized header.
    pub fn set_provenance(&mut self, provenance: TraceProvenance) {
        self.provenance = Some(provenance);
    }

    /// Exchange at position `k` (after `k` steps).
    pub fn exchange_at(&self, k: usize) -> &NonclassicalExchange {
        if k == 0 {
            &self.initial_exchange
        } else {
            &self.exchanges[k - 1]
        }
    }

    /// Weights at position `k` (after `k` steps; renormalized in fast mode).
    pub fn weights_at(&self, k: usize) -> &WeightVector<S> {
        if k == 0 {
            &self.initial_weights
        } else {
            &self.weights[k - 1]
        }
    }

    /// Exact product `E_(i+1) ··· E_j` relating positions `i` and `j`:
    /// `w_i = Q · w_j` up to the recorded scales. Results are cached and
    /// extended incrementally.
    pub fn stage_matrix(&self, i: usize, j: usize) -> Result<TransitionMatrix> {
        if i >= j || j > self.len() {
            return Err(Error::Range {
                lo: i,
                hi: j,
                len: self.len(),
            });
        }
        let n = self.initial_exchange.size();
        let mut cache = self.stage_cache.lock().expect("cache lock");
        if let Some(hit) = cache.get(&(i, j)) {
            return Ok(hit.clone());
        }
        // Extend the longest cached prefix starting at i.
        let seed = cache
            .range((i, 0)..(i, j))
            .next_back()
            .map(|(&(_, k), m)| (k, m.clone()));
        let (mut k, mut acc) = seed.unwrap_or((i, TransitionMatrix::identity(n)));
        while k < j {
            let record = &self.steps[k];
            acc.push_elementary(record.winner, record.loser);
            k += 1;
        }
        cache.insert((i, j), acc.clone());
        Ok(acc)
    }

    /// JSON-lines serialization: a header with the initial state, one line
    /// per move, and a trailer with the termination. Bit-exact round trip
    /// in exact mode.
    pub fn write_jsonl<W: IoWrite>(&self, mut out: W) -> Result<()> {
        let header = TraceHeader {
            schema: 1,
            kind: "trace".into(),
            mode: S::MODE,
            convention: INDUCTION_CONVENTION.into(),
            exchange: self.initial_exchange.to_string(),
            weights: self.initial_weights.to_json(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_writer(&mut out, &header).map_err(io_err)?;
        out.write_all(b"\n")?;
        for (idx, record) in self.steps.iter().enumerate() {
            let alphabet = self.initial_exchange.alphabet();
            let line = StepLine {
                step: idx + 1,
                winner: alphabet.label(record.winner).to_owned(),
                loser: alphabet.label(record.loser).to_owned(),
                winner_row: record.winner_row,
                loser_row: record.loser_row,
                insertion_row: record.insertion_row,
                insertion_position: record.insertion_position,
                matrix_unit: [
                    alphabet.label(record.winner).to_owned(),
                    alphabet.label(record.loser).to_owned(),
                ],
                scale: match S::MODE {
                    NumericMode::Fast => Some(self.scales[idx].render()),
                    NumericMode::Exact => None,
                },
            };
            serde_json::to_writer(&mut out, &line).map_err(io_err)?;
            out.write_all(b"\n")?;
        }
        let trailer = TraceTrailer {
            termination: self.termination,
            steps: self.len(),
        };
        serde_json::to_writer(&mut out, &trailer).map_err(io_err)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads a trace by replaying the recorded moves and verifying each one
    /// against a fresh induction step, so a loaded trace satisfies the same
    /// invariants as a computed one.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trace file".into()))??;
        let header: TraceHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::Parse(e.to_string()))?;
        if header.mode != S::MODE {
            return Err(Error::Parse(format!(
                "trace was written in {} mode, read in {} mode",
                header.mode,
                S::MODE
            )));
        }
        let ex = NonclassicalExchange::parse(&header.exchange)?;
        let w = WeightVector::<S>::from_json(ex.alphabet().clone(), &header.weights)?;

        let mut trace = ExpansionTrace {
            initial_exchange: ex.clone(),
            initial_weights: w.clone(),
            steps: Vec::new(),
            exchanges: Vec::new(),
            weights: Vec::new(),
            scales: Vec::new(),
            termination: TraceEnd::MaxSteps,
            provenance: header.provenance,
            stage_cache: Mutex::new(BTreeMap::new()),
        };
        let mut current_ex = ex;
        let mut current_w = w;
        let mut trailer: Option<TraceTrailer> = None;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(t) = serde_json::from_str::<TraceTrailer>(&line) {
                trailer = Some(t);
                break;
            }
            let step: StepLine =
                serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
            let (next_ex, mut next_w, record) = rauzy_step(&current_ex, &current_w)
                .map_err(|e| Error::Parse(format!("trace replay failed at step {}: {e}", step.step)))?;
            let alphabet = current_ex.alphabet();
            let matches = alphabet.label(record.winner) == step.winner
                && alphabet.label(record.loser) == step.loser
                && record.winner_row == step.winner_row
                && record.loser_row == step.loser_row
                && record.insertion_row == step.insertion_row
                && record.insertion_position == step.insertion_position;
            if !matches {
                return Err(Error::Parse(format!(
                    "trace inconsistent at step {}: recorded move does not match replay",
                    step.step
                )));
            }
            let scale = if S::MODE == NumericMode::Fast {
                fast_cleanup(&next_ex, &mut next_w)
            } else {
                S::one()
            };
            trace.steps.push(record);
            trace.exchanges.push(next_ex.clone());
            trace.weights.push(next_w.clone());
            trace.scales.push(scale);
            current_ex = next_ex;
            current_w = next_w;
        }
        let trailer = trailer.ok_or_else(|| Error::Parse("trace missing trailer".into()))?;
        if trailer.steps != trace.len() {
            return Err(Error::Parse(format!(
                "trailer claims {} steps, file has {}",
                trailer.steps,
                trace.len()
            )));
        }
        trace.termination = trailer.termination;
        Ok(trace)
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes())
    }
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    schema: u32,
    kind: String,
    mode: NumericMode,
    convention: String,
    exchange: String,
    weights: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<TraceProvenance>,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    step: usize,
    winner: String,
    loser: String,
    winner_row: Row,
    loser_row: Row,
    insertion_row: Row,
    insertion_position: usize,
    matrix_unit: [String; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TraceTrailer {
    termination: TraceEnd,
    steps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn wv(ex: &NonclassicalExchange, vals: &[(&str, BigRational)]) -> WeightVector<BigRational> {
        WeightVector::from_pairs(ex.alphabet().clone(), vals).unwrap()
    }

    /// Hand-simulated step on top: a a b | bottom: b c c with w = (1, 3, 1):
    /// winner b, loser c, combinatorics fixed, E = I + e_(b,c).
    #[test]
    fn hand_checked_step() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let w = wv(&ex, &[("a", rat(1, 1)), ("b", rat(3, 1)), ("c", rat(1, 1))]);
        let (next_ex, next_w, record) = rauzy_step(&ex, &w).unwrap();
        let alphabet = ex.alphabet();
        assert_eq!(alphabet.label(record.winner), "b");
        assert_eq!(alphabet.label(record.loser), "c");
        assert_eq!(record.winner_row, Row::Top);
        assert_eq!(record.loser_row, Row::Bottom);
        assert_eq!(next_ex, ex);
        assert_eq!(
            next_w.values(),
            &[rat(1, 1), rat(2, 1), rat(1, 1)]
        );
        // w = E · w'
        let e = record.elementary_matrix(ex.size());
        let image = e
            .apply_bigint(
                &next_w
                    .values()
                    .iter()
                    .map(|v| v.numer().clone())
                    .collect::<Vec<BigInt>>(),
            )
            .unwrap();
        let expect: Vec<BigInt> = w.values().iter().map(|v| v.numer().clone()).collect();
        assert_eq!(image, expect);
        assert!(next_ex.switch_defect(&next_w).unwrap().is_zero());
    }

    #[test]
    fn classical_step_and_upcoming_tie() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let w = wv(&ex, &[("a", rat(2, 3)), ("b", rat(1, 3))]);
        let (next_ex, next_w, record) = rauzy_step(&ex, &w).unwrap();
        assert_eq!(ex.alphabet().label(record.winner), "a");
        assert_eq!(next_ex, ex);
        assert_eq!(next_w.values(), &[rat(1, 3), rat(1, 3)]);
        assert!(matches!(rauzy_step(&next_ex, &next_w), Err(StepError::Tie)));
    }

    #[test]
    fn undefined_move_when_ends_coincide() {
        let ex = NonclassicalExchange::parse("b b a | c c a").unwrap();
        let w = wv(
            &ex,
            &[("b", rat(1, 2)), ("a", rat(1, 2)), ("c", rat(1, 2))],
        );
        assert!(ex.switch_defect(&w).unwrap().is_zero());
        assert!(matches!(
            rauzy_step(&ex, &w),
            Err(StepError::UndefinedMove { .. })
        ));
    }

    #[test]
    fn zero_weight_surfaces() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let w = wv(&ex, &[("a", rat(0, 1)), ("b", rat(1, 1))]);
        assert!(matches!(
            rauzy_step(&ex, &w),
            Err(StepError::ZeroWeight { .. })
        ));
    }

    #[test]
    fn loser_changes_rows_when_winner_repeats_in_its_row() {
        // top: c a b a | bottom: c d d b with w = (a:2, b:1, c:1, d:2):
        // ends a(2) vs b(1), winner a whose other occurrence is top[1];
        // b moves from bottom into top right after it.
        let ex = NonclassicalExchange::parse("c a b a | c d d b").unwrap();
        let w = wv(
            &ex,
            &[("a", rat(2, 1)), ("b", rat(1, 1)), ("c", rat(1, 1)), ("d", rat(2, 1))],
        );
        assert!(ex.switch_defect(&w).unwrap().is_zero());
        let (next_ex, next_w, record) = rauzy_step(&ex, &w).unwrap();
        assert_eq!(ex.alphabet().label(record.winner), "a");
        assert_eq!(ex.alphabet().label(record.loser), "b");
        assert_eq!(record.insertion_row, Row::Top);
        assert_eq!(next_ex.to_string(), "top: c a b b a | bottom: c d d");
        assert!(next_ex.switch_defect(&next_w).unwrap().is_zero());
    }

    /// The two-letter classical exchange runs the subtractive continued
    /// fraction algorithm: winner runs reproduce the digits, with the last
    /// digit shortened by one before the tie.
    fn cf_digits(mut p: u64, mut q: u64) -> Vec<u64> {
        let mut digits = Vec::new();
        while q != 0 {
            digits.push(p / q);
            let r = p % q;
            p = q;
            q = r;
        }
        digits
    }

    #[test]
    fn continued_fraction_oracle() {
        for (p, q) in [(5u64, 3u64), (355, 113), (8, 5), (17, 4)] {
            let ex = NonclassicalExchange::parse("a b | b a").unwrap();
            let w = wv(
                &ex,
                &[
                    ("a", BigRational::new(BigInt::from(p), (p + q).into())),
                    ("b", BigRational::new(BigInt::from(q), (p + q).into())),
                ],
            );
            let trace = expand(&ex, &w, 10_000);
            assert_eq!(trace.termination(), TraceEnd::Tie);
            // Winner runs.
            let mut runs: Vec<u64> = Vec::new();
            let mut last: Option<BranchId> = None;
            for record in trace.steps() {
                if last == Some(record.winner) {
                    *runs.last_mut().unwrap() += 1;
                } else {
                    runs.push(1);
                    last = Some(record.winner);
                }
            }
            let mut expect = cf_digits(p, q);
            // Last division is exact; the subtractive form stops one short.
            *expect.last_mut().unwrap() -= 1;
            expect.retain(|&d| d != 0);
            assert_eq!(runs, expect, "ratio {p}/{q}");
        }
    }

    /// Golden-ratio weights: the all-ones continued fraction. In exact
    /// arithmetic that is the Fibonacci convergent F(52)/F(51), whose
    /// subtractive expansion alternates winners for exactly 50 steps before
    /// reaching the (1,1) tie; beyond ~35 steps a double-precision golden
    /// ratio decoheres (the error doubles by φ² per step), so the long
    /// pattern is an exact-mode statement.
    #[test]
    fn golden_ratio_alternates_for_fifty_steps() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let (mut fib_prev, mut fib) = (1u64, 1u64);
        for _ in 0..50 {
            let next = fib + fib_prev;
            fib_prev = fib;
            fib = next;
        }
        // fib = F(52), fib_prev = F(51)
        let total = fib + fib_prev;
        let w = wv(
            &ex,
            &[
                ("a", BigRational::new(BigInt::from(fib), total.into())),
                ("b", BigRational::new(BigInt::from(fib_prev), total.into())),
            ],
        );
        let trace = expand(&ex, &w, 200);
        assert_eq!(trace.len(), 50);
        assert_eq!(trace.termination(), TraceEnd::Tie);
        for (k, record) in trace.steps().iter().enumerate() {
            let expect = if k % 2 == 0 { "a" } else { "b" };
            assert_eq!(ex.alphabet().label(record.winner), expect, "step {k}");
        }
        let q = trace.stage_matrix(0, 2).unwrap();
        assert_eq!(
            q,
            TransitionMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]).unwrap()
        );
    }

    #[test]
    fn golden_ratio_alternates_in_fast_mode_at_short_range() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let w = WeightVector::from_pairs(
            ex.alphabet().clone(),
            &[("a", phi / (1.0 + phi)), ("b", 1.0 / (1.0 + phi))],
        )
        .unwrap();
        let trace = expand(&ex, &w, 30);
        assert_eq!(trace.len(), 30);
        for (k, record) in trace.steps().iter().enumerate() {
            let expect = if k % 2 == 0 { "a" } else { "b" };
            assert_eq!(ex.alphabet().label(record.winner), expect, "step {k}");
        }
    }

    #[test]
    fn max_steps_zero_gives_empty_trace() {
        let ex = NonclassicalExchange::parse("a b | b a").unwrap();
        let w = wv(&ex, &[("a", rat(2, 3)), ("b", rat(1, 3))]);
        let trace = expand(&ex, &w, 0);
        assert!(trace.is_empty());
        assert_eq!(trace.termination(), TraceEnd::MaxSteps);
    }

    #[test]
    fn stage_matrix_relation_and_associativity() {
        let ex = NonclassicalExchange::parse("a b c | c b a").unwrap();
        let poly = crate::polytope::CarriedPolytope::of(&ex).unwrap();
        let w: WeightVector<BigRational> = poly.sample_seeded(12);
        let trace = expand(&ex, &w, 40);
        assert!(trace.len() >= 10, "trace too short: {}", trace.len());
        let k = trace.len();
        for split in [1, k / 2, k - 1] {
            let whole = trace.stage_matrix(0, k).unwrap();
            let left = trace.stage_matrix(0, split).unwrap();
            let right = trace.stage_matrix(split, k).unwrap();
            assert_eq!(left.compose(&right).unwrap(), whole);
        }
        // unit stage: (j-1, j) is the single elementary matrix of step j
        for j in [1, k / 2, k] {
            let unit = trace.stage_matrix(j - 1, j).unwrap();
            assert_eq!(unit, trace.steps()[j - 1].elementary_matrix(ex.size()));
        }
        // w_i = Q · w_j exactly in exact mode.
        for (i, j) in [(0usize, k), (1, k / 2), (k / 2, k)] {
            if i >= j {
                continue;
            }
            let q = trace.stage_matrix(i, j).unwrap();
            let wj = trace.weights_at(j);
            let wi = trace.weights_at(i);
            for row in 0..ex.size() {
                let mut acc = BigRational::zero();
                for col in 0..ex.size() {
                    acc += BigRational::from_integer(q.entry(row, col).clone())
                        * wj.values()[col].clone();
                }
                assert_eq!(&acc, &wi.values()[row]);
            }
        }
        assert!(matches!(
            trace.stage_matrix(3, 3),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            trace.stage_matrix(0, k + 1),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip_is_bit_exact() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let poly = crate::polytope::CarriedPolytope::of(&ex).unwrap();
        let w: WeightVector<BigRational> = poly.sample_seeded(3);
        let trace = expand(&ex, &w, 25);
        let text = trace.to_jsonl_string();
        let back = ExpansionTrace::<BigRational>::from_jsonl_str(&text).unwrap();
        assert_eq!(back.to_jsonl_string(), text);
        assert_eq!(back.len(), trace.len());
        assert_eq!(back.termination(), trace.termination());
        assert_eq!(back.weights_at(back.len()), trace.weights_at(trace.len()));

        let wf: WeightVector<f64> = poly.sample_seeded(3);
        let fast = expand(&ex, &wf, 25);
        let text = fast.to_jsonl_string();
        let back = ExpansionTrace::<f64>::from_jsonl_str(&text).unwrap();
        assert_eq!(back.to_jsonl_string(), text);

        assert!(ExpansionTrace::<f64>::from_jsonl_str(&trace.to_jsonl_string()).is_err());
    }

    #[test]
    fn winner_weight_strictly_decreases() {
        let ex = NonclassicalExchange::parse("a a b | b c c").unwrap();
        let poly = crate::polytope::CarriedPolytope::of(&ex).unwrap();
        let w: WeightVector<BigRational> = poly.sample_seeded(9);
        let trace = expand(&ex, &w, 60);
        for k in 1..=trace.len() {
            let record = &trace.steps()[k - 1];
            let before = trace.weights_at(k - 1).get(record.winner).clone();
            let after = trace.weights_at(k).get(record.winner).clone();
            assert!(after < before);
            let total_before = trace.weights_at(k - 1).total();
            let total_after = trace.weights_at(k).total();
            assert!(total_after < total_before);
        }
    }
}
