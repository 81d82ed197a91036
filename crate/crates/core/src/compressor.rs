//! Compression of alternating-layer circuits by merges and Yang-Baxter moves.
//!
//! A full block on `N` qubits is `N` alternating columns, `N(N−1)/2` gates.
//! Its pair-index word is a reduced word for the longest permutation, so the
//! even-start and odd-start squares are related by commutations of disjoint
//! gates and braid moves (one YBE solve each). Reflection follows the
//! standard exchange argument: move the wanted last letter to the end of each
//! shrinking prefix, right to left. It uses `N(N−1)(N−2)/6` braid moves,
//! which is the minimum.
//!
//! Absorbing a new column `C` into a full block `Q1 … QN` reflects the
//! square `Q2 … QN C` to start with the parity of `Q1`, then merges the two
//! neighbouring columns of equal parity.

use thiserror::Error;

use crate::circuit_ir::{column_parity, columnize, Circuit, CircuitError, GateParams, PairGate};
use crate::propagators::{Angles3, Conjugation, RClassForm, RGateParams};
use crate::spin_model::HamiltonianClass;
use crate::ybe::{solve, YbeError, YbeForm, YbeTriple};

/// Accumulated YBE residual at which compression gives up.
pub const RESIDUAL_BUDGET: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressError {
    #[error("the {0} class cannot be compressed")]
    UnsupportedClass(HamiltonianClass),
    #[error("gate {index} is a native-gate sequence, not a propagator")]
    NotPropagator { index: usize },
    #[error("circuit is not in alternating-layer form (column {column})")]
    NotAlternating { column: usize },
    #[error("merge needs two gates of the same kind on one pair ({0})")]
    MergeMismatch(&'static str),
    #[error("no Yang-Baxter pattern at the requested gates ({0})")]
    PatternMismatch(&'static str),
    #[error("block has {block} qubits, layer has {layer}")]
    SizeMismatch { block: usize, layer: usize },
    #[error("accumulated residual {residual:e} exceeds the budget {budget:e}")]
    ResidualBudget { residual: f64, budget: f64 },
    #[error(transparent)]
    Ybe(#[from] YbeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A single rewrite on a circuit, addressing gates by their position in time
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewriteMove {
    Merge { first: usize, second: usize },
    Ybe { at: [usize; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompressionStats {
    pub ybe_moves: usize,
    pub merges: usize,
    pub layers_absorbed: usize,
    /// Sum of the residuals of every YBE solve.
    pub residual: f64,
}

/// An alternating-layer block of R gates sharing one basis change.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedBlock {
    num_qubits: usize,
    class: HamiltonianClass,
    conjugation: Conjugation,
    start_parity: usize,
    /// Column `k` holds every pair of parity `(start_parity + k) % 2`, in
    /// increasing pair order.
    columns: Vec<Vec<RGateParams>>,
    pub stats: CompressionStats,
}

impl CompressedBlock {
    pub fn new(num_qubits: usize, class: HamiltonianClass) -> Result<Self, CompressError> {
        if !class.is_compressible() {
            return Err(CompressError::UnsupportedClass(class));
        }
        Ok(Self {
            num_qubits,
            class,
            conjugation: class_conjugation(class),
            start_parity: 0,
            columns: Vec::new(),
            stats: CompressionStats::default(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn class(&self) -> HamiltonianClass {
        self.class
    }

    pub fn conjugation(&self) -> Conjugation {
        self.conjugation
    }

    /// Columns actually held (before padding).
    pub fn depth(&self) -> usize {
        self.columns.len()
    }

    pub fn start_parity(&self) -> usize {
        self.start_parity
    }

    /// The block's gate parameters, column by column.
    pub fn columns(&self) -> &[Vec<RGateParams>] {
        &self.columns
    }

    fn parity_of(&self, column: usize) -> usize {
        (self.start_parity + column) % 2
    }

    /// Emit the block as a circuit, padded with identity gates to a full
    /// square of `N` columns and with angles reduced to `(−π, π]`.
    pub fn to_circuit(&self) -> Circuit {
        let n = self.num_qubits;
        let mut columns: Vec<Vec<PairGate>> = Vec::with_capacity(n);
        for k in 0..n.max(self.columns.len()) {
            let parity = self.parity_of(k);
            let params = self.columns.get(k);
            let col = pairs_of_parity(n, parity)
                .enumerate()
                .map(|(j, pair)| {
                    let p = params.map_or(RGateParams::IDENTITY, |c| c[j]).canonical();
                    PairGate::new(
                        pair,
                        GateParams::R(RClassForm {
                            params: p,
                            conjugation: self.conjugation,
                        }),
                    )
                })
                .collect();
            columns.push(col);
        }
        Circuit::from_columns(n, columns).expect("pairs are in range")
    }

    /// Number of gates in [`CompressedBlock::to_circuit`].
    pub fn gate_count(&self) -> usize {
        self.to_circuit().gate_count()
    }

    /// Alternating layers (column pairs) in the emitted circuit.
    pub fn layer_count(&self) -> usize {
        self.to_circuit().depth().div_ceil(2)
    }

    fn word(&self) -> Vec<(usize, RGateParams)> {
        let n = self.num_qubits;
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(k, col)| pairs_of_parity(n, self.parity_of(k)).zip(col.iter().copied()))
            .collect()
    }

    fn set_word(&mut self, start_parity: usize, word: &[(usize, RGateParams)]) {
        self.start_parity = start_parity;
        let mut rest = word;
        for k in 0..self.columns.len() {
            let len = pairs_of_parity(self.num_qubits, self.parity_of(k)).count();
            let (head, tail) = rest.split_at(len);
            self.columns[k] = head.iter().map(|&(_, p)| p).collect();
            rest = tail;
        }
    }

    fn charge(&mut self, residual: f64) -> Result<(), CompressError> {
        self.stats.ybe_moves += 1;
        self.stats.residual += residual;
        if self.stats.residual > RESIDUAL_BUDGET {
            return Err(CompressError::ResidualBudget {
                residual: self.stats.residual,
                budget: RESIDUAL_BUDGET,
            });
        }
        Ok(())
    }
}

fn pairs_of_parity(n: usize, parity: usize) -> impl Iterator<Item = usize> {
    (parity..n.saturating_sub(1)).step_by(2)
}

/// Basis change used for a class's R gates.
pub fn class_conjugation(class: HamiltonianClass) -> Conjugation {
    match class {
        HamiltonianClass::Y | HamiltonianClass::YZ => Conjugation::U1,
        HamiltonianClass::XY => Conjugation::U2,
        _ => Conjugation::None,
    }
}

/// R parameters of a rotation triple under a fixed basis change, if the
/// triple lies in that family.
pub fn params_in(a: Angles3, conjugation: Conjugation) -> Option<RGateParams> {
    let (g, d, absent) = match conjugation {
        Conjugation::None => (a.theta_x, a.theta_z, a.theta_y),
        Conjugation::U1 => (a.theta_y, a.theta_z, a.theta_x),
        Conjugation::U2 => (a.theta_x, a.theta_y, a.theta_z),
    };
    (absent == 0.0).then_some(RGateParams::new(g, d))
}

/// Merge two gates on the same pair into one (angles add).
pub fn merge(a: &PairGate, b: &PairGate) -> Result<PairGate, CompressError> {
    if a.pair != b.pair {
        return Err(CompressError::MergeMismatch("different pairs"));
    }
    let params = match (&a.params, &b.params) {
        (GateParams::Xyz(x), GateParams::Xyz(y)) => GateParams::Xyz(*x + *y),
        (GateParams::R(x), GateParams::R(y)) if x.conjugation == y.conjugation => {
            GateParams::R(RClassForm {
                params: x.params + y.params,
                conjugation: x.conjugation,
            })
        }
        (GateParams::R(_), GateParams::R(_)) => {
            return Err(CompressError::MergeMismatch("different basis changes"))
        }
        _ => {
            return Err(CompressError::MergeMismatch(
                "different or native gate kinds",
            ))
        }
    };
    Ok(PairGate::new(a.pair, params))
}

/// Solve the braid on three time-ordered gates `(s, t, s)` with
/// `|s − t| = 1`, returning the replacement `(t, s, t)` and the residual.
fn braid(
    gates: [(usize, RGateParams); 3],
) -> Result<([(usize, RGateParams); 3], f64), CompressError> {
    let [(a, ga), (b, gb), (c, gc)] = gates;
    if a != c || a.abs_diff(b) != 1 {
        return Err(CompressError::PatternMismatch("expected pairs (i, i±1, i)"));
    }
    // Time order reversed gives the matrix-product order of the triple.
    let (form, lo) = if a < b {
        (YbeForm::Left, a)
    } else {
        (YbeForm::Right, b)
    };
    let sol = solve(&YbeTriple {
        gates: [gc, gb, ga],
        form,
    })?;
    let [x1, x2, x3] = sol.triple.gates;
    // Matrix order (x1, x2, x3) of the opposite form, back to time order.
    let out = match form {
        YbeForm::Left => [(lo + 1, x3), (lo, x2), (lo + 1, x1)],
        YbeForm::Right => [(lo, x3), (lo + 1, x2), (lo, x1)],
    };
    Ok((out, sol.residual))
}

/// Apply one rewrite to a circuit of propagator gates.
pub fn apply_ybe_move(c: &Circuit, at: RewriteMove) -> Result<Circuit, CompressError> {
    let mut gates: Vec<PairGate> = c.gates().cloned().collect();
    let check_between = |lo: usize, hi: usize, qubits: std::ops::RangeInclusive<usize>| {
        gates[lo + 1..hi]
            .iter()
            .all(|g| !qubits.contains(&g.pair) && !qubits.contains(&(g.pair + 1)))
    };
    match at {
        RewriteMove::Merge { first, second } => {
            if first >= second || second >= gates.len() {
                return Err(CompressError::MergeMismatch(
                    "positions out of order or range",
                ));
            }
            let p = gates[first].pair;
            if !check_between(first, second, p..=p + 1) {
                return Err(CompressError::MergeMismatch(
                    "an intervening gate touches the pair",
                ));
            }
            let merged = merge(&gates[first], &gates[second])?;
            gates[first] = merged;
            gates.remove(second);
        }
        RewriteMove::Ybe { at } => {
            if !(at[0] < at[1] && at[1] < at[2] && at[2] < gates.len()) {
                return Err(CompressError::PatternMismatch(
                    "positions out of order or range",
                ));
            }
            let lo = gates[at[0]].pair.min(gates[at[1]].pair);
            let span = lo..=lo + 2;
            if !check_between(at[0], at[1], span.clone()) || !check_between(at[1], at[2], span) {
                return Err(CompressError::PatternMismatch(
                    "an intervening gate overlaps",
                ));
            }
            let forms: Vec<RClassForm> = at
                .iter()
                .map(|&k| match &gates[k].params {
                    GateParams::R(f) => Some(*f),
                    GateParams::Xyz(a) => {
                        let conj = [Conjugation::None, Conjugation::U1, Conjugation::U2]
                            .into_iter()
                            .find(|&cj| params_in(*a, cj).is_some())?;
                        Some(RClassForm {
                            params: params_in(*a, conj)?,
                            conjugation: conj,
                        })
                    }
                    GateParams::Native(_) => None,
                })
                .collect::<Option<_>>()
                .ok_or(CompressError::PatternMismatch(
                    "gates are not R-class propagators",
                ))?;
            let conj = common_conjugation(&forms).ok_or(CompressError::PatternMismatch(
                "gates use different basis changes",
            ))?;
            let params: Vec<RGateParams> = forms
                .iter()
                .map(|f| params_in(f.angles(), conj).expect("checked by common_conjugation"))
                .collect();
            let (out, _) = braid(std::array::from_fn(|k| (gates[at[k]].pair, params[k])))?;
            for (k, (pair, p)) in at.iter().zip(out) {
                gates[*k] = PairGate::new(
                    pair,
                    GateParams::R(RClassForm {
                        params: p,
                        conjugation: conj,
                    }),
                );
            }
        }
    }
    Ok(Circuit::from_gates(c.num_qubits(), gates)?)
}

/// A basis change under which every gate is expressible.
fn common_conjugation(forms: &[RClassForm]) -> Option<Conjugation> {
    [Conjugation::None, Conjugation::U1, Conjugation::U2]
        .into_iter()
        .find(|&cj| forms.iter().all(|f| params_in(f.angles(), cj).is_some()))
}

/// Move a gate on pair `s` to the end of `w` using commutations and braids.
/// `s` must be a right descent of the permutation `w` spells.
fn move_to_end(
    block: &mut CompressedBlock,
    w: &mut [(usize, RGateParams)],
    s: usize,
) -> Result<(), CompressError> {
    let len = w.len();
    assert!(len > 0, "letter {s} is not a descent of the word");
    let t = w[len - 1].0;
    if t == s {
        return Ok(());
    }
    move_to_end(block, &mut w[..len - 1], s)?;
    if t.abs_diff(s) >= 2 {
        w.swap(len - 2, len - 1);
        return Ok(());
    }
    // Now w ends with (s, t); bring t forward so the tail reads (t, s, t).
    move_to_end(block, &mut w[..len - 2], t)?;
    let tail: [(usize, RGateParams); 3] = [w[len - 3], w[len - 2], w[len - 1]];
    let (out, residual) = braid(tail)?;
    w[len - 3..].copy_from_slice(&out);
    block.charge(residual)
}

/// Rewrite the word `w` into a word with the pair sequence `target`.
fn transform(
    block: &mut CompressedBlock,
    w: &mut [(usize, RGateParams)],
    target: &[usize],
) -> Result<(), CompressError> {
    for i in (0..target.len()).rev() {
        move_to_end(block, &mut w[..=i], target[i])?;
    }
    debug_assert!(w.iter().map(|g| g.0).eq(target.iter().copied()));
    Ok(())
}

/// Mirror a full block (`N` columns) to start with the other parity.
pub fn reflect_block(b: &CompressedBlock) -> Result<CompressedBlock, CompressError> {
    let mut out = b.clone();
    out.pad();
    let n = out.num_qubits;
    if n <= 2 {
        return Ok(out);
    }
    let new_parity = 1 - out.start_parity;
    let target: Vec<usize> = (0..n)
        .flat_map(|k| pairs_of_parity(n, (new_parity + k) % 2))
        .collect();
    let mut word = out.word();
    transform(&mut out, &mut word, &target)?;
    out.set_word(new_parity, &word);
    Ok(out)
}

impl CompressedBlock {
    /// Fill up to `N` columns with identity gates.
    fn pad(&mut self) {
        while self.columns.len() < self.num_qubits {
            let parity = self.parity_of(self.columns.len());
            let len = pairs_of_parity(self.num_qubits, parity).count();
            self.columns.push(vec![RGateParams::IDENTITY; len]);
        }
    }

    /// Absorb one full column of the given parity.
    fn absorb_column(&mut self, parity: usize, col: Vec<RGateParams>) -> Result<(), CompressError> {
        let n = self.num_qubits;
        debug_assert_eq!(col.len(), pairs_of_parity(n, parity).count());
        if self.columns.is_empty() {
            self.start_parity = parity;
            self.columns.push(col);
            return Ok(());
        }
        let last = self.columns.len() - 1;
        if self.parity_of(last) == parity || n <= 2 {
            merge_into(&mut self.columns[last], &col);
            self.stats.merges += col.len();
            return Ok(());
        }
        if self.columns.len() < n {
            self.columns.push(col);
            return Ok(());
        }
        // Full block Q1..QN followed by C: reflect Q2..QN C, merge into Q1.
        let mut tail = CompressedBlock {
            num_qubits: n,
            class: self.class,
            conjugation: self.conjugation,
            start_parity: self.parity_of(1),
            columns: self.columns[1..].to_vec(),
            stats: self.stats,
        };
        tail.columns.push(col);
        let reflected = reflect_block(&tail)?;
        self.stats = reflected.stats;
        let mut cols = reflected.columns.into_iter();
        let first = cols.next().expect("reflected block is full");
        merge_into(&mut self.columns[0], &first);
        self.stats.merges += first.len();
        self.columns.truncate(1);
        self.columns.extend(cols);
        Ok(())
    }
}

fn merge_into(dst: &mut [RGateParams], src: &[RGateParams]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = *d + *s;
    }
}

/// Absorb one layer (one or more columns in time order) into the block.
pub fn absorb_layer(
    b: &CompressedBlock,
    layer: &[Vec<PairGate>],
) -> Result<CompressedBlock, CompressError> {
    let mut out = b.clone();
    for (k, col) in layer.iter().enumerate() {
        let (parity, params) = block_column(&out, col, k)?;
        out.absorb_column(parity, params)?;
    }
    out.stats.layers_absorbed += 1;
    Ok(out)
}

/// Check one circuit column and spread it over every pair of its parity,
/// filling missing pairs with the identity.
fn block_column(
    b: &CompressedBlock,
    col: &[PairGate],
    index: usize,
) -> Result<(usize, Vec<RGateParams>), CompressError> {
    let parity = column_parity(col).ok_or(CompressError::NotAlternating { column: index })?;
    let mut params = vec![RGateParams::IDENTITY; pairs_of_parity(b.num_qubits, parity).count()];
    for g in col {
        let a = g
            .params
            .angles()
            .ok_or(CompressError::NotPropagator { index })?;
        let p = params_in(a, b.conjugation)
            .ok_or(CompressError::UnsupportedClass(HamiltonianClass::Xyz))?;
        let slot = g.pair / 2;
        params[slot] = params[slot] + p;
    }
    Ok((parity, params))
}

/// Class spanned by all propagator gates of a circuit.
pub fn circuit_class(c: &Circuit) -> Result<HamiltonianClass, CompressError> {
    let (mut x, mut y, mut z) = (false, false, false);
    for (index, g) in c.gates().enumerate() {
        let a = g
            .params
            .angles()
            .ok_or(CompressError::NotPropagator { index })?;
        x |= a.theta_x != 0.0;
        y |= a.theta_y != 0.0;
        z |= a.theta_z != 0.0;
    }
    Ok(HamiltonianClass::from_presence(x, y, z))
}

/// Compress a circuit of same-class propagator gates into one block.
pub fn compress(c: &Circuit) -> Result<CompressedBlock, CompressError> {
    let class = circuit_class(c)?;
    let mut block = CompressedBlock::new(c.num_qubits(), class)?;
    let packed = columnize(c);
    if !packed.is_alternating() {
        let column = (1..packed.depth())
            .find(|&k| {
                column_parity(&packed.columns()[k]).is_none()
                    || column_parity(&packed.columns()[k])
                        == column_parity(&packed.columns()[k - 1])
            })
            .unwrap_or(0);
        return Err(CompressError::NotAlternating { column });
    }
    for (k, col) in packed.columns().iter().enumerate() {
        let (parity, params) = block_column(&block, col, k)?;
        block.absorb_column(parity, params)?;
        block.stats.layers_absorbed += 1;
    }
    Ok(block)
}
