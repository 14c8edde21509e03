//! Active inference of a Mealy machine from queries.
//!
//! The learner grows an observation tree: every node is one reset-and-run
//! experiment prefix, every edge records the output word one input
//! produced there. Two nodes are *apart* when some common input word gets
//! different outputs below them, so they cannot be the same machine state.
//! A set of pairwise-apart nodes forms the basis and becomes the state set
//! of the next hypothesis; children of basis nodes form the frontier, and
//! three rules drive progress:
//!
//! * promotion: a frontier node apart from every basis node becomes basis;
//! * extension: every basis node gets a child for every input;
//! * identification: a frontier node compatible with two basis nodes is
//!   queried on a word separating those two, which rules at least one out.
//!
//! When no rule applies, each frontier node matches exactly one basis node
//! and folds onto it, giving a complete hypothesis. The hypothesis is then
//! replayed against the whole tree; any disagreement is localized by
//! binary search over its input word, planting an experiment that makes
//! two more nodes apart, and the rules run again. Counterexamples from
//! outside arrive through [`Learner::process_counterexample`] and take the
//! same localization path. The tree only ever grows; nothing learned is
//! thrown away.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::alphabet::{Alphabet, Symbol, Word};
use crate::dfa::StateId;
use crate::mealy::{MealyBuilder, MealyMachine, SeparatorTable};
use crate::sut::{QueryKind, SutError, SutSim};
use crate::trace::Trace;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct NodeId(u32);

impl NodeId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

struct Node {
    parent: Option<(NodeId, Symbol)>,
    /// Output word observed on the edge from the parent.
    output: Word,
    children: Vec<Option<NodeId>>,
}

/// The observation tree.
struct Tree {
    n_inputs: usize,
    nodes: Vec<Node>,
}

impl Tree {
    fn new(n_inputs: usize) -> Tree {
        Tree {
            n_inputs,
            nodes: vec![Node {
                parent: None,
                output: Word::new(),
                children: vec![None; n_inputs],
            }],
        }
    }

    fn root() -> NodeId {
        NodeId(0)
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn child(&self, n: NodeId, i: Symbol) -> Option<NodeId> {
        self.nodes[n.index()].children[i.index()]
    }

    fn output(&self, n: NodeId) -> &Word {
        &self.nodes[n.index()].output
    }

    fn add_child(&mut self, n: NodeId, i: Symbol, output: Word) -> NodeId {
        debug_assert!(self.child(n, i).is_none());
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            parent: Some((n, i)),
            output,
            children: vec![None; self.n_inputs],
        });
        self.nodes[n.index()].children[i.index()] = Some(id);
        id
    }

    /// The input word from the root to the node.
    fn access(&self, n: NodeId) -> Word {
        let mut rev: Vec<Symbol> = Vec::new();
        let mut cur = n;
        while let Some((p, i)) = self.nodes[cur.index()].parent {
            rev.push(i);
            cur = p;
        }
        rev.reverse();
        Word::from_symbols(rev)
    }

    /// Records a trace from the root, creating nodes as needed. Existing
    /// edges must agree with the trace: the machine under test is
    /// deterministic, so a mismatch is unrecoverable.
    fn graft(&mut self, trace: &Trace) {
        let mut cur = Tree::root();
        for (i, out) in trace.steps() {
            match self.child(cur, i) {
                Some(c) => {
                    assert!(
                        self.output(c) == out,
                        "system under test answered differently on a repeated prefix"
                    );
                    cur = c;
                }
                None => {
                    cur = self.add_child(cur, i, out.clone());
                }
            }
        }
    }

    /// Shortest input word with different outputs below the two nodes, or
    /// `None` while the nodes are still compatible.
    fn apart_witness(&self, a: NodeId, b: NodeId) -> Option<Word> {
        let mut queue: Vec<(NodeId, NodeId, Word)> = vec![(a, b, Word::new())];
        let mut head = 0;
        while head < queue.len() {
            let (x, y, prefix) = queue[head].clone();
            head += 1;
            for raw in 0..self.n_inputs {
                let i = Symbol(raw as u32);
                if let (Some(cx), Some(cy)) = (self.child(x, i), self.child(y, i)) {
                    if self.output(cx) != self.output(cy) {
                        return Some(prefix.appended(i));
                    }
                    queue.push((cx, cy, prefix.appended(i)));
                }
            }
        }
        None
    }

    fn apart(&self, a: NodeId, b: NodeId) -> bool {
        self.apart_witness(a, b).is_some()
    }
}

/// A complete hypothesis machine with the extras conformance testing
/// needs: a breadth-first state cover and pairwise separating words.
#[derive(Clone)]
pub struct Hypothesis {
    pub machine: MealyMachine,
    /// Shortest access word per state, from the machine itself.
    pub access: Vec<Word>,
    separators: SeparatorTable,
}

impl Hypothesis {
    /// Wraps a complete machine with all states reachable.
    pub fn from_machine(machine: MealyMachine) -> Hypothesis {
        let access = machine
            .access_words()
            .into_iter()
            .map(|a| a.expect("hypothesis states are reachable"))
            .collect();
        let separators = SeparatorTable::build(&machine).expect("hypothesis is complete");
        Hypothesis {
            machine,
            access,
            separators,
        }
    }

    pub fn n_states(&self) -> usize {
        self.machine.n_states()
    }

    /// A shortest input word distinguishing two states, `None` if they are
    /// equivalent.
    pub fn separator(&self, p: StateId, q: StateId) -> Option<Word> {
        self.separators.separator(p, q)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CounterexampleError {
    #[error("the hypothesis already reproduces the trace")]
    NotACounterexample,
    #[error("no hypothesis has been built yet")]
    NoHypothesis,
    #[error(transparent)]
    Sut(#[from] SutError),
}

/// The active learner. One instance accompanies one system under test for
/// a whole run; its tree is never reset.
pub struct Learner {
    inputs: Alphabet,
    outputs: Alphabet,
    tree: Tree,
    basis: Vec<NodeId>,
    queries_issued: u64,
    last: Option<MealyMachine>,
}

impl Learner {
    pub fn new(inputs: Alphabet, outputs: Alphabet) -> Learner {
        let n = inputs.len();
        Learner {
            inputs,
            outputs,
            tree: Tree::new(n),
            basis: vec![Tree::root()],
            queries_issued: 0,
            last: None,
        }
    }

    /// Learning queries this learner has issued.
    pub fn output_query_count(&self) -> u64 {
        self.queries_issued
    }

    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn tree_size(&self) -> usize {
        self.tree.len()
    }

    fn query(&mut self, sut: &mut SutSim, w: &Word) -> Result<(), SutError> {
        self.queries_issued += 1;
        let trace = sut.query(w, QueryKind::Learning)?;
        self.tree.graft(&trace);
        Ok(())
    }

    /// Frontier nodes (children of basis nodes that are not basis), in
    /// shortlex order of their access words.
    fn frontier(&self) -> Vec<NodeId> {
        let mut out: Vec<(Word, NodeId)> = Vec::new();
        for b in &self.basis {
            for raw in 0..self.inputs.len() {
                if let Some(c) = self.tree.child(*b, Symbol(raw as u32)) {
                    if !self.basis.contains(&c) {
                        out.push((self.tree.access(c), c));
                    }
                }
            }
        }
        out.sort_by(|(w1, _), (w2, _)| w1.shortlex_cmp(w2));
        out.into_iter().map(|(_, n)| n).collect()
    }

    fn candidates(&self, f: NodeId) -> Vec<usize> {
        (0..self.basis.len())
            .filter(|k| !self.tree.apart(f, self.basis[*k]))
            .collect()
    }

    /// Applies promotion, extension, and identification until none fires.
    fn close_rules(&mut self, sut: &mut SutSim) -> Result<(), SutError> {
        'rules: loop {
            // Promotion: a frontier node apart from the whole basis is a
            // newly discovered state.
            for f in self.frontier() {
                if self.candidates(f).is_empty() {
                    self.basis.push(f);
                    continue 'rules;
                }
            }
            // Extension: the basis must have all children.
            for k in 0..self.basis.len() {
                let b = self.basis[k];
                for raw in 0..self.inputs.len() {
                    let i = Symbol(raw as u32);
                    if self.tree.child(b, i).is_none() {
                        let w = self.tree.access(b).appended(i);
                        self.query(sut, &w)?;
                        continue 'rules;
                    }
                }
            }
            // Identification: shrink multi-candidate frontier nodes with a
            // word separating their first two candidates.
            for f in self.frontier() {
                let cands = self.candidates(f);
                if cands.len() >= 2 {
                    let w = self
                        .tree
                        .apart_witness(self.basis[cands[0]], self.basis[cands[1]])
                        .expect("basis nodes are pairwise apart");
                    let q = self.tree.access(f).concat(&w);
                    self.query(sut, &q)?;
                    continue 'rules;
                }
            }
            return Ok(());
        }
    }

    /// Folds the frontier onto the basis and builds the machine.
    fn build_hypothesis(&self) -> MealyMachine {
        let mut b = MealyBuilder::new(self.inputs.clone(), self.outputs.clone())
            .expect("alphabets are disjoint");
        for _ in 0..self.basis.len() {
            b.add_state();
        }
        b.set_initial(StateId(0));
        for (k, node) in self.basis.iter().enumerate() {
            for raw in 0..self.inputs.len() {
                let i = Symbol(raw as u32);
                let c = self.tree.child(*node, i).expect("basis is complete");
                let target = match self.basis.iter().position(|x| *x == c) {
                    Some(t) => t,
                    None => {
                        let cands = self.candidates(c);
                        assert!(cands.len() == 1, "frontier node must have one candidate");
                        cands[0]
                    }
                };
                b.add_transition(
                    StateId(k as u32),
                    i,
                    self.tree.output(c).clone(),
                    StateId(target as u32),
                )
                .expect("fresh transition");
            }
        }
        b.build().expect("initial state set")
    }

    /// First tree word, in breadth-first order, on which the hypothesis
    /// answers differently than the tree.
    fn find_inconsistency(&self, h: &MealyMachine) -> Option<Word> {
        let mut queue: Vec<(NodeId, StateId)> = vec![(Tree::root(), h.initial())];
        let mut head = 0;
        while head < queue.len() {
            let (n, s) = queue[head];
            head += 1;
            for raw in 0..self.inputs.len() {
                let i = Symbol(raw as u32);
                if let Some(c) = self.tree.child(n, i) {
                    let (to, out) = h.step(s, i).expect("hypothesis is complete");
                    if out != self.tree.output(c) {
                        return Some(self.tree.access(c));
                    }
                    queue.push((c, to));
                }
            }
        }
        None
    }

    /// Decides whether the machine's answers below `basis_node` along
    /// `suffix` differ from `predicted`, querying until the tree holds
    /// enough of the suffix to tell.
    fn suffix_differs(
        &mut self,
        sut: &mut SutSim,
        basis_node: NodeId,
        suffix: &Word,
        predicted: &[Word],
    ) -> Result<bool, SutError> {
        loop {
            let mut cur = basis_node;
            let mut verdict: Option<bool> = Some(false);
            for (k, i) in suffix.iter().enumerate() {
                match self.tree.child(cur, i) {
                    Some(c) => {
                        if *self.tree.output(c) != predicted[k] {
                            verdict = Some(true);
                            break;
                        }
                        cur = c;
                    }
                    None => {
                        verdict = None;
                        break;
                    }
                }
            }
            match verdict {
                Some(d) => return Ok(d),
                None => {
                    // Not enough of the suffix observed yet; ask for all of
                    // it. An aborted query can leave this short, in which
                    // case the next round asks again.
                    let w = self.tree.access(basis_node).concat(suffix);
                    self.query(sut, &w)?;
                }
            }
        }
    }

    /// Localizes a disagreement between tree and hypothesis on `sigma` by
    /// binary search, planting experiments that separate a frontier node
    /// from the basis node the hypothesis folded it onto.
    fn localize(
        &mut self,
        h: &MealyMachine,
        sigma: &Word,
        sut: &mut SutSim,
    ) -> Result<(), SutError> {
        // States of the hypothesis along sigma.
        let mut states: Vec<StateId> = Vec::with_capacity(sigma.len() + 1);
        states.push(h.initial());
        for i in sigma.iter() {
            let (to, _) = h.step(*states.last().unwrap(), i).expect("complete");
            states.push(to);
        }
        // The disagreement predicate holds at 0 and fails at |sigma|;
        // find the boundary.
        let mut lo = 0usize;
        let mut hi = sigma.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let suffix = sigma.suffix_from(mid);
            let from = states[mid];
            let predicted: Vec<Word> = h
                .trace_from(from, &suffix)
                .expect("complete")
                .steps()
                .map(|(_, o)| o.clone())
                .collect();
            let node = self.basis[from.index()];
            if self.suffix_differs(sut, node, &suffix, &predicted)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Make sure the data witnessing the boundary is in the tree: the
        // basis node at position lo must answer sigma[lo..] differently
        // than the hypothesis predicts, which plants the separating
        // experiment below its sigma[lo] child.
        let suffix = sigma.suffix_from(lo);
        let from = states[lo];
        let predicted: Vec<Word> = h
            .trace_from(from, &suffix)
            .expect("complete")
            .steps()
            .map(|(_, o)| o.clone())
            .collect();
        let node = self.basis[from.index()];
        let differs = self.suffix_differs(sut, node, &suffix, &predicted)?;
        debug_assert!(differs, "localization lost the disagreement");
        Ok(())
    }

    /// Runs rule closure and consistency checking until the hypothesis
    /// reproduces every observation in the tree, then returns it.
    pub fn refine(&mut self, sut: &mut SutSim) -> Result<Hypothesis, SutError> {
        loop {
            self.close_rules(sut)?;
            let m = self.build_hypothesis();
            match self.find_inconsistency(&m) {
                None => {
                    self.last = Some(m.clone());
                    return Ok(Hypothesis::from_machine(m));
                }
                Some(sigma) => {
                    self.localize(&m, &sigma, sut)?;
                }
            }
        }
    }

    /// Feeds back a trace on which the machine under test deviated from
    /// the current hypothesis. The trace is recorded and the deviation
    /// localized; the next [`Learner::refine`] folds it in.
    pub fn process_counterexample(
        &mut self,
        ce: &Trace,
        sut: &mut SutSim,
    ) -> Result<(), CounterexampleError> {
        let h = self.last.clone().ok_or(CounterexampleError::NoHypothesis)?;
        let inputs = ce.inputs();
        let predicted = h.run(&inputs).expect("hypothesis is complete");
        if predicted == *ce {
            return Err(CounterexampleError::NotACounterexample);
        }
        self.tree.graft(ce);
        self.localize(&h, &inputs, sut)?;
        Ok(())
    }
}

/// Learns the simulated machine exactly, resolving each hypothesis with a
/// direct equivalence check against it. The shortcut makes this a
/// white-box baseline: every counterexample is a shortest separating
/// word, yet all learning still pays query cost, so budgets apply.
pub fn learn_with_perfect_oracle(sut: &mut SutSim) -> Result<Hypothesis, SutError> {
    let mut learner = Learner::new(sut.machine().inputs().clone(), sut.machine().outputs().clone());
    loop {
        let h = learner.refine(sut)?;
        let Some(w) = h
            .machine
            .separating_word(sut.machine())
            .expect("alphabets agree")
        else {
            return Ok(h);
        };
        let ce = sut
            .machine()
            .run(&w)
            .expect("separating word runs on the machine");
        match learner.process_counterexample(&ce, sut) {
            Ok(()) => {}
            Err(CounterexampleError::Sut(e)) => return Err(e),
            Err(e) => panic!("perfect counterexample rejected: {e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines;
    use crate::mealy::minimize_and_isomorphic;

    /// Learns a machine to exactness against a perfect oracle.
    fn learn_exactly(target: &MealyMachine) -> (MealyMachine, u64) {
        let mut sut = SutSim::new(target.clone()).unwrap();
        let mut learner = Learner::new(target.inputs().clone(), target.outputs().clone());
        loop {
            let h = learner.refine(&mut sut).unwrap();
            match h.machine.separating_word(target).unwrap() {
                None => return (h.machine, sut.stats().learning_queries),
                Some(w) => {
                    let ce = sut.query(&w, QueryKind::Learning).unwrap();
                    learner.process_counterexample(&ce, &mut sut).unwrap();
                }
            }
        }
    }

    #[test]
    fn learns_a_small_machine_exactly() {
        let m = machines::lock_machine(&machines::LockParams {
            secret: vec![0, 1, 0],
            n_inputs: 2,
            shallow_bug: false,
        });
        let (h, _) = learn_exactly(&m);
        assert!(minimize_and_isomorphic(&h, &m).unwrap());
    }

    #[test]
    fn first_hypothesis_of_a_one_state_machine_is_exact() {
        let m = machines::lock_machine(&machines::LockParams {
            secret: vec![],
            n_inputs: 3,
            shallow_bug: false,
        });
        let mut sut = SutSim::new(m.clone()).unwrap();
        let mut learner = Learner::new(m.inputs().clone(), m.outputs().clone());
        let h = learner.refine(&mut sut).unwrap();
        assert_eq!(h.n_states(), 1);
        assert!(minimize_and_isomorphic(&h.machine, &m).unwrap());
    }

    #[test]
    fn rejects_a_non_counterexample() {
        let m = machines::lock_machine(&machines::LockParams {
            secret: vec![0, 1],
            n_inputs: 2,
            shallow_bug: false,
        });
        let mut sut = SutSim::new(m.clone()).unwrap();
        let mut learner = Learner::new(m.inputs().clone(), m.outputs().clone());
        let h = learner.refine(&mut sut).unwrap();
        let w = m.inputs().word(&["i0"]).unwrap();
        let honest = h.machine.run(&w).unwrap();
        assert_eq!(
            learner.process_counterexample(&honest, &mut sut),
            Err(CounterexampleError::NotACounterexample)
        );
    }

    #[test]
    fn tree_only_grows() {
        let m = machines::lock_machine(&machines::LockParams {
            secret: vec![0, 1, 1, 0],
            n_inputs: 2,
            shallow_bug: false,
        });
        let mut sut = SutSim::new(m.clone()).unwrap();
        let mut learner = Learner::new(m.inputs().clone(), m.outputs().clone());
        let mut sizes = Vec::new();
        loop {
            let h = learner.refine(&mut sut).unwrap();
            sizes.push(learner.tree_size());
            match h.machine.separating_word(&m).unwrap() {
                None => break,
                Some(w) => {
                    let ce = sut.query(&w, QueryKind::Learning).unwrap();
                    learner.process_counterexample(&ce, &mut sut).unwrap();
                }
            }
        }
        assert!(sizes.windows(2).all(|p| p[0] <= p[1]));
    }
}
