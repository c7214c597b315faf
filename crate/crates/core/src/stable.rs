//! Stable models by backtracking search.
//!
//! Every stable model is a supported model, so the search propagates the
//! program's completion:
//!
//! 1. a rule whose body holds forces its head true;
//! 2. an atom whose rules all have a false body is false (in particular an
//!    atom with no rules);
//! 3. a false head with all but one body literal true forces that literal
//!    false;
//! 4. a true atom with exactly one rule left that could support it forces
//!    that rule's body.
//!
//! A rule containing `not h` for its own head `h` can never support `h`; it
//! only acts through (1) and (3) as a constraint. Decisions pick the
//! unassigned atom with the most rule occurrences and try false first.
//! Conflicts are traced through the reasons of forced values back to the
//! decision levels involved, and the search jumps straight back to the
//! deepest of those. Total assignments are accepted only if they equal the
//! least model of their reduct.

use std::collections::BTreeSet;

use crate::wfs::GroundProgram;

/// Why an atom has its value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reason {
    Decision,
    /// Forced by propagation from the values of these atoms.
    Forced(Box<[usize]>),
}

/// A partial assignment: per atom a value, the decision level at which it
/// was set, and the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<Option<bool>>,
    pub levels: Vec<usize>,
    pub reasons: Vec<Option<Reason>>,
    /// Assigned atoms in the order they were set.
    pub trail: Vec<usize>,
}

impl Assignment {
    pub fn empty(atoms: usize) -> Self {
        Assignment {
            values: vec![None; atoms],
            levels: vec![0; atoms],
            reasons: vec![None; atoms],
            trail: Vec::new(),
        }
    }

    /// Pins the given values as decisions at level zero.
    pub fn with_values(atoms: usize, values: &[(usize, bool)]) -> Self {
        let mut a = Assignment::empty(atoms);
        for &(atom, v) in values {
            a.values[atom] = Some(v);
            a.reasons[atom] = Some(Reason::Decision);
            a.trail.push(atom);
        }
        a
    }
}

/// Two reasons that disagree about an atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub atom: usize,
    /// Atoms whose values jointly force the opposite of the atom's value.
    pub antecedents: Box<[usize]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveConfig {
    /// When off, every conflict backtracks to the most recent decision.
    pub backjumping: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { backjumping: true }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Branches opened, counting both values of a decision atom.
    pub decisions: u64,
    pub conflicts: u64,
    /// Decision levels abandoned without trying their other value.
    pub backjumps: u64,
    pub stability_checks: u64,
}

/// A stable model as the sorted ids of its true atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StableModel(pub Vec<usize>);

impl StableModel {
    pub fn contains(&self, atom: usize) -> bool {
        self.0.binary_search(&atom).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub models: Vec<StableModel>,
    pub stats: SolveStats,
}

/// Whether the total assignment `model` is the least model of its reduct.
pub fn check_stable(g: &GroundProgram, model: &[bool]) -> bool {
    g.reduct_least_model(model) == model
}

/// Extends `a` by propagation until nothing more is forced.
pub fn propagate(g: &GroundProgram, a: &Assignment) -> Result<Assignment, Conflict> {
    let mut s = Solver::new(g);
    for &atom in &a.trail {
        let v = a.values[atom].expect("trail atoms are assigned");
        let reason = a.reasons[atom].clone().unwrap_or(Reason::Decision);
        s.assign(atom, v, reason)?;
    }
    s.level0_units()?;
    s.propagate()?;
    Ok(Assignment {
        values: s.val.clone(),
        levels: s.level.clone(),
        reasons: s.reason.clone(),
        trail: s.trail.clone(),
    })
}

/// Enumerates stable models in a deterministic order, stopping after
/// `max_models` when given.
pub fn solve(g: &GroundProgram, max_models: Option<usize>, cfg: SolveConfig) -> Solution {
    let mut s = Solver::new(g);
    let mut models = Vec::new();
    let mut frames: Vec<Frame> = Vec::new();
    let mut pending = s.level0_units().and_then(|_| s.propagate()).err();
    loop {
        if max_models.is_some_and(|m| models.len() >= m) {
            break;
        }
        let failed: Option<BTreeSet<usize>> = match pending.take() {
            Some(conflict) => {
                s.stats.conflicts += 1;
                Some(if cfg.backjumping {
                    s.conflict_levels(&conflict)
                } else {
                    (1..=frames.len()).collect()
                })
            }
            None => match s.pick() {
                Some(atom) => {
                    s.stats.decisions += 1;
                    frames.push(Frame {
                        atom,
                        value: false,
                        flipped: false,
                        trail_len: s.trail.len(),
                        prior: BTreeSet::new(),
                    });
                    pending = s.decide(atom, false, frames.len());
                    continue;
                }
                None => {
                    s.stats.stability_checks += 1;
                    let total: Vec<bool> = s.val.iter().map(|v| v.expect("total assignment")).collect();
                    if check_stable(g, &total) {
                        models.push(StableModel((0..total.len()).filter(|&i| total[i]).collect()));
                    }
                    Some((1..=frames.len()).collect())
                }
            },
        };
        let Some(mut levels) = failed else { continue };
        // Unwind to the deepest responsible decision and try its other
        // value; a decision already flipped passes its combined reasons down.
        loop {
            let depth = frames.len();
            let Some(top) = frames.last_mut() else {
                return Solution { models, stats: s.stats };
            };
            s.undo(top.trail_len);
            if !levels.contains(&depth) {
                s.stats.backjumps += 1;
                frames.pop();
                continue;
            }
            levels.remove(&depth);
            if top.flipped {
                levels.extend(std::mem::take(&mut top.prior));
                frames.pop();
                continue;
            }
            top.flipped = true;
            top.value = !top.value;
            top.prior = levels;
            s.stats.decisions += 1;
            let (atom, value) = (top.atom, top.value);
            pending = s.decide(atom, value, depth);
            break;
        }
    }
    Solution { models, stats: s.stats }
}

struct Frame {
    atom: usize,
    value: bool,
    flipped: bool,
    trail_len: usize,
    /// Levels blamed for the failure of the first value.
    prior: BTreeSet<usize>,
}

struct Solver<'g> {
    g: &'g GroundProgram,
    val: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<Reason>>,
    trail: Vec<usize>,
    current: usize,
    queue: Vec<usize>,
    /// Per rule: body literals as (atom, positive).
    lits: Vec<Vec<(usize, bool)>>,
    /// Per rule: number of satisfied and of falsified body literals.
    sat: Vec<u32>,
    fals: Vec<u32>,
    /// Per rule: whether it can support its head.
    supports: Vec<bool>,
    /// Per atom: supporting rules, and how many are not yet falsified.
    defs: Vec<Vec<usize>>,
    alive: Vec<u32>,
    /// Per atom: every rule with it as head.
    heads: Vec<Vec<usize>>,
    /// Per atom: body occurrences as (rule, positive).
    occ: Vec<Vec<(usize, bool)>>,
    order: Vec<usize>,
    stats: SolveStats,
}

impl<'g> Solver<'g> {
    fn new(g: &'g GroundProgram) -> Self {
        let n = g.atom_count();
        let rules = g.rules();
        let mut defs = vec![Vec::new(); n];
        let mut heads = vec![Vec::new(); n];
        let mut occ = vec![Vec::new(); n];
        let mut lits = Vec::with_capacity(rules.len());
        let mut supports = Vec::with_capacity(rules.len());
        let mut weight = vec![0usize; n];
        for (r, rule) in rules.iter().enumerate() {
            let body: Vec<(usize, bool)> = rule
                .pos
                .iter()
                .map(|&a| (a, true))
                .chain(rule.neg.iter().map(|&a| (a, false)))
                .collect();
            for &(a, p) in &body {
                occ[a].push((r, p));
                weight[a] += 1;
            }
            let support = !rule.neg.contains(&rule.head);
            if support {
                defs[rule.head].push(r);
            }
            heads[rule.head].push(r);
            weight[rule.head] += 1;
            supports.push(support);
            lits.push(body);
        }
        let alive = defs.iter().map(|d| d.len() as u32).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| (std::cmp::Reverse(weight[a]), a));
        Solver {
            g,
            val: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            current: 0,
            queue: Vec::new(),
            sat: vec![0; rules.len()],
            fals: vec![0; rules.len()],
            lits,
            supports,
            defs,
            alive,
            heads,
            occ,
            order,
            stats: SolveStats::default(),
        }
    }

    /// Facts, and atoms without supporting rules, need no trigger.
    fn level0_units(&mut self) -> Result<(), Conflict> {
        for r in 0..self.lits.len() {
            if self.lits[r].is_empty() {
                self.check_rule(r)?;
            }
        }
        for a in 0..self.val.len() {
            self.check_atom(a)?;
        }
        Ok(())
    }

    fn assign(&mut self, atom: usize, value: bool, reason: Reason) -> Result<(), Conflict> {
        match self.val[atom] {
            Some(v) if v == value => return Ok(()),
            Some(_) => {
                let antecedents = match reason {
                    Reason::Decision => Box::default(),
                    Reason::Forced(a) => a,
                };
                return Err(Conflict { atom, antecedents });
            }
            None => {}
        }
        self.val[atom] = Some(value);
        self.level[atom] = self.current;
        self.reason[atom] = Some(reason);
        self.trail.push(atom);
        for i in 0..self.occ[atom].len() {
            let (r, positive) = self.occ[atom][i];
            if positive == value {
                self.sat[r] += 1;
            } else {
                self.fals[r] += 1;
                if self.fals[r] == 1 && self.supports[r] {
                    self.alive[self.g.rules()[r].head] -= 1;
                }
            }
        }
        self.queue.push(atom);
        Ok(())
    }

    fn undo(&mut self, trail_len: usize) {
        while self.trail.len() > trail_len {
            let atom = self.trail.pop().unwrap();
            let value = self.val[atom].take().unwrap();
            self.reason[atom] = None;
            for i in 0..self.occ[atom].len() {
                let (r, positive) = self.occ[atom][i];
                if positive == value {
                    self.sat[r] -= 1;
                } else {
                    if self.fals[r] == 1 && self.supports[r] {
                        self.alive[self.g.rules()[r].head] += 1;
                    }
                    self.fals[r] -= 1;
                }
            }
        }
        self.queue.clear();
    }

    fn decide(&mut self, atom: usize, value: bool, level: usize) -> Option<Conflict> {
        self.current = level;
        self.assign(atom, value, Reason::Decision)
            .and_then(|_| self.propagate())
            .err()
    }

    fn propagate(&mut self) -> Result<(), Conflict> {
        while let Some(a) = self.queue.pop() {
            for i in 0..self.occ[a].len() {
                let r = self.occ[a][i].0;
                self.check_rule(r)?;
                let h = self.g.rules()[r].head;
                self.check_atom(h)?;
            }
            for i in 0..self.heads[a].len() {
                self.check_rule(self.heads[a][i])?;
            }
            self.check_atom(a)?;
        }
        Ok(())
    }

    fn body_atoms(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.lits[r].iter().map(|&(a, _)| a)
    }

    fn falsifier(&self, r: usize) -> usize {
        self.lits[r]
            .iter()
            .find(|&&(a, p)| self.val[a] == Some(!p))
            .map(|&(a, _)| a)
            .expect("rule has a falsified literal")
    }

    fn check_rule(&mut self, r: usize) -> Result<(), Conflict> {
        let len = self.lits[r].len() as u32;
        if self.fals[r] > 0 {
            return Ok(());
        }
        let head = self.g.rules()[r].head;
        if self.sat[r] == len {
            let why: Box<[usize]> = self.body_atoms(r).collect();
            self.assign(head, true, Reason::Forced(why))?;
        } else if self.sat[r] + 1 == len && self.val[head] == Some(false) {
            let &(x, p) = self.lits[r]
                .iter()
                .find(|&&(a, _)| self.val[a].is_none())
                .expect("one literal left open");
            let why: Box<[usize]> = std::iter::once(head).chain(self.body_atoms(r).filter(|&a| a != x)).collect();
            self.assign(x, !p, Reason::Forced(why))?;
        }
        Ok(())
    }

    fn check_atom(&mut self, a: usize) -> Result<(), Conflict> {
        match (self.alive[a], self.val[a]) {
            (0, Some(false)) => Ok(()),
            (0, _) => {
                let why: Box<[usize]> = self.defs[a].iter().map(|&r| self.falsifier(r)).collect();
                self.assign(a, false, Reason::Forced(why))
            }
            (1, Some(true)) => {
                let r = *self.defs[a].iter().find(|&&r| self.fals[r] == 0).unwrap();
                if self.sat[r] as usize == self.lits[r].len() {
                    return Ok(());
                }
                let why: Box<[usize]> = std::iter::once(a)
                    .chain(self.defs[a].iter().filter(|&&o| o != r).map(|&o| self.falsifier(o)))
                    .collect();
                for i in 0..self.lits[r].len() {
                    let (x, p) = self.lits[r][i];
                    if self.val[x].is_none() {
                        self.assign(x, p, Reason::Forced(why.clone()))?;
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn pick(&self) -> Option<usize> {
        self.order.iter().copied().find(|&a| self.val[a].is_none())
    }

    /// Decision levels a conflict ultimately rests on.
    fn conflict_levels(&self, c: &Conflict) -> BTreeSet<usize> {
        let mut seen = vec![false; self.val.len()];
        let mut stack: Vec<usize> = c.antecedents.iter().copied().chain([c.atom]).collect();
        let mut levels = BTreeSet::new();
        while let Some(a) = stack.pop() {
            if std::mem::replace(&mut seen[a], true) {
                continue;
            }
            match &self.reason[a] {
                Some(Reason::Decision) => {
                    if self.level[a] > 0 {
                        levels.insert(self.level[a]);
                    }
                }
                Some(Reason::Forced(why)) => stack.extend(why.iter().copied().filter(|&x| !seen[x])),
                None => {}
            }
        }
        levels
    }
}
