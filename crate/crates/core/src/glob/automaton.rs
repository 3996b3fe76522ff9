use std::collections::{BTreeSet, HashMap, VecDeque};

use super::pattern::{GlobPattern, Token};

type StateId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    lo: u8,
    hi: u8,
    to: StateId,
}

#[derive(Debug, Clone, Default)]
struct State {
    accepting: bool,
    // Sorted by `lo`, pairwise disjoint.
    edges: Vec<Edge>,
}

/// Deterministic automaton over bytes whose transitions are labelled with byte
/// ranges rather than individual bytes.
///
/// Instances are immutable once built; every operation returns a new automaton.
#[derive(Debug, Clone)]
pub struct PatternAutomaton {
    states: Vec<State>,
    start: StateId,
}

impl PatternAutomaton {
    /// Accepts nothing.
    pub fn empty() -> Self {
        PatternAutomaton {
            states: vec![State::default()],
            start: 0,
        }
    }

    /// Accepts every byte string.
    pub fn universal() -> Self {
        PatternAutomaton {
            states: vec![State {
                accepting: true,
                edges: vec![Edge { lo: 0, hi: 255, to: 0 }],
            }],
            start: 0,
        }
    }

    /// Strings of printable ASCII characters (space through `~`).
    pub fn printable_ascii() -> Self {
        PatternAutomaton {
            states: vec![State {
                accepting: true,
                edges: vec![Edge { lo: 0x20, hi: 0x7e, to: 0 }],
            }],
            start: 0,
        }
    }

    /// Shortest printable-ASCII member if there is one, otherwise [`Self::witness`].
    pub fn readable_witness(&self) -> Option<Vec<u8>> {
        self.intersect(&Self::printable_ascii())
            .witness()
            .or_else(|| self.witness())
    }

    /// Accepts exactly `text`.
    pub fn literal(text: &[u8]) -> Self {
        let mut states: Vec<State> = (0..=text.len()).map(|_| State::default()).collect();
        for (i, &b) in text.iter().enumerate() {
            states[i].edges.push(Edge {
                lo: b,
                hi: b,
                to: i as StateId + 1,
            });
        }
        states[text.len()].accepting = true;
        PatternAutomaton { states, start: 0 }
    }

    /// Accepts every string of length at most `max_len` built from `alphabet`.
    pub fn bounded(alphabet: &[u8], max_len: usize) -> Self {
        let mut ranges: Vec<(u8, u8)> = alphabet.iter().map(|&b| (b, b)).collect();
        ranges.sort_unstable();
        ranges.dedup();
        let states = (0..=max_len)
            .map(|i| State {
                accepting: true,
                edges: if i < max_len {
                    ranges
                        .iter()
                        .map(|&(lo, hi)| Edge {
                            lo,
                            hi,
                            to: i as StateId + 1,
                        })
                        .collect()
                } else {
                    Vec::new()
                },
            })
            .collect();
        PatternAutomaton { states, start: 0 }
    }

    /// Accepts exactly the well-formed UTF-8 byte strings.
    pub fn utf8() -> Self {
        const START: StateId = 0;
        const CONT1: StateId = 1;
        const CONT2: StateId = 2;
        const CONT3: StateId = 3;
        const AFTER_E0: StateId = 4;
        const AFTER_ED: StateId = 5;
        const AFTER_F0: StateId = 6;
        const AFTER_F4: StateId = 7;
        let e = |lo, hi, to| Edge { lo, hi, to };
        let states = vec![
            State {
                accepting: true,
                edges: vec![
                    e(0x00, 0x7f, START),
                    e(0xc2, 0xdf, CONT1),
                    e(0xe0, 0xe0, AFTER_E0),
                    e(0xe1, 0xec, CONT2),
                    e(0xed, 0xed, AFTER_ED),
                    e(0xee, 0xef, CONT2),
                    e(0xf0, 0xf0, AFTER_F0),
                    e(0xf1, 0xf3, CONT3),
                    e(0xf4, 0xf4, AFTER_F4),
                ],
            },
            State {
                accepting: false,
                edges: vec![e(0x80, 0xbf, START)],
            },
            State {
                accepting: false,
                edges: vec![e(0x80, 0xbf, CONT1)],
            },
            State {
                accepting: false,
                edges: vec![e(0x80, 0xbf, CONT2)],
            },
            State {
                accepting: false,
                edges: vec![e(0xa0, 0xbf, CONT1)],
            },
            State {
                accepting: false,
                edges: vec![e(0x80, 0x9f, CONT1)],
            },
            State {
                accepting: false,
                edges: vec![e(0x90, 0xbf, CONT2)],
            },
            State {
                accepting: false,
                edges: vec![e(0x80, 0x8f, CONT2)],
            },
        ];
        PatternAutomaton { states, start: START }
    }

    /// Subset construction over the glob's position automaton.
    pub fn compile(pattern: &GlobPattern) -> Self {
        let tokens = pattern.tokens();
        let n = tokens.len();
        let close = |mut set: BTreeSet<usize>| {
            // A star may match the empty string, so its successor position is live too.
            let snapshot: Vec<usize> = set.iter().copied().collect();
            for mut i in snapshot {
                while i < n && tokens[i] == Token::Star {
                    i += 1;
                    set.insert(i);
                }
            }
            set
        };

        let mut index: HashMap<BTreeSet<usize>, StateId> = HashMap::new();
        let mut sets: Vec<BTreeSet<usize>> = Vec::new();
        let mut states: Vec<State> = Vec::new();
        let initial = close(BTreeSet::from([0]));
        index.insert(initial.clone(), 0);
        sets.push(initial);
        states.push(State::default());

        let mut work = VecDeque::from([0 as StateId]);
        while let Some(id) = work.pop_front() {
            let set = sets[id as usize].clone();
            states[id as usize].accepting = set.contains(&n);

            // (range, successor position) pairs leaving this set.
            let mut moves: Vec<(u8, u8, usize)> = Vec::new();
            for &pos in &set {
                match tokens.get(pos) {
                    Some(Token::Star) => {
                        let (lo, hi) = if pattern.dialect().pathname {
                            // Star never consumes '/'.
                            moves.push((0, b'/' - 1, pos));
                            (b'/' + 1, 255)
                        } else {
                            (0, 255)
                        };
                        moves.push((lo, hi, pos));
                    }
                    Some(Token::Byte(class)) => {
                        moves.extend(class.ranges().iter().map(|&(lo, hi)| (lo, hi, pos + 1)));
                    }
                    None => {}
                }
            }

            let mut edges: Vec<Edge> = Vec::new();
            for (lo, hi) in elementary_intervals(moves.iter().map(|&(lo, hi, _)| (lo, hi))) {
                let target: BTreeSet<usize> = moves
                    .iter()
                    .filter(|&&(mlo, mhi, _)| mlo <= lo && hi <= mhi)
                    .map(|&(_, _, to)| to)
                    .collect();
                if target.is_empty() {
                    continue;
                }
                let target = close(target);
                let to = match index.get(&target) {
                    Some(&to) => to,
                    None => {
                        let to = states.len() as StateId;
                        index.insert(target.clone(), to);
                        sets.push(target);
                        states.push(State::default());
                        work.push_back(to);
                        to
                    }
                };
                push_edge(&mut edges, lo, hi, to);
            }
            states[id as usize].edges = edges;
        }
        PatternAutomaton { states, start: 0 }
    }

    /// Language union of several patterns.
    pub fn compile_any<'a>(patterns: impl IntoIterator<Item = &'a GlobPattern>) -> Self {
        patterns
            .into_iter()
            .map(PatternAutomaton::compile)
            .reduce(|a, b| a.union(&b))
            .unwrap_or_else(PatternAutomaton::empty)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Every state has a successor for every byte.
    pub fn is_complete(&self) -> bool {
        self.states.iter().all(|s| {
            let mut next: u16 = 0;
            for e in &s.edges {
                if e.lo as u16 != next {
                    return false;
                }
                next = e.hi as u16 + 1;
            }
            next == 256
        })
    }

    /// Equivalent automaton with a total transition function (adds a rejecting sink if needed).
    pub fn completed(&self) -> Self {
        if self.is_complete() {
            return self.clone();
        }
        let sink = self.states.len() as StateId;
        let mut states = self.states.clone();
        for state in &mut states {
            let mut filled = Vec::with_capacity(state.edges.len() * 2 + 1);
            let mut next: u16 = 0;
            for e in &state.edges {
                if (e.lo as u16) > next {
                    filled.push(Edge {
                        lo: next as u8,
                        hi: e.lo - 1,
                        to: sink,
                    });
                }
                filled.push(*e);
                next = e.hi as u16 + 1;
            }
            if next <= 255 {
                filled.push(Edge {
                    lo: next as u8,
                    hi: 255,
                    to: sink,
                });
            }
            state.edges = filled;
        }
        states.push(State {
            accepting: false,
            edges: vec![Edge { lo: 0, hi: 255, to: sink }],
        });
        PatternAutomaton {
            states,
            start: self.start,
        }
    }

    pub fn accepts(&self, text: &[u8]) -> bool {
        let mut state = self.start;
        for &b in text {
            match self.step(state, b) {
                Some(next) => state = next,
                None => return false,
            }
        }
        self.states[state as usize].accepting
    }

    fn step(&self, state: StateId, b: u8) -> Option<StateId> {
        let edges = &self.states[state as usize].edges;
        let i = edges.partition_point(|e| e.hi < b);
        edges.get(i).filter(|e| e.lo <= b).map(|e| e.to)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        product(self, other, |a, b| a && b).trimmed()
    }

    pub fn union(&self, other: &Self) -> Self {
        product(&self.completed(), &other.completed(), |a, b| a || b).trimmed()
    }

    /// Strings accepted by `self` and rejected by `other`.
    pub fn difference(&self, other: &Self) -> Self {
        product(self, &other.completed(), |a, b| a && !b).trimmed()
    }

    pub fn complement(&self) -> Self {
        let mut c = self.completed();
        for s in &mut c.states {
            s.accepting = !s.accepting;
        }
        c.trimmed()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_to_accept()[self.start as usize].is_none()
    }

    /// Shortest accepted string; ties broken by the smallest byte at each position.
    pub fn witness(&self) -> Option<Vec<u8>> {
        let dist = self.distances_to_accept();
        let mut remaining = dist[self.start as usize]?;
        let mut state = self.start;
        let mut out = Vec::with_capacity(remaining);
        while remaining > 0 {
            // Edges are sorted by `lo`, so the first qualifying edge yields the smallest byte.
            let edge = self.states[state as usize]
                .edges
                .iter()
                .find(|e| dist[e.to as usize] == Some(remaining - 1))
                .expect("distance labelling is consistent");
            out.push(edge.lo);
            state = edge.to;
            remaining -= 1;
        }
        Some(out)
    }

    fn distances_to_accept(&self) -> Vec<Option<usize>> {
        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); self.states.len()];
        for (from, s) in self.states.iter().enumerate() {
            for e in &s.edges {
                reverse[e.to as usize].push(from as StateId);
            }
        }
        let mut dist = vec![None; self.states.len()];
        let mut queue = VecDeque::new();
        for (i, s) in self.states.iter().enumerate() {
            if s.accepting {
                dist[i] = Some(0);
                queue.push_back(i as StateId);
            }
        }
        while let Some(q) = queue.pop_front() {
            let d = dist[q as usize].unwrap();
            for &p in &reverse[q as usize] {
                if dist[p as usize].is_none() {
                    dist[p as usize] = Some(d + 1);
                    queue.push_back(p);
                }
            }
        }
        dist
    }

    /// Drops states that are unreachable or cannot reach an accepting state.
    fn trimmed(&self) -> Self {
        let dist = self.distances_to_accept();
        if dist[self.start as usize].is_none() {
            return PatternAutomaton::empty();
        }
        let mut remap: Vec<Option<StateId>> = vec![None; self.states.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.start]);
        remap[self.start as usize] = Some(0);
        order.push(self.start);
        while let Some(q) = queue.pop_front() {
            for e in &self.states[q as usize].edges {
                if dist[e.to as usize].is_some() && remap[e.to as usize].is_none() {
                    remap[e.to as usize] = Some(order.len() as StateId);
                    order.push(e.to);
                    queue.push_back(e.to);
                }
            }
        }
        let states = order
            .iter()
            .map(|&old| {
                let s = &self.states[old as usize];
                let mut edges = Vec::with_capacity(s.edges.len());
                for e in &s.edges {
                    if let Some(to) = remap[e.to as usize] {
                        push_edge(&mut edges, e.lo, e.hi, to);
                    }
                }
                State {
                    accepting: s.accepting,
                    edges,
                }
            })
            .collect();
        PatternAutomaton { states, start: 0 }
    }
}

// Appends an edge, merging with the previous one when ranges are adjacent and share a target.
fn push_edge(edges: &mut Vec<Edge>, lo: u8, hi: u8, to: StateId) {
    if let Some(last) = edges.last_mut() {
        if last.to == to && last.hi as u16 + 1 == lo as u16 {
            last.hi = hi;
            return;
        }
    }
    edges.push(Edge { lo, hi, to });
}

// Splits the covered portion of the byte range into maximal intervals on which
// membership in every input range is constant.
fn elementary_intervals(ranges: impl Iterator<Item = (u8, u8)> + Clone) -> Vec<(u8, u8)> {
    let mut bounds: Vec<u16> = ranges
        .clone()
        .flat_map(|(lo, hi)| [lo as u16, hi as u16 + 1])
        .collect();
    bounds.sort_unstable();
    bounds.dedup();
    bounds
        .windows(2)
        .filter_map(|w| {
            let (lo, hi) = (w[0], w[1] - 1);
            ranges
                .clone()
                .any(|(rlo, rhi)| rlo as u16 <= lo && hi <= rhi as u16)
                .then_some((lo as u8, hi as u8))
        })
        .collect()
}

fn product(
    a: &PatternAutomaton,
    b: &PatternAutomaton,
    accept: impl Fn(bool, bool) -> bool,
) -> PatternAutomaton {
    let mut index: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut pairs = vec![(a.start, b.start)];
    index.insert((a.start, b.start), 0);
    let mut states: Vec<State> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let (p, q) = pairs[i];
        let sp = &a.states[p as usize];
        let sq = &b.states[q as usize];
        let mut edges = Vec::new();
        let (mut x, mut y) = (0, 0);
        while x < sp.edges.len() && y < sq.edges.len() {
            let (ea, eb) = (sp.edges[x], sq.edges[y]);
            let lo = ea.lo.max(eb.lo);
            let hi = ea.hi.min(eb.hi);
            if lo <= hi {
                let key = (ea.to, eb.to);
                let to = *index.entry(key).or_insert_with(|| {
                    pairs.push(key);
                    pairs.len() as StateId - 1
                });
                push_edge(&mut edges, lo, hi, to);
            }
            if ea.hi < eb.hi {
                x += 1;
            } else {
                y += 1;
            }
        }
        states.push(State {
            accepting: accept(sp.accepting, sq.accepting),
            edges,
        });
        i += 1;
    }
    PatternAutomaton { states, start: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compile(p: &str) -> PatternAutomaton {
        PatternAutomaton::compile(&GlobPattern::parse(p).unwrap())
    }

    #[test]
    fn literal_pattern_is_linear() {
        let a = compile("abc");
        assert_eq!(a.state_count(), 4);
        assert!(a.accepts(b"abc"));
        assert!(!a.accepts(b"ab"));
        assert!(!a.accepts(b"abcd"));
    }

    #[test]
    fn star_is_one_universal_state() {
        let a = compile("*");
        assert_eq!(a.state_count(), 1);
        assert!(a.is_complete());
        assert!(a.accepts(b""));
        assert!(a.accepts(&[0, 255, b'/']));
    }

    #[test]
    fn completion_adds_sink_only_when_needed() {
        let a = compile("ab");
        assert!(!a.is_complete());
        let c = a.completed();
        assert!(c.is_complete());
        assert_eq!(c.state_count(), a.state_count() + 1);
        assert!(c.accepts(b"ab") && !c.accepts(b"ax"));
    }

    #[test]
    fn witness_examples() {
        assert_eq!(PatternAutomaton::empty().witness(), None);
        assert_eq!(compile("*").witness(), Some(Vec::new()));
        let w = compile("foo/*").intersect(&compile("*/test")).witness();
        assert_eq!(w.as_deref(), Some(&b"foo/test"[..]));
        assert_eq!(compile("?b").witness(), Some(vec![0, b'b']));
    }

    #[test]
    fn set_operations() {
        assert!(compile("a").intersect(&compile("b")).is_empty());
        assert!(compile("*").difference(&compile("*")).is_empty());
        let d = compile("foo/*").difference(&compile("foo/bar"));
        assert!(!d.accepts(b"foo/bar") && d.accepts(b"foo/baz"));
        let d = compile("a?").difference(&compile("a[b]"));
        assert!(d.accepts(b"aa") && !d.accepts(b"ab"));
        let u = compile("a").union(&compile("b*"));
        assert!(u.accepts(b"a") && u.accepts(b"bcd") && !u.accepts(b"c"));
        let c = compile("a*").complement();
        assert!(c.accepts(b"") && c.accepts(b"ba") && !c.accepts(b"ab"));
    }

    #[test]
    fn utf8_automaton() {
        let u = PatternAutomaton::utf8();
        assert!(u.accepts("héllo €𝄞".as_bytes()));
        assert!(!u.accepts(&[0xc3]));
        assert!(!u.accepts(&[0xed, 0xa0, 0x80]));
        assert!(!u.accepts(&[0xc0, 0x80]));
    }

    #[test]
    fn bounded_language() {
        let b = PatternAutomaton::bounded(b"ab", 2);
        assert!(b.accepts(b"") && b.accepts(b"ba"));
        assert!(!b.accepts(b"aaa") && !b.accepts(b"c"));
    }
}
