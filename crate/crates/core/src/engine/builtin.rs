use std::sync::Arc;

use super::{Engine, EngineError, EngineVerdict, FaultId, MatchResult, COVERAGE_SLOTS};
use crate::ast::{parse, CharClass, Node, NodeRef, RegexAst, DOT_RANGES};
use crate::nfa::unroll_repeats;

/// Backtracking steps allowed per search before giving up with a timeout.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Compiled programs larger than this are refused.
const MAX_PROGRAM: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ByteSet([u64; 4]);

impl ByteSet {
    const EMPTY: ByteSet = ByteSet([0; 4]);

    fn insert(&mut self, b: u8) {
        self.0[(b >> 6) as usize] |= 1 << (b & 63);
    }

    fn contains(&self, b: u8) -> bool {
        self.0[(b >> 6) as usize] >> (b & 63) & 1 == 1
    }

    fn negate(&mut self) {
        for w in &mut self.0 {
            *w = !*w;
        }
    }

    fn of_class(c: &CharClass, upper_exclusive: bool) -> ByteSet {
        let mut s = ByteSet::EMPTY;
        for r in &c.ranges {
            let hi = if upper_exclusive && r.lo < r.hi { r.hi - 1 } else { r.hi };
            for b in r.lo..=hi {
                s.insert(b);
            }
        }
        if c.negated {
            s.negate();
        }
        s
    }

    fn dot() -> ByteSet {
        let mut s = ByteSet::EMPTY;
        for r in DOT_RANGES {
            for b in r.lo..=r.hi {
                s.insert(b);
            }
        }
        s
    }

    fn single(b: u8) -> ByteSet {
        let mut s = ByteSet::EMPTY;
        s.insert(b);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Inst {
    Byte(u8),
    Set(ByteSet),
    /// Greedy star over a single byte matcher: consume the longest run,
    /// then give bytes back one at a time.
    Span { set: ByteSet, drop_last: bool },
    /// Try the first target, fall back to the second.
    Split(usize, usize),
    Jmp(usize),
    AssertStart,
    AssertEnd,
    Fail,
    Match,
}

impl Inst {
    fn opcode(&self) -> u32 {
        match self {
            Inst::Byte(_) => 1,
            Inst::Set(_) => 2,
            Inst::Span { .. } => 3,
            Inst::Split(..) => 4,
            Inst::Jmp(_) => 5,
            Inst::AssertStart => 6,
            Inst::AssertEnd => 7,
            Inst::Fail => 8,
            Inst::Match => 9,
        }
    }
}

/// A pattern compiled for the backtracking machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    insts: Vec<Inst>,
}

struct Compiler {
    insts: Vec<Inst>,
    fault: Option<FaultId>,
    visits: usize,
    edges: Vec<[u32; 4]>,
}

impl Compiler {
    fn emit(&mut self, i: Inst) -> Result<usize, String> {
        if self.insts.len() >= MAX_PROGRAM {
            return Err(format!("compiled program exceeds {MAX_PROGRAM} instructions"));
        }
        self.insts.push(i);
        Ok(self.insts.len() - 1)
    }

    fn here(&self) -> usize {
        self.insts.len()
    }

    fn has(&self, f: FaultId) -> bool {
        self.fault == Some(f)
    }

    fn quant_body(&self, child: &NodeRef) -> NodeRef {
        if self.has(FaultId::AltFirstOnly) {
            if let Node::Alt(cs) = child.ungroup() {
                return cs[0].clone();
            }
        }
        child.clone()
    }

    fn node(&mut self, parent: u32, node: &Node) -> Result<(), String> {
        // Empty subtrees emit nothing, so bound the walk separately.
        self.visits += 1;
        if self.visits > 4 * MAX_PROGRAM {
            return Err("pattern expands to too many nodes".to_string());
        }
        let me = node.kind() as u32 + 1;
        self.edges.push([0xC0DE, parent, me, 0]);
        match node {
            Node::Empty => {}
            Node::Fail => {
                self.emit(Inst::Fail)?;
            }
            Node::Literal(b) => {
                self.emit(Inst::Byte(*b))?;
            }
            Node::Dot => {
                self.emit(Inst::Set(ByteSet::dot()))?;
            }
            Node::Class(c) => {
                let off = self.has(FaultId::ClassOffByOne);
                self.emit(Inst::Set(ByteSet::of_class(c, off)))?;
            }
            Node::AnchorStart => {
                self.emit(Inst::AssertStart)?;
            }
            Node::AnchorEnd => {
                self.emit(Inst::AssertEnd)?;
            }
            Node::Group(c) => self.node(me, c)?,
            Node::Concat(cs) => {
                for c in cs {
                    self.node(me, c)?;
                }
            }
            Node::Alt(cs) => {
                let mut exits = Vec::new();
                for (i, c) in cs.iter().enumerate() {
                    if i + 1 < cs.len() {
                        let split = self.emit(Inst::Split(0, 0))?;
                        self.node(me, c)?;
                        exits.push(self.emit(Inst::Jmp(0))?);
                        let next = self.here();
                        self.insts[split] = Inst::Split(split + 1, next);
                    } else {
                        self.node(me, c)?;
                    }
                }
                let end = self.here();
                for j in exits {
                    self.insts[j] = Inst::Jmp(end);
                }
            }
            Node::Star { child, greedy } => {
                let body = self.quant_body(child);
                let single = match body.ungroup() {
                    Node::Literal(b) => Some(ByteSet::single(*b)),
                    Node::Dot => Some(ByteSet::dot()),
                    Node::Class(c) => Some(ByteSet::of_class(c, false)),
                    _ => None,
                };
                match single {
                    Some(set) if *greedy => {
                        let drop_last = self.has(FaultId::StarDropLast);
                        self.emit(Inst::Span { set, drop_last })?;
                    }
                    _ if self.has(FaultId::EmptyLoopSkip) && body.nullable() => {
                        self.optional(me, &body, *greedy)?;
                    }
                    _ => {
                        let head = self.emit(Inst::Split(0, 0))?;
                        self.node(me, &body)?;
                        self.emit(Inst::Jmp(head))?;
                        let exit = self.here();
                        self.insts[head] = split(head + 1, exit, *greedy);
                    }
                }
            }
            Node::Plus { child, greedy } => {
                let body = self.quant_body(child);
                let head = self.here();
                self.node(me, &body)?;
                let at = self.here();
                self.emit(split(head, at + 1, *greedy))?;
            }
            Node::Optional { child, greedy } => {
                let body = self.quant_body(child);
                self.optional(me, &body, *greedy)?;
            }
            Node::Repeat { child, min, max, greedy } => {
                let body = self.quant_body(child);
                let rep = Arc::new(Node::Repeat { child: body, min: *min, max: *max, greedy: *greedy });
                self.node(me, &unroll_repeats(&rep))?;
            }
        }
        Ok(())
    }

    fn optional(&mut self, me: u32, body: &Node, greedy: bool) -> Result<(), String> {
        let at = self.emit(Inst::Split(0, 0))?;
        self.node(me, body)?;
        let exit = self.here();
        self.insts[at] = split(at + 1, exit, greedy);
        Ok(())
    }
}

fn split(body: usize, exit: usize, greedy: bool) -> Inst {
    if greedy {
        Inst::Split(body, exit)
    } else {
        Inst::Split(exit, body)
    }
}

impl Program {
    pub fn compile(ast: &RegexAst, fault: Option<FaultId>) -> Result<Program, String> {
        Self::compile_recorded(ast, fault).0
    }

    /// Compiles and also returns the compiler's own coverage edges.
    fn compile_recorded(ast: &RegexAst, fault: Option<FaultId>) -> (Result<Program, String>, Vec<[u32; 4]>) {
        let mut c = Compiler { insts: Vec::new(), fault, visits: 0, edges: Vec::new() };
        let res = c.node(0, ast.root()).and_then(|_| c.emit(Inst::Match));
        c.edges.sort_unstable();
        c.edges.dedup();
        (res.map(|_| Program { insts: c.insts }), c.edges)
    }

    pub fn len(&self) -> usize {
        self.insts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insts.is_empty()
    }
}

/// Saturating hit counters indexed by a hash of an execution edge.
struct Tracer {
    counters: Vec<u8>,
}

impl Tracer {
    fn new() -> Self {
        Tracer { counters: vec![0; COVERAGE_SLOTS] }
    }

    fn hit_all(&mut self, edges: &[[u32; 4]]) {
        for e in edges {
            self.hit(e[0], e[1], e[2], e[3]);
        }
    }

    fn hit(&mut self, a: u32, b: u32, c: u32, d: u32) {
        let mut h: u32 = 0x811c_9dc5;
        for x in [a, b, c, d] {
            h ^= x;
            h = h.wrapping_mul(0x0100_0193);
            h ^= h >> 15;
        }
        let slot = &mut self.counters[(h as usize) & (COVERAGE_SLOTS - 1)];
        *slot = slot.saturating_add(1);
    }
}

struct Timeout;

/// Visited (pc, pos) pairs. A state that has been explored once cannot lead
/// to a different outcome, and revisiting one inside a loop means the loop
/// body matched empty.
struct Visited {
    bits: Vec<u64>,
    width: usize,
}

impl Visited {
    fn new(prog_len: usize, input_len: usize) -> Self {
        let width = input_len + 1;
        Visited { bits: vec![0; (prog_len * width).div_ceil(64)], width }
    }

    fn insert(&mut self, pc: usize, pos: usize) -> bool {
        let i = pc * self.width + pos;
        let (w, m) = (i / 64, 1u64 << (i % 64));
        let fresh = self.bits[w] & m == 0;
        self.bits[w] |= m;
        fresh
    }
}

const ENTRY: usize = usize::MAX;

struct Machine<'a> {
    prog: &'a Program,
    input: &'a [u8],
    steps: u64,
    budget: u64,
    trace: Option<&'a mut Tracer>,
    stack: Vec<(usize, usize, usize)>,
}

impl Machine<'_> {
    fn edge(&mut self, prev: usize, pc: usize, outcome: u32) {
        if let Some(t) = self.trace.as_deref_mut() {
            let op = |i: usize| self.prog.insts.get(i).map_or(0, Inst::opcode);
            t.hit(prev as u32, op(prev), (pc as u32) << 4 | op(pc), outcome);
        }
    }

    /// Anchored attempt from `start`; returns the end of the first success.
    fn run(&mut self, start: usize, need_full: bool, visited: &mut Visited) -> Result<Option<usize>, Timeout> {
        let len = self.input.len();
        self.stack.clear();
        self.stack.push((0, start, ENTRY));
        while let Some((mut pc, mut pos, mut prev)) = self.stack.pop() {
            loop {
                self.steps += 1;
                if self.steps > self.budget {
                    return Err(Timeout);
                }
                if !visited.insert(pc, pos) {
                    break;
                }
                self.edge(prev, pc, 0);
                let ok = match &self.prog.insts[pc] {
                    Inst::Byte(b) => {
                        let ok = pos < len && self.input[pos] == *b;
                        pos += usize::from(ok);
                        ok
                    }
                    Inst::Set(s) => {
                        let ok = pos < len && s.contains(self.input[pos]);
                        pos += usize::from(ok);
                        ok
                    }
                    Inst::Span { set, drop_last } => {
                        let n = self.input[pos..].iter().take_while(|b| set.contains(**b)).count();
                        let take = if *drop_last && n > 0 { n - 1 } else { n };
                        for k in 0..take {
                            self.stack.push((pc + 1, pos + k, pc));
                        }
                        pos += take;
                        true
                    }
                    Inst::Split(a, b) => {
                        self.stack.push((*b, pos, pc));
                        prev = pc;
                        pc = *a;
                        continue;
                    }
                    Inst::Jmp(a) => {
                        prev = pc;
                        pc = *a;
                        continue;
                    }
                    Inst::AssertStart => pos == 0,
                    Inst::AssertEnd => pos == len,
                    Inst::Fail => false,
                    Inst::Match => {
                        if !need_full || pos == len {
                            self.edge(pc, pc, 1);
                            return Ok(Some(pos));
                        }
                        false
                    }
                };
                if !ok {
                    self.edge(pc, pc, 2);
                    break;
                }
                prev = pc;
                pc += 1;
            }
        }
        Ok(None)
    }
}

/// Leftmost-first search plus an anchored full-match attempt.
fn execute(prog: &Program, input: &[u8], budget: u64, mut trace: Option<&mut Tracer>) -> Result<MatchResult, Timeout> {
    let mut m = Machine { prog, input, steps: 0, budget, trace: trace.as_deref_mut(), stack: Vec::new() };
    let mut visited = Visited::new(prog.len(), input.len());
    let mut span = None;
    for start in 0..=input.len() {
        if let Some(end) = m.run(start, false, &mut visited)? {
            span = Some((start, end));
            break;
        }
    }
    let fullmatch = match span {
        None => false,
        Some((0, end)) if end == input.len() => true,
        Some(_) => m.run(0, true, &mut Visited::new(prog.len(), input.len()))?.is_some(),
    };
    Ok(MatchResult { matched: span.is_some(), span, fullmatch })
}

/// The in-process reference matcher.
pub struct BuiltinEngine {
    fault: Option<FaultId>,
    step_budget: u64,
    tracer: Option<Tracer>,
    cache: Option<Compiled>,
}

struct Compiled {
    pattern: Vec<u8>,
    program: Result<Arc<Program>, String>,
    edges: Vec<[u32; 4]>,
}

impl Default for BuiltinEngine {
    fn default() -> Self {
        BuiltinEngine::new()
    }
}

impl BuiltinEngine {
    pub fn new() -> Self {
        BuiltinEngine::with_fault(None)
    }

    pub fn with_fault(fault: Option<FaultId>) -> Self {
        BuiltinEngine { fault, step_budget: DEFAULT_STEP_BUDGET, tracer: None, cache: None }
    }

    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget;
        self
    }

    /// Record execution edges for [`Engine::take_coverage`].
    pub fn with_tracing(mut self) -> Self {
        self.tracer = Some(Tracer::new());
        self
    }

    pub fn fault(&self) -> Option<FaultId> {
        self.fault
    }

    fn program(&mut self, pattern: &[u8]) -> Result<Arc<Program>, String> {
        let hit = self.cache.as_ref().is_some_and(|c| c.pattern == pattern);
        if !hit {
            let (program, edges) = match parse(pattern) {
                Ok(ast) => {
                    let (p, e) = Program::compile_recorded(&ast, self.fault);
                    (p.map(Arc::new), e)
                }
                Err(e) => (Err(e.to_string()), vec![[0xBAD, e.kind as u32, 0, 0]]),
            };
            self.cache = Some(Compiled { pattern: pattern.to_vec(), program, edges });
        }
        let c = self.cache.as_ref().expect("just filled");
        if let Some(t) = self.tracer.as_mut() {
            t.hit_all(&c.edges);
        }
        c.program.clone()
    }

    /// Search with an already compiled program, bypassing the cache.
    pub fn run_program(&mut self, prog: &Program, input: &[u8]) -> EngineVerdict {
        match execute(prog, input, self.step_budget, self.tracer.as_mut()) {
            Ok(m) => EngineVerdict::Ok(m),
            Err(Timeout) => EngineVerdict::Timeout,
        }
    }

    /// Infallible form of [`Engine::search`].
    pub fn exec(&mut self, pattern: &[u8], input: &[u8]) -> EngineVerdict {
        match self.program(pattern) {
            Ok(prog) => self.run_program(&prog, input),
            Err(msg) => EngineVerdict::CompileError(msg),
        }
    }
}

impl Engine for BuiltinEngine {
    fn search(&mut self, pattern: &[u8], input: &[u8]) -> Result<EngineVerdict, EngineError> {
        Ok(self.exec(pattern, input))
    }

    fn take_coverage(&mut self) -> Option<Vec<u8>> {
        self.tracer.as_mut().map(|t| std::mem::replace(&mut t.counters, vec![0; COVERAGE_SLOTS]))
    }

    fn label(&self) -> String {
        match self.fault {
            None => "builtin".to_string(),
            Some(f) => format!("builtin:{f}"),
        }
    }
}
