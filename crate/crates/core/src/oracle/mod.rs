//! Metamorphic relations from Kleene algebra and the driver that checks an
//! engine against itself.
//!
//! A relation rewrites one anchor-free subpattern into an equivalent form.
//! A correct engine must then agree with itself on every input, to the
//! degree the relation's [`AssertionMode`] demands.

mod relations;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ast::{serialize, NodePath, RegexAst};
use crate::engine::{Engine, EngineError, EngineVerdict, MatchResult};

pub use relations::{applicable_sites, transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelationId {
    AltAssoc,
    AltComm,
    AltIdem,
    AltZero,
    CatAssoc,
    CatOne,
    CatZero,
    DistL,
    DistR,
    StarUnrollL,
    StarUnrollR,
    StarCollapse,
    StarExpand,
    SumstarL,
    SumstarR,
    Prodstar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Alternation,
    Concatenation,
    Distributivity,
    KleeneStar,
    StarLaws,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssertionMode {
    /// Search and full-match existence agree.
    Match,
    /// As `Match`, and the leftmost spans are identical.
    MatchAndSpan,
    /// The variant matches nothing.
    NoMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetamorphicRelation {
    pub id: RelationId,
    pub category: Category,
    pub mode: AssertionMode,
    /// The identity, left side first.
    pub law: &'static str,
}

macro_rules! relation {
    ($id:ident, $cat:ident, $mode:ident, $law:literal) => {
        MetamorphicRelation {
            id: RelationId::$id,
            category: Category::$cat,
            mode: AssertionMode::$mode,
            law: $law,
        }
    };
}

/// All relations, in checking order.
pub const CATALOG: [MetamorphicRelation; 16] = [
    relation!(AltAssoc, Alternation, Match, "r1|(r2|r3) = (r1|r2)|r3"),
    relation!(AltComm, Alternation, Match, "r1|r2 = r2|r1"),
    relation!(AltIdem, Alternation, Match, "r = r|r"),
    relation!(AltZero, Alternation, Match, "r|0 = r"),
    relation!(CatAssoc, Concatenation, Match, "(r1r2)r3 = r1(r2r3)"),
    relation!(CatOne, Concatenation, Match, "r1 = r"),
    relation!(CatZero, Concatenation, NoMatch, "r0 = 0"),
    relation!(DistL, Distributivity, Match, "r1(r2|r3) = r1r2|r1r3"),
    relation!(DistR, Distributivity, Match, "(r1|r2)r3 = r1r3|r2r3"),
    relation!(StarUnrollL, KleeneStar, Match, "r* = (1|rr*)"),
    relation!(StarUnrollR, KleeneStar, Match, "r* = (1|r*r)"),
    relation!(StarCollapse, KleeneStar, MatchAndSpan, "(r*)* = r*"),
    relation!(StarExpand, KleeneStar, MatchAndSpan, "r* = (r*)*"),
    relation!(SumstarL, StarLaws, Match, "(r1|r2)* = r1*(r2r1*)*"),
    relation!(SumstarR, StarLaws, Match, "(r1|r2)* = (r1*r2)*r1*"),
    relation!(Prodstar, StarLaws, Match, "(r1r2)* = 1|r1(r2r1)*r2"),
];

impl RelationId {
    pub const ALL: [RelationId; 16] = {
        let mut ids = [RelationId::AltAssoc; 16];
        let mut i = 0;
        while i < 16 {
            ids[i] = CATALOG[i].id;
            i += 1;
        }
        ids
    };

    pub fn relation(self) -> &'static MetamorphicRelation {
        CATALOG.iter().find(|r| r.id == self).expect("catalog covers every id")
    }

    pub fn mode(self) -> AssertionMode {
        self.relation().mode
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationId::AltAssoc => "ALT_ASSOC",
            RelationId::AltComm => "ALT_COMM",
            RelationId::AltIdem => "ALT_IDEM",
            RelationId::AltZero => "ALT_ZERO",
            RelationId::CatAssoc => "CAT_ASSOC",
            RelationId::CatOne => "CAT_ONE",
            RelationId::CatZero => "CAT_ZERO",
            RelationId::DistL => "DIST_L",
            RelationId::DistR => "DIST_R",
            RelationId::StarUnrollL => "STAR_UNROLL_L",
            RelationId::StarUnrollR => "STAR_UNROLL_R",
            RelationId::StarCollapse => "STAR_COLLAPSE",
            RelationId::StarExpand => "STAR_EXPAND",
            RelationId::SumstarL => "SUMSTAR_L",
            RelationId::SumstarR => "SUMSTAR_R",
            RelationId::Prodstar => "PRODSTAR",
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation {0:?}")]
pub struct UnknownRelation(pub String);

impl FromStr for RelationId {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationId::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("relation does not apply at this site")]
    InapplicableSite,
}

/// Does the pair of results satisfy the relation?
pub fn assert_pair(mode: AssertionMode, base: &MatchResult, variant: &MatchResult) -> bool {
    let exists = base.matched == variant.matched && base.fullmatch == variant.fullmatch;
    match mode {
        AssertionMode::Match => exists,
        AssertionMode::MatchAndSpan => exists && base.span == variant.span,
        AssertionMode::NoMatch => !variant.matched && !variant.fullmatch,
    }
}

/// Which existence check exposed a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Search,
    FullMatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MtFinding {
    pub relation: RelationId,
    pub base_pattern: String,
    pub variant_pattern: String,
    pub input: Vec<u8>,
    pub base_result: MatchResult,
    pub variant_result: MatchResult,
    pub mode: MatchMode,
}

fn classify(mode: AssertionMode, base: &MatchResult, variant: &MatchResult) -> MatchMode {
    let full_differs = match mode {
        AssertionMode::NoMatch => !variant.matched && variant.fullmatch,
        _ => base.matched == variant.matched && base.fullmatch != variant.fullmatch,
    };
    if full_differs {
        MatchMode::FullMatch
    } else {
        MatchMode::Search
    }
}

/// A variant the engine refused to compile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialectGap {
    pub relation: RelationId,
    pub variant_pattern: String,
    pub message: String,
}

/// A crash or timeout met while checking; these bypass the relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineFailure {
    pub pattern: String,
    pub input: Vec<u8>,
    pub verdict: EngineVerdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MtRun {
    pub finding: Option<MtFinding>,
    pub dialect_gaps: Vec<DialectGap>,
    pub failure: Option<EngineFailure>,
    /// Base/variant pairs compared.
    pub checks: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MtOptions {
    /// Rewrite at every applicable site instead of one random site.
    pub all_sites: bool,
}

enum Step {
    Ok(MatchResult),
    Stop(MtRun),
}

fn run_one<E: Engine + ?Sized>(
    engine: &mut E,
    pattern: &str,
    input: &[u8],
    run: &mut MtRun,
) -> Result<Option<Step>, EngineError> {
    match engine.search(pattern.as_bytes(), input)? {
        EngineVerdict::Ok(m) => Ok(Some(Step::Ok(m))),
        EngineVerdict::CompileError(msg) => {
            let _ = msg;
            Ok(None)
        }
        verdict @ (EngineVerdict::Crash(_) | EngineVerdict::Timeout) => {
            let mut out = std::mem::take(run);
            out.failure = Some(EngineFailure { pattern: pattern.to_string(), input: input.to_vec(), verdict });
            Ok(Some(Step::Stop(out)))
        }
    }
}

/// Checks `pattern` against each relation on each input.
pub fn run_mt<E: Engine + ?Sized, R: Rng + ?Sized>(
    engine: &mut E,
    pattern: &RegexAst,
    inputs: &[Vec<u8>],
    relations: &[RelationId],
    rng: &mut R,
) -> Result<MtRun, EngineError> {
    run_mt_with(engine, pattern, inputs, relations, rng, MtOptions::default())
}

pub fn run_mt_with<E: Engine + ?Sized, R: Rng + ?Sized>(
    engine: &mut E,
    pattern: &RegexAst,
    inputs: &[Vec<u8>],
    relations: &[RelationId],
    rng: &mut R,
    opts: MtOptions,
) -> Result<MtRun, EngineError> {
    let mut run = MtRun::default();
    let base_text = serialize(pattern);
    let mut base = Vec::with_capacity(inputs.len());
    for s in inputs {
        match run_one(engine, &base_text, s, &mut run)? {
            Some(Step::Ok(m)) => base.push(m),
            Some(Step::Stop(out)) => return Ok(out),
            None => return Ok(run),
        }
    }
    for &id in relations {
        let sites = applicable_sites(id, pattern);
        if sites.is_empty() {
            continue;
        }
        let chosen: Vec<NodePath> = if opts.all_sites {
            sites
        } else {
            vec![sites[rng.gen_range(0..sites.len())].clone()]
        };
        let mode = id.mode();
        for site in chosen {
            let variant = transform(id, pattern, &site).expect("site taken from applicable_sites");
            let variant_text = serialize(&variant);
            for (s, b) in inputs.iter().zip(&base) {
                let v = match engine.search(variant_text.as_bytes(), s)? {
                    EngineVerdict::Ok(m) => m,
                    EngineVerdict::CompileError(message) => {
                        run.dialect_gaps.push(DialectGap { relation: id, variant_pattern: variant_text.clone(), message });
                        break;
                    }
                    verdict => {
                        run.failure = Some(EngineFailure { pattern: variant_text, input: s.clone(), verdict });
                        return Ok(run);
                    }
                };
                run.checks += 1;
                if !assert_pair(mode, b, &v) {
                    run.finding = Some(MtFinding {
                        relation: id,
                        base_pattern: base_text,
                        variant_pattern: variant_text,
                        input: s.clone(),
                        base_result: *b,
                        variant_result: v,
                        mode: classify(mode, b, &v),
                    });
                    return Ok(run);
                }
            }
        }
    }
    Ok(run)
}

/// Replays a finding; true when the engine still violates the relation.
pub fn recheck<E: Engine + ?Sized>(engine: &mut E, f: &MtFinding) -> Result<bool, EngineError> {
    let b = engine.search(f.base_pattern.as_bytes(), &f.input)?;
    let v = engine.search(f.variant_pattern.as_bytes(), &f.input)?;
    Ok(match (b, v) {
        (EngineVerdict::Ok(b), EngineVerdict::Ok(v)) => !assert_pair(f.relation.mode(), &b, &v),
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_str;
    use crate::engine::{BuiltinEngine, FaultId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(id: RelationId, p: &str) -> String {
        let ast = parse_str(p).unwrap();
        let sites = applicable_sites(id, &ast);
        serialize(&transform(id, &ast, &sites[0]).unwrap())
    }

    #[test]
    fn catalog_shape() {
        assert_eq!(CATALOG.len(), 16);
        let span: Vec<_> = CATALOG.iter().filter(|r| r.mode == AssertionMode::MatchAndSpan).map(|r| r.id).collect();
        assert_eq!(span, vec![RelationId::StarCollapse, RelationId::StarExpand]);
        let none: Vec<_> = CATALOG.iter().filter(|r| r.mode == AssertionMode::NoMatch).map(|r| r.id).collect();
        assert_eq!(none, vec![RelationId::CatZero]);
        for id in RelationId::ALL {
            assert_eq!(id.name().parse::<RelationId>().unwrap(), id);
        }
    }

    #[test]
    fn identities_as_written() {
        assert_eq!(t(RelationId::AltComm, "a|b"), "b|a");
        assert_eq!(t(RelationId::StarExpand, "a*"), "(?:a*)*");
        assert_eq!(t(RelationId::SumstarL, "(?:a|b)*"), "a*(?:ba*)*");
        assert_eq!(t(RelationId::SumstarR, "(?:a|b)*"), "(?:a*b)*a*");
        assert_eq!(t(RelationId::StarCollapse, "(?:a*)*"), "a*");
        assert_eq!(t(RelationId::Prodstar, "(?:ab)*"), "(?:(?:)|a(?:ba)*b)");
        assert_eq!(t(RelationId::DistL, "a(?:b|c)"), "ab|ac");
        assert_eq!(t(RelationId::DistR, "(?:a|b)c"), "ac|bc");
        assert_eq!(t(RelationId::AltAssoc, "a|b|c"), "(?:a|b)|c");
        assert_eq!(t(RelationId::AltAssoc, "a|(?:b|c)"), "a|b|c");
        assert_eq!(t(RelationId::CatAssoc, "abc"), "(?:ab)c");
        assert_eq!(t(RelationId::CatZero, "ab"), "ab(?!)");
        assert_eq!(t(RelationId::StarUnrollL, "a*"), "(?:(?:)|aa*)");
        assert_eq!(t(RelationId::StarUnrollR, "a*"), "(?:(?:)|a*a)");
        assert_eq!(t(RelationId::AltIdem, "a"), "(?:a|a)");
        assert_eq!(t(RelationId::AltZero, "a"), "(?:a|(?!))");
        assert_eq!(t(RelationId::CatOne, "a"), "a(?:)");
    }

    #[test]
    fn sites() {
        let a = parse_str("a*").unwrap();
        assert!(applicable_sites(RelationId::StarCollapse, &a).is_empty());
        assert_eq!(applicable_sites(RelationId::StarExpand, &a), vec![NodePath::root()]);
        let d = parse_str("a(?:b|c)").unwrap();
        assert_eq!(applicable_sites(RelationId::DistL, &d), vec![NodePath::root()]);
        let anchored = parse_str("^(?:ab)").unwrap();
        let s = applicable_sites(RelationId::CatOne, &anchored);
        assert!(!s.contains(&NodePath::root()) && s.contains(&NodePath(vec![1])));
        let alt = parse_str("a|b").unwrap();
        assert!(applicable_sites(RelationId::CatZero, &alt) == vec![NodePath::root()]);
        assert_eq!(
            transform(RelationId::DistL, &alt, &NodePath::root()),
            Err(TransformError::InapplicableSite)
        );
    }

    #[test]
    fn variants_reparse_to_themselves() {
        for p in ["a|b|c", "(?:ab)*c", "a(?:b|c)d", "(?:a|bc|)*", "x(?:y|z)*", "(?:a*)*b"] {
            let ast = parse_str(p).unwrap();
            for id in RelationId::ALL {
                for site in applicable_sites(id, &ast) {
                    let v = transform(id, &ast, &site).unwrap();
                    let again = parse_str(&serialize(&v)).unwrap();
                    assert_eq!(again, v, "{id} on {p} at {site}");
                }
            }
        }
    }

    #[test]
    fn assertion_modes() {
        let m01 = MatchResult { matched: true, span: Some((0, 1)), fullmatch: false };
        let m02 = MatchResult { matched: true, span: Some((0, 2)), fullmatch: false };
        assert!(assert_pair(AssertionMode::Match, &m01, &m02));
        assert!(!assert_pair(AssertionMode::MatchAndSpan, &m01, &m02));
        assert!(assert_pair(AssertionMode::NoMatch, &m01, &MatchResult::NONE));
    }

    #[test]
    fn reference_engine_passes() {
        let mut e = BuiltinEngine::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inputs = vec![b"a".to_vec(), b"b".to_vec(), b"c".to_vec()];
        let run = run_mt(&mut e, &parse_str("a|b").unwrap(), &inputs, &RelationId::ALL, &mut rng).unwrap();
        assert!(run.finding.is_none() && run.checks > 0);
    }

    #[test]
    fn alt_first_only_caught_by_commutativity() {
        let mut e = BuiltinEngine::with_fault(Some(FaultId::AltFirstOnly));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = run_mt(&mut e, &parse_str("(?:b|a)+").unwrap(), &[b"a".to_vec()], &[RelationId::AltComm], &mut rng)
            .unwrap();
        let f = run.finding.expect("violation");
        assert_eq!(f.relation, RelationId::AltComm);
        assert_eq!(f.variant_pattern, "(?:a|b)+");
        assert!(!f.base_result.matched && f.variant_result.matched);
        assert!(recheck(&mut e, &f).unwrap());
    }

    #[test]
    fn class_fault_invisible_to_idempotence_alone() {
        let mut e = BuiltinEngine::with_fault(Some(FaultId::ClassOffByOne));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ast = parse_str("[a-c]").unwrap();
        let run = run_mt(&mut e, &ast, &[b"c".to_vec()], &[RelationId::AltIdem], &mut rng).unwrap();
        assert!(run.finding.is_none());
    }
}
