//! The isotopy-invariant fingerprint of a presemifield: nuclei orders,
//! weight spectrum, long-line structure, pseudoregulus verdicts and the
//! position of the associated linear set relative to the hyperbolic quadric.
//!
//! `GeoSignature` holds only invariant data and derives `PartialEq`, so two
//! instances can be compared field by field; coordinates of witnesses live
//! in `SignatureWitness` and never enter the comparison.

use crate::error::{Error, Result};
use crate::ffield::FqnElem;
use crate::linset::{
    classify_line, default_candidate_lines, line_points, line_through, long_lines_candidates,
    long_lines_exhaustive, pairwise_disjoint, perp_line, restriction_pr_test, space_pr_test,
    LinePrVerdict, LinearSet, LongLine, LongLineMode, QuadricClass, SpacePrVerdict,
    DEFAULT_PAIR_CAP,
};
use crate::presemifield::{
    nuclei_spreadset, zero_divisor_witness, NucleiMethod, NucleiReport, SpreadMap, SpreadSet,
};
use serde::Serialize;

/// Where the points of weight at least 2 sit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeavySupport {
    Empty,
    SinglePoint,
    SingleLine,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeoSignature {
    pub p: u64,
    pub h: u32,
    pub n: u32,
    pub q: u64,
    pub rank: u32,
    pub left_nucleus: u64,
    pub middle_nucleus: u64,
    pub right_nucleus: u64,
    pub center: u64,
    pub set_size: u64,
    /// spectrum[i] = number of points of weight i+1.
    pub spectrum: Vec<u64>,
    pub scattered: bool,
    pub max_weight: u32,
    pub span_dim: u32,
    pub disjoint_from_quadric: bool,
    pub long_line_mode: LongLineMode,
    pub long_line_count: u64,
    /// true when the count is complete (exhaustive search).
    pub long_line_count_exact: bool,
    pub long_lines_pairwise_disjoint: Option<bool>,
    /// per long line, in canonical line order: restriction passes the
    /// line-level pseudoregulus test.
    pub long_line_pr_flags: Vec<bool>,
    pub has_non_pr_long_line: bool,
    /// None = undetermined under the current evidence (candidate mode).
    pub space_pseudoregulus: Option<bool>,
    pub transversal_classes: Option<[QuadricClass; 2]>,
    pub transversals_mutually_polar: Option<bool>,
    pub heavy_support: HeavySupport,
    pub contains_full_line: bool,
}

impl GeoSignature {
    /// x_w, the number of points of weight w.
    pub fn x_at(&self, w: u32) -> u64 {
        if w == 0 || w as usize > self.spectrum.len() {
            0
        } else {
            self.spectrum[w as usize - 1]
        }
    }
}

/// Non-invariant evidence backing a signature.
#[derive(Clone, Debug, Serialize)]
pub struct SignatureWitness {
    pub nuclei_method: NucleiMethod,
    pub long_lines: Vec<String>,
    pub long_line_points: Vec<u64>,
    pub line_verdicts: Vec<LinePrVerdict>,
    pub space_verdict: Option<SpacePrVerdict>,
    pub transversals: Option<[String; 2]>,
}

#[derive(Clone, Debug)]
pub struct SignatureOpts {
    pub long_line_mode: LongLineMode,
    pub pair_cap: u64,
}

impl Default for SignatureOpts {
    fn default() -> Self {
        SignatureOpts {
            long_line_mode: LongLineMode::Exhaustive,
            pair_cap: DEFAULT_PAIR_CAP,
        }
    }
}

impl SignatureOpts {
    pub fn candidates() -> Self {
        SignatureOpts {
            long_line_mode: LongLineMode::Candidates,
            pair_cap: DEFAULT_PAIR_CAP,
        }
    }
}

/// Run the full invariant pipeline on a spread map.
pub fn compute_signature(
    map: &SpreadMap,
    opts: &SignatureOpts,
) -> Result<(GeoSignature, SignatureWitness)> {
    let ctx = map.ctx().clone();
    let raw = SpreadSet::from_map(map);
    if let Some((x, y)) = zero_divisor_witness(&raw) {
        return Err(Error::ZeroDivisor {
            x: ctx.format_element(x),
            y: ctx.format_element(y),
        });
    }
    let normalized = SpreadSet::normalized(map)?;
    let nuclei: NucleiReport = nuclei_spreadset(&normalized)?;

    let ls = LinearSet::from_spread_map(map)?;
    let scattered = ls.scattered();

    let mut long: Vec<LongLine> = match opts.long_line_mode {
        LongLineMode::Exhaustive => long_lines_exhaustive(&ls, opts.pair_cap)?,
        LongLineMode::Candidates => {
            let cands = default_candidate_lines(&ls);
            long_lines_candidates(&ls, &cands)
        }
    };
    long.sort_by_key(|l| l.line);
    let exact = opts.long_line_mode == LongLineMode::Exhaustive;
    let disjoint = Some(pairwise_disjoint(&ctx, &long));

    let mut line_verdicts = Vec::with_capacity(long.len());
    let mut pr_flags = Vec::with_capacity(long.len());
    for ll in &long {
        let restriction = ls.restrict_to_line(&ll.line);
        let verdict = restriction_pr_test(&restriction)?;
        pr_flags.push(verdict.accepted());
        line_verdicts.push(verdict);
    }
    let has_non_pr = pr_flags.iter().any(|&f| !f);

    let (space_pr, space_verdict, transversal_lines) = match opts.long_line_mode {
        LongLineMode::Exhaustive => {
            let outcome = space_pr_test(&ls, &long);
            let accepted = outcome.verdict.accepted;
            (Some(accepted), Some(outcome.verdict), outcome.transversals)
        }
        LongLineMode::Candidates => {
            if !scattered {
                (
                    Some(false),
                    Some(SpacePrVerdict {
                        accepted: false,
                        reason: "set is not scattered".into(),
                        transversals: None,
                    }),
                    None,
                )
            } else if has_non_pr {
                (
                    Some(false),
                    Some(SpacePrVerdict {
                        accepted: false,
                        reason:
                            "a long line restriction fails the line-level pseudoregulus test"
                                .into(),
                        transversals: None,
                    }),
                    None,
                )
            } else {
                (None, None, None)
            }
        }
    };

    let (classes, polar) = match &transversal_lines {
        Some([t1, t2]) => {
            let c1 = classify_line(&ctx, t1);
            let c2 = classify_line(&ctx, t2);
            let mut cs = [c1, c2];
            if cs[1] < cs[0] {
                cs.swap(0, 1);
            }
            // second transversal is the polar of the first?
            let polar = perp_line(&ctx, t1) == *t2;
            (Some(cs), Some(polar))
        }
        None => (None, None),
    };

    let heavy: Vec<u128> = ls
        .weights
        .iter()
        .filter(|&(_, &w)| w >= 2)
        .map(|(&k, _)| k)
        .collect();
    let heavy_support = heavy_support_shape(&ls, &heavy);
    let contains_full_line = contains_full_line(&ls, &heavy);

    let sig = GeoSignature {
        p: ctx.p(),
        h: ctx.h(),
        n: ctx.n(),
        q: ctx.q(),
        rank: ls.rank,
        left_nucleus: nuclei.left,
        middle_nucleus: nuclei.middle,
        right_nucleus: nuclei.right,
        center: nuclei.center,
        set_size: ls.size,
        spectrum: ls.spectrum.clone(),
        scattered,
        max_weight: ls.max_weight,
        span_dim: ls.span_dim(),
        disjoint_from_quadric: ls.disjoint_from_quadric(),
        long_line_mode: opts.long_line_mode.clone(),
        long_line_count: long.len() as u64,
        long_line_count_exact: exact,
        long_lines_pairwise_disjoint: disjoint,
        long_line_pr_flags: pr_flags,
        has_non_pr_long_line: has_non_pr,
        space_pseudoregulus: space_pr,
        transversal_classes: classes,
        transversals_mutually_polar: polar,
        heavy_support,
        contains_full_line,
    };
    let witness = SignatureWitness {
        nuclei_method: nuclei.method,
        long_lines: long.iter().map(|l| l.line.text(&ctx)).collect(),
        long_line_points: long.iter().map(|l| l.points_in_set).collect(),
        line_verdicts,
        space_verdict,
        transversals: transversal_lines.map(|[a, b]| [a.text(&ctx), b.text(&ctx)]),
    };
    Ok((sig, witness))
}

fn heavy_support_shape(ls: &LinearSet, heavy: &[u128]) -> HeavySupport {
    use crate::linset::{key_point, point_on_line};
    match heavy.len() {
        0 => HeavySupport::Empty,
        1 => HeavySupport::SinglePoint,
        _ => {
            let ctx = &ls.ctx;
            let mut keys: Vec<u128> = heavy.to_vec();
            keys.sort_unstable();
            let p0 = key_point(keys[0]);
            let p1 = key_point(keys[1]);
            let line = line_through(ctx, p0, p1);
            let collinear = keys
                .iter()
                .all(|&k| point_on_line(ctx, key_point(k), &line));
            if collinear {
                HeavySupport::SingleLine
            } else {
                HeavySupport::Other
            }
        }
    }
}

/// A full line inside the set must carry at least two points of weight ≥ 2
/// (given that no point has weight n), so the lines spanned by pairs of
/// heavy points are the only candidates.
fn contains_full_line(ls: &LinearSet, heavy: &[u128]) -> bool {
    use crate::linset::key_point;
    let ctx = &ls.ctx;
    let full = ctx.order() + 1;
    let mut keys: Vec<u128> = heavy.to_vec();
    keys.sort_unstable();
    for (i, &a) in keys.iter().enumerate() {
        for &b in keys.iter().skip(i + 1) {
            let line = line_through(ctx, key_point(a), key_point(b));
            if line_points(ctx, &line).into_iter().all(|p| ls.contains(p)) {
                debug_assert_eq!(ls.points_on_line(&line), full);
                return true;
            }
        }
    }
    false
}

/// Convenience: the canonical coordinate lines r1: X1=X2=0 and its polar.
pub fn coordinate_long_lines(
    ctx: &std::sync::Arc<crate::ffield::FieldCtx>,
) -> (crate::linset::ProjLine, crate::linset::ProjLine) {
    let one = FqnElem::ONE;
    let zero = FqnElem::ZERO;
    let r1 = line_through(ctx, [one, zero, zero, zero], [zero, zero, zero, one]);
    let r1_perp = line_through(ctx, [zero, one, zero, zero], [zero, zero, one, zero]);
    (r1, r1_perp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presemifield::{build_family, PresemifieldSpec};

    #[test]
    fn da_q3n3_signature() {
        let mut spec = PresemifieldSpec::new("dA", 3, 1, 3);
        spec.a = Some("g^1".into());
        spec.r = Some(1);
        let built = build_family(&spec).unwrap();
        let (sig, wit) = compute_signature(&built.map, &SignatureOpts::default()).unwrap();
        assert_eq!(sig.set_size, 352);
        assert_eq!(
            (sig.left_nucleus, sig.middle_nucleus, sig.right_nucleus, sig.center),
            (27, 3, 9, 3)
        );
        assert!(!sig.scattered);
        assert_eq!(sig.space_pseudoregulus, Some(false));
        assert_eq!(sig.heavy_support, HeavySupport::Other);
        assert!(!sig.contains_full_line);
        assert!(sig.disjoint_from_quadric);
        // the two coordinate lines are long
        assert!(sig.long_line_count >= 2, "witness: {:?}", wit.long_lines);
        assert_eq!(sig.long_line_mode, LongLineMode::Exhaustive);
    }

    #[test]
    fn signatures_compare_by_value() {
        let mut spec = PresemifieldSpec::new("dA", 3, 1, 3);
        spec.a = Some("g^1".into());
        spec.r = Some(1);
        let built = build_family(&spec).unwrap();
        let (s1, _) = compute_signature(&built.map, &SignatureOpts::default()).unwrap();
        let (s2, _) = compute_signature(&built.map, &SignatureOpts::default()).unwrap();
        assert_eq!(s1, s2);
    }
}
