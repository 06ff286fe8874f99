//! Three-variable specialty tools: the covering checker over the
//! information diagram of (X, Y, Z), and the single-term refinement that
//! searches the convex curve w |-> w * ln M_{p/w}(R)_{q/w}.

use crate::error::{Error, Result};
use crate::moments::ln_bivariate_moment;
use crate::relation::Relation;

/// Coefficients on one pair-line, in the order the CLI accepts them:
/// for line XY these weight H(Y|X), I(X;Y), H(X|Y).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineCoeffs {
    pub h_fwd: f64, // H(Y|X) on line XY
    pub i: f64,     // I(X;Y)
    pub h_bwd: f64, // H(X|Y)
}

impl LineCoeffs {
    pub fn new(h_fwd: f64, i: f64, h_bwd: f64) -> Self {
        LineCoeffs { h_fwd, i, h_bwd }
    }

    pub fn zero() -> Self {
        LineCoeffs::new(0.0, 0.0, 0.0)
    }
}

/// A nine-coefficient candidate covering: one `LineCoeffs` per pair-line,
/// in the order XY, YZ, ZX.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VennCover {
    pub xy: LineCoeffs,
    pub yz: LineCoeffs,
    pub zx: LineCoeffs,
}

impl VennCover {
    pub fn new(xy: LineCoeffs, yz: LineCoeffs, zx: LineCoeffs) -> Result<Self> {
        for line in [xy, yz, zx] {
            for c in [line.h_fwd, line.i, line.h_bwd] {
                if c < 0.0 || c.is_nan() {
                    return Err(Error::domain(format!(
                        "cover coefficients must be nonnegative, got {c}"
                    )));
                }
            }
        }
        Ok(VennCover { xy, yz, zx })
    }

    /// Parse "a,b,c,d,e,f,g,h,i" with rational entries like "4/9".
    pub fn parse(text: &str) -> Result<Self> {
        let vals: Vec<f64> = text
            .split(',')
            .map(|t| parse_rational(t.trim()))
            .collect::<Result<_>>()?;
        if vals.len() != 9 {
            return Err(Error::domain(format!(
                "expected nine comma-separated coefficients, got {}",
                vals.len()
            )));
        }
        VennCover::new(
            LineCoeffs::new(vals[0], vals[1], vals[2]),
            LineCoeffs::new(vals[3], vals[4], vals[5]),
            LineCoeffs::new(vals[6], vals[7], vals[8]),
        )
    }
}

fn parse_rational(text: &str) -> Result<f64> {
    let bad = || Error::domain(format!("cannot parse coefficient '{text}'"));
    if let Some((num, den)) = text.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| bad())?;
        let d: f64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(Error::domain(format!("zero denominator in '{text}'")));
        }
        Ok(n / d)
    } else {
        text.parse().map_err(|_| bad())
    }
}

pub const BASIS_NAMES: [&str; 7] = [
    "H(X|YZ)",
    "H(Y|ZX)",
    "H(Z|XY)",
    "I(X;Y|Z)",
    "I(Y;Z|X)",
    "I(Z;X|Y)",
    "I(X;Y;Z)",
];

const APPLICABILITY_TOL: f64 = 1e-12;
const COVERING_TOL: f64 = 1e-12;

/// Expand the nine line coefficients onto the seven diagram cells, using
/// H(X|Y) = H(X|YZ) + I(Z;X|Y), I(X;Y) = I(X;Y|Z) + I(X;Y;Z), and the
/// rotations thereof.
pub fn venn_basis(cover: &VennCover) -> [f64; 7] {
    let (hyx, ixy, hxy) = (cover.xy.h_fwd, cover.xy.i, cover.xy.h_bwd);
    let (hzy, iyz, hyz) = (cover.yz.h_fwd, cover.yz.i, cover.yz.h_bwd);
    let (hxz, izx, hzx) = (cover.zx.h_fwd, cover.zx.i, cover.zx.h_bwd);
    [
        hxy + hxz,       // H(X|YZ)
        hyx + hyz,       // H(Y|ZX)
        hzy + hzx,       // H(Z|XY)
        ixy + hyz + hxz, // I(X;Y|Z)
        iyz + hyx + hzx, // I(Y;Z|X)
        izx + hxy + hzy, // I(Z;X|Y)
        ixy + iyz + izx, // I(X;Y;Z)
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct VennVerdict {
    pub applicable: bool,
    pub covering: bool,
    pub basis: [f64; 7],
    /// First basis coordinate below 1 when the cover is rejected.
    pub witness: Option<&'static str>,
}

/// Decide whether the nine-term combination dominates the joint entropy.
/// The criterion is only a characterization when every line's I coefficient
/// is at most both of that line's H coefficients; otherwise the verdict is
/// `applicable = false` and no covering claim is made.
pub fn check_cover(cover: &VennCover) -> VennVerdict {
    let basis = venn_basis(cover);
    let applicable = [cover.xy, cover.yz, cover.zx].iter().all(|line| {
        line.i <= line.h_fwd + APPLICABILITY_TOL && line.i <= line.h_bwd + APPLICABILITY_TOL
    });
    if !applicable {
        return VennVerdict {
            applicable: false,
            covering: false,
            basis,
            witness: None,
        };
    }
    let witness = basis
        .iter()
        .position(|&b| b < 1.0 - COVERING_TOL)
        .map(|k| BASIS_NAMES[k]);
    VennVerdict {
        applicable: true,
        covering: witness.is_none(),
        basis,
        witness,
    }
}

const REFINE_MAX_ITERS: usize = 200;
pub const DEFAULT_REFINE_TOL: f64 = 1e-6;

/// Minimize f(w) = w * ln M_{p/w}(R)_{q/w} over w in [1, min(p, q)] by
/// ternary search; f is convex in w, so the bracket shrinks monotonically.
pub fn refine_single_term(rel: &Relation, p: f64, q: f64, tol: f64) -> Result<(f64, f64)> {
    if p < 1.0 || q < 1.0 || p.is_nan() || q.is_nan() {
        return Err(Error::domain(format!(
            "refinement requires p, q >= 1, got p={p}, q={q}"
        )));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let f = |w: f64| -> Result<f64> { Ok(w * ln_bivariate_moment(rel, p / w, q / w)?) };
    let hi = p.min(q);
    if hi <= 1.0 {
        return Ok((1.0, f(1.0)?));
    }
    let mut lo = 1.0f64;
    let mut hi = hi;
    for _ in 0..REFINE_MAX_ITERS {
        if hi - lo < tol {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1)? <= f(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let w = 0.5 * (lo + hi);
    Ok((w, f(w)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::z_relation;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn bound_11_cover() -> VennCover {
        let line = LineCoeffs::new(4.0 / 9.0, 1.0 / 3.0, 5.0 / 9.0);
        VennCover::new(line, line, line).unwrap()
    }

    fn panda_cover() -> VennCover {
        VennCover::new(
            LineCoeffs::new(1.0, 1.0, 1.0),
            LineCoeffs::new(1.0, 0.0, 0.0),
            LineCoeffs::zero(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_negative_coefficients() {
        assert!(VennCover::new(
            LineCoeffs::new(-0.1, 0.0, 0.0),
            LineCoeffs::zero(),
            LineCoeffs::zero()
        )
        .is_err());
    }

    #[test]
    fn unit_conditional_entropy_expansion() {
        // A lone H(X|Y) lands on H(X|YZ) and I(Z;X|Y).
        let cover = VennCover::new(
            LineCoeffs::new(0.0, 0.0, 1.0),
            LineCoeffs::zero(),
            LineCoeffs::zero(),
        )
        .unwrap();
        assert_eq!(venn_basis(&cover), [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn panda_cover_accepted_with_unit_center() {
        let verdict = check_cover(&panda_cover());
        assert!(verdict.applicable);
        assert!(verdict.covering);
        assert!(verdict.basis.iter().all(|&b| b >= 1.0 - 1e-12));
        assert!((verdict.basis[6] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_11_cover_has_known_basis() {
        let verdict = check_cover(&bound_11_cover());
        assert!(verdict.applicable);
        assert!(verdict.covering);
        let want = [1.0, 1.0, 1.0, 4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 1.0];
        for (got, want) in verdict.basis.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn all_zero_cover_rejected_at_first_atom() {
        let zero = VennCover::new(LineCoeffs::zero(), LineCoeffs::zero(), LineCoeffs::zero())
            .unwrap();
        let verdict = check_cover(&zero);
        assert!(verdict.applicable);
        assert!(!verdict.covering);
        assert_eq!(verdict.witness, Some("H(X|YZ)"));
    }

    #[test]
    fn single_line_cover_misses_the_far_atom() {
        let cover = VennCover::new(
            LineCoeffs::new(1.0, 1.0, 1.0),
            LineCoeffs::zero(),
            LineCoeffs::zero(),
        )
        .unwrap();
        let verdict = check_cover(&cover);
        assert!(verdict.applicable);
        assert!(!verdict.covering);
        assert_eq!(verdict.witness, Some("H(Z|XY)"));
    }

    #[test]
    fn heavy_i_cover_is_inapplicable() {
        let cover = VennCover::new(
            LineCoeffs::new(0.5, 2.0, 0.5),
            LineCoeffs::zero(),
            LineCoeffs::zero(),
        )
        .unwrap();
        let verdict = check_cover(&cover);
        assert!(!verdict.applicable);
        assert!(!verdict.covering);
    }

    #[test]
    fn parses_rational_cover_strings() {
        let cover =
            VennCover::parse("4/9,1/3,5/9, 4/9,1/3,5/9, 4/9,1/3,5/9").unwrap();
        assert_eq!(cover, bound_11_cover());
        assert!(VennCover::parse("1,2,3").is_err());
        assert!(VennCover::parse("1,2,3,4,5,6,7,8,x").is_err());
        assert!(VennCover::parse("1,2,3,4,5,6,7,8,1/0").is_err());
    }

    #[test]
    fn refine_on_z_at_four_four() {
        let z = z_relation();
        let f = |w: f64| w * ln_bivariate_moment(&z, 4.0 / w, 4.0 / w).unwrap();
        assert!((f(1.0) - 80f64.ln()).abs() < 1e-12);
        assert!((f(2.0) - 64f64.ln()).abs() < 1e-12);
        assert!((f(4.0) - 81f64.ln()).abs() < 1e-12);
        let (w, ln_bound) = refine_single_term(&z, 4.0, 4.0, 1e-6).unwrap();
        assert!(ln_bound <= 64f64.ln() + 1e-6);
        assert!(w > 1.0 + 1e-3 && w < 4.0 - 1e-3);
    }

    #[test]
    fn degenerate_bracket_returns_endpoint() {
        let z = z_relation();
        let (w, ln_bound) = refine_single_term(&z, 1.0, 7.0, 1e-6).unwrap();
        assert_eq!(w, 1.0);
        assert!((ln_bound - ln_bivariate_moment(&z, 1.0, 7.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn refinement_domain_errors() {
        let z = z_relation();
        assert!(refine_single_term(&z, 0.5, 2.0, 1e-6).is_err());
        assert!(refine_single_term(&z, 2.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn refinement_beats_two_term_mixes() {
        // w lnM(p,1) + (1-w) lnM(1,q) dominates lnM at the interpolated
        // exponents, hence also the refined single-term bound there.
        let z = z_relation();
        let (p, q) = (4.0, 4.0);
        let a = ln_bivariate_moment(&z, p, 1.0).unwrap();
        let b = ln_bivariate_moment(&z, 1.0, q).unwrap();
        for k in 0..=20 {
            let w = k as f64 / 20.0;
            let mixed_p = w * p + (1.0 - w);
            let mixed_q = w + (1.0 - w) * q;
            let (_, ln_bound) = refine_single_term(&z, mixed_p, mixed_q, 1e-8).unwrap();
            assert!(ln_bound <= w * a + (1.0 - w) * b + 1e-9, "w={w}");
        }
    }

    #[test]
    fn refinement_matches_dense_grid_scan() {
        let rel = Relation::from_pairs(vec![(0, 1), (0, 2), (1, 1), (3, 2), (3, 4), (4, 4)])
            .unwrap();
        let (p, q) = (3.0, 3.0);
        let (_, ln_bound) = refine_single_term(&rel, p, q, 1e-8).unwrap();
        let mut best = f64::INFINITY;
        let mut w = 1.0;
        while w <= p.min(q) + 1e-12 {
            best = best.min(w * ln_bivariate_moment(&rel, p / w, q / w).unwrap());
            w += 0.01;
        }
        assert!(ln_bound <= best + 1e-6);
    }

    /// Entropies (nats) of the uniform distribution over a table's rows,
    /// per column subset encoded as a bitmask over (X, Y, Z).
    fn table_entropy(rows: &[[u8; 3]], mask: u32) -> f64 {
        let mut counts: HashMap<[u8; 3], usize> = HashMap::new();
        for row in rows {
            let mut key = [0u8; 3];
            for c in 0..3 {
                if mask & (1 << c) != 0 {
                    key[c] = row[c];
                }
            }
            *counts.entry(key).or_insert(0) += 1;
        }
        let n = rows.len() as f64;
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }

    proptest! {
        #[test]
        fn basis_map_is_linear(
            a in proptest::collection::vec(0.0f64..4.0, 9),
            b in proptest::collection::vec(0.0f64..4.0, 9),
            s in 0.0f64..3.0,
            t in 0.0f64..3.0,
        ) {
            let mk = |v: &[f64]| VennCover::new(
                LineCoeffs::new(v[0], v[1], v[2]),
                LineCoeffs::new(v[3], v[4], v[5]),
                LineCoeffs::new(v[6], v[7], v[8]),
            ).unwrap();
            let combo: Vec<f64> = (0..9).map(|k| s * a[k] + t * b[k]).collect();
            let lhs = venn_basis(&mk(&combo));
            let ba = venn_basis(&mk(&a));
            let bb = venn_basis(&mk(&b));
            for k in 0..7 {
                prop_assert!((lhs[k] - (s * ba[k] + t * bb[k])).abs() < 1e-9);
            }
        }

        #[test]
        fn accepted_covers_dominate_joint_entropy(
            rows in proptest::collection::vec(
                proptest::array::uniform3(0u8..4), 1..50),
            coeffs in proptest::collection::vec(0.0f64..2.0, 9),
        ) {
            // Push each line's I below its H coefficients so the cover is
            // applicable, then only test accepted covers.
            let line = |h1: f64, i: f64, h2: f64| {
                LineCoeffs::new(h1, i.min(h1).min(h2), h2)
            };
            let cover = VennCover::new(
                line(coeffs[0], coeffs[1], coeffs[2]),
                line(coeffs[3], coeffs[4], coeffs[5]),
                line(coeffs[6], coeffs[7], coeffs[8]),
            ).unwrap();
            let verdict = check_cover(&cover);
            prop_assume!(verdict.covering);

            let h = |m: u32| table_entropy(&rows, m);
            let (x, y, z) = (1u32, 2u32, 4u32);
            let h_cond = |a: u32, b: u32| h(a | b) - h(b);
            let mi = |a: u32, b: u32| h(a) + h(b) - h(a | b);
            let value = cover.xy.h_fwd * h_cond(y, x)
                + cover.xy.i * mi(x, y)
                + cover.xy.h_bwd * h_cond(x, y)
                + cover.yz.h_fwd * h_cond(z, y)
                + cover.yz.i * mi(y, z)
                + cover.yz.h_bwd * h_cond(y, z)
                + cover.zx.h_fwd * h_cond(x, z)
                + cover.zx.i * mi(z, x)
                + cover.zx.h_bwd * h_cond(z, x);
            prop_assert!(value >= h(x | y | z) - 1e-9);
        }

        #[test]
        fn refinement_curve_is_midpoint_convex(
            pairs in proptest::collection::vec((0i64..5, 0i64..5), 1..10),
            p in 1.0f64..5.0,
            q in 1.0f64..5.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let rel = match Relation::from_pairs(pairs) {
                Ok(r) => r,
                Err(_) => return Ok(()),
            };
            let hi = p.min(q);
            let w1 = 1.0 + a * (hi - 1.0);
            let w2 = 1.0 + b * (hi - 1.0);
            let f = |w: f64| w * ln_bivariate_moment(&rel, p / w, q / w).unwrap();
            let mid = 0.5 * (w1 + w2);
            let lhs = f(mid);
            let rhs = 0.5 * (f(w1) + f(w2));
            prop_assert!(lhs <= rhs + 1e-9 * lhs.abs().max(1.0));
        }
    }
}
