//! Rank statistics over state maps.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytics::{category_numerators, AnalyticsError, ProportionVector};
use crate::index::CorpusIndex;
use crate::lexicon::Matcher;
use crate::states::{StateId, StateVector};

/// Smallest sample for which a p-value is reported.
pub const MIN_N_FOR_P_VALUE: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("cannot rank an empty list")]
    Empty,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("correlation undefined: {0} has no rank variance")]
    UndefinedCorrelation(&'static str),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Ranks starting at 1; tied values share the mean of the ranks they span.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(pos));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    /// Two-sided; `None` when `n` is below [`MIN_N_FOR_P_VALUE`].
    pub p_value: Option<f64>,
    /// States with a value on both sides.
    pub n: usize,
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::UndefinedCorrelation("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::UndefinedCorrelation("y"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `rho` under the Student-t approximation with
/// `n - 2` degrees of freedom. `|rho| = 1` gives 0.
pub fn t_approx_p_value(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Spearman's rho with pairwise deletion of missing values.
pub fn spearman(x: &[Option<f64>], y: &[Option<f64>]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "{n} paired value(s), need at least 2"
        )));
    }
    let rho = pearson(&rank_with_ties(&xs)?, &rank_with_ties(&ys)?)?;
    let p_value = (n >= MIN_N_FOR_P_VALUE).then(|| t_approx_p_value(rho, n));
    Ok(CorrelationResult { rho, p_value, n })
}

/// Spearman's rho over complete slices.
pub fn spearman_dense(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    let wrap = |v: &[f64]| v.iter().copied().map(Some).collect::<Vec<_>>();
    spearman(&wrap(x), &wrap(y))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub a: ProportionVector,
    pub b: ProportionVector,
    pub correlation: CorrelationResult,
}

pub fn compare_maps(a: ProportionVector, b: ProportionVector) -> Result<Comparison, StatsError> {
    let correlation = spearman(a.values.as_slice(), b.values.as_slice())?;
    Ok(Comparison { a, b, correlation })
}

/// Both category maps and their rank correlation over states with data in
/// both.
pub fn compare_categories(
    index: &CorpusIndex,
    matcher: &Matcher,
    a: u32,
    b: u32,
) -> Result<Comparison, StatsError> {
    let slot = |id| {
        matcher
            .slot_of(id)
            .ok_or_else(|| AnalyticsError::UnknownCategory {
                lexicon: matcher.lexicon_name().to_string(),
                id,
            })
    };
    let (sa, sb) = (slot(a)?, slot(b)?);
    let numerators = category_numerators(index, matcher);
    let totals = *index.token_totals();
    compare_maps(
        ProportionVector::new(numerators[sa], totals),
        ProportionVector::new(numerators[sb], totals),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CategoryRef {
    pub id: u32,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryPairReport {
    pub a: CategoryRef,
    pub b: CategoryRef,
    pub result: CorrelationResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremesReport {
    pub top: Vec<CategoryPairReport>,
    pub bottom: Vec<CategoryPairReport>,
    /// Pairs whose correlation was undefined or had too little data.
    pub excluded: usize,
    pub pairs: usize,
}

fn by_name(x: &CategoryPairReport, y: &CategoryPairReport) -> Ordering {
    (&x.a.name, &x.b.name).cmp(&(&y.a.name, &y.b.name))
}

/// Ranks every unordered pair of named maps by rho and returns the `k`
/// highest and `k` lowest. Ties are broken by pair name.
pub fn extremes_of_maps(
    maps: &[(CategoryRef, StateVector<Option<f64>>)],
    k: usize,
) -> Result<ExtremesReport, StatsError> {
    if maps.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "{} categories, need at least 2",
            maps.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..maps.len())
        .flat_map(|i| (i + 1..maps.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<Option<CategoryPairReport>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            spearman(maps[i].1.as_slice(), maps[j].1.as_slice())
                .ok()
                .map(|result| CategoryPairReport {
                    a: maps[i].0.clone(),
                    b: maps[j].0.clone(),
                    result,
                })
        })
        .collect();
    let excluded = results.iter().filter(|r| r.is_none()).count();
    let mut valid: Vec<CategoryPairReport> = results.into_iter().flatten().collect();
    if valid.is_empty() {
        return Err(StatsError::InsufficientData(
            "no category pair has a defined correlation".into(),
        ));
    }
    valid.sort_by(|x, y| {
        y.result
            .rho
            .total_cmp(&x.result.rho)
            .then_with(|| by_name(x, y))
    });
    let top = valid.iter().take(k).cloned().collect();
    valid.sort_by(|x, y| {
        x.result
            .rho
            .total_cmp(&y.result.rho)
            .then_with(|| by_name(x, y))
    });
    let bottom = valid.iter().take(k).cloned().collect();
    Ok(ExtremesReport {
        top,
        bottom,
        excluded,
        pairs: pairs.len(),
    })
}

/// Most and least correlated category pairs of one lexicon.
pub fn correlation_extremes(
    index: &CorpusIndex,
    matcher: &Matcher,
    k: usize,
) -> Result<ExtremesReport, StatsError> {
    let numerators = category_numerators(index, matcher);
    let totals = *index.token_totals();
    let maps: Vec<_> = matcher
        .categories()
        .iter()
        .zip(numerators)
        .map(|((id, name), num)| {
            (
                CategoryRef {
                    id: *id,
                    name: name.clone(),
                },
                ProportionVector::new(num, totals).values,
            )
        })
        .collect();
    extremes_of_maps(&maps, k)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ExternalVectorError {
    pub line: usize,
    pub message: String,
}

/// Parses `usps,value` CSV into a state vector. A leading `usps,...` header
/// is skipped; missing states and empty values are `None`.
pub fn parse_state_csv(text: &str) -> Result<StateVector<Option<f64>>, ExternalVectorError> {
    let mut out: StateVector<Option<f64>> = StateVector([None; crate::STATE_COUNT]);
    let mut seen = [false; crate::STATE_COUNT];
    let mut any = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ExternalVectorError { line, message };
        let (code, value) = content
            .split_once(',')
            .ok_or_else(|| err(format!("expected `usps,value`, got `{content}`")))?;
        let (code, value) = (
            code.trim().trim_matches('"'),
            value.trim().trim_matches('"'),
        );
        if !any && code.eq_ignore_ascii_case("usps") {
            any = true;
            continue;
        }
        any = true;
        let state =
            StateId::from_usps(code).ok_or_else(|| err(format!("unknown state `{code}`")))?;
        if std::mem::replace(&mut seen[state.index()], true) {
            return Err(err(format!("duplicate state `{}`", state.usps())));
        }
        if value.is_empty() {
            continue;
        }
        let v: f64 = value
            .parse()
            .map_err(|_| err(format!("bad number `{value}`")))?;
        if !v.is_finite() {
            return Err(err(format!("non-finite value `{value}`")));
        }
        out[state] = Some(v);
    }
    if out.iter().all(Option::is_none) {
        return Err(ExternalVectorError {
            line: 0,
            message: "no values".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(
            rank_with_ties(&[10.0, 20.0, 30.0]).unwrap(),
            [1.0, 2.0, 3.0]
        );
        assert_eq!(rank_with_ties(&[5.0, 5.0, 9.0]).unwrap(), [1.5, 1.5, 3.0]);
        assert_eq!(
            rank_with_ties(&[3.0, 1.0, 3.0, 3.0]).unwrap(),
            [3.0, 1.0, 3.0, 3.0]
        );
        assert_eq!(rank_with_ties(&[7.0]).unwrap(), [1.0]);
        assert_eq!(rank_with_ties(&[]), Err(StatsError::Empty));
        assert_eq!(
            rank_with_ties(&[1.0, f64::NAN]),
            Err(StatsError::NonFinite(1))
        );
    }

    #[test]
    fn identity_and_reversal() {
        let v = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6];
        let same = spearman_dense(&v, &v).unwrap();
        assert_eq!(same.rho, 1.0);
        assert_eq!(same.p_value, Some(0.0));
        let rev: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(spearman_dense(&v, &rev).unwrap().rho, -1.0);
    }

    #[test]
    fn small_samples() {
        let r = spearman_dense(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.p_value, None);
        assert!((r.rho - 0.5).abs() < 1e-15);
        assert!(matches!(
            spearman_dense(&[1.0], &[2.0]),
            Err(StatsError::InsufficientData(_))
        ));
        assert!(matches!(
            spearman_dense(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::UndefinedCorrelation("x"))
        ));
        assert!(matches!(
            spearman(&[Some(1.0)], &[Some(1.0), None]),
            Err(StatsError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn pairwise_deletion() {
        let x = [Some(1.0), None, Some(3.0), Some(4.0), Some(5.0), Some(2.0)];
        let y = [Some(2.0), Some(9.0), None, Some(8.0), Some(10.0), Some(4.0)];
        let r = spearman(&x, &y).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.rho, 1.0);
    }

    #[test]
    fn known_value_against_reference() {
        // scipy.stats.spearmanr([1,2,3,4,5], [5,6,7,8,7]) -> 0.8207826816681233, p 0.0885870053135438
        let r = spearman_dense(&[1.0, 2.0, 3.0, 4.0, 5.0], &[5.0, 6.0, 7.0, 8.0, 7.0]).unwrap();
        assert!((r.rho - 0.820_782_681_668_123_3).abs() < 1e-12);
        assert!((r.p_value.unwrap() - 0.088_587_005_313_543_8).abs() < 1e-9);
    }

    #[test]
    fn state_csv() {
        let v = parse_state_csv("usps,value\nTX,3\nca, 2.5\n\nNY,\n").unwrap();
        assert_eq!(v[StateId::from_usps("TX").unwrap()], Some(3.0));
        assert_eq!(v[StateId::from_usps("CA").unwrap()], Some(2.5));
        assert_eq!(v[StateId::from_usps("NY").unwrap()], None);
        assert!(parse_state_csv("TX,1\nTX,2\n").is_err());
        assert!(parse_state_csv("DC,1\n").is_err());
        assert!(parse_state_csv("TX,abc\n").is_err());
        assert!(parse_state_csv("TX 1\n").is_err());
        assert!(parse_state_csv("usps,value\n").is_err());
        assert!(parse_state_csv("TX,inf\n").is_err());
    }

    fn named(id: u32, name: &str, values: &[f64]) -> (CategoryRef, StateVector<Option<f64>>) {
        let mut v = StateVector([None; crate::STATE_COUNT]);
        for (i, x) in values.iter().enumerate() {
            v.0[i] = Some(*x);
        }
        (
            CategoryRef {
                id,
                name: name.into(),
            },
            v,
        )
    }

    #[test]
    fn extremes_order_and_k() {
        let maps = vec![
            named(1, "a", &[1.0, 2.0, 3.0, 4.0, 5.0]),
            named(2, "b", &[2.0, 4.0, 6.0, 8.0, 10.0]),
            named(3, "c", &[5.0, 4.0, 3.0, 2.0, 1.0]),
            named(4, "flat", &[1.0, 1.0, 1.0, 1.0, 1.0]),
        ];
        let report = extremes_of_maps(&maps, 10).unwrap();
        assert_eq!(report.pairs, 6);
        assert_eq!(report.excluded, 3);
        let top: Vec<_> = report
            .top
            .iter()
            .map(|p| (p.a.name.as_str(), p.b.name.as_str(), p.result.rho))
            .collect();
        assert_eq!(top, [("a", "b", 1.0), ("a", "c", -1.0), ("b", "c", -1.0)]);
        let bottom: Vec<_> = report
            .bottom
            .iter()
            .map(|p| (p.a.name.as_str(), p.b.name.as_str()))
            .collect();
        assert_eq!(bottom, [("a", "c"), ("b", "c"), ("a", "b")]);

        let one = extremes_of_maps(&maps, 1).unwrap();
        assert_eq!(one.top.len(), 1);
        assert_eq!(one.bottom.len(), 1);
        assert!(extremes_of_maps(&maps[..1], 3).is_err());
        assert!(extremes_of_maps(&[maps[0].clone(), maps[3].clone()], 3).is_err());
    }

    fn permutations(n: usize) -> Vec<Vec<f64>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for at in 0..=p.len() {
                let mut q = p.clone();
                q.insert(at, n as f64);
                out.push(q);
            }
        }
        out
    }

    /// Worst |t-approximation - exact permutation p| over every ordering of
    /// `n` distinct values.
    fn worst_small_n_error(n: usize) -> f64 {
        let x: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let rhos: Vec<f64> = permutations(n)
            .iter()
            .map(|y| spearman_dense(&x, y).unwrap().rho)
            .collect();
        rhos.iter()
            .map(|&r| {
                let exact = rhos.iter().filter(|o| o.abs() >= r.abs() - 1e-12).count() as f64
                    / rhos.len() as f64;
                (t_approx_p_value(r, n) - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn t_approximation_against_exact_permutations() {
        assert!(worst_small_n_error(6) <= 0.05);
        assert!(worst_small_n_error(7) <= 0.05);
        // the 0.05 bound does not hold below six points
        assert!((worst_small_n_error(4) - 0.150).abs() < 1e-3);
        assert!((worst_small_n_error(5) - 0.0771).abs() < 1e-3);
    }

    proptest::proptest! {
        #[test]
        fn symmetric_and_antitone(raw in proptest::collection::vec((0u8..6, 0u8..6), 2..30)) {
            let x: Vec<f64> = raw.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = raw.iter().map(|p| p.1 as f64).collect();
            if let Ok(r) = spearman_dense(&x, &y) {
                let swapped = spearman_dense(&y, &x).unwrap();
                proptest::prop_assert_eq!(r.rho, swapped.rho);
                let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                proptest::prop_assert_eq!(spearman_dense(&x, &neg).unwrap().rho, -r.rho);
                proptest::prop_assert!(r.rho.abs() <= 1.0);
                if let Some(p) = r.p_value {
                    proptest::prop_assert!((0.0..=1.0).contains(&p));
                }
            }
        }

        #[test]
        fn ranks_match_counting_oracle(v in proptest::collection::vec(0u8..8, 1..40)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let want: Vec<f64> = v
                .iter()
                .map(|x| {
                    let less = v.iter().filter(|y| *y < x).count() as f64;
                    let eq = v.iter().filter(|y| *y == x).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect();
            proptest::prop_assert_eq!(rank_with_ties(&v).unwrap(), want);
        }
    }
}
