use super::special::{f_critical, f_sf};
use super::{SampleSeries, StatsError};

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaResult {
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
    /// Within-group mean square.
    pub msw: f64,
    pub group_labels: Vec<String>,
    pub group_means: Vec<f64>,
    pub group_ses: Vec<f64>,
    pub group_sizes: Vec<usize>,
    /// Within-group variance is zero: F is reported as infinite (p = 0), or
    /// as 0 (p = 1) when every value is identical.
    pub degenerate: bool,
}

pub fn one_way_anova(groups: &[SampleSeries]) -> Result<AnovaResult, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    for g in groups {
        g.require(2)?;
    }
    let total_n: usize = groups.iter().map(SampleSeries::len).sum();
    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / total_n as f64;
    let means: Vec<f64> = groups.iter().map(SampleSeries::mean).collect();
    let ssb: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand) * (m - grand))
        .sum();
    let ssw: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>())
        .sum();
    let df1 = (k - 1) as f64;
    let df2 = (total_n - k) as f64;
    let msb = ssb / df1;
    let msw = ssw / df2;

    let (f, p, degenerate) = if msw > 0.0 {
        let f = msb / msw;
        (f, f_sf(f, df1, df2), false)
    } else if msb > 0.0 {
        (f64::INFINITY, 0.0, true)
    } else {
        (0.0, 1.0, true)
    };

    Ok(AnovaResult {
        f,
        df1,
        df2,
        p,
        msw,
        group_labels: groups.iter().map(|g| g.label.clone()).collect(),
        group_means: means,
        group_ses: groups.iter().map(SampleSeries::se).collect(),
        group_sizes: groups.iter().map(SampleSeries::len).collect(),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub i: usize,
    pub j: usize,
    pub diff: f64,
    /// `diff^2 / (MSW (1/n_i + 1/n_j))`.
    pub statistic: f64,
    /// Scheffé-adjusted p-value, `P(F(k-1, N-k) > statistic / (k-1))`.
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheffeResult {
    pub anova: AnovaResult,
    pub alpha: f64,
    /// `(k - 1) * F_crit(alpha, k - 1, N - k)`.
    pub critical: f64,
    pub pairs: Vec<PairComparison>,
    /// Homogeneous-subset letters per group, in input order.
    pub letters: Vec<String>,
}

impl ScheffeResult {
    pub fn significant(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pairs
            .iter()
            .find(|p| p.i == i && p.j == j)
            .is_some_and(|p| p.significant)
    }
}

pub fn scheffe_posthoc(groups: &[SampleSeries], alpha: f64) -> Result<ScheffeResult, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidInput(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let anova = one_way_anova(groups)?;
    let k = groups.len();
    let critical = anova.df1 * f_critical(alpha, anova.df1, anova.df2);

    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = anova.group_means[i] - anova.group_means[j];
            let denom = anova.msw
                * (1.0 / anova.group_sizes[i] as f64 + 1.0 / anova.group_sizes[j] as f64);
            let statistic = if diff == 0.0 {
                0.0
            } else if denom > 0.0 {
                diff * diff / denom
            } else {
                f64::INFINITY
            };
            pairs.push(PairComparison {
                i,
                j,
                diff,
                statistic,
                p: f_sf(statistic / anova.df1, anova.df1, anova.df2),
                significant: statistic > critical,
            });
        }
    }

    let mut result = ScheffeResult {
        anova,
        alpha,
        critical,
        pairs,
        letters: Vec::new(),
    };
    result.letters = subset_letters(&result);
    Ok(result)
}

fn letter(i: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    if i < ALPHABET.len() {
        (ALPHABET[i] as char).to_string()
    } else {
        format!("[{}]", i + 1)
    }
}

/// Groups sorted by mean (highest first); each maximal run of consecutive
/// groups with no significant pair inside it gets the next letter.
fn subset_letters(r: &ScheffeResult) -> Vec<String> {
    let means = &r.anova.group_means;
    let k = means.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));

    let mut letters = vec![String::new(); k];
    let mut next = 0;
    let mut last_end = None;
    for start in 0..k {
        let mut end = start;
        while end + 1 < k && (start..=end).all(|m| !r.significant(order[m], order[end + 1])) {
            end += 1;
        }
        if last_end.is_some_and(|e| end <= e) {
            continue;
        }
        let l = letter(next);
        next += 1;
        for &g in &order[start..=end] {
            letters[g].push_str(&l);
        }
        last_end = Some(end);
    }
    letters
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(label: &str, v: &[f64]) -> SampleSeries {
        SampleSeries::new(label, v.to_vec()).unwrap()
    }

    #[test]
    fn identical_groups() {
        let g = [s("a", &[1., 2., 3.]), s("b", &[1., 2., 3.])];
        let r = one_way_anova(&g).unwrap();
        assert_eq!((r.f, r.p), (0.0, 1.0));
        let post = scheffe_posthoc(&g, 0.05).unwrap();
        assert!(post.pairs.iter().all(|p| !p.significant));
        assert_eq!(post.letters, ["a", "a"]);
    }

    #[test]
    fn hand_computed_f() {
        let r = one_way_anova(&[s("a", &[1., 2.]), s("b", &[3., 4.])]).unwrap();
        assert!((r.f - 8.0).abs() < 1e-12);
        assert_eq!((r.df1, r.df2), (1.0, 2.0));
        assert!((r.p - 0.105_572_809_000_084_14).abs() < 1e-10);
        assert_eq!(r.group_means, [1.5, 3.5]);
        assert!((r.group_ses[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separated_tight_groups() {
        let low: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let high: Vec<f64> = low.iter().map(|v| v + 10.0).collect();
        let post = scheffe_posthoc(&[s("lo", &low), s("hi", &high)], 0.05).unwrap();
        assert!(post.pairs[0].significant);
        assert_eq!(post.letters, ["b", "a"]);
    }

    #[test]
    fn zero_within_variance() {
        let r = one_way_anova(&[s("a", &[1., 1.]), s("b", &[2., 2.])]).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.f, r.p), (f64::INFINITY, 0.0));
        let r = one_way_anova(&[s("a", &[1., 1.]), s("b", &[1., 1.])]).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.f, r.p), (0.0, 1.0));
    }

    #[test]
    fn errors() {
        assert_eq!(
            one_way_anova(&[s("a", &[1., 2.])]),
            Err(StatsError::TooFewGroups(1))
        );
        assert!(matches!(
            one_way_anova(&[s("a", &[1., 2.]), s("b", &[1.])]),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn overlapping_subsets() {
        // Means 0, 1, 2 with n = 30 each and unit variance: neighbours overlap, ends differ.
        let spread = |c: f64| -> Vec<f64> {
            (0..30).map(|i| c + if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
        };
        let g = [s("x", &spread(0.0)), s("y", &spread(0.6)), s("z", &spread(1.2))];
        let post = scheffe_posthoc(&g, 0.05).unwrap();
        assert!(post.significant(0, 2));
        assert!(!post.significant(0, 1));
        assert!(!post.significant(1, 2));
        assert_eq!(post.letters, ["b", "ab", "a"]);
    }
}
