"""Cohort statistics: normality-gated group tests, correlations, summaries.

The test statistics (Shapiro-Wilk W via the Royston approximation, pooled
t, Mann-Whitney U with exact small-sample enumeration, one-way F,
Kruskal-Wallis H with tie correction and exact enumeration, Pearson r) are
computed here; scipy supplies only the reference distributions (normal, t,
F, chi-square) for p-values.  Significance is fixed at p < 0.025 two-tailed;
raw p-values are always reported so readers can re-threshold.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import chi2 as chi2_dist
from scipy.stats import f as f_dist
from scipy.stats import t as t_dist

from .errors import (
    EmptyGroup,
    EmptySample,
    MissingVariable,
    SampleTooSmall,
    TooFewGroups,
    UnderAge,
    ZeroVariance,
)

ALPHA = 0.025            # significance threshold on two-tailed p
NORMALITY_ALPHA = 0.05   # Shapiro-Wilk gate for test dispatch
EXACT_U_MAX_N = 16       # full enumeration bound for Mann-Whitney
EXACT_H_MAX_N = 10       # full enumeration bound for Kruskal-Wallis

AGE_GROUP_BOUNDS = (30, 45, 60)   # upper bounds inclusive; above the last -> group 4
BMI_GROUP_BOUNDS = (25.0, 30.0)   # lt25 / b25_30 / ge30 (30.0 is obese)


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic_name: str
    statistic: float
    p_value: float
    significant: bool
    exact: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "statistic_name": self.statistic_name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "significant": self.significant,
            "exact": self.exact,
            "details": self.details,
        }


def _result(method, name, stat, p, exact=False, details=None) -> TestResult:
    p = float(min(max(p, 0.0), 1.0))
    return TestResult(
        method=method,
        statistic_name=name,
        statistic=float(stat),
        p_value=p,
        significant=bool(p < ALPHA),
        exact=exact,
        details=details or {},
    )


@dataclass(frozen=True)
class GroupLabel:
    age_group: int       # 1..4
    bmi_group: str       # lt25 | b25_30 | ge30
    sex: str             # M | F


@dataclass
class SubjectRecord:
    id: str
    age_years: float
    sex: str
    bmi_kg_m2: float
    covariates: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def value(self, name: str):
        """Look up a variable by report name (demographics, metric, covariate)."""
        if name == "age":
            return self.age_years
        if name == "bmi":
            return self.bmi_kg_m2
        if name in self.metrics:
            return self.metrics[name]
        if name in self.covariates:
            return self.covariates[name]
        return None


# ---------------------------------------------------------------------------
# summaries and grouping
# ---------------------------------------------------------------------------
def summarize(sample) -> dict:
    """Mean, sample standard deviation (n-1), min, max.  sd is None for n=1."""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise EmptySample("cannot summarize an empty sample")
    out = {
        "n": int(x.size),
        "mean": float(np.mean(x)),
        "min": float(np.min(x)),
        "max": float(np.max(x)),
    }
    out["sd"] = float(np.std(x, ddof=1)) if x.size >= 2 else None
    return out


def age_group_of(age: float) -> int:
    if age < 18:
        raise UnderAge(f"subject aged {age} below the 18-year cohort floor")
    for g, bound in enumerate(AGE_GROUP_BOUNDS, start=1):
        if age <= bound:
            return g
    return 4


def bmi_group_of(bmi: float) -> str:
    if bmi < BMI_GROUP_BOUNDS[0]:
        return "lt25"
    if bmi < BMI_GROUP_BOUNDS[1]:
        return "b25_30"
    return "ge30"


def assign_groups(subject: SubjectRecord) -> GroupLabel:
    """Deterministic group labels; raises UnderAge below 18."""
    return GroupLabel(
        age_group=age_group_of(subject.age_years),
        bmi_group=bmi_group_of(subject.bmi_kg_m2),
        sex=subject.sex,
    )


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston approximation)
# ---------------------------------------------------------------------------
def shapiro_wilk(sample) -> TestResult:
    """W statistic and p for 3 <= n <= 5000 samples with nonzero variance."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3 or n > 5000:
        raise SampleTooSmall(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if x[0] == x[-1]:
        raise ZeroVariance("Shapiro-Wilk undefined for a constant sample")

    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(np.sum(m * m))
    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    else:
        rsn = 1.0 / math.sqrt(n)
        c1 = (-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0)
        c2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
        a_last = np.polyval(c1, rsn) + m[-1] / math.sqrt(ssq)
        a = m.copy()
        if n > 5:
            a_last2 = np.polyval(c2, rsn) + m[-2] / math.sqrt(ssq)
            phi = (ssq - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (
                1 - 2 * a_last**2 - 2 * a_last2**2
            )
            a /= math.sqrt(phi)
            a[-1], a[-2] = a_last, a_last2
            a[0], a[1] = -a_last, -a_last2
        else:
            phi = (ssq - 2 * m[-1] ** 2) / (1 - 2 * a_last**2)
            a /= math.sqrt(phi)
            a[-1] = a_last
            a[0] = -a_last

    w = float(np.dot(a, x) ** 2 / np.sum((x - x.mean()) ** 2))
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
    else:
        if n <= 11:
            g = -2.273 + 0.459 * n
            mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
            sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
            if g - math.log1p(-w) <= 0:  # w numerically 1: perfectly normal scores
                return _result("shapiro_wilk", "W", w, 1.0)
            z = (-math.log(g - math.log1p(-w)) - mu) / sigma
        else:
            u = math.log(n)
            mu = -1.5861 - 0.31082 * u - 0.083751 * u**2 + 0.0038915 * u**3
            sigma = math.exp(-0.4803 - 0.082676 * u + 0.0030302 * u**2)
            if w == 1.0:
                return _result("shapiro_wilk", "W", w, 1.0)
            z = (math.log1p(-w) - mu) / sigma
        p = 1.0 - float(ndtr(z))
    return _result("shapiro_wilk", "W", w, p)


# ---------------------------------------------------------------------------
# two-group tests
# ---------------------------------------------------------------------------
def t_test(a, b) -> TestResult:
    """Pooled-variance two-sample t, two-tailed (equal variances assumed)."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size < 2 or y.size < 2:
        raise SampleTooSmall("t-test needs n >= 2 in both samples")
    na, nb = x.size, y.size
    df = na + nb - 2
    pooled_var = ((na - 1) * np.var(x, ddof=1) + (nb - 1) * np.var(y, ddof=1)) / df
    diff = float(np.mean(x) - np.mean(y))
    if pooled_var == 0.0:
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        p = 1.0 if diff == 0.0 else 0.0
    else:
        se = math.sqrt(pooled_var * (1.0 / na + 1.0 / nb))
        t = diff / se
        p = 2.0 * float(t_dist.sf(abs(t), df))
    return _result("t", "t", t, p, details={"df": df})


def welch_t_test(a, b) -> TestResult:
    """Welch (unequal-variance) fallback, reported alongside by compare()."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size < 2 or y.size < 2:
        raise SampleTooSmall("t-test needs n >= 2 in both samples")
    va, vb = np.var(x, ddof=1) / x.size, np.var(y, ddof=1) / y.size
    diff = float(np.mean(x) - np.mean(y))
    if va + vb == 0.0:
        return _result("welch_t", "t", 0.0 if diff == 0 else math.inf,
                       1.0 if diff == 0 else 0.0)
    t = diff / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (
        va**2 / (x.size - 1) + vb**2 / (y.size - 1)
    )
    p = 2.0 * float(t_dist.sf(abs(t), df))
    return _result("welch_t", "t", t, p, details={"df": float(df)})


def _rank_with_ties(pooled: np.ndarray) -> np.ndarray:
    """Fractional ranks (ties get the mean rank)."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=float)
    ranks[order] = np.arange(1, pooled.size + 1, dtype=float)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _tie_correction(pooled: np.ndarray) -> float:
    _, counts = np.unique(pooled, return_counts=True)
    n = pooled.size
    if n < 2:
        return 1.0
    return 1.0 - float(np.sum(counts**3 - counts)) / (n**3 - n)


def _u_tail_counts(n1: int, n2: int):
    """Distribution of the rank-sum of n1 ranks chosen from 1..n1+n2.

    Dynamic program over ranks; returns an array c where c[s] counts the
    subsets of size n1 with rank sum s.
    """
    n = n1 + n2
    max_sum = n1 * n + 1
    counts = np.zeros((n1 + 1, max_sum), dtype=float)
    counts[0, 0] = 1.0
    for rank in range(1, n + 1):
        for m in range(min(n1, rank), 0, -1):
            counts[m, rank:] += counts[m - 1, : max_sum - rank]
    return counts[n1]


def mann_whitney(a, b) -> TestResult:
    """Mann-Whitney U, two-tailed.

    Exact p by full enumeration of rank-subset arrangements when
    n1 + n2 <= EXACT_U_MAX_N and the pooled data has no ties; otherwise the
    normal approximation with tie and continuity corrections.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size == 0 or y.size == 0:
        raise SampleTooSmall("Mann-Whitney needs non-empty samples")
    n1, n2 = x.size, y.size
    pooled = np.concatenate([x, y])
    ranks = _rank_with_ties(pooled)
    r1 = float(np.sum(ranks[:n1]))
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1
    mu = n1 * n2 / 2.0

    has_ties = np.unique(pooled).size < pooled.size
    if n1 + n2 <= EXACT_U_MAX_N and not has_ties:
        dist = _u_tail_counts(n1, n2)
        sums = np.arange(dist.size, dtype=float)
        us = sums - n1 * (n1 + 1) / 2.0
        total = float(dist.sum())
        lo, hi = min(u1, u2), max(u1, u2)
        p = (dist[us <= lo + 1e-9].sum() + dist[us >= hi - 1e-9].sum()) / total
        return _result("mann_whitney", "U", u1, p, exact=True)

    tie = _tie_correction(pooled)
    sd = math.sqrt(tie * n1 * n2 * (n1 + n2 + 1) / 12.0)
    if sd == 0.0:
        return _result("mann_whitney", "U", u1, 1.0,
                       details={"note": "all values tied"})
    z = max(0.0, abs(u1 - mu) - 0.5) / sd
    p = 2.0 * (1.0 - float(ndtr(z)))
    return _result("mann_whitney", "U", u1, p, details={"z": z})


# ---------------------------------------------------------------------------
# k-group tests
# ---------------------------------------------------------------------------
def anova(groups) -> TestResult:
    """One-way fixed-effects F test; df = (k-1, N-k)."""
    gs = [np.asarray(g, dtype=float) for g in groups]
    if len(gs) < 2:
        raise TooFewGroups("ANOVA needs at least two groups")
    if any(g.size < 2 for g in gs):
        raise SampleTooSmall("ANOVA needs n >= 2 per group")
    all_vals = np.concatenate(gs)
    grand = float(np.mean(all_vals))
    ssb = sum(g.size * (float(np.mean(g)) - grand) ** 2 for g in gs)
    ssw = sum(float(np.sum((g - np.mean(g)) ** 2)) for g in gs)
    k = len(gs)
    df1, df2 = k - 1, all_vals.size - k
    if ssw == 0.0:
        f = 0.0 if ssb == 0.0 else math.inf
        p = 1.0 if ssb == 0.0 else 0.0
    else:
        f = (ssb / df1) / (ssw / df2)
        p = float(f_dist.sf(f, df1, df2))
    return _result("anova", "F", f, p, details={"df": [df1, df2]})


def _h_statistic(values: np.ndarray, sizes: list[int]) -> float:
    ranks = _rank_with_ties(values)
    n = values.size
    h = 0.0
    start = 0
    for sz in sizes:
        r = float(np.sum(ranks[start : start + sz]))
        h += r * r / sz
        start += sz
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    tie = _tie_correction(values)
    if tie == 0.0:
        return 0.0
    return h / tie


def kruskal_wallis(groups) -> TestResult:
    """Kruskal-Wallis H with tie correction.

    p is exact (full enumeration of group assignments) when the pooled size
    is <= EXACT_H_MAX_N, otherwise chi-square with k-1 df.  The chi-square p
    is always carried in details["p_chi2"].
    """
    gs = [np.asarray(g, dtype=float) for g in groups]
    if len(gs) < 2:
        raise TooFewGroups("Kruskal-Wallis needs at least two groups")
    if any(g.size < 1 for g in gs):
        raise SampleTooSmall("Kruskal-Wallis needs non-empty groups")
    sizes = [g.size for g in gs]
    pooled = np.concatenate(gs)
    n = pooled.size
    if n < 3:
        raise SampleTooSmall("Kruskal-Wallis needs a pooled size of at least 3")
    k = len(gs)

    h_obs = _h_statistic(pooled, sizes)
    p_chi2 = float(chi2_dist.sf(h_obs, k - 1)) if h_obs > 0 else 1.0
    if _tie_correction(pooled) == 0.0:
        # all values identical: H defined 0, nothing to test
        return _result("kruskal_wallis", "H", 0.0, 1.0,
                       details={"p_chi2": 1.0, "note": "all values tied"})

    if n <= EXACT_H_MAX_N:
        total = 0
        at_least = 0
        for assignment in _group_assignments(n, sizes):
            total += 1
            perm = pooled[np.asarray(assignment)]
            if _h_statistic(perm, sizes) >= h_obs - 1e-12:
                at_least += 1
        p = at_least / total
        return _result(
            "kruskal_wallis", "H", h_obs, p, exact=True, details={"p_chi2": p_chi2}
        )
    return _result("kruskal_wallis", "H", h_obs, p_chi2, details={"p_chi2": p_chi2})


def _group_assignments(n: int, sizes: list[int]):
    """Yield index tuples assigning n items into ordered groups of the given sizes."""
    def rec(remaining: tuple, sizes_left: list[int]):
        if not sizes_left:
            yield ()
            return
        sz = sizes_left[0]
        for combo in itertools.combinations(remaining, sz):
            rest = tuple(i for i in remaining if i not in combo)
            for tail in rec(rest, sizes_left[1:]):
                yield combo + tail

    yield from rec(tuple(range(n)), sizes)


# ---------------------------------------------------------------------------
# correlations and representatives
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CorrelationMatrix:
    variables: tuple[str, ...]
    r: np.ndarray          # NaN in undefined cells (flagged, never propagated)
    n: np.ndarray          # complete cases per pair
    defined: np.ndarray    # False where a variable was constant or n < 2

    def to_dict(self) -> dict:
        r = [[None if not d else float(v) for v, d in zip(row, drow)]
             for row, drow in zip(self.r, self.defined)]
        return {
            "variables": list(self.variables),
            "r": r,
            "n": self.n.tolist(),
        }


def pearson_matrix(table: dict) -> CorrelationMatrix:
    """Pairwise Pearson r with per-pair complete-case deletion.

    ``table`` maps variable name -> 1D array (NaN marks missing).  Cells
    where either variable is constant over the complete cases are flagged
    undefined instead of propagating NaN; the diagonal is exactly 1.
    """
    names = tuple(table.keys())
    if len(names) < 1:
        raise EmptySample("correlation table has no variables")
    arrays = {k: np.asarray(v, dtype=float) for k, v in table.items()}
    n_subj = {v.size for v in arrays.values()}
    if len(n_subj) != 1:
        raise MissingVariable("variables have different lengths")
    if n_subj.pop() < 2:
        raise SampleTooSmall("correlation needs at least two subjects")

    m = len(names)
    r = np.full((m, m), np.nan)
    n = np.zeros((m, m), dtype=int)
    defined = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(i, m):
            xi, xj = arrays[names[i]], arrays[names[j]]
            valid = ~np.isnan(xi) & ~np.isnan(xj)
            nij = int(valid.sum())
            n[i, j] = n[j, i] = nij
            if i == j:
                r[i, i] = 1.0
                defined[i, i] = nij >= 2 and np.std(xi[valid]) > 0
                continue
            if nij < 2:
                continue
            a, b = xi[valid], xj[valid]
            da, db = a - a.mean(), b - b.mean()
            denom = math.sqrt(float(np.sum(da * da)) * float(np.sum(db * db)))
            if denom == 0.0:
                continue
            rij = float(np.sum(da * db)) / denom
            rij = min(1.0, max(-1.0, rij))
            r[i, j] = r[j, i] = rij
            defined[i, j] = defined[j, i] = True
    return CorrelationMatrix(variables=names, r=r, n=n, defined=defined)


def representative_subject(group, variables) -> str:
    """Id of the group member nearest the group mean of the given variables.

    Variables are z-scored within the group before the Euclidean distance
    (so units cannot dominate); constant variables contribute nothing.
    Ties break toward the lowest id.  Group members may be SubjectRecord
    instances or plain dicts.
    """
    members = list(group)
    if not members:
        raise EmptyGroup("representative of an empty group")

    def value(member, name):
        if isinstance(member, SubjectRecord):
            return member.value(name)
        return member.get(name)

    def ident(member):
        return member.id if isinstance(member, SubjectRecord) else member["id"]

    rows = []
    for member in members:
        vals = []
        for name in variables:
            v = value(member, name)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                raise MissingVariable(
                    f"subject {ident(member)} lacks variable {name!r}"
                )
            vals.append(float(v))
        rows.append(vals)
    data = np.asarray(rows)                      # (n, v)
    mean = data.mean(axis=0)
    sd = data.std(axis=0, ddof=1) if data.shape[0] > 1 else np.zeros(data.shape[1])
    sd = np.where(sd > 0, sd, np.inf)            # constant vars: z = 0
    z = (data - mean) / sd
    dists = np.linalg.norm(z, axis=1)
    best = min(range(len(members)), key=lambda i: (dists[i], ident(members[i])))
    return ident(members[best])


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------
def compare(variable: str, grouping: str, cohort) -> TestResult:
    """Normality-gated group comparison of one variable.

    grouping is one of "sex", "age_group", "bmi_group".  The variable is
    gated with Shapiro-Wilk (alpha 0.05): normal -> pooled t (2 groups,
    with a Welch fallback attached when a variance-ratio F test rejects) or
    one-way ANOVA (k groups, with the residual normality re-checked and the
    dispatch demoted to Kruskal-Wallis if residuals fail); non-normal ->
    Mann-Whitney / Kruskal-Wallis.  details records the branch evidence.
    """
    groups: dict[str, list[float]] = {}
    for subj in cohort:
        if isinstance(subj, SubjectRecord):
            label = assign_groups(subj)
            level = {"sex": label.sex, "age_group": str(label.age_group),
                     "bmi_group": label.bmi_group}[grouping]
            v = subj.value(variable)
        else:
            level = _dict_level(subj, grouping)
            v = subj.get(variable)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            continue
        groups.setdefault(level, []).append(float(v))

    groups = {k: v for k, v in groups.items() if v}
    if len(groups) < 2:
        raise TooFewGroups(
            f"grouping {grouping!r} yields {len(groups)} non-empty groups"
        )
    levels = sorted(groups)
    samples = [np.asarray(groups[l]) for l in levels]
    pooled = np.concatenate(samples)

    details = {"groups": {l: len(groups[l]) for l in levels}}
    normal = False
    if pooled.size >= 3 and np.unique(pooled).size > 1:
        sw = shapiro_wilk(pooled)
        details["normality_p"] = sw.p_value
        normal = sw.p_value >= NORMALITY_ALPHA

    parametric_ok = all(s.size >= 2 for s in samples)
    if normal and not parametric_ok:
        details["parametric_skipped"] = "group with n < 2"
    if len(levels) == 2:
        a, b = samples
        if normal and parametric_ok:
            res = t_test(a, b)
            f_p = _variance_ratio_p(a, b)
            details["variance_ratio_p"] = f_p
            if f_p < 0.05:
                details["welch"] = welch_t_test(a, b).to_dict()
        else:
            res = mann_whitney(a, b)
    else:
        if normal and parametric_ok:
            res = anova(samples)
            resid = np.concatenate([g - np.mean(g) for g in samples])
            if np.unique(resid).size > 1:
                sw_resid = shapiro_wilk(resid)
                details["residual_normality_p"] = sw_resid.p_value
                if sw_resid.p_value < NORMALITY_ALPHA:
                    details["residuals_non_normal"] = True
                    res = kruskal_wallis(samples)
        else:
            res = kruskal_wallis(samples)

    details.update(res.details)
    return TestResult(
        method=res.method,
        statistic_name=res.statistic_name,
        statistic=res.statistic,
        p_value=res.p_value,
        significant=res.significant,
        exact=res.exact,
        details=details,
    )


def _variance_ratio_p(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sided variance-ratio F test p-value."""
    va, vb = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
    if va == 0.0 and vb == 0.0:
        return 1.0
    if va >= vb:
        f, d1, d2 = (va / vb if vb > 0 else math.inf), a.size - 1, b.size - 1
    else:
        f, d1, d2 = vb / va, b.size - 1, a.size - 1
    return float(min(1.0, 2.0 * f_dist.sf(f, d1, d2)))


def _dict_level(subj: dict, grouping: str) -> str:
    if grouping == "sex":
        return subj["sex"]
    if grouping == "age_group":
        return str(age_group_of(subj["age"]))
    if grouping == "bmi_group":
        return bmi_group_of(subj["bmi"])
    raise KeyError(f"unknown grouping {grouping!r}")
