"""Union ensembles and majority-vote risk diagnostics.

All pairwise quantities (disagreement, joint error) come from the per-sample
vote shares ``p_c(x)``: for two voters drawn independently from the weight
distribution, ``P[f1(x) != f2(x)] = 1 - sum_c p_c(x)^2`` and
``P[both err] = (1 - p_y(x))^2``.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, SchemaError
from .forest import TIE_TOL, Forest, argmax_low, tree_votes, vote_scores


def mix(a: Forest, b: Forest) -> Forest:
    """Uniform vote over the union of both forests' trees."""
    if a.schema != b.schema:
        raise SchemaError("cannot mix forests with different schemas")
    return Forest.uniform(a.trees + b.trees, a.schema, "mix", check=False)


@dataclass(frozen=True)
class EnsembleDiagnostics:
    gibbs_risk: float
    bayes_risk: float
    disagreement_dq: float
    joint_error_eq: float
    c_bound: float | None
    simple_bound: float | None
    n_voters: int

    def to_dict(self) -> dict:
        return asdict(self)


def vote_shares(forest: Forest, data: Dataset) -> np.ndarray:
    if data.schema != forest.schema:
        raise SchemaError("data does not match the forest schema")
    votes = tree_votes(forest, data.X)
    return vote_scores(votes, forest.weights, forest.schema.n_classes)


def margins_from_shares(shares: np.ndarray, y: np.ndarray) -> np.ndarray:
    """True-class share minus the best rival share; equals E_Q y f(x) for two classes."""
    rows = np.arange(len(y))
    true_share = shares[rows, y]
    rivals = shares.copy()
    rivals[rows, y] = -np.inf
    return true_share - rivals.max(axis=1)


def gibbs_risk(forest: Forest, data: Dataset) -> float:
    s = vote_shares(forest, data)
    return float(np.mean(1.0 - s[np.arange(len(data)), data.y]))


def bayes_risk(forest: Forest, data: Dataset) -> float:
    """Majority-vote risk; a zero margin (tie) counts as an error."""
    m = margins_from_shares(vote_shares(forest, data), data.y)
    return float(np.mean(m <= TIE_TOL))


def disagreement(forest: Forest, X: np.ndarray) -> float:
    votes = tree_votes(forest, X)
    s = vote_scores(votes, forest.weights, forest.schema.n_classes)
    return float(np.mean(1.0 - (s**2).sum(axis=1)))


def joint_error(forest: Forest, data: Dataset) -> float:
    s = vote_shares(forest, data)
    return float(np.mean((1.0 - s[np.arange(len(data)), data.y]) ** 2))


def c_bound(gibbs: float, dq: float) -> float | None:
    """C-bound on the Bayes risk; None where it is undefined (gibbs >= 1/2)."""
    if gibbs >= 0.5 or dq >= 0.5:
        return None
    return 1.0 - (1.0 - 2.0 * gibbs) ** 2 / (1.0 - 2.0 * dq)


def c_bound_joint(eq: float, dq: float) -> float | None:
    """The same bound written with the expected joint error."""
    if dq >= 0.5 or eq + dq / 2 >= 0.5:
        return None
    return 1.0 - (1.0 - 2.0 * eq - dq) ** 2 / (1.0 - 2.0 * dq)


def simple_bound(gibbs: float, n_voters: int) -> float | None:
    if gibbs >= 0.5:
        return None
    return 1.0 / (n_voters * (1.0 - 2.0 * gibbs) ** 2)


def diagnostics_from_shares(shares: np.ndarray, y: np.ndarray, n_voters: int) -> EnsembleDiagnostics:
    rows = np.arange(len(y))
    wrong = 1.0 - shares[rows, y]
    gibbs = float(np.mean(wrong))
    dq = float(np.mean(1.0 - (shares**2).sum(axis=1)))
    eq = float(np.mean(wrong**2))
    bayes = float(np.mean(margins_from_shares(shares, y) <= TIE_TOL))
    return EnsembleDiagnostics(gibbs, bayes, dq, eq, c_bound(gibbs, dq), simple_bound(gibbs, n_voters), n_voters)


def ensemble_diagnostics(forest: Forest, data: Dataset, one_vs_rest: bool = False) -> EnsembleDiagnostics:
    """Gibbs/Bayes risk, d_Q, e_Q and both bounds.

    Binary problems only, unless ``one_vs_rest`` is set: then each class is
    scored against the rest and the per-class diagnostics are averaged.
    """
    shares = vote_shares(forest, data)
    n_classes = forest.schema.n_classes
    if n_classes == 2:
        return diagnostics_from_shares(shares, data.y, len(forest))
    if not one_vs_rest:
        raise ValueError("diagnostics are defined for two classes; pass one_vs_rest for more")
    per_class = []
    for c in range(n_classes):
        binary = np.stack([1.0 - shares[:, c], shares[:, c]], axis=1)
        per_class.append(diagnostics_from_shares(binary, (data.y == c).astype(np.int64), len(forest)))
    fields = {}
    for name in ("gibbs_risk", "bayes_risk", "disagreement_dq", "joint_error_eq"):
        fields[name] = float(np.mean([getattr(d, name) for d in per_class]))
    return EnsembleDiagnostics(
        **fields,
        c_bound=c_bound(fields["gibbs_risk"], fields["disagreement_dq"]),
        simple_bound=simple_bound(fields["gibbs_risk"], len(forest)),
        n_voters=len(forest),
    )


def margin_cdf(
    forests: Sequence[Forest], data: Dataset, filter: str = "all"
) -> list[np.ndarray]:
    """Empirical margin CDF of each forest as an (k, 2) array of (margin, cum_fraction).

    ``filter="disagree"`` keeps only the points where the majority votes of
    the first two forests (the constituents) differ.
    """
    shares = [vote_shares(f, data) for f in forests]
    keep = np.ones(len(data), dtype=bool)
    if filter == "disagree":
        if len(forests) < 2:
            raise ValueError("the disagree filter needs the two constituent forests first")
        keep = argmax_low(shares[0]) != argmax_low(shares[1])
    elif filter != "all":
        raise ValueError(f"unknown filter {filter!r}")
    tables = []
    for s in shares:
        m = np.sort(margins_from_shares(s[keep], data.y[keep]))
        if m.size == 0:
            tables.append(np.zeros((0, 2)))
            continue
        values = np.unique(m)
        # fraction of points with margin <= each distinct value
        cum = np.searchsorted(m, values, side="right") / m.size
        tables.append(np.column_stack([values, cum]))
    return tables


def write_margin_cdf(table: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["margin", "cum_fraction"])
        for margin, frac in table:
            w.writerow([repr(float(margin)), repr(float(frac))])
