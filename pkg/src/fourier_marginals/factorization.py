"""Dense factorizations, matrix norms, and optimality certificates.

The release mechanism never forms a matrix.  This module materializes
the factorization it implicitly runs, so that its optimality can be
checked numerically instead of taken on faith.  For row weights
P_{(S,t)} = p(S) / |U_S| the released answers are W h + noise, where W
stacks one row per (set, target) query, and the noise is shaped by

    L = U~ E^(-1/2),    R = E^(1/2) V~*,    E_{a,a} = tau_a / sum_b tau_b.

V~ holds the characters chi_a(x) and U~ the reconstruction
coefficients, so L R = W exactly.  Every column of R has unit norm, the
weighted Frobenius norm of L is sum_a tau_a, and the pair also reads
off a singular value decomposition of P^(1/2) W with singular values
sqrt(|U|) tau_a.  Three certificates follow:

  * the trace-norm bound (1 / sqrt(|U|)) ||P^(1/2) W||_tr, computed by
    a dense SVD, equals ||P^(1/2) L||_F ||R||_{1->2}, so no
    factorization has smaller weighted error;
  * at the optimizer's weights ||L||_{2->inf} ||R||_{1->2} meets the
    same bound, so the mechanism's worst-case error is optimal too;
  * for range-marginal workloads a Fourier test matrix gives a closed
    form trace bound showing the doubled-domain release is within the
    ratio of two explicit log-like sums per numerical attribute.

Dense matrices are built only for small instances; past the caps the
certificates fall back to closed forms.
"""

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import budget, fourier, mechanism
from .core import (NUMERICAL, FourierMarginalsError, Unestimable, Workload,
                   downward_closure, normalize_weights)
from .mechanism import zeta

DENSE_UNIVERSE_CAP = 4096
DENSE_QUERY_CAP = 8192
RANK_CUTOFF = 1e-12


class DenseTooLarge(FourierMarginalsError):
    """The instance exceeds the caps for materializing dense matrices."""


@dataclass(frozen=True, eq=False)
class ExplicitFactorization:
    """The pair (L, R) with L R = W, plus its bookkeeping.

    workload is the (normalized, possibly doubled-domain) form whose
    matrix the pair factors; rows lists the (set, target) index of every
    row of L, freqs the frequency vector of every column; E and P are
    the diagonals of the normalization and row-weight matrices, and tau
    the importance weight of each kept frequency.
    """

    workload: Workload
    rows: tuple
    freqs: tuple
    L: np.ndarray
    R: np.ndarray
    E: np.ndarray
    P: np.ndarray
    tau: np.ndarray


@dataclass(frozen=True)
class NormReport:
    """Factorization norms next to the trace-norm lower bound.

    gammaF_value = frob_weighted * col_max and gamma2_value =
    row_max * col_max; svd_lower_bound is (1/sqrt(|U|)) ||P^(1/2) W||_tr
    with singular values below rank_cutoff dropped from the sum.
    """

    col_max: float
    frob_weighted: float
    row_max: float
    gammaF_value: float
    gamma2_value: float
    svd_lower_bound: float
    rank_cutoff: float


@dataclass(frozen=True, eq=False)
class RealFactorization:
    """Real matrices with L R = W and the complex pair's norms."""

    L: np.ndarray
    R: np.ndarray
    P: np.ndarray
    rows: tuple
    labels: tuple


@dataclass(frozen=True, eq=False)
class LowerBoundWitness:
    """Dense test matrix certifying the range-query lower bound.

    Y = P^(1/2) U V* has operator norm at most 1, so the trace value
    |tr(P^(1/2) W Y*)| / sqrt(|U|) bounds every factorization of the
    prefix query matrix from below.  f_tables holds the per-attribute
    diagonal weights of the construction (None for categorical
    attributes) and kappa the column normalizers.
    """

    Y: np.ndarray
    f_tables: tuple
    kappa: dict
    trace_value: float
    op_norm: float
    closed_form: float
    note: str


WITNESS_NOTE = ("certifies the prefix query family; quoted unchanged for "
                "prefix-suffix releases, whose matching bound is not "
                "computed here")


def _normalized(workload, p=None):
    w = Workload(universe=workload.universe, sets=workload.sets,
                 weights=(workload.weights if p is None
                          else np.asarray(p, dtype=float)),
                 kind=workload.kind, phi=workload.phi)
    return normalize_weights(w)


def _prepare(workload, p=None, kind=None):
    """Normalized workload, coefficient tables, and importance weights.

    Extended workloads are replaced by their doubled-domain product
    form.  Marginal coefficients are exact ones, not transform output.
    """
    kind = kind or workload.kind
    w = _normalized(workload, p)
    if kind == "extended":
        embedding = mechanism.embed_extended(w.universe)
        w = Workload(universe=embedding.embedded, sets=w.sets,
                     weights=w.weights, kind="product", phi=embedding.phi)
        kind = "product"
    if kind == "product":
        spectrum = fourier.phi_spectrum(w.phi_tables())
        coeffs = spectrum.tables
        tau_map = budget.tau_product(w, spectrum=spectrum)
    else:
        coeffs = tuple(np.ones(m) for m in w.universe.domain_sizes)
        tau_map = budget.tau_marginal(w)
    return w, coeffs, tau_map


def _query_rows(workload):
    return sum(workload.universe.subuniverse_size(s) for s in workload.sets)


def _check_dense_caps(workload, dense_cap=None):
    cap = DENSE_UNIVERSE_CAP if dense_cap is None else int(dense_cap)
    size = workload.universe.size
    if size > cap:
        raise DenseTooLarge(
            f"universe size {size} exceeds the dense cap {cap}")
    rows = _query_rows(workload)
    if rows > DENSE_QUERY_CAP:
        raise DenseTooLarge(
            f"{rows} query rows exceed the dense cap {DENSE_QUERY_CAP}")


def _check_estimable(workload, coeffs, tau_map):
    dead = [a for a, t in tau_map.items() if t == 0]
    if not dead:
        return
    mags = [np.abs(np.asarray(c)) for c in coeffs]
    for a in dead:
        support = set(j for j, v in enumerate(a) if v)
        for members in workload.sets:
            if support <= set(members) \
                    and all(mags[j][a[j]] > 0 for j in members):
                raise Unestimable(
                    f"set {members} needs frequencies with no budget; give "
                    "it positive weight or cover it by a larger weighted set")


def _unit_row(m, a):
    # phases as rational multiples of one turn, like the character code
    return np.exp(2j * np.pi * ((a * np.arange(m)) % m) / m)


def _character_matrix(universe, freqs):
    """Columns chi_a over the row-major universe grid, one per frequency."""
    sizes = universe.domain_sizes
    cols = np.empty((universe.size, len(freqs)), dtype=complex)
    for k, a in enumerate(freqs):
        col = np.ones(1, dtype=complex)
        for j, aj in enumerate(a):
            col = np.multiply.outer(col, _unit_row(sizes[j], aj)).ravel()
        cols[:, k] = col
    return cols


def _row_index(workload):
    """Row labels (S, t) in set order with row-major targets, plus P."""
    universe = workload.universe
    rows = []
    weight = []
    for members, pS in zip(workload.sets, workload.weights):
        size = universe.subuniverse_size(members)
        for t in itertools.product(
                *(range(m) for m in universe.subdomain_sizes(members))):
            rows.append((members, t))
            weight.append(pS / size)
    return tuple(rows), np.array(weight)


def _coefficient_matrix(workload, coeffs, rows, freqs):
    """U~ with entries coeff(S, a) chi_a(t) / |U_S| on supp(a) within S."""
    universe = workload.universe
    sizes = universe.domain_sizes
    supports = [set(j for j, v in enumerate(a) if v) for a in freqs]
    out = np.zeros((len(rows), len(freqs)), dtype=complex)
    start = 0
    for members in workload.sets:
        size = universe.subuniverse_size(members)
        covered = set(members)
        for k, a in enumerate(freqs):
            if not supports[k] <= covered:
                continue
            scale = 1.0 + 0.0j
            for j in members:
                scale *= coeffs[j][a[j]]
            if scale == 0:
                continue
            col = np.ones(1, dtype=complex)
            for j in members:
                col = np.multiply.outer(col, _unit_row(sizes[j], a[j])).ravel()
            out[start:start + size, k] = (scale / size) * col
        start += size
    return out


def _dense_matrix(workload):
    """W row for row: per-attribute circulant factor tables, composed."""
    universe = workload.universe
    sizes = universe.domain_sizes
    tables = [np.asarray(t, dtype=float) for t in workload.phi_tables()]
    blocks = []
    for members in workload.sets:
        parts = []
        for j in range(universe.d):
            m = sizes[j]
            if j in members:
                shift = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
                parts.append(tables[j][shift])
            else:
                parts.append(np.ones((1, m)))
        blocks.append(reduce(np.kron, parts))
    return np.vstack(blocks)


def build_factorization(workload, p=None, kind=None, dense_cap=None):
    """Materialize L, R, E, and P for one weighted workload.

    Running the release with this pair is the same distribution as the
    mechanism module: the frequency noise vector hits L exactly as the
    reconstruction applies it.  Raises DenseTooLarge past the caps and
    Unestimable when a set needs a frequency no weighted set pays for.
    dense_cap overrides the default universe cap.
    """
    w, coeffs, tau_map = _prepare(workload, p, kind)
    _check_dense_caps(w, dense_cap)
    _check_estimable(w, coeffs, tau_map)
    freqs = tuple(sorted(a for a, t in tau_map.items() if t > 0))
    tau = np.array([tau_map[a] for a in freqs])
    E = tau / tau.sum()
    rows, P = _row_index(w)
    U = _coefficient_matrix(w, coeffs, rows, freqs)
    V = _character_matrix(w.universe, freqs)
    L = U / np.sqrt(E)[None, :]
    R = np.sqrt(E)[:, None] * V.conj().T
    return ExplicitFactorization(workload=w, rows=rows, freqs=freqs,
                                 L=L, R=R, E=E, P=P, tau=tau)


def _trace_norm(matrix):
    values = np.linalg.svd(matrix, compute_uv=False)
    cutoff = RANK_CUTOFF * (float(values[0]) if values.size else 0.0)
    return float(values[values >= cutoff].sum()), cutoff


def norm_report(fact):
    """Norms of the pair next to the trace-norm lower bound.

    The bound is computed from a matrix assembled directly from the
    query definitions, not from L R, so agreement is evidence.
    """
    col = np.linalg.norm(fact.R, axis=0)
    row = np.linalg.norm(fact.L, axis=1)
    col_max = float(col.max())
    row_max = float(row.max())
    frob = float(math.sqrt(float((fact.P * row ** 2).sum())))
    W = _dense_matrix(fact.workload)
    trace, cutoff = _trace_norm(np.sqrt(fact.P)[:, None] * W)
    lower = trace / math.sqrt(fact.workload.universe.size)
    return NormReport(col_max=col_max, frob_weighted=frob, row_max=row_max,
                      gammaF_value=frob * col_max,
                      gamma2_value=row_max * col_max,
                      svd_lower_bound=lower, rank_cutoff=cutoff)


def svd_lower_bound(workload, p=None, kind=None, dense_cap=None):
    """(1 / sqrt(|U|)) ||P^(1/2) W||_tr by dense SVD.

    Valid for every factorization of W, whatever mechanism produced it.
    """
    w, _, _ = _prepare(workload, p, kind)
    _check_dense_caps(w, dense_cap)
    _, P = _row_index(w)
    trace, _ = _trace_norm(np.sqrt(P)[:, None] * _dense_matrix(w))
    return trace / math.sqrt(w.universe.size)


def realify_pair(L, R):
    """Real pair with the same product and the same row/column norms.

    Stacks real and imaginary parts: (Re L | Im L)(Re R ; -Im R) equals
    Re(L R), and squared norms add up exactly as in the complex pair.
    """
    L = np.asarray(L, dtype=complex)
    R = np.asarray(R, dtype=complex)
    return np.hstack([L.real, L.imag]), np.vstack([R.real, -R.imag])


def _drop_conjugate_rows(fact, L, R):
    """Keep one representative of each conjugate frequency pair.

    The partner of a negates every component mod its domain size and
    carries conjugate rows, so its two real rows repeat the kept ones up
    to sign; scaling the representative by sqrt(2) preserves the product
    and every norm.  Self-paired frequencies are real and lose only
    their zero imaginary row.
    """
    sizes = fact.workload.universe.domain_sizes
    index = {a: i for i, a in enumerate(fact.freqs)}
    k = len(fact.freqs)
    keep = []
    scale = []
    labels = []
    for i, a in enumerate(fact.freqs):
        partner = tuple((m - v) % m for v, m in zip(a, sizes))
        if partner not in index:
            keep += [i, k + i]
            scale += [1.0, 1.0]
            labels += [(a, "re"), (a, "im")]
        elif partner == a:
            keep.append(i)
            scale.append(1.0)
            labels.append((a, "re"))
        elif a < partner:
            keep += [i, k + i]
            scale += [math.sqrt(2.0), math.sqrt(2.0)]
            labels += [(a, "re"), (a, "im")]
    s = np.array(scale)
    return L[:, keep] * s[None, :], R[keep, :] * s[:, None], tuple(labels)


def realify(fact, drop_redundant=False):
    """Real form of a complex factorization, norms unchanged.

    With drop_redundant the conjugate-pair rows of R (and matching
    columns of L) are eliminated.
    """
    L, R = realify_pair(fact.L, fact.R)
    labels = tuple((a, "re") for a in fact.freqs) \
        + tuple((a, "im") for a in fact.freqs)
    if drop_redundant:
        L, R, labels = _drop_conjugate_rows(fact, L, R)
    return RealFactorization(L=L, R=R, P=fact.P, rows=fact.rows,
                             labels=labels)


def tightness_certificate(fact, p=None, kind=None):
    """Numerical residuals of the exact-optimality conditions.

    lpl and rr check the diagonal identities L* P L = (sum tau)^2 E and
    R R* = |U| E; colnorm is the spread of the column norms of R, which
    the trace bound needs to be uniform; rownorm is how far the weighted
    rows of L fall short of the longest row, which vanishes exactly at
    the optimizing weights.  p narrows the rownorm check to the sets it
    supports; kind, when given, must agree with the factorization.
    """
    if kind is not None:
        built = fact.workload.kind
        if ("product" if kind == "extended" else kind) != built:
            raise FourierMarginalsError(
                f"factorization was built as {built!r}, not {kind!r}")
    total = float(fact.tau.sum())
    lpl = fact.L.conj().T @ (fact.P[:, None] * fact.L)
    lpl_residual = float(np.abs(lpl - np.diag(total ** 2 * fact.E)).max())
    rr = fact.R @ fact.R.conj().T
    size = fact.workload.universe.size
    rr_residual = float(np.abs(rr - np.diag(size * fact.E)).max())
    col = np.linalg.norm(fact.R, axis=0)
    row = np.linalg.norm(fact.L, axis=1)
    if p is None:
        support = fact.P > 0
    else:
        p = np.asarray(p, dtype=float)
        per_row = np.concatenate([
            np.full(fact.workload.universe.subuniverse_size(s), pS)
            for s, pS in zip(fact.workload.sets, p)])
        support = per_row > 0
    rownorm = float(row.max() - row[support].min()) \
        if support.any() else float("inf")
    return {"lpl": lpl_residual, "rr": rr_residual,
            "colnorm": float(col.max() - col.min()), "rownorm": rownorm}


def _numerical_members(universe):
    return set(j for j, kind in enumerate(universe.attribute_kind)
               if kind == NUMERICAL)


def _extended_closed_form(workload):
    """Range-query trace bound as an explicit double sum.

    One term per covered subset, split into categorical members (factor
    m_j - 1) and numerical members (factor zeta(m_j)); the square root
    collects the weights of the covering sets with a (1 + 1/m_j)^2
    boost for every uncovered numerical attribute.
    """
    universe = workload.universe
    sizes = universe.domain_sizes
    numerical = _numerical_members(universe)
    total = 0.0
    for subset in downward_closure(workload, positive_only=True):
        gain = 1.0
        for j in subset:
            gain *= zeta(sizes[j]) if j in numerical else sizes[j] - 1
        inner = 0.0
        for members, pS in zip(workload.sets, workload.weights):
            if pS <= 0 or not set(subset) <= set(members):
                continue
            term = pS
            cat_size = 1
            for j in members:
                if j in numerical:
                    term /= 4.0
                    if j not in subset:
                        term *= (1.0 + 1.0 / sizes[j]) ** 2
                else:
                    cat_size *= sizes[j]
            inner += term / cat_size ** 2
        total += gain * math.sqrt(inner)
    return total


def _prefix_matrix(workload):
    """Dense prefix query matrix over the original universe.

    Categorical members contribute equality factors, numerical members
    the lower-triangular all-ones factor 1{x <= t}.
    """
    universe = workload.universe
    numerical = _numerical_members(universe)
    blocks = []
    for members in workload.sets:
        parts = []
        for j in range(universe.d):
            m = universe.domain_sizes[j]
            if j not in members:
                parts.append(np.ones((1, m)))
            elif j in numerical:
                parts.append(np.tril(np.ones((m, m))))
            else:
                parts.append(np.eye(m))
        blocks.append(reduce(np.kron, parts))
    return np.vstack(blocks)


def lower_bound_witness(workload, p=None, dense_cap=None):
    """Dense test matrix for the range-query lower bound.

    Builds Y = P^(1/2) U V* from per-attribute weight tables f_j and
    checks nothing itself; callers compare trace_value against the
    closed form and op_norm against 1.
    """
    w = _normalized(workload, p)
    universe = w.universe
    _check_dense_caps(w, dense_cap)
    sizes = universe.domain_sizes
    numerical = _numerical_members(universe)
    f_tables = []
    for j, m in enumerate(sizes):
        if j in numerical:
            f = np.empty(m, dtype=complex)
            f[0] = (m + 1) / 2.0
            a = np.arange(1, m)
            f[1:] = 1.0 / (1.0 - np.exp(-2j * np.pi * a / m))
            f_tables.append(f)
        else:
            f_tables.append(None)
    coeffs = tuple(np.ones(m) if f is None else f
                   for m, f in zip(sizes, f_tables))
    freqs = tuple(sorted(
        a for members in downward_closure(w, positive_only=True)
        for a in fourier.frequency_vectors(universe, members)))
    kappa = {}
    for a in freqs:
        support = set(j for j, v in enumerate(a) if v)
        c = 0.0
        for members, pS in zip(w.sets, w.weights):
            if pS <= 0 or not support <= set(members):
                continue
            prod = 1.0
            for j in members:
                if j in numerical:
                    prod *= abs(f_tables[j][a[j]]) ** 2
            c += pS * prod / universe.subuniverse_size(members) ** 2
        kappa[a] = math.sqrt(c)
    rows, P = _row_index(w)
    U = _coefficient_matrix(w, coeffs, rows, freqs)
    U = U / np.array([kappa[a] for a in freqs])[None, :]
    V = _character_matrix(universe, freqs) / math.sqrt(universe.size)
    Y = np.sqrt(P)[:, None] * (U @ V.conj().T)
    W = _prefix_matrix(w)
    trace = abs(complex(((np.sqrt(P)[:, None] * W) * np.conj(Y)).sum()))
    op_norm = float(np.linalg.svd(Y, compute_uv=False)[0])
    return LowerBoundWitness(Y=Y, f_tables=tuple(f_tables), kappa=kappa,
                             trace_value=trace / math.sqrt(universe.size),
                             op_norm=op_norm,
                             closed_form=_extended_closed_form(w),
                             note=WITNESS_NOTE)


def extended_lower_bound(workload, p=None, dense_cap=None):
    """Error lower bound for range-marginal workloads, closed form.

    Every factorization that answers the prefix queries of these sets
    has weighted error at least this value.  On instances within the
    dense caps the test matrix is materialized and its trace value must
    agree with the closed form; larger instances skip the check.
    """
    w = _normalized(workload, p)
    value = _extended_closed_form(w)
    cap = DENSE_UNIVERSE_CAP if dense_cap is None else int(dense_cap)
    if w.universe.size <= cap and _query_rows(w) <= DENSE_QUERY_CAP:
        witness = lower_bound_witness(w, dense_cap=dense_cap)
        if abs(witness.trace_value - value) > 1e-8 * max(1.0, value):
            raise FourierMarginalsError(
                f"range bound mismatch: dense trace {witness.trace_value} "
                f"vs closed form {value}")
        if witness.op_norm > 1 + 1e-9:
            raise FourierMarginalsError(
                f"test matrix operator norm {witness.op_norm} exceeds 1")
    return value


def _finite(value):
    return float(value) if math.isfinite(value) else None


def certificate_document(workload, p=None, kind=None, dense_cap=None):
    """JSON-ready optimality certificate for one weighted workload.

    Dense instances carry the SVD bound and the tightness residuals;
    larger ones report the closed-form norms only.
    """
    kind = kind or workload.kind
    w, _, tau_map = _prepare(workload, p, kind)
    size = w.universe.size
    cap = DENSE_UNIVERSE_CAP if dense_cap is None else int(dense_cap)
    if size <= cap and _query_rows(w) <= DENSE_QUERY_CAP:
        fact = build_factorization(workload, p=p, kind=kind,
                                   dense_cap=dense_cap)
        report = norm_report(fact)
        residuals = tightness_certificate(fact)
        return {"gammaF": report.gammaF_value,
                "gamma2": _finite(report.gamma2_value),
                "svd_lower": report.svd_lower_bound,
                "residuals": residuals,
                "dense": {"used": True, "size": size}}
    predicted = mechanism.predicted_error(workload, p=p, mu=1.0, kind=kind)
    return {"gammaF": float(sum(tau_map.values())),
            "gamma2": _finite(predicted["max_sigma"]),
            "svd_lower": None,
            "residuals": None,
            "dense": {"used": False, "size": size}}
