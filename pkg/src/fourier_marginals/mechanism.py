"""Private release of marginal, product, and range-marginal workloads.

The pipeline releases the aggregate frequencies F_a(D), adding complex
Gaussian noise with variance 2 tau / tau_a to each frequency whose
importance weight tau_a is positive, and reconstructs every requested
per-target table from the shared noisy frequencies by an inverse FFT.
Noise is attached to a frequency exactly once and reused by every set
containing its support; a release never resamples per set.  Frequencies
are sampled in lexicographic order of their index vectors, so a fixed
seed determines the entire output regardless of workload order or
parallel reconstruction.

Per-query noise is Gaussian with a standard deviation that is constant
on each set,

    sigma_S^2 = (tau / |U_S|^2) sum_{supp(a) <= S}
                (prod_{j in S} |phi_hat_j(a_j)|^2) / tau_a,

and the weighted root mean squared error over the workload has the
closed form (1/mu) sum_a tau_a.  predicted_error evaluates these
formulas without any sampling.

Range queries over numerical attributes (prefixes t >= 0 counting
x <= t, suffixes t < 0 counting x >= |t|) are handled by doubling each
numerical domain and choosing factor tables that turn every such query
into a shifted product query; the target map between the two views is a
bijection, so the embedded release answers exactly the original
workload.  Degenerate targets (the always-true prefix and always-false
suffix) are kept for uniformity; trimming them would shave a little
off the error and is left as a possible refinement.

Estimates are unbiased and are not post-processed for consistency or
non-negativity.  Passing sampler=None runs the pipeline with the noise
forced to zero, which separates transform bugs from noise in tests.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import budget, fourier
from .core import (NUMERICAL, AssignmentOutOfRange, Dataset,
                   FourierMarginalsError, Unestimable, Universe, Workload,
                   build_universe, normalize_weights)


class NonUniformDomain(FourierMarginalsError):
    """The all-k-way release needs every attribute size equal."""


class BadArity(FourierMarginalsError):
    """eta and zeta need m >= 2."""


def eta(m):
    """(1/m) sum_{l=1}^{m} 1 / sin(pi (2l - 1) / (2m)).

    Per-attribute error factor of a released numerical attribute; grows
    like (2/pi) ln m.
    """
    m = int(m)
    if m < 2:
        raise BadArity(f"need m >= 2, got {m}")
    return sum(1.0 / math.sin(math.pi * (2 * l - 1) / (2 * m))
               for l in range(1, m + 1)) / m


def zeta(m):
    """(1/m) sum_{l=1}^{m-1} 1 / sin(pi l / m).

    Lower-bound counterpart of eta; stays within an additive constant
    of it.
    """
    m = int(m)
    if m < 2:
        raise BadArity(f"need m >= 2, got {m}")
    return sum(1.0 / math.sin(math.pi * l / m) for l in range(1, m)) / m


@dataclass(frozen=True, eq=False)
class ExtendedEmbedding:
    """Doubled-domain view that turns range marginals into product queries.

    Numerical attributes get domain size 2m and the factor table
    1{z <= m-1}; categorical attributes keep their size and the
    indicator of zero.  Targets map bijectively: prefixes and
    categorical values are fixed, the suffix starting at |t| maps to
    m - 1 - t in the doubled domain.
    """

    original: Universe
    embedded: Universe
    phi: tuple

    def embed_target(self, members, target):
        out = []
        for j, t in zip(members, target):
            m = self.original.domain_sizes[j]
            numerical = self.original.attribute_kind[j] == NUMERICAL
            if numerical and -m <= t < 0:
                out.append(m - 1 - t)
            elif 0 <= t < m:
                out.append(int(t))
            else:
                raise _bad_target(j, t)
        return tuple(out)

    def lift_target(self, members, embedded_target):
        out = []
        for j, t in zip(members, embedded_target):
            m = self.original.domain_sizes[j]
            if self.original.attribute_kind[j] == NUMERICAL and t >= m:
                out.append(m - 1 - t)
            else:
                out.append(int(t))
        return tuple(out)

    def target_count(self, members):
        n = 1
        for j in members:
            n *= self.embedded.domain_sizes[j]
        return n


def _bad_target(j, t):
    return AssignmentOutOfRange(f"target {t} invalid for attribute {j}")


def embed_extended(universe, workload=None):
    """Build the doubled-domain embedding of range-marginal queries.

    A categorical-only universe embeds as itself.  The returned phi
    tables answer, for every x in the original universe, every prefix,
    suffix, and equality query exactly.
    """
    sizes = []
    phi = []
    for m, kind in zip(universe.domain_sizes, universe.attribute_kind):
        if kind == NUMERICAL:
            sizes.append(2 * m)
            phi.append((1.0,) * m + (0.0,) * m)
        else:
            sizes.append(m)
            phi.append((1.0,) + (0.0,) * (m - 1))
    embedded = build_universe(sizes, universe.attribute_kind)
    return ExtendedEmbedding(original=universe, embedded=embedded,
                             phi=tuple(phi))


def _embedded_workload(embedding, workload):
    return Workload(universe=embedding.embedded, sets=workload.sets,
                    weights=np.asarray(workload.weights), kind="product",
                    phi=embedding.phi)


@dataclass(frozen=True, eq=False)
class ReleaseResult:
    """Released tables plus the noise plan that produced them.

    estimates maps each query set to a real table over its target
    domain (the doubled domain for range workloads; use estimate() to
    look up original targets).  per_set_sigma gives the exact per-query
    noise deviation of each set, constant across its targets.
    """

    kind: str
    workload: Workload
    estimates: dict
    per_set_sigma: dict
    plan: budget.BudgetPlan
    seed: object
    predicted: dict
    embedding: ExtendedEmbedding = None

    def table(self, members):
        return self.estimates[tuple(sorted(members))]

    def estimate(self, members, target):
        members = tuple(sorted(members))
        if self.embedding is not None:
            target = self.embedding.embed_target(members, target)
        table = self.estimates[members]
        if not members:
            return float(table)
        return float(table[tuple(target)])


def _magnitudes(universe, spectrum):
    if spectrum is None:
        return None
    return [np.abs(spectrum.tables[j]) for j in range(universe.d)]


def _sub_frequencies(universe, members):
    for r in range(len(members) + 1):
        for sub in itertools.combinations(members, r):
            yield from fourier.frequency_vectors(universe, sub)


def _set_sigma(universe, members, tau_map, tau_total, magnitudes):
    """Per-query noise deviation of one set, inf when uncoverable.

    Frequencies whose reconstruction coefficient vanishes are skipped;
    any remaining frequency without budget makes the set unestimable.
    """
    total = 0.0
    for a in _sub_frequencies(universe, members):
        num = 1.0
        if magnitudes is not None:
            for j in members:
                num *= magnitudes[j][a[j]] ** 2
        if num == 0.0:
            continue
        tau_a = tau_map.get(a, 0.0)
        if tau_a <= 0.0:
            return math.inf
        total += num / tau_a
    return math.sqrt(tau_total * total) / universe.subuniverse_size(members)


def _reconstruct(universe, members, noisy, spectrum):
    size = universe.subuniverse_size(members)
    if not members:
        value = noisy.get((0,) * universe.d, 0j)
        return np.array(value.real)
    shape = universe.subdomain_sizes(members)
    coeffs = np.zeros(shape, dtype=complex)
    for a in _sub_frequencies(universe, members):
        value = noisy.get(a)
        if value is None:
            continue
        if spectrum is not None:
            for j in members:
                value = value * spectrum.tables[j][a[j]]
        coeffs[tuple(a[j] for j in members)] = value
    table = fourier.inverse_table(coeffs, expected_shape=shape)
    return np.real(table) / size


def _empty_plan(mu):
    return budget.BudgetPlan(mu=float(mu), tau_total=0.0, tau_map={},
                             variances={}, shares={})


def _run_release(dataset, workload, tau_map, spectrum, mu, sampler,
                 plan, kind, embedding=None):
    universe = workload.universe
    magnitudes = _magnitudes(universe, spectrum)
    if plan is None:
        if any(t > 0 for t in tau_map.values()):
            plan = budget.plan_from_tau(mu, tau_map)
        else:
            # every reconstruction coefficient is zero: the workload is
            # constant, released exactly, and consumes no budget
            plan = _empty_plan(mu)
    per_set_sigma = {}
    for members in workload.sets:
        sigma = _set_sigma(universe, members, plan.tau_map,
                           plan.tau_total, magnitudes)
        if math.isinf(sigma):
            raise Unestimable(
                f"set {members} needs frequencies with no budget; give it "
                "positive weight or cover it by a larger weighted set")
        per_set_sigma[members] = sigma

    order = sorted(plan.tau_map)
    table = fourier.fourier_queries(dataset, order)
    noisy = {}
    for a in order:
        noise = 0j
        if sampler is not None:
            noise = budget.sample_complex_gaussian(plan.variances[a], sampler)
        noisy[a] = table.value(a) + noise

    estimates = {members: _reconstruct(universe, members, noisy, spectrum)
                 for members in workload.sets}
    # robust to plans given in any scale: sigma_S is scale invariant and
    # err^2 = sum_S p(S) sigma_S^2 for every plan
    weights = np.asarray(workload.weights, dtype=float)
    if weights.sum() > 0:
        weights = weights / weights.sum()
    weighted_rms = math.sqrt(sum(
        pS * per_set_sigma[members] ** 2
        for members, pS in zip(workload.sets, weights)))
    predicted = {
        "per_set_sigma": dict(per_set_sigma),
        "weighted_rms": weighted_rms,
        "max_sigma": max(per_set_sigma.values(), default=0.0),
    }
    seed = sampler.seed if sampler is not None else None
    return ReleaseResult(kind=kind, workload=workload, estimates=estimates,
                         per_set_sigma=per_set_sigma, plan=plan, seed=seed,
                         predicted=predicted, embedding=embedding)


def release_marginals(dataset, workload, p=None, mu=1.0, sampler=None,
                      plan=None):
    """Private estimates of every marginal table in the workload.

    Weights are normalized internally; every set of the workload is
    reconstructed, including zero-weight sets whose frequencies are
    already paid for.  sampler=None skips the noise (test mode).
    """
    workload = _with_weights(workload, p)
    workload = normalize_weights(workload)
    tau_map = budget.tau_marginal(workload)
    return _run_release(dataset, workload, tau_map, None, mu, sampler,
                        plan, "marginal")


def release_product(dataset, workload, phi=None, p=None, mu=1.0,
                    sampler=None, plan=None):
    """Private estimates of a workload of shifted product queries.

    phi overrides the workload's factor tables when given.  With the
    indicator-of-zero tables this is release_marginals, noise stream
    included.
    """
    workload = _with_weights(workload, p, phi=phi, kind="product")
    workload = normalize_weights(workload)
    spectrum = fourier.phi_spectrum(workload.phi_tables())
    tau_map = budget.tau_product(workload, spectrum=spectrum)
    return _run_release(dataset, workload, tau_map, spectrum, mu, sampler,
                        plan, "product")


def release_extended(dataset, workload, p=None, mu=1.0, sampler=None):
    """Private estimates of equality/prefix/suffix range marginals.

    Runs the product release on the doubled domain; the result's
    estimate() accepts original targets (negative values select
    suffixes).  The released tables cover every target of every set.
    """
    universe = workload.universe
    embedding = embed_extended(universe)
    embedded_dataset = Dataset(universe=embedding.embedded,
                               rows=dataset.rows)
    inner = _with_weights(_embedded_workload(embedding, workload), p)
    inner = normalize_weights(inner)
    spectrum = fourier.phi_spectrum(inner.phi_tables())
    tau_map = budget.tau_product(inner, spectrum=spectrum)
    result = _run_release(embedded_dataset, inner, tau_map, spectrum, mu,
                          sampler, None, "extended", embedding=embedding)
    return result


def release_k_way(dataset, k, mu=1.0, sampler=None, plan=None):
    """Private estimates of all k-way marginals of a uniform domain."""
    universe = dataset.universe
    sizes = set(universe.domain_sizes)
    if len(sizes) != 1:
        raise NonUniformDomain(f"attribute sizes {sorted(sizes)} differ")
    m = sizes.pop()
    d = universe.d
    if plan is None:
        plan = budget.k_way_budget(d, k, m, mu)
    sets = tuple(itertools.combinations(range(d), k))
    workload = Workload(universe=universe, sets=sets,
                        weights=np.full(len(sets), 1.0 / len(sets)))
    return _run_release(dataset, workload, plan.tau_map, None, mu, sampler,
                        plan, "marginal")


def _with_weights(workload, p, phi=None, kind=None):
    if p is None and phi is None and kind is None:
        return workload
    return Workload(universe=workload.universe, sets=workload.sets,
                    weights=np.asarray(p if p is not None
                                       else workload.weights, dtype=float),
                    kind=kind or workload.kind,
                    phi=phi if phi is not None else workload.phi)


def predicted_error(workload, p=None, mu=1.0, kind=None):
    """Closed-form error report, no sampling.

    Returns per-set noise deviations, the weighted root mean squared
    error (1/mu) sum_a tau_a, and the worst per-set deviation.
    Unestimable zero-weight sets are reported with sigma = inf instead
    of raising.
    """
    kind = kind or workload.kind
    workload = _with_weights(workload, p)
    workload = normalize_weights(workload)
    if kind == "extended":
        embedding = embed_extended(workload.universe)
        workload = _embedded_workload(embedding, workload)
        spectrum = fourier.phi_spectrum(workload.phi_tables())
        tau_map = budget.tau_product(workload, spectrum=spectrum)
    elif kind == "product":
        spectrum = fourier.phi_spectrum(workload.phi_tables())
        tau_map = budget.tau_product(workload, spectrum=spectrum)
    else:
        spectrum = None
        tau_map = budget.tau_marginal(workload)
    universe = workload.universe
    magnitudes = _magnitudes(universe, spectrum)
    tau_total = sum(tau_map.values()) / mu ** 2
    per_set_sigma = {
        members: _set_sigma(universe, members, tau_map, tau_total,
                            magnitudes)
        for members in workload.sets
    }
    return {
        "per_set_sigma": per_set_sigma,
        "weighted_rms": sum(tau_map.values()) / mu,
        "max_sigma": max(per_set_sigma.values(), default=0.0),
    }


def k_way_sigma(d, k, m, mu=1.0):
    """Per-query noise deviation of the all-k-way release, closed form.

    sigma = (1 / (mu m^k sqrt(binom(d,k)))) *
            sum_l binom(d,l) (m-1)^l sqrt(binom(d-l, k-l)).
    """
    if not 1 <= k <= d:
        raise budget.BadArity(f"need 1 <= k <= d, got k={k}, d={d}")
    if m < 2:
        raise budget.BadArity(f"need m >= 2, got m={m}")
    total = sum(math.comb(d, l) * (m - 1) ** l
                * math.sqrt(math.comb(d - l, k - l)) for l in range(k + 1))
    return total / (mu * m ** k * math.sqrt(math.comb(d, k)))


def gaussian_baseline_sigma(num_queries_sets, mu=1.0):
    """Per-query deviation of the independent-noise baseline.

    Splitting the budget evenly over the sets and adding real Gaussian
    noise to each count costs sqrt(|S|) / mu per query.
    """
    return math.sqrt(num_queries_sets) / mu


def release_document(result, names=None):
    """JSON-ready dict of a release: meta, per-set tables, predictions.

    Targets of range workloads are reported in original coordinates
    (negative values are suffixes).  names, when given, labels set
    attributes; otherwise zero-based indices are used.
    """
    universe = result.workload.universe
    label = (lambda j: names[j]) if names else (lambda j: j)
    sets_out = []
    for members in result.workload.sets:
        table = result.estimates[members]
        rows = []
        if members:
            domain = [range(universe.domain_sizes[j]) for j in members]
            for target in itertools.product(*domain):
                value = float(table[tuple(target)])
                shown = target
                if result.embedding is not None:
                    shown = result.embedding.lift_target(members, target)
                rows.append({"t": list(shown), "estimate": value})
        else:
            rows.append({"t": [], "estimate": float(table)})
        sets_out.append({
            "attrs": [label(j) for j in members],
            "sigma": result.per_set_sigma[members],
            "table": rows,
        })
    return {
        "meta": {"mu": result.plan.mu, "seed": result.seed,
                 "kind": result.kind},
        "sets": sets_out,
        "predicted": {
            "weighted_rms": result.predicted["weighted_rms"],
            "max_sigma": result.predicted["max_sigma"],
        },
    }
