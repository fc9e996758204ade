"""Independent cross-checks for the pipeline.

Nothing here feeds the bounds themselves; these routines exist so a run can
be audited: exhaustive classical baselines, the operator identities behind
the dimension constraints, lower-vs-upper sandwich checks, and stability of
the sampled span dimension across seeds.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .algebra import RankClass
from .basis import accumulate_basis
from .relax import SweepConfig, _default_limit, class_stream, compute_bound
from .sampler import ginibre
from .scenario import Scenario
from .seesaw import seesaw_lower_bound


# ---------------------------------------------------------------------------
# Classical (deterministic, one-dimensional) brute force.


def brute_force_classical(scenario: Scenario, limit: int = 2 ** 24) -> float:
    """Exact maximum over deterministic scalar strategies.

    Dichotomic letters take values +-1, projectors 0/1 (one-hot within a
    completeness group), preparations are the scalar 1.  Refuses scenarios
    whose assignment count exceeds ``limit`` and letter kinds with no scalar
    semantics.
    """
    n = len(scenario.letters)
    poly = scenario.objective_poly()
    grouped: dict[str, list[int]] = {}
    by_name = {s.name: i for i, s in enumerate(scenario.letters)}
    for gname, members in scenario.groups().items():
        if any(m.kind != "projector" for m in members):
            raise ValueError(f"group {gname!r} has non-projector members")
        grouped[gname] = [by_name[m.name] for m in members]
    in_group = {i for idxs in grouped.values() for i in idxs}

    # slots: (letter column indices, array of choice rows)
    slots: list[tuple[list[int], np.ndarray]] = []
    for idxs in grouped.values():
        slots.append(([*idxs], np.eye(len(idxs))))
    for i, spec in enumerate(scenario.letters):
        if i in in_group:
            continue
        if spec.kind == "dichotomic":
            slots.append(([i], np.array([[-1.0], [1.0]])))
        elif spec.kind == "projector":
            slots.append(([i], np.array([[0.0], [1.0]])))
        elif spec.kind == "state_prep":
            slots.append(([i], np.array([[1.0]])))
        else:
            raise ValueError(f"letter kind {spec.kind!r} has no classical value")

    shape = [s[1].shape[0] for s in slots]
    total = int(np.prod(shape)) if shape else 1
    if total > limit:
        raise ValueError(f"{total} classical strategies exceed the limit {limit}")

    best = -np.inf
    chunk = 1 << 16
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        vals = np.ones((len(flat), n))
        if shape:
            choice = np.unravel_index(flat, shape)
            for (cols, table), ci in zip(slots, choice):
                vals[:, cols] = table[ci]
        acc = np.zeros(len(flat), dtype=complex)
        for w, c in poly.items():
            acc += c * (np.prod(vals[:, list(w)], axis=1) if w else 1.0)
        best = max(best, float(acc.real.max()))
    return best


# ---------------------------------------------------------------------------
# Standard identities: the alternating sum over all orderings of 2D letters
# vanishes identically on D-dimensional matrices.


def standard_identity_value(mats) -> np.ndarray:
    """sum over permutations pi of sgn(pi) A_pi(1) ... A_pi(n), by subset DP.

    P(S) with letter x last satisfies P(S) = sum_x sgn P(S-x) A_x where the
    sign counts the members of S above x, so one pass over bitmasks in
    increasing order costs n 2^n matrix products instead of n!.
    """
    mats = [np.asarray(m, dtype=complex) for m in mats]
    n = len(mats)
    d = mats[0].shape[0]
    acc: list[np.ndarray | None] = [None] * (1 << n)
    acc[0] = np.eye(d, dtype=complex)
    for mask in range(1, 1 << n):
        m = np.zeros((d, d), dtype=complex)
        rest = mask
        while rest:
            low = rest & (-rest)
            x = low.bit_length() - 1
            sign = -1.0 if ((mask >> (x + 1)).bit_count() & 1) else 1.0
            m += sign * (acc[mask ^ low] @ mats[x])
            rest ^= low
        acc[mask] = m
    return acc[(1 << n) - 1]


def _relative_identity_residual(mats) -> float:
    val = standard_identity_value(mats)
    scale = 1.0
    for m in mats:
        scale *= max(np.linalg.norm(m, 2), 1e-300)
    return float(np.linalg.norm(val) / scale)


def check_standard_identity(dim: int, trials: int = 5, seed: int = 0) -> dict:
    """The 2D-letter alternating identity on random D x D matrices.

    Returns residuals for the claimed dimension and for a (D+1)-dimensional
    negative control, which must not satisfy the identity.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    if dim > 5:
        raise ValueError("refusing subset enumeration above dimension 5 "
                         "(12+ letters)")
    rng = np.random.default_rng(seed)
    n = 2 * dim
    worst = 0.0
    control = np.inf
    for _ in range(trials):
        mats = [ginibre(rng, dim, dim) for _ in range(n)]
        worst = max(worst, _relative_identity_residual(mats))
        ctrl = [ginibre(rng, dim + 1, dim + 1) for _ in range(n)]
        control = min(control, _relative_identity_residual(ctrl))
    return {
        "dimension": dim,
        "letters": n,
        "trials": trials,
        "max_residual": worst,
        "control_dimension": dim + 1,
        "control_min_residual": control,
        "passed": worst <= 1e-12 and control > 1e-3,
    }


def _random_traceless_dichotomic(rng, field_kind="complex"):
    v = ginibre(rng, 2, 1, field_kind)[:, 0]
    v = v / np.linalg.norm(v)
    return 2.0 * np.outer(v, v.conj()) - np.eye(2)


def check_d2_identities(trials: int = 20, seed: int = 0) -> dict:
    """Qubit-specific polynomial identities, with 3-dimensional controls.

    [A1,A2]^2 is central for any 2x2 matrices; traceless dichotomic qubit
    letters satisfy [X1, {X2,X3}] = 0, and real ones also {X1, [X2,X3]} = 0.
    """
    rng = np.random.default_rng(seed)
    fam = {"central_commutator_square": 0.0,
           "traceless_anticommutator": 0.0,
           "real_traceless_commutator": 0.0}
    ctrl = {"central_commutator_square": np.inf,
            "traceless_anticommutator": np.inf}
    for _ in range(trials):
        a1, a2, a3 = (ginibre(rng, 2, 2) for _ in range(3))
        c = a1 @ a2 - a2 @ a1
        m = c @ c
        r = np.linalg.norm(m @ a3 - a3 @ m) / (np.linalg.norm(m) * np.linalg.norm(a3) + 1e-300)
        fam["central_commutator_square"] = max(fam["central_commutator_square"], r)

        x1, x2, x3 = (_random_traceless_dichotomic(rng) for _ in range(3))
        anti = x2 @ x3 + x3 @ x2
        r = np.linalg.norm(x1 @ anti - anti @ x1) / (np.linalg.norm(anti) + 1.0)
        fam["traceless_anticommutator"] = max(fam["traceless_anticommutator"], r)

        y1, y2, y3 = (_random_traceless_dichotomic(rng, "real") for _ in range(3))
        comm = y2 @ y3 - y3 @ y2
        r = np.linalg.norm(y1 @ comm + comm @ y1) / (np.linalg.norm(comm) + 1.0)
        fam["real_traceless_commutator"] = max(fam["real_traceless_commutator"], r)

        # 3x3 controls: the same expressions must not vanish
        b1, b2, b3 = (ginibre(rng, 3, 3) for _ in range(3))
        c = b1 @ b2 - b2 @ b1
        m = c @ c
        r = np.linalg.norm(m @ b3 - b3 @ m) / (np.linalg.norm(m) * np.linalg.norm(b3) + 1e-300)
        ctrl["central_commutator_square"] = min(ctrl["central_commutator_square"], r)

        zs = []
        for _ in range(3):
            g = ginibre(rng, 3, 1)[:, 0]
            g = g / np.linalg.norm(g)
            zs.append(2.0 * np.outer(g, g.conj()) - np.eye(3))
        anti = zs[1] @ zs[2] + zs[2] @ zs[1]
        r = np.linalg.norm(zs[0] @ anti - anti @ zs[0]) / (np.linalg.norm(anti) + 1.0)
        ctrl["traceless_anticommutator"] = min(ctrl["traceless_anticommutator"], r)

    passed = all(v <= 1e-12 for v in fam.values()) and all(v > 1e-3 for v in ctrl.values())
    return {"trials": trials, "residuals": fam, "controls": ctrl, "passed": passed}


# ---------------------------------------------------------------------------
# Sandwich and stability checks on whole scenarios.


def _finite_shadow(scenario: Scenario, fill: int = 2) -> Scenario:
    """The scenario with every unconstrained dimension pinned to ``fill``."""
    if not scenario.unconstrained_parties():
        return scenario
    dims = {p: (d if d is not None else fill) for p, d in scenario.dims.items()}
    return replace(scenario, dims=dims, name=scenario.name + f"@{fill}")


def sandwich_report(scenario: Scenario, degree, config: SweepConfig = SweepConfig(),
                    restarts: int = 10, seed: int = 0, sym_level=None) -> dict:
    """See-saw lower bound vs relaxation upper bound on one scenario.

    Any finite-dimensional strategy is feasible for its relaxation, so
    lower <= upper + tolerance must hold; a violation means a bug.
    """
    upper = compute_bound(scenario, degree, config, sym_level=sym_level)
    shadow = _finite_shadow(scenario)
    lower = seesaw_lower_bound(shadow, restarts=restarts, seed=seed)
    ok = upper.best_value is not None and lower.value <= upper.best_value + 1e-6
    return {
        "scenario": scenario.name,
        "lower": lower.value,
        "upper": upper.best_value,
        "margin": None if upper.best_value is None else upper.best_value - lower.value,
        "partial": upper.partial,
        "ok": bool(ok),
    }


def basis_stability_report(scenario: Scenario, degree: int, seeds=(0, 1),
                           config: SweepConfig = SweepConfig(),
                           rank_class: RankClass | None = None) -> dict:
    """Span dimension across master seeds; it is a property of the class.

    The accumulated count N may only differ between seeds by sampling
    pathologies, so equality across seeds is required.
    """
    from .algebra import enumerate_words

    alphabet = scenario.alphabet()
    index = config.index if config.index is not None else enumerate_words(alphabet, degree)
    if rank_class is None:
        classes = scenario.rank_classes(dedup=False)
        rank_class = classes[0]
        for cl in classes:
            if all(0 < r for r in cl.ranks):
                rank_class = cl
                break
    limit = _default_limit(len(index), config)
    sizes = {}
    for seed in seeds:
        stream = class_stream(scenario, rank_class, 0, seed, index, alphabet,
                              config.realify, limit)
        acc = accumulate_basis(stream, eps=config.eps, confirmations=config.confirmations)
        sizes[int(seed)] = acc.size
    return {
        "scenario": scenario.name,
        "class": tuple(rank_class.ranks),
        "index_size": len(index),
        "sizes": sizes,
        "stable": len(set(sizes.values())) == 1,
    }
