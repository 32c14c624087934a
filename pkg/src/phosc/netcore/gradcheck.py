"""Central-difference gradient checking for loss closures over parameter
dicts. The closure is evaluated at perturbed parameters, so it must be a
pure function of them (fixed data, fixed seeds)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CoordinateCheck:
    param: str
    index: tuple[int, ...]
    analytic: float
    numeric: float
    rel_err: float


@dataclass
class GradCheckReport:
    passed: bool
    max_rel_err: float
    num_checked: int
    tolerance: float
    num_nonsmooth: int = 0
    worst: list[CoordinateCheck] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"gradcheck {status}: max_rel_err={self.max_rel_err:.3e} "
            f"over {self.num_checked} coordinates (tolerance {self.tolerance:.1e}, "
            f"{self.num_nonsmooth} non-smooth skipped)"
        ]
        for c in self.worst:
            lines.append(
                f"  {c.param}{list(c.index)}: analytic={c.analytic:.6e} "
                f"numeric={c.numeric:.6e} rel_err={c.rel_err:.3e}"
            )
        return "\n".join(lines)


def _rel_err(a: float, n: float) -> float:
    denom = max(abs(a), abs(n))
    if denom < 1e-6:
        # both effectively zero: compare absolutely so noise near the
        # float epsilon does not explode the ratio
        return abs(a - n)
    return abs(a - n) / denom


def grad_check(
    fn,
    params: dict[str, np.ndarray],
    eps: float = 1e-5,
    tolerance: float = 1e-4,
    num_coords: int = 200,
    seed: int = 0,
    num_worst: int = 5,
) -> GradCheckReport:
    """Compare fn's analytic gradient against central differences.

    fn(params) must return (loss: float, grads: dict matching params).
    At least one coordinate per parameter is always checked; the rest of
    the num_coords budget is sampled uniformly over all coordinates.

    Coordinates whose +/-eps evaluations straddle a non-differentiable
    point (relu or max-pool kinks: the two one-sided slopes disagree) give
    meaningless central differences; they are skipped, counted, and
    replaced by freshly sampled coordinates. The detection uses function
    values only, so a wrong analytic gradient can never hide behind it.
    """
    params = {k: np.asarray(v, dtype=np.float64).copy() for k, v in params.items()}
    loss0, grads = fn(params)
    if set(grads) != set(params):
        raise KeyError("closure returned gradient names that differ from params")

    names = sorted(params)
    sizes = [params[n].size for n in names]
    total = sum(sizes)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    offsets = np.cumsum([0] + sizes)
    budget = min(max(num_coords, len(names)), total)

    def candidates():
        tried: set[int] = set()
        for i in range(len(names)):  # one guaranteed coordinate per param
            flat = int(offsets[i] + rng.integers(sizes[i]))
            if flat not in tried:
                tried.add(flat)
                yield flat
        while len(tried) < total:
            flat = int(rng.integers(total))
            if flat not in tried:
                tried.add(flat)
                yield flat

    checks = []
    nonsmooth = 0
    for flat in candidates():
        if len(checks) >= budget:
            break
        pi = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[pi]
        local = flat - offsets[pi]
        index = np.unravel_index(local, params[name].shape)

        orig = params[name][index]
        params[name][index] = orig + eps
        plus, _ = fn(params)
        params[name][index] = orig - eps
        minus, _ = fn(params)
        params[name][index] = orig

        # one-sided slopes agree to O(eps) on a smooth function; a larger
        # gap means the interval straddles a slope jump and the central
        # difference measures nothing
        left = (loss0 - minus) / eps
        right = (plus - loss0) / eps
        if abs(right - left) > 1e-6 + 4.0 * tolerance * max(abs(left), abs(right)):
            nonsmooth += 1
            continue

        numeric = (plus - minus) / (2.0 * eps)
        analytic = float(grads[name][index])
        checks.append(
            CoordinateCheck(
                param=name,
                index=tuple(int(i) for i in index),
                analytic=analytic,
                numeric=float(numeric),
                rel_err=_rel_err(analytic, numeric),
            )
        )

    checks.sort(key=lambda c: -c.rel_err)
    max_err = checks[0].rel_err if checks else 0.0
    return GradCheckReport(
        passed=max_err <= tolerance and len(checks) > 0,
        max_rel_err=max_err,
        num_checked=len(checks),
        tolerance=tolerance,
        num_nonsmooth=nonsmooth,
        worst=checks[:num_worst],
    )
