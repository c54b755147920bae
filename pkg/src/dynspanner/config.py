"""Configuration, derived constants, and length-bucket arithmetic.

Every other module receives a Config and uses the bucket helpers here, so
all floor/log decisions (and their boundary snapping) live in one place.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

# Relative tolerance used when a logarithm sits on an integer boundary.
# Without the snap, float jitter can move an edge between adjacent buckets
# across otherwise identical runs.
LOG_SNAP = 1e-12


class InfeasibleConfigError(ValueError):
    """Raised when the requested constants cannot produce a positive eps'."""


def snapped_floor_log(value: float, base: float) -> int:
    """floor(log_base(value)), snapping to the nearest integer when the log
    is within LOG_SNAP (relative) of it."""
    if value <= 0.0:
        raise ValueError("value must be positive")
    x = math.log(value) / math.log(base)
    r = round(x)
    if abs(x - r) <= LOG_SNAP * max(1.0, abs(x)):
        return int(r)
    return int(math.floor(x))


def snapped_ceil_log(value: float, base: float) -> int:
    """ceil(log_base(value)) with the same boundary snap."""
    if value <= 0.0:
        raise ValueError("value must be positive")
    x = math.log(value) / math.log(base)
    r = round(x)
    if abs(x - r) <= LOG_SNAP * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


@dataclass(frozen=True, order=True)
class BucketCoord:
    """Bucket coordinates of a pair: c^(k*size+index) <= |uv| < c^(k*size+index+1)."""

    index: int
    size: int


@dataclass(frozen=True)
class Config:
    dim: int
    eps_target: float
    # Per-invariant epsilon.  The stretch budget is split multiplicatively
    # between the sparse layer and the bucket invariants, so
    # (1+eps)^2 = 1+eps_target.
    eps: float
    eps_prime: float
    c: float
    k: int
    R: float
    lam: float
    Cphi: float
    mode: str  # "theory" | "practical"
    # Derived constants, kept for reporting and for the bound checks.
    C: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    Dmax: float
    rep_bound: float
    p_max: float
    block_len: int
    # Names of theory inequalities that do not hold (practical mode only).
    waived: tuple = field(default_factory=tuple)

    # ---- bucket arithmetic ----

    def pair_bucket_of_length(self, length: float) -> BucketCoord:
        """Bucket coordinates of a pair with the given Euclidean length."""
        if length <= 0.0:
            raise ValueError("identical points have no bucket")
        m = snapped_floor_log(length, self.c)
        return BucketCoord(index=m % self.k, size=m // self.k)

    def pair_size_of_length(self, length: float) -> int:
        return snapped_floor_log(length, self.c) // self.k

    def size_lower_length(self, size: int) -> float:
        """Smallest length whose pair size equals `size` (= c^(k*size))."""
        return self.c ** (self.k * size)

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["waived"] = list(self.waived)
        return d


_THEORY_INEQUALITIES = (
    "eps_prime_feasible",   # eps' <= c^-1 (1 + lam^-2) - 1
    "k_fix_inv1",           # k >= log_c(1 + C3/((Cphi-1)(eps-eps')))
    "k_fix_inv2",           # k >= log_c(1 + 2 C5/(eps-eps'))
)


def _derived_constants(d, eps, eps_prime, c, R, lam, Cphi):
    C1 = (2.0 * (1.0 + eps) / eps_prime) ** (2 * d) * d**d
    C2 = (1.0 + eps) ** d * c**d * C1
    C3 = eps * C2 * c
    C4 = C1 * ((1.0 + eps) * c) ** (2 * d)
    C5 = C3 * (C4 + 1.0)
    p_max = max(1.0 + eps, Cphi * (eps - eps_prime))
    rep_bound = d ** (d / 2.0) * lam**d + 2.0
    # Cluster degree: type-I neighbors, children, and the parent edge,
    # multiplied by the representative repetition bound.
    cluster_deg = d ** (d / 2.0) * lam**d + d ** (d / 2.0) * R**d + 1.0
    Dmax = rep_bound * cluster_deg
    return C1, C2, C3, C4, C5, p_max, rep_bound, Dmax


def derive_config(dim, eps_target, R, mode="practical", overrides=None) -> Config:
    """Compute a full Config from the user-facing knobs.

    In theory mode c, k, and eps' are chosen so that every lemma hypothesis
    holds (k can get astronomically large; it is only ever used as an
    integer).  In practical mode the caller may pin c, k, lambda, Cphi, and
    eps_prime; inequalities that fail are reported in `waived` instead of
    raising, except that a non-positive eps' without an explicit override is
    always an error.
    """
    if eps_target <= 0.0:
        raise ValueError("eps_target must be positive")
    if R <= 1.0:
        raise ValueError("R must be > 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if mode not in ("theory", "practical"):
        raise ValueError(f"unknown mode {mode!r}")
    overrides = dict(overrides or {})
    if mode == "theory" and overrides:
        raise ValueError("overrides are only allowed in practical mode")

    lam = overrides.pop("lambda", overrides.pop("lam", None))
    if lam is None:
        lam = 4.0 * (2.0 + eps_target) / eps_target * R
    Cphi = overrides.pop("Cphi", 2.0)
    if Cphi <= 1.0:
        raise ValueError("Cphi must be > 1")

    # Invariant-level epsilon: split the stretch budget between the sparse
    # spanner and the bucket invariants.
    eps = math.sqrt(1.0 + eps_target) - 1.0

    c = overrides.pop("c", None)
    if c is None:
        # Largest c still leaving room for a positive eps'.
        c = 1.0 + 0.5 * lam**-2
    if c <= 1.0:
        raise ValueError("c must be > 1")

    eps_prime_formula = (1.0 + lam**-2) / c - 1.0
    eps_prime = overrides.pop("epsPrime", overrides.pop("eps_prime", None))
    waived = []
    if eps_prime is None:
        eps_prime = eps_prime_formula
        if eps_prime <= 0.0:
            raise InfeasibleConfigError(
                f"c={c} >= 1 + lambda^-2 = {1.0 + lam**-2} forces eps' <= 0; "
                "pass an explicit epsPrime override or lower c"
            )
    else:
        if eps_prime <= 0.0:
            raise InfeasibleConfigError("epsPrime override must be positive")
        if eps_prime > eps_prime_formula + 1e-15:
            waived.append("eps_prime_feasible")
    if eps_prime >= eps:
        raise InfeasibleConfigError(
            f"eps'={eps_prime} must be smaller than eps={eps}"
        )

    C1, C2, C3, C4, C5, p_max, rep_bound, Dmax = _derived_constants(
        dim, eps, eps_prime, c, R, lam, Cphi
    )

    k_inv1 = math.log(1.0 + C3 / ((Cphi - 1.0) * (eps - eps_prime))) / math.log(c)
    k_inv2 = math.log(1.0 + 2.0 * C5 / (eps - eps_prime)) / math.log(c)
    k_required = int(math.ceil(max(k_inv1, k_inv2)))

    k = overrides.pop("k", None)
    if k is None:
        k = max(k_required, 1)
    else:
        k = int(k)
        if k < 1:
            raise ValueError("k must be a positive integer")
        if mode == "practical":
            if k < k_inv1:
                waived.append("k_fix_inv1")
            if k < k_inv2:
                waived.append("k_fix_inv2")
    if mode == "theory" and k < k_required:
        raise InfeasibleConfigError(
            f"theory mode needs k >= {k_required}, got {k}"
        )

    if overrides:
        raise ValueError(f"unknown overrides: {sorted(overrides)}")

    block_len = max(1, snapped_ceil_log(lam, R))

    return Config(
        dim=dim,
        eps_target=eps_target,
        eps=eps,
        eps_prime=eps_prime,
        c=c,
        k=k,
        R=R,
        lam=lam,
        Cphi=Cphi,
        mode=mode,
        C=float(c) ** k,
        C1=C1,
        C2=C2,
        C3=C3,
        C4=C4,
        C5=C5,
        Dmax=Dmax,
        rep_bound=rep_bound,
        p_max=p_max,
        block_len=block_len,
        waived=tuple(waived),
    )


def config_from_json(text: str) -> Config:
    """Parse the external config file format."""
    obj = json.loads(text)
    return derive_config(
        dim=obj["dim"],
        eps_target=obj["eps"],
        R=obj["R"],
        mode=obj.get("mode", "practical"),
        overrides=obj.get("overrides"),
    )
