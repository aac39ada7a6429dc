"""JSON run configurations.

A run config looks like::

    {
      "scheme": "cn-pi",
      "kernel": {"family": "abel", "alpha": 0.5},
      "operator": {"operator": "diagonal", "eigenvalues": [1.0]},
      "k": 0.0625, "N": 200, "c": 0.5,
      "manufactured": {"a": 1, "b": 1, "c": 1, "d": 1}
    }

``manufactured`` (a profile ``(a + b t + c t^2) exp(-d t)`` or
``{"coeffs": [...], "rate": d}``) replaces ``u0`` and ``forcing``.  Without it,
``u0`` defaults to all ones and ``forcing`` to zero.  ``s0`` defaults to
``c / 2``.  Convergence suites add ``"ks": [...]`` per entry and may wrap
several entries as ``{"entries": [...]}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .forcing import DampedPolynomial, ForcingError, forcing_from_spec, profile_from_spec
from .kernel import Abel, Kernel, KernelError, kernel_from_spec
from .operator import OperatorError, SpdOperator, operator_from_spec
from .stepper import MAX_STEPS, Scheme, SchemeConfig, step_constraint, validate_pairing
from .ztran import estimate_c_alpha

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_suite", "SCHEME_ALIASES"]

SCHEME_ALIASES = {
    "cniq": Scheme.CN_IQ,
    "cncqtrap": Scheme.CN_CQ_TRAP,
    "cn-cq": Scheme.CN_CQ_TRAP,
    "cnpi": Scheme.CN_PI,
    "bdf2iq": Scheme.BDF2_IQ,
    "bdf2cq": Scheme.BDF2_CQ,
}

_KNOWN_KEYS = {
    "scheme", "kernel", "operator", "k", "N", "n_steps", "c", "s0", "u0", "forcing",
    "manufactured", "forcing_mode", "seed", "out", "ks", "literal_bdf2_start",
}


class ConfigError(ValueError):
    """Carries every violation found, not just the first."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True, eq=False)
class RunConfig:
    scheme: Scheme
    kernel: Kernel
    operator: SpdOperator
    k: float
    n_steps: int
    c: float
    s0: float
    u0: np.ndarray
    forcing: Any
    manufactured: DampedPolynomial | None = None
    forcing_mode: str = "average"
    seed: int = 0
    out: str | None = None
    ks: tuple = ()
    literal_bdf2_start: bool = False
    constraint_ok: bool | None = None
    c_alpha: float | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def scheme_config(self, k: float | None = None, n_steps: int | None = None) -> SchemeConfig:
        return SchemeConfig(
            scheme=self.scheme, kernel=self.kernel, operator=self.operator,
            k=self.k if k is None else k,
            n_steps=self.n_steps if n_steps is None else n_steps,
            u0=self.u0, forcing=self.forcing, s0=self.s0,
            forcing_mode=self.forcing_mode, literal_bdf2_start=self.literal_bdf2_start,
        )

    def problem(self):
        from .harness import ManufacturedProblem

        if self.manufactured is None:
            return None
        return ManufacturedProblem(self.kernel, self.operator, self.manufactured)


def _number(spec, key, errors, positive=True, integer=False, default=None):
    if key not in spec:
        if default is None:
            errors.append(f"missing '{key}'")
        return default
    val = spec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append(f"'{key}' must be a number")
        return default
    if not math.isfinite(val):
        errors.append(f"'{key}' must be finite")
        return default
    if integer and int(val) != val:
        errors.append(f"'{key}' must be an integer")
        return default
    if positive and val <= 0:
        errors.append(f"'{key}' must be > 0")
        return default
    return int(val) if integer else float(val)


def _scheme(name, errors):
    if not isinstance(name, str):
        errors.append("missing or non-string 'scheme'")
        return None
    key = name.strip().lower()
    try:
        return Scheme(key)
    except ValueError:
        pass
    compact = key.replace("_", "").replace("-", "")
    if key in SCHEME_ALIASES:
        return SCHEME_ALIASES[key]
    if compact in SCHEME_ALIASES:
        return SCHEME_ALIASES[compact]
    errors.append(f"unknown scheme {name!r} (expected one of {[s.value for s in Scheme]})")
    return None


def build_config(spec: dict, need_ks: bool = False) -> RunConfig:
    """Validate a decoded JSON object; raise :class:`ConfigError` listing all problems."""
    if not isinstance(spec, dict):
        raise ConfigError("config must be a JSON object")
    errors: list[str] = []
    unknown = sorted(set(spec) - _KNOWN_KEYS)
    if unknown:
        errors.append(f"unknown keys {unknown}")
    scheme = _scheme(spec.get("scheme"), errors)

    kernel = operator = None
    try:
        kernel = kernel_from_spec(spec.get("kernel"))
    except (KernelError, TypeError) as exc:
        errors.append(str(exc))
    try:
        operator = operator_from_spec(spec.get("operator"))
    except (OperatorError, TypeError) as exc:
        errors.append(str(exc))
    if scheme is not None and kernel is not None:
        errors.extend(validate_pairing(scheme, kernel))

    if "N" in spec and "n_steps" in spec:
        errors.append("give 'N' or 'n_steps', not both")
    n_key = "n_steps" if "n_steps" in spec else "N"
    ks: tuple = ()
    if need_ks or "ks" in spec:
        raw_ks = spec.get("ks")
        if not isinstance(raw_ks, list) or len(raw_ks) < 2:
            errors.append("'ks' must be a list of at least two step sizes")
        elif not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                     and math.isfinite(x) and x > 0 for x in raw_ks):
            errors.append("'ks' entries must be positive finite numbers")
        else:
            ks = tuple(float(x) for x in raw_ks)
    k = _number(spec, "k", errors, default=ks[0] if ks else None)
    c = _number(spec, "c", errors, default=0.5)
    n_default = None
    if ks and c:
        from .harness import default_horizon

        n_default = default_horizon(c)
    n_steps = _number(spec, n_key, errors, integer=True, default=n_default)
    if n_steps is not None and n_steps > MAX_STEPS:
        errors.append(f"'{n_key}' must be <= {MAX_STEPS}")
    s0 = _number(spec, "s0", errors, default=(c / 2.0) if c else 0.25)
    seed = spec.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        errors.append("'seed' must be a non-negative integer")
        seed = 0
    mode = spec.get("forcing_mode", "average")
    if mode not in ("average", "midpoint"):
        errors.append("'forcing_mode' must be 'average' or 'midpoint'")
    out = spec.get("out")
    if out is not None and not isinstance(out, str):
        errors.append("'out' must be a path string")
    literal = spec.get("literal_bdf2_start", False)
    if not isinstance(literal, bool):
        errors.append("'literal_bdf2_start' must be true or false")

    profile = None
    u0 = forcing = None
    if "manufactured" in spec:
        if "u0" in spec or "forcing" in spec:
            errors.append("'manufactured' sets u0 and forcing; do not give them too")
        try:
            profile = profile_from_spec(spec["manufactured"])
        except (ForcingError, TypeError, ValueError) as exc:
            errors.append(str(exc))
    if operator is not None and kernel is not None and profile is not None:
        from .harness import ManufacturedProblem

        prob = ManufacturedProblem(kernel, operator, profile)
        u0, forcing = prob.u0, prob.forcing
    elif operator is not None and profile is None:
        raw_u0 = spec.get("u0", [1.0] * operator.dim)
        try:
            u0 = np.array(raw_u0, dtype=float).reshape(-1)
            if u0.shape != (operator.dim,):
                errors.append(f"'u0' has {u0.size} entries, operator dimension is {operator.dim}")
            elif not np.all(np.isfinite(u0)):
                errors.append("'u0' must be finite")
        except (TypeError, ValueError):
            errors.append("'u0' must be a list of numbers")
        try:
            forcing = forcing_from_spec(spec.get("forcing"), operator.dim)
        except (ForcingError, TypeError, ValueError, AttributeError) as exc:
            errors.append(f"forcing: {exc}")

    if errors:
        raise ConfigError(errors)

    constraint_ok = c_alpha = None
    if scheme is Scheme.CN_PI and isinstance(kernel, Abel) and kernel.alpha < 1.0:
        c_alpha = estimate_c_alpha(kernel.alpha, s0, kind="gate")
        steps = ks if ks else (k,)
        constraint_ok = all(step_constraint(kernel.alpha, kk, s0, c_alpha)[0] for kk in steps)

    return RunConfig(
        scheme=scheme, kernel=kernel, operator=operator, k=k, n_steps=n_steps, c=c, s0=s0,
        u0=u0, forcing=forcing, manufactured=profile, forcing_mode=mode, seed=seed, out=out,
        ks=ks, literal_bdf2_start=literal, constraint_ok=constraint_ok, c_alpha=c_alpha, raw=spec,
    )


def _decode(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate one run config from JSON text."""
    return build_config(_decode(text))


def parse_suite(text: str) -> list[RunConfig]:
    """Parse a convergence suite: one entry or ``{"entries": [...], ...shared keys}``."""
    doc = _decode(text)
    if isinstance(doc, dict) and "entries" in doc:
        shared = {key: val for key, val in doc.items() if key != "entries"}
        entries = doc["entries"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("'entries' must be a non-empty list")
        configs, errors = [], []
        for i, entry in enumerate(entries):
            merged = dict(shared)
            if isinstance(entry, dict):
                merged.update(entry)
            try:
                configs.append(build_config(merged, need_ks=True))
            except ConfigError as exc:
                errors.extend(f"entry {i}: {msg}" for msg in exc.errors)
        if errors:
            raise ConfigError(errors)
        return configs
    return [build_config(doc, need_ks=True)]
