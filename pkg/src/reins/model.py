"""Model parameters, claim measures and configuration I/O.

Everything here is an immutable dataclass.  A :class:`ModelBundle` is the unit
handed to every solver; :func:`validate` lists the standing-assumption
violations of a bundle without raising.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import ConfigError, InvalidBundleError, InvalidMeasureError

__all__ = [
    "MarketParams",
    "InsurerPrefs",
    "ReinsurerPrefs",
    "RayleighCompoundPoisson",
    "DiscreteAtoms",
    "ClaimMeasure",
    "SolverConventions",
    "ModelBundle",
    "ValidationReport",
    "validate",
    "require_valid",
    "premium_rate",
    "load_config",
    "bundle_from_dict",
    "bundle_to_dict",
    "with_value",
]


@dataclass(frozen=True)
class MarketParams:
    r: float = 0.05
    xi: float = 1.0
    kappa: float = 3.0
    delta: float = 0.09
    sigma: float = 0.5
    rho0: float = 0.5
    T: float = 10.0
    y0: float = 0.09

    @property
    def rho(self) -> float:
        """Loading of the independent Brownian motion in the variance SDE."""
        return math.sqrt(1.0 - self.rho0 * self.rho0)


@dataclass(frozen=True)
class InsurerPrefs:
    alpha: float = 0.8
    gamma: float = 0.5
    beta: float = 0.1
    beta0: float = 4.0
    betaY: float = 4.0
    theta: float = 0.2

    @property
    def alpha_hat(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True)
class ReinsurerPrefs:
    alphaR: float = 0.8
    gammaR: float = 0.5
    betaR: float = 0.1
    betaR0: float = 4.0
    betaRY: float = 4.0

    @property
    def alpha_hat(self) -> float:
        return 1.0 - self.alphaR


@dataclass(frozen=True)
class RayleighCompoundPoisson:
    """Compound Poisson claims with Rayleigh severities.

    ``nu(dz) = lambda0 * (2 z / lam**2) * exp(-z**2 / lam**2) dz``.
    """

    lambda0: float = 1.0
    lam: float = 1.0

    def total_mass(self) -> float:
        return self.lambda0

    def first_moment(self) -> float:
        return self.lambda0 * self.lam * math.sqrt(math.pi) / 2.0

    def second_moment(self) -> float:
        return self.lambda0 * self.lam**2

    def density(self, z):
        z = np.asarray(z, dtype=float)
        lam2 = self.lam * self.lam
        return self.lambda0 * (2.0 * z / lam2) * np.exp(-z * z / lam2)

    def tail_mass(self, z: float) -> float:
        """nu((z, inf)) for z >= 0."""
        return self.lambda0 * math.exp(-z * z / (self.lam * self.lam))


@dataclass(frozen=True)
class DiscreteAtoms:
    """Finite sum of point masses, ``nu = sum_i w_i delta_{z_i}``.

    Atom order is preserved; every sum over atoms runs in that order.
    """

    atoms: tuple[tuple[float, float], ...] = ((1.0, 1.0),)

    def __post_init__(self):
        object.__setattr__(
            self, "atoms", tuple((float(z), float(w)) for z, w in self.atoms)
        )

    @property
    def sizes(self) -> np.ndarray:
        return np.array([z for z, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    def total_mass(self) -> float:
        return _ordered_sum(w for _, w in self.atoms)

    def first_moment(self) -> float:
        return _ordered_sum(w * z for z, w in self.atoms)

    def second_moment(self) -> float:
        return _ordered_sum(w * z * z for z, w in self.atoms)


ClaimMeasure = Union[RayleighCompoundPoisson, DiscreteAtoms]


def _ordered_sum(values) -> float:
    total = 0.0
    for v in values:
        total += v
    return total


_SIGNS = ("negative", "positive")
_VARIANTS = ("theorem", "appendix")
_PI_FORMS = ("printed", "mirror")
_LEVELS = ("delta", "lambda")


@dataclass(frozen=True)
class SolverConventions:
    """Numerical tolerances plus the switches for sign/typo readings of the model.

    ``retention_discount_sign`` picks ``exp(-r(T-t))`` (``negative``) or
    ``exp(+r(T-t))`` for the retention cap.  ``riccati_variant`` picks the
    main-theorem or appendix-derivation form of the Riccati right-hand side.
    ``reinsurer_pi_form`` picks the reinsurer's investment numerator as printed
    (``betaRY * sigma * A_R``) or as the structural mirror of the insurer's
    (``betaR0 * rho0 * sigma * A_R``).  ``intercept_level`` picks the long-run
    level multiplying ``kappa * A(s)`` in the value intercept: the Heston
    ``delta`` or, strictly as printed, the Rayleigh scale ``lambda``.
    """

    ode_steps: int = 10_000
    root_abs_tol: float = 1e-12
    root_rel_tol: float = 1e-13
    quad_abs_tol: float = 1e-13
    quad_rel_tol: float = 1e-12
    tail_rel_tol: float = 1e-15
    retention_discount_sign: str = "negative"
    riccati_variant: str = "theorem"
    reinsurer_pi_form: str = "printed"
    intercept_level: str = "delta"

    @property
    def discount_sign(self) -> float:
        return -1.0 if self.retention_discount_sign == "negative" else 1.0


_NUMERIC_KEYS = (
    "ode_steps",
    "root_abs_tol",
    "root_rel_tol",
    "quad_abs_tol",
    "quad_rel_tol",
    "tail_rel_tol",
)
_CONVENTION_KEYS = (
    "retention_discount_sign",
    "riccati_variant",
    "reinsurer_pi_form",
    "intercept_level",
)


@dataclass(frozen=True)
class ModelBundle:
    market: MarketParams = field(default_factory=MarketParams)
    insurer: InsurerPrefs = field(default_factory=InsurerPrefs)
    reinsurer: ReinsurerPrefs = field(default_factory=ReinsurerPrefs)
    claims: ClaimMeasure = field(default_factory=RayleighCompoundPoisson)
    solver: SolverConventions = field(default_factory=SolverConventions)

    def fingerprint(self) -> str:
        """Stable digest of the full configuration."""
        text = json.dumps(bundle_to_dict(self), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ModelBundle":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"- {v}" for v in self.violations)


def _check_finite(prefix: str, obj, out: list[str]) -> None:
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, (int, float)) and not math.isfinite(v):
            out.append(f"{prefix}.{f.name} must be finite (got {v!r})")


def _validate_market(m: MarketParams, out: list[str]) -> None:
    _check_finite("market", m, out)
    if not m.r >= 0:
        out.append(f"market.r must be >= 0 (got {m.r!r})")
    if not m.kappa > 0:
        out.append(f"market.kappa must be > 0 (got {m.kappa!r})")
    if not m.delta > 0:
        out.append(f"market.delta must be > 0 (got {m.delta!r})")
    if not m.sigma >= 0:
        out.append(f"market.sigma must be >= 0 (got {m.sigma!r})")
    if not m.T > 0:
        out.append(f"market.T must be > 0 (got {m.T!r})")
    if not abs(m.rho0) <= 1:
        out.append(f"market.rho0 must lie in [-1, 1] (got {m.rho0!r})")
    if not m.y0 >= 0:
        out.append(f"market.y0 must be >= 0 (got {m.y0!r})")
    if not 2.0 * m.kappa * m.delta >= m.sigma * m.sigma:
        out.append(
            "Feller condition violated: 2*kappa*delta = "
            f"{2.0 * m.kappa * m.delta:.6g} < sigma^2 = {m.sigma * m.sigma:.6g}"
        )


def _validate_prefs(prefix: str, prefs, names: tuple[str, ...], out: list[str]) -> None:
    _check_finite(prefix, prefs, out)
    attitude = getattr(prefs, names[0])
    if not 0.5 <= attitude <= 1.0:
        out.append(f"{prefix}.{names[0]} must lie in [0.5, 1] (got {attitude!r})")
    for name in names[1:]:
        v = getattr(prefs, name)
        if not v > 0:
            out.append(f"{prefix}.{name} must be > 0 (got {v!r})")


def _validate_claims(bundle: ModelBundle, out: list[str]) -> None:
    claims = bundle.claims
    if isinstance(claims, RayleighCompoundPoisson):
        if not (math.isfinite(claims.lambda0) and claims.lambda0 > 0):
            out.append(f"claims.lambda0 must be > 0 (got {claims.lambda0!r})")
        if not (math.isfinite(claims.lam) and claims.lam > 0):
            out.append(f"claims.lambda must be > 0 (got {claims.lam!r})")
            return
        # Integrability with claim ambiguity: the reinsurer's first-order
        # condition integrates exp(c z^2) nu(dz) with c = betaR*gammaR*e^{2rT}/2
        # at its worst (t = 0); it must stay below 1/lambda^2.
        m, re = bundle.market, bundle.reinsurer
        c = 0.5 * re.betaR * re.gammaR * math.exp(2.0 * m.r * m.T)
        bound = 1.0 / claims.lam**2
        if math.isfinite(c) and not c < bound:
            out.append(
                "integrability (claim ambiguity): exp(c z^2) moment needs "
                f"c = {c:.6g} < 1/lambda^2 = {bound:.6g}"
            )
    elif isinstance(claims, DiscreteAtoms):
        if not claims.atoms:
            out.append("claims.atoms must be non-empty")
        for i, (z, w) in enumerate(claims.atoms):
            if not (math.isfinite(z) and z > 0):
                out.append(f"claims.atoms[{i}] size must be > 0 (got {z!r})")
            if not (math.isfinite(w) and w > 0):
                out.append(f"claims.atoms[{i}] weight must be > 0 (got {w!r})")
        if not (math.isfinite(claims.total_mass()) and math.isfinite(claims.second_moment())):
            out.append("integrability (no claim ambiguity): nu(0,inf) and int z^2 nu(dz) must be finite")
    else:
        out.append(f"claims: unsupported measure type {type(claims).__name__}")


def _validate_solver(s: SolverConventions, out: list[str]) -> None:
    if not (isinstance(s.ode_steps, int) and s.ode_steps >= 100):
        out.append(f"numerics.ode_steps must be an integer >= 100 (got {s.ode_steps!r})")
    for name in _NUMERIC_KEYS[1:]:
        v = getattr(s, name)
        if not (math.isfinite(v) and v > 0):
            out.append(f"numerics.{name} must be > 0 (got {v!r})")
    for name, allowed in zip(_CONVENTION_KEYS, (_SIGNS, _VARIANTS, _PI_FORMS, _LEVELS)):
        v = getattr(s, name)
        if v not in allowed:
            out.append(f"conventions.{name} must be one of {allowed} (got {v!r})")


def validate(bundle: ModelBundle) -> ValidationReport:
    """List every violated standing assumption of ``bundle`` (empty means valid)."""
    out: list[str] = []
    _validate_market(bundle.market, out)
    _validate_prefs(
        "insurer", bundle.insurer, ("alpha", "gamma", "beta", "beta0", "betaY", "theta"), out
    )
    _validate_prefs(
        "reinsurer", bundle.reinsurer, ("alphaR", "gammaR", "betaR", "betaR0", "betaRY"), out
    )
    _validate_claims(bundle, out)
    _validate_solver(bundle.solver, out)
    return ValidationReport(tuple(out))


def require_valid(bundle: ModelBundle) -> None:
    report = validate(bundle)
    if not report.ok:
        raise InvalidBundleError(report)


def premium_rate(theta: float, measure: ClaimMeasure) -> float:
    """Insurance premium per unit time under the expected value principle."""
    mean = measure.first_moment()
    if not math.isfinite(mean):
        raise InvalidMeasureError(f"claim measure has infinite first moment ({mean!r})")
    return (1.0 + theta) * mean


# ---------------------------------------------------------------------------
# configuration documents

_SECTIONS = {
    "market": MarketParams,
    "insurer": InsurerPrefs,
    "reinsurer": ReinsurerPrefs,
}


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    return float(value)


def _load_section(cls, data: Any, name: str):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", name)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError("unknown key", f"{name}.{key}")
        kwargs[key] = _number(value, f"{name}.{key}")
    return cls(**kwargs)


def _load_claims(data: Any) -> ClaimMeasure:
    if not isinstance(data, dict):
        raise ConfigError("expected an object", "claims")
    kind = data.get("type", "rayleigh")
    if kind == "rayleigh":
        allowed = {"type", "lambda0", "lambda"}
        for key in data:
            if key not in allowed:
                raise ConfigError("unknown key", f"claims.{key}")
        kwargs = {}
        if "lambda0" in data:
            kwargs["lambda0"] = _number(data["lambda0"], "claims.lambda0")
        if "lambda" in data:
            kwargs["lam"] = _number(data["lambda"], "claims.lambda")
        return RayleighCompoundPoisson(**kwargs)
    if kind == "discrete":
        for key in data:
            if key not in ("type", "atoms"):
                raise ConfigError("unknown key", f"claims.{key}")
        atoms = data.get("atoms")
        if not isinstance(atoms, list):
            raise ConfigError("expected a list of [size, weight] pairs", "claims.atoms")
        parsed = []
        for i, pair in enumerate(atoms):
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise ConfigError("expected a [size, weight] pair", f"claims.atoms[{i}]")
            parsed.append(
                (_number(pair[0], f"claims.atoms[{i}][0]"), _number(pair[1], f"claims.atoms[{i}][1]"))
            )
        return DiscreteAtoms(tuple(parsed))
    raise ConfigError(f"unknown claim measure type {kind!r}", "claims.type")


def _load_solver(numerics: Any, conventions: Any) -> SolverConventions:
    kwargs: dict[str, Any] = {}
    if not isinstance(numerics, dict):
        raise ConfigError("expected an object", "numerics")
    if not isinstance(conventions, dict):
        raise ConfigError("expected an object", "conventions")
    for key, value in numerics.items():
        path = f"numerics.{key}"
        if key not in _NUMERIC_KEYS:
            raise ConfigError("unknown key", path)
        if key == "ode_steps":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"expected an integer, got {value!r}", path)
            kwargs[key] = value
        else:
            kwargs[key] = _number(value, path)
    for key, value in conventions.items():
        path = f"conventions.{key}"
        if key not in _CONVENTION_KEYS:
            raise ConfigError("unknown key", path)
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        kwargs[key] = value
    return SolverConventions(**kwargs)


def bundle_from_dict(doc: Any) -> ModelBundle:
    """Build a bundle from a configuration document; missing keys take defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    allowed = set(_SECTIONS) | {"claims", "numerics", "conventions"}
    for key in doc:
        if key not in allowed:
            raise ConfigError("unknown key", key)
    parts = {name: _load_section(cls, doc.get(name, {}), name) for name, cls in _SECTIONS.items()}
    claims = _load_claims(doc.get("claims", {"type": "rayleigh"}))
    solver = _load_solver(doc.get("numerics", {}), doc.get("conventions", {}))
    return ModelBundle(claims=claims, solver=solver, **parts)


def bundle_to_dict(bundle: ModelBundle) -> dict[str, Any]:
    doc: dict[str, Any] = {
        name: dataclasses.asdict(getattr(bundle, name)) for name in _SECTIONS
    }
    claims = bundle.claims
    if isinstance(claims, RayleighCompoundPoisson):
        doc["claims"] = {"type": "rayleigh", "lambda0": claims.lambda0, "lambda": claims.lam}
    else:
        doc["claims"] = {"type": "discrete", "atoms": [list(a) for a in claims.atoms]}
    solver = dataclasses.asdict(bundle.solver)
    doc["numerics"] = {k: solver[k] for k in _NUMERIC_KEYS}
    doc["conventions"] = {k: solver[k] for k in _CONVENTION_KEYS}
    return doc


def load_config(path: str | Path) -> ModelBundle:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return bundle_from_dict(doc)


def with_value(bundle: ModelBundle, key_path: str, value: float) -> ModelBundle:
    """Return a copy of ``bundle`` with the numeric field at ``key_path`` replaced."""
    doc = bundle_to_dict(bundle)
    section, _, key = key_path.partition(".")
    if section not in doc or not key or "." in key:
        raise ConfigError("not a numeric configuration field", key_path)
    target = doc[section]
    if key not in target or isinstance(target[key], (str, list)):
        raise ConfigError("not a numeric configuration field", key_path)
    target[key] = int(value) if key == "ode_steps" else float(value)
    return bundle_from_dict(doc)
