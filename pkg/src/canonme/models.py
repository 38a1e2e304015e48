"""Model zoo and the JSON model/config format.

Qubit conventions: ``|0>`` is the ground state and ``|1>`` the excited
state, ``sigma_minus = |0><1|`` and ``sigma_z = diag(1, -1)``.

Config document (one JSON object)::

    {
      "kind": "dephasing",           # see KINDS
      "dim": 2,
      "parameters": {"gamma": "cos(t)"},
      "matrices": {"L": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]},
      "grid": {"t0": 0, "t1": "2*pi", "steps": 2001},
      "options": {"tol_neg": null, "cond_max": 1e8, "canon_time": 0}
    }

``steps`` is the number of grid points.  Matrix entries are ``[re, im]``
pairs.  Scalar parameters may be numbers or rate expressions in ``t``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .basis import sandwich
from .dynamics import (MapFamily, MemoryKernelSpec, generator_from_phi,
                       propagate_memory_kernel)
from .errors import ValidationError
from .expr import RateExpr
from .generator import (GeneratorTerms, LindbladTerms, transfer_from_lindblad,
                        transfer_from_terms)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
I2 = np.eye(2, dtype=complex)

KINDS = ("lindblad_terms", "generator_terms", "two_rate_qubit", "dephasing",
         "jc_amplitude_damping", "memory_kernel_dephasing", "map_family_file")
KIND_ALIASES = {"paper_example": "two_rate_qubit"}


# --- zoo: generators -------------------------------------------------------

def dephasing_generator(gamma: float) -> np.ndarray:
    """rho_dot = gamma/2 (sz rho sz - rho)."""
    return 0.5 * gamma * (sandwich(SIGMA_Z, SIGMA_Z) - np.eye(4))


def two_rate_qubit_generator(gamma: float, gamma_tilde: float) -> np.ndarray:
    """The non-canonical two-parameter qubit generator, written term by term.

    (2g + gt)[2 sx rho sx + 2 sy rho sy - 4 rho]
      - g[2 s- rho s+ - s+ s- rho - rho s+ s-]
      - g[2 s+ rho s- - s- s+ rho - rho s- s+]
    """
    sm, spl = SIGMA_MINUS, SIGMA_PLUS
    eye = np.eye(4)
    xy = 2 * sandwich(SIGMA_X, SIGMA_X) + 2 * sandwich(SIGMA_Y, SIGMA_Y) - 4 * eye
    down = 2 * sandwich(sm, spl) - sandwich(spl @ sm, I2) - sandwich(I2, spl @ sm)
    up = 2 * sandwich(spl, sm) - sandwich(sm @ spl, I2) - sandwich(I2, sm @ spl)
    return (2 * gamma + gamma_tilde) * xy - gamma * down - gamma * up


def two_rate_qubit_canonical_rate(gamma: float, gamma_tilde: float) -> float:
    """Common rate of the two canonical channels sx/sqrt2, sy/sqrt2.

    Frozen from a symbolic expansion (see tests/test_two_rate_qubit.py).
    """
    return 6.0 * gamma + 4.0 * gamma_tilde


# --- zoo: maps ------------------------------------------------------------

def dephasing_map(Gamma: float) -> np.ndarray:
    """Coherences scaled by exp(-Gamma)."""
    e = math.exp(-Gamma)
    return np.diag([1.0, e, e, 1.0]).astype(complex)


def _sinhc(x):
    return cmath.sinh(x) / x if abs(x) > 1e-8 else 1 + x * x / 6


def jc_G(t: float, lam: float, gamma0: float) -> float:
    """Amplitude factor of the resonant damped Jaynes-Cummings model."""
    delta = cmath.sqrt(lam * lam - 2 * gamma0 * lam)
    x = delta * t / 2
    val = math.exp(-lam * t / 2) * (cmath.cosh(x) + lam * t / 2 * _sinhc(x))
    return val.real


def jc_G_dot(t: float, lam: float, gamma0: float) -> float:
    delta = cmath.sqrt(lam * lam - 2 * gamma0 * lam)
    x = delta * t / 2
    # d/dt G = -(gamma0 lam / delta) e^{-lam t/2} sinh(delta t / 2)
    val = -gamma0 * lam * t / 2 * math.exp(-lam * t / 2) * _sinhc(x)
    return val.real


def amplitude_damping_map(G: float) -> np.ndarray:
    p = abs(G) ** 2
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0
    m[0, 3] = 1.0 - p
    m[1, 1] = G
    m[2, 2] = np.conj(G)
    m[3, 3] = p
    return m


def amplitude_damping_map_dot(G: float, Gdot: float) -> np.ndarray:
    pdot = 2 * (np.conj(G) * Gdot).real
    m = np.zeros((4, 4), dtype=complex)
    m[0, 3] = -pdot
    m[1, 1] = Gdot
    m[2, 2] = np.conj(Gdot)
    m[3, 3] = pdot
    return m


def jc_family(grid, lam: float, gamma0: float) -> MapFamily:
    grid = np.asarray(grid, dtype=float)
    return MapFamily(grid, np.array([amplitude_damping_map(jc_G(t, lam, gamma0)) for t in grid]))


def jc_provider(lam: float, gamma0: float, cond_max: float | None = None):
    """Generator of the JC map family from the closed-form derivative."""
    def provider(t):
        G = jc_G(t, lam, gamma0)
        Gd = jc_G_dot(t, lam, gamma0)
        return generator_from_phi(amplitude_damping_map(G), amplitude_damping_map_dot(G, Gd),
                                  t, cond_max)
    return provider


def dephasing_kernel(k: float, lam: float, H=None) -> MemoryKernelSpec:
    """K(s, t) = k exp(-lam (t - s)) (sz . sz - id)."""
    D = sandwich(SIGMA_Z, SIGMA_Z) - np.eye(4)

    def kernel(s, t):
        w = k * np.exp(-lam * (t - np.asarray(s)))
        return w[:, None, None] * D

    return MemoryKernelSpec(np.zeros((2, 2)) if H is None else np.asarray(H, complex), kernel)


def dephasing_kernel_coherence(t, k: float, lam: float):
    """Coherence of the exponential dephasing kernel from c' = -2k u, u' = c - lam u."""
    r1, r2 = np.roots([1.0, lam, 2.0 * k]).astype(complex)
    t = np.asarray(t, dtype=float)
    if abs(r1 - r2) < 1e-12 * max(1.0, abs(r1)):
        return ((1 - r1 * t) * np.exp(r1 * t)).real
    a = -r2 / (r1 - r2)
    b = r1 / (r1 - r2)
    return (a * np.exp(r1 * t) + b * np.exp(r2 * t)).real


# --- config ---------------------------------------------------------------

def parse_matrix(data, dim: int | None = None, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: entries must be [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name}: expected a square array of [re, im] pairs, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValidationError(f"{name}: dimension {arr.shape[0]} does not match declared dim {dim}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_json(m) -> list:
    m = np.asarray(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


@dataclass(frozen=True)
class Grid:
    t0: float
    t1: float
    steps: int

    def points(self) -> np.ndarray:
        if self.steps < 2:
            raise ValidationError("grid needs at least 2 points")
        if not self.t1 > self.t0:
            raise ValidationError("grid needs t1 > t0")
        return np.linspace(self.t0, self.t1, self.steps)


def _scalar(value, name):
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be a number or expression")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return RateExpr(value)(0.0)
    raise ValidationError(f"{name} must be a number or expression")


def parse_grid(data) -> Grid:
    if not isinstance(data, dict):
        raise ValidationError("grid must be an object with t0, t1, steps")
    try:
        steps = data["steps"]
        t0 = _scalar(data.get("t0", 0.0), "grid.t0")
        t1 = _scalar(data["t1"], "grid.t1")
    except KeyError as exc:
        raise ValidationError(f"grid is missing {exc.args[0]!r}") from None
    if isinstance(steps, bool) or not isinstance(steps, int):
        raise ValidationError("grid.steps must be an integer")
    return Grid(t0, t1, steps)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    kind: str
    dim: int
    parameters: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    grid: Optional[Grid] = None
    body: dict = field(default_factory=dict)  # the raw document, for kind-specific entries
    options: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "ModelSpec":
        if not isinstance(doc, dict):
            raise ValidationError("config must be a JSON object")
        kind = doc.get("kind")
        kind = KIND_ALIASES.get(kind, kind) if isinstance(kind, str) else kind
        if kind not in KINDS:
            raise ValidationError(f"unknown model kind {kind!r}; expected one of {', '.join(KINDS)}")
        dim = doc.get("dim", 2)
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
            raise ValidationError(f"dim must be an integer >= 2, got {dim!r}")
        params = doc.get("parameters", {})
        if not isinstance(params, dict):
            raise ValidationError("parameters must be an object")
        params = {k: RateExpr(v) if isinstance(v, str) else RateExpr(_scalar(v, k))
                  for k, v in params.items()}
        mats = doc.get("matrices", {})
        if not isinstance(mats, dict):
            raise ValidationError("matrices must be an object")
        mats = {k: parse_matrix(v, dim, f"matrices.{k}") for k, v in mats.items()}
        grid = parse_grid(doc["grid"]) if "grid" in doc else None
        options = doc.get("options", {})
        if not isinstance(options, dict):
            raise ValidationError("options must be an object")
        return cls(kind, dim, params, mats, grid, doc, options, Path(base_dir))

    @classmethod
    def load(cls, path) -> "ModelSpec":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(doc, path.parent)

    def param(self, name, default=None) -> RateExpr:
        if name in self.parameters:
            return self.parameters[name]
        if default is not None:
            return RateExpr(default)
        raise ValidationError(f"{self.kind}: missing parameter {name!r}")

    def matrix(self, ref, name) -> np.ndarray:
        if isinstance(ref, str):
            if ref not in self.matrices:
                raise ValidationError(f"{name}: unknown matrix {ref!r}")
            return self.matrices[ref]
        return parse_matrix(ref, self.dim, name)


@dataclass(frozen=True, eq=False)
class Model:
    dim: int
    provider: Optional[Callable[[float], np.ndarray]] = None
    family: Optional[MapFamily] = None
    kernel: Optional[MemoryKernelSpec] = None


def _require_qubit(spec):
    if spec.dim != 2:
        raise ValidationError(f"{spec.kind} is a qubit model; dim must be 2, got {spec.dim}")


def _entries(spec, key):
    items = spec.body.get(key, [])
    if not isinstance(items, list):
        raise ValidationError(f"{key} must be a list")
    for n, item in enumerate(items):
        if not isinstance(item, dict):
            raise ValidationError(f"{key}[{n}] must be an object")
    return items


def _lindblad_provider(spec):
    d = spec.dim
    ham = []
    h = spec.body.get("hamiltonian")
    if h is not None:
        if isinstance(h, list) and h and isinstance(h[0], dict):
            for n, item in enumerate(h):
                ham.append((RateExpr(item.get("coeff", 1.0)),
                            spec.matrix(item.get("operator"), f"hamiltonian[{n}].operator")))
        else:
            ham.append((RateExpr(1.0), spec.matrix(h, "hamiltonian")))
    chans = []
    for n, item in enumerate(_entries(spec, "channels")):
        if "rate" not in item or "operator" not in item:
            raise ValidationError(f"channels[{n}] needs 'rate' and 'operator'")
        chans.append((RateExpr(item["rate"]), spec.matrix(item["operator"], f"channels[{n}].operator")))
    legacy = bool(spec.body.get("legacy_halved_rates", False))

    def provider(t):
        H = np.zeros((d, d), dtype=complex)
        for coeff, op in ham:
            H = H + coeff(t) * op
        return transfer_from_lindblad(LindbladTerms(H, [(r(t), L) for r, L in chans], t, legacy))
    return provider


def _terms_provider(spec):
    terms = []
    for n, item in enumerate(_entries(spec, "terms")):
        if "A" not in item or "B" not in item:
            raise ValidationError(f"terms[{n}] needs 'A' and 'B'")
        terms.append((RateExpr(item.get("coeff", 1.0)),
                      spec.matrix(item["A"], f"terms[{n}].A"),
                      spec.matrix(item["B"], f"terms[{n}].B")))
    if not terms:
        raise ValidationError("generator_terms needs at least one term")

    def provider(t):
        return transfer_from_terms(GeneratorTerms([(c(t) * A, B) for c, A, B in terms], t))
    return provider


def load_map_family(path, dim: int | None = None) -> MapFamily:
    """Read ``{"dim": d, "times": [...], "maps": [N x N of [re, im]]}``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read map family {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from None
    fdim = doc.get("dim") if isinstance(doc, dict) else None
    if isinstance(fdim, bool) or not isinstance(fdim, int) or fdim < 2:
        raise ValidationError(f"map family needs an integer dim >= 2, got {fdim!r}")
    if dim is not None and fdim != dim:
        raise ValidationError(f"map family dim {fdim!r} does not match declared dim {dim}")
    maps = [parse_matrix(m, fdim * fdim, f"maps[{n}]") for n, m in enumerate(doc.get("maps", []))]
    fam = MapFamily(np.asarray(doc.get("times", []), dtype=float), np.array(maps))
    fam.validate()
    return fam


def save_map_family(path, family: MapFamily) -> None:
    doc = {"dim": family.dim, "times": [float(t) for t in family.grid],
           "maps": [matrix_to_json(m) for m in family.maps]}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def build_model(spec: ModelSpec, grid=None, cond_max: float | None = None) -> Model:
    """Turn a :class:`ModelSpec` into a generator provider and/or map family.

    ``grid`` (array of times) is needed by map-based kinds; it defaults to
    the config grid.
    """
    if grid is None and spec.grid is not None:
        grid = spec.grid.points()
    kind = spec.kind
    if kind == "dephasing":
        _require_qubit(spec)
        gamma = spec.param("gamma")
        return Model(2, provider=lambda t: dephasing_generator(gamma(t)))
    if kind == "two_rate_qubit":
        _require_qubit(spec)
        g, gt = spec.param("gamma"), spec.param("gamma_tilde")
        return Model(2, provider=lambda t: two_rate_qubit_generator(g(t), gt(t)))
    if kind == "lindblad_terms":
        return Model(spec.dim, provider=_lindblad_provider(spec))
    if kind == "generator_terms":
        return Model(spec.dim, provider=_terms_provider(spec))
    if kind == "jc_amplitude_damping":
        _require_qubit(spec)
        lam, g0 = spec.param("lambda")(0.0), spec.param("gamma0")(0.0)
        if lam <= 0:
            raise ValidationError("lambda must be positive")
        fam = jc_family(grid, lam, g0) if grid is not None else None
        return Model(2, provider=jc_provider(lam, g0, cond_max), family=fam)
    if kind == "memory_kernel_dephasing":
        _require_qubit(spec)
        k, lam = spec.param("k")(0.0), spec.param("lambda")(0.0)
        kern = dephasing_kernel(k, lam)
        if grid is None:
            raise ValidationError("memory_kernel_dephasing needs a grid")
        fam = propagate_memory_kernel(kern, grid)
        return Model(2, provider=fam.provider(cond_max), family=fam, kernel=kern)
    if kind == "map_family_file":
        if "path" not in spec.body:
            raise ValidationError("map_family_file needs 'path'")
        fam = load_map_family(spec.base_dir / spec.body["path"], spec.dim)
        return Model(spec.dim, provider=fam.provider(cond_max), family=fam)
    raise ValidationError(f"unknown model kind {kind!r}")
