"""
Kernel specification formats
============================

Kernels are described by a kind plus its parameters, either on the command
line as `kind:param[,param]` or in a TOML / JSON file:

    kind = "tempered"
    alpha = 0.5
    rho = 1.0

Series kernels carry `mu` and `coeffs`. A file may instead hold named
tables [kappa], [k], [k1], [k2]. A top-level kernel with `gamma` describes
the triple (kernel, h_gamma, solved third kernel).
"""
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Union

from gfc_engine.config import config
from gfc_engine.errors import EngineError, KernelSpecError
from gfc_engine.kernels import (
    H0,
    H1,
    MLK,
    BesselK,
    BesselKappa,
    Kernel,
    KernelKind,
    KernelSeries,
    KernelTriple,
    MLKappa,
    PowerLaw,
    Series,
    Tempered,
    TemperedAssociated,
    sonin_pair,
    third_kernel,
)

logger = logging.getLogger("gfc_engine.kernel_specs")

# Parameter names per kind, in shorthand order
PARAMETERS: Dict[KernelKind, List[str]] = {
    KernelKind.POWERLAW: ["alpha"],
    KernelKind.TEMPERED: ["alpha", "rho"],
    KernelKind.TEMPERED_ASSOC: ["alpha", "rho"],
    KernelKind.BESSEL_KAPPA: ["alpha"],
    KernelKind.BESSEL_K: ["alpha"],
    KernelKind.ML_KAPPA: ["alpha", "beta"],
    KernelKind.ML_K: ["alpha", "beta"],
    KernelKind.H0: [],
    KernelKind.H1: [],
    KernelKind.SERIES: ["mu", "coeffs"],
}

_CONSTRUCTORS = {
    KernelKind.POWERLAW: PowerLaw,
    KernelKind.TEMPERED: Tempered,
    KernelKind.TEMPERED_ASSOC: TemperedAssociated,
    KernelKind.BESSEL_KAPPA: BesselKappa,
    KernelKind.BESSEL_K: BesselK,
    KernelKind.ML_KAPPA: MLKappa,
    KernelKind.ML_K: MLK,
    KernelKind.H0: H0,
    KernelKind.H1: H1,
}

ROLES = ("kappa", "k", "k1", "k2")
# Keys allowed next to a kernel's own parameters
_TRIPLE_KEYS = {"gamma", "truncation"}


def _kind(value: Any) -> KernelKind:
    try:
        return KernelKind(str(value).strip().lower())
    except ValueError:
        known = ", ".join(k.value for k in KernelKind)
        raise KernelSpecError(f"unknown kernel kind {value!r} (expected one of {known})") from None


def _float(name: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise KernelSpecError(f"parameter {name} must be a number, got {value!r}") from None


def kernel_from_dict(data: Dict[str, Any]) -> Kernel:
    """Build a kernel from {"kind": ..., <parameters>}"""
    if "kind" not in data:
        raise KernelSpecError("kernel spec needs a 'kind' field")
    kind = _kind(data["kind"])
    expected = PARAMETERS[kind]
    given = set(data) - {"kind"} - _TRIPLE_KEYS - set(ROLES)
    missing = [name for name in expected if name not in data]
    unknown = sorted(given - set(expected))
    if missing:
        raise KernelSpecError(f"{kind.value} kernel is missing {', '.join(missing)}")
    if unknown:
        raise KernelSpecError(f"{kind.value} kernel does not take {', '.join(unknown)}")

    try:
        if kind is KernelKind.SERIES:
            coeffs = data["coeffs"]
            if not isinstance(coeffs, (list, tuple)):
                raise KernelSpecError("series coeffs must be an array of numbers")
            coeffs = [_float("coeffs", c) for c in coeffs]
            return Series(KernelSeries(_float("mu", data["mu"]), coeffs))
        return _CONSTRUCTORS[kind](*(_float(name, data[name]) for name in expected))
    except KernelSpecError:
        raise
    except EngineError as exc:
        raise KernelSpecError(f"{kind.value}: {exc.message}") from exc


def parse_kernel_shorthand(text: str) -> Kernel:
    """
    Kernel from `kind:param[,param]`, e.g. `tempered:0.5,1` or `h1`.
    Series kernels list mu first: `series:0.5,1,0.25`.
    """
    kind_text, _, rest = text.partition(":")
    kind = _kind(kind_text)
    values = [v for v in (part.strip() for part in rest.split(",")) if v] if rest else []
    names = PARAMETERS[kind]
    if kind is KernelKind.SERIES:
        if len(values) < 2:
            raise KernelSpecError("series shorthand needs mu and at least one coefficient")
        return kernel_from_dict({"kind": kind.value, "mu": values[0], "coeffs": values[1:]})
    if len(values) != len(names):
        raise KernelSpecError(
            f"{kind.value} takes {len(names)} parameter(s) ({', '.join(names) or 'none'}), got {len(values)}"
        )
    return kernel_from_dict({"kind": kind.value, **dict(zip(names, values))})


def load_spec_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a TOML or JSON kernel spec file"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise KernelSpecError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise KernelSpecError(f"{path}: {exc}") from exc


def kernels_from_spec(data: Dict[str, Any]) -> Dict[str, Kernel]:
    """Named kernels of a spec document; a top-level kernel is 'kappa'"""
    kernels = {}
    if "kind" in data:
        kernels["kappa"] = kernel_from_dict(data)
    for role in ROLES:
        if role in data:
            if not isinstance(data[role], dict):
                raise KernelSpecError(f"[{role}] must be a table")
            kernels[role] = kernel_from_dict(data[role])
    if not kernels:
        raise KernelSpecError("spec defines no kernel")
    return kernels


def triple_from_spec(data: Dict[str, Any]) -> KernelTriple:
    """
    Triple from [kappa], [k1], [k2] tables, or from a top-level kernel with
    gamma: (kernel, h_gamma, third kernel solved from the series).
    """
    kernels = kernels_from_spec(data)
    if {"kappa", "k1", "k2"} <= kernels.keys():
        return KernelTriple(kernels["kappa"], kernels["k1"], kernels["k2"])
    if "kappa" not in kernels or ("gamma" not in data and "k1" not in kernels):
        raise KernelSpecError("a triple needs [kappa], [k1], [k2] or a kernel with gamma")
    kappa = kernels["kappa"]
    k1 = kernels.get("k1") or PowerLaw(_float("gamma", data["gamma"]))
    if "k2" in kernels:
        return KernelTriple(kappa, k1, kernels["k2"])
    if isinstance(kappa, PowerLaw) and isinstance(k1, PowerLaw):
        order = 1.0 - kappa.alpha - k1.alpha
        if order <= 0:
            raise KernelSpecError(f"alpha + gamma must be below 1, got {kappa.alpha + k1.alpha:g}")
        return KernelTriple(kappa, k1, PowerLaw(order))
    truncation = int(data.get("truncation", config.SERIES_TRUNCATION))
    try:
        return KernelTriple(kappa, k1, third_kernel(kappa, k1, truncation))
    except EngineError as exc:
        raise KernelSpecError(f"cannot solve the third kernel: {exc.message}") from exc


def pair_from_spec(data: Dict[str, Any]):
    """(kappa, k) from tables, or a kernel and its catalog partner"""
    kernels = kernels_from_spec(data)
    if "kappa" not in kernels:
        raise KernelSpecError("a pair needs kappa")
    if "k" in kernels:
        return kernels["kappa"], kernels["k"]
    truncation = int(data.get("truncation", config.SERIES_TRUNCATION))
    return sonin_pair(kernels["kappa"], truncation)


def write_kernel_spec(kernel: Kernel, path: Union[str, Path]) -> None:
    """Write a kernel as a JSON spec document"""
    Path(path).write_text(json.dumps(kernel.to_dict(), indent=2) + "\n")
    logger.info("wrote %s spec to %s", kernel.kind.value, path)
